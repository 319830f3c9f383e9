use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use stormtopics::config::RunConfig;
use stormtopics::corpus::{self, Corpus, IngestOptions, TokenizerRules};
use stormtopics::lda::{self, Checkpoint, DocLength, Hyperparams, Schedule, Trainer};
use stormtopics::report::{self, ReportOptions};
use stormtopics::selection::{self, SweepConfig};
use stormtopics::{Error, Result};

/// Share of tokens from the 50 most frequent words in the original
/// AF ≥ 100 crisis corpus, printed next to ours for comparison.
const REFERENCE_TOP50_SHARE: f64 = 0.30;

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Creates the output directory, records the run settings and sets up threads.
pub fn prepare(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    write(&cfg.out.join("resolved_config.json"), &cfg.to_json())?;
    let versions = json!({
        "stormtopics": env!("CARGO_PKG_VERSION"),
        "corpus_archive": corpus::ArchiveMeta::FORMAT,
        "checkpoint": "STCKPT01",
        "rng": "chacha8, child seed = sha256(parent_le || label)[..8]",
    });
    write(&cfg.out.join("versions.json"), &(serde_json::to_string_pretty(&versions).expect("json") + "\n"))?;
    if cfg.threads > 0 {
        // Only fails if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    }
    Ok(())
}

fn required<'a, T>(value: &'a Option<T>, name: &str) -> Result<&'a T> {
    value.as_ref().ok_or_else(|| Error::argument(format!("--{} is required", name.replace('_', "-"))))
}

fn print_summary(value: serde_json::Value) {
    println!("{}", serde_json::to_string(&value).expect("json"));
}

fn top50(corpus: &Corpus) -> Result<serde_json::Value> {
    Ok(json!({
        "n": 50,
        "share": corpus::top_word_share(corpus, 50)?,
        "reference": REFERENCE_TOP50_SHARE,
    }))
}

pub fn ingest(cfg: &RunConfig) -> Result<()> {
    let input = required(&cfg.input, "input")?;
    let rules = match &cfg.stopwords {
        Some(path) => TokenizerRules::from_stopword_file(path)?,
        None => TokenizerRules::default(),
    }
    .with_min_len(cfg.min_token_len);
    let opts = IngestOptions {
        rules,
        epoch: cfg.epoch,
        lang: Some(cfg.lang.clone()).filter(|l| !l.is_empty()),
    };
    let (mut corpus, report) = corpus::ingest_path(input, &opts)?;
    log::info!("ingested {} messages ({} malformed, {} empty)", report.accepted, report.skipped, report.empty);

    let mut stages = Vec::new();
    if cfg.date_from.is_some() || cfg.date_to.is_some() {
        corpus = corpus::filter_date_window(&corpus, cfg.date_from, cfg.date_to)?;
        stages.push(json!({"filter": "date_window", "documents": corpus.num_docs()}));
    }
    if let Some(keyword) = &cfg.keyword {
        corpus = corpus::keyword_filter(&corpus, keyword)?;
        stages.push(json!({"filter": "keyword", "documents": corpus.num_docs()}));
    }
    if let Some(min) = cfg.min_user_messages {
        corpus = corpus::filter_users_by_activity(&corpus, min)?;
        stages.push(json!({"filter": "user_activity", "documents": corpus.num_docs()}));
    }
    match cfg.aggregate.as_str() {
        "message" => {}
        "user-day" => corpus = corpus.aggregate_user_day(),
        other => return Err(Error::argument(format!("unknown aggregate mode {other:?}"))),
    }
    let (corpus, pruned_empty) = corpus.prune(cfg.min_count);
    if corpus.is_empty() {
        return Err(Error::Empty(format!("no document survives min_count={}", cfg.min_count)));
    }
    corpus::write_archive(&corpus, &cfg.out)?;
    let summary = json!({
        "ingest": report,
        "filters": stages,
        "pruned_empty": pruned_empty,
        "documents": corpus.num_docs(),
        "tokens": corpus.num_tokens(),
        "vocabulary": corpus.vocab().len(),
        "top_word_share": top50(&corpus)?,
    });
    write(&cfg.out.join("ingest_report.json"), &(serde_json::to_string_pretty(&summary).expect("json") + "\n"))?;
    print_summary(summary);
    Ok(())
}

fn hyper_for(cfg: &RunConfig, k: usize) -> Result<Hyperparams> {
    if k == 0 {
        return Err(Error::argument("K must be at least 1"));
    }
    Hyperparams::new(k, cfg.alpha.unwrap_or(50.0 / k as f64), cfg.beta)
}

fn schedule(cfg: &RunConfig) -> Schedule {
    Schedule { burn_in: cfg.burn_in, sample_count: cfg.samples, sample_lag: cfg.lag }
}

fn eval_schedule(cfg: &RunConfig) -> Schedule {
    Schedule { burn_in: cfg.eval_burn_in, sample_count: cfg.eval_samples, sample_lag: cfg.eval_lag }
}

pub fn train(cfg: &RunConfig) -> Result<()> {
    let hyper = hyper_for(cfg, cfg.k)?;
    let schedule = schedule(cfg);
    schedule.validate()?;
    let corpus = corpus::load_archive(required(&cfg.corpus, "corpus")?)?;
    let checkpoint_path = cfg.checkpoint.clone().unwrap_or_else(|| cfg.out.join("checkpoint.bin"));

    let mut trainer = match &cfg.resume {
        Some(path) => {
            let ckpt = Checkpoint::load(path)?;
            if ckpt.hyper != hyper || ckpt.schedule != schedule || ckpt.seed != cfg.seed {
                return Err(Error::argument("checkpoint was written with different K/alpha/beta/schedule/seed"));
            }
            log::info!("resuming at sweep {}", ckpt.sweeps);
            Trainer::resume(&corpus, ckpt)?
        }
        None => Trainer::new(&corpus, hyper, schedule, cfg.seed)?,
    };
    let limit = cfg.halt_after.unwrap_or(u64::MAX);
    while !trainer.is_done() && trainer.sweeps_done() < limit {
        let next = match cfg.checkpoint_every {
            0 => limit,
            every => ((trainer.sweeps_done() / every) + 1) * every,
        };
        trainer.run_until(next.min(limit))?;
        if cfg.checkpoint_every > 0 && !trainer.is_done() {
            trainer.checkpoint().save(&checkpoint_path)?;
        }
    }
    if !trainer.is_done() {
        trainer.checkpoint().save(&checkpoint_path)?;
        log::info!("halted after {} sweeps; checkpoint at {}", trainer.sweeps_done(), checkpoint_path.display());
        print_summary(json!({"halted_at": trainer.sweeps_done(), "checkpoint": checkpoint_path}));
        return Ok(());
    }
    if cfg.checkpoint.is_some() || cfg.checkpoint_every > 0 {
        trainer.checkpoint().save(&checkpoint_path)?;
    }
    let (model, state, trace) = trainer.finish()?;
    let files = lda::write_model_dir(&model, cfg.seed, &schedule, &trace, &cfg.out)?;
    print_summary(json!({
        "K": hyper.k,
        "alpha": hyper.alpha,
        "beta": hyper.beta,
        "sweeps": state.sweep_count(),
        "final_joint_log_prob": trace.points.last().map(|p| p.1),
        "files": files,
    }));
    Ok(())
}

pub fn sweep(cfg: &RunConfig) -> Result<()> {
    let corpus = corpus::load_archive(required(&cfg.corpus, "corpus")?)?;
    let sweep_cfg = SweepConfig {
        k_list: cfg.k_list.0.clone(),
        alpha: cfg.alpha,
        beta: cfg.beta,
        schedule: schedule(cfg),
        eval_schedule: eval_schedule(cfg),
        plateau_epsilon: cfg.plateau_epsilon,
        heldout_ratio: cfg.heldout_ratio,
        seed: cfg.seed,
        record_timing: cfg.record_timing,
    };
    let curve = selection::k_sweep(&corpus, &sweep_cfg)?;
    let path = cfg.out.join("curve.csv");
    write(&path, &curve.to_csv())?;
    let failed: Vec<usize> = curve.points.iter().filter(|p| p.perplexity.is_none()).map(|p| p.k).collect();
    if !failed.is_empty() {
        log::warn!("fits failed for K in {failed:?}; see log above");
    }
    print_summary(json!({
        "chosen_k": curve.chosen_k,
        "failed": failed,
        "unseen_test_tokens": curve.unseen_tokens,
        "points": curve.points.iter().map(|p| json!({"k": p.k, "perplexity": p.perplexity})).collect::<Vec<_>>(),
        "curve": path,
    }));
    Ok(())
}

pub fn report(cfg: &RunConfig) -> Result<()> {
    let model_dir = required(&cfg.model, "model")?;
    let corpus = corpus::load_archive(required(&cfg.corpus, "corpus")?)?;
    let (model, _) = lda::load_model_dir(model_dir)?;
    let opts = ReportOptions {
        n_words: cfg.n_words,
        wordcloud_words: cfg.wordcloud_words,
        heatmap_words: cfg.heatmap_words,
        phases: report::parse_phases(&cfg.phases)?,
    };
    let files = report::export_reports(&model, &corpus, &cfg.out, &opts)?;
    print_summary(json!({"files": files, "top_word_share": top50(&corpus)?}));
    Ok(())
}

fn matrix_csv(header: &[String], values: &[f64]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in values.chunks(header.len()) {
        let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn simulate(cfg: &RunConfig) -> Result<()> {
    let hyper = Hyperparams::new(cfg.sim_topics, cfg.sim_alpha, cfg.sim_beta)?;
    let truth = lda::generate_corpus(&hyper, cfg.sim_words, cfg.sim_docs, DocLength::Poisson(cfg.sim_doc_len), cfg.seed)?;
    let mut files: Vec<PathBuf> = corpus::write_archive(&truth.corpus, &cfg.out)?;
    let words = truth.corpus.vocab().words();
    let topics: Vec<String> = (0..hyper.k).map(|k| format!("topic_{k}")).collect();
    for (name, contents) in [
        ("phi_true.csv", matrix_csv(words, &truth.phi)),
        ("theta_true.csv", matrix_csv(&topics, &truth.theta)),
    ] {
        let path = cfg.out.join(name);
        write(&path, &contents)?;
        files.push(path);
    }
    print_summary(json!({
        "documents": truth.corpus.num_docs(),
        "tokens": truth.corpus.num_tokens(),
        "files": files,
    }));
    Ok(())
}
