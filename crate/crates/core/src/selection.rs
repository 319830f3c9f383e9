//! Held-out evaluation and choice of the topic count.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::corpus::{Corpus, Document, Vocabulary};
use crate::error::{Error, Result};
use crate::lda::{train, Hyperparams, Schedule, TopicModel};
use crate::rng;

/// Document-level train/test partition. Test documents are expressed in
/// the training vocabulary; words never seen in training are dropped.
#[derive(Debug, Clone)]
pub struct HeldoutSplit {
    pub train: Corpus,
    pub test: Corpus,
    pub ratio: f64,
    pub seed: u64,
    /// Input indices of the held-out documents, ascending.
    pub test_indices: Vec<usize>,
    /// Test tokens whose word does not occur in training.
    pub unseen_tokens: u64,
    /// Held-out documents left with no tokens after dropping unseen words.
    pub emptied_docs: usize,
}

/// Indices chosen for testing: the first `round(M·ratio)` positions of a
/// seeded Fisher–Yates shuffle of `0..M`, returned in ascending order.
pub fn heldout_indices(m: usize, ratio: f64, seed: u64) -> Result<Vec<usize>> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::argument(format!("held-out ratio must be in (0, 1), got {ratio}")));
    }
    if m < 2 {
        return Err(Error::argument("need at least two documents to split"));
    }
    let n_test = (m as f64 * ratio).round() as usize;
    if n_test == 0 || n_test == m {
        return Err(Error::argument(format!("ratio {ratio} leaves one side of a {m}-document split empty")));
    }
    let mut order: Vec<usize> = (0..m).collect();
    rng::shuffle(&mut rng::stream(rng::derive_seed(seed, "split")), &mut order);
    let mut test = order[..n_test].to_vec();
    test.sort_unstable();
    Ok(test)
}

pub fn split_heldout(corpus: &Corpus, ratio: f64, seed: u64) -> Result<HeldoutSplit> {
    let test_indices = heldout_indices(corpus.num_docs(), ratio, seed)?;
    let mut is_test = vec![false; corpus.num_docs()];
    for &i in &test_indices {
        is_test[i] = true;
    }
    let (train, _) = corpus.retain(1, |i, _| !is_test[i]);
    let (held, _) = corpus.retain(1, |i, _| is_test[i]);
    let (projected, unseen_tokens) = train.project(&held);
    let mut counts = vec![0u64; train.vocab().len()];
    let docs: Vec<Document> = projected.into_iter().filter(|d| !d.tokens.is_empty()).collect();
    for d in &docs {
        for &t in &d.tokens {
            counts[t as usize] += 1;
        }
    }
    let emptied_docs = test_indices.len() - docs.len();
    if docs.is_empty() {
        return Err(Error::Empty("no held-out document shares a word with the training set".into()));
    }
    let vocab = Vocabulary::from_counts(train.vocab().words().iter().cloned().zip(counts))?;
    let test = Corpus::new(docs, vocab, corpus.epoch())?;
    Ok(HeldoutSplit { train, test, ratio, seed, test_indices, unseen_tokens, emptied_docs })
}

/// Fold-in estimate of `log p(doc | φ)`.
///
/// Topic assignments of the document's tokens are Gibbs-sampled with the
/// topic-word distributions held fixed; the document's topic proportions
/// are averaged over the retained samples and each token is scored under
/// the resulting mixture. Returns `None` for an empty document.
///
/// Tokens are visited in sorted order, so the result depends only on the
/// document's word counts.
pub fn heldout_doc_loglik(model: &TopicModel, tokens: &[u32], alpha: f64, schedule: &Schedule, seed: u64) -> Result<Option<f64>> {
    if tokens.is_empty() {
        return Ok(None);
    }
    let mut sorted = tokens.to_vec();
    sorted.sort_unstable();
    let tokens = &sorted[..];
    schedule.validate()?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::argument(format!("alpha must be positive, got {alpha}")));
    }
    let k_topics = model.num_topics();
    let w = model.num_words();
    if let Some(&bad) = tokens.iter().find(|&&t| t as usize >= w) {
        return Err(Error::argument(format!("word id {bad} outside the model vocabulary of {w}")));
    }
    let phi = model.phi();
    let score = |theta: &[f64]| -> Result<f64> {
        let ll: f64 = tokens
            .iter()
            .map(|&t| (0..k_topics).map(|k| phi[k * w + t as usize] * theta[k]).sum::<f64>().ln())
            .sum();
        if ll.is_finite() {
            Ok(ll)
        } else {
            Err(Error::Numerical(format!("held-out log-likelihood is {ll}")))
        }
    };
    if k_topics == 1 {
        return score(&[1.0]).map(Some);
    }

    let mut r = rng::stream(seed);
    let mut z: Vec<usize> = tokens.iter().map(|_| rng::bounded_index(&mut r, k_topics)).collect();
    let mut n_k = vec![0u32; k_topics];
    for &k in &z {
        n_k[k] += 1;
    }
    let norm = tokens.len() as f64 + k_topics as f64 * alpha;
    let mut theta_sum = vec![0.0; k_topics];
    let mut taken = 0u64;
    let mut take = |n_k: &[u32], taken: &mut u64, sweeps: u64| {
        while *taken < schedule.samples_due(sweeps) {
            for (acc, &c) in theta_sum.iter_mut().zip(n_k) {
                *acc += (c as f64 + alpha) / norm;
            }
            *taken += 1;
        }
    };
    take(&n_k, &mut taken, 0);
    let mut cumulative = vec![0.0; k_topics];
    for sweep in 1..=schedule.total_sweeps() {
        for (i, &t) in tokens.iter().enumerate() {
            n_k[z[i]] -= 1;
            let mut acc = 0.0;
            for k in 0..k_topics {
                acc += phi[k * w + t as usize] * (n_k[k] as f64 + alpha);
                cumulative[k] = acc;
            }
            let u = rng::unit_f64(&mut r) * acc;
            let k_new = cumulative.iter().position(|&c| u < c).unwrap_or(k_topics - 1);
            z[i] = k_new;
            n_k[k_new] += 1;
        }
        take(&n_k, &mut taken, sweep);
    }
    let theta: Vec<f64> = theta_sum.iter().map(|v| v / taken as f64).collect();
    score(&theta).map(Some)
}

/// Seed for one held-out document, a function of its word multiset so that
/// reordering documents or tokens cannot change the estimate.
fn doc_seed(seed: u64, tokens: &[u32]) -> u64 {
    let mut sorted = tokens.to_vec();
    sorted.sort_unstable();
    let label: Vec<String> = sorted.iter().map(u32::to_string).collect();
    rng::derive_seed(seed, &format!("heldout/{}", label.join(",")))
}

/// `exp(−Σ log p(doc) / Σ N_doc)` over the non-empty test documents.
pub fn perplexity(model: &TopicModel, test: &Corpus, alpha: f64, schedule: &Schedule, seed: u64) -> Result<f64> {
    if !model.matches_vocab(test) {
        return Err(Error::argument("test corpus is not expressed in the model's vocabulary"));
    }
    let mut per_doc: Vec<(f64, u64)> = test
        .docs()
        .par_iter()
        .map(|doc| {
            let ll = heldout_doc_loglik(model, &doc.tokens, alpha, schedule, doc_seed(seed, &doc.tokens))?;
            Ok(ll.map(|v| (v, doc.tokens.len() as u64)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    // Summing in a fixed order keeps the result independent of document order.
    per_doc.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let ll: f64 = per_doc.iter().map(|p| p.0).sum();
    let n: u64 = per_doc.iter().map(|p| p.1).sum();
    if n == 0 {
        return Err(Error::Empty("every held-out document was skipped".into()));
    }
    let p = (-ll / n as f64).exp();
    if !p.is_finite() {
        return Err(Error::Numerical(format!("perplexity is {p}")));
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub k: usize,
    /// `None` when the fit or evaluation for this K failed.
    pub perplexity: Option<f64>,
    pub fit_seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerplexityCurve {
    pub points: Vec<CurvePoint>,
    pub chosen_k: usize,
    pub unseen_tokens: u64,
}

impl PerplexityCurve {
    /// `k,perplexity,fit_seconds,chosen`; failed rows carry `failed` as perplexity.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,perplexity,fit_seconds,chosen\n");
        for p in &self.points {
            let perp = p.perplexity.map_or_else(|| "failed".to_string(), |v| v.to_string());
            let _ = writeln!(out, "{},{perp},{:.3},{}", p.k, p.fit_seconds, u8::from(p.k == self.chosen_k));
        }
        out
    }
}

/// Smallest K whose relative improvement over the previous grid point,
/// `(p_prev − p_K) / p_prev`, is below `epsilon`; otherwise the K with the
/// lowest perplexity. `points` must be ordered by K and non-empty.
pub fn choose_k(points: &[(usize, f64)], epsilon: f64) -> usize {
    for pair in points.windows(2) {
        let (prev, cur) = (pair[0].1, pair[1].1);
        if (prev - cur) / prev < epsilon {
            return pair[1].0;
        }
    }
    points
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|p| p.0)
        .expect("at least one point")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub k_list: Vec<usize>,
    /// Fixed alpha for every K; `None` uses 50/K.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub schedule: Schedule,
    pub eval_schedule: Schedule,
    pub plateau_epsilon: f64,
    pub heldout_ratio: f64,
    pub seed: u64,
    /// When false, `fit_seconds` is reported as zero so curves are byte-stable.
    pub record_timing: bool,
}

impl SweepConfig {
    pub fn new(k_list: Vec<usize>, seed: u64) -> Self {
        SweepConfig {
            k_list,
            alpha: None,
            beta: crate::lda::DEFAULT_BETA,
            schedule: Schedule::default(),
            eval_schedule: Schedule::evaluation(),
            plateau_epsilon: 0.01,
            heldout_ratio: 0.1,
            seed,
            record_timing: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k_list.is_empty() {
            return Err(Error::argument("K list is empty"));
        }
        if self.k_list[0] == 0 || self.k_list.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::argument("K list must be strictly ascending positive integers"));
        }
        if !(self.plateau_epsilon > 0.0 && self.plateau_epsilon < 1.0) {
            return Err(Error::argument(format!("plateau epsilon must be in (0, 1), got {}", self.plateau_epsilon)));
        }
        self.schedule.validate()?;
        self.eval_schedule.validate()
    }
}

fn fit_and_score(split: &HeldoutSplit, cfg: &SweepConfig, k: usize) -> Result<f64> {
    let w = split.train.vocab().len();
    if k > w {
        return Err(Error::argument(format!("K={k} exceeds the {w}-word training vocabulary")));
    }
    let hyper = Hyperparams::new(k, cfg.alpha.unwrap_or(50.0 / k as f64), cfg.beta)?;
    let (model, _, _) = train(&split.train, hyper, cfg.schedule, rng::derive_indexed(cfg.seed, "fit", k as u64))?;
    perplexity(&model, &split.test, hyper.alpha, &cfg.eval_schedule, rng::derive_indexed(cfg.seed, "eval", k as u64))
}

/// Fits every K in the grid on one training split, scores held-out
/// perplexity and applies the plateau rule. A K whose fit fails is kept
/// in the curve as failed and skipped by the rule.
pub fn k_sweep(corpus: &Corpus, cfg: &SweepConfig) -> Result<PerplexityCurve> {
    cfg.validate()?;
    let split = split_heldout(corpus, cfg.heldout_ratio, rng::derive_seed(cfg.seed, "heldout-split"))?;
    log::info!(
        "held-out split: {} train / {} test documents, {} unseen test tokens dropped",
        split.train.num_docs(),
        split.test.num_docs(),
        split.unseen_tokens
    );
    let points: Vec<CurvePoint> = cfg
        .k_list
        .par_iter()
        .map(|&k| {
            let start = Instant::now();
            let result = fit_and_score(&split, cfg, k);
            let fit_seconds = if cfg.record_timing { start.elapsed().as_secs_f64() } else { 0.0 };
            match result {
                Ok(p) => {
                    log::info!("K={k}: perplexity {p:.4}");
                    CurvePoint { k, perplexity: Some(p), fit_seconds, error: None }
                }
                Err(e) => {
                    log::warn!("K={k} failed: {e}");
                    CurvePoint { k, perplexity: None, fit_seconds, error: Some(e.to_string()) }
                }
            }
        })
        .collect();
    let ok: Vec<(usize, f64)> = points.iter().filter_map(|p| p.perplexity.map(|v| (p.k, v))).collect();
    if ok.is_empty() {
        let reasons: Vec<String> = points.iter().filter_map(|p| p.error.clone()).collect();
        return Err(Error::Empty(format!("every K failed: {}", reasons.join("; "))));
    }
    let chosen_k = choose_k(&ok, cfg.plateau_epsilon);
    Ok(PerplexityCurve { points, chosen_k, unseen_tokens: split.unseen_tokens })
}
