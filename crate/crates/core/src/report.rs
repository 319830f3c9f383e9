//! Keyword tables, per-day topic prevalence and figure data exports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::{temporal_word_matrix, wordcloud_csv, wordcloud_data, Corpus};
use crate::error::{Error, Result};
use crate::lda::TopicModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordProb {
    pub word: String,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicReport {
    pub topic_id: usize,
    /// Share of corpus tokens attributed to the topic.
    pub mass: f64,
    pub top_words: Vec<WordProb>,
}

/// The `n` most probable words of topic `k`, ties broken lexicographically.
pub fn top_words(model: &TopicModel, k: usize, n: usize) -> Result<Vec<WordProb>> {
    if k >= model.num_topics() {
        return Err(Error::argument(format!("topic {k} out of range for K={}", model.num_topics())));
    }
    if n == 0 {
        return Err(Error::argument("n must be positive"));
    }
    let row = model.phi_row(k);
    let vocab = model.vocab();
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then_with(|| vocab[a].cmp(&vocab[b])));
    Ok(order
        .into_iter()
        .take(n)
        .map(|i| WordProb { word: vocab[i].clone(), p: row[i] })
        .collect())
}

fn check_alignment(model: &TopicModel, corpus: &Corpus) -> Result<()> {
    if model.num_docs() != corpus.num_docs() {
        return Err(Error::argument(format!(
            "model has {} document rows but the corpus has {} documents",
            model.num_docs(),
            corpus.num_docs()
        )));
    }
    Ok(())
}

/// Token-weighted topic mass: `Σ_m θ[m][k]·N_m / Σ_m N_m`.
pub fn topic_mass(model: &TopicModel, corpus: &Corpus) -> Result<Vec<f64>> {
    check_alignment(model, corpus)?;
    let mut mass = vec![0.0; model.num_topics()];
    let mut total = 0.0;
    for (m, doc) in corpus.docs().iter().enumerate() {
        let n = doc.tokens.len() as f64;
        total += n;
        for (acc, t) in mass.iter_mut().zip(model.theta_row(m)) {
            *acc += t * n;
        }
    }
    mass.iter_mut().for_each(|v| *v /= total);
    Ok(mass)
}

pub fn topic_reports(model: &TopicModel, corpus: &Corpus, n: usize) -> Result<Vec<TopicReport>> {
    let mass = topic_mass(model, corpus)?;
    (0..model.num_topics())
        .map(|k| Ok(TopicReport { topic_id: k, mass: mass[k], top_words: top_words(model, k, n)? }))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrevalenceSeries {
    pub topic_id: usize,
    pub days: Vec<i64>,
    pub weight: Vec<f64>,
}

/// Per-day topic weights, `Σ θ[m][k]·N_m / Σ N_m` over the day's documents.
/// Days without tokens are left out.
pub fn topic_prevalence(model: &TopicModel, corpus: &Corpus) -> Result<Vec<PrevalenceSeries>> {
    check_alignment(model, corpus)?;
    let k_topics = model.num_topics();
    let mut by_day: std::collections::BTreeMap<i64, (f64, Vec<f64>)> = Default::default();
    for (m, doc) in corpus.docs().iter().enumerate() {
        let n = doc.tokens.len() as f64;
        let (tokens, acc) = by_day.entry(doc.day).or_insert_with(|| (0.0, vec![0.0; k_topics]));
        *tokens += n;
        for (a, t) in acc.iter_mut().zip(model.theta_row(m)) {
            *a += t * n;
        }
    }
    by_day.retain(|_, (n, _)| *n > 0.0);
    let days: Vec<i64> = by_day.keys().copied().collect();
    Ok((0..k_topics)
        .map(|k| PrevalenceSeries {
            topic_id: k,
            days: days.clone(),
            weight: by_day.values().map(|(n, acc)| acc[k] / n).collect(),
        })
        .collect())
}

/// `date,topic_0,…` with six-decimal weights.
pub fn prevalence_csv(series: &[PrevalenceSeries], corpus: &Corpus) -> String {
    let mut out = String::from("date");
    for s in series {
        let _ = write!(out, ",topic_{}", s.topic_id);
    }
    out.push('\n');
    let days = series.first().map(|s| s.days.as_slice()).unwrap_or_default();
    for (d, &day) in days.iter().enumerate() {
        let _ = write!(out, "{}", corpus.date_of(day));
        for s in series {
            let _ = write!(out, ",{:.6}", s.weight[d]);
        }
        out.push('\n');
    }
    out
}

/// Labeled inclusive date range, written `label:YYYY-MM-DD..YYYY-MM-DD`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseWindow {
    pub label: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl FromStr for PhaseWindow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::argument(format!("phase {s:?} is not label:YYYY-MM-DD..YYYY-MM-DD"));
        let (label, range) = s.split_once(':').ok_or_else(bad)?;
        let (start, end) = range.split_once("..").ok_or_else(bad)?;
        let start = start.trim().parse().map_err(|_| bad())?;
        let end = end.trim().parse().map_err(|_| bad())?;
        if label.trim().is_empty() || end < start {
            return Err(bad());
        }
        Ok(PhaseWindow { label: label.trim().to_owned(), start, end })
    }
}

/// Parses a comma-separated list of phase windows.
pub fn parse_phases(spec: &str) -> Result<Vec<PhaseWindow>> {
    spec.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub n_words: usize,
    pub wordcloud_words: usize,
    pub heatmap_words: usize,
    pub phases: Vec<PhaseWindow>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { n_words: 10, wordcloud_words: 100, heatmap_words: 100, phases: Vec::new() }
    }
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `topics.json`, `prevalence.csv`, `wordcloud.csv`, `heatmap.csv`
/// and, when phases are configured, `phases.csv`.
pub fn export_reports(model: &TopicModel, corpus: &Corpus, out_dir: &Path, opts: &ReportOptions) -> Result<Vec<PathBuf>> {
    if !model.matches_vocab(corpus) {
        return Err(Error::argument("model vocabulary differs from the corpus vocabulary"));
    }
    let reports = topic_reports(model, corpus, opts.n_words)?;
    let prevalence = topic_prevalence(model, corpus)?;
    let cloud = wordcloud_data(corpus, opts.wordcloud_words)?;
    let heat_words: Vec<String> = wordcloud_data(corpus, opts.heatmap_words)?.into_iter().map(|(w, _)| w).collect();
    let heat = temporal_word_matrix(corpus, &heat_words)?;

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files = vec![
        write(out_dir.join("topics.json"), &(serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n"))?,
        write(out_dir.join("prevalence.csv"), &prevalence_csv(&prevalence, corpus))?,
        write(out_dir.join("wordcloud.csv"), &wordcloud_csv(&cloud))?,
        write(out_dir.join("heatmap.csv"), &heat.to_csv())?,
    ];
    if !opts.phases.is_empty() {
        let mut csv = String::from("date,phase\n");
        for &day in prevalence.first().map(|s| s.days.as_slice()).unwrap_or_default() {
            let date = corpus.date_of(day);
            let label = opts.phases.iter().find(|p| p.start <= date && date <= p.end).map_or("", |p| p.label.as_str());
            let _ = writeln!(csv, "{date},{label}");
        }
        files.push(write(out_dir.join("phases.csv"), &csv)?);
    }
    Ok(files)
}
