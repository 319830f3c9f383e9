use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Hyperparams, SamplerState, Schedule, TraceLog};
use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Point estimates of the topic-word (`phi`, K×W) and document-topic
/// (`theta`, M×K) distributions, both stored row-major. Rows sum to one;
/// estimated models are strictly positive, hand-built ones may hold zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    hyper: Hyperparams,
    vocab: Vec<String>,
    phi: Vec<f64>,
    theta: Vec<f64>,
}

const ROW_TOLERANCE: f64 = 1e-9;

fn check_rows(name: &str, values: &[f64], width: usize) -> Result<()> {
    for (r, row) in values.chunks(width).enumerate() {
        if row.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::Numerical(format!("{name} row {r} has a negative or non-finite entry")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_TOLERANCE {
            return Err(Error::Numerical(format!("{name} row {r} sums to {sum}")));
        }
    }
    Ok(())
}

impl TopicModel {
    pub fn from_parts(hyper: Hyperparams, vocab: Vec<String>, phi: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        hyper.validate()?;
        let (k, w) = (hyper.k, vocab.len());
        if w == 0 || phi.len() != k * w {
            return Err(Error::argument(format!("phi has {} entries, expected {k}x{w}", phi.len())));
        }
        if !theta.len().is_multiple_of(k) {
            return Err(Error::argument(format!("theta has {} entries, not a multiple of K={k}", theta.len())));
        }
        check_rows("phi", &phi, w)?;
        check_rows("theta", &theta, k)?;
        Ok(TopicModel { hyper, vocab, phi, theta })
    }

    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn num_topics(&self) -> usize {
        self.hyper.k
    }

    pub fn num_words(&self) -> usize {
        self.vocab.len()
    }

    pub fn num_docs(&self) -> usize {
        self.theta.len() / self.hyper.k
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    /// `P(w | z = k)` over the vocabulary.
    pub fn phi_row(&self, k: usize) -> &[f64] {
        let w = self.vocab.len();
        &self.phi[k * w..(k + 1) * w]
    }

    /// `P(z = k | m)` over topics.
    pub fn theta_row(&self, m: usize) -> &[f64] {
        let k = self.hyper.k;
        &self.theta[m * k..(m + 1) * k]
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Whether the model was fitted on exactly this vocabulary.
    pub fn matches_vocab(&self, corpus: &Corpus) -> bool {
        self.vocab.as_slice() == corpus.vocab().words()
    }

    pub fn phi_csv(&self) -> String {
        let mut out = self.vocab.join(",");
        out.push('\n');
        for k in 0..self.hyper.k {
            push_row(&mut out, self.phi_row(k));
        }
        out
    }

    pub fn theta_csv(&self) -> String {
        let mut out = (0..self.hyper.k).map(|k| format!("topic_{k}")).collect::<Vec<_>>().join(",");
        out.push('\n');
        for m in 0..self.num_docs() {
            push_row(&mut out, self.theta_row(m));
        }
        out
    }
}

/// Shortest round-trip formatting keeps exports exact and byte-stable.
fn push_row(out: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

/// Smoothed estimates from a single sampler state.
pub fn estimate_model(state: &SamplerState, corpus: &Corpus, hyper: &Hyperparams) -> Result<TopicModel> {
    let (k, w, m) = (state.num_topics(), state.num_words(), state.num_docs());
    if hyper.k != k || corpus.vocab().len() != w || corpus.num_docs() != m {
        return Err(Error::argument("state does not belong to this corpus and topic count"));
    }
    let (phi, theta) = point_estimates(state, hyper);
    TopicModel::from_parts(*hyper, corpus.vocab().words().to_vec(), phi, theta)
}

pub(crate) fn point_estimates(state: &SamplerState, hyper: &Hyperparams) -> (Vec<f64>, Vec<f64>) {
    let (k, w, m) = (state.num_topics(), state.num_words(), state.num_docs());
    let mut phi = vec![0.0; k * w];
    for t in 0..k {
        let denom = state.n_k(t) as f64 + w as f64 * hyper.beta;
        for v in 0..w {
            phi[t * w + v] = (state.n_kw(t, v) as f64 + hyper.beta) / denom;
        }
    }
    let mut theta = vec![0.0; m * k];
    for d in 0..m {
        let denom = state.n_m(d) as f64 + k as f64 * hyper.alpha;
        for t in 0..k {
            theta[d * k + t] = (state.n_mk(d, t) as f64 + hyper.alpha) / denom;
        }
    }
    (phi, theta)
}

/// Contents of `hyper.json` in a model directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    #[serde(rename = "K")]
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub schedule: Schedule,
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `phi.csv`, `theta.csv`, `hyper.json` and `trace.csv`.
pub fn write_model_dir(model: &TopicModel, seed: u64, schedule: &Schedule, trace: &TraceLog, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = ModelMeta {
        k: model.hyper.k,
        alpha: model.hyper.alpha,
        beta: model.hyper.beta,
        seed,
        schedule: *schedule,
    };
    Ok(vec![
        write(dir.join("phi.csv"), &model.phi_csv())?,
        write(dir.join("theta.csv"), &model.theta_csv())?,
        write(dir.join("hyper.json"), &(serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n"))?,
        write(dir.join("trace.csv"), &trace.to_csv())?,
    ])
}

fn parse_matrix(path: &Path, text: &str, width: Option<usize>) -> Result<(Vec<String>, Vec<f64>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Format(format!("{}: empty file", path.display())))?
        .split(',')
        .map(str::to_owned)
        .collect();
    let width = width.unwrap_or(header.len());
    let mut values = Vec::new();
    for (r, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("{} row {}: {e}", path.display(), r + 2)))?;
        if row.len() != width {
            return Err(Error::Format(format!("{} row {}: {} columns, expected {width}", path.display(), r + 2, row.len())));
        }
        values.extend(row);
    }
    Ok((header, values))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_model_dir(dir: &Path) -> Result<(TopicModel, ModelMeta)> {
    let meta_path = dir.join("hyper.json");
    let meta: ModelMeta = serde_json::from_str(&read(&meta_path)?)
        .map_err(|e| Error::Format(format!("{}: {e}", meta_path.display())))?;
    let phi_path = dir.join("phi.csv");
    let (vocab, phi) = parse_matrix(&phi_path, &read(&phi_path)?, None)?;
    let theta_path = dir.join("theta.csv");
    let (_, theta) = parse_matrix(&theta_path, &read(&theta_path)?, Some(meta.k))?;
    let hyper = Hyperparams::new(meta.k, meta.alpha, meta.beta)?;
    let model = TopicModel::from_parts(hyper, vocab, phi, theta).map_err(|e| Error::Format(format!("{}: {e}", dir.display())))?;
    Ok((model, meta))
}
