use rand::RngCore;
use rand_distr::{Distribution, Gamma, Poisson};

use super::Hyperparams;
use crate::corpus::{Corpus, Document, Vocabulary};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DocLength {
    Fixed(usize),
    /// Poisson with the given mean, clamped below at 1.
    Poisson(f64),
}

impl DocLength {
    fn validate(&self) -> Result<()> {
        match *self {
            DocLength::Fixed(0) => Err(Error::argument("document length must be at least 1")),
            DocLength::Poisson(mean) if !(mean.is_finite() && mean > 0.0) => {
                Err(Error::argument(format!("mean document length must be positive, got {mean}")))
            }
            _ => Ok(()),
        }
    }

    fn draw(&self, r: &mut StreamRng) -> usize {
        match *self {
            DocLength::Fixed(n) => n,
            DocLength::Poisson(mean) => {
                let n: f64 = Poisson::new(mean).expect("validated mean").sample(r);
                (n as usize).max(1)
            }
        }
    }
}

/// A corpus drawn from known topics, with the latent draws kept.
#[derive(Debug, Clone)]
pub struct SyntheticTruth {
    /// K×W row-major.
    pub phi: Vec<f64>,
    /// M×K row-major.
    pub theta: Vec<f64>,
    /// Topic that generated each token.
    pub assignments: Vec<Vec<u32>>,
    pub corpus: Corpus,
}

impl SyntheticTruth {
    pub fn phi_row(&self, k: usize) -> &[f64] {
        let w = self.corpus.vocab().len();
        &self.phi[k * w..(k + 1) * w]
    }
}

fn dirichlet(r: &mut StreamRng, concentration: f64, dim: usize) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).expect("validated concentration");
    loop {
        let mut draw: Vec<f64> = (0..dim).map(|_| gamma.sample(r)).collect();
        let total: f64 = draw.iter().sum();
        if total > 0.0 && total.is_finite() {
            for v in &mut draw {
                *v /= total;
            }
            return draw;
        }
    }
}

fn categorical(r: &mut StreamRng, probs: &[f64]) -> usize {
    let u = rng::unit_f64(r);
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left `acc` just under 1: fall back to the last non-zero entry.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Word names `w0000`, `w0001`, … sort in id order.
fn synthetic_words(w: usize) -> Vec<String> {
    let width = (w.saturating_sub(1)).to_string().len().max(4);
    (0..w).map(|i| format!("w{i:0width$}")).collect()
}

/// Draws topics from Dirichlet(β), then per document proportions from
/// Dirichlet(α), a topic per token and a word from that topic.
pub fn generate_corpus(hyper: &Hyperparams, w: usize, m: usize, doc_len: DocLength, seed: u64) -> Result<SyntheticTruth> {
    hyper.validate()?;
    doc_len.validate()?;
    if w == 0 || m == 0 {
        return Err(Error::argument("vocabulary size and document count must be positive"));
    }
    if w < hyper.k {
        log::warn!("generating {} topics over only {w} words", hyper.k);
    }
    let k = hyper.k;
    let mut topic_rng = rng::stream(rng::derive_seed(seed, "generate/topics"));
    let phi: Vec<f64> = (0..k).flat_map(|_| dirichlet(&mut topic_rng, hyper.beta, w)).collect();

    let mut doc_rng = rng::stream(rng::derive_seed(seed, "generate/docs"));
    let mut theta = Vec::with_capacity(m * k);
    let mut assignments = Vec::with_capacity(m);
    let mut docs = Vec::with_capacity(m);
    let mut counts = vec![0u64; w];
    for d in 0..m {
        let props = dirichlet(&mut doc_rng, hyper.alpha, k);
        let len = doc_len.draw(&mut doc_rng);
        let mut z = Vec::with_capacity(len);
        let mut tokens = Vec::with_capacity(len);
        for _ in 0..len {
            let topic = categorical(&mut doc_rng, &props);
            let word = categorical(&mut doc_rng, &phi[topic * w..(topic + 1) * w]);
            counts[word] += 1;
            z.push(topic as u32);
            tokens.push(word as u32);
        }
        theta.extend(props);
        assignments.push(z);
        docs.push(Document {
            id: format!("doc{d}"),
            user: format!("user{}", doc_rng.next_u32() % 64),
            day: (d % 14) as i64,
            tokens,
        });
    }
    let vocab = Vocabulary::from_counts(synthetic_words(w).into_iter().zip(counts))?;
    let epoch = chrono::NaiveDate::from_ymd_opt(2012, 10, 22).expect("valid date");
    let corpus = Corpus::new(docs, vocab, epoch)?;
    Ok(SyntheticTruth { phi, theta, assignments, corpus })
}
