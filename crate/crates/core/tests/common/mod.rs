#![allow(dead_code)]

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stormtopics::corpus::{Corpus, TextDocument};

pub fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(2012, 10, 22).unwrap()
}

/// Zero-padded so lexicographic vocabulary order equals numeric order.
pub fn word(i: usize) -> String {
    format!("w{i:04}")
}

/// Builds a corpus from word-index documents. Every index in `0..w` must
/// occur somewhere, otherwise the vocabulary shrinks and ids shift.
pub fn corpus_from_ids(docs: &[Vec<usize>], users: &[&str], days: &[i64]) -> Corpus {
    let text: Vec<TextDocument> = docs
        .iter()
        .enumerate()
        .map(|(m, d)| TextDocument {
            id: format!("d{m}"),
            user: users.get(m).map_or_else(|| format!("u{}", m % 3), |u| u.to_string()),
            day: days.get(m).copied().unwrap_or(0),
            tokens: d.iter().map(|&i| word(i)).collect(),
        })
        .collect();
    Corpus::from_text_docs(text, epoch(), 1).unwrap().0
}

/// Random corpus: `m` docs of 1..=max_len tokens over `w` words, spread over `days` days
/// and 20 users.
pub fn random_corpus(seed: u64, m: usize, w: usize, max_len: usize, days: i64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let text: Vec<TextDocument> = (0..m)
        .map(|i| {
            let len = rng.random_range(1..=max_len);
            TextDocument {
                id: format!("d{i}"),
                user: format!("u{}", rng.random_range(0..20)),
                day: rng.random_range(0..days),
                tokens: (0..len).map(|_| word(rng.random_range(0..w))).collect(),
            }
        })
        .collect();
    Corpus::from_text_docs(text, epoch(), 1).unwrap().0
}

pub fn tv(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Greedy one-to-one matching: repeatedly pair the unused truth and fitted
/// rows with the smallest TV. Returns the TV of each pair in pick order.
pub fn greedy_tv_match(truth: &[Vec<f64>], fitted: &[Vec<f64>]) -> Vec<f64> {
    assert_eq!(truth.len(), fitted.len());
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, t) in truth.iter().enumerate() {
        for (j, f) in fitted.iter().enumerate() {
            pairs.push((tv(t, f), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut used_t, mut used_f) = (vec![false; truth.len()], vec![false; fitted.len()]);
    let mut out = Vec::new();
    for (d, i, j) in pairs {
        if !used_t[i] && !used_f[j] {
            used_t[i] = true;
            used_f[j] = true;
            out.push(d);
        }
    }
    out
}

/// Unnormalized log P(w, z) for a full assignment, straight from the
/// Dirichlet-multinomial gamma products, dropping factors that do not
/// depend on z.
pub fn log_joint_unnormalized(docs: &[Vec<usize>], z: &[Vec<usize>], w: usize, k: usize, alpha: f64, beta: f64) -> f64 {
    let mut n_kw = vec![vec![0usize; w]; k];
    let mut n_k = vec![0usize; k];
    let mut lp = 0.0;
    for (doc, zd) in docs.iter().zip(z) {
        let mut n_mk = vec![0usize; k];
        for (&t, &topic) in doc.iter().zip(zd) {
            n_kw[topic][t] += 1;
            n_k[topic] += 1;
            n_mk[topic] += 1;
        }
        for c in n_mk {
            lp += libm::lgamma(c as f64 + alpha);
        }
    }
    for topic in 0..k {
        for c in &n_kw[topic] {
            lp += libm::lgamma(*c as f64 + beta);
        }
        lp -= libm::lgamma(n_k[topic] as f64 + w as f64 * beta);
    }
    lp
}

/// Decodes assignment index `idx` (base K, first token least significant).
pub fn decode_assignment(docs: &[Vec<usize>], k: usize, mut idx: usize) -> Vec<Vec<usize>> {
    docs.iter()
        .map(|d| {
            d.iter()
                .map(|_| {
                    let topic = idx % k;
                    idx /= k;
                    topic
                })
                .collect()
        })
        .collect()
}

pub fn encode_assignment(z: &[Vec<u32>], k: usize) -> usize {
    let mut idx = 0;
    let mut scale = 1;
    for &topic in z.iter().flatten() {
        idx += topic as usize * scale;
        scale *= k;
    }
    idx
}

/// Exact posterior over all K^N assignments by brute-force enumeration.
pub fn exact_posterior(docs: &[Vec<usize>], w: usize, k: usize, alpha: f64, beta: f64) -> Vec<f64> {
    let n: u32 = docs.iter().map(|d| d.len() as u32).sum();
    let logs: Vec<f64> = (0..k.pow(n))
        .map(|idx| log_joint_unnormalized(docs, &decode_assignment(docs, k, idx), w, k, alpha, beta))
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter().map(|x| x / total).collect()
}

pub fn read_csv_matrix(path: &std::path::Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}
