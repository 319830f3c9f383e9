use std::fmt::Write as _;

use chrono::NaiveDate;

use super::Corpus;
use crate::error::{Error, Result};

/// Word counts ranked by descending frequency, ties in lexicographic order.
fn ranked(corpus: &Corpus) -> Vec<(&str, u64)> {
    let vocab = corpus.vocab();
    let mut pairs: Vec<(&str, u64)> = vocab
        .words()
        .iter()
        .map(String::as_str)
        .zip(vocab.counts().iter().copied())
        .collect();
    pairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    pairs
}

/// Fraction of all tokens contributed by the `n` most frequent words.
pub fn top_word_share(corpus: &Corpus, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::argument("n must be positive"));
    }
    let total = corpus.vocab().total();
    if total == 0 {
        return Err(Error::Empty("corpus has no tokens".into()));
    }
    let top: u64 = ranked(corpus).iter().take(n).map(|&(_, c)| c).sum();
    Ok(top as f64 / total as f64)
}

/// The `n` most frequent words with their counts.
pub fn wordcloud_data(corpus: &Corpus, n: usize) -> Result<Vec<(String, u64)>> {
    if n == 0 {
        return Err(Error::argument("n must be positive"));
    }
    Ok(ranked(corpus)
        .into_iter()
        .take(n)
        .filter(|&(_, c)| c > 0)
        .map(|(w, c)| (w.to_owned(), c))
        .collect())
}

pub fn wordcloud_csv(pairs: &[(String, u64)]) -> String {
    let mut out = String::from("word,count\n");
    for (w, c) in pairs {
        let _ = writeln!(out, "{w},{c}");
    }
    out
}

/// Occurrences of selected words per day bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalMatrix {
    pub words: Vec<String>,
    pub days: Vec<i64>,
    /// `counts[w][d]` for `words[w]` and `days[d]`.
    pub counts: Vec<Vec<u64>>,
    pub epoch: NaiveDate,
}

impl TemporalMatrix {
    /// CSV with one row per word and one column per calendar date.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("word");
        for &d in &self.days {
            let _ = write!(out, ",{}", day_date(self.epoch, d));
        }
        out.push('\n');
        for (word, row) in self.words.iter().zip(&self.counts) {
            out.push_str(word);
            for c in row {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

fn day_date(epoch: NaiveDate, day: i64) -> NaiveDate {
    epoch + chrono::Duration::days(day)
}

/// Per-day counts of `words`, spanning every day from the corpus's first
/// to last day bin.
pub fn temporal_word_matrix(corpus: &Corpus, words: &[String]) -> Result<TemporalMatrix> {
    let rows: Vec<u32> = words
        .iter()
        .map(|w| {
            corpus
                .vocab()
                .id(w)
                .ok_or_else(|| Error::argument(format!("word {w:?} is not in the vocabulary")))
        })
        .collect::<Result<_>>()?;
    let first = corpus.docs().iter().map(|d| d.day).min().unwrap_or(0);
    let last = corpus.docs().iter().map(|d| d.day).max().unwrap_or(-1);
    let days: Vec<i64> = (first..=last).collect();

    let mut row_of = vec![usize::MAX; corpus.vocab().len()];
    for (r, &id) in rows.iter().enumerate() {
        row_of[id as usize] = r;
    }
    let mut counts = vec![vec![0u64; days.len()]; words.len()];
    for doc in corpus.docs() {
        let col = (doc.day - first) as usize;
        for &t in &doc.tokens {
            let r = row_of[t as usize];
            if r != usize::MAX {
                counts[r][col] += 1;
            }
        }
    }
    Ok(TemporalMatrix {
        words: words.to_vec(),
        days,
        counts,
        epoch: corpus.epoch(),
    })
}
