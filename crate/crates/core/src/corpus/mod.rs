//! Message corpora: tokenization, ingestion, filtering and the frequency
//! statistics computed before any model is fitted.

mod archive;
mod filter;
mod ingest;
mod stats;
mod tokenize;

use std::collections::{BTreeMap, HashMap};

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use archive::{load_archive, write_archive, ArchiveMeta};
pub use filter::{filter_date_window, filter_users_by_activity, keyword_filter};
pub use ingest::{ingest, ingest_path, IngestOptions, IngestReport, RawMessage};
pub use stats::{temporal_word_matrix, top_word_share, wordcloud_csv, wordcloud_data, TemporalMatrix};
pub use tokenize::{tokenize, TokenizerRules};

/// Word ↔ id map. Ids are dense and words are kept in lexicographic order,
/// so two corpora with the same word set always agree on ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    words: Vec<String>,
    ids: HashMap<String, u32>,
    counts: Vec<u64>,
}

impl Vocabulary {
    /// Builds from (word, count) pairs; words must be unique.
    pub fn from_counts<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, u64)>,
    {
        let sorted: BTreeMap<String, u64> = pairs.into_iter().collect();
        let mut vocab = Vocabulary::default();
        for (word, count) in sorted {
            vocab.ids.insert(word.clone(), vocab.words.len() as u32);
            vocab.words.push(word);
            vocab.counts.push(count);
        }
        if vocab.words.len() > u32::MAX as usize {
            return Err(Error::argument("vocabulary exceeds u32 id space"));
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.ids.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub user: String,
    /// Days since the corpus epoch (UTC midnight boundaries).
    pub day: i64,
    pub tokens: Vec<u32>,
}

/// A document before word ids are assigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextDocument {
    pub id: String,
    pub user: String,
    pub day: i64,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    docs: Vec<Document>,
    vocab: Vocabulary,
    epoch: NaiveDate,
}

impl Corpus {
    /// Checks that every token id is in range, every document is non-empty
    /// and the vocabulary counts agree with the documents.
    pub fn new(docs: Vec<Document>, vocab: Vocabulary, epoch: NaiveDate) -> Result<Self> {
        let w = vocab.len();
        let mut counts = vec![0u64; w];
        for doc in &docs {
            if doc.tokens.is_empty() {
                return Err(Error::argument(format!("document {:?} has no tokens", doc.id)));
            }
            for &t in &doc.tokens {
                let slot = counts.get_mut(t as usize).ok_or_else(|| {
                    Error::argument(format!("document {:?} references word id {t} >= {w}", doc.id))
                })?;
                *slot += 1;
            }
        }
        if counts != vocab.counts {
            return Err(Error::argument("vocabulary counts disagree with documents"));
        }
        Ok(Corpus { docs, vocab, epoch })
    }

    /// Builds a corpus from string-token documents, keeping only words that
    /// occur at least `min_count` times. Documents left empty are dropped;
    /// the number dropped is returned alongside.
    pub fn from_text_docs(
        docs: Vec<TextDocument>,
        epoch: NaiveDate,
        min_count: u64,
    ) -> Result<(Self, usize)> {
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for doc in &docs {
            for t in &doc.tokens {
                *freq.entry(t.as_str()).or_default() += 1;
            }
        }
        let vocab = Vocabulary::from_counts(
            freq.into_iter()
                .filter(|&(_, c)| c >= min_count.max(1))
                .map(|(w, c)| (w.to_owned(), c)),
        )?;
        let mut dropped = 0;
        let mut out = Vec::with_capacity(docs.len());
        for doc in docs {
            let ids: Vec<u32> = doc.tokens.iter().filter_map(|t| vocab.id(t)).collect();
            if ids.is_empty() {
                dropped += 1;
            } else {
                out.push(Document { id: doc.id, user: doc.user, day: doc.day, tokens: ids });
            }
        }
        Ok((Corpus::new(out, vocab, epoch)?, dropped))
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn epoch(&self) -> NaiveDate {
        self.epoch
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn num_tokens(&self) -> u64 {
        self.docs.iter().map(|d| d.tokens.len() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Calendar date of a day bin.
    pub fn date_of(&self, day: i64) -> NaiveDate {
        if day >= 0 {
            self.epoch + Days::new(day as u64)
        } else {
            self.epoch - Days::new(day.unsigned_abs())
        }
    }

    /// Keeps the documents selected by `keep` and recomputes the vocabulary
    /// on that subset, dropping words whose count falls below `min_count`.
    /// Returns the new corpus and the number of documents that became empty.
    pub fn retain<F>(&self, min_count: u64, mut keep: F) -> (Corpus, usize)
    where
        F: FnMut(usize, &Document) -> bool,
    {
        let kept: Vec<&Document> = self
            .docs
            .iter()
            .enumerate()
            .filter(|(i, d)| keep(*i, d))
            .map(|(_, d)| d)
            .collect();
        self.reindex(kept, min_count)
    }

    /// Drops vocabulary entries below `min_count` and any documents emptied by it.
    pub fn prune(&self, min_count: u64) -> (Corpus, usize) {
        self.retain(min_count, |_, _| true)
    }

    fn reindex(&self, kept: Vec<&Document>, min_count: u64) -> (Corpus, usize) {
        let mut counts = vec![0u64; self.vocab.len()];
        for doc in &kept {
            for &t in &doc.tokens {
                counts[t as usize] += 1;
            }
        }
        let threshold = min_count.max(1);
        let mut remap = vec![u32::MAX; self.vocab.len()];
        let mut vocab = Vocabulary::default();
        // Old ids are in lexicographic order, so the survivors stay sorted.
        for (old, &c) in counts.iter().enumerate() {
            if c >= threshold {
                let new_id = vocab.words.len() as u32;
                remap[old] = new_id;
                let word = self.vocab.words[old].clone();
                vocab.ids.insert(word.clone(), new_id);
                vocab.words.push(word);
                vocab.counts.push(c);
            }
        }
        let mut dropped = 0;
        let mut docs = Vec::with_capacity(kept.len());
        for doc in kept {
            let tokens: Vec<u32> = doc
                .tokens
                .iter()
                .map(|&t| remap[t as usize])
                .filter(|&t| t != u32::MAX)
                .collect();
            if tokens.is_empty() {
                dropped += 1;
            } else {
                docs.push(Document { tokens, ..doc.clone() });
            }
        }
        let corpus = Corpus {
            docs,
            vocab,
            epoch: self.epoch,
        };
        (corpus, dropped)
    }

    /// Concatenates each user's same-day messages into one document, in
    /// order of each group's first message.
    pub fn aggregate_user_day(&self) -> Corpus {
        let mut index: HashMap<(&str, i64), usize> = HashMap::new();
        let mut docs: Vec<Document> = Vec::new();
        for doc in &self.docs {
            match index.get(&(doc.user.as_str(), doc.day)) {
                Some(&slot) => docs[slot].tokens.extend_from_slice(&doc.tokens),
                None => {
                    index.insert((doc.user.as_str(), doc.day), docs.len());
                    docs.push(Document {
                        id: format!("{}@{}", doc.user, self.date_of(doc.day)),
                        ..doc.clone()
                    });
                }
            }
        }
        Corpus {
            docs,
            vocab: self.vocab.clone(),
            epoch: self.epoch,
        }
    }

    /// Re-expresses foreign documents in this corpus's vocabulary, dropping
    /// words it does not know. Returns the documents (possibly empty) and the
    /// number of tokens dropped.
    pub fn project(&self, other: &Corpus) -> (Vec<Document>, u64) {
        let mut unseen = 0;
        let docs = other
            .docs
            .iter()
            .map(|doc| {
                let tokens: Vec<u32> = doc
                    .tokens
                    .iter()
                    .filter_map(|&t| {
                        let id = self.vocab.id(other.vocab.word(t));
                        if id.is_none() {
                            unseen += 1;
                        }
                        id
                    })
                    .collect();
                Document { tokens, ..doc.clone() }
            })
            .collect();
        (docs, unseen)
    }
}
