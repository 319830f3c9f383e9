//! On-disk corpus archive: `vocab.tsv`, `docs.jsonl` and `meta.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Corpus, Document, Vocabulary};
use crate::error::{Error, Result};

const ARCHIVE_FORMAT: &str = "stormtopics-corpus/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveMeta {
    pub format: String,
    pub epoch: NaiveDate,
    pub documents: usize,
    pub tokens: u64,
    pub vocabulary: usize,
}

impl ArchiveMeta {
    pub const FORMAT: &'static str = ARCHIVE_FORMAT;
}

pub fn vocab_tsv(vocab: &Vocabulary) -> String {
    let mut out = String::from("id\tword\tcount\n");
    for (i, (w, c)) in vocab.words().iter().zip(vocab.counts()).enumerate() {
        let _ = writeln!(out, "{i}\t{w}\t{c}");
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<PathBuf> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Writes the archive files into `dir` (created if missing) and returns their paths.
pub fn write_archive(corpus: &Corpus, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut docs = String::new();
    for doc in corpus.docs() {
        docs.push_str(&serde_json::to_string(doc).expect("document serializes"));
        docs.push('\n');
    }
    let meta = ArchiveMeta {
        format: ARCHIVE_FORMAT.into(),
        epoch: corpus.epoch(),
        documents: corpus.num_docs(),
        tokens: corpus.num_tokens(),
        vocabulary: corpus.vocab().len(),
    };
    let meta = serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n";
    Ok(vec![
        write_file(&dir.join("vocab.tsv"), &vocab_tsv(corpus.vocab()))?,
        write_file(&dir.join("docs.jsonl"), &docs)?,
        write_file(&dir.join("meta.json"), &meta)?,
    ])
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_vocab(path: &Path, text: &str) -> Result<Vocabulary> {
    let mut lines = text.lines();
    if lines.next() != Some("id\tword\tcount") {
        return Err(Error::Format(format!("{}: missing `id\\tword\\tcount` header", path.display())));
    }
    let mut pairs = Vec::new();
    for (i, line) in lines.enumerate() {
        let bad = || Error::Format(format!("{}: bad row {}: {line:?}", path.display(), i + 2));
        let mut cols = line.split('\t');
        let (Some(id), Some(word), Some(count), None) = (cols.next(), cols.next(), cols.next(), cols.next())
        else {
            return Err(bad());
        };
        if id.parse::<usize>().map_err(|_| bad())? != i {
            return Err(bad());
        }
        pairs.push((word.to_owned(), count.parse::<u64>().map_err(|_| bad())?));
    }
    let vocab = Vocabulary::from_counts(pairs.iter().cloned())?;
    if vocab.words().iter().zip(&pairs).any(|(w, (p, _))| w != p) || vocab.len() != pairs.len() {
        return Err(Error::Format(format!("{}: words not unique and sorted", path.display())));
    }
    Ok(vocab)
}

pub fn load_archive(dir: &Path) -> Result<Corpus> {
    let meta_path = dir.join("meta.json");
    let meta: ArchiveMeta = serde_json::from_str(&read(&meta_path)?)
        .map_err(|e| Error::Format(format!("{}: {e}", meta_path.display())))?;
    if meta.format != ARCHIVE_FORMAT {
        return Err(Error::Format(format!("unsupported archive format {:?}", meta.format)));
    }
    let vocab_path = dir.join("vocab.tsv");
    let vocab = parse_vocab(&vocab_path, &read(&vocab_path)?)?;
    let docs_path = dir.join("docs.jsonl");
    let docs = read(&docs_path)?
        .lines()
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str::<Document>(line)
                .map_err(|e| Error::Format(format!("{} line {}: {e}", docs_path.display(), i + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    let corpus = Corpus::new(docs, vocab, meta.epoch).map_err(|e| Error::Format(format!("{}: {e}", dir.display())))?;
    if corpus.num_docs() != meta.documents || corpus.num_tokens() != meta.tokens {
        return Err(Error::Format(format!("{}: meta.json disagrees with contents", dir.display())));
    }
    Ok(corpus)
}
