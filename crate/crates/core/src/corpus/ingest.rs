use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, NaiveDate, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{tokenize, Corpus, TextDocument, TokenizerRules};
use crate::error::{Error, Result};

/// One input record.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMessage {
    pub id: String,
    pub user_id: String,
    pub timestamp: DateTime<Utc>,
    pub text: String,
    pub lang: Option<String>,
}

#[derive(Deserialize)]
struct WireMessage {
    id: Value,
    user_id: Value,
    timestamp: String,
    text: String,
    #[serde(default)]
    lang: Option<String>,
}

fn opaque_id(v: Value, field: &str) -> std::result::Result<String, String> {
    let s = match v {
        Value::String(s) => s,
        Value::Number(n) => n.to_string(),
        other => return Err(format!("{field} must be a string or number, got {other}")),
    };
    if s.is_empty() {
        return Err(format!("{field} is empty"));
    }
    Ok(s)
}

impl RawMessage {
    pub fn parse_json(line: &str) -> std::result::Result<Self, String> {
        let wire: WireMessage = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let timestamp = DateTime::parse_from_rfc3339(&wire.timestamp)
            .map_err(|e| format!("timestamp {:?}: {e}", wire.timestamp))?
            .with_timezone(&Utc);
        Ok(RawMessage {
            id: opaque_id(wire.id, "id")?,
            user_id: opaque_id(wire.user_id, "user_id")?,
            timestamp,
            text: wire.text,
            lang: wire.lang.filter(|l| !l.is_empty()),
        })
    }

    /// UTC calendar day of the message.
    pub fn date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    pub rules: TokenizerRules,
    /// Day-bin 0. Defaults to the earliest accepted message date.
    pub epoch: Option<NaiveDate>,
    /// Records whose `lang` is present and differs from this are skipped.
    pub lang: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub lines: u64,
    pub accepted: u64,
    pub skipped: u64,
    pub duplicates: u64,
    pub other_language: u64,
    pub empty: u64,
    pub tokens: u64,
}

enum Line {
    Blank,
    Malformed(String),
    Message(RawMessage, Vec<String>),
}

/// Reads JSONL records into a corpus with one document per message.
///
/// Malformed lines are counted in `skipped`; if they make up more than half
/// of the non-blank lines the whole input is rejected. No vocabulary
/// pruning happens here.
pub fn ingest<R: BufRead>(reader: R, opts: &IngestOptions) -> Result<(Corpus, IngestReport)> {
    let lines = reader
        .lines()
        .collect::<std::io::Result<Vec<String>>>()
        .map_err(|e| Error::Io { context: "reading message stream".into(), source: e })?;

    let parsed: Vec<Line> = lines
        .par_iter()
        .map(|line| {
            if line.trim().is_empty() {
                return Line::Blank;
            }
            match RawMessage::parse_json(line) {
                Ok(msg) => {
                    let tokens = tokenize(&msg.text, &opts.rules);
                    Line::Message(msg, tokens)
                }
                Err(e) => Line::Malformed(e),
            }
        })
        .collect();

    let mut report = IngestReport::default();
    let mut first_error: Option<(usize, String)> = None;
    let mut seen = HashSet::new();
    let mut kept: Vec<(RawMessage, Vec<String>)> = Vec::new();
    for (lineno, line) in parsed.into_iter().enumerate() {
        match line {
            Line::Blank => continue,
            Line::Malformed(e) => {
                report.lines += 1;
                report.skipped += 1;
                first_error.get_or_insert((lineno + 1, e));
            }
            Line::Message(msg, tokens) => {
                report.lines += 1;
                if !seen.insert(msg.id.clone()) {
                    report.duplicates += 1;
                } else if matches!((&opts.lang, &msg.lang), (Some(want), Some(got)) if !got.eq_ignore_ascii_case(want))
                {
                    report.other_language += 1;
                } else if tokens.is_empty() {
                    report.empty += 1;
                } else {
                    kept.push((msg, tokens));
                }
            }
        }
    }

    if report.skipped * 2 > report.lines {
        let (lineno, reason) = first_error.unwrap_or_default();
        return Err(Error::Format(format!(
            "{} of {} lines are not message records (first at line {lineno}: {reason}); is this a JSONL message file?",
            report.skipped, report.lines
        )));
    }
    if kept.is_empty() {
        return Err(Error::Empty(format!("no usable messages among {} lines", report.lines)));
    }

    let epoch = opts
        .epoch
        .unwrap_or_else(|| kept.iter().map(|(m, _)| m.date()).min().expect("non-empty"));
    let docs = kept
        .into_iter()
        .map(|(msg, tokens)| TextDocument {
            day: (msg.date() - epoch).num_days(),
            id: msg.id,
            user: msg.user_id,
            tokens,
        })
        .collect();
    let (corpus, dropped) = Corpus::from_text_docs(docs, epoch, 1)?;
    debug_assert_eq!(dropped, 0);
    report.accepted = corpus.num_docs() as u64;
    report.tokens = corpus.num_tokens();
    Ok((corpus, report))
}

pub fn ingest_path(path: &Path, opts: &IngestOptions) -> Result<(Corpus, IngestReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest(BufReader::new(file), opts).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}
