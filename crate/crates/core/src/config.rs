//! Run configuration: defaults, overridden by a flat TOML file, overridden
//! by command-line flags. The resolved result is what a run records.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Comma-separated topic-count grid, e.g. `10,20,50`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "KListRepr", into = "Vec<usize>")]
pub struct KList(pub Vec<usize>);

#[derive(Deserialize)]
#[serde(untagged)]
enum KListRepr {
    List(Vec<usize>),
    Text(String),
}

impl TryFrom<KListRepr> for KList {
    type Error = Error;

    fn try_from(repr: KListRepr) -> Result<Self> {
        match repr {
            KListRepr::List(v) => Ok(KList(v)),
            KListRepr::Text(s) => s.parse(),
        }
    }
}

impl From<KList> for Vec<usize> {
    fn from(k: KList) -> Self {
        k.0
    }
}

impl FromStr for KList {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<usize>().map_err(|_| Error::argument(format!("bad K value {p:?}"))))
            .collect::<Result<Vec<_>>>()
            .map(KList)
    }
}

impl fmt::Display for KList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

macro_rules! run_config {
    (
        required { $( $(#[doc = $rdoc:literal])* $rfield:ident : $rty:ty = $rdefault:expr, )* }
        optional { $( $(#[doc = $odoc:literal])* $ofield:ident : $oty:ty, )* }
    ) => {
        /// Fully resolved settings for one command invocation.
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        pub struct RunConfig {
            $( $(#[doc = $rdoc])* pub $rfield: $rty, )*
            $( $(#[doc = $odoc])* pub $ofield: Option<$oty>, )*
        }

        /// One source of settings (config file or flags); unset keys fall through.
        #[derive(Debug, Clone, Default, PartialEq, clap::Args, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct ConfigLayer {
            $( $(#[doc = $rdoc])* #[arg(long)] pub $rfield: Option<$rty>, )*
            $( $(#[doc = $odoc])* #[arg(long)] pub $ofield: Option<$oty>, )*
        }

        impl Default for RunConfig {
            fn default() -> Self {
                RunConfig {
                    $( $rfield: $rdefault, )*
                    $( $ofield: None, )*
                }
            }
        }

        impl RunConfig {
            /// Flags win over the file, the file wins over defaults.
            pub fn resolve(file: ConfigLayer, flags: ConfigLayer) -> Self {
                let d = RunConfig::default();
                RunConfig {
                    $( $rfield: flags.$rfield.or(file.$rfield).unwrap_or(d.$rfield), )*
                    $( $ofield: flags.$ofield.or(file.$ofield), )*
                }
            }
        }
    };
}

run_config! {
    required {
        /// Output directory.
        out: PathBuf = PathBuf::from("out"),
        /// Master seed; every random stream is derived from it.
        seed: u64 = 1,
        /// Worker threads, 0 for one per core.
        threads: usize = 0,
        /// Shortest token kept, in characters.
        min_token_len: usize = 2,
        /// Minimum corpus frequency for a word to stay in the vocabulary.
        min_count: u64 = 5,
        /// Keep records whose `lang` is absent or equal to this; empty keeps all.
        lang: String = "en".to_string(),
        /// Document unit: `message` or `user-day`.
        aggregate: String = "message".to_string(),
        /// Topic count for `train`.
        k: usize = 20,
        /// Topic-word prior concentration.
        beta: f64 = crate::lda::DEFAULT_BETA,
        burn_in: u64 = 500,
        samples: u64 = 10,
        lag: u64 = 50,
        eval_burn_in: u64 = 200,
        eval_samples: u64 = 20,
        eval_lag: u64 = 5,
        /// Topic-count grid for `sweep`.
        k_list: KList = KList(vec![10, 20, 50, 100, 150, 200, 250, 300]),
        /// Relative perplexity improvement below which the curve counts as flat.
        plateau_epsilon: f64 = 0.01,
        /// Fraction of documents held out for perplexity.
        heldout_ratio: f64 = 0.1,
        /// Write real fit durations into the curve (otherwise zeros).
        record_timing: bool = true,
        /// Top words per topic in `topics.json`.
        n_words: usize = 10,
        wordcloud_words: usize = 100,
        heatmap_words: usize = 100,
        /// Phase annotations, `label:YYYY-MM-DD..YYYY-MM-DD` comma-separated.
        phases: String = String::new(),
        /// Write a checkpoint every this many sweeps (0 disables).
        checkpoint_every: u64 = 0,
        sim_topics: usize = 5,
        sim_words: usize = 200,
        sim_docs: usize = 3000,
        /// Mean of the Poisson document length.
        sim_doc_len: f64 = 40.0,
        sim_alpha: f64 = 0.2,
        sim_beta: f64 = 0.05,
    }
    optional {
        /// JSONL message file for `ingest`.
        input: PathBuf,
        /// Corpus archive directory.
        corpus: PathBuf,
        /// Model directory for `report`.
        model: PathBuf,
        /// Stopword list; the bundled English list when unset.
        stopwords: PathBuf,
        /// Keep only messages containing this token.
        keyword: String,
        /// Keep only users with at least this many (post-keyword) messages.
        min_user_messages: usize,
        /// First day kept (inclusive, UTC).
        date_from: NaiveDate,
        /// Last day kept (inclusive, UTC).
        date_to: NaiveDate,
        /// Calendar date of day bin 0; the earliest message date when unset.
        epoch: NaiveDate,
        /// Document-topic prior; 50/K when unset.
        alpha: f64,
        /// Checkpoint file written by `train`.
        checkpoint: PathBuf,
        /// Checkpoint to continue from.
        resume: PathBuf,
        /// Stop `train` after this many total sweeps, leaving a checkpoint.
        halt_after: u64,
    }
}

impl ConfigLayer {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::argument(format!("config file: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::argument(format!("{}: {e}", path.display())))
    }
}

impl RunConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }
}
