//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.

mod generate;
mod model;
mod state;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generate::{generate_corpus, DocLength, SyntheticTruth};
pub use model::{estimate_model, load_model_dir, write_model_dir, ModelMeta, TopicModel};
pub use state::SamplerState;
pub use train::{train, Checkpoint, TraceLog, Trainer};

/// Topic count and symmetric Dirichlet concentrations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub k: usize,
    /// Prior on per-document topic proportions.
    pub alpha: f64,
    /// Prior on per-topic word distributions.
    pub beta: f64,
}

pub const DEFAULT_BETA: f64 = 0.1;

impl Hyperparams {
    pub fn new(k: usize, alpha: f64, beta: f64) -> Result<Self> {
        let h = Hyperparams { k, alpha, beta };
        h.validate()?;
        Ok(h)
    }

    /// `alpha = 50 / K`, `beta = 0.1`.
    pub fn with_defaults(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::argument("K must be at least 1"));
        }
        Self::new(k, 50.0 / k as f64, DEFAULT_BETA)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::argument("K must be at least 1"));
        }
        if self.k > u32::MAX as usize {
            return Err(Error::argument("K exceeds u32 range"));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::argument(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::argument(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Sweeps before the first retained sample, number of samples, and sweeps between samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub burn_in: u64,
    pub sample_count: u64,
    pub sample_lag: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { burn_in: 500, sample_count: 10, sample_lag: 50 }
    }
}

impl Schedule {
    /// Default for fold-in evaluation of held-out documents.
    pub fn evaluation() -> Self {
        Schedule { burn_in: 200, sample_count: 20, sample_lag: 5 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::argument("sample_count must be at least 1"));
        }
        Ok(())
    }

    /// Total sweeps: the first sample is taken right after burn-in, each
    /// later one `sample_lag` sweeps after the previous.
    pub fn total_sweeps(&self) -> u64 {
        self.burn_in + (self.sample_count - 1) * self.sample_lag
    }

    /// Number of samples due once `sweeps` sweeps have run.
    pub(crate) fn samples_due(&self, sweeps: u64) -> u64 {
        if sweeps < self.burn_in {
            return 0;
        }
        match (sweeps - self.burn_in).checked_div(self.sample_lag) {
            Some(spans) => (spans + 1).min(self.sample_count),
            // Zero lag takes every sample at the end of burn-in.
            None => self.sample_count,
        }
    }
}
