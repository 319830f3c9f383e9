use statrs::function::gamma::ln_gamma;

use super::Hyperparams;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::rng;

/// Topic assignments for every token plus the count tables they imply.
///
/// `n_kw` is stored word-major (`w * K + k`) so the per-token scan over
/// topics reads one contiguous row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplerState {
    k: usize,
    w: usize,
    z: Vec<Vec<u32>>,
    n_kw: Vec<u32>,
    n_k: Vec<u32>,
    n_mk: Vec<u32>,
    n_m: Vec<u32>,
    seed: u64,
    sweeps: u64,
}

impl SamplerState {
    /// Draws every assignment uniformly from `0..K`.
    pub fn init(corpus: &Corpus, hyper: &Hyperparams, seed: u64) -> Result<Self> {
        hyper.validate()?;
        if corpus.is_empty() {
            return Err(Error::Empty("cannot fit a topic model to an empty corpus".into()));
        }
        let mut r = rng::stream(rng::derive_seed(seed, "init"));
        let z = corpus
            .docs()
            .iter()
            .map(|d| d.tokens.iter().map(|_| rng::bounded_index(&mut r, hyper.k) as u32).collect())
            .collect();
        Self::from_assignments(corpus, hyper.k, z, seed, 0)
    }

    /// Rebuilds the count tables from explicit assignments.
    pub fn from_assignments(corpus: &Corpus, k: usize, z: Vec<Vec<u32>>, seed: u64, sweeps: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::argument("K must be at least 1"));
        }
        let w = corpus.vocab().len();
        let m = corpus.num_docs();
        if z.len() != m {
            return Err(Error::argument(format!("{} assignment rows for {m} documents", z.len())));
        }
        let mut state = SamplerState {
            k,
            w,
            n_kw: vec![0; w * k],
            n_k: vec![0; k],
            n_mk: vec![0; m * k],
            n_m: vec![0; m],
            z: Vec::new(),
            seed,
            sweeps,
        };
        for (d, (doc, zd)) in corpus.docs().iter().zip(&z).enumerate() {
            if doc.tokens.len() != zd.len() {
                return Err(Error::argument(format!("document {d}: {} assignments for {} tokens", zd.len(), doc.tokens.len())));
            }
            for (&word, &topic) in doc.tokens.iter().zip(zd) {
                if topic as usize >= k {
                    return Err(Error::argument(format!("document {d}: topic {topic} >= K={k}")));
                }
                state.add(d, word as usize, topic as usize);
            }
        }
        state.z = z;
        Ok(state)
    }

    fn add(&mut self, m: usize, w: usize, k: usize) {
        self.n_kw[w * self.k + k] += 1;
        self.n_k[k] += 1;
        self.n_mk[m * self.k + k] += 1;
        self.n_m[m] += 1;
    }

    fn remove(&mut self, m: usize, w: usize, k: usize) -> Result<()> {
        let kk = self.k;
        let cells = [
            &mut self.n_kw[w * kk + k],
            &mut self.n_k[k],
            &mut self.n_mk[m * kk + k],
            &mut self.n_m[m],
        ];
        if cells.iter().any(|c| **c == 0) {
            return Err(Error::Corruption(format!("count underflow removing word {w} from topic {k} in document {m}")));
        }
        for c in cells {
            *c -= 1;
        }
        Ok(())
    }

    pub fn num_topics(&self) -> usize {
        self.k
    }

    pub fn num_words(&self) -> usize {
        self.w
    }

    pub fn num_docs(&self) -> usize {
        self.n_m.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sweep_count(&self) -> u64 {
        self.sweeps
    }

    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.z
    }

    /// Times word `w` is assigned to topic `k`.
    pub fn n_kw(&self, k: usize, w: usize) -> u32 {
        self.n_kw[w * self.k + k]
    }

    pub fn n_k(&self, k: usize) -> u32 {
        self.n_k[k]
    }

    /// Tokens of document `m` assigned to topic `k`.
    pub fn n_mk(&self, m: usize, k: usize) -> u32 {
        self.n_mk[m * self.k + k]
    }

    pub fn n_m(&self, m: usize) -> u32 {
        self.n_m[m]
    }

    pub fn total_tokens(&self) -> u64 {
        self.n_k.iter().map(|&c| c as u64).sum()
    }

    /// Full conditional of token `i` in document `m` given every other
    /// assignment. The token's own assignment is subtracted from the counts
    /// here, so the state itself is left untouched.
    pub fn gibbs_conditional(&self, corpus: &Corpus, m: usize, i: usize, hyper: &Hyperparams) -> Result<Vec<f64>> {
        let doc = corpus
            .docs()
            .get(m)
            .ok_or_else(|| Error::argument(format!("document {m} out of range")))?;
        let &word = doc
            .tokens
            .get(i)
            .ok_or_else(|| Error::argument(format!("token {i} out of range in document {m}")))?;
        let own = self.z[m][i] as usize;
        let w = word as usize;
        let wb = self.w as f64 * hyper.beta;
        let ka = self.k as f64 * hyper.alpha;
        let minus = |count: u32, k: usize| -> Result<f64> {
            let c = if k == own { count.checked_sub(1) } else { Some(count) };
            c.map(f64::from)
                .ok_or_else(|| Error::Corruption(format!("negative count excluding token ({m}, {i})")))
        };
        let n_m = minus(self.n_m[m], own)?;
        let mut p = Vec::with_capacity(self.k);
        for k in 0..self.k {
            let word_part = (minus(self.n_kw(k, w), k)? + hyper.beta) / (minus(self.n_k[k], k)? + wb);
            let doc_part = (minus(self.n_mk(m, k), k)? + hyper.alpha) / (n_m + ka);
            p.push(word_part * doc_part);
        }
        let total: f64 = p.iter().sum();
        for v in &mut p {
            *v /= total;
        }
        Ok(p)
    }

    /// One pass over every token in document order, resampling each
    /// assignment from its full conditional.
    pub fn sweep(&mut self, corpus: &Corpus, hyper: &Hyperparams) -> Result<()> {
        if hyper.k != self.k || corpus.num_docs() != self.num_docs() || corpus.vocab().len() != self.w {
            return Err(Error::argument("corpus or hyperparameters do not match the sampler state"));
        }
        let mut r = rng::stream(rng::derive_indexed(self.seed, "sweep", self.sweeps));
        let k_topics = self.k;
        let wb = self.w as f64 * hyper.beta;
        let mut cumulative = vec![0.0f64; k_topics];
        let mut z = std::mem::take(&mut self.z);
        for (m, doc) in corpus.docs().iter().enumerate() {
            for (i, &word) in doc.tokens.iter().enumerate() {
                let w = word as usize;
                let old = z[m][i] as usize;
                if let Err(e) = self.remove(m, w, old) {
                    self.z = z;
                    return Err(e);
                }
                let word_row = &self.n_kw[w * k_topics..(w + 1) * k_topics];
                let doc_row = &self.n_mk[m * k_topics..(m + 1) * k_topics];
                let mut acc = 0.0;
                for k in 0..k_topics {
                    acc += (word_row[k] as f64 + hyper.beta) / (self.n_k[k] as f64 + wb)
                        * (doc_row[k] as f64 + hyper.alpha);
                    cumulative[k] = acc;
                }
                let u = rng::unit_f64(&mut r) * acc;
                let new = cumulative.iter().position(|&c| u < c).unwrap_or(k_topics - 1);
                self.add(m, w, new);
                z[m][i] = new as u32;
            }
        }
        self.z = z;
        self.sweeps += 1;
        Ok(())
    }

    /// `log P(w, z)` with φ and θ integrated out.
    pub fn joint_log_prob(&self, hyper: &Hyperparams) -> f64 {
        let (k, w, m) = (self.k as f64, self.w as f64, self.num_docs() as f64);
        let (a, b) = (hyper.alpha, hyper.beta);
        let lg_b = ln_gamma(b);
        let lg_a = ln_gamma(a);

        // Zero cells contribute lnΓ(β) − lnΓ(β) = 0 after pulling out the prior term.
        let mut words = k * ln_gamma(w * b);
        for &c in &self.n_kw {
            if c > 0 {
                words += ln_gamma(c as f64 + b) - lg_b;
            }
        }
        for &c in &self.n_k {
            words -= ln_gamma(c as f64 + w * b);
        }

        let mut topics = m * ln_gamma(k * a);
        for &c in &self.n_mk {
            if c > 0 {
                topics += ln_gamma(c as f64 + a) - lg_a;
            }
        }
        for &c in &self.n_m {
            topics -= ln_gamma(c as f64 + k * a);
        }
        words + topics
    }

    /// Recounts every table from the assignments and reports the first mismatch.
    pub fn verify(&self, corpus: &Corpus) -> Result<()> {
        let fresh = Self::from_assignments(corpus, self.k, self.z.clone(), self.seed, self.sweeps)?;
        if fresh.n_kw != self.n_kw {
            return Err(Error::Corruption("topic-word counts disagree with assignments".into()));
        }
        if fresh.n_k != self.n_k {
            return Err(Error::Corruption("topic totals disagree with assignments".into()));
        }
        if fresh.n_mk != self.n_mk {
            return Err(Error::Corruption("document-topic counts disagree with assignments".into()));
        }
        if fresh.n_m != self.n_m {
            return Err(Error::Corruption("document totals disagree with assignments".into()));
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn counts_mut(&mut self) -> &mut Vec<u32> {
        &mut self.n_k
    }

    #[cfg(test)]
    pub(crate) fn resample_to(&mut self, corpus: &Corpus, m: usize, i: usize, topic: usize) -> Result<()> {
        let w = corpus.docs()[m].tokens[i] as usize;
        self.remove(m, w, self.z[m][i] as usize)?;
        self.add(m, w, topic);
        self.z[m][i] = topic as u32;
        Ok(())
    }
}
