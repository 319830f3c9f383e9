use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::model::point_estimates;
use super::{Hyperparams, SamplerState, Schedule, TopicModel};
use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Joint log-probability after initialization (sweep 0) and after every sweep.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceLog {
    pub points: Vec<(u64, f64)>,
}

impl TraceLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sweep,joint_log_prob\n");
        for (s, lp) in &self.points {
            let _ = writeln!(out, "{s},{lp}");
        }
        out
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|&(_, lp)| lp)
    }
}

/// A resumable training run.
pub struct Trainer<'c> {
    corpus: &'c Corpus,
    hyper: Hyperparams,
    schedule: Schedule,
    state: SamplerState,
    phi_sum: Vec<f64>,
    theta_sum: Vec<f64>,
    samples: u64,
    trace: TraceLog,
}

impl<'c> Trainer<'c> {
    pub fn new(corpus: &'c Corpus, hyper: Hyperparams, schedule: Schedule, seed: u64) -> Result<Self> {
        schedule.validate()?;
        let state = SamplerState::init(corpus, &hyper, seed)?;
        let (k, w, m) = (hyper.k, corpus.vocab().len(), corpus.num_docs());
        let mut trainer = Trainer {
            corpus,
            hyper,
            schedule,
            state,
            phi_sum: vec![0.0; k * w],
            theta_sum: vec![0.0; m * k],
            samples: 0,
            trace: TraceLog::default(),
        };
        trainer.record()?;
        Ok(trainer)
    }

    fn record(&mut self) -> Result<()> {
        let lp = self.state.joint_log_prob(&self.hyper);
        if !lp.is_finite() {
            return Err(Error::Numerical(format!("joint log-probability is {lp} at sweep {}", self.state.sweep_count())));
        }
        self.trace.points.push((self.state.sweep_count(), lp));
        let due = self.schedule.samples_due(self.state.sweep_count());
        while self.samples < due {
            let (phi, theta) = point_estimates(&self.state, &self.hyper);
            for (acc, v) in self.phi_sum.iter_mut().zip(phi) {
                *acc += v;
            }
            for (acc, v) in self.theta_sum.iter_mut().zip(theta) {
                *acc += v;
            }
            self.samples += 1;
        }
        Ok(())
    }

    pub fn is_done(&self) -> bool {
        self.samples == self.schedule.sample_count
    }

    pub fn sweeps_done(&self) -> u64 {
        self.state.sweep_count()
    }

    pub fn state(&self) -> &SamplerState {
        &self.state
    }

    /// Runs one sweep unless the schedule is already complete.
    pub fn step(&mut self) -> Result<bool> {
        if self.is_done() {
            return Ok(false);
        }
        self.state.sweep(self.corpus, &self.hyper)?;
        self.record()?;
        Ok(true)
    }

    /// Sweeps until the schedule completes or `limit` total sweeps have run.
    pub fn run_until(&mut self, limit: u64) -> Result<()> {
        while self.state.sweep_count() < limit && self.step()? {
            if self.state.sweep_count().is_multiple_of(100) {
                log::debug!("sweep {} log p(w,z) = {:.3}", self.state.sweep_count(), self.trace.points.last().map_or(f64::NAN, |p| p.1));
            }
        }
        Ok(())
    }

    pub fn run(&mut self) -> Result<()> {
        self.run_until(u64::MAX)
    }

    /// Averaged estimates, final state and trace. Fails if samples are still outstanding.
    pub fn finish(self) -> Result<(TopicModel, SamplerState, TraceLog)> {
        if !self.is_done() {
            return Err(Error::argument(format!(
                "schedule incomplete: {} of {} samples after {} sweeps",
                self.samples,
                self.schedule.sample_count,
                self.state.sweep_count()
            )));
        }
        let n = self.samples as f64;
        let phi = self.phi_sum.iter().map(|v| v / n).collect();
        let theta = self.theta_sum.iter().map(|v| v / n).collect();
        let model = TopicModel::from_parts(self.hyper, self.corpus.vocab().words().to_vec(), phi, theta)?;
        Ok((model, self.state, self.trace))
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            hyper: self.hyper,
            schedule: self.schedule,
            seed: self.state.seed(),
            sweeps: self.state.sweep_count(),
            num_tokens: self.corpus.num_tokens(),
            vocab_size: self.corpus.vocab().len() as u64,
            z: self.state.assignments().to_vec(),
            samples: self.samples,
            phi_sum: self.phi_sum.clone(),
            theta_sum: self.theta_sum.clone(),
            trace: self.trace.clone(),
        }
    }

    /// Continues a run exactly where `checkpoint` left it.
    pub fn resume(corpus: &'c Corpus, checkpoint: Checkpoint) -> Result<Self> {
        let Checkpoint { hyper, schedule, seed, sweeps, num_tokens, vocab_size, z, samples, phi_sum, theta_sum, trace } = checkpoint;
        if corpus.num_tokens() != num_tokens || corpus.vocab().len() as u64 != vocab_size {
            return Err(Error::argument("checkpoint was written for a different corpus"));
        }
        hyper.validate()?;
        schedule.validate()?;
        let state = SamplerState::from_assignments(corpus, hyper.k, z, seed, sweeps)?;
        let (k, w, m) = (hyper.k, corpus.vocab().len(), corpus.num_docs());
        if phi_sum.len() != k * w || theta_sum.len() != m * k || samples > schedule.sample_count {
            return Err(Error::Format("checkpoint accumulators have the wrong shape".into()));
        }
        Ok(Trainer { corpus, hyper, schedule, state, phi_sum, theta_sum, samples, trace })
    }
}

/// Runs a full schedule and returns the sample-averaged model.
pub fn train(corpus: &Corpus, hyper: Hyperparams, schedule: Schedule, seed: u64) -> Result<(TopicModel, SamplerState, TraceLog)> {
    let mut trainer = Trainer::new(corpus, hyper, schedule, seed)?;
    trainer.run()?;
    trainer.finish()
}

/// Everything needed to resume a run bit-identically.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub hyper: Hyperparams,
    pub schedule: Schedule,
    pub seed: u64,
    pub sweeps: u64,
    pub num_tokens: u64,
    pub vocab_size: u64,
    pub z: Vec<Vec<u32>>,
    pub samples: u64,
    pub phi_sum: Vec<f64>,
    pub theta_sum: Vec<f64>,
    pub trace: TraceLog,
}

const MAGIC: &[u8; 8] = b"STCKPT01";

struct Reader<'a> {
    buf: &'a [u8],
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        if self.buf.len() < N {
            return Err(Error::Format("checkpoint truncated".into()));
        }
        let (head, rest) = self.buf.split_at(N);
        self.buf = rest;
        Ok(head.try_into().expect("length checked"))
    }

    fn u64(&mut self) -> Result<u64> {
        self.take().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64> {
        self.take().map(f64::from_le_bytes)
    }

    fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        if n > self.buf.len() as u64 {
            return Err(Error::Format("checkpoint length field exceeds file".into()));
        }
        Ok(n as usize)
    }

    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len()?;
        (0..n).map(|_| self.f64()).collect()
    }
}

impl Checkpoint {
    /// Little-endian binary encoding; floats are stored by bit pattern.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let u = |out: &mut Vec<u8>, v: u64| out.extend_from_slice(&v.to_le_bytes());
        let f = |out: &mut Vec<u8>, v: f64| out.extend_from_slice(&v.to_le_bytes());
        out.extend_from_slice(MAGIC);
        u(&mut out, self.hyper.k as u64);
        f(&mut out, self.hyper.alpha);
        f(&mut out, self.hyper.beta);
        u(&mut out, self.schedule.burn_in);
        u(&mut out, self.schedule.sample_count);
        u(&mut out, self.schedule.sample_lag);
        u(&mut out, self.seed);
        u(&mut out, self.sweeps);
        u(&mut out, self.num_tokens);
        u(&mut out, self.vocab_size);
        u(&mut out, self.z.len() as u64);
        for doc in &self.z {
            u(&mut out, doc.len() as u64);
            for &t in doc {
                out.extend_from_slice(&t.to_le_bytes());
            }
        }
        u(&mut out, self.samples);
        for sums in [&self.phi_sum, &self.theta_sum] {
            u(&mut out, sums.len() as u64);
            for &v in sums.iter() {
                f(&mut out, v);
            }
        }
        u(&mut out, self.trace.points.len() as u64);
        for &(s, lp) in &self.trace.points {
            u(&mut out, s);
            f(&mut out, lp);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes };
        if &r.take::<8>()? != MAGIC {
            return Err(Error::Format("not a stormtopics checkpoint".into()));
        }
        let k = r.u64()? as usize;
        let hyper = Hyperparams { k, alpha: r.f64()?, beta: r.f64()? };
        let schedule = Schedule { burn_in: r.u64()?, sample_count: r.u64()?, sample_lag: r.u64()? };
        let seed = r.u64()?;
        let sweeps = r.u64()?;
        let num_tokens = r.u64()?;
        let vocab_size = r.u64()?;
        let docs = r.len()?;
        let mut z = Vec::with_capacity(docs);
        for _ in 0..docs {
            let n = r.len()?;
            z.push((0..n).map(|_| r.take::<4>().map(u32::from_le_bytes)).collect::<Result<Vec<_>>>()?);
        }
        let samples = r.u64()?;
        let phi_sum = r.f64s()?;
        let theta_sum = r.f64s()?;
        let n = r.len()?;
        let points = (0..n).map(|_| Ok((r.u64()?, r.f64()?))).collect::<Result<Vec<_>>>()?;
        if !r.buf.is_empty() {
            return Err(Error::Format("trailing bytes after checkpoint".into()));
        }
        Ok(Checkpoint {
            hyper,
            schedule,
            seed,
            sweeps,
            num_tokens,
            vocab_size,
            z,
            samples,
            phi_sum,
            theta_sum,
            trace: TraceLog { points },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::corpus_of;
    use crate::lda::estimate_model;

    fn small() -> Corpus {
        corpus_of(&[
            ("u", 0, &["storm", "surge", "storm", "wind"]),
            ("v", 0, &["power", "outage", "power"]),
            ("w", 1, &["storm", "wind", "rain"]),
            ("x", 2, &["power", "gas", "outage", "gas"]),
        ])
    }

    #[test]
    fn degenerate_schedule_equals_initial_estimate() {
        let c = small();
        let h = Hyperparams::new(2, 0.5, 0.1).unwrap();
        let (model, state, trace) = train(&c, h, Schedule { burn_in: 0, sample_count: 1, sample_lag: 1 }, 3).unwrap();
        let init = SamplerState::init(&c, &h, 3).unwrap();
        assert_eq!(state, init);
        assert_eq!(model, estimate_model(&init, &c, &h).unwrap());
        assert_eq!(trace.points.len(), 1);
    }

    #[test]
    fn trace_covers_every_sweep() {
        let c = small();
        let h = Hyperparams::new(2, 0.5, 0.1).unwrap();
        let schedule = Schedule { burn_in: 5, sample_count: 3, sample_lag: 2 };
        let (_, state, trace) = train(&c, h, schedule, 1).unwrap();
        assert_eq!(state.sweep_count(), 9);
        let sweeps: Vec<u64> = trace.points.iter().map(|p| p.0).collect();
        assert_eq!(sweeps, (0..=9).collect::<Vec<_>>());
        assert!(trace.to_csv().starts_with("sweep,joint_log_prob\n0,"));
    }

    #[test]
    fn identical_inputs_identical_models() {
        let c = small();
        let h = Hyperparams::new(3, 0.2, 0.05).unwrap();
        let s = Schedule { burn_in: 20, sample_count: 4, sample_lag: 3 };
        assert_eq!(train(&c, h, s, 42).unwrap().0, train(&c, h, s, 42).unwrap().0);
        assert_ne!(train(&c, h, s, 42).unwrap().0, train(&c, h, s, 43).unwrap().0);
    }

    #[test]
    fn checkpoint_resume_is_bit_identical() {
        let c = small();
        let h = Hyperparams::new(2, 0.5, 0.1).unwrap();
        let schedule = Schedule { burn_in: 7, sample_count: 4, sample_lag: 3 };
        let straight = train(&c, h, schedule, 11).unwrap();
        for halt in [0, 3, 7, 8, 12, 16] {
            let mut first = Trainer::new(&c, h, schedule, 11).unwrap();
            first.run_until(halt).unwrap();
            let bytes = first.checkpoint().to_bytes();
            let ckpt = Checkpoint::from_bytes(&bytes).unwrap();
            assert_eq!(ckpt, first.checkpoint());
            let mut resumed = Trainer::resume(&c, ckpt).unwrap();
            resumed.run().unwrap();
            let (model, state, trace) = resumed.finish().unwrap();
            assert_eq!(model, straight.0);
            assert_eq!(state, straight.1);
            assert_eq!(trace, straight.2);
        }
    }

    #[test]
    fn bad_checkpoints_are_rejected() {
        let c = small();
        let h = Hyperparams::new(2, 0.5, 0.1).unwrap();
        let t = Trainer::new(&c, h, Schedule::default(), 1).unwrap();
        let bytes = t.checkpoint().to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(Checkpoint::from_bytes(b"garbage!").is_err());
        let other = corpus_of(&[("u", 0, &["a"])]);
        assert!(Trainer::resume(&other, t.checkpoint()).is_err());
    }

    #[test]
    fn unfinished_run_cannot_finish() {
        let c = small();
        let h = Hyperparams::new(2, 0.5, 0.1).unwrap();
        let mut t = Trainer::new(&c, h, Schedule { burn_in: 10, sample_count: 1, sample_lag: 0 }, 1).unwrap();
        t.run_until(4).unwrap();
        assert_eq!(t.sweeps_done(), 4);
        assert!(t.finish().is_err());
    }
}
