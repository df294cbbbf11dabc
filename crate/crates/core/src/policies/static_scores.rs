//! Offline scores for static pruning: forgetting events and EL2N.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::learner::{LearnerConfig, LearnerState};
use crate::rng;

/// Per-trial score matrix (`R x N`) plus the wall-clock cost of producing it.
#[derive(Clone, Debug, PartialEq)]
pub struct StaticScores {
    pub method: String,
    trials: Vec<Vec<f64>>,
    pub offline_seconds: f64,
}

impl StaticScores {
    pub fn from_trials(trials: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = trials.first() else {
            return Err(Error::invalid("static scores need at least one trial"));
        };
        let n = first.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if let Some(t) = trials.iter().find(|t| t.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: t.len() });
        }
        if trials.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("static scores"));
        }
        Ok(Self {
            method: "custom".into(),
            trials,
            offline_seconds: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.trials[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_trials(&self) -> usize {
        self.trials.len()
    }

    pub fn trials(&self) -> &[Vec<f64>] {
        &self.trials
    }

    pub fn mean(&self) -> Vec<f64> {
        let r = self.trials.len() as f64;
        (0..self.len())
            .map(|i| self.trials.iter().map(|t| t[i]).sum::<f64>() / r)
            .collect()
    }

    /// Population variance across trials (zero for a single trial).
    pub fn variance(&self) -> Vec<f64> {
        let r = self.trials.len() as f64;
        self.mean()
            .iter()
            .enumerate()
            .map(|(i, m)| self.trials.iter().map(|t| (t[i] - m).powi(2)).sum::<f64>() / r)
            .collect()
    }

    /// `# method=.. offline_seconds=..` then `id,score` or `id,score_trial_1,..`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# method={} offline_seconds={}", self.method, self.offline_seconds);
        if self.trials.len() == 1 {
            out.push_str("id,score\n");
        } else {
            out.push_str("id");
            for r in 1..=self.trials.len() {
                let _ = write!(out, ",score_trial_{r}");
            }
            out.push('\n');
        }
        for i in 0..self.len() {
            out.push_str(&i.to_string());
            for t in &self.trials {
                let _ = write!(out, ",{}", t[i]);
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut method = "custom".to_string();
        let mut offline = 0.0;
        let mut trials: Vec<Vec<f64>> = Vec::new();
        let mut expected_id = 0;
        for (lineno, line) in text.lines().enumerate() {
            let row = lineno + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("method", v)) => method = v.to_string(),
                        Some(("offline_seconds", v)) => {
                            offline = v.parse().map_err(|_| Error::Parse {
                                row,
                                msg: format!("bad offline_seconds `{v}`"),
                            })?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if line.starts_with("id,") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() < 2 {
                return Err(Error::Parse { row, msg: "expected id and at least one score".into() });
            }
            if trials.is_empty() {
                trials = vec![Vec::new(); fields.len() - 1];
            } else if fields.len() - 1 != trials.len() {
                return Err(Error::Parse {
                    row,
                    msg: format!("expected {} score columns, found {}", trials.len(), fields.len() - 1),
                });
            }
            let id: usize = fields[0].parse().map_err(|_| Error::Parse { row, msg: format!("bad id `{}`", fields[0]) })?;
            if id != expected_id {
                return Err(Error::Parse { row, msg: format!("expected id {expected_id}, found {id}") });
            }
            expected_id += 1;
            for (t, f) in trials.iter_mut().zip(&fields[1..]) {
                t.push(f.parse().map_err(|_| Error::Parse { row, msg: format!("bad score `{f}`") })?);
            }
        }
        if trials.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut s = Self::from_trials(trials)?;
        s.method = method;
        s.offline_seconds = offline;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }
}

/// How a static policy obtains its offline scores.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StaticMethod {
    Forget { epochs: usize },
    El2n { trials: usize, epochs: usize },
}

impl StaticMethod {
    pub fn name(self) -> &'static str {
        match self {
            StaticMethod::Forget { .. } => "forget",
            StaticMethod::El2n { .. } => "el2n",
        }
    }

    /// Trial seeds are derived from `seed`, so one seed fixes the whole score matrix.
    pub fn compute(self, ds: &Dataset, cfg: &LearnerConfig, seed: u64) -> Result<StaticScores> {
        match self {
            StaticMethod::Forget { epochs } => compute_forget_scores(ds, cfg, epochs, rng::derive_seed(seed, "forget", 0)),
            StaticMethod::El2n { trials, epochs } => {
                let seeds: Vec<u64> = (0..trials as u64).map(|r| rng::derive_seed(seed, "el2n", r)).collect();
                compute_el2n_scores(ds, cfg, epochs, &seeds)
            }
        }
    }
}

/// Counts correct-to-incorrect transitions. Sequences that are never correct
/// get `sentinel`, ranking them above any attainable count.
pub fn count_forgetting_events(correct: &[bool], sentinel: f64) -> f64 {
    if !correct.iter().any(|&c| c) {
        return sentinel;
    }
    correct.windows(2).filter(|w| w[0] && !w[1]).count() as f64
}

/// Trains a fresh learner on the full dataset for `epochs`, recording
/// training-set correctness after every epoch, and scores each sample by its
/// number of forgetting events.
pub fn compute_forget_scores(ds: &Dataset, cfg: &LearnerConfig, epochs: usize, seed: u64) -> Result<StaticScores> {
    if epochs == 0 {
        return Err(Error::invalid("forget scores need at least one epoch"));
    }
    let start = Instant::now();
    let mut state = LearnerState::init(cfg, ds.dim(), ds.num_classes(), rng::derive_seed(seed, "init", 0))?;
    let all: Vec<usize> = (0..ds.len()).collect();
    let mut history = vec![Vec::with_capacity(epochs); ds.len()];
    for epoch in 0..epochs {
        let lr = cfg.schedule.lr_at(epoch);
        state.sgd_epoch(ds, &all, lr, rng::derive_seed(seed, "shuffle", epoch as u64))?;
        for (h, c) in history.iter_mut().zip(state.per_sample_correct(ds)?) {
            h.push(c);
        }
    }
    let sentinel = ds.len() as f64;
    let scores = history.iter().map(|h| count_forgetting_events(h, sentinel)).collect();
    let mut out = StaticScores::from_trials(vec![scores])?;
    out.method = "forget".into();
    out.offline_seconds = start.elapsed().as_secs_f64();
    Ok(out)
}

/// One learner per seed, trained `epochs` on the full dataset; each trial row
/// holds the per-sample error norms at the end of training.
pub fn compute_el2n_scores(ds: &Dataset, cfg: &LearnerConfig, epochs: usize, seeds: &[u64]) -> Result<StaticScores> {
    compute_el2n_scores_with(ds, cfg, epochs, seeds, Exec::default())
}

pub fn compute_el2n_scores_with(
    ds: &Dataset,
    cfg: &LearnerConfig,
    epochs: usize,
    seeds: &[u64],
    exec: Exec,
) -> Result<StaticScores> {
    if epochs == 0 || seeds.is_empty() {
        return Err(Error::invalid("EL2N needs at least one trial and one epoch"));
    }
    let start = Instant::now();
    let all: Vec<usize> = (0..ds.len()).collect();
    let trials = exec::map_items(exec, seeds.to_vec(), |seed| -> Result<Vec<f64>> {
        let mut state = LearnerState::init(cfg, ds.dim(), ds.num_classes(), rng::derive_seed(seed, "init", 0))?;
        for epoch in 0..epochs {
            let lr = cfg.schedule.lr_at(epoch);
            state.sgd_epoch(ds, &all, lr, rng::derive_seed(seed, "shuffle", epoch as u64))?;
        }
        state.per_sample_error_norm(ds)
    });
    let mut out = StaticScores::from_trials(trials.into_iter().collect::<Result<_>>()?)?;
    out.method = "el2n".into();
    out.offline_seconds = start.elapsed().as_secs_f64();
    Ok(out)
}
