//! The checkpointed prune-and-train loop.
//!
//! A run splits `epochs` into `epochs / prune_period` segments. Before each
//! segment the policy may score the full training set, it then picks `k` rows
//! and the learner trains `prune_period` epochs on those rows only.
//!
//! Randomness is split from the run seed into independent streams: `init`
//! (parameters), `shuffle` (one per epoch) and `policy` (selection draws).
//! Two runs that differ only in policy therefore share initial weights.

use std::fmt::Write as _;
use std::time::Instant;

use log::debug;
use rand::seq::index;

use crate::analysis::History;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learner::{LearnerConfig, LearnerState};
use crate::policies::{compute_k, PolicyKind, PolicySpec};
use crate::rng::{self, Rng};
use crate::scoreboard::{Scoreboard, VarianceRule};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub epochs: usize,
    pub prune_period: usize,
    pub prune_rate: f64,
    pub policy: PolicySpec,
    pub variance: VarianceRule,
    pub learner: LearnerConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            prune_period: 10,
            prune_rate: 0.5,
            policy: PolicySpec::new(PolicyKind::UncertaintyEma),
            variance: VarianceRule::Literal,
            learner: LearnerConfig::default(),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs", "must be at least 1"));
        }
        if self.prune_period == 0 {
            return Err(Error::config("prune_period", "must be at least 1"));
        }
        if !self.epochs.is_multiple_of(self.prune_period) {
            return Err(Error::config(
                "prune_period",
                format!("epochs = {} is not a multiple of prune_period = {}", self.epochs, self.prune_period),
            ));
        }
        compute_k(n.max(1), self.prune_rate)?;
        self.policy.validate(n)?;
        self.learner.validate().map_err(|e| Error::config("learner", e.to_string()))
    }

    pub fn checkpoints(&self) -> usize {
        self.epochs / self.prune_period
    }

    /// Short method label used to group runs in reports.
    pub fn method_label(&self) -> String {
        let kind = self.policy.kind;
        let mut label = kind.name().to_string();
        if let Some(s) = &self.policy.static_scores {
            label = format!("{}:{}", s.method, label);
        }
        if kind.uses_epsilon() {
            label.push_str(&format!("[eps={}]", self.policy.epsilon));
        }
        if kind.uses_c() {
            label.push_str(&format!("[c={}]", self.policy.c));
        }
        label
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub batches: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Timings {
    pub score_seconds: f64,
    pub train_seconds: f64,
    pub eval_seconds: f64,
    /// Pre-training scoring cost of static policies.
    pub offline_seconds: f64,
    /// Wall clock of the run plus `offline_seconds`.
    pub total_seconds: f64,
}

impl Timings {
    pub fn total_minus_offline(&self) -> f64 {
        self.total_seconds - self.offline_seconds
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub config: RunConfig,
    pub label: String,
    pub n: usize,
    pub k: usize,
    /// Sorted row indices chosen at each checkpoint.
    pub selections: Vec<Vec<usize>>,
    pub epochs: Vec<EpochRecord>,
    pub final_test_acc: f64,
    pub timings: Timings,
    /// Number of full-training-set loss evaluations.
    pub score_evaluations: usize,
    pub scoreboard: Option<Scoreboard>,
}

pub const RESULTS_HEADER: &str =
    "run_id,policy,prune_rate,Tp,alpha,epsilon,c,seed,final_test_acc,score_seconds,train_seconds,total_seconds";

impl RunRecord {
    pub fn total_batches(&self) -> usize {
        self.epochs.iter().map(|e| e.batches).sum()
    }

    pub fn results_row(&self, run_id: usize) -> String {
        let c = &self.config;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            run_id,
            self.label,
            c.prune_rate,
            c.prune_period,
            c.policy.alpha,
            c.policy.epsilon,
            c.policy.c,
            c.seed,
            self.final_test_acc,
            self.timings.score_seconds,
            self.timings.train_seconds,
            self.timings.total_seconds
        )
    }

    pub fn history(&self) -> History {
        History {
            n: self.n,
            k: self.k,
            selections: self.selections.clone(),
        }
    }

    /// `# n=.. k=..` then one line per checkpoint: index followed by the
    /// sorted selected row indices.
    pub fn history_string(&self) -> String {
        self.history().to_text()
    }

    pub fn epochs_csv(&self) -> String {
        let mut out = String::from("epoch,lr,train_loss,train_acc,test_acc,batches\n");
        for e in &self.epochs {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                e.epoch, e.lr, e.train_loss, e.train_acc, e.test_acc, e.batches
            );
        }
        out
    }
}

/// What picks the subset at each checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub enum Selector {
    Policy(PolicySpec),
    /// The same rows at every checkpoint.
    Fixed(Vec<usize>),
    /// `always` at every checkpoint, the remaining budget drawn uniformly.
    AlwaysPlusRandom(Vec<usize>),
}

impl Selector {
    fn needs_scoring(&self) -> bool {
        matches!(self, Selector::Policy(p) if p.kind.needs_scoring())
    }

    fn select(&self, sb: &Scoreboard, k: usize, rng: &mut Rng) -> Result<Vec<usize>> {
        match self {
            Selector::Policy(p) => p.select(sb, k, rng),
            Selector::Fixed(ids) => {
                if ids.len() != k {
                    return Err(Error::KOutOfRange { k: ids.len(), n: k });
                }
                Ok(ids.clone())
            }
            Selector::AlwaysPlusRandom(always) => {
                if always.len() > k {
                    return Err(Error::invalid(format!(
                        "budget k = {k} is smaller than the always set ({}); use a lower prune rate",
                        always.len()
                    )));
                }
                let n = sb.len();
                let mut taken = vec![false; n];
                always.iter().for_each(|&i| taken[i] = true);
                let rest: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
                let mut out = always.clone();
                out.extend(index::sample(rng, rest.len(), k - always.len()).into_iter().map(|j| rest[j]));
                out.sort_unstable();
                Ok(out)
            }
        }
    }
}

pub fn run_experiment(cfg: &RunConfig, ds: &Dataset, test: &Dataset) -> Result<RunRecord> {
    run_with_selector(cfg, &Selector::Policy(cfg.policy.clone()), ds, test)
}

pub fn run_with_selector(cfg: &RunConfig, selector: &Selector, ds: &Dataset, test: &Dataset) -> Result<RunRecord> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    cfg.validate(ds.len())?;
    let started = Instant::now();
    let n = ds.len();
    let k = compute_k(n, cfg.prune_rate)?;
    let classes = ds.num_classes().max(test.num_classes());
    let mut learner = LearnerState::init(&cfg.learner, ds.dim(), classes, rng::derive_seed(cfg.seed, "init", 0))?;
    let mut policy_rng = rng::stream(cfg.seed, "policy", 0);

    let mut record = RunRecord {
        config: cfg.clone(),
        label: cfg.method_label(),
        n,
        k,
        selections: Vec::with_capacity(cfg.checkpoints()),
        epochs: Vec::with_capacity(cfg.epochs),
        final_test_acc: 0.0,
        timings: Timings::default(),
        score_evaluations: 0,
        scoreboard: None,
    };
    if let Selector::Policy(p) = selector {
        if let Some(s) = &p.static_scores {
            record.timings.offline_seconds = s.offline_seconds;
        }
    }

    let scoring = selector.needs_scoring();
    let mut sb = if scoring {
        let t = Instant::now();
        let raw = learner.per_sample_loss(ds)?;
        let sb = Scoreboard::with_rule(&raw, cfg.policy.alpha, cfg.variance)?;
        record.timings.score_seconds += t.elapsed().as_secs_f64();
        record.score_evaluations += 1;
        sb
    } else {
        Scoreboard::counts_only(n)?
    };

    for checkpoint in 0..cfg.checkpoints() {
        if scoring {
            let t = Instant::now();
            let raw = learner.per_sample_loss(ds)?;
            sb.observe(&raw)?;
            record.timings.score_seconds += t.elapsed().as_secs_f64();
            record.score_evaluations += 1;
        } else {
            sb.tick();
        }
        let subset = selector.select(&sb, k, &mut policy_rng)?;
        sb.record_selection(&subset)?;
        debug!("checkpoint {checkpoint}: selected {} of {n}", subset.len());

        for epoch in checkpoint * cfg.prune_period..(checkpoint + 1) * cfg.prune_period {
            let lr = cfg.learner.schedule.lr_at(epoch);
            let t = Instant::now();
            let metrics = learner.sgd_epoch(ds, &subset, lr, rng::derive_seed(cfg.seed, "shuffle", epoch as u64));
            record.timings.train_seconds += t.elapsed().as_secs_f64();
            let metrics = match metrics {
                Ok(m) => m,
                Err(Error::NonFiniteGradient { .. }) => {
                    record.selections.push(subset);
                    record.scoreboard = Some(sb);
                    record.timings.total_seconds = started.elapsed().as_secs_f64() + record.timings.offline_seconds;
                    return Err(Error::Diverged {
                        epoch,
                        partial: Box::new(record),
                    });
                }
                Err(e) => return Err(e),
            };
            let t = Instant::now();
            let (_, test_acc) = learner.evaluate(test)?;
            record.timings.eval_seconds += t.elapsed().as_secs_f64();
            record.epochs.push(EpochRecord {
                epoch,
                lr,
                train_loss: metrics.mean_loss,
                train_acc: metrics.accuracy,
                test_acc,
                batches: metrics.batches,
            });
        }
        record.selections.push(subset);
    }

    record.final_test_acc = record.epochs.last().map_or(0.0, |e| e.test_acc);
    record.scoreboard = Some(sb);
    record.timings.total_seconds = started.elapsed().as_secs_f64() + record.timings.offline_seconds;
    Ok(record)
}

/// Conventional full-dataset training: no scoring, no checkpoints.
pub fn baseline_run(cfg: &RunConfig, ds: &Dataset, test: &Dataset) -> Result<RunRecord> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut cfg = cfg.clone();
    cfg.prune_rate = 0.0;
    cfg.prune_period = cfg.epochs.max(1);
    cfg.policy = PolicySpec {
        static_scores: None,
        ..PolicySpec::new(PolicyKind::Random)
    };
    cfg.validate(ds.len())?;
    let started = Instant::now();
    let n = ds.len();
    let classes = ds.num_classes().max(test.num_classes());
    let mut learner = LearnerState::init(&cfg.learner, ds.dim(), classes, rng::derive_seed(cfg.seed, "init", 0))?;
    let all: Vec<usize> = (0..n).collect();
    let mut record = RunRecord {
        label: "baseline".into(),
        config: cfg.clone(),
        n,
        k: n,
        selections: Vec::new(),
        epochs: Vec::with_capacity(cfg.epochs),
        final_test_acc: 0.0,
        timings: Timings::default(),
        score_evaluations: 0,
        scoreboard: None,
    };
    for epoch in 0..cfg.epochs {
        let lr = cfg.learner.schedule.lr_at(epoch);
        let t = Instant::now();
        let metrics = learner.sgd_epoch(ds, &all, lr, rng::derive_seed(cfg.seed, "shuffle", epoch as u64));
        record.timings.train_seconds += t.elapsed().as_secs_f64();
        let metrics = match metrics {
            Ok(m) => m,
            Err(Error::NonFiniteGradient { .. }) => {
                record.timings.total_seconds = started.elapsed().as_secs_f64();
                return Err(Error::Diverged {
                    epoch,
                    partial: Box::new(record),
                });
            }
            Err(e) => return Err(e),
        };
        let t = Instant::now();
        let (_, test_acc) = learner.evaluate(test)?;
        record.timings.eval_seconds += t.elapsed().as_secs_f64();
        record.epochs.push(EpochRecord {
            epoch,
            lr,
            train_loss: metrics.mean_loss,
            train_acc: metrics.accuracy,
            test_acc,
            batches: metrics.batches,
        });
    }
    record.final_test_acc = record.epochs.last().map_or(0.0, |e| e.test_acc);
    record.timings.total_seconds = started.elapsed().as_secs_f64();
    Ok(record)
}

/// Closed-form count of subset minibatches over a run.
pub fn expected_batches(cfg: &RunConfig, n: usize) -> Result<usize> {
    let k = compute_k(n, cfg.prune_rate)?;
    Ok(cfg.checkpoints() * cfg.prune_period * k.div_ceil(cfg.learner.hyper.batch_size))
}

pub mod sweep;
