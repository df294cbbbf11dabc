//! Grid sweeps over prune rate, policy, pruning period, epsilon, c and seed.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::policies::{PolicyKind, StaticMethod, StaticScores};

use super::{run_experiment, RunConfig, RunRecord};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub base: RunConfig,
    pub prune_rates: Vec<f64>,
    pub policies: Vec<PolicyKind>,
    pub prune_periods: Vec<usize>,
    /// Only expanded for epsilon-greedy kinds.
    pub epsilons: Vec<f64>,
    /// Only expanded for UCB kinds.
    pub cs: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Offline scorer for static kinds.
    pub static_method: Option<StaticMethod>,
}

impl SweepGrid {
    pub fn from_base(base: RunConfig) -> Self {
        Self {
            prune_rates: vec![base.prune_rate],
            policies: vec![base.policy.kind],
            prune_periods: vec![base.prune_period],
            epsilons: vec![base.policy.epsilon],
            cs: vec![base.policy.c],
            seeds: vec![base.seed],
            static_method: None,
            base,
        }
    }

    /// Expands the grid in a fixed nested order (policy, rate, period, eps, c, seed).
    /// Static scores are left unset; [`run_sweep`] attaches them.
    pub fn points(&self) -> Result<Vec<RunConfig>> {
        let dims = [
            ("prune_rates", self.prune_rates.len()),
            ("policies", self.policies.len()),
            ("prune_periods", self.prune_periods.len()),
            ("epsilons", self.epsilons.len()),
            ("cs", self.cs.len()),
            ("seeds", self.seeds.len()),
        ];
        if let Some((key, _)) = dims.iter().find(|(_, len)| *len == 0) {
            return Err(Error::config(*key, "sweep dimension is empty"));
        }
        let mut out = Vec::new();
        for &kind in &self.policies {
            let eps: &[f64] = if kind.uses_epsilon() { &self.epsilons } else { &self.epsilons[..1] };
            let cs: &[f64] = if kind.uses_c() { &self.cs } else { &self.cs[..1] };
            for &rate in &self.prune_rates {
                for &tp in &self.prune_periods {
                    for &e in eps {
                        for &c in cs {
                            for &seed in &self.seeds {
                                let mut cfg = self.base.clone();
                                cfg.policy.kind = kind;
                                cfg.policy.static_scores = None;
                                cfg.prune_rate = rate;
                                cfg.prune_period = tp;
                                cfg.policy.epsilon = e;
                                cfg.policy.c = c;
                                cfg.seed = seed;
                                out.push(cfg);
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Runs every grid point, invoking `sink` in grid order as results become
/// available. With `jobs > 1` (and the `parallel` feature) runs execute on a
/// dedicated pool while the calling thread acts as the single writer.
pub fn run_sweep<F>(grid: &SweepGrid, ds: &Dataset, test: &Dataset, jobs: usize, mut sink: F) -> Result<Vec<Result<RunRecord>>>
where
    F: FnMut(usize, &Result<RunRecord>),
{
    let mut points = grid.points()?;
    attach_static_scores(grid, ds, &mut points)?;
    let run = |cfg: &RunConfig| run_experiment(cfg, ds, test);

    #[cfg(feature = "parallel")]
    if jobs > 1 {
        return run_parallel(&points, jobs, run, sink);
    }
    let _ = jobs;
    let mut out = Vec::with_capacity(points.len());
    for (i, cfg) in points.iter().enumerate() {
        let r = run(cfg);
        sink(i, &r);
        out.push(r);
    }
    Ok(out)
}

#[cfg(feature = "parallel")]
fn run_parallel<R, F>(points: &[RunConfig], jobs: usize, run: R, mut sink: F) -> Result<Vec<Result<RunRecord>>>
where
    R: Fn(&RunConfig) -> Result<RunRecord> + Sync,
    F: FnMut(usize, &Result<RunRecord>),
{
    use rayon::prelude::*;
    use std::sync::mpsc;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let (tx, rx) = mpsc::channel();
    let mut slots: Vec<Option<Result<RunRecord>>> = (0..points.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        scope.spawn(|| {
            pool.install(|| {
                points.par_iter().enumerate().for_each_with(tx, |tx, (i, cfg)| {
                    let _ = tx.send((i, run(cfg)));
                })
            })
        });
        // reorder buffer: emit strictly in grid order
        let mut next = 0;
        let mut pending = BTreeMap::new();
        for (i, r) in rx {
            pending.insert(i, r);
            while let Some(r) = pending.remove(&next) {
                sink(next, &r);
                slots[next] = Some(r);
                next += 1;
            }
        }
    });
    Ok(slots.into_iter().map(|s| s.expect("every grid point reports")).collect())
}

/// Computes offline scores once per distinct seed and shares them across points.
fn attach_static_scores(grid: &SweepGrid, ds: &Dataset, points: &mut [RunConfig]) -> Result<()> {
    let mut cache: BTreeMap<u64, Arc<StaticScores>> = BTreeMap::new();
    for cfg in points.iter_mut().filter(|c| c.policy.kind.is_static()) {
        if let Some(s) = &grid.base.policy.static_scores {
            cfg.policy.static_scores = Some(s.clone());
            continue;
        }
        let method = grid
            .static_method
            .ok_or_else(|| Error::config("static_method", format!("needed by policy {}", cfg.policy.kind)))?;
        let scores = match cache.get(&cfg.seed) {
            Some(s) => s.clone(),
            None => {
                let s = Arc::new(method.compute(ds, &cfg.learner, cfg.seed)?);
                cache.insert(cfg.seed, s.clone());
                s
            }
        };
        cfg.policy.static_scores = Some(scores);
    }
    Ok(())
}
