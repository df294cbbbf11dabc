//! Subset selection criteria.
//!
//! Every selector returns exactly `k` distinct row indices in ascending order.
//! Rankings break ties by ascending index, so selection is a pure function of
//! the inputs and the rng state.

mod static_scores;

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scoreboard::{Scoreboard, DEFAULT_ALPHA};

pub use static_scores::{
    compute_el2n_scores, compute_el2n_scores_with, compute_forget_scores, count_forgetting_events, StaticMethod,
    StaticScores,
};

pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_C: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Random,
    Uncertainty,
    UncertaintyEma,
    EpsGreedy,
    Ucb,
    StaticTopk,
    StaticEpsGreedy,
    StaticUcb,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 8] = [
        PolicyKind::Random,
        PolicyKind::Uncertainty,
        PolicyKind::UncertaintyEma,
        PolicyKind::EpsGreedy,
        PolicyKind::Ucb,
        PolicyKind::StaticTopk,
        PolicyKind::StaticEpsGreedy,
        PolicyKind::StaticUcb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Random => "random",
            PolicyKind::Uncertainty => "uncertainty",
            PolicyKind::UncertaintyEma => "uncertainty_ema",
            PolicyKind::EpsGreedy => "eps_greedy",
            PolicyKind::Ucb => "ucb",
            PolicyKind::StaticTopk => "static_topk",
            PolicyKind::StaticEpsGreedy => "static_eps_greedy",
            PolicyKind::StaticUcb => "static_ucb",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn is_static(self) -> bool {
        matches!(self, PolicyKind::StaticTopk | PolicyKind::StaticEpsGreedy | PolicyKind::StaticUcb)
    }

    /// Dynamic policies that score the full dataset at every checkpoint.
    pub fn needs_scoring(self) -> bool {
        !self.is_static() && self != PolicyKind::Random
    }

    pub fn uses_epsilon(self) -> bool {
        matches!(self, PolicyKind::EpsGreedy | PolicyKind::StaticEpsGreedy)
    }

    pub fn uses_c(self) -> bool {
        matches!(self, PolicyKind::Ucb | PolicyKind::StaticUcb)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub alpha: f64,
    pub epsilon: f64,
    pub c: f64,
    pub static_scores: Option<Arc<StaticScores>>,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            alpha: DEFAULT_ALPHA,
            epsilon: DEFAULT_EPSILON,
            c: DEFAULT_C,
            static_scores: None,
        }
    }

    pub fn with_static(kind: PolicyKind, scores: StaticScores) -> Self {
        Self {
            static_scores: Some(Arc::new(scores)),
            ..Self::new(kind)
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config("alpha", format!("must lie in (0, 1], got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config("epsilon", format!("must lie in [0, 1], got {}", self.epsilon)));
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(Error::config("c", format!("must be finite and >= 0, got {}", self.c)));
        }
        match (&self.static_scores, self.kind.is_static()) {
            (None, true) => Err(Error::config("static_scores", format!("required by policy {}", self.kind))),
            (Some(_), false) => Err(Error::config("static_scores", format!("not allowed for policy {}", self.kind))),
            (Some(s), true) if s.len() != n => Err(Error::DimensionMismatch {
                expected: n,
                got: s.len(),
            }),
            _ => Ok(()),
        }
    }

    /// Runs this policy for one checkpoint.
    pub fn select(&self, sb: &Scoreboard, k: usize, rng: &mut Rng) -> Result<Vec<usize>> {
        let n = sb.len();
        match self.kind {
            PolicyKind::Random => select_random(n, k, rng),
            PolicyKind::Uncertainty => select_uncertainty(sb.last_raw(), k),
            PolicyKind::UncertaintyEma => select_ema(sb, k),
            PolicyKind::EpsGreedy => select_eps_greedy(sb, k, self.epsilon, rng),
            PolicyKind::Ucb => select_ucb(sb, k, self.c),
            PolicyKind::StaticTopk | PolicyKind::StaticEpsGreedy | PolicyKind::StaticUcb => {
                select_static_hybrid(self, k, rng)
            }
        }
    }
}

/// Number of samples kept at `prune_rate`, never below one.
pub fn compute_k(n: usize, prune_rate: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&prune_rate) {
        return Err(Error::config("prune_rate", format!("must lie in [0, 1), got {prune_rate}")));
    }
    let k = ((1.0 - prune_rate) * n as f64).round() as usize;
    Ok(k.clamp(1, n.max(1)))
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    Ok(())
}

/// Descending score, then ascending index.
fn rank_order(scores: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b))
}

/// Indices of the `k` largest scores, ties to the lower index.
pub fn select_topk(scores: &[f64], k: usize) -> Result<Vec<usize>> {
    check_k(scores.len(), k)?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    let cmp = rank_order(scores);
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, &cmp);
        idx.truncate(k);
    }
    idx.sort_unstable();
    Ok(idx)
}

/// All indices ordered best-first (used where a ranking, not a set, is needed).
pub fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_unstable_by(rank_order(scores));
    idx
}

pub fn select_random(n: usize, k: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    check_k(n, k)?;
    let mut out = index::sample(rng, n, k).into_vec();
    out.sort_unstable();
    Ok(out)
}

pub fn select_uncertainty(last_raw: &[f64], k: usize) -> Result<Vec<usize>> {
    select_topk(last_raw, k)
}

pub fn select_ema(sb: &Scoreboard, k: usize) -> Result<Vec<usize>> {
    select_topk(sb.ema(), k)
}

/// Greedy share `floor((1 - eps) k)`. A tiny tolerance absorbs representation
/// error such as `(1 - 0.3) * 10 = 6.999...`.
pub fn greedy_count(k: usize, epsilon: f64) -> usize {
    (((1.0 - epsilon) * k as f64) + 1e-9).floor().min(k as f64) as usize
}

/// Top `greedy` by `scores`, the rest uniform without replacement from the complement.
fn greedy_plus_random(scores: &[f64], k: usize, greedy: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    let n = scores.len();
    check_k(n, k)?;
    let mut out = if greedy > 0 { select_topk(scores, greedy)? } else { Vec::new() };
    let explore = k - greedy;
    if explore > 0 {
        let mut taken = vec![false; n];
        out.iter().for_each(|&i| taken[i] = true);
        let rest: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
        out.extend(index::sample(rng, rest.len(), explore).into_iter().map(|j| rest[j]));
        out.sort_unstable();
    }
    Ok(out)
}

pub fn select_eps_greedy(sb: &Scoreboard, k: usize, epsilon: f64, rng: &mut Rng) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::invalid(format!("epsilon must lie in [0, 1], got {epsilon}")));
    }
    greedy_plus_random(sb.ema(), k, greedy_count(k, epsilon), rng)
}

pub fn ucb_scores(ema: &[f64], var: &[f64], c: f64) -> Vec<f64> {
    ema.iter().zip(var).map(|(m, v)| m + c * v).collect()
}

pub fn select_ucb(sb: &Scoreboard, k: usize, c: f64) -> Result<Vec<usize>> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("c must be finite and >= 0, got {c}")));
    }
    select_topk(&ucb_scores(sb.ema(), sb.var(), c), k)
}

/// Static policies: plain top-k on the trial mean, the epsilon-greedy hybrid
/// (re-drawn every call), or UCB over cross-trial mean and variance.
pub fn select_static_hybrid(spec: &PolicySpec, k: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    let scores = spec
        .static_scores
        .as_deref()
        .ok_or_else(|| Error::config("static_scores", "missing static scores"))?;
    let mean = scores.mean();
    match spec.kind {
        PolicyKind::StaticTopk => select_topk(&mean, k),
        PolicyKind::StaticEpsGreedy => greedy_plus_random(&mean, k, greedy_count(k, spec.epsilon), rng),
        PolicyKind::StaticUcb => select_topk(&ucb_scores(&mean, &scores.variance(), spec.c), k),
        other => Err(Error::invalid(format!("{other} is not a static policy"))),
    }
}
