//! Selection-frequency analysis: per-sample selection profiles, the sorted
//! cumulative selection curve, always/sometimes/never grouping and the
//! selectors for retraining experiments built from a saved run.

use std::fmt::Write as _;

use crate::driver::Selector;
use crate::error::{Error, Result};
use crate::policies::{compute_k, select_topk, PolicySpec};

pub const DEFAULT_HI: f64 = 0.9;
pub const DEFAULT_LO: f64 = 0.1;

/// Per-checkpoint selections of one run over `n` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct History {
    pub n: usize,
    pub k: usize,
    pub selections: Vec<Vec<usize>>,
}

impl History {
    pub fn parse(text: &str) -> Result<Self> {
        let mut n = None;
        let mut k = None;
        let mut selections = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let row = lineno + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    let parsed = |v: &str| {
                        v.parse::<usize>().map_err(|_| Error::Parse {
                            row,
                            msg: format!("bad header value `{v}`"),
                        })
                    };
                    match kv.split_once('=') {
                        Some(("n", v)) => n = Some(parsed(v)?),
                        Some(("k", v)) => k = Some(parsed(v)?),
                        _ => {}
                    }
                }
                continue;
            }
            let mut fields = line.split_whitespace().map(|f| {
                f.parse::<usize>().map_err(|_| Error::Parse {
                    row,
                    msg: format!("bad index `{f}`"),
                })
            });
            let index = fields.next().transpose()?.unwrap_or(0);
            if index != selections.len() {
                return Err(Error::Parse {
                    row,
                    msg: format!("expected checkpoint {}, found {index}", selections.len()),
                });
            }
            selections.push(fields.collect::<Result<Vec<_>>>()?);
        }
        let n = n.ok_or(Error::Parse {
            row: 1,
            msg: "missing `# n=` header".into(),
        })?;
        let k = k.or_else(|| selections.first().map(Vec::len)).unwrap_or(0);
        Ok(Self { n, k, selections })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# n={} k={}\n", self.n, self.k);
        for (p, sel) in self.selections.iter().enumerate() {
            let _ = write!(out, "{p}");
            for i in sel {
                let _ = write!(out, " {i}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionProfile {
    /// Share of all selection slots taken by each sample; sums to one.
    pub frac: Vec<f64>,
    /// Fraction of checkpoints at which each sample was selected.
    pub rate: Vec<f64>,
    pub checkpoints: usize,
    pub k: usize,
}

pub fn selection_profile(selections: &[Vec<usize>], n: usize) -> Result<SelectionProfile> {
    let Some(first) = selections.first() else {
        return Err(Error::invalid("history has no checkpoints"));
    };
    let k = first.len();
    if k == 0 {
        return Err(Error::invalid("history has empty selections"));
    }
    let mut counts = vec![0u64; n];
    for (p, sel) in selections.iter().enumerate() {
        if sel.len() != k {
            return Err(Error::invalid(format!(
                "ragged history: checkpoint {p} has {} ids, expected {k}",
                sel.len()
            )));
        }
        for &i in sel {
            if i >= n {
                return Err(Error::IdOutOfRange { id: i, n });
            }
            counts[i] += 1;
        }
    }
    let p = selections.len();
    let slots = (k * p) as f64;
    Ok(SelectionProfile {
        frac: counts.iter().map(|&c| c as f64 / slots).collect(),
        rate: counts.iter().map(|&c| c as f64 / p as f64).collect(),
        checkpoints: p,
        k,
    })
}

/// Slot fractions sorted from most to least selected, then prefix-summed.
pub fn cumulative_curve(profile: &SelectionProfile) -> Vec<f64> {
    let mut sorted = profile.frac.clone();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    sorted
        .into_iter()
        .map(|f| {
            acc += f;
            acc
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Groups {
    pub always: Vec<usize>,
    pub sometimes: Vec<usize>,
    pub never: Vec<usize>,
}

pub fn classify_groups(profile: &SelectionProfile, hi: f64, lo: f64) -> Result<Groups> {
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(Error::invalid(format!("thresholds must satisfy 0 <= lo < hi <= 1, got lo={lo} hi={hi}")));
    }
    let mut g = Groups::default();
    for (i, &r) in profile.rate.iter().enumerate() {
        if r >= hi {
            g.always.push(i);
        } else if r <= lo {
            g.never.push(i);
        } else {
            g.sometimes.push(i);
        }
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub position: usize,
    pub cumulative: f64,
    pub mean_frac: f64,
    pub std_frac: f64,
}

/// Averages sorted profiles across trials: mean cumulative curve plus the
/// mean and sample standard deviation of the sorted per-position fraction.
pub fn curve_over_trials(profiles: &[SelectionProfile]) -> Result<Vec<CurvePoint>> {
    let Some(first) = profiles.first() else {
        return Err(Error::invalid("no profiles"));
    };
    let n = first.frac.len();
    if profiles.iter().any(|p| p.frac.len() != n) {
        return Err(Error::invalid("profiles cover different sample counts"));
    }
    let sorted: Vec<Vec<f64>> = profiles
        .iter()
        .map(|p| {
            let mut f = p.frac.clone();
            f.sort_unstable_by(|a, b| b.total_cmp(a));
            f
        })
        .collect();
    let curves: Vec<Vec<f64>> = profiles.iter().map(cumulative_curve).collect();
    let t = profiles.len() as f64;
    Ok((0..n)
        .map(|j| {
            let mean = sorted.iter().map(|s| s[j]).sum::<f64>() / t;
            let var = if profiles.len() > 1 {
                sorted.iter().map(|s| (s[j] - mean).powi(2)).sum::<f64>() / (t - 1.0)
            } else {
                0.0
            };
            CurvePoint {
                position: j + 1,
                cumulative: curves.iter().map(|c| c[j]).sum::<f64>() / t,
                mean_frac: mean,
                std_frac: var.sqrt(),
            }
        })
        .collect())
}

pub const CURVE_HEADER: &str = "sorted_position,cumulative_fraction,mean_over_trials,std_over_trials";

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for p in points {
        let _ = writeln!(out, "{},{},{},{}", p.position, p.cumulative, p.mean_frac, p.std_frac);
    }
    out
}

pub fn groups_csv(profile: &SelectionProfile, groups: &Groups) -> String {
    let mut label = vec!["sometimes"; profile.rate.len()];
    groups.always.iter().for_each(|&i| label[i] = "always");
    groups.never.iter().for_each(|&i| label[i] = "never");
    let mut out = String::from("id,rate,frac,group\n");
    for (i, l) in label.iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{}", i, profile.rate[i], profile.frac[i], l);
    }
    out
}

pub fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    use std::collections::BTreeSet;
    let a: BTreeSet<_> = a.iter().collect();
    let b: BTreeSet<_> = b.iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RetrainMode {
    /// Fresh dynamic training with the original policy.
    Original,
    /// Top-k by the final-checkpoint EMA, fixed for every checkpoint.
    StaticSometimes,
    /// The always set every checkpoint, remaining budget uniform per checkpoint.
    RandomSometimes,
}

impl RetrainMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "original" => Some(RetrainMode::Original),
            "static_sometimes" => Some(RetrainMode::StaticSometimes),
            "random_sometimes" => Some(RetrainMode::RandomSometimes),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RetrainMode::Original => "original",
            RetrainMode::StaticSometimes => "static_sometimes",
            RetrainMode::RandomSometimes => "random_sometimes",
        }
    }
}

/// Builds the checkpoint selector for a retraining experiment from a saved
/// history and the final-checkpoint scores of that run.
pub fn retrain_selector(
    history: &History,
    final_scores: &[f64],
    prune_rate: f64,
    mode: RetrainMode,
    original: &PolicySpec,
    hi: f64,
) -> Result<Selector> {
    if final_scores.len() != history.n {
        return Err(Error::DimensionMismatch {
            expected: history.n,
            got: final_scores.len(),
        });
    }
    let k = compute_k(history.n, prune_rate)?;
    match mode {
        RetrainMode::Original => Ok(Selector::Policy(original.clone())),
        RetrainMode::StaticSometimes => Ok(Selector::Fixed(select_topk(final_scores, k)?)),
        RetrainMode::RandomSometimes => {
            let profile = selection_profile(&history.selections, history.n)?;
            let always = classify_groups(&profile, hi, 0.0)?.always;
            if always.len() > k {
                return Err(Error::invalid(format!(
                    "always set has {} samples but the budget is k = {k}; increase k (lower prune_rate)",
                    always.len()
                )));
            }
            Ok(Selector::AlwaysPlusRandom(always))
        }
    }
}
