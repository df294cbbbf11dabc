//! Experiment configuration files.
//!
//! The format is line oriented:
//!
//! ```text
//! # comment
//! [section]
//! key = value
//! list_key = 0.3, 0.5, 0.7
//! ```
//!
//! Sections are `dataset`, `learner`, `run`, `policy` and `sweep`. Required
//! keys are `dataset.kind`, `run.epochs`, `run.prune_period`,
//! `run.prune_rate` and `policy.kind`; everything else has a default. Unknown
//! sections and keys are rejected, with a suggestion when a known key is
//! close. Relative paths resolve against the config file's directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::dataset::{self, BlobMix, Dataset};
use crate::driver::sweep::SweepGrid;
use crate::driver::RunConfig;
use crate::error::{Error, Result};
use crate::learner::Arch;
use crate::policies::{compute_k, PolicyKind, StaticMethod, StaticScores};
use crate::rng;
use crate::scoreboard::VarianceRule;

const KEYS: &[(&str, &[&str])] = &[
    (
        "dataset",
        &[
            "kind",
            "seed",
            "n_per_class",
            "classes",
            "dim",
            "spread",
            "easy_frac",
            "easy_spread",
            "hard_frac",
            "hard_shift_min",
            "hard_shift_max",
            "test_n_per_class",
            "path",
            "test_path",
            "num_classes",
            "imbalance",
            "downsample",
        ],
    ),
    (
        "learner",
        &[
            "arch",
            "hidden",
            "lr",
            "milestones",
            "lr_factor",
            "momentum",
            "nesterov",
            "weight_decay",
            "batch_size",
        ],
    ),
    ("run", &["epochs", "prune_period", "prune_rate", "seed", "variance"]),
    (
        "policy",
        &["kind", "alpha", "epsilon", "c", "static_method", "static_trials", "static_epochs", "static_scores"],
    ),
    ("sweep", &["prune_rates", "policies", "prune_periods", "epsilons", "cs", "seeds"]),
];

const REQUIRED: &[(&str, &str)] = &[
    ("dataset", "kind"),
    ("run", "epochs"),
    ("run", "prune_period"),
    ("run", "prune_rate"),
    ("policy", "kind"),
];

#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSource {
    Blobs {
        n_per_class: usize,
        classes: usize,
        dim: usize,
        spread: f64,
    },
    BlobMix(BlobMix),
    Csv {
        path: PathBuf,
        test_path: PathBuf,
        num_classes: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub source: DatasetSource,
    /// Root seed for generated data; the test split uses a derived stream.
    pub seed: u64,
    /// Held-out rows per class for generated sources.
    pub test_n_per_class: usize,
    pub imbalance: Option<Vec<f64>>,
    pub downsample: Option<usize>,
}

impl DatasetSpec {
    /// Builds `(train, test)`. Imbalance and downsampling touch the training split only.
    pub fn load(&self) -> Result<(Dataset, Dataset)> {
        let test_seed = rng::derive_seed(self.seed, "test", 0);
        let (mut train, test) = match &self.source {
            DatasetSource::Blobs {
                n_per_class,
                classes,
                dim,
                spread,
            } => (
                dataset::gen_blobs(*n_per_class, *classes, *dim, *spread, self.seed)?,
                dataset::gen_blobs(self.test_n_per_class, *classes, *dim, *spread, test_seed)?,
            ),
            DatasetSource::BlobMix(mix) => {
                let test_mix = BlobMix {
                    n_per_class: self.test_n_per_class,
                    ..mix.clone()
                };
                (mix.generate(self.seed)?.0, test_mix.generate(test_seed)?.0)
            }
            DatasetSource::Csv {
                path,
                test_path,
                num_classes,
            } => {
                let train = dataset::load_csv(path, *num_classes)?;
                let test = dataset::load_csv(test_path, Some(train.num_classes()))?;
                if test.dim() != train.dim() {
                    return Err(Error::config("test_path", format!("has {} features, training set has {}", test.dim(), train.dim())));
                }
                (train, test)
            }
        };
        if let Some(rates) = &self.imbalance {
            train = dataset::apply_imbalance(&train, rates, rng::derive_seed(self.seed, "imbalance", 0))
                .map_err(|e| Error::config("imbalance", e.to_string()))?;
        }
        if let Some(per_class) = self.downsample {
            train = dataset::downsample(&train, per_class, rng::derive_seed(self.seed, "downsample", 0))
                .map_err(|e| Error::config("downsample", e.to_string()))?;
        }
        Ok((train, test))
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SweepSpec {
    pub prune_rates: Option<Vec<f64>>,
    pub policies: Option<Vec<PolicyKind>>,
    pub prune_periods: Option<Vec<usize>>,
    pub epsilons: Option<Vec<f64>>,
    pub cs: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub run: RunConfig,
    pub static_method: StaticMethod,
    /// Precomputed offline scores; overrides `static_method`.
    pub static_scores: Option<PathBuf>,
    pub sweep: SweepSpec,
}

impl ExperimentConfig {
    /// Sweep grid with every unset dimension pinned to the run's value.
    pub fn grid(&self) -> SweepGrid {
        let mut g = SweepGrid::from_base(self.run.clone());
        let s = &self.sweep;
        if let Some(v) = &s.prune_rates {
            g.prune_rates = v.clone();
        }
        if let Some(v) = &s.policies {
            g.policies = v.clone();
        }
        if let Some(v) = &s.prune_periods {
            g.prune_periods = v.clone();
        }
        if let Some(v) = &s.epsilons {
            g.epsilons = v.clone();
        }
        if let Some(v) = &s.cs {
            g.cs = v.clone();
        }
        if let Some(v) = &s.seeds {
            g.seeds = v.clone();
        }
        g.static_method = Some(self.static_method);
        g
    }

    /// Offline scores for static policies: loaded from `static_scores` when
    /// set, otherwise computed with `static_method` from `seed`.
    pub fn static_scores_for(&self, ds: &Dataset, seed: u64) -> Result<StaticScores> {
        let scores = match &self.static_scores {
            Some(path) => StaticScores::load(path)?,
            None => self.static_method.compute(ds, &self.run.learner, seed)?,
        };
        if scores.len() != ds.len() {
            return Err(Error::config(
                "static_scores",
                format!("{} scores for a training set of {} rows", scores.len(), ds.len()),
            ));
        }
        Ok(scores)
    }

    /// The run configuration with offline scores attached when the policy needs them.
    pub fn resolved_run(&self, ds: &Dataset) -> Result<RunConfig> {
        let mut run = self.run.clone();
        if run.policy.kind.is_static() {
            run.policy.static_scores = Some(Arc::new(self.static_scores_for(ds, run.seed)?));
        }
        Ok(run)
    }

    /// The sweep grid, sharing preloaded offline scores when a score file is configured.
    pub fn resolved_grid(&self, ds: &Dataset) -> Result<SweepGrid> {
        let mut g = self.grid();
        if self.static_scores.is_some() {
            g.base.policy.static_scores = Some(Arc::new(self.static_scores_for(ds, self.run.seed)?));
        }
        Ok(g)
    }
}

struct Entry {
    value: String,
    line: usize,
}

type Table = BTreeMap<(String, String), Entry>;

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

pub fn parse_config(text: &str, base_dir: &Path) -> Result<ExperimentConfig> {
    let mut table = tokenize(text)?;
    for (section, key) in REQUIRED {
        if !table.contains_key(&(section.to_string(), key.to_string())) {
            return Err(Error::config(*key, format!("missing required key in [{section}]")));
        }
    }
    let mut t = Reader { table: &mut table };
    let cfg = build(&mut t, base_dir)?;
    check(&cfg)?;
    Ok(cfg)
}

fn tokenize(text: &str) -> Result<Table> {
    let mut table = Table::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if !KEYS.iter().any(|(s, _)| *s == name) {
                let known: Vec<&str> = KEYS.iter().map(|(s, _)| *s).collect();
                return Err(Error::config(name, unknown_msg("section", name, &known)));
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                row: line_no,
                msg: format!("expected `key = value`, found `{line}`"),
            });
        };
        let key = key.trim();
        let Some(sec) = &section else {
            return Err(Error::config(key, format!("line {line_no}: key outside of any [section]")));
        };
        let allowed = KEYS.iter().find(|(s, _)| s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(Error::config(key, unknown_msg(&format!("key in [{sec}]"), key, allowed)));
        }
        let entry = Entry {
            value: value.trim().to_string(),
            line: line_no,
        };
        if table.insert((sec.clone(), key.to_string()), entry).is_some() {
            return Err(Error::config(key, format!("line {line_no}: duplicate key")));
        }
    }
    Ok(table)
}

fn unknown_msg(what: &str, name: &str, known: &[&str]) -> String {
    let best = known
        .iter()
        .map(|k| (strsim::levenshtein(name, k), *k))
        .min()
        .filter(|(d, k)| *d <= 2.max(k.len() / 3));
    match best {
        Some((_, k)) => format!("unknown {what}; did you mean `{k}`?"),
        None => format!("unknown {what}; expected one of: {}", known.join(", ")),
    }
}

struct Reader<'a> {
    table: &'a mut Table,
}

impl Reader<'_> {
    fn raw(&mut self, section: &str, key: &str) -> Option<Entry> {
        self.table.remove(&(section.to_string(), key.to_string()))
    }

    fn get<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>> {
        self.raw(section, key).map(|e| parse_value(key, &e.value, e.line)).transpose()
    }

    fn or<T: FromStr>(&mut self, section: &str, key: &str, default: T) -> Result<T> {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    fn list<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<Vec<T>>> {
        self.raw(section, key)
            .map(|e| {
                e.value
                    .split(',')
                    .map(str::trim)
                    .filter(|v| !v.is_empty())
                    .map(|v| parse_value(key, v.trim(), e.line))
                    .collect::<Result<Vec<T>>>()
            })
            .transpose()
    }

    fn word<T>(&mut self, section: &str, key: &str, parse: impl Fn(&str) -> Option<T>, choices: &str) -> Result<Option<T>> {
        self.raw(section, key)
            .map(|e| {
                parse(&e.value).ok_or_else(|| {
                    Error::config(key, format!("line {}: `{}` is not one of {choices}", e.line, e.value))
                })
            })
            .transpose()
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("line {line}: cannot parse `{value}` as {}", std::any::type_name::<T>())))
}

fn policy_choices() -> String {
    PolicyKind::ALL.iter().map(|k| k.name()).collect::<Vec<_>>().join("|")
}

fn build(t: &mut Reader, base: &Path) -> Result<ExperimentConfig> {
    let resolve = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };

    let kind: String = t.get("dataset", "kind")?.unwrap_or_default();
    let mix = BlobMix::default();
    let n_per_class = t.or("dataset", "n_per_class", mix.n_per_class)?;
    let classes = t.or("dataset", "classes", mix.classes)?;
    let dim = t.or("dataset", "dim", mix.dim)?;
    let spread = t.or("dataset", "spread", mix.spread)?;
    let source = match kind.as_str() {
        "blobs" => DatasetSource::Blobs {
            n_per_class,
            classes,
            dim,
            spread,
        },
        "blobmix" => DatasetSource::BlobMix(BlobMix {
            n_per_class,
            classes,
            dim,
            spread,
            easy_frac: t.or("dataset", "easy_frac", mix.easy_frac)?,
            easy_spread: t.or("dataset", "easy_spread", mix.easy_spread)?,
            hard_frac: t.or("dataset", "hard_frac", mix.hard_frac)?,
            hard_shift: (
                t.or("dataset", "hard_shift_min", mix.hard_shift.0)?,
                t.or("dataset", "hard_shift_max", mix.hard_shift.1)?,
            ),
        }),
        "csv" => DatasetSource::Csv {
            path: resolve(
                t.get::<PathBuf>("dataset", "path")?
                    .ok_or_else(|| Error::config("path", "required when dataset.kind = csv"))?,
            ),
            test_path: resolve(
                t.get::<PathBuf>("dataset", "test_path")?
                    .ok_or_else(|| Error::config("test_path", "required when dataset.kind = csv"))?,
            ),
            num_classes: t.get("dataset", "num_classes")?,
        },
        other => return Err(Error::config("kind", format!("dataset kind `{other}` is not one of blobs|blobmix|csv"))),
    };
    let dataset = DatasetSpec {
        seed: t.or("dataset", "seed", 0)?,
        test_n_per_class: t.or("dataset", "test_n_per_class", (n_per_class / 4).max(1))?,
        imbalance: t.list("dataset", "imbalance")?,
        downsample: t.get("dataset", "downsample")?,
        source,
    };

    let mut run = RunConfig::default();
    let l = &mut run.learner;
    let arch = t.or("learner", "arch", "softmax".to_string())?;
    let hidden = t.get::<usize>("learner", "hidden")?;
    l.arch = match (arch.as_str(), hidden) {
        ("softmax", None) => Arch::SoftmaxRegression,
        ("softmax", Some(_)) => return Err(Error::config("hidden", "only valid with arch = mlp")),
        ("mlp", h) => Arch::Mlp { hidden: h.unwrap_or(32) },
        (other, _) => return Err(Error::config("arch", format!("`{other}` is not one of softmax|mlp"))),
    };
    l.schedule.lr0 = t.or("learner", "lr", l.schedule.lr0)?;
    if let Some(m) = t.list("learner", "milestones")? {
        l.schedule.milestones = m;
    }
    l.schedule.factor = t.or("learner", "lr_factor", l.schedule.factor)?;
    l.hyper.momentum = t.or("learner", "momentum", l.hyper.momentum)?;
    l.hyper.nesterov = t.or("learner", "nesterov", l.hyper.nesterov)?;
    l.hyper.weight_decay = t.or("learner", "weight_decay", l.hyper.weight_decay)?;
    l.hyper.batch_size = t.or("learner", "batch_size", l.hyper.batch_size)?;

    run.epochs = t.or("run", "epochs", run.epochs)?;
    run.prune_period = t.or("run", "prune_period", run.prune_period)?;
    run.prune_rate = t.or("run", "prune_rate", run.prune_rate)?;
    run.seed = t.or("run", "seed", run.seed)?;
    if let Some(v) = t.word("run", "variance", VarianceRule::parse, "literal|welford")? {
        run.variance = v;
    }

    let choices = policy_choices();
    run.policy.kind = t.word("policy", "kind", PolicyKind::parse, &choices)?.unwrap_or(run.policy.kind);
    run.policy.alpha = t.or("policy", "alpha", run.policy.alpha)?;
    run.policy.epsilon = t.or("policy", "epsilon", run.policy.epsilon)?;
    run.policy.c = t.or("policy", "c", run.policy.c)?;
    let method = t.or("policy", "static_method", "el2n".to_string())?;
    let trials = t.or("policy", "static_trials", 10)?;
    let epochs = t.or("policy", "static_epochs", 20)?;
    let static_method = match method.as_str() {
        "el2n" => StaticMethod::El2n { trials, epochs },
        "forget" => StaticMethod::Forget { epochs },
        other => return Err(Error::config("static_method", format!("`{other}` is not one of el2n|forget"))),
    };
    let static_scores = t.get::<PathBuf>("policy", "static_scores")?.map(resolve);

    let sweep = SweepSpec {
        prune_rates: t.list("sweep", "prune_rates")?,
        policies: t
            .list::<String>("sweep", "policies")?
            .map(|v| {
                v.iter()
                    .map(|s| {
                        PolicyKind::parse(s).ok_or_else(|| Error::config("policies", format!("`{s}` is not one of {choices}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?,
        prune_periods: t.list("sweep", "prune_periods")?,
        epsilons: t.list("sweep", "epsilons")?,
        cs: t.list("sweep", "cs")?,
        seeds: t.list("sweep", "seeds")?,
    };

    if let Some(((section, key), e)) = t.table.iter().next() {
        return Err(Error::config(key.as_str(), format!("line {}: not valid for this [{section}] configuration", e.line)));
    }
    Ok(ExperimentConfig {
        dataset,
        run,
        static_method,
        static_scores,
        sweep,
    })
}

/// Checks every constraint that does not need the data itself.
fn check(cfg: &ExperimentConfig) -> Result<()> {
    let run = &cfg.run;
    if run.epochs == 0 {
        return Err(Error::config("epochs", "must be at least 1"));
    }
    let periods = cfg.sweep.prune_periods.clone().unwrap_or_else(|| vec![run.prune_period]);
    for tp in periods {
        let probe = RunConfig {
            prune_period: tp,
            ..run.clone()
        };
        if tp == 0 || !run.epochs.is_multiple_of(tp) {
            return probe.validate(1);
        }
    }
    for &rate in cfg.sweep.prune_rates.as_deref().unwrap_or(&[run.prune_rate]) {
        compute_k(1, rate)?;
    }
    let mut probe = run.policy.clone();
    probe.kind = PolicyKind::UncertaintyEma;
    probe.static_scores = None;
    for &e in cfg.sweep.epsilons.as_deref().unwrap_or(&[probe.epsilon]) {
        for &c in cfg.sweep.cs.as_deref().unwrap_or(&[probe.c]) {
            probe.epsilon = e;
            probe.c = c;
            probe.validate(1)?;
        }
    }
    run.learner.validate().map_err(|e| Error::config("learner", e.to_string()))?;
    match cfg.static_method {
        StaticMethod::El2n { trials: 0, .. } => return Err(Error::config("static_trials", "must be at least 1")),
        StaticMethod::El2n { epochs: 0, .. } | StaticMethod::Forget { epochs: 0 } => {
            return Err(Error::config("static_epochs", "must be at least 1"))
        }
        _ => {}
    }
    let ds = &cfg.dataset;
    match &ds.source {
        DatasetSource::Blobs { spread, .. } | DatasetSource::BlobMix(BlobMix { spread, .. }) if !(*spread >= 0.0) => {
            return Err(Error::config("spread", "must be >= 0"))
        }
        _ => {}
    }
    if ds.test_n_per_class == 0 {
        return Err(Error::config("test_n_per_class", "must be at least 1"));
    }
    if let Some(rates) = &ds.imbalance {
        if let Some(r) = rates.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
            return Err(Error::config("imbalance", format!("rate {r} outside (0, 1]")));
        }
    }
    Ok(())
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Writes a config that [`parse_config`] maps back to `cfg`.
pub fn emit_config(cfg: &ExperimentConfig) -> String {
    let mut o = String::new();
    let ds = &cfg.dataset;
    o.push_str("[dataset]\n");
    match &ds.source {
        DatasetSource::Blobs {
            n_per_class,
            classes,
            dim,
            spread,
        } => {
            let _ = writeln!(o, "kind = blobs\nn_per_class = {n_per_class}\nclasses = {classes}\ndim = {dim}\nspread = {spread}");
        }
        DatasetSource::BlobMix(m) => {
            let _ = writeln!(
                o,
                "kind = blobmix\nn_per_class = {}\nclasses = {}\ndim = {}\nspread = {}\neasy_frac = {}\neasy_spread = {}\nhard_frac = {}\nhard_shift_min = {}\nhard_shift_max = {}",
                m.n_per_class, m.classes, m.dim, m.spread, m.easy_frac, m.easy_spread, m.hard_frac, m.hard_shift.0, m.hard_shift.1
            );
        }
        DatasetSource::Csv {
            path,
            test_path,
            num_classes,
        } => {
            let _ = writeln!(o, "kind = csv\npath = {}\ntest_path = {}", path.display(), test_path.display());
            if let Some(c) = num_classes {
                let _ = writeln!(o, "num_classes = {c}");
            }
        }
    }
    let _ = writeln!(o, "seed = {}\ntest_n_per_class = {}", ds.seed, ds.test_n_per_class);
    if let Some(r) = &ds.imbalance {
        let _ = writeln!(o, "imbalance = {}", join(r));
    }
    if let Some(d) = ds.downsample {
        let _ = writeln!(o, "downsample = {d}");
    }

    let run = &cfg.run;
    let l = &run.learner;
    o.push_str("\n[learner]\n");
    match l.arch {
        Arch::SoftmaxRegression => o.push_str("arch = softmax\n"),
        Arch::Mlp { hidden } => {
            let _ = writeln!(o, "arch = mlp\nhidden = {hidden}");
        }
    }
    let _ = writeln!(
        o,
        "lr = {}\nmilestones = {}\nlr_factor = {}\nmomentum = {}\nnesterov = {}\nweight_decay = {}\nbatch_size = {}",
        l.schedule.lr0,
        join(&l.schedule.milestones),
        l.schedule.factor,
        l.hyper.momentum,
        l.hyper.nesterov,
        l.hyper.weight_decay,
        l.hyper.batch_size
    );
    let _ = writeln!(
        o,
        "\n[run]\nepochs = {}\nprune_period = {}\nprune_rate = {}\nseed = {}\nvariance = {}",
        run.epochs,
        run.prune_period,
        run.prune_rate,
        run.seed,
        run.variance.name()
    );
    let p = &run.policy;
    let _ = writeln!(o, "\n[policy]\nkind = {}\nalpha = {}\nepsilon = {}\nc = {}", p.kind.name(), p.alpha, p.epsilon, p.c);
    match cfg.static_method {
        StaticMethod::El2n { trials, epochs } => {
            let _ = writeln!(o, "static_method = el2n\nstatic_trials = {trials}\nstatic_epochs = {epochs}");
        }
        StaticMethod::Forget { epochs } => {
            let _ = writeln!(o, "static_method = forget\nstatic_epochs = {epochs}");
        }
    }
    if let Some(s) = &cfg.static_scores {
        let _ = writeln!(o, "static_scores = {}", s.display());
    }

    let s = &cfg.sweep;
    let mut sweep = String::new();
    if let Some(v) = &s.prune_rates {
        let _ = writeln!(sweep, "prune_rates = {}", join(v));
    }
    if let Some(v) = &s.policies {
        let _ = writeln!(sweep, "policies = {}", join(&v.iter().map(|k| k.name()).collect::<Vec<_>>()));
    }
    if let Some(v) = &s.prune_periods {
        let _ = writeln!(sweep, "prune_periods = {}", join(v));
    }
    if let Some(v) = &s.epsilons {
        let _ = writeln!(sweep, "epsilons = {}", join(v));
    }
    if let Some(v) = &s.cs {
        let _ = writeln!(sweep, "cs = {}", join(v));
    }
    if let Some(v) = &s.seeds {
        let _ = writeln!(sweep, "seeds = {}", join(v));
    }
    if !sweep.is_empty() {
        let _ = write!(o, "\n[sweep]\n{sweep}");
    }
    o
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = "
[dataset]
kind = blobs
[run]
epochs = 20
prune_period = 5
prune_rate = 0.5
[policy]
kind = uncertainty_ema
";

    fn parse(text: &str) -> Result<ExperimentConfig> {
        parse_config(text, Path::new("/data"))
    }

    fn key_of(e: Error) -> String {
        match e {
            Error::Config { key, .. } => key,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn minimal_fills_defaults() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.run.policy.alpha, 0.8);
        assert_eq!(cfg.run.policy.epsilon, 0.1);
        assert_eq!(cfg.run.policy.c, 1.0);
        assert_eq!(cfg.run.learner.schedule.lr0, 0.1);
        assert_eq!(cfg.run.learner.hyper.batch_size, 128);
        assert_eq!(cfg.run.variance, VarianceRule::Literal);
        assert_eq!(cfg.grid().points().unwrap().len(), 1);
    }

    #[test]
    fn constraint_errors_name_the_key() {
        let e = parse(&MINIMAL.replace("prune_rate = 0.5", "prune_rate = 1.2")).unwrap_err();
        assert_eq!(key_of(e), "prune_rate");
        let e = parse(&MINIMAL.replace("prune_period = 5", "prune_period = 3")).unwrap_err();
        assert_eq!(key_of(e), "prune_period");
        let e = parse(&MINIMAL.replace("[run]", "[run]\nseed = x")).unwrap_err();
        assert_eq!(key_of(e), "seed");
        let e = parse(&MINIMAL.replace("prune_rate = 0.5\n", "")).unwrap_err();
        assert_eq!(key_of(e), "prune_rate");
        let e = parse(&MINIMAL.replace("uncertainty_ema", "greedy")).unwrap_err();
        assert_eq!(key_of(e), "kind");
        let e = parse(&format!("{MINIMAL}epsilon = 2\n")).unwrap_err();
        assert_eq!(key_of(e), "epsilon");
    }

    #[test]
    fn unknown_key_suggests() {
        let e = parse(&format!("{MINIMAL}alpa = 0.5\n")).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("alpa") && msg.contains("did you mean `alpha`"), "{msg}");
        let e = parse(&format!("{MINIMAL}[sweeps]\n")).unwrap_err();
        assert!(e.to_string().contains("did you mean `sweep`"));
        assert!(parse(&format!("{MINIMAL}zzzzzzzz = 1\n")).unwrap_err().to_string().contains("expected one of"));
        let e = parse(&format!("{MINIMAL}kind = random\n")).unwrap_err();
        assert!(e.to_string().contains("duplicate"));
    }

    #[test]
    fn csv_paths_resolve_against_config_dir() {
        let text = MINIMAL.replace("kind = blobs", "kind = csv\npath = train.csv\ntest_path = /abs/test.csv");
        let cfg = parse(&text).unwrap();
        match cfg.dataset.source {
            DatasetSource::Csv { path, test_path, .. } => {
                assert_eq!(path, Path::new("/data/train.csv"));
                assert_eq!(test_path, Path::new("/abs/test.csv"));
            }
            other => panic!("{other:?}"),
        }
        let e = parse(&MINIMAL.replace("kind = blobs", "kind = csv")).unwrap_err();
        assert_eq!(key_of(e), "path");
        let e = parse(&MINIMAL.replace("kind = blobs", "kind = blobs\npath = x.csv")).unwrap_err();
        assert_eq!(key_of(e), "path");
    }

    #[test]
    fn sweep_section() {
        let text = format!("{MINIMAL}[sweep]\nprune_rates = 0.3, 0.5, 0.7\npolicies = random, ucb\ncs = 0.5, 1, 2\nseeds = 1, 2\n");
        let cfg = parse(&text).unwrap();
        assert_eq!(cfg.grid().points().unwrap().len(), 3 * 2 + 3 * 3 * 2);
        let bad = format!("{MINIMAL}[sweep]\nprune_periods = 5, 7\n");
        assert_eq!(key_of(parse(&bad).unwrap_err()), "prune_period");
    }

    #[test]
    fn dataset_loads() {
        let text = MINIMAL.replace("kind = blobs", "kind = blobmix\nn_per_class = 20\nclasses = 3\ndim = 4\nimbalance = 0.5, 1, 1");
        let cfg = parse(&text).unwrap();
        let (train, test) = cfg.dataset.load().unwrap();
        assert_eq!(train.class_counts(), &[10, 20, 20]);
        assert_eq!(test.len(), 15);
        assert_eq!(cfg.dataset.load().unwrap().0, train);
    }

    #[test]
    fn echo_round_trip_full() {
        let text = "
[dataset]
kind = csv
path = a.csv
test_path = b.csv
num_classes = 3
downsample = 4
[learner]
arch = mlp
hidden = 7
milestones = 3, 9
nesterov = false
[run]
epochs = 20
prune_period = 5
prune_rate = 0.5
seed = 99
variance = welford
[policy]
kind = static_ucb
static_method = forget
static_scores = s.csv
[sweep]
seeds = 1, 2
policies = ucb, random
";
        let cfg = parse(text).unwrap();
        assert_eq!(cfg.run.learner.arch, Arch::Mlp { hidden: 7 });
        assert_eq!(cfg.static_scores.as_deref(), Some(Path::new("/data/s.csv")));
        assert_eq!(parse(&emit_config(&cfg)).unwrap(), cfg);
    }

    fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
        (
            (1usize..50, 1usize..6, 1usize..6, 0.0f64..2.0, any::<u64>()),
            (0usize..4, 1usize..5, 0.0f64..0.99, 0u64..1000),
            (0usize..PolicyKind::ALL.len(), 0.01f64..=1.0, 0.0f64..=1.0, 0.0f64..10.0),
            (1e-4f64..1.0, prop::collection::vec(0usize..100, 0..4), 0.0f64..0.99, any::<bool>(), 1usize..300),
            prop::option::of(prop::collection::vec(0.0f64..0.99, 1..4)),
        )
            .prop_map(|(d, r, p, l, rates)| {
                let mut run = RunConfig::default();
                run.prune_period = r.1;
                run.epochs = r.1 * (r.0 + 1);
                run.prune_rate = r.2;
                run.seed = r.3;
                run.policy.kind = PolicyKind::ALL[p.0];
                run.policy.alpha = p.1;
                run.policy.epsilon = p.2;
                run.policy.c = p.3;
                run.learner.schedule.lr0 = l.0;
                run.learner.schedule.milestones = l.1;
                run.learner.hyper.momentum = l.2;
                run.learner.hyper.nesterov = l.3;
                run.learner.hyper.batch_size = l.4;
                ExperimentConfig {
                    dataset: DatasetSpec {
                        source: DatasetSource::Blobs {
                            n_per_class: d.0,
                            classes: d.1,
                            dim: d.2,
                            spread: d.3,
                        },
                        seed: d.4,
                        test_n_per_class: d.0,
                        imbalance: None,
                        downsample: None,
                    },
                    run,
                    static_method: StaticMethod::El2n { trials: 3, epochs: 2 },
                    static_scores: None,
                    sweep: SweepSpec {
                        prune_rates: rates,
                        ..SweepSpec::default()
                    },
                }
            })
    }

    proptest! {
        #[test]
        fn emit_parse_round_trip(cfg in arb_config()) {
            let text = emit_config(&cfg);
            prop_assert_eq!(parse(&text).unwrap(), cfg);
        }
    }
}
