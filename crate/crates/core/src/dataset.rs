//! Labeled datasets: synthetic Gaussian blobs, CSV ingestion, and the
//! class-imbalance / downsampling corruptions used to stress pruning.

use std::path::Path;

use rand::seq::index;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng;

/// Row-major feature matrix with integer labels.
///
/// `ids` are stable sample identifiers: subsets produced by
/// [`apply_imbalance`] and [`downsample`] keep the ids of the rows they retain.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
    class_counts: Vec<usize>,
    ids: Vec<usize>,
}

impl Dataset {
    pub fn new(features: Vec<f64>, dim: usize, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let ids = (0..labels.len()).collect();
        Self::with_ids(features, dim, labels, num_classes, ids)
    }

    pub fn with_ids(
        features: Vec<f64>,
        dim: usize,
        labels: Vec<usize>,
        num_classes: usize,
        ids: Vec<usize>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("feature dimension must be at least 1"));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * dim,
                got: features.len(),
            });
        }
        if ids.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                got: ids.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        let mut class_counts = vec![0; num_classes];
        for (row, &y) in labels.iter().enumerate() {
            if y >= num_classes {
                return Err(Error::LabelOutOfRange {
                    row: row + 1,
                    label: y,
                    classes: num_classes,
                });
            }
            class_counts[y] += 1;
        }
        Ok(Self {
            features,
            dim,
            labels,
            class_counts,
            ids,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.class_counts.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    /// Rows at `positions` (in the given order), keeping ids and class arity.
    pub fn subset(&self, positions: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(positions.len() * self.dim);
        let mut labels = Vec::with_capacity(positions.len());
        let mut ids = Vec::with_capacity(positions.len());
        let mut class_counts = vec![0; self.num_classes()];
        for &p in positions {
            features.extend_from_slice(self.row(p));
            labels.push(self.labels[p]);
            ids.push(self.ids[p]);
            class_counts[self.labels[p]] += 1;
        }
        Dataset {
            features,
            dim: self.dim,
            labels,
            class_counts,
            ids,
        }
    }

    fn positions_by_class(&self) -> Vec<Vec<usize>> {
        let mut by_class = vec![Vec::new(); self.num_classes()];
        for (i, &y) in self.labels.iter().enumerate() {
            by_class[y].push(i);
        }
        by_class
    }

    /// Keeps `keep[c]` uniformly chosen rows of every class `c`, in original order.
    fn thin_classes(&self, keep: &[usize], seed: u64) -> Dataset {
        let mut rng = rng::from_seed(seed);
        let mut kept = Vec::new();
        for (c, members) in self.positions_by_class().into_iter().enumerate() {
            let chosen = index::sample(&mut rng, members.len(), keep[c]);
            kept.extend(chosen.into_iter().map(|j| members[j]));
        }
        kept.sort_unstable();
        self.subset(&kept)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for i in 0..self.len() {
            for v in self.row(i) {
                out.push_str(&v.to_string());
                out.push(',');
            }
            out.push_str(&self.labels[i].to_string());
            out.push('\n');
        }
        out
    }
}

/// Class centres: centre `c` is `(1 + c / d)` on axis `c mod d`, zero elsewhere.
/// Any two centres are at distance at least one.
pub fn blob_center(class: usize, dim: usize) -> Vec<f64> {
    let mut centre = vec![0.0; dim];
    centre[class % dim] = 1.0 + (class / dim) as f64;
    centre
}

fn check_blob_args(n_per_class: usize, classes: usize, dim: usize, spread: f64) -> Result<()> {
    if n_per_class == 0 {
        return Err(Error::invalid("n_per_class must be at least 1"));
    }
    if classes < 2 {
        return Err(Error::invalid("need at least 2 classes"));
    }
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(Error::invalid(format!("spread must be positive, got {spread}")));
    }
    Ok(())
}

/// Isotropic Gaussian clusters, `n_per_class` points per class, grouped by class.
pub fn gen_blobs(n_per_class: usize, classes: usize, dim: usize, spread: f64, seed: u64) -> Result<Dataset> {
    check_blob_args(n_per_class, classes, dim, spread)?;
    let mut rng = rng::from_seed(seed);
    let mut features = Vec::with_capacity(n_per_class * classes * dim);
    let mut labels = Vec::with_capacity(n_per_class * classes);
    for c in 0..classes {
        let centre = blob_center(c, dim);
        for _ in 0..n_per_class {
            for &m in &centre {
                let z: f64 = rng.sample(StandardNormal);
                features.push(m + spread * z);
            }
            labels.push(c);
        }
    }
    Dataset::new(features, dim, labels, classes)
}

/// Which sub-population a generated point came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointKind {
    Easy,
    Regular,
    Hard,
}

/// Blobs with engineered difficulty: a tight "easy" core per class and a band
/// of "hard" points placed past the midpoint toward another class while keeping
/// their own label.
#[derive(Clone, Debug, PartialEq)]
pub struct BlobMix {
    pub n_per_class: usize,
    pub classes: usize,
    pub dim: usize,
    pub spread: f64,
    pub easy_frac: f64,
    pub easy_spread: f64,
    pub hard_frac: f64,
    /// Range of the interpolation weight toward the other class's centre.
    pub hard_shift: (f64, f64),
}

impl Default for BlobMix {
    fn default() -> Self {
        Self {
            n_per_class: 500,
            classes: 4,
            dim: 16,
            spread: 0.55,
            easy_frac: 0.25,
            easy_spread: 0.05,
            hard_frac: 0.10,
            hard_shift: (0.6, 0.9),
        }
    }
}

impl BlobMix {
    pub fn generate(&self, seed: u64) -> Result<(Dataset, Vec<PointKind>)> {
        check_blob_args(self.n_per_class, self.classes, self.dim, self.spread)?;
        for (name, f) in [("easy_frac", self.easy_frac), ("hard_frac", self.hard_frac)] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1], got {f}")));
            }
        }
        if self.easy_frac + self.hard_frac > 1.0 {
            return Err(Error::invalid("easy_frac + hard_frac exceeds 1"));
        }
        if !(self.easy_spread > 0.0) {
            return Err(Error::invalid("easy_spread must be positive"));
        }
        let (lo, hi) = self.hard_shift;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::invalid("hard_shift must satisfy 0 <= lo <= hi <= 1"));
        }

        let n_easy = round_half_up(self.easy_frac * self.n_per_class as f64);
        let n_hard = round_half_up(self.hard_frac * self.n_per_class as f64);
        let centres: Vec<Vec<f64>> = (0..self.classes).map(|c| blob_center(c, self.dim)).collect();

        let mut rng = rng::from_seed(seed);
        let n = self.n_per_class * self.classes;
        let mut features = Vec::with_capacity(n * self.dim);
        let mut labels = Vec::with_capacity(n);
        let mut kinds = Vec::with_capacity(n);
        for c in 0..self.classes {
            for j in 0..self.n_per_class {
                let kind = if j < n_easy {
                    PointKind::Easy
                } else if j < n_easy + n_hard {
                    PointKind::Hard
                } else {
                    PointKind::Regular
                };
                let (anchor, sd) = match kind {
                    PointKind::Easy => (centres[c].clone(), self.easy_spread),
                    PointKind::Regular => (centres[c].clone(), self.spread),
                    PointKind::Hard => {
                        let other = (c + 1 + rng.random_range(0..self.classes - 1)) % self.classes;
                        let t = rng.random_range(lo..=hi);
                        let anchor = centres[c]
                            .iter()
                            .zip(&centres[other])
                            .map(|(a, b)| a + t * (b - a))
                            .collect();
                        (anchor, self.spread)
                    }
                };
                for m in anchor {
                    let z: f64 = rng.sample(StandardNormal);
                    features.push(m + sd * z);
                }
                labels.push(c);
                kinds.push(kind);
            }
        }
        Ok((Dataset::new(features, self.dim, labels, self.classes)?, kinds))
    }
}

pub(crate) fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Subsamples every class `c` to `round(rates[c] * count_c)` rows.
pub fn apply_imbalance(ds: &Dataset, rates: &[f64], seed: u64) -> Result<Dataset> {
    if rates.len() != ds.num_classes() {
        return Err(Error::DimensionMismatch {
            expected: ds.num_classes(),
            got: rates.len(),
        });
    }
    if let Some(r) = rates.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
        return Err(Error::invalid(format!("subsample rate {r} outside (0, 1]")));
    }
    let keep: Vec<usize> = ds
        .class_counts()
        .iter()
        .zip(rates)
        .map(|(&n, &r)| round_half_up(r * n as f64).min(n))
        .collect();
    Ok(ds.thin_classes(&keep, seed))
}

/// Keeps exactly `per_class` rows of every class.
pub fn downsample(ds: &Dataset, per_class: usize, seed: u64) -> Result<Dataset> {
    if let Some(&min) = ds.class_counts().iter().min() {
        if per_class > min {
            return Err(Error::invalid(format!(
                "per_class = {per_class} exceeds smallest class count {min}"
            )));
        }
    }
    let keep = vec![per_class; ds.num_classes()];
    Ok(ds.thin_classes(&keep, seed))
}

/// Parses header-free CSV: `d` feature columns then one integer label.
/// When `num_classes` is `None` the class count is `max(label) + 1`.
pub fn parse_csv(text: &str, num_classes: Option<usize>) -> Result<Dataset> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut dim = None;
    for (lineno, line) in text.lines().enumerate() {
        let row = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(Error::Parse {
                row,
                msg: "need at least one feature and a label".into(),
            });
        }
        let d = fields.len() - 1;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(Error::Parse {
                    row,
                    msg: format!("expected {expected} features, found {d}"),
                })
            }
            _ => {}
        }
        for f in &fields[..d] {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                row,
                msg: format!("bad number `{f}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    msg: format!("non-finite feature `{f}`"),
                });
            }
            features.push(v);
        }
        let label: usize = fields[d].parse().map_err(|_| Error::Parse {
            row,
            msg: format!("bad label `{}`", fields[d]),
        })?;
        if let Some(c) = num_classes {
            if label >= c {
                return Err(Error::LabelOutOfRange { row, label, classes: c });
            }
        }
        labels.push(label);
    }
    let Some(dim) = dim else {
        return Err(Error::EmptyDataset);
    };
    let classes = num_classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
    Dataset::new(features, dim, labels, classes)
}

pub fn load_csv(path: impl AsRef<Path>, num_classes: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, num_classes)
}
