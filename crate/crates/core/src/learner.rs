//! Small differentiable classifiers trained with minibatch SGD.
//!
//! Two architectures are supported: multinomial logistic (softmax) regression
//! and a one-hidden-layer tanh MLP. Parameters live in one flat vector so the
//! optimizer and finite-difference checks can treat them uniformly.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arch {
    SoftmaxRegression,
    Mlp { hidden: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hyper {
    pub momentum: f64,
    pub nesterov: bool,
    pub weight_decay: f64,
    pub batch_size: usize,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            momentum: 0.9,
            nesterov: true,
            weight_decay: 5e-4,
            batch_size: 128,
        }
    }
}

/// Step schedule: `lr0 / factor^m` where `m` counts milestones `<= epoch`.
#[derive(Clone, Debug, PartialEq)]
pub struct LrSchedule {
    pub lr0: f64,
    pub milestones: Vec<usize>,
    pub factor: f64,
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self {
            lr0: 0.1,
            milestones: vec![60, 120, 160],
            factor: 5.0,
        }
    }
}

impl LrSchedule {
    pub fn constant(lr0: f64) -> Self {
        Self {
            lr0,
            milestones: Vec::new(),
            factor: 1.0,
        }
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        let passed = self.milestones.iter().filter(|&&m| m <= epoch).count();
        self.lr0 / self.factor.powi(passed as i32)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnerConfig {
    pub arch: Arch,
    pub hyper: Hyper,
    pub schedule: LrSchedule,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            arch: Arch::SoftmaxRegression,
            hyper: Hyper::default(),
            schedule: LrSchedule::default(),
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let h = &self.hyper;
        if h.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if !(0.0..1.0).contains(&h.momentum) {
            return Err(Error::invalid(format!("momentum must lie in [0, 1), got {}", h.momentum)));
        }
        if !(h.weight_decay >= 0.0 && h.weight_decay.is_finite()) {
            return Err(Error::invalid("weight_decay must be finite and non-negative"));
        }
        let s = &self.schedule;
        if !(s.lr0 >= 0.0 && s.lr0.is_finite()) {
            return Err(Error::invalid("lr0 must be finite and non-negative"));
        }
        if !(s.factor > 0.0 && s.factor.is_finite()) {
            return Err(Error::invalid("decay factor must be positive"));
        }
        if let Arch::Mlp { hidden: 0 } = self.arch {
            return Err(Error::invalid("mlp hidden width must be at least 1"));
        }
        Ok(())
    }
}

/// Per-epoch training statistics, measured on the forward pass of each batch.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochMetrics {
    pub mean_loss: f64,
    pub accuracy: f64,
    pub batches: usize,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnerState {
    arch: Arch,
    dim: usize,
    classes: usize,
    params: Vec<f64>,
    momentum_buf: Vec<f64>,
    hyper: Hyper,
    epoch: usize,
}

struct Scratch {
    hidden: Vec<f64>,
    logits: Vec<f64>,
    delta: Vec<f64>,
    dhidden: Vec<f64>,
}

pub fn param_count(arch: Arch, dim: usize, classes: usize) -> usize {
    match arch {
        Arch::SoftmaxRegression => dim * classes + classes,
        Arch::Mlp { hidden } => dim * hidden + hidden + hidden * classes + classes,
    }
}

impl LearnerState {
    pub fn init(config: &LearnerConfig, dim: usize, classes: usize, seed: u64) -> Result<Self> {
        if dim == 0 || classes == 0 {
            return Err(Error::invalid("dimension and class count must be at least 1"));
        }
        config.validate()?;
        let mut rng = rng::from_seed(seed);
        let mut params = vec![0.0; param_count(config.arch, dim, classes)];
        let mut fill = |range: Range<usize>, fan_in: usize| {
            let scale = 1.0 / (fan_in as f64).sqrt();
            for p in &mut params[range] {
                let z: f64 = rng.sample(StandardNormal);
                *p = scale * z;
            }
        };
        match config.arch {
            Arch::SoftmaxRegression => fill(0..dim * classes, dim),
            Arch::Mlp { hidden } => {
                fill(0..hidden * dim, dim);
                let w2 = hidden * dim + hidden;
                fill(w2..w2 + classes * hidden, hidden);
            }
        }
        let momentum_buf = vec![0.0; params.len()];
        Ok(Self {
            arch: config.arch,
            dim,
            classes,
            params,
            momentum_buf,
            hyper: config.hyper.clone(),
            epoch: 0,
        })
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn momentum_buf(&self) -> &[f64] {
        &self.momentum_buf
    }

    pub fn hyper(&self) -> &Hyper {
        &self.hyper
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// Index ranges of weight matrices (weight decay skips biases).
    pub fn weight_ranges(&self) -> Vec<Range<usize>> {
        let (d, c) = (self.dim, self.classes);
        match self.arch {
            Arch::SoftmaxRegression => vec![0..d * c],
            Arch::Mlp { hidden: h } => {
                let w2 = h * d + h;
                vec![0..h * d, w2..w2 + c * h]
            }
        }
    }

    fn scratch(&self) -> Scratch {
        let h = match self.arch {
            Arch::SoftmaxRegression => 0,
            Arch::Mlp { hidden } => hidden,
        };
        Scratch {
            hidden: vec![0.0; h],
            logits: vec![0.0; self.classes],
            delta: vec![0.0; self.classes],
            dhidden: vec![0.0; h],
        }
    }

    fn check_dataset(&self, ds: &Dataset) -> Result<()> {
        if ds.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: ds.dim(),
            });
        }
        if ds.num_classes() > self.classes {
            return Err(Error::DimensionMismatch {
                expected: self.classes,
                got: ds.num_classes(),
            });
        }
        Ok(())
    }

    fn forward(&self, x: &[f64], s: &mut Scratch) {
        let (d, c) = (self.dim, self.classes);
        let p = &self.params;
        match self.arch {
            Arch::SoftmaxRegression => {
                let (w, b) = p.split_at(d * c);
                for k in 0..c {
                    s.logits[k] = b[k] + dot(&w[k * d..(k + 1) * d], x);
                }
            }
            Arch::Mlp { hidden: h } => {
                let (w1, rest) = p.split_at(h * d);
                let (b1, rest) = rest.split_at(h);
                let (w2, b2) = rest.split_at(c * h);
                for j in 0..h {
                    s.hidden[j] = (b1[j] + dot(&w1[j * d..(j + 1) * d], x)).tanh();
                }
                for k in 0..c {
                    s.logits[k] = b2[k] + dot(&w2[k * h..(k + 1) * h], &s.hidden);
                }
            }
        }
    }

    /// Adds `scale * dLoss/dParams` for one sample; expects `forward` to have
    /// run and `s.delta` to hold `softmax - onehot`.
    fn backward(&self, x: &[f64], s: &mut Scratch, grad: &mut [f64], scale: f64) {
        let (d, c) = (self.dim, self.classes);
        match self.arch {
            Arch::SoftmaxRegression => {
                let (gw, gb) = grad.split_at_mut(d * c);
                for k in 0..c {
                    let g = scale * s.delta[k];
                    axpy(g, x, &mut gw[k * d..(k + 1) * d]);
                    gb[k] += g;
                }
            }
            Arch::Mlp { hidden: h } => {
                let w2 = &self.params[h * d + h..h * d + h + c * h];
                let (gw1, rest) = grad.split_at_mut(h * d);
                let (gb1, rest) = rest.split_at_mut(h);
                let (gw2, gb2) = rest.split_at_mut(c * h);
                s.dhidden.iter_mut().for_each(|v| *v = 0.0);
                for k in 0..c {
                    let g = scale * s.delta[k];
                    axpy(g, &s.hidden, &mut gw2[k * h..(k + 1) * h]);
                    gb2[k] += g;
                    axpy(s.delta[k], &w2[k * h..(k + 1) * h], &mut s.dhidden);
                }
                for j in 0..h {
                    let g = scale * s.dhidden[j] * (1.0 - s.hidden[j] * s.hidden[j]);
                    axpy(g, x, &mut gw1[j * d..(j + 1) * d]);
                    gb1[j] += g;
                }
            }
        }
    }

    fn map_samples<T, F>(&self, ds: &Dataset, exec: Exec, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&[f64], usize) -> T + Sync + Send,
    {
        self.check_dataset(ds)?;
        Ok(exec::map_indexed_init(
            exec,
            ds.len(),
            || self.scratch(),
            |s, i| {
                self.forward(ds.row(i), s);
                f(&s.logits, ds.label(i))
            },
        ))
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut s = self.scratch();
        self.forward(x, &mut s);
        s.logits
    }

    pub fn per_sample_loss(&self, ds: &Dataset) -> Result<Vec<f64>> {
        self.per_sample_loss_with(ds, Exec::default())
    }

    pub fn per_sample_loss_with(&self, ds: &Dataset, exec: Exec) -> Result<Vec<f64>> {
        self.map_samples(ds, exec, cross_entropy)
    }

    pub fn per_sample_correct(&self, ds: &Dataset) -> Result<Vec<bool>> {
        self.map_samples(ds, Exec::default(), |z, y| argmax(z) == y)
    }

    pub fn per_sample_error_norm(&self, ds: &Dataset) -> Result<Vec<f64>> {
        self.map_samples(ds, Exec::default(), error_norm)
    }

    /// Mean loss and accuracy over the whole dataset.
    pub fn evaluate(&self, ds: &Dataset) -> Result<(f64, f64)> {
        let per = self.map_samples(ds, Exec::default(), |z, y| (cross_entropy(z, y), argmax(z) == y))?;
        let n = per.len().max(1) as f64;
        let loss = per.iter().map(|p| p.0).sum::<f64>() / n;
        let acc = per.iter().filter(|p| p.1).count() as f64 / n;
        Ok((loss, acc))
    }

    /// Mean cross-entropy over `positions` and its gradient w.r.t. the
    /// parameters (no weight decay term).
    pub fn loss_and_grad(&self, ds: &Dataset, positions: &[usize]) -> Result<(f64, Vec<f64>)> {
        self.check_dataset(ds)?;
        let mut grad = vec![0.0; self.params.len()];
        let (loss, _) = self.batch_grad(ds, positions, &mut grad, &mut self.scratch());
        Ok((loss, grad))
    }

    /// Returns (sum of losses, correct count); `grad` receives the mean gradient.
    fn batch_grad(&self, ds: &Dataset, positions: &[usize], grad: &mut [f64], s: &mut Scratch) -> (f64, usize) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let scale = 1.0 / positions.len().max(1) as f64;
        let mut loss = 0.0;
        let mut correct = 0;
        for &i in positions {
            let x = ds.row(i);
            let y = ds.label(i);
            self.forward(x, s);
            loss += cross_entropy(&s.logits, y);
            if argmax(&s.logits) == y {
                correct += 1;
            }
            softmax_into(&s.logits, &mut s.delta);
            s.delta[y] -= 1.0;
            self.backward(x, s, grad, scale);
        }
        (loss * scale, correct)
    }

    /// One shuffled pass over `subset` (row positions of `ds`).
    pub fn sgd_epoch(&mut self, ds: &Dataset, subset: &[usize], lr: f64, seed: u64) -> Result<EpochMetrics> {
        self.check_dataset(ds)?;
        if subset.is_empty() {
            return Err(Error::EmptySubset);
        }
        if let Some(&id) = subset.iter().find(|&&i| i >= ds.len()) {
            return Err(Error::IdOutOfRange { id, n: ds.len() });
        }
        let mut order = subset.to_vec();
        order.shuffle(&mut rng::from_seed(seed));

        let weights = self.weight_ranges();
        let Hyper {
            momentum,
            nesterov,
            weight_decay,
            batch_size,
        } = self.hyper.clone();
        let mut grad = vec![0.0; self.params.len()];
        let mut scratch = self.scratch();
        let mut loss_sum = 0.0;
        let mut correct = 0;
        let mut batches = 0;
        for batch in order.chunks(batch_size) {
            let (mean_loss, ok) = self.batch_grad(ds, batch, &mut grad, &mut scratch);
            if !mean_loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteGradient {
                    epoch: self.epoch,
                    batch: batches,
                });
            }
            if weight_decay != 0.0 {
                for r in &weights {
                    for i in r.clone() {
                        grad[i] += weight_decay * self.params[i];
                    }
                }
            }
            for i in 0..self.params.len() {
                let mut step = grad[i];
                if momentum != 0.0 {
                    self.momentum_buf[i] = momentum * self.momentum_buf[i] + grad[i];
                    step = if nesterov {
                        grad[i] + momentum * self.momentum_buf[i]
                    } else {
                        self.momentum_buf[i]
                    };
                }
                self.params[i] -= lr * step;
            }
            loss_sum += mean_loss * batch.len() as f64;
            correct += ok;
            batches += 1;
        }
        self.epoch += 1;
        Ok(EpochMetrics {
            mean_loss: loss_sum / order.len() as f64,
            accuracy: correct as f64 / order.len() as f64,
            batches,
            samples: order.len(),
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in z.iter().enumerate().skip(1) {
        if v > z[best] {
            best = k;
        }
    }
    best
}

/// `-log softmax(z)[y]`, computed as `(max - z_y) + ln(1 + sum_{j != argmax} e^{z_j - max})`
/// so it is exactly non-negative and keeps precision for confident logits.
pub fn cross_entropy(z: &[f64], y: usize) -> f64 {
    let top = argmax(z);
    let m = z[top];
    let rest: f64 = z
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != top)
        .map(|(_, &v)| (v - m).exp())
        .sum();
    (m - z[y]) + rest.ln_1p()
}

pub fn softmax_into(z: &[f64], out: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &v) in out.iter_mut().zip(z) {
        *o = (v - m).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

/// L2 norm of `softmax(z) - onehot(y)`.
pub fn error_norm(z: &[f64], y: usize) -> f64 {
    let mut p = vec![0.0; z.len()];
    softmax_into(z, &mut p);
    p[y] -= 1.0;
    p.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::gen_blobs;

    fn plain(arch: Arch, batch: usize) -> LearnerConfig {
        LearnerConfig {
            arch,
            hyper: Hyper {
                momentum: 0.0,
                nesterov: false,
                weight_decay: 0.0,
                batch_size: batch,
            },
            schedule: LrSchedule::constant(0.1),
        }
    }

    #[test]
    fn param_counts() {
        let s = LearnerState::init(&plain(Arch::SoftmaxRegression, 8), 2, 3, 1).unwrap();
        assert_eq!(s.params().len(), 2 * 3 + 3);
        let m = LearnerState::init(&plain(Arch::Mlp { hidden: 16 }, 8), 8, 4, 1).unwrap();
        assert_eq!(m.params().len(), 8 * 16 + 16 + 16 * 4 + 4);
        assert_eq!(m.momentum_buf().len(), m.params().len());
        assert!(m.momentum_buf().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn init_deterministic_and_validated() {
        let cfg = plain(Arch::Mlp { hidden: 4 }, 8);
        let a = LearnerState::init(&cfg, 3, 2, 5).unwrap();
        let b = LearnerState::init(&cfg, 3, 2, 5).unwrap();
        assert_eq!(a, b);
        assert!(LearnerState::init(&cfg, 0, 2, 5).is_err());
        assert!(LearnerState::init(&cfg, 3, 0, 5).is_err());
    }

    #[test]
    fn cross_entropy_values() {
        assert!((cross_entropy(&[0.0; 10], 3) - 10f64.ln()).abs() < 1e-15);
        assert!((cross_entropy(&[2.0, 0.0], 0) - 0.126_928_011_042_972_5).abs() < 1e-15);
        let l = cross_entropy(&[50.0, 0.0], 0);
        assert!((0.0..1e-20).contains(&l));
        assert_eq!(cross_entropy(&[1e300, -1e300], 1), 2e300);
        assert!(cross_entropy(&[700.0, -700.0], 0) >= 0.0);
    }

    #[test]
    fn correctness_tie_break() {
        assert_eq!(argmax(&[3.0, 1.0]), 0);
        assert_eq!(argmax(&[1.0, 1.0]), 0);
        assert_eq!(argmax(&[0.0, 2.0, 2.0]), 1);
    }

    #[test]
    fn error_norm_values() {
        assert!(error_norm(&[800.0, 0.0, 0.0], 0) < 1e-12);
        assert!((error_norm(&[0.0, 0.0], 1) - 0.5f64.sqrt()).abs() < 1e-15);
        let e = error_norm(&[-800.0, 800.0], 0);
        assert!(e <= 2f64.sqrt() + 1e-15);
    }

    #[test]
    fn per_sample_maps_dimension_checked() {
        let ds = gen_blobs(5, 2, 3, 0.1, 1).unwrap();
        let s = LearnerState::init(&plain(Arch::SoftmaxRegression, 8), 2, 2, 1).unwrap();
        assert!(matches!(s.per_sample_loss(&ds), Err(Error::DimensionMismatch { .. })));
        assert!(s.per_sample_correct(&ds).is_err());
        assert!(s.per_sample_error_norm(&ds).is_err());
    }

    #[test]
    fn null_update_leaves_params() {
        let ds = gen_blobs(10, 2, 2, 0.1, 1).unwrap();
        let mut s = LearnerState::init(&plain(Arch::Mlp { hidden: 3 }, 4), 2, 2, 3).unwrap();
        let before = s.params().to_vec();
        let all: Vec<usize> = (0..ds.len()).collect();
        s.sgd_epoch(&ds, &all, 0.0, 1).unwrap();
        assert_eq!(s.params(), before.as_slice());
    }

    #[test]
    fn single_sample_step_matches_closed_form() {
        let ds = Dataset::new(vec![0.5, -1.0], 2, vec![1], 3).unwrap();
        let mut s = LearnerState::init(&plain(Arch::SoftmaxRegression, 1), 2, 3, 9).unwrap();
        let p0 = s.params().to_vec();
        // closed form: dL/dW_k = (p_k - [k == y]) x, dL/db_k = p_k - [k == y]
        let z: Vec<f64> = (0..3).map(|k| p0[6 + k] + p0[2 * k] * 0.5 - p0[2 * k + 1]).collect();
        let zmax = z.iter().cloned().fold(f64::MIN, f64::max);
        let e: Vec<f64> = z.iter().map(|v| (v - zmax).exp()).collect();
        let tot: f64 = e.iter().sum();
        let lr = 0.3;
        let mut expected = p0.clone();
        for k in 0..3 {
            let r = e[k] / tot - if k == 1 { 1.0 } else { 0.0 };
            expected[2 * k] -= lr * r * 0.5;
            expected[2 * k + 1] -= lr * r * -1.0;
            expected[6 + k] -= lr * r;
        }
        let m = s.sgd_epoch(&ds, &[0], lr, 0).unwrap();
        assert_eq!(m.batches, 1);
        for (a, b) in s.params().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn nesterov_weight_decay_update() {
        // two steps on one sample by hand with momentum and decay on weights only
        let ds = Dataset::new(vec![1.0], 1, vec![0], 2).unwrap();
        let cfg = LearnerConfig {
            arch: Arch::SoftmaxRegression,
            hyper: Hyper {
                momentum: 0.9,
                nesterov: true,
                weight_decay: 0.01,
                batch_size: 1,
            },
            schedule: LrSchedule::constant(0.1),
        };
        let mut s = LearnerState::init(&cfg, 1, 2, 4).unwrap();
        let mut p = s.params().to_vec();
        let mut buf = vec![0.0; 4];
        for _ in 0..2 {
            let (_, mut g) = s.loss_and_grad(&ds, &[0]).unwrap();
            g[0] += 0.01 * p[0];
            g[1] += 0.01 * p[1];
            for i in 0..4 {
                buf[i] = 0.9 * buf[i] + g[i];
                p[i] -= 0.1 * (g[i] + 0.9 * buf[i]);
            }
            s.sgd_epoch(&ds, &[0], 0.1, 0).unwrap();
            for (a, b) in s.params().iter().zip(&p) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        assert_eq!(s.epoch(), 2);
    }

    #[test]
    fn sgd_deterministic_and_errors() {
        let ds = gen_blobs(30, 3, 4, 0.3, 2).unwrap();
        let cfg = LearnerConfig::default();
        let init = LearnerState::init(&cfg, 4, 3, 1).unwrap();
        let subset: Vec<usize> = (0..ds.len()).step_by(2).collect();
        let mut a = init.clone();
        let mut b = init.clone();
        let ma = a.sgd_epoch(&ds, &subset, 0.1, 77).unwrap();
        let mb = b.sgd_epoch(&ds, &subset, 0.1, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(ma, mb);
        let mut c = init.clone();
        assert!(matches!(c.sgd_epoch(&ds, &[], 0.1, 0), Err(Error::EmptySubset)));
        assert!(matches!(c.sgd_epoch(&ds, &[90], 0.1, 0), Err(Error::IdOutOfRange { .. })));
    }

    #[test]
    fn partial_last_batch_trained() {
        let ds = gen_blobs(25, 2, 2, 0.3, 2).unwrap();
        let mut s = LearnerState::init(&LearnerConfig::default(), 2, 2, 1).unwrap();
        let all: Vec<usize> = (0..50).collect();
        let mut cfg = s.hyper().clone();
        cfg.batch_size = 16;
        s.hyper = cfg;
        let m = s.sgd_epoch(&ds, &all, 0.1, 0).unwrap();
        assert_eq!(m.batches, 4);
        assert_eq!(m.samples, 50);
    }

    #[test]
    fn divergence_detected() {
        let ds = gen_blobs(10, 2, 2, 0.3, 2).unwrap();
        let mut s = LearnerState::init(&plain(Arch::SoftmaxRegression, 4), 2, 2, 1).unwrap();
        s.params_mut()[0] = f64::NAN;
        let all: Vec<usize> = (0..20).collect();
        assert!(matches!(s.sgd_epoch(&ds, &all, 0.1, 0), Err(Error::NonFiniteGradient { .. })));
    }

    #[test]
    fn lr_schedule() {
        let s = LrSchedule::default();
        assert_eq!(s.lr_at(0), 0.1);
        assert_eq!(s.lr_at(59), 0.1);
        assert!((s.lr_at(60) - 0.02).abs() < 1e-15);
        assert!((s.lr_at(120) - 0.004).abs() < 1e-15);
        assert!((s.lr_at(160) - 0.0008).abs() < 1e-15);
        assert!((s.lr_at(199) - 0.0008).abs() < 1e-15);
        let flat = LrSchedule::constant(0.05);
        assert!((0..300).all(|e| flat.lr_at(e) == 0.05));
    }

    #[test]
    fn separable_blobs_fit_perfectly() {
        let ds = gen_blobs(100, 2, 2, 0.05, 7).unwrap();
        let mut s = LearnerState::init(&plain(Arch::SoftmaxRegression, 200), 2, 2, 1).unwrap();
        let all: Vec<usize> = (0..ds.len()).collect();
        let mut epochs = 0;
        while s.per_sample_correct(&ds).unwrap().iter().any(|c| !c) {
            s.sgd_epoch(&ds, &all, 0.5, epochs).unwrap();
            epochs += 1;
            assert!(epochs < 500, "did not separate within budget");
        }
        assert_eq!(s.evaluate(&ds).unwrap().1, 1.0);
    }
}
