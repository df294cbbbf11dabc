//! Per-sample streaming statistics across pruning checkpoints.
//!
//! Each observation of raw uncertainties updates an exponential moving
//! average and an exponentially weighted variance:
//!
//! ```text
//! var  <- (1 - a) * var + a * (raw - ema_prev)^2
//! ema  <- a * raw + (1 - a) * ema_prev
//! ```
//!
//! The variance deliberately uses the pre-update mean. [`VarianceRule::Welford`]
//! switches to the product of pre- and post-update deviations,
//! `var <- (1 - a) * var + a * (raw - ema_prev) * (raw - ema_new)`.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum VarianceRule {
    #[default]
    Literal,
    Welford,
}

impl VarianceRule {
    pub fn name(self) -> &'static str {
        match self {
            VarianceRule::Literal => "literal",
            VarianceRule::Welford => "welford",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "literal" => Some(VarianceRule::Literal),
            "welford" => Some(VarianceRule::Welford),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scoreboard {
    ema: Vec<f64>,
    var: Vec<f64>,
    last_raw: Vec<f64>,
    sel_count: Vec<u64>,
    checkpoints_seen: u64,
    alpha: f64,
    rule: VarianceRule,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")))
    }
}

impl Scoreboard {
    /// Seeds the mean with `raw`; variance starts at zero.
    pub fn new(raw: &[f64], alpha: f64) -> Result<Self> {
        Self::with_rule(raw, alpha, VarianceRule::Literal)
    }

    pub fn with_rule(raw: &[f64], alpha: f64, rule: VarianceRule) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptyScoreboard);
        }
        check_alpha(alpha)?;
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("raw scores"));
        }
        let n = raw.len();
        Ok(Self {
            ema: raw.to_vec(),
            var: vec![0.0; n],
            last_raw: raw.to_vec(),
            sel_count: vec![0; n],
            checkpoints_seen: 0,
            alpha,
            rule,
        })
    }

    /// A board that only tracks selection counts (policies that never score).
    pub fn counts_only(n: usize) -> Result<Self> {
        Self::new(&vec![0.0; n], DEFAULT_ALPHA)
    }

    pub fn len(&self) -> usize {
        self.ema.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ema.is_empty()
    }

    pub fn ema(&self) -> &[f64] {
        &self.ema
    }

    pub fn var(&self) -> &[f64] {
        &self.var
    }

    pub fn last_raw(&self) -> &[f64] {
        &self.last_raw
    }

    pub fn sel_count(&self) -> &[u64] {
        &self.sel_count
    }

    pub fn checkpoints_seen(&self) -> u64 {
        self.checkpoints_seen
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rule(&self) -> VarianceRule {
        self.rule
    }

    pub fn observe(&mut self, raw: &[f64]) -> Result<()> {
        if raw.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: raw.len(),
            });
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("raw scores"));
        }
        let a = self.alpha;
        for (i, &x) in raw.iter().enumerate() {
            let prev = self.ema[i];
            let next = a * x + (1.0 - a) * prev;
            let spread = match self.rule {
                VarianceRule::Literal => (x - prev) * (x - prev),
                VarianceRule::Welford => (x - prev) * (x - next),
            };
            self.var[i] = ((1.0 - a) * self.var[i] + a * spread).max(0.0);
            self.ema[i] = next;
            self.last_raw[i] = x;
        }
        self.checkpoints_seen += 1;
        Ok(())
    }

    pub fn record_selection(&mut self, selected: &[usize]) -> Result<()> {
        let n = self.len();
        if let Some(&id) = selected.iter().find(|&&i| i >= n) {
            return Err(Error::IdOutOfRange { id, n });
        }
        for &i in selected {
            self.sel_count[i] += 1;
        }
        Ok(())
    }

    /// Advances the checkpoint counter without new scores.
    pub(crate) fn tick(&mut self) {
        self.checkpoints_seen += 1;
    }

    /// Flat CSV: a `#` metadata line, the column header, then
    /// `id,ema,var,last_raw,sel_count` per sample. Floats use shortest
    /// round-trip formatting so restore is bit-exact.
    pub fn snapshot(&self) -> Vec<u8> {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# scoreboard v1 n={} alpha={} checkpoints_seen={} variance={}",
            self.len(),
            self.alpha,
            self.checkpoints_seen,
            self.rule.name()
        );
        out.push_str("id,ema,var,last_raw,sel_count\n");
        for i in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                i, self.ema[i], self.var[i], self.last_raw[i], self.sel_count[i]
            );
        }
        out.into_bytes()
    }

    pub fn restore(bytes: &[u8]) -> Result<Self> {
        let corrupt = |m: String| Error::CorruptSnapshot(m);
        let text = std::str::from_utf8(bytes).map_err(|_| corrupt("not utf-8".into()))?;
        if !text.ends_with('\n') {
            return Err(corrupt("truncated (missing final newline)".into()));
        }
        let mut lines = text.lines();
        let meta = lines.next().ok_or_else(|| corrupt("empty".into()))?;
        let meta = meta
            .strip_prefix("# scoreboard v1 ")
            .ok_or_else(|| corrupt("bad header".into()))?;
        let mut n = None;
        let mut alpha = None;
        let mut seen = None;
        let mut rule = None;
        for kv in meta.split_whitespace() {
            let (k, v) = kv.split_once('=').ok_or_else(|| corrupt(format!("bad field `{kv}`")))?;
            match k {
                "n" => n = v.parse::<usize>().ok(),
                "alpha" => alpha = v.parse::<f64>().ok(),
                "checkpoints_seen" => seen = v.parse::<u64>().ok(),
                "variance" => rule = VarianceRule::parse(v),
                _ => return Err(corrupt(format!("unknown field `{k}`"))),
            }
        }
        let (Some(n), Some(alpha), Some(seen), Some(rule)) = (n, alpha, seen, rule) else {
            return Err(corrupt("incomplete header".into()));
        };
        if lines.next() != Some("id,ema,var,last_raw,sel_count") {
            return Err(corrupt("missing column header".into()));
        }
        let mut sb = Self {
            ema: Vec::with_capacity(n),
            var: Vec::with_capacity(n),
            last_raw: Vec::with_capacity(n),
            sel_count: Vec::with_capacity(n),
            checkpoints_seen: seen,
            alpha,
            rule,
        };
        for (i, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || corrupt(format!("bad row {i}"));
            if f.len() != 5 || f[0].parse::<usize>().ok() != Some(i) {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
            sb.ema.push(num(f[1])?);
            sb.var.push(num(f[2])?);
            sb.last_raw.push(num(f[3])?);
            sb.sel_count.push(f[4].parse().map_err(|_| bad())?);
        }
        if sb.len() != n {
            return Err(corrupt(format!("expected {n} rows, found {}", sb.len())));
        }
        if n == 0 {
            return Err(Error::EmptyScoreboard);
        }
        check_alpha(alpha).map_err(|e| corrupt(e.to_string()))?;
        if sb.var.iter().any(|&v| v < 0.0) {
            return Err(corrupt("negative variance".into()));
        }
        Ok(sb)
    }
}
