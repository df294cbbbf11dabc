//! Summary tables and plot data over a collection of run records.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::analysis::{curve_csv, curve_over_trials, selection_profile};
use crate::driver::RunRecord;
use crate::error::{Error, Result};

pub const ACCURACY_HEADER: &str = "method,prune_rate,n_seeds,mean_acc,std_acc";
pub const RUNTIME_HEADER: &str =
    "method,prune_rate,n_seeds,mean_total_seconds,std_total_seconds,mean_total_minus_offline_seconds,std_total_minus_offline_seconds";

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Summary { mean, std }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub method: String,
    pub prune_rate: f64,
    pub n_seeds: usize,
    pub accuracy: Summary,
    pub total_seconds: Summary,
    pub total_minus_offline: Summary,
}

/// Groups records by (method, prune rate) in order of first appearance.
pub fn group(records: &[RunRecord]) -> Vec<((String, f64), Vec<&RunRecord>)> {
    let mut groups: Vec<((String, f64), Vec<&RunRecord>)> = Vec::new();
    for r in records {
        let key = (r.label.clone(), r.config.prune_rate);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    groups
}

pub fn summary_rows(records: &[RunRecord]) -> Result<Vec<Row>> {
    if records.is_empty() {
        return Err(Error::invalid("no run records to report"));
    }
    Ok(group(records)
        .into_iter()
        .map(|((method, prune_rate), rs)| {
            let col = |f: fn(&RunRecord) -> f64| summarize(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
            Row {
                method,
                prune_rate,
                n_seeds: rs.len(),
                accuracy: col(|r| r.final_test_acc),
                total_seconds: col(|r| r.timings.total_seconds),
                total_minus_offline: col(|r| r.timings.total_minus_offline()),
            }
        })
        .collect())
}

pub fn accuracy_csv(rows: &[Row]) -> String {
    let mut out = format!("{ACCURACY_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.method, r.prune_rate, r.n_seeds, r.accuracy.mean, r.accuracy.std);
    }
    out
}

pub fn runtime_csv(rows: &[Row]) -> String {
    let mut out = format!("{RUNTIME_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.method,
            r.prune_rate,
            r.n_seeds,
            r.total_seconds.mean,
            r.total_seconds.std,
            r.total_minus_offline.mean,
            r.total_minus_offline.std
        );
    }
    out
}

fn file_stem(method: &str, rate: f64) -> String {
    let clean: String = method
        .chars()
        .map(|ch| if ch.is_ascii_alphanumeric() || ch == '.' || ch == '_' { ch } else { '_' })
        .collect();
    format!("curve_{}_{}", clean.trim_matches('_'), rate)
}

/// Writes `accuracy.csv`, `runtime.csv` and one selection curve per
/// (method, rate) group that recorded selections. Returns the written paths.
pub fn emit_report(records: &[RunRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    let rows = summary_rows(records)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    put("accuracy.csv".into(), accuracy_csv(&rows))?;
    put("runtime.csv".into(), runtime_csv(&rows))?;
    for ((method, rate), rs) in group(records) {
        if rs.iter().any(|r| r.selections.is_empty()) {
            continue;
        }
        let profiles = rs
            .iter()
            .map(|r| selection_profile(&r.selections, r.n))
            .collect::<Result<Vec<_>>>()?;
        if let Ok(points) = curve_over_trials(&profiles) {
            put(format!("{}.csv", file_stem(&method, rate)), curve_csv(&points))?;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::{RunConfig, Timings};

    fn record(label: &str, rate: f64, seed: u64, acc: f64, offline: f64) -> RunRecord {
        RunRecord {
            config: RunConfig {
                prune_rate: rate,
                seed,
                ..RunConfig::default()
            },
            label: label.into(),
            n: 4,
            k: 2,
            selections: vec![vec![0, (seed % 3 + 1) as usize]],
            epochs: Vec::new(),
            final_test_acc: acc,
            timings: Timings {
                offline_seconds: offline,
                total_seconds: 10.0 + offline,
                ..Timings::default()
            },
            score_evaluations: 0,
            scoreboard: None,
        }
    }

    #[test]
    fn table_shape() {
        let mut rs = Vec::new();
        for m in ["a", "b"] {
            for rate in [0.3, 0.5, 0.7] {
                for seed in 0..4 {
                    rs.push(record(m, rate, seed, seed as f64, 0.0));
                }
            }
        }
        let rows = summary_rows(&rs).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.n_seeds == 4 && r.accuracy.mean == 1.5));
        // sample std of 0,1,2,3
        assert!((rows[0].accuracy.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(accuracy_csv(&rows).lines().count(), 7);
    }

    #[test]
    fn single_seed_has_zero_std() {
        let rows = summary_rows(&[record("a", 0.5, 1, 0.9, 0.0)]).unwrap();
        assert_eq!(rows[0].accuracy.std, 0.0);
        assert!(summary_rows(&[]).is_err());
    }

    #[test]
    fn runtime_with_and_without_offline() {
        let rows = summary_rows(&[record("el2n:static_topk", 0.5, 1, 0.9, 4.0)]).unwrap();
        assert_eq!(rows[0].total_seconds.mean, 14.0);
        assert_eq!(rows[0].total_minus_offline.mean, 10.0);
        let csv = runtime_csv(&rows);
        assert!(csv.lines().nth(1).unwrap().ends_with(",14,0,10,0"));
    }

    #[test]
    fn emits_files() {
        let dir = tempfile::tempdir().unwrap();
        let rs = vec![record("ucb[c=1]", 0.5, 1, 0.9, 0.0), record("ucb[c=1]", 0.5, 2, 0.8, 0.0)];
        let files = emit_report(&rs, dir.path()).unwrap();
        let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into()).collect();
        assert_eq!(names, ["accuracy.csv", "runtime.csv", "curve_ucb_c_1_0.5.csv"]);
        let curve = std::fs::read_to_string(&files[2]).unwrap();
        assert_eq!(curve.lines().count(), 5);
    }
}
