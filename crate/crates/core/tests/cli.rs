use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dynprune::analysis::{History, CURVE_HEADER};
use dynprune::config::load_config;
use dynprune::driver::RESULTS_HEADER;
use dynprune::policies::StaticScores;
use dynprune::report::{ACCURACY_HEADER, RUNTIME_HEADER};
use dynprune::Scoreboard;

const CONFIG: &str = "\
# small experiment
[dataset]
kind = blobmix
n_per_class = 40
classes = 3
dim = 5
seed = 3

[learner]
batch_size = 16
milestones = 6, 9

[run]
epochs = 12
prune_period = 3
prune_rate = 0.5
seed = 7

[policy]
kind = uncertainty_ema
static_trials = 2
static_epochs = 2

[sweep]
prune_rates = 0.3, 0.7
policies = random, eps_greedy, static_topk
seeds = 1, 2
";

fn bin(args: &[&str], paths: &[&Path]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dynprune"));
    let mut paths = paths.iter();
    for a in args {
        if *a == "{}" {
            cmd.arg(paths.next().expect("path placeholder"));
        } else {
            cmd.arg(a);
        }
    }
    cmd.output().expect("binary runs")
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn setup() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, CONFIG).unwrap();
    (dir, cfg)
}

/// Every row has the header's column count and every non-text field is numeric.
fn check_csv(text: &str, header: &str, text_cols: &[usize]) -> usize {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(header));
    let cols = header.split(',').count();
    let mut rows = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), cols, "row `{line}`");
        for (i, f) in fields.iter().enumerate() {
            if !text_cols.contains(&i) {
                assert!(f.parse::<f64>().is_ok(), "column {i} of `{line}` is not numeric");
            }
        }
        rows += 1;
    }
    rows
}

#[test]
fn run_writes_parseable_outputs() {
    let (dir, cfg) = setup();
    let out = dir.path().join("run");
    let stdout = ok(bin(&["run", "--config", "{}", "--out", "{}"], &[&cfg, &out]));
    assert!(stdout.contains("final_test_acc="));

    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(check_csv(&results, RESULTS_HEADER, &[1]), 1);
    let epochs = fs::read_to_string(out.join("epochs.csv")).unwrap();
    assert_eq!(check_csv(&epochs, "epoch,lr,train_loss,train_acc,test_acc,batches", &[]), 12);

    let history = History::parse(&fs::read_to_string(out.join("history.txt")).unwrap()).unwrap();
    assert_eq!((history.n, history.k, history.selections.len()), (120, 60, 4));
    let sb = Scoreboard::restore(&fs::read(out.join("scoreboard.csv")).unwrap()).unwrap();
    assert_eq!(sb.len(), 120);
    assert_eq!(sb.sel_count().iter().sum::<u64>(), 240);

    let echoed = load_config(out.join("config.echo")).unwrap();
    let original = load_config(&cfg).unwrap();
    assert_eq!(echoed.run, original.run);
    assert_eq!(echoed.dataset, original.dataset);
}

#[test]
fn seed_override_changes_run() {
    let (dir, cfg) = setup();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(bin(&["run", "--config", "{}", "--out", "{}"], &[&cfg, &a]));
    ok(bin(&["run", "--config", "{}", "--out", "{}", "--seed", "99"], &[&cfg, &b]));
    let read = |d: &Path| fs::read_to_string(d.join("history.txt")).unwrap();
    assert_ne!(read(&a), read(&b));
    assert!(fs::read_to_string(b.join("config.echo")).unwrap().contains("seed = 99"));
}

#[test]
fn baseline_trains_full_dataset() {
    let (dir, cfg) = setup();
    let out = dir.path().join("base");
    ok(bin(&["baseline", "--config", "{}", "--out", "{}"], &[&cfg, &out]));
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(results.lines().nth(1).unwrap().split(',').nth(1) == Some("baseline"));
    assert!(!out.join("history.txt").exists());
    let epochs = fs::read_to_string(out.join("epochs.csv")).unwrap();
    // 120 rows in batches of 16
    assert!(epochs.lines().skip(1).all(|l| l.ends_with(",8")));
}

#[test]
fn sweep_writes_tables_in_grid_order() {
    let (dir, cfg) = setup();
    let out = dir.path().join("sweep");
    let stdout = ok(bin(&["sweep", "--config", "{}", "--out", "{}", "--jobs", "3"], &[&cfg, &out]));
    assert!(stdout.contains("12 runs completed, 0 failed"));
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(check_csv(&results, RESULTS_HEADER, &[1]), 12);
    let ids: Vec<usize> = results.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ids, (0..12).collect::<Vec<_>>());

    let acc = fs::read_to_string(out.join("accuracy.csv")).unwrap();
    assert_eq!(check_csv(&acc, ACCURACY_HEADER, &[0]), 6);
    let rt = fs::read_to_string(out.join("runtime.csv")).unwrap();
    assert_eq!(check_csv(&rt, RUNTIME_HEADER, &[0]), 6);
    for line in rt.lines().filter(|l| l.starts_with("el2n:")) {
        let f: Vec<f64> = line.split(',').skip(3).map(|x| x.parse().unwrap()).collect();
        assert!(f[0] > f[2], "offline cost must be included in total: {line}");
    }
    let curve = fs::read_to_string(out.join("curve_random_0.3.csv")).unwrap();
    assert_eq!(check_csv(&curve, CURVE_HEADER, &[]), 120);
    assert_eq!(fs::read_dir(out.join("histories")).unwrap().count(), 12);
}

#[test]
fn analyze_and_retrain_from_saved_run() {
    let (dir, cfg) = setup();
    let run = dir.path().join("run");
    let run2 = dir.path().join("run2");
    ok(bin(&["run", "--config", "{}", "--out", "{}"], &[&cfg, &run]));
    ok(bin(&["run", "--config", "{}", "--out", "{}", "--seed", "8"], &[&cfg, &run2]));
    let h1 = run.join("history.txt");
    let h2 = run2.join("history.txt");

    let an = dir.path().join("an");
    let stdout = ok(bin(&["analyze", "--history", "{}", "--history", "{}", "--out", "{}"], &[&h1, &h2, &an]));
    assert!(stdout.contains("jaccard(always_0, always_1)"));
    let curve = fs::read_to_string(an.join("curve.csv")).unwrap();
    assert_eq!(check_csv(&curve, CURVE_HEADER, &[]), 120);
    let last: f64 = curve.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((last - 1.0).abs() < 1e-12);
    let groups = fs::read_to_string(an.join("groups_0.csv")).unwrap();
    assert_eq!(check_csv(&groups, "id,rate,frac,group", &[3]), 120);

    let bad = bin(&["analyze", "--history", "{}", "--out", "{}", "--hi", "0.2", "--lo", "0.5"], &[&h1, &an]);
    assert!(!bad.status.success());

    for mode in ["original", "static-sometimes", "random-sometimes"] {
        let out = dir.path().join(mode);
        ok(bin(&["retrain", "--history", "{}", "--mode", mode, "--out", "{}"], &[&h1, &out]));
        let h = History::parse(&fs::read_to_string(out.join("history.txt")).unwrap()).unwrap();
        if mode == "static-sometimes" {
            assert!(h.selections.windows(2).all(|w| w[0] == w[1]));
        }
    }
    let orig = fs::read_to_string(dir.path().join("original/history.txt")).unwrap();
    assert_eq!(orig, fs::read_to_string(&h1).unwrap());
}

#[test]
fn score_static_outputs_load() {
    let (dir, cfg) = setup();
    for method in ["forget", "el2n"] {
        let out = dir.path().join("scores").join(format!("{method}.csv"));
        ok(bin(&["score-static", "--method", method, "--config", "{}", "--out", "{}"], &[&cfg, &out]));
        let s = StaticScores::load(&out).unwrap();
        assert_eq!(s.len(), 120);
        assert_eq!(s.method, method);
    }
    // precomputed scores feed a static run
    let text = CONFIG.replace("kind = uncertainty_ema", "kind = static_topk\nstatic_scores = scores/el2n.csv");
    let cfg2 = dir.path().join("static.cfg");
    fs::write(&cfg2, text).unwrap();
    let out = dir.path().join("static_run");
    ok(bin(&["run", "--config", "{}", "--out", "{}"], &[&cfg2, &out]));
    let h = History::parse(&fs::read_to_string(out.join("history.txt")).unwrap()).unwrap();
    assert!(h.selections.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn failures_exit_nonzero_with_diagnostic() {
    let (dir, cfg) = setup();
    let out = dir.path().join("x");
    let cases = [
        (CONFIG.replace("prune_rate = 0.5", "prune_rate = 1.2"), "prune_rate"),
        (CONFIG.replace("[policy]\n", "[policy]\nalpa = 0.5\n"), "did you mean `alpha`"),
        (CONFIG.replace("prune_period = 3", "prune_period = 5"), "prune_period"),
        (CONFIG.replace("kind = blobmix", "kind = csv\npath = missing.csv\ntest_path = missing.csv"), "missing.csv"),
    ];
    for (text, needle) in cases {
        fs::write(&cfg, text).unwrap();
        let res = bin(&["run", "--config", "{}", "--out", "{}"], &[&cfg, &out]);
        assert!(!res.status.success());
        let stderr = String::from_utf8_lossy(&res.stderr);
        assert!(stderr.contains(needle), "expected `{needle}` in: {stderr}");
    }
    let missing = dir.path().join("nope.cfg");
    assert!(!bin(&["run", "--config", "{}", "--out", "{}"], &[&missing, &out]).status.success());
}
