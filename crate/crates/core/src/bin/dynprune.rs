use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};

use dynprune::analysis::{
    classify_groups, curve_csv, curve_over_trials, groups_csv, jaccard, retrain_selector, selection_profile, History,
    RetrainMode, DEFAULT_HI, DEFAULT_LO,
};
use dynprune::config::{emit_config, load_config, ExperimentConfig};
use dynprune::driver::{self, sweep::run_sweep, RunRecord, RESULTS_HEADER};
use dynprune::policies::StaticMethod;
use dynprune::report::emit_report;
use dynprune::Scoreboard;

#[derive(Parser)]
#[command(name = "dynprune", version, about = "Dynamic data pruning experiments")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train once with the configured pruning policy.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `run.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every point of the configured grid and write summary tables.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Train on the full dataset without pruning.
    Baseline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Selection curves and always/sometimes/never groups from saved histories.
    Analyze {
        /// One history file per trial.
        #[arg(long, required = true)]
        history: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_HI)]
        hi: f64,
        #[arg(long, default_value_t = DEFAULT_LO)]
        lo: f64,
    },
    /// Retrain from a saved run with a derived selection scheme.
    Retrain {
        #[arg(long)]
        history: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to `config.echo` beside the history file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Final scoreboard; defaults to `scoreboard.csv` beside the history file.
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_HI)]
        hi: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute offline per-sample scores for the static baselines.
    ScoreStatic {
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Original,
    StaticSometimes,
    RandomSometimes,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Forget,
    El2n,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { config, out, seed } => cmd_run(&config, &out, seed),
        Command::Sweep { config, out, jobs } => cmd_sweep(&config, &out, jobs),
        Command::Baseline { config, out, seed } => cmd_baseline(&config, &out, seed),
        Command::Analyze { history, out, hi, lo } => cmd_analyze(&history, &out, hi, lo),
        Command::Retrain {
            history,
            mode,
            out,
            config,
            scores,
            hi,
            seed,
        } => cmd_retrain(&history, mode, &out, config, scores, hi, seed),
        Command::ScoreStatic { method, config, out } => cmd_score_static(method, &config, &out),
    }
}

fn load(config: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = load_config(config).with_context(|| format!("loading {}", config.display()))?;
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    Ok(cfg)
}

fn write(dir: &Path, name: &str, body: impl AsRef<[u8]>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_run(dir: &Path, cfg: &ExperimentConfig, rec: &RunRecord) -> Result<()> {
    write(dir, "results.csv", format!("{RESULTS_HEADER}\n{}\n", rec.results_row(0)))?;
    write(dir, "epochs.csv", rec.epochs_csv())?;
    write(dir, "config.echo", emit_config(cfg))?;
    if !rec.selections.is_empty() {
        write(dir, "history.txt", rec.history_string())?;
    }
    if let Some(sb) = &rec.scoreboard {
        write(dir, "scoreboard.csv", sb.snapshot())?;
    }
    println!("{} final_test_acc={:.4} total_seconds={:.3}", rec.label, rec.final_test_acc, rec.timings.total_seconds);
    Ok(())
}

fn finish(result: dynprune::Result<RunRecord>, dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    match result {
        Ok(rec) => write_run(dir, cfg, &rec),
        Err(dynprune::Error::Diverged { epoch, partial }) => {
            write(dir, "epochs.csv", partial.epochs_csv())?;
            bail!("training diverged at epoch {epoch}; partial trajectory written to epochs.csv")
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_run(config: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let cfg = load(config, seed)?;
    create_dir(out)?;
    let (train, test) = cfg.dataset.load()?;
    info!("training set {} rows, test set {} rows", train.len(), test.len());
    let run = cfg.resolved_run(&train)?;
    finish(driver::run_experiment(&run, &train, &test), out, &cfg)
}

fn cmd_baseline(config: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let cfg = load(config, seed)?;
    create_dir(out)?;
    let (train, test) = cfg.dataset.load()?;
    finish(driver::baseline_run(&cfg.run, &train, &test), out, &cfg)
}

fn cmd_sweep(config: &Path, out: &Path, jobs: usize) -> Result<()> {
    let cfg = load(config, None)?;
    create_dir(out)?;
    let (train, test) = cfg.dataset.load()?;
    let grid = cfg.resolved_grid(&train)?;
    let hist_dir = out.join("histories");
    create_dir(&hist_dir)?;
    let results_path = out.join("results.csv");
    let mut results = fs::File::create(&results_path).with_context(|| format!("creating {}", results_path.display()))?;
    writeln!(results, "{RESULTS_HEADER}")?;
    let mut failures = vec!["run_id,error".to_string()];
    let mut io_error = None;
    let outcomes = run_sweep(&grid, &train, &test, jobs.max(1), |i, r| {
        let mut step = || -> Result<()> {
            match r {
                Ok(rec) => {
                    writeln!(results, "{}", rec.results_row(i))?;
                    results.flush()?;
                    if !rec.selections.is_empty() {
                        write(&hist_dir, &format!("run_{i}.txt"), rec.history_string())?;
                    }
                    info!("run {i}: {} acc={:.4}", rec.label, rec.final_test_acc);
                }
                Err(e) => {
                    warn!("run {i} failed: {e}");
                    failures.push(format!("{i},\"{}\"", e.to_string().replace('"', "'")));
                }
            }
            Ok(())
        };
        if let Err(e) = step() {
            io_error.get_or_insert(e);
        }
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    let records: Vec<RunRecord> = outcomes.into_iter().filter_map(|r| r.ok()).collect();
    if failures.len() > 1 {
        write(out, "failures.csv", failures.join("\n") + "\n")?;
    }
    if records.is_empty() {
        bail!("every sweep point failed; see failures.csv");
    }
    emit_report(&records, out)?;
    println!("{} runs completed, {} failed", records.len(), failures.len() - 1);
    Ok(())
}

fn read_history(path: &Path) -> Result<History> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    History::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_analyze(histories: &[PathBuf], out: &Path, hi: f64, lo: f64) -> Result<()> {
    let hs = histories.iter().map(|p| read_history(p)).collect::<Result<Vec<_>>>()?;
    if hs.iter().any(|h| h.n != hs[0].n) {
        bail!("histories cover different dataset sizes");
    }
    let profiles = hs
        .iter()
        .map(|h| selection_profile(&h.selections, h.n))
        .collect::<dynprune::Result<Vec<_>>>()?;
    create_dir(out)?;
    write(out, "curve.csv", curve_csv(&curve_over_trials(&profiles)?))?;
    let mut always_sets = Vec::new();
    for (t, p) in profiles.iter().enumerate() {
        let g = classify_groups(p, hi, lo)?;
        let name = if profiles.len() == 1 { "groups.csv".to_string() } else { format!("groups_{t}.csv") };
        write(out, &name, groups_csv(p, &g))?;
        println!(
            "trial {t}: always={} sometimes={} never={}",
            g.always.len(),
            g.sometimes.len(),
            g.never.len()
        );
        always_sets.push(g.always);
    }
    for (a, b) in (0..always_sets.len()).flat_map(|a| (a + 1..always_sets.len()).map(move |b| (a, b))) {
        println!("jaccard(always_{a}, always_{b}) = {:.4}", jaccard(&always_sets[a], &always_sets[b]));
    }
    Ok(())
}

fn cmd_retrain(
    history: &Path,
    mode: Mode,
    out: &Path,
    config: Option<PathBuf>,
    scores: Option<PathBuf>,
    hi: f64,
    seed: Option<u64>,
) -> Result<()> {
    let beside = history.parent().unwrap_or(Path::new("."));
    let cfg = load(&config.unwrap_or_else(|| beside.join("config.echo")), seed)?;
    let h = read_history(history)?;
    let mode = match mode {
        Mode::Original => RetrainMode::Original,
        Mode::StaticSometimes => RetrainMode::StaticSometimes,
        Mode::RandomSometimes => RetrainMode::RandomSometimes,
    };
    let scores_path = scores.unwrap_or_else(|| beside.join("scoreboard.csv"));
    let final_scores = match fs::read(&scores_path) {
        Ok(bytes) => Scoreboard::restore(&bytes)
            .with_context(|| format!("parsing {}", scores_path.display()))?
            .ema()
            .to_vec(),
        Err(_) if mode != RetrainMode::StaticSometimes => vec![0.0; h.n],
        Err(e) => return Err(e).with_context(|| format!("reading {}", scores_path.display())),
    };
    let (train, test) = cfg.dataset.load()?;
    if train.len() != h.n {
        bail!("history covers {} rows but the configured training set has {}", h.n, train.len());
    }
    let run = cfg.resolved_run(&train)?;
    let selector = retrain_selector(&h, &final_scores, run.prune_rate, mode, &run.policy, hi)?;
    create_dir(out)?;
    let mut rec = driver::run_with_selector(&run, &selector, &train, &test);
    if let Ok(r) = rec.as_mut() {
        if mode != RetrainMode::Original {
            r.label = format!("{}:{}", mode.name(), r.label);
        }
    }
    finish(rec, out, &cfg)
}

fn cmd_score_static(method: Method, config: &Path, out: &Path) -> Result<()> {
    let cfg = load(config, None)?;
    let (train, _) = cfg.dataset.load()?;
    let method = match (method, cfg.static_method) {
        (Method::El2n, m @ StaticMethod::El2n { .. }) | (Method::Forget, m @ StaticMethod::Forget { .. }) => m,
        (Method::El2n, StaticMethod::Forget { epochs }) => StaticMethod::El2n { trials: 10, epochs },
        (Method::Forget, StaticMethod::El2n { epochs, .. }) => StaticMethod::Forget { epochs },
    };
    let scores = method.compute(&train, &cfg.run.learner, cfg.run.seed)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    fs::write(out, scores.to_csv_string()).with_context(|| format!("writing {}", out.display()))?;
    println!("{} scores for {} rows in {:.3}s", method.name(), scores.len(), scores.offline_seconds);
    Ok(())
}
