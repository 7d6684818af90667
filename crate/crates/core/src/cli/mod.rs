//! Command-line front end: `run`, `gap`, `plot` and `dump-k`.
//!
//! Exit codes: 0 on success, 1 when a run fails, 2 for usage or config errors.

pub mod config;
pub mod plot;

pub use config::{parse_config, parse_config_str, to_config_text, ConfigError};
pub use plot::{render_svg, write_svg, PlotGroup, PlotSpec};

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::augmentation::{build_augmentation, AugmentationKind, AugmentationSpec, RandomK};
use crate::envs::EnvKind;
use crate::harness::{
    generalization_gap, run_experiment, GapMetric, LearningCurve, Manifest, RunStatus, MANIFEST_FILE,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUN_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "actgap", about = "Measure the action-generalization gap of Q-learning agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    StepsToThreshold,
    Auc,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every arm and seed of an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Compare two arm directories written by `run`.
    Gap {
        /// Reference arm directory (usually the oracle).
        #[arg(long)]
        oracle: PathBuf,
        /// Agent arm directory.
        #[arg(long)]
        agent: PathBuf,
        #[arg(long, value_enum)]
        metric: MetricArg,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, default_value_t = 20)]
        window: usize,
        /// Where to write the CSV report.
        #[arg(long, default_value = "gap.csv")]
        out: PathBuf,
    },
    /// Plot smoothed learning curves to SVG.
    Plot {
        /// `label=path`, where path is a run CSV or a directory of them. Repeatable.
        #[arg(long = "input", required = true)]
        inputs: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        window: usize,
        #[arg(long, default_value = "")]
        title: String,
        #[arg(long, default_value = "environment steps")]
        x_label: String,
        #[arg(long, default_value = "episode return (smoothed)")]
        y_label: String,
    },
    /// Print the similarity matrix of an augmentation.
    DumpK {
        #[arg(long)]
        augmentation: String,
        #[arg(long)]
        env: Option<String>,
        /// Number of original actions; overrides `--env`.
        #[arg(long)]
        base_actions: Option<usize>,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        h: f64,
        #[arg(long, default_value = "clique")]
        random_k: String,
    },
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Run { config, out: dir, workers } => cmd_run(&config, &dir, workers, out),
        Command::Gap { oracle, agent, metric, threshold, window, out: csv } => {
            cmd_gap(&oracle, &agent, metric, threshold, window, &csv, out)
        }
        Command::Plot { inputs, out: svg, window, title, x_label, y_label } => {
            cmd_plot(&inputs, &svg, window, title, x_label, y_label)
        }
        Command::DumpK { augmentation, env, base_actions, n, h, random_k } => {
            cmd_dump_k(&augmentation, env.as_deref(), base_actions, n, h, &random_k, out)
        }
    };
    match result {
        Ok(code) => code,
        Err(CliError(code, message)) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

struct CliError(i32, String);

fn usage(message: impl Into<String>) -> CliError {
    CliError(EXIT_USAGE, message.into())
}

fn cmd_run(config_path: &Path, out_dir: &Path, workers: usize, out: &mut dyn Write) -> Result<i32, CliError> {
    if workers == 0 {
        return Err(usage("--workers: must be at least 1"));
    }
    let config = parse_config(config_path).map_err(|e| usage(e.to_string()))?;
    let experiments = config.expand().map_err(|e| usage(format!("{}: {e}", config_path.display())))?;
    let swept = config.sweep.is_some();
    let mut failed = 0;
    for experiment in &experiments {
        let dir = if swept { out_dir.join(&experiment.name) } else { out_dir.to_path_buf() };
        let outcome = run_experiment(experiment, &dir, workers).map_err(|e| {
            let code = match e {
                crate::harness::HarnessError::InvalidConfig(_) => EXIT_USAGE,
                _ => EXIT_RUN_FAILURE,
            };
            CliError(code, format!("--out {}: {e}", dir.display()))
        })?;
        for run in &outcome.runs {
            let status = match &run.status {
                RunStatus::Ok => "ok".to_string(),
                RunStatus::Failed(m) => format!("failed: {m}"),
            };
            let _ = writeln!(out, "{} seed {}: {status} ({})", run.arm, run.seed, dir.join(&run.path).display());
        }
        let bad = outcome.failures().count();
        if bad > 0 {
            let _ = writeln!(out, "{bad} run(s) failed; see {}", dir.join(MANIFEST_FILE).display());
        }
        failed += bad;
    }
    Ok(if failed > 0 { EXIT_RUN_FAILURE } else { EXIT_OK })
}

/// Successful curves of an arm directory plus the manifest of its experiment.
fn load_arm(dir: &Path, flag: &str) -> Result<(String, Vec<LearningCurve>, Manifest), CliError> {
    let arm = dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| usage(format!("{flag} {}: not an arm directory", dir.display())))?
        .to_string();
    let experiment = dir.parent().unwrap_or(Path::new("."));
    let manifest_path = experiment.join(MANIFEST_FILE);
    let manifest = Manifest::read(&manifest_path).map_err(|e| usage(format!("{flag} {}: {e}", dir.display())))?;
    let mut curves = Vec::new();
    for run in manifest.runs.iter().filter(|r| r.arm == arm && r.status == RunStatus::Ok) {
        let path = experiment.join(&run.path);
        curves.push(LearningCurve::read_csv_path(&path).map_err(|e| usage(format!("{flag}: {e}")))?);
    }
    if curves.is_empty() {
        return Err(usage(format!("{flag} {}: the manifest lists no successful runs for arm `{arm}`", dir.display())));
    }
    Ok((arm, curves, manifest))
}

fn cmd_gap(
    oracle: &Path,
    agent: &Path,
    metric: MetricArg,
    threshold: Option<f64>,
    window: usize,
    csv: &Path,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let metric = match metric {
        MetricArg::Auc => GapMetric::Auc,
        MetricArg::StepsToThreshold => {
            let threshold =
                threshold.ok_or_else(|| usage("--threshold is required with --metric steps-to-threshold"))?;
            if window == 0 {
                return Err(usage("--window: must be at least 1"));
            }
            GapMetric::StepsToThreshold { threshold, window }
        }
    };
    let (arm_a, runs_a, man_a) = load_arm(oracle, "--oracle")?;
    let (arm_b, runs_b, man_b) = load_arm(agent, "--agent")?;
    if man_a.environment != man_b.environment {
        return Err(usage(format!(
            "--agent: environment `{}` differs from the --oracle environment `{}`",
            man_b.environment, man_a.environment
        )));
    }
    if man_a.budget != man_b.budget {
        return Err(usage(format!(
            "--agent: budget {} differs from the --oracle budget {}",
            man_b.budget, man_a.budget
        )));
    }
    let report =
        generalization_gap(&arm_a, &runs_a, &arm_b, &runs_b, metric, man_a.budget).map_err(|e| usage(e.to_string()))?;
    let _ = write!(out, "{report}");
    std::fs::write(csv, report.to_csv())
        .map_err(|e| CliError(EXIT_RUN_FAILURE, format!("--out {}: {e}", csv.display())))?;
    Ok(EXIT_OK)
}

fn cmd_plot(
    inputs: &[String],
    svg: &Path,
    window: usize,
    title: String,
    x_label: String,
    y_label: String,
) -> Result<i32, CliError> {
    if window == 0 {
        return Err(usage("--window: must be at least 1"));
    }
    let mut groups = Vec::new();
    for input in inputs {
        let (label, path) = match input.split_once('=') {
            Some((l, p)) => (l.to_string(), PathBuf::from(p)),
            None => {
                let p = PathBuf::from(input);
                let label = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| input.clone());
                (label, p)
            }
        };
        let files = plot::collect_csvs(&path).map_err(|e| usage(format!("--input {input}: {e}")))?;
        let curves = files
            .iter()
            .map(|f| LearningCurve::read_csv_path(f))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| usage(format!("--input {input}: {e}")))?;
        groups.push(PlotGroup { label, curves });
    }
    let spec = PlotSpec { groups, window, title, x_label, y_label, output: svg.to_path_buf() };
    write_svg(&spec).map_err(|e| CliError(EXIT_RUN_FAILURE, format!("--out {}: {e}", svg.display())))?;
    Ok(EXIT_OK)
}

fn cmd_dump_k(
    augmentation: &str,
    env: Option<&str>,
    base_actions: Option<usize>,
    n: usize,
    h: f64,
    random_k: &str,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let kind: AugmentationKind = augmentation.parse().map_err(|e| usage(format!("--augmentation: {e}")))?;
    let random_k: RandomK = random_k.parse().map_err(|e| usage(format!("--random-k: {e}")))?;
    let base = match (base_actions, env) {
        (Some(0), _) => return Err(usage("--base-actions: must be positive")),
        (Some(b), _) => b,
        (None, Some(name)) => {
            let kind: EnvKind = name.parse().map_err(|e| usage(format!("--env: {e}")))?;
            kind.build().map_err(|e| usage(format!("--env: {e}")))?.spec().base_action_count
        }
        (None, None) => return Err(usage("one of --env or --base-actions is required")),
    };
    let spec = AugmentationSpec { kind, n, h, random_k };
    let (_, k) = build_augmentation(&spec, base).map_err(|e| usage(format!("--augmentation: {e}")))?;
    let _ = out.write_all(k.to_text().as_bytes());
    Ok(EXIT_OK)
}
