use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use paug::harness::{self, ExperimentConfig, PlotSeries};

#[derive(Parser)]
#[command(name = "paug", version, about = "Policy augmentation experiments on classic control tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run repeated experiments and write curves.csv, plot.svg, meta.txt and solver.log.
    Run(RunArgs),
    /// Overlay the mean curves of several curves.csv files.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// mountaincar or cartpole
    #[arg(long)]
    env: Option<String>,
    /// paug-q, paug-dqn, eps, count or dqn
    #[arg(long)]
    agent: Option<String>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "tau-e")]
    tau_e: Option<usize>,
    #[arg(long = "tau-q")]
    tau_q: Option<usize>,
    /// Steps between solves, or `episode` to solve at every episode end
    #[arg(long = "solve-period")]
    solve_period: Option<String>,
    #[arg(long)]
    rank: Option<usize>,
    /// Flat `key = value` file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Any other configuration key, e.g. `--set alpha=0.2`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct PlotArgs {
    /// Output SVG path
    #[arg(long)]
    out: PathBuf,
    /// `LABEL=path/to/curves.csv`
    #[arg(required = true)]
    series: Vec<String>,
}

fn run(args: RunArgs) -> paug::Result<()> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    if let Some(path) = &args.config {
        pairs.extend(harness::config::parse_pairs(&std::fs::read_to_string(path)?)?);
    }
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| paug::Error::Parse(format!("--set `{kv}` is not KEY=VALUE")))?;
        pairs.push((k.to_string(), v.to_string()));
    }
    let flags = [
        ("env", args.env),
        ("agent", args.agent),
        ("episodes", args.episodes.map(|v| v.to_string())),
        ("reps", args.reps.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("out", args.out.map(|p| p.display().to_string())),
        ("tau-e", args.tau_e.map(|v| v.to_string())),
        ("tau-q", args.tau_q.map(|v| v.to_string())),
        ("solve-period", args.solve_period),
        ("rank", args.rank.map(|v| v.to_string())),
    ];
    pairs.extend(flags.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));

    let mut config = ExperimentConfig::from_pairs(&pairs)?;
    if config.out_dir.is_none() {
        config.out_dir = Some(PathBuf::from("."));
    }
    let result = harness::run_experiment(&config)?;
    let summary = harness::summarize(&result.records)?;
    let tail = summary.mean.last().copied().unwrap_or(f64::NAN);
    println!(
        "{} on {}: {} of {} repetitions ok, final mean return {}; outputs in {}",
        config.agent.kind,
        config.env,
        result.records.len(),
        config.repetitions,
        harness::format_g6(tail),
        config.out_dir.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
    );
    Ok(())
}

fn plot(args: PlotArgs) -> paug::Result<()> {
    let mut loaded = Vec::new();
    for s in &args.series {
        let (label, path) = s
            .split_once('=')
            .ok_or_else(|| paug::Error::Parse(format!("series `{s}` is not LABEL=PATH")))?;
        loaded.push((label.to_string(), harness::read_curves_csv(path.as_ref())?));
    }
    let series: Vec<PlotSeries> = loaded
        .iter()
        .map(|(label, summary)| PlotSeries { label: label.clone(), summary })
        .collect();
    harness::emit_plot_overlay(&series, &args.out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Plot(a) => plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
