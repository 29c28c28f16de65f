use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use anosov_lab::cli::{emit_plots, run_experiment, validate_config, ExperimentKind, PlotKind};

#[derive(Parser)]
#[command(name = "anosov-lab", version, about = "Numerical experiments on Anosov systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long, env = "ANOSOV_LAB_OUT")]
    out: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for module-level parallel tasks.
    #[arg(long, env = "ANOSOV_LAB_JOBS")]
    jobs: Option<usize>,
    /// Also draw SVG plots of the reports.
    #[arg(long)]
    plots: bool,
}

#[derive(Subcommand)]
enum Command {
    Norms(RunArgs),
    Livsic(RunArgs),
    Threshold(RunArgs),
    SourceSweep(RunArgs),
    Propagation(RunArgs),
    Foliation(RunArgs),
    Mls(RunArgs),
    StretchStability(RunArgs),
    Conformal(RunArgs),
    /// Check a config and print it fully resolved.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Draw SVG plots from a JSON report.
    Plot {
        #[arg(long)]
        report: PathBuf,
        /// ratio-vs-h, band-decay, slope-fit or threshold; inferred from the report when omitted.
        #[arg(long)]
        kind: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Norms(a) => (ExperimentKind::Norms, a),
        Command::Livsic(a) => (ExperimentKind::Livsic, a),
        Command::Threshold(a) => (ExperimentKind::Threshold, a),
        Command::SourceSweep(a) => (ExperimentKind::SourceSweep, a),
        Command::Propagation(a) => (ExperimentKind::Propagation, a),
        Command::Foliation(a) => (ExperimentKind::Foliation, a),
        Command::Mls(a) => (ExperimentKind::Mls, a),
        Command::StretchStability(a) => (ExperimentKind::StretchStability, a),
        Command::Conformal(a) => (ExperimentKind::Conformal, a),
        Command::Validate { config } => return validate(&config),
        Command::Plot { report, kind } => return plot(&report, kind.as_deref()),
    };
    run(kind, args)
}

fn validate(path: &PathBuf) -> ExitCode {
    match validate_config(path) {
        Ok(cfg) => {
            println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
            ExitCode::SUCCESS
        }
        Err(errs) => {
            for e in &errs {
                eprintln!("error: {e}");
            }
            ExitCode::from(2)
        }
    }
}

fn plot(report: &PathBuf, kind: Option<&str>) -> ExitCode {
    let kind = match kind {
        Some(k) => PlotKind::parse(k).ok_or_else(|| format!("unknown plot kind {k:?}")),
        None => std::fs::read_to_string(report)
            .map_err(|e| format!("cannot read {}: {e}", report.display()))
            .and_then(|t| serde_json::from_str(&t).map_err(|e| format!("malformed report: {e}")))
            .and_then(|v| PlotKind::for_report(&v).ok_or_else(|| "cannot infer the plot kind; pass --kind".to_string())),
    };
    let result = kind.and_then(|k| emit_plots(report, k).map_err(|e| e.to_string()));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(kind: ExperimentKind, args: RunArgs) -> ExitCode {
    let mut cfg = match validate_config(&args.config) {
        Ok(c) => c,
        Err(errs) => {
            for e in &errs {
                eprintln!("error: {e}");
            }
            return ExitCode::from(2);
        }
    };
    if cfg.kind != kind {
        eprintln!("error: config describes a {} experiment, not {kind}", cfg.kind);
        return ExitCode::from(2);
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().expect("global pool is set once");
    }
    let out = args
        .out
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
    match run_experiment(&cfg, &out, args.plots) {
        Ok(m) => {
            for c in &m.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("wrote {} files to {}", m.files.len(), out.display());
            ExitCode::from(m.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
