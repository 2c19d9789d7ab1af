use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gppa_cli::config::ExperimentConfig;
use gppa_cli::{emit_problem_file, load_config, load_problem_file, prepare, run_experiment, CliError, Problem};
use gppa_core::{LinearlyConstrainedQp, SeparableQp};

#[derive(Parser)]
#[command(name = "gppa", version, about = "Generalized proximal point experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    config: PathBuf,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every planned grid point of a config.
    Run(RunArgs),
    /// Like `run`, but the config must define a grid.
    Sweep(RunArgs),
    /// Check a config and print the planned runs.
    Validate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write or check problem files.
    #[command(subcommand)]
    Problem(ProblemCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemKind {
    Qp,
    Separable,
}

#[derive(Subcommand)]
enum ProblemCommand {
    /// Write a seeded random problem.
    Emit {
        path: PathBuf,
        #[arg(long, value_enum, default_value = "qp")]
        kind: ProblemKind,
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Load a problem file and report what it contains.
    Check { path: PathBuf },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let mut cfg = load_config(path).map_err(CliError::Validation)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(args: &RunArgs, require_grid: bool) -> Result<(), CliError> {
    let cfg = load(&args.config, args.seed)?;
    if require_grid && !cfg.has_grid {
        return Err(CliError::Validation(vec![gppa_cli::Issue {
            field: "grid".into(),
            message: "sweep requires a grid".into(),
        }]));
    }
    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let prepared = prepare(cfg).map_err(CliError::Validation)?;
    let rows = run_experiment(&prepared, &out_dir, args.workers)?;
    for r in &rows {
        println!(
            "run {:>3}  gamma {:<8} theoretical {:<12} empirical {:<12} tight {:<5} final {}",
            r.run,
            r.gamma,
            r.theoretical_factor.map_or("-".into(), |x| format!("{x:.5}")),
            r.empirical_tail_max.map_or("-".into(), |x| format!("{x:.5}")),
            r.tight.map_or("-".into(), |t| t.to_string()),
            r.final_metric.map_or("-".into(), |x| format!("{x:.3e}")),
        );
    }
    println!("wrote {} run(s) to {}", rows.len(), out_dir.display());
    Ok(())
}

fn problem(cmd: &ProblemCommand) -> Result<(), CliError> {
    let invalid = |field: &str, message: String| {
        CliError::Validation(vec![gppa_cli::Issue {
            field: field.into(),
            message,
        }])
    };
    match cmd {
        ProblemCommand::Emit {
            path,
            kind,
            n,
            m,
            lambda,
            seed,
        } => {
            let p = match kind {
                ProblemKind::Qp => LinearlyConstrainedQp::random(*n, *m, *seed).map(Problem::Qp),
                ProblemKind::Separable => SeparableQp::random(*n, *m, *lambda, *seed).map(Problem::Separable),
            }
            .map_err(|e| invalid("problem", e.to_string()))?;
            emit_problem_file(&p, path).map_err(|e| match e {
                gppa_cli::ProblemError::Io { path, source } => CliError::Io { path, source },
                other => invalid("problem", other.to_string()),
            })?;
            println!("wrote {} to {}", p.describe(), path.display());
        }
        ProblemCommand::Check { path } => {
            let p = load_problem_file(path).map_err(|e| match e {
                gppa_cli::ProblemError::Io { path, source } => CliError::Io { path, source },
                other => invalid(&path.display().to_string(), other.to_string()),
            })?;
            println!("{}", p.describe());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args, false),
        Command::Sweep(args) => run(args, true),
        Command::Validate { config, seed } => load(config, *seed)
            .and_then(|cfg| prepare(cfg).map_err(CliError::Validation))
            .map(|p| {
                println!("valid: {} planned run(s)", p.runs.len());
                for r in &p.runs {
                    println!("  run {:>3}  gamma {}  c {}  delta0 {:?}", r.index, r.gamma, r.c, r.delta0);
                }
            }),
        Command::Problem(cmd) => problem(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
