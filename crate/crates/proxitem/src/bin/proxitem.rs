//! Command-line front end over the library's `bench` module.
//!
//! Exit codes: 0 all checks pass, 2 certificate failure, 3 configuration
//! error, 4 numeric overflow of the coefficient recursion.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use proxitem::bench::{cmd_audit, cmd_run, cmd_schedule, RunConfig};
use proxitem::problem::ProblemClassParams;
use proxitem::Error;

#[derive(Parser)]
#[command(name = "proxitem", version, about = "Accelerated proximal solvers with runtime convergence certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured sweep of instances x methods x seeds.
    Run(RunArgs),
    /// Print the coefficient schedule for a given q as CSV, with a limits footer.
    Schedule(ScheduleArgs),
    /// Re-evaluate all certificates on a previously written trace.
    Audit(AuditArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration (mirrors the RunConfig fields).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config. The PROXITEM_OUT environment
    /// variable overrides this flag in turn.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Iteration count; overrides the config.
    #[arg(long)]
    horizon: Option<usize>,
    /// Replace the class sweep with the single pair (mu, L); needs --L.
    #[arg(long)]
    mu: Option<f64>,
    /// Smoothness modulus for --mu.
    #[arg(long = "L")]
    l: Option<f64>,
    /// Run only this seed; overrides the config seed list.
    #[arg(long)]
    seed: Option<u64>,
    /// Skip certificate evaluation; only traces are written.
    #[arg(long)]
    no_check: bool,
}

#[derive(Args)]
struct ScheduleArgs {
    /// Inverse condition number, in (0, 1).
    q: f64,
    #[arg(long, default_value_t = 50)]
    horizon: usize,
}

#[derive(Args)]
struct AuditArgs {
    /// Path to a <name>.trace.csv file with its <name>.meta.json sidecar.
    trace: PathBuf,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::ScheduleOverflow { .. } => 4,
        _ => 3,
    }
}

fn run(args: RunArgs) -> Result<u8, Error> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut config = RunConfig::from_json(&text)?;
    if let Some(out) = args.out {
        config.output_dir = out;
    }
    if let Ok(out) = std::env::var("PROXITEM_OUT") {
        if !out.is_empty() {
            config.output_dir = PathBuf::from(out);
        }
    }
    if let Some(h) = args.horizon {
        config.horizon = h;
    }
    match (args.mu, args.l) {
        (Some(mu), Some(l)) => {
            ProblemClassParams::new(mu, l)?;
            config.q_overrides = Some(vec![(mu, l)]);
        }
        (None, None) => {}
        _ => return Err(Error::Config("--mu and --L must be given together".into())),
    }
    if let Some(seed) = args.seed {
        config.seeds = vec![seed];
    }
    if args.no_check {
        config.check_certificates = false;
    }

    let outcome = cmd_run(&config)?;
    for cell in &outcome.cells {
        let verdict = match &cell.report {
            Some(r) if r.summary.passed => "pass",
            Some(_) => "FAIL",
            None => "unchecked",
        };
        println!(
            "{:<28} {:<10} seed {:<3} -> {} ({})",
            cell.instance_id,
            cell.method.name(),
            cell.seed,
            cell.trace_path.display(),
            verdict
        );
    }
    if let Some(summary) = &outcome.summary_path {
        println!("summary: {}", summary.display());
    }
    if outcome.all_passed {
        Ok(0)
    } else {
        for failure in &outcome.failures {
            eprintln!("certificate failure: {failure}");
        }
        Ok(2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<u8, Error> = match cli.command {
        Command::Run(args) => run(args),
        Command::Schedule(args) => cmd_schedule(args.q, args.horizon).map(|csv| {
            print!("{csv}");
            0
        }),
        Command::Audit(args) => cmd_audit(&args.trace).map(|outcome| {
            println!("report: {}", outcome.report_json.display());
            if outcome.report.summary.passed {
                println!("all applicable certificate checks pass");
                0
            } else {
                eprintln!("certificate checks failed; see report");
                2
            }
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
