use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use zeno_core::checks::run_checks;
use zeno_core::experiment::{
    emit_report, parse_config, run_comparison, ExperimentConfig, Method, OutputFormat,
};
use zeno_core::linalg3::Vec3C;
use zeno_core::montecarlo::{conditional_state_check, first_jump_ks};
use zeno_core::vsystem::GeneratorKind;
use zeno_core::ZenoError;

#[derive(Parser)]
#[command(name = "zeno", version, about = "Repeated probe pulses on a V-system atom")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Comparison table at the reference parameters.
    Table1(TableArgs),
    /// Comparison table with omega3 = a3 / 2.
    Table2(TableArgs),
    /// Comparison described by a JSON config file.
    Run { config: PathBuf },
    /// Monte Carlo diagnostics: KS test of first-jump times and
    /// conditional-state fidelities.
    Trajectories(TrajectoryArgs),
    /// Runs the property suite; exits with 4 if any check fails.
    Check,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also run the Monte Carlo ensemble.
    #[arg(long)]
    monte_carlo: bool,
    #[arg(long, default_value_t = 10_000)]
    n_traj: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TrajectoryArgs {
    #[arg(long, default_value_t = 10_000)]
    n_traj: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rate factor; 1 runs at full scale.
    #[arg(long, default_value_t = 1e-4)]
    rescale: f64,
    /// Use omega3 = a3 / 2.
    #[arg(long)]
    strong_probe: bool,
}

fn table(mut cfg: ExperimentConfig, args: TableArgs) -> Result<String, ZenoError> {
    cfg.output.format = match args.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    cfg.output.path = args.output;
    if args.monte_carlo {
        cfg.methods.push(Method::MonteCarlo);
        cfg.mc.n_traj = args.n_traj;
        cfg.mc.master_seed = args.seed;
    }
    report(&cfg)
}

fn report(cfg: &ExperimentConfig) -> Result<String, ZenoError> {
    let rows = run_comparison(cfg)?;
    let text = emit_report(&rows, cfg)?;
    Ok(if cfg.output.path.is_some() { String::new() } else { text })
}

fn trajectories(args: TrajectoryArgs) -> Result<String, ZenoError> {
    if !(args.rescale > 0.0) || args.n_traj == 0 {
        return Err(ZenoError::Config {
            field: "rescale/n_traj".into(),
            reason: "must be positive".into(),
        });
    }
    let base = if args.strong_probe {
        ExperimentConfig::table2()
    } else {
        ExperimentConfig::table1()
    };
    let p = base.params.rescaled(args.rescale);
    let tau_p = base.tau_p / args.rescale;
    let ks = first_jump_ks(&Vec3C::basis(1), &p, GeneratorKind::ProbeOn, tau_p, args.n_traj, args.seed)?;
    let cond = conditional_state_check(&p, tau_p, args.n_traj, args.seed)?;
    let fmt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.6}"));
    Ok(format!(
        "ks_statistic {:.6e}\nks_critical_1pct {:.6e}\nks_passed {}\n\
         no_emission_trajectories {}\nemission_trajectories {}\n\
         fidelity_no_emission {}\nfidelity_emission {}\n",
        ks.statistic,
        ks.critical_value,
        ks.passed,
        cond.states.n_no_emission,
        cond.states.n_emission,
        fmt(cond.no_emission),
        fmt(cond.emission),
    ))
}

fn check() -> ExitCode {
    let outcomes = run_checks();
    for c in &outcomes {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if outcomes.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(4)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Table1(a) => table(ExperimentConfig::table1(), a),
        Command::Table2(a) => table(ExperimentConfig::table2(), a),
        Command::Run { config } => std::fs::read_to_string(&config)
            .map_err(|e| ZenoError::Config {
                field: config.display().to_string(),
                reason: e.to_string(),
            })
            .and_then(|s| parse_config(&s))
            .and_then(|cfg| report(&cfg)),
        Command::Trajectories(a) => trajectories(a),
        Command::Check => return check(),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("zeno: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
