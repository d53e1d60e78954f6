use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use photonic_hopfield::fock::MultiplicityConvention;
use photonic_hopfield::harness::config::EnergyModeName;
use photonic_hopfield::harness::{
    cmd_distribution, cmd_hopfield, cmd_mc, cmd_phase_diagram, cmd_validate, Overrides, RunConfig,
};

/// Photonic generalized Hopfield network simulator.
#[derive(Debug, Parser)]
#[command(name = "photonic-hopfield", version)]
struct Cli {
    /// TOML run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    energy_mode: Option<Mode>,
    /// Detection events per energy estimate in sampled mode.
    #[arg(long, global = true)]
    events: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Convention {
    Factorial,
    OccupationProduct,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Output distributions for spin layers.
    Distribution,
    /// Metropolis chains with energy traces and autocorrelation.
    Mc,
    /// Disorder-averaged phase diagram.
    PhaseDiagram,
    /// Retrieval on an engineered scattering matrix.
    Hopfield,
    /// Cross-check evaluators against reference oracles.
    Validate {
        #[arg(long, value_enum, default_value = "factorial")]
        convention: Convention,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: cli.seed,
        output_dir: cli.out.clone(),
        energy_mode: cli.energy_mode.map(|m| match m {
            Mode::Exact => EnergyModeName::Exact,
            Mode::Sampled => EnergyModeName::Sampled,
        }),
        events: cli.events,
    });
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Distribution => {
            let r = cmd_distribution(&cfg)?;
            println!(
                "{} settings x {} outcomes, max normalization error {:.2e}",
                r.settings, r.outcomes, r.max_normalization_error
            );
            if let Some(t) = r.mean_tvd {
                println!("mean sampled TVD {t:.4}");
            }
            println!("wrote {}", r.dir.display());
        }
        Command::Mc => {
            let r = cmd_mc(&cfg)?;
            for run in &r.runs {
                println!(
                    "N_P={} T={} acceptance={:.3} mean final E={:.4}",
                    run.n_p, run.temperature, run.acceptance_rate, run.mean_final_energy
                );
            }
            println!("wrote {}", r.dir.display());
        }
        Command::PhaseDiagram => {
            let r = cmd_phase_diagram(&cfg)?;
            for p in &r.points {
                println!(
                    "alpha={} T={} N_P={} majority={} votes={:?} coexistence={:.2}",
                    p.alpha,
                    p.temperature,
                    p.n_p,
                    p.majority.as_deref().unwrap_or("-"),
                    p.votes,
                    p.coexistence_fraction
                );
            }
            println!("wrote {}", r.dir.display());
        }
        Command::Hopfield => {
            let r = cmd_hopfield(&cfg)?;
            for run in &r.runs {
                println!(
                    "T={} retrieved={:.2} real={:.3}",
                    run.temperature, run.retrieved_fraction, run.real_fraction
                );
            }
            println!("wrote {}", r.dir.display());
        }
        Command::Validate { convention } => {
            let convention = match convention {
                Convention::Factorial => MultiplicityConvention::Factorial,
                Convention::OccupationProduct => MultiplicityConvention::OccupationProduct,
            };
            let (r, dir) = cmd_validate(&cfg, convention)?;
            for c in &r.checks {
                println!(
                    "{} {}: max error {:.3e} (tolerance {:.1e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.max_error,
                    c.tolerance
                );
            }
            println!("wrote {}", dir.display());
            return Ok(r.all_passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building thread pool")
            .and_then(|pool| pool.install(|| run(&cli))),
        None => run(&cli),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
