mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use muskat_core::evolution;
use muskat_core::verify::{self, Criterion, Level};
use muskat_core::{io, stability, Model, MuskatError, PhysicalParams};

use config::{ConfigError, ExperimentConfig};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "muskat",
    version,
    about = "Two-phase Muskat flow in a disk: simulations, spectra, oracles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the interfaces of an experiment file and write diagnostics and snapshots.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Linearize about a circular equilibrium and classify its spectrum.
    Spectrum {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Tabulate the concentric-annulus eigenvalues for m = 0..=m_max.
    Oracle {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 2.0)]
        wall_radius: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        k1: f64,
        #[arg(long, default_value_t = 1.0)]
        k2: f64,
        #[arg(long, default_value_t = 1.0)]
        rho1: f64,
        #[arg(long, default_value_t = 2.0)]
        rho2: f64,
        #[arg(long, value_enum, default_value_t = ModelArg::Mu)]
        model: ModelArg,
        #[arg(long, default_value_t = 8)]
        m_max: u32,
        /// Directory for `oracle.csv`; the table goes to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance criteria and print a pass/fail table.
    Verify {
        #[arg(long, value_enum, default_value_t = LevelArg::Fast)]
        level: LevelArg,
        #[arg(long, default_value_t = verify::DEFAULT_SEED)]
        seed: u64,
        /// Also write the report and the artifact set here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Restrict to these criteria (by identifier, e.g. ORACLE-EQ).
        #[arg(long = "only")]
        only: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Mu,
    Mut,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

enum Failure {
    Config(String),
    Hard(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<MuskatError> for Failure {
    fn from(e: MuskatError) -> Self {
        Failure::Hard(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Hard(e.to_string())
    }
}

fn output_dir(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn cmd_simulate(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<bool, Failure> {
    let mut cfg = ExperimentConfig::load(path)?;
    if seed.is_some() {
        cfg.seed = seed;
    }
    let sim = cfg.simulate_section(path)?.clone();
    let dir = output_dir(out, &cfg);
    let outcome = evolution::run(&sim)?;
    let written = io::write_run(&outcome, &dir)?;
    fs::write(dir.join("config.toml"), cfg.to_toml())?;
    println!(
        "{:?} at t = {} after {} steps: {}",
        outcome.trajectory.termination,
        outcome.final_time,
        outcome.steps.len() - 1,
        outcome.reason
    );
    let drift = outcome.area_drift();
    for (j, (fit, d)) in outcome.final_circles.iter().zip(&drift).enumerate() {
        println!(
            "  component {j}: radius {:.6}, fit residual {:.2e}, area drift {:.2e}",
            fit.circle.radius, fit.residual, d
        );
    }
    println!("wrote {} files to {}", written.len() + 1, dir.display());
    Ok(true)
}

fn cmd_spectrum(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<bool, Failure> {
    let mut cfg = ExperimentConfig::load(path)?;
    if seed.is_some() {
        cfg.seed = seed;
    }
    let sp = cfg.spectrum_section(path)?.clone();
    let dir = output_dir(out, &cfg);
    let l = stability::assemble_linearization(&sp.equilibrium, &sp.params, sp.n_per_circle)?;
    let report = stability::spectrum(&l, &sp.equilibrium)?;
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("spectrum.json"), io::to_json_pretty(&report)?)?;
    fs::write(dir.join("config.toml"), cfg.to_toml())?;
    println!(
        "{:?}: kernel {} (expected {}), unstable {} (expected {}), rank(L) {}, rank(L^2) {}",
        report.classification,
        report.kernel_count,
        report.expected_kernel,
        report.unstable_count,
        report.expected_unstable,
        report.rank_l,
        report.rank_l2
    );
    let unstable = report.unstable_eigenvalues();
    if !unstable.is_empty() {
        println!("unstable eigenvalues: {unstable:?}");
    }
    println!("wrote {}", dir.join("spectrum.json").display());
    Ok(true)
}

fn cmd_oracle(
    radius: f64,
    wall_radius: f64,
    params: Result<PhysicalParams, MuskatError>,
    m_max: u32,
    out: Option<PathBuf>,
) -> Result<bool, Failure> {
    let params = params.map_err(|e| Failure::Config(e.to_string()))?;
    if !(radius > 0.0 && wall_radius > radius) {
        return Err(Failure::Config(format!(
            "need 0 < radius < wall_radius, got {radius} and {wall_radius}"
        )));
    }
    match out {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            let path = dir.join("oracle.csv");
            io::write_oracle_table(
                radius,
                wall_radius,
                &params,
                m_max,
                fs::File::create(&path)?,
            )?;
            println!("wrote {}", path.display());
        }
        None => {
            let stdout = std::io::stdout();
            io::write_oracle_table(radius, wall_radius, &params, m_max, stdout.lock())?;
        }
    }
    Ok(true)
}

fn cmd_verify(
    level: Level,
    seed: u64,
    out: Option<PathBuf>,
    only: &[String],
) -> Result<bool, Failure> {
    let criteria = if only.is_empty() {
        Criterion::ALL.to_vec()
    } else {
        only.iter()
            .map(|s| s.parse::<Criterion>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::Config(e.to_string()))?
    };
    println!("verify level {level}, seed {seed}");
    let report = verify::run_criteria(level, seed, &criteria, |r, elapsed| {
        println!("{}  [{:.1} s]", r.line(), elapsed.as_secs_f64());
        let _ = std::io::stdout().flush();
    });
    if let Some(dir) = out {
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("verify_report.json"), io::to_json_pretty(&report)?)?;
        verify::write_artifacts(&dir.join("artifacts"), seed)?;
    }
    let failing = report.failing();
    if failing.is_empty() {
        println!("all {} criteria passed", report.results.len());
    } else {
        let ids: Vec<&str> = failing.iter().map(|c| c.id()).collect();
        println!(
            "{} of {} criteria failed: {}",
            ids.len(),
            report.results.len(),
            ids.join(", ")
        );
    }
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, out, seed } => cmd_simulate(&config, out, seed),
        Command::Spectrum { config, out, seed } => cmd_spectrum(&config, out, seed),
        Command::Oracle {
            radius,
            wall_radius,
            sigma,
            k1,
            k2,
            rho1,
            rho2,
            model,
            m_max,
            out,
        } => {
            let model = match model {
                ModelArg::Mu => Model::Mu,
                ModelArg::Mut => Model::MuT,
            };
            cmd_oracle(
                radius,
                wall_radius,
                PhysicalParams::new(sigma, k1, k2, rho1, rho2, model),
                m_max,
                out,
            )
        }
        Command::Verify {
            level,
            seed,
            out,
            only,
        } => {
            let level = match level {
                LevelArg::Fast => Level::Fast,
                LevelArg::Full => Level::Full,
            };
            cmd_verify(level, seed, out, &only)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILURE),
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Hard(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
