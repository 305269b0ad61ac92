use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use onoff_core::asymptotic::{eta_threshold, optimal_sbar, spatial_efficiency, MAX_GRID_STEP};
use onoff_core::quantization::{distortion_rate_bounds, estimate_distortion};
use onoff_core::selection::choose_s_main;
use onoff_core::sim::{self, mc, ClassesFile, ConfigFile, OutputFormat};

#[derive(Parser)]
#[command(name = "onoff", version, about = "Finite-rate feedback broadcast: on-user selection and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and write one row per (SNR, scheme).
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: OutputFormat,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the main-order choice of s and on-users at the first SNR.
    SelectS {
        #[arg(long)]
        config: PathBuf,
    },
    /// Large-system threshold and spatial efficiency.
    Asymptotic(AsymptoticArgs),
    /// Distortion bounds and estimate for a random codebook.
    Distortion {
        #[arg(long = "L")]
        antennas: usize,
        #[arg(long = "R")]
        rate_bits: u32,
        /// Also measure one random codebook by Monte Carlo.
        #[arg(long)]
        empirical: bool,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the self-check suite; exits nonzero if any check fails.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the report as JSON instead of one line per check.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct AsymptoticArgs {
    #[arg(long)]
    classes: PathBuf,
    #[arg(long)]
    mbar: f64,
    #[arg(long, conflicts_with = "optimize", required_unless_present = "optimize")]
    sbar: Option<f64>,
    #[arg(long)]
    optimize: bool,
    #[arg(long, default_value_t = MAX_GRID_STEP)]
    grid_step: f64,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn print_json(value: &impl serde::Serialize) -> onoff_core::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| onoff_core::Error::Config(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> onoff_core::Result<ExitCode> {
    match cli.command {
        Command::Simulate { config, out, format, seed } => {
            let mut file = ConfigFile::load(&config)?;
            if let Some(seed) = seed {
                file.seed = seed;
            }
            let spec = file.into_spec()?;
            if spec.schemes.contains(&sim::Scheme::Oracle) {
                eprintln!("note: the oracle scheme re-selects on-users every block and is an upper reference only");
            }
            let rows = sim::run_experiment(&spec)?;
            sim::write_results(&rows, &out, format)?;
        }
        Command::SelectS { config } => {
            let system = ConfigFile::load(&config)?.system()?;
            print_json(&choose_s_main(&system))?;
        }
        Command::Asymptotic(a) => {
            let dist = ClassesFile::load(&a.classes)?.distribution()?;
            if a.optimize {
                let opt = optimal_sbar(&dist, a.mbar, a.grid_step)?;
                print_json(&json!({
                    "mbar": a.mbar,
                    "sbar_star": opt.sbar,
                    "spatial_efficiency": opt.value,
                    "eta_threshold": eta_threshold(&dist, a.mbar, opt.sbar),
                    "left_slope": opt.left_slope,
                    "right_slope": opt.right_slope,
                }))?;
            } else {
                let sbar = a.sbar.expect("clap requires --sbar without --optimize");
                print_json(&json!({
                    "mbar": a.mbar,
                    "sbar": sbar,
                    "eta_threshold": eta_threshold(&dist, a.mbar, sbar),
                    "spatial_efficiency": spatial_efficiency(&dist, a.mbar, sbar),
                }))?;
            }
        }
        Command::Distortion { antennas, rate_bits, empirical, trials, seed } => {
            if antennas == 0 {
                return Err(onoff_core::Error::InvalidInput("L must be positive".into()));
            }
            let bounds = distortion_rate_bounds(antennas, rate_bits).ok();
            let mut out = json!({
                "L": antennas,
                "R": rate_bits,
                "lower": bounds.map(|b| b.lower),
                "upper": bounds.map(|b| b.upper),
                "estimate_D": estimate_distortion(antennas, rate_bits),
            });
            if empirical {
                out["empirical_D"] = json!(mc::fresh_codebook_distortion(antennas, rate_bits, trials, seed)?);
                out["trials"] = json!(trials);
            }
            print_json(&out)?;
        }
        Command::Verify { seed, json } => {
            let report = sim::verify_suite(seed)?;
            if json {
                print_json(&report)?;
            } else {
                for c in &report.checks {
                    println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                }
            }
            if !report.all_passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
