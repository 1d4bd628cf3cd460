//! Command-line front end: wires device/spin configs to the core modules
//! with reproducible seeded runs and CSV/JSON/SVG outputs.

mod commands;
mod manifest;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit codes defined by the interface contract.
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_FIT_FAILURE: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "strainforge", version, about = "Nanobeam OMC/NV design and characterization toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Device config JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Spin config JSON.
    #[arg(long)]
    pub spin_config: Option<PathBuf>,
    /// Base seed; all RNG streams derive from it by task-name hashing.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Output flavor for traces: csv (default), json, or svg plots.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Phononic band structure, gap list, and optical reflection spectrum.
    Bands {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Genetic design search maximizing Q0 x epsilon_zp.
    Optimize {
        #[command(flatten)]
        common: CommonArgs,
        /// GA hyperparameter JSON; defaults are built in.
        #[arg(long)]
        ga_config: Option<PathBuf>,
    },
    /// Synthesize-and-fit round trip over all six standard measurements.
    Characterize {
        #[command(flatten)]
        common: CommonArgs,
        /// Disable every noise source; fits then recover inputs exactly.
        #[arg(long)]
        no_noise: bool,
    },
    /// Run one pulse sequence (JSON step list) on the spin simulator.
    SimulateSpin {
        #[command(flatten)]
        common: CommonArgs,
        /// Pulse sequence JSON file.
        #[arg(long)]
        sequence: PathBuf,
        /// Readout repetitions; 0 means noiseless expectation only.
        #[arg(long, default_value_t = 0)]
        shots: u64,
    },
    /// Fit a trace CSV with one of the shipped models.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        /// Input trace CSV (header `axis,value,sigma`).
        #[arg(long)]
        input: PathBuf,
        /// Model id: lorentzian_dip, lorentzian_peak, decaying_cosine,
        /// ramsey_fringe, or hahn_echo.
        #[arg(long)]
        model: String,
        /// Optional JSON array of initial parameters.
        #[arg(long)]
        init: Option<String>,
    },
    /// Cooperativity and cooling budget from rates or from a design.
    Budget {
        #[command(flatten)]
        common: CommonArgs,
        /// Zero-point coupling (Hz).
        #[arg(long)]
        g_hz: Option<f64>,
        /// Qubit coherence time (s); the qubit rate is 1/T2.
        #[arg(long)]
        t2_s: Option<f64>,
        /// Mechanical frequency (Hz).
        #[arg(long, default_value_t = 6e9)]
        fm_hz: f64,
        /// Mechanical quality factor.
        #[arg(long, default_value_t = 1e6)]
        qm: f64,
        /// Bath temperature (K).
        #[arg(long, default_value_t = 0.0)]
        temp_k: f64,
        /// Orbital linewidth (Hz); selects the orbital-qubit convention.
        #[arg(long)]
        linewidth_hz: Option<f64>,
        /// Derive g from the device config's zero-point strain.
        #[arg(long)]
        from_design: bool,
    },
}

/// Map a core error to the documented exit codes.
fn exit_code_for(err: &strainforge_core::Error) -> u8 {
    use strainforge_core::Error::*;
    match err {
        Schema { .. } | Validation { .. } | Domain(_) | Io(_) | Data(_) => EXIT_CONFIG,
        Numerical(_) => EXIT_NUMERICAL,
    }
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("STRAINFORGE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("STRAINFORGE_THREADS must be an integer, got `{raw}`"))?;
    if n == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("thread pool: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let outcome = match cli.cmd {
        Cmd::Bands { common } => commands::cmd_bands(&common),
        Cmd::Optimize { common, ga_config } => commands::cmd_optimize(&common, ga_config.as_deref()),
        Cmd::Characterize { common, no_noise } => commands::cmd_characterize(&common, no_noise),
        Cmd::SimulateSpin {
            common,
            sequence,
            shots,
        } => commands::cmd_simulate_spin(&common, &sequence, shots),
        Cmd::Fit {
            common,
            input,
            model,
            init,
        } => commands::cmd_fit(&common, &input, &model, init.as_deref()),
        Cmd::Budget {
            common,
            g_hz,
            t2_s,
            fm_hz,
            qm,
            temp_k,
            linewidth_hz,
            from_design,
        } => commands::cmd_budget(
            &common,
            commands::BudgetArgs {
                g_hz,
                t2_s,
                fm_hz,
                qm,
                temp_k,
                linewidth_hz,
                from_design,
            },
        ),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
