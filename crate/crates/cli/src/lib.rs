//! Command-line driver: band diagrams, spectral indices, winding numbers,
//! edge modes, homotopy tracking and the combined verification run.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::{parse_complex, Overrides, RunConfig, Tolerances};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("output error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nhbloch", version, about = "Bands, spectral indices and edge modes of 1D non-Hermitian photonic crystals")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// vacuum, example3-hermitian, example3-nonhermitian or afa-custom
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// JSON run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: out)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// k intervals on [−π, π]
    #[arg(long, global = true)]
    pub k_samples: Option<usize>,
    /// Search rectangle re0,re1,im0,im1
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub region: Option<String>,
    /// Number of bands to trace
    #[arg(long, global = true)]
    pub bands: Option<usize>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub tol_circle: Option<f64>,
    #[arg(long, global = true)]
    pub tol_curve: Option<f64>,
    #[arg(long, global = true)]
    pub tol_bc: Option<f64>,
    #[arg(long, global = true)]
    pub tol_cluster: Option<f64>,
    #[arg(long, global = true)]
    pub tol_rank: Option<f64>,
    #[arg(long, global = true)]
    pub tol_decay: Option<f64>,
    #[arg(long, global = true)]
    pub tol_ode: Option<f64>,
    #[arg(long, global = true)]
    pub tol_close: Option<f64>,
    #[arg(long, global = true)]
    pub tol_collision: Option<f64>,
    #[arg(long, global = true)]
    pub tol_min_step: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trace the band diagram: bands.csv, bands.json
    Band,
    /// Spectral index at one frequency: index.json
    Index {
        #[arg(long, allow_hyphen_values = true)]
        omega: String,
    },
    /// Winding number of one band about a base point: winding.json
    Winding {
        #[arg(long)]
        band: usize,
        /// `auto` or a complex number such as 0.53-0.08i
        #[arg(long, default_value = "auto", allow_hyphen_values = true)]
        base: String,
    },
    /// Edge mode at one frequency: mode.csv, edge.json
    Edge {
        #[arg(long, allow_hyphen_values = true)]
        omega: String,
        /// outgoing, pec or pmc
        #[arg(long, default_value = "outgoing")]
        bc: String,
        /// Profile length in periods
        #[arg(long, default_value_t = 5.0)]
        z_max: f64,
        #[arg(long, default_value_t = 32)]
        samples_per_cell: usize,
    },
    /// Track the index along the path from the Hermitian part: homotopy.json
    Homotopy {
        #[arg(long)]
        t_steps: Option<usize>,
    },
    /// Run the index-jump, edge-mode and Hermitian-partner checks: report.json
    Verify {
        /// Interior samples per loop
        #[arg(long)]
        samples: Option<usize>,
    },
}

impl GlobalArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            preset: self.preset.clone(),
            config: self.config.clone(),
            out: self.out.clone(),
            seed: self.seed,
            k_samples: self.k_samples,
            region: self.region.clone(),
            bands: self.bands,
            samples: None,
            t_steps: None,
            tolerances: Tolerances {
                circle: self.tol_circle,
                curve: self.tol_curve,
                bc: self.tol_bc,
                cluster: self.tol_cluster,
                rank: self.tol_rank,
                decay: self.tol_decay,
                ode: self.tol_ode,
                close: self.tol_close,
                collision: self.tol_collision,
                min_step: self.tol_min_step,
            },
        }
    }
}

// A closed stdout (e.g. piped into `head`) must not abort a run whose files
// are already written.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

fn print_json<T: serde::Serialize>(v: &T) {
    if let Ok(s) = serde_json::to_string_pretty(v) {
        say!("{s}");
    }
}

/// Parses and runs one invocation; the result is the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("nhbloch: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut o = cli.global.overrides();
    match &cli.command {
        Command::Homotopy { t_steps } => o.t_steps = *t_steps,
        Command::Verify { samples } => o.samples = *samples,
        _ => {}
    }
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        // A pool built earlier in the same process keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = RunConfig::resolve(&o)?;
    match &cli.command {
        Command::Band => {
            let d = commands::cmd_band(&cfg)?;
            for b in &d.bands {
                say!("band {}: closed {}, closure gap {:.3e}, max |Im ω| {:.3e}", b.band, b.closed, b.closure_gap, b.max_abs_imag);
            }
            for w in &d.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Index { omega } => print_json(&commands::cmd_index(&cfg, parse_complex(omega)?)?),
        Command::Winding { band, base } => {
            let base = match base.as_str() {
                "auto" => None,
                s => Some(parse_complex(s)?),
            };
            print_json(&commands::cmd_winding(&cfg, *band, base)?);
        }
        Command::Edge { omega, bc, z_max, samples_per_cell } => {
            let d = commands::cmd_edge(&cfg, parse_complex(omega)?, commands::parse_bc(bc)?, *z_max, *samples_per_cell)?;
            print_json(&d);
        }
        Command::Homotopy { .. } => {
            let d = commands::cmd_homotopy(&cfg)?;
            say!(
                "homotopy: {} steps, index constant zero {}, blocked at {:?}",
                d.steps.len(),
                d.index_constant_zero,
                d.blocked_at
            );
            if !d.pass {
                return Err(CliError::Verification("index not constantly zero along the homotopy".into()));
            }
        }
        Command::Verify { .. } => {
            let r = commands::cmd_verify(&cfg)?;
            for b in &r.index_jump.results {
                say!("index jump band {}: {} checked, {} failures, {} on spectrum", b.band, b.checked, b.failures, b.on_spectrum);
            }
            for b in &r.edge_modes.results {
                say!("edge modes band {} ({}): {} checked, {} failures, pass {}", b.band, b.bc, b.checked, b.failures, b.pass);
            }
            let p = &r.hermitian_partner;
            say!(
                "hermitian partner: {} off-axis + {} gap points, {} failures",
                p.off_axis.len(),
                p.gap_points.len(),
                p.failures
            );
            say!("pass: {}", r.pass);
            if !r.pass {
                return Err(CliError::Verification(format!("see {}", cfg.out.join("report.json").display())));
            }
        }
    }
    Ok(())
}
