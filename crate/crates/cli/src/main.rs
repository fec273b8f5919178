//! `multidimer`: command-line front end for the multinomial dimer library.
//!
//! Every command reads an optional JSON run configuration, applies the
//! flags on top, and writes its artifacts with a `manifest.json` of
//! SHA-256 hashes under `--out`.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{set, Format, RunConfig};

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    /// Malformed input, exit code 2.
    pub fn invalid(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    /// A verification that ran but did not meet its threshold, exit code 1.
    pub fn check(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }

    /// I/O and serialization failures, exit code 1.
    pub fn other(message: impl ToString) -> Self {
        CliError { code: 1, message: message.to_string() }
    }
}

impl From<multidimer::Error> for CliError {
    fn from(e: multidimer::Error) -> Self {
        CliError { code: e.exit_code() as u8, message: e.to_string() }
    }
}

#[derive(Parser)]
#[command(name = "multidimer", version, about = "Critical gauges, surface tensions and limit shapes of the multinomial dimer model")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Encoding of tabular artifacts.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads; defaults to MULTIDIMER_THREADS, then to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

/// Shape selection shared by the region-based commands.
#[derive(Args)]
struct ShapeArgs {
    /// Shape or family name.
    shape: Option<String>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    depth: Option<u64>,
    #[arg(long)]
    lattice: Option<String>,
    /// Interior multiplicity.
    #[arg(long = "N")]
    big_n: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build a region and write it as JSON.
    Region(ShapeArgs),
    /// Solve for the critical gauge of a region file.
    Sinkhorn {
        /// Region JSON written by `region`.
        region: Option<String>,
        /// Edge weights, one per line in edge order.
        #[arg(long)]
        weights: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Compare the Sinkhorn gauge with the closed form.
    Verify {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Tabulate the surface tension on a grid over the Newton polytope.
    SurfaceTension {
        #[arg(long)]
        lattice: Option<String>,
        /// Points per axis.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Map the vertices of a region into the Newton polytope.
    Embed {
        #[command(flatten)]
        shape: ShapeArgs,
        /// `critical` or `uniform`.
        #[arg(long)]
        flow: Option<String>,
    },
    /// Draw random covers.
    Sample {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long)]
        samples: Option<usize>,
        /// Metropolis moves when exact enumeration is out of bounds.
        #[arg(long)]
        chain_steps: Option<u64>,
        #[arg(long)]
        unsafe_override: bool,
    },
    /// List every cover with its exact probability.
    Enumerate {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long)]
        unsafe_override: bool,
    },
    /// Euler-Lagrange residuals of an explicit limit shape.
    ElResidual {
        #[command(flatten)]
        shape: ShapeArgs,
        /// Points per axis.
        #[arg(long)]
        grid: Option<usize>,
        /// Relative distance of the grid from the domain boundary.
        #[arg(long)]
        margin: Option<f64>,
        /// Finite-difference step.
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        /// Weights `a,b,c,d` of the weighted Aztec diamond.
        #[arg(long, value_delimiter = ',')]
        type_weights: Option<Vec<f64>>,
    },
    /// Convergence of scaled discrete gauges to the limit.
    GaugeLimit {
        /// `aztec-diamond` or `aztec-cuboid`.
        family: Option<String>,
        #[arg(long, value_delimiter = ',')]
        ns: Option<Vec<u64>>,
        /// Also run Sinkhorn for sizes up to this bound.
        #[arg(long)]
        sinkhorn_up_to: Option<u64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Region(_) => "region",
            Command::Sinkhorn { .. } => "sinkhorn",
            Command::Verify { .. } => "verify",
            Command::SurfaceTension { .. } => "surface-tension",
            Command::Embed { .. } => "embed",
            Command::Sample { .. } => "sample",
            Command::Enumerate { .. } => "enumerate",
            Command::ElResidual { .. } => "el-residual",
            Command::GaugeLimit { .. } => "gauge-limit",
        }
    }
}

fn apply_shape(cfg: &mut RunConfig, s: ShapeArgs) {
    set(&mut cfg.shape, s.shape);
    set(&mut cfg.n, s.n);
    set(&mut cfg.a, s.a);
    set(&mut cfg.b, s.b);
    set(&mut cfg.c, s.c);
    set(&mut cfg.k, s.k);
    set(&mut cfg.depth, s.depth);
    set(&mut cfg.lattice, s.lattice);
    set(&mut cfg.big_n, s.big_n);
}

/// Loads the configuration file and lays the flags over it.
fn resolve(cli: Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let common = cli.common;
    if let Some(out) = common.out {
        cfg.out = out;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(format) = common.format {
        cfg.format = format;
    }
    if let Ok(v) = std::env::var("MULTIDIMER_THREADS") {
        let n = v.trim().parse().map_err(|_| CliError::invalid(format!("MULTIDIMER_THREADS = `{v}` is not a count")))?;
        cfg.threads = Some(n);
    }
    set(&mut cfg.threads, common.threads);
    let command = cli.command;
    cfg.command = command.name().into();
    match command {
        Command::Region(s) => apply_shape(&mut cfg, s),
        Command::Sinkhorn { region, weights, tol, max_iter } => {
            set(&mut cfg.region, region);
            set(&mut cfg.weights, weights);
            set(&mut cfg.tol, tol);
            set(&mut cfg.max_iter, max_iter);
        }
        Command::Verify { shape, tol } => {
            apply_shape(&mut cfg, shape);
            set(&mut cfg.tol, tol);
        }
        Command::SurfaceTension { lattice, grid } => {
            set(&mut cfg.lattice, lattice);
            set(&mut cfg.grid, grid);
        }
        Command::Embed { shape, flow } => {
            apply_shape(&mut cfg, shape);
            set(&mut cfg.flow, flow);
        }
        Command::Sample { shape, samples, chain_steps, unsafe_override } => {
            apply_shape(&mut cfg, shape);
            set(&mut cfg.samples, samples);
            set(&mut cfg.chain_steps, chain_steps);
            cfg.unsafe_override |= unsafe_override;
        }
        Command::Enumerate { shape, unsafe_override } => {
            apply_shape(&mut cfg, shape);
            cfg.unsafe_override |= unsafe_override;
        }
        Command::ElResidual { shape, grid, margin, step, tol, type_weights } => {
            apply_shape(&mut cfg, shape);
            set(&mut cfg.grid, grid);
            set(&mut cfg.margin, margin);
            set(&mut cfg.step, step);
            set(&mut cfg.tol, tol);
            set(&mut cfg.type_weights, type_weights);
        }
        Command::GaugeLimit { family, ns, sinkhorn_up_to } => {
            set(&mut cfg.shape, family);
            set(&mut cfg.ns, ns);
            set(&mut cfg.sinkhorn_up_to, sinkhorn_up_to);
        }
    }
    Ok(cfg)
}

fn run(cfg: &RunConfig) -> Result<(), CliError> {
    if let Some(n) = cfg.threads {
        if n == 0 {
            return Err(CliError::invalid("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(CliError::other)?;
    }
    match cfg.command.as_str() {
        "region" => commands::region(cfg),
        "sinkhorn" => commands::sinkhorn(cfg),
        "verify" => commands::verify(cfg),
        "surface-tension" => commands::surface_tension(cfg),
        "embed" => commands::embed(cfg),
        "sample" => commands::sample(cfg),
        "enumerate" => commands::enumerate(cfg),
        "el-residual" => commands::el_residual(cfg),
        "gauge-limit" => commands::gauge_limit(cfg),
        other => Err(CliError::invalid(format!("unknown command `{other}`"))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(cli).and_then(|cfg| run(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
