//! Argument grammar for the `wbary` binary.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "wbary", version, about = "Penalized Wasserstein barycenters and rate experiments")]
pub struct Cli {
    /// Cap on worker threads; overrides WBARY_THREADS (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Squared 2-Wasserstein distance between two measures
    W2 {
        /// Source measure JSON
        #[arg(long)]
        mu: PathBuf,
        /// Target measure JSON
        #[arg(long)]
        nu: PathBuf,
        /// lp: exact simplex with dual certificate; quantile: 1-D closed form
        #[arg(long, value_enum, default_value_t = W2Method::Lp)]
        method: W2Method,
        /// Certificate JSON output (cost, plan triplets, duals)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Penalized barycenter of a directory of measure files
    Barycenter {
        /// Directory of measure JSON files
        #[arg(long)]
        measures: PathBuf,
        /// Penalization strength (> 0)
        #[arg(long)]
        gamma: f64,
        #[arg(long, value_enum, default_value_t = PenaltyArg::Entropy)]
        penalty: PenaltyArg,
        /// Density floor for entropy/sobolev penalties
        #[arg(long, default_value_t = 1e-6)]
        alpha: f64,
        /// Sobolev order
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Cells per axis of the solution grid
        #[arg(long, default_value_t = 128)]
        grid: usize,
        /// Domain lower bound (each axis)
        #[arg(long, default_value_t = 0.0)]
        lo: f64,
        /// Domain upper bound (each axis)
        #[arg(long, default_value_t = 1.0)]
        hi: f64,
        #[arg(long, default_value_t = 2000)]
        iters: usize,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        /// 0 = deterministic uniform start; otherwise seeds a perturbed start
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Solution JSON output; trace CSV and manifest are written alongside
        #[arg(long)]
        out: PathBuf,
    },
    /// Bregman divergence between two grid densities
    Bregman {
        /// First grid density JSON
        #[arg(long)]
        f: PathBuf,
        /// Second grid density JSON
        #[arg(long)]
        g: PathBuf,
        #[arg(long, value_enum, default_value_t = PenaltyArg::Entropy)]
        penalty: PenaltyArg,
        #[arg(long, default_value_t = 1e-6)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// sym: <grad f - grad g, f - g>; nonsym: E(f)-E(g)-<grad g, f-g>
        #[arg(long, value_enum, default_value_t = BregmanKind::Sym)]
        kind: BregmanKind,
    },
    /// Monte-Carlo experiments driven by a flat JSON config
    Experiment {
        #[command(subcommand)]
        which: ExperimentCmd,
    },
    /// Draw an empirical sample from a grid density
    Sample {
        /// Grid density JSON to sample from
        #[arg(long)]
        nu: PathBuf,
        /// Number of draws
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Discrete measure JSON output
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a measure file against the schema and module invariants
    Validate {
        #[arg(long)]
        measure: PathBuf,
        /// Domain lower bound used for discrete support checks
        #[arg(long, default_value_t = 0.0)]
        lo: f64,
        /// Domain upper bound used for discrete support checks
        #[arg(long, default_value_t = 1.0)]
        hi: f64,
    },
    /// Re-run a recorded manifest and verify bit-identical outputs
    Replay {
        #[arg(long)]
        manifest: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCmd {
    /// Randomized sweep of the stability bound
    Stability {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bregman divergence to a population proxy vs sample size n
    RateVariance {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Distance to the unpenalized oracle along a descending gamma list
    RateBias {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Three-term error decomposition (stability / variance / bias)
    Decompose {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum W2Method {
    Lp,
    Quantile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PenaltyArg {
    Quadratic,
    Entropy,
    Sobolev,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BregmanKind {
    Sym,
    Nonsym,
}
