use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "loslap", version, about = "Exact strong simulation of linear optical circuits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full output distribution.
    Simulate(SimulateArgs),
    /// Stream amplitudes as they are produced.
    Iterate(IterateArgs),
    /// Distribution under uniform photon loss, over every photon count.
    Lossy(LossyArgs),
    /// Feedforward simulation driven by a policy file.
    Adaptive(AdaptiveArgs),
    /// Traversal plans on the partition lattice.
    #[command(subcommand)]
    Steiner(SteinerCommand),
    /// Operation and memory counts.
    #[command(subcommand)]
    Cost(CostCommand),
    /// Run two engines on the same matrix and report their difference.
    Compare(CompareArgs),
}

/// Where the interferometer comes from.
#[derive(Debug, Args)]
pub struct MatrixSource {
    /// Matrix file, JSON or CSV (chosen by extension).
    #[arg(long, conflicts_with = "haar_seed")]
    pub matrix: Option<PathBuf>,
    /// Seed for a Haar-random m x m unitary.
    #[arg(long, requires = "m")]
    pub haar_seed: Option<u64>,
    /// Number of modes for --haar-seed.
    #[arg(long)]
    pub m: Option<usize>,
    /// Number of photons, one in each of the first n input modes. Defaults
    /// to the number of matrix columns.
    #[arg(long)]
    pub n: Option<usize>,
    /// Reject matrices whose columns are not orthonormal to within 1e-9.
    #[arg(long)]
    pub require_unitary: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Loslap,
    Slos,
    Permanent,
    SteinerPlan,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[arg(long, value_enum, default_value_t = Engine::Loslap)]
    pub engine: Engine,
    /// Plan file for --engine steiner-plan; solved on the fly when absent.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Emit states in lexicographic order.
    #[arg(long)]
    pub sort: bool,
    /// Groups of mutually distinguishable photons, 1-based, e.g. "1,2|3".
    #[arg(long, conflicts_with = "doubled")]
    pub groups: Option<String>,
    /// Two photons in each input mode instead of one.
    #[arg(long)]
    pub doubled: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IterateArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    /// Stop after this many amplitudes.
    #[arg(long)]
    pub limit: Option<u64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LossyArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    /// Per-photon loss probability.
    #[arg(long, allow_negative_numbers = true)]
    pub eta: f64,
    /// Order by photon count, then lexicographically.
    #[arg(long)]
    pub sort: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AdaptiveArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    /// Policy file mapping outcomes on the measured modes to unitaries.
    #[arg(long)]
    pub policy: PathBuf,
    #[arg(long)]
    pub sort: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Exact,
    Greedy,
    Full,
}

#[derive(Debug, Args)]
pub struct LatticeSize {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
}

#[derive(Debug, Subcommand)]
pub enum SteinerCommand {
    /// Solve for a traversal plan and write it as JSON.
    Optimize {
        #[command(flatten)]
        size: LatticeSize,
        #[arg(long, value_enum, default_value_t = Solver::Exact)]
        solver: Solver,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run a plan on a matrix and emit its output amplitudes.
    Execute {
        #[command(flatten)]
        source: MatrixSource,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        sort: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Write the partition graph as a SteinLib arborescence instance.
    ExportStp {
        #[command(flatten)]
        size: LatticeSize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Turn a solver's arc list into a plan file.
    Import {
        #[command(flatten)]
        size: LatticeSize,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    #[arg(long, default_value_t = 8 << 30)]
    pub memory_bytes: u64,
    #[arg(long, default_value_t = 1_000_000_000)]
    pub flops_per_second: u64,
    #[arg(long, default_value_t = 86_400)]
    pub wall_seconds: u64,
}

#[derive(Debug, Subcommand)]
pub enum CostCommand {
    /// FLOPs and memory of every method at one size.
    Table {
        #[command(flatten)]
        size: LatticeSize,
    },
    /// Largest mode count per method within a budget, per photon count.
    Frontier {
        #[arg(long, default_value_t = 1)]
        n_min: usize,
        #[arg(long)]
        n_max: usize,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Mask sizes at which masked SLOS and the lattice traversal break even.
    Crossover {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m_min: usize,
        #[arg(long)]
        m_max: usize,
        #[arg(long, default_value_t = 1)]
        m_step: usize,
        /// Memory limit for masked SLOS; without it masks are unconstrained.
        #[arg(long)]
        memory_bytes: Option<u64>,
        /// Emit the winner for every (m, k) instead of one row per m.
        #[arg(long)]
        regions: bool,
    },
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[arg(long, value_enum, default_value_t = Engine::Loslap)]
    pub engine_a: Engine,
    #[arg(long, value_enum, default_value_t = Engine::Permanent)]
    pub engine_b: Engine,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}
