//! `symfun`: bound tables, protocol sweeps, graph experiments and codebook
//! dumps from the command line.
//!
//! Exit codes: 0 success, 1 bad input or usage, 2 a checked property
//! failed, 3 a resource guard tripped.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use symfun::{FunctionSpec, SizeConvention, Starter};

#[derive(Parser, Debug)]
#[command(
    name = "symfun",
    version,
    about = "Zero-error block computation of sum-dependent functions"
)]
struct Cli {
    /// Worker threads for sweeps (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-instance lower and upper bounds, one row per link.
    Bounds(BoundsArgs),
    /// Run a protocol over every (or random) input and check it.
    Simulate(SimulateArgs),
    /// Cut-set rate, star-mixing rate and their ratio on a network.
    Graph(GraphArgs),
    /// Dump the block codebook of a link.
    Codebook(CodebookArgs),
}

#[derive(Args, Debug, Clone)]
#[group(multiple = false)]
pub struct FunctionArgs {
    /// Sum-threshold function: 1 iff the sum is at least T.
    #[arg(long, value_name = "T")]
    threshold: Option<u32>,
    /// Sum-interval function: 1 iff A <= sum <= B.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    interval: Option<Vec<u32>>,
    /// Arbitrary function given by its output for each sum, comma separated.
    #[arg(long, value_delimiter = ',', value_name = "F0,F1,...")]
    table: Option<Vec<u32>>,
}

impl FunctionArgs {
    fn spec(&self) -> Result<FunctionSpec, commands::Failure> {
        if let Some(t) = self.threshold {
            Ok(FunctionSpec::threshold(t))
        } else if let Some(iv) = &self.interval {
            Ok(FunctionSpec::interval(iv[0], iv[1])?)
        } else if let Some(table) = &self.table {
            Ok(FunctionSpec::general(table.clone())?)
        } else {
            Err(commands::Failure::usage(
                "one of --threshold, --interval or --table is required",
            ))
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct TwoNodeArgs {
    /// Largest value node 1 can hold.
    #[arg(long)]
    m1: Option<u32>,
    /// Largest value node 2 can hold.
    #[arg(long)]
    m2: Option<u32>,
    /// Which node sends first.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    starter: u8,
}

impl TwoNodeArgs {
    fn starter(&self) -> Starter {
        if self.starter == 1 {
            Starter::One
        } else {
            Starter::Two
        }
    }

    fn maxima(&self) -> Result<(u32, u32), commands::Failure> {
        match (self.m1, self.m2) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(commands::Failure::usage("two-node runs need both --m1 and --m2")),
        }
    }
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    function: FunctionArgs,
    #[command(flatten)]
    two: TwoNodeArgs,
    /// Tree network file; one row per edge.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["m1", "m2"])]
    tree: Option<PathBuf>,
    #[arg(long)]
    root: Option<u32>,
    /// Also report whole-block bit counts for this block length.
    #[arg(short = 'B', long = "block-length")]
    block_length: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    function: FunctionArgs,
    /// Two nodes with maxima --m1 and --m2.
    #[arg(long)]
    two_node: bool,
    #[command(flatten)]
    two: TwoNodeArgs,
    /// Tree network file.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["two_node", "graph"])]
    tree: Option<PathBuf>,
    /// Root of the tree (defaults to the file's root, else the smallest id).
    #[arg(long)]
    root: Option<u32>,
    /// General network file, aggregated along --spanning.
    #[arg(long, value_name = "FILE", conflicts_with = "two_node", requires = "spanning")]
    graph: Option<PathBuf>,
    /// Spanning tree edges, e.g. `0-1,0-2,0-3`.
    #[arg(long, value_name = "EDGES")]
    spanning: Option<String>,
    #[arg(short = 'B', long = "block-length", default_value_t = 1)]
    block_length: usize,
    /// Enumerate every input assignment (the default).
    #[arg(long, conflicts_with = "random")]
    exhaustive: bool,
    /// Check pseudorandom assignments instead.
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    MaxValue,
    AlphabetSize,
    Both,
}

impl ConventionArg {
    fn list(self) -> Vec<SizeConvention> {
        match self {
            ConventionArg::MaxValue => vec![SizeConvention::MaxValue],
            ConventionArg::AlphabetSize => vec![SizeConvention::AlphabetSize],
            ConventionArg::Both => SizeConvention::BOTH.to_vec(),
        }
    }
}

#[derive(Args, Debug)]
pub struct GraphArgs {
    /// Network file.
    network: PathBuf,
    #[command(flatten)]
    function: FunctionArgs,
    /// How a group of nodes is sized: by its largest sum or by its alphabets.
    #[arg(long, value_enum, default_value_t = ConventionArg::Both)]
    convention: ConventionArg,
    /// Require star mixing (the network must be complete). Complete
    /// networks get it regardless.
    #[arg(long)]
    star_mix: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct CodebookArgs {
    #[command(flatten)]
    function: FunctionArgs,
    #[command(flatten)]
    two: TwoNodeArgs,
    /// Plain codebook over this many letters instead of a function link.
    #[arg(long, value_name = "K", conflicts_with_all = ["threshold", "interval", "table"])]
    letters: Option<usize>,
    /// Letters (the first R) that owe one reply bit.
    #[arg(long, value_name = "R", default_value_t = 0, requires = "letters")]
    ambiguous: usize,
    #[arg(short = 'B', long = "block-length", default_value_t = 1)]
    block_length: usize,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("SYMFUN_LOG"))
        .target(env_logger::Target::Stderr)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }

    let outcome = match &cli.command {
        Command::Bounds(args) => commands::bounds(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Graph(args) => commands::graph(args),
        Command::Codebook(args) => commands::codebook(args),
    };
    match outcome {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
