use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "mixlab", version, about = "Exact mixing profiles and inequality checks for finite Markov chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distance profiles and mixing times of one chain.
    Analyze(AnalyzeArgs),
    /// Run one verification suite on a chain.
    Verify(VerifyArgs),
    /// Mixing times across sizes of one family.
    Scan(ScanArgs),
    /// Monte Carlo checks of the natural coupling and Poisson thinning.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args, Clone)]
pub struct ChainArgs {
    /// Built-in family: af_section6, biased_cycle, fragile_bd, ehrenfest, flip, complete, path.
    #[arg(long, conflicts_with = "chain_file")]
    pub family: Option<String>,
    /// Family parameters as k=v, repeatable or comma separated.
    #[arg(long = "params", value_delimiter = ',')]
    pub params: Vec<String>,
    /// Shorthand for --params n=N.
    #[arg(long)]
    pub n: Option<usize>,
    /// Shorthand for --params alpha=A.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// JSON chain file: {"label", "n", "P"} or {"family", "params"}.
    #[arg(long)]
    pub chain_file: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct OutputArgs {
    /// Output directory; files are written atomically. Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Kernel modes (disc, lazy, ave, heat); all four when omitted.
    #[arg(long, value_delimiter = ',')]
    pub mode: Vec<String>,
    /// Time grid LO..HI[:STEP] or a comma list.
    #[arg(long, default_value = "0..50")]
    pub t: String,
    /// Also report mixing times at these levels.
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    /// Write the validated transition matrix as JSON and stop.
    #[arg(long)]
    pub dump_spec: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Abelian,
    Tauberian,
    Tails,
    Sharpness,
    Hitting,
    Stein,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    #[arg(long, value_enum, default_value_t = Suite::Abelian)]
    pub suite: Suite,
    /// Integer time grid LO..HI[:STEP] or a comma list.
    #[arg(long, default_value = "1..50")]
    pub t: String,
    /// Shift parameters; `sqrt` stands for sqrt(t).
    #[arg(long, default_value = "0.5,1,2,3,sqrt")]
    pub s: String,
    /// Relative deviations for the tails suite.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.1, 0.2, 0.5, 1.0])]
    pub eps: Vec<f64>,
    /// Fail on inadmissible (t, s) points instead of skipping them.
    #[arg(long)]
    pub strict_grid: bool,
    /// Random functions for the stein suite.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Sizes to scan; defaults to the family's own size.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.01, 0.1, 0.25, 0.4])]
    pub eps: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Horizon of the coupled processes.
    #[arg(long, default_value = "10")]
    pub t: String,
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also run the Poisson-thinning check at these means.
    #[arg(long, value_delimiter = ',')]
    pub tau: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}
