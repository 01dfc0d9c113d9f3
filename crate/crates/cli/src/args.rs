use std::path::PathBuf;

use bounded_sketch::eval::{EvalSet, SketchKind};
use bounded_sketch::stream::{DeleteOrder, DeletionPattern};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bdsketch", version, about = "Bounded-deletion sketches: stream generation, evaluation and benchmarks")]
pub struct Cli {
    /// Run repetitions and dyadic levels on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a stream file.
    Gen(GenArgs),
    /// Evaluate a frequency sketch on a stream file or a JSON experiment.
    Run(RunArgs),
    /// Evaluate a rank sketch and answer quantile queries.
    Quantile(QuantileArgs),
    /// Run a sketch on the lower-bound construction.
    Adversary(AdversaryArgs),
    /// Time updates per sketch and stream length, as CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dist {
    Zipf,
    Binomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Pattern {
    Shuffled,
    Targeted,
}

impl From<Pattern> for DeletionPattern {
    fn from(p: Pattern) -> Self {
        match p {
            Pattern::Shuffled => DeletionPattern::ShuffledUniform,
            Pattern::Targeted => DeletionPattern::TargetedLeastFrequent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Order {
    After,
    Interleaved,
}

impl From<Order> for DeleteOrder {
    fn from(o: Order) -> Self {
        match o {
            Order::After => DeleteOrder::DeletesAfterInserts,
            Order::Interleaved => DeleteOrder::Interleaved,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalSetArg {
    Inserted,
    Universe,
}

impl From<EvalSetArg> for EvalSet {
    fn from(e: EvalSetArg) -> Self {
        match e {
            EvalSetArg::Inserted => EvalSet::Inserted,
            EvalSetArg::Universe => EvalSet::Universe,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FrequencySketch {
    Ss,
    Lazy,
    Ssp,
    Cm,
    Cmedian,
}

impl From<FrequencySketch> for SketchKind {
    fn from(s: FrequencySketch) -> Self {
        match s {
            FrequencySketch::Ss => SketchKind::Ss,
            FrequencySketch::Lazy => SketchKind::Lazy,
            FrequencySketch::Ssp => SketchKind::Ssp,
            FrequencySketch::Cm => SketchKind::Cm,
            FrequencySketch::Cmedian => SketchKind::Cmedian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RankSketch {
    Dss,
    Dcs,
}

impl From<RankSketch> for SketchKind {
    fn from(s: RankSketch) -> Self {
        match s {
            RankSketch::Dss => SketchKind::Dss,
            RankSketch::Dcs => SketchKind::Dcs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CounterSketch {
    Lazy,
    Ssp,
}

#[derive(Debug, Args)]
pub struct GeneratorArgs {
    #[arg(long, value_enum)]
    pub dist: Dist,
    /// Zipf exponent.
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    /// Relabel Zipf ranks by a seeded bijection of the universe.
    #[arg(long)]
    pub permute: bool,
    /// Binomial trials.
    #[arg(long, default_value_t = 100)]
    pub n: u64,
    /// Binomial success probability.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = 16)]
    pub universe_bits: u32,
    #[arg(long, default_value_t = 0.0)]
    pub ratio: f64,
    #[arg(long, value_enum, default_value_t = Pattern::Shuffled)]
    pub pattern: Pattern,
    #[arg(long, value_enum, default_value_t = Order::After)]
    pub order: Order,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long)]
    pub inserts: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON experiment descriptor; replaces the single-sketch flags.
    #[arg(long, conflicts_with_all = ["sketch", "stream"])]
    pub experiment: Option<PathBuf>,
    #[arg(long, value_enum, required_unless_present = "experiment")]
    pub sketch: Option<FrequencySketch>,
    #[arg(long, required_unless_present = "experiment")]
    pub stream: Option<PathBuf>,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    /// Defaults to the alpha in the stream header.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Defaults to 2^-universe_bits.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Counters (counter sketches) or total cells (linear sketches).
    #[arg(long)]
    pub counters: Option<usize>,
    /// Frequent-item threshold; defaults to epsilon.
    #[arg(long)]
    pub phi: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = EvalSetArg::Inserted)]
    pub eval_set: EvalSetArg,
    /// Measure ns_per_update; makes the report nondeterministic.
    #[arg(long)]
    pub timing: bool,
    /// Emit CSV instead of JSON.
    #[arg(long)]
    pub csv: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QuantileArgs {
    #[arg(long, value_enum)]
    pub sketch: RankSketch,
    #[arg(long)]
    pub universe_bits: u32,
    #[arg(long)]
    pub stream: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Per-level counters (dss) or per-level cells (dcs).
    #[arg(long)]
    pub counters: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub q: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AdversaryArgs {
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub counters: usize,
    #[arg(long, value_enum, default_value_t = CounterSketch::Ssp)]
    pub sketch: CounterSketch,
    /// Also write the constructed stream.
    #[arg(long)]
    pub stream_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub lengths: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "ssp", value_parser = parse_kind)]
    pub sketch: Vec<SketchKind>,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub counters: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    #[arg(long, default_value_t = 16)]
    pub universe_bits: u32,
    #[arg(long, default_value_t = 0.5)]
    pub ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_kind(s: &str) -> Result<SketchKind, String> {
    s.parse().map_err(|e: bounded_sketch::SketchError| e.to_string())
}
