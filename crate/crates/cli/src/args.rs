use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "tickphys", version, about = "Hurst exponents, inverse statistics and order-book relaxation on tick data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic series (fBm, Brownian, tick walk or order book).
    Synth(SynthArgs),
    /// Local Hurst exponents over sliding windows.
    Hurst(HurstArgs),
    /// First-passage times to fixed price moves.
    Invstat(InvstatArgs),
    /// Order-book imbalance relaxation times.
    Relax(RelaxArgs),
    /// Run the synthetic acceptance suite.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Model {
    Fbm,
    Brownian,
    Tickwalk,
    Book,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub hurst: Option<f64>,
    /// Increment standard deviation (fbm, brownian).
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Probability of a zero increment (tickwalk, book).
    #[arg(long, default_value_t = 0.0)]
    pub p_zero: f64,
    #[arg(long, default_value = "0.01")]
    pub tick_size: String,
    /// Book depth (book).
    #[arg(long, default_value_t = 5)]
    pub depth: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SessionArgs {
    /// Trading hours as HH:MM-HH:MM in local time; required for multi-day input.
    #[arg(long)]
    pub session: Option<String>,
    /// IANA time zone of the session hours.
    #[arg(long, default_value = "UTC")]
    pub tz: String,
}

#[derive(Debug, Args)]
pub struct HurstArgs {
    /// RegularSeries CSV or tick CSV (resampled with --interval).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub window: usize,
    #[arg(long)]
    pub shift: usize,
    /// Box sizes as min:max:count (default 8:L/4:20).
    #[arg(long)]
    pub boxes: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    /// Grid spacing in seconds for tick input.
    #[arg(long, default_value_t = 60)]
    pub interval: u64,
    /// Bins of the H histogram.
    #[arg(long, default_value_t = 50)]
    pub pdf_bins: usize,
    #[command(flatten)]
    pub session: SessionArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DirectionArg {
    Up,
    Down,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ClockArg {
    Tick,
    Wall,
}

#[derive(Debug, Args)]
pub struct InvstatArgs {
    /// Tick CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Targets in ticks, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub target: Vec<i64>,
    #[arg(long, value_enum, default_value = "up")]
    pub direction: DirectionArg,
    #[arg(long, value_enum, default_value = "tick")]
    pub clock: ClockArg,
    #[arg(long, default_value_t = 10)]
    pub bins_per_decade: u32,
    /// Let exits run into the next trading day.
    #[arg(long)]
    pub cross_days: bool,
    /// Width in seconds of the entry-time-of-day bins.
    #[arg(long, default_value_t = 300.0)]
    pub entry_bin: f64,
    #[command(flatten)]
    pub session: SessionArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RelaxClockArg {
    Ticks,
    Trades,
}

#[derive(Debug, Args)]
pub struct RelaxArgs {
    /// Book CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7")]
    pub kappa: Vec<f64>,
    /// Levels per side (default: all in the file).
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long, value_enum, default_value = "ticks")]
    pub clock: RelaxClockArg,
    #[arg(long, default_value_t = 10)]
    pub bins_per_decade: u32,
    /// Range lo:hi of τ for the power-law tail fit.
    #[arg(long, default_value = "10:1e9")]
    pub tail_range: String,
    /// Range lo:hi of κ for the linear mean-τ fit.
    #[arg(long, default_value = "0.1:0.6")]
    pub kappa_fit_range: String,
    #[command(flatten)]
    pub session: SessionArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long)]
    pub out: PathBuf,
}
