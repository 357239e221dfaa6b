//! `gisflow`: features → fit → score pipeline for conditional-density
//! anomaly searches.

mod commands;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gisflow::Error;

use crate::settings::FloatList;

#[derive(Parser)]
#[command(name = "gisflow", version, about = "Conditional normalizing-flow anomaly search")]
struct Cli {
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster particle events into dijet features.
    Features(FeaturesArgs),
    /// Fit a conditional GIS flow to a features CSV.
    Fit(FitArgs),
    /// Score events with a fitted model and scan for over-densities.
    Score(ScoreArgs),
    /// Generate a synthetic dataset with truth labels.
    Synth(SynthArgs),
}

#[derive(Args)]
pub struct FeaturesArgs {
    /// Particle CSV: `event_id,pt,eta,phi[,mass]`, rows grouped by event.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Key=value file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub eta_max: Option<f64>,
    /// Lower m_jj bound in GeV (exclusive).
    #[arg(long)]
    pub window_lo: Option<f64>,
    /// Upper m_jj bound in GeV (exclusive).
    #[arg(long)]
    pub window_hi: Option<f64>,
}

#[derive(Args)]
pub struct FitArgs {
    /// Features CSV; the first data column is the conditional.
    #[arg(long)]
    pub input: PathBuf,
    /// Model file to write.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Maximum number of layers.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Directions Gaussianized per layer.
    #[arg(long)]
    pub slices: Option<usize>,
    /// Random frames tried per layer.
    #[arg(long)]
    pub candidates: Option<usize>,
    #[arg(long)]
    pub knots: Option<usize>,
    /// Equal-occupancy bins in the conditional; 1 fits p(x).
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub derivative_floor: Option<f64>,
    /// Stop once the mean W1 per slice is below this.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Per-event score CSV; the scan, summary and manifest are written
    /// alongside it.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Truth labels (`event_id,is_signal`), used only to print metrics.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Width of the background kernel in the conditional's units.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub n_quad: Option<usize>,
    /// Kernel offsets closer than this are left out; default sigma/2.
    #[arg(long)]
    pub exclusion: Option<f64>,
    /// Comma-separated alpha cuts.
    #[arg(long)]
    pub thresholds: Option<FloatList>,
    /// Also smooth p_signal with a Gaussian of this width.
    #[arg(long)]
    pub signal_sigma: Option<f64>,
    /// Scan bin width; default sigma.
    #[arg(long)]
    pub scan_width: Option<f64>,
    /// Events summarized around the scan peak.
    #[arg(long)]
    pub peak_events: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SynthKind {
    /// One Gaussian feature drifting with m, plus a compact signal.
    Toy,
    /// Dijet-like features with an injected resonance.
    Lhc,
}

#[derive(Args)]
pub struct SynthArgs {
    pub kind: SynthKind,
    #[arg(long)]
    pub output: PathBuf,
    /// Labels file; default `<output stem>.labels.csv`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_background: Option<usize>,
    #[arg(long)]
    pub n_signal: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Features(a) => commands::features(a),
        Command::Fit(a) => commands::fit(a),
        Command::Score(a) => commands::score(a),
        Command::Synth(a) => commands::synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
