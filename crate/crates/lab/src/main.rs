use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use itkm_lab::cli::execute;
use itkm_lab::{Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "itkm-lab", version, about = "Dictionary identification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// ITKM vs K-SVD on skewed bases of R^3
    Fig1a(Flags),
    /// Recovery error against the number of training signals
    Fig1b(Flags),
    /// Recovery error against the coefficient decay spread
    Fig2a(Flags),
    /// Recovery error against the noise variance
    Fig2b(Flags),
    /// Evaluate the identification bounds for a signal model
    Bounds(Flags),
    /// Probe the exact expectation around the canonical basis
    Probe(Flags),
}

#[derive(clap::Args)]
struct Flags {
    /// key = value configuration file (flags take precedence)
    #[arg(long)]
    config: Option<PathBuf>,
    /// full or ci
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock times in the CSV
    #[arg(long)]
    timing: bool,
    /// Comma-separated d:S[:T] items
    #[arg(long)]
    curves: Option<String>,
    #[arg(long)]
    b_grid: Option<String>,
    #[arg(long)]
    rho2_grid: Option<String>,
    #[arg(long)]
    n_grid: Option<String>,
    /// Single sample size
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t_grid: Option<String>,
    /// Target precisions (bounds) or probe radii (probe)
    #[arg(long)]
    eps_grid: Option<String>,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    directions: Option<usize>,
    /// Probe coefficient sequence
    #[arg(long)]
    sequence: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    /// resample_sphere or resample_signal
    #[arg(long)]
    safeguard: Option<String>,
    /// gaussian or bernoulli
    #[arg(long)]
    noise: Option<String>,
}

impl Flags {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut v = Vec::new();
        let mut put = |k: &str, val: Option<String>| {
            if let Some(x) = val {
                v.push((k.to_string(), x));
            }
        };
        put("profile", self.profile.clone());
        put("seed", self.seed.map(|x| x.to_string()));
        put("trials", self.trials.map(|x| x.to_string()));
        put("iterations", self.iterations.map(|x| x.to_string()));
        put("jobs", self.jobs.map(|x| x.to_string()));
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("timing", self.timing.then(|| "true".to_string()));
        put("curves", self.curves.clone());
        put("b_grid", self.b_grid.clone());
        put("rho2_grid", self.rho2_grid.clone());
        put("n_grid", self.n_grid.clone());
        put("n", self.n.map(|x| x.to_string()));
        put("t_grid", self.t_grid.clone());
        put("eps_grid", self.eps_grid.clone());
        put("draws", self.draws.map(|x| x.to_string()));
        put("directions", self.directions.map(|x| x.to_string()));
        put("sequence", self.sequence.clone());
        put("beta", self.beta.map(|x| x.to_string()));
        put("safeguard", self.safeguard.clone());
        put("noise", self.noise.clone());
        v
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, flags) = match &cli.command {
        Command::Fig1a(f) => (Experiment::Fig1a, f),
        Command::Fig1b(f) => (Experiment::Fig1b, f),
        Command::Fig2a(f) => (Experiment::Fig2a, f),
        Command::Fig2b(f) => (Experiment::Fig2b, f),
        Command::Bounds(f) => (Experiment::Bounds, f),
        Command::Probe(f) => (Experiment::Probe, f),
    };
    let result = ExperimentConfig::resolve(experiment, flags.config.as_deref(), &flags.overrides())
        .and_then(|cfg| execute(&cfg));
    match result {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
