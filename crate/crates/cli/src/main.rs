use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use modalfuse_cli::commands::{self, Overrides};

/// Multimodal late-fusion experiments: feature extraction, the
/// aggregation-by-fusion-rule grid under leave-one-patient-out validation,
/// and the statistical comparison report.
#[derive(Parser)]
#[command(name = "modalfuse", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract per-modality feature tables from a dataset manifest.
    Extract {
        /// Run configuration file (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the full experiment grid and write the results directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Random seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Statistical comparison report over a results directory.
    Compare {
        /// Directory written by `run`.
        #[arg(long)]
        results: PathBuf,
        /// Report directory (defaults to the results directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Significance level for Friedman, Bonferroni-Dunn and Wilcoxon.
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        /// Use a two-sided Wilcoxon p-value instead of one-sided.
        #[arg(long)]
        two_sided: bool,
    },
    /// Generate a synthetic dataset manifest.
    Synth {
        /// Where to write the manifest (TOML).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 40)]
        patients: usize,
        /// Comma-separated per-modality class separations, e.g. "3.0,1.5,0.5".
        #[arg(long, default_value = "3.0,1.5,0.5")]
        informativeness: String,
        #[arg(long, default_value_t = 4)]
        dims: usize,
        #[arg(long, default_value_t = 3)]
        min_samples: usize,
        #[arg(long, default_value_t = 5)]
        max_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Extract {
            config,
            out,
            workers,
        } => commands::cmd_extract(
            &config,
            &Overrides {
                out,
                workers,
                ..Overrides::default()
            },
        ),
        Command::Run {
            config,
            seed,
            out,
            workers,
        } => commands::cmd_run(&config, &Overrides { seed, out, workers }),
        Command::Compare {
            results,
            out,
            alpha,
            two_sided,
        } => commands::cmd_compare(&results, out.as_deref(), alpha, two_sided),
        Command::Synth {
            out,
            patients,
            informativeness,
            dims,
            min_samples,
            max_samples,
            seed,
        } => commands::cmd_synth(
            &out,
            patients,
            &informativeness,
            dims,
            min_samples,
            max_samples,
            seed,
        ),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.exit)
        }
    }
}
