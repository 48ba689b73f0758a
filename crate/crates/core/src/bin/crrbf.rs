use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use crrbf::experiment::{cmd_cluster, cmd_experiment, cmd_report, Overrides};

#[derive(Parser)]
#[command(name = "crrbf", version, about = "CRRBF kernel SVM experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster the bands of a dataset and write `band_index,cluster_id` lines.
    Cluster {
        /// Dataset CSV: one sample per row, features then integer label.
        data: PathBuf,
        #[arg(short, long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run the experiment described by a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the tables of a stored report.json.
    Report { path: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Cluster { data, k, seed, out } => cmd_cluster(data, k, seed, &out).map(|c| {
            eprintln!(
                "wrote {} bands in {} clusters to {}",
                c.band_count(),
                c.cluster_count(),
                out.display()
            );
            0
        }),
        Command::Experiment {
            config,
            seed,
            workers,
            out,
        } => {
            let cancel = Arc::new(AtomicBool::new(false));
            let flag = Arc::clone(&cancel);
            if let Err(e) = ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst)) {
                eprintln!("warning: no interrupt handler: {e}");
            }
            let overrides = Overrides {
                seed,
                workers,
                output_dir: out,
            };
            cmd_experiment(config, &overrides, &cancel).map(|s| {
                eprintln!("wrote results to {}", s.output_dir.display());
                match s.exit_code {
                    0 => {}
                    4 => eprintln!("warning: some solver runs did not converge"),
                    _ => eprintln!("interrupted: partial results written"),
                }
                s.exit_code
            })
        }
        Command::Report { path } => cmd_report(path).map(|text| {
            print!("{text}");
            0
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
