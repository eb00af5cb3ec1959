use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mlkit::learn::model_io;
use mlkit::{Error, Result};
use mlkit_cli::experiments::{run_als, run_cluster_text, run_logistic};
use mlkit_cli::{run_scaling, ExperimentConfig, Mode, Scaling, Settings};

#[derive(Parser)]
#[command(
    name = "mlkit",
    version,
    about = "Data-parallel learning pipelines and scaling experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Logistic regression by locally averaged SGD on generated separable data
    Logistic(Settings),
    /// Alternating least squares on generated or file ratings, optionally tiled
    Als(Settings),
    /// n-gram tf-idf features of a corpus clustered with k-means
    ClusterText(Settings),
    /// Time one algorithm across worker counts and write a CSV report
    Scaling(Settings),
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(mut w: impl Write, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Logistic(s) => {
            let config = ExperimentConfig::new(Mode::Logistic, Scaling::None, &s.resolve()?)?;
            let run = run_logistic(&config)?;
            println!(
                "points {} features {} workers {}",
                config.points, config.features, config.workers[0]
            );
            println!("training accuracy {}", run.accuracy);
            println!("train seconds {:.6}", run.seconds);
            if let Some(path) = &config.out {
                let mut w = create(path)?;
                model_io::write_logistic(&run.model, &mut w).map_err(|e| Error::io(path, e))?;
                finish(w, path)?;
            }
        }
        Command::Als(s) => {
            let config = ExperimentConfig::new(Mode::Als, Scaling::None, &s.resolve()?)?;
            let run = run_als(&config)?;
            println!(
                "users {} items {} rank {}",
                run.model.u.num_rows(),
                run.model.v.num_rows(),
                run.model.rank()
            );
            println!("observed rmse {}", run.rmse);
            println!("objective {}", run.objective);
            println!("train seconds {:.6}", run.seconds);
            if let Some(path) = &config.out {
                let mut w = create(path)?;
                model_io::write_factorization(&run.model, &mut w)
                    .map_err(|e| Error::io(path, e))?;
                finish(w, path)?;
            }
        }
        Command::ClusterText(s) => {
            let config = ExperimentConfig::new(Mode::ClusterText, Scaling::None, &s.resolve()?)?;
            let clusters = run_cluster_text(&config)?;
            match &config.out {
                Some(dir) => {
                    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                    let path = dir.join("assignments.csv");
                    let mut w = create(&path)?;
                    clusters.write_assignments(&mut w)?;
                    finish(w, &path)?;
                    let path = dir.join("summary.txt");
                    fs::write(&path, clusters.summary()).map_err(|e| Error::io(&path, e))?;
                }
                None => {
                    clusters.write_assignments(io::stdout().lock())?;
                    eprint!("{}", clusters.summary());
                }
            }
        }
        Command::Scaling(s) => {
            let s = s.resolve()?;
            let mode = s.mode.unwrap_or(Mode::Logistic);
            let scaling = s.scaling.unwrap_or(Scaling::Strong);
            let config = ExperimentConfig::new(mode, scaling, &s)?;
            let report = run_scaling(&config)?;
            match &config.out {
                Some(path) => {
                    let mut w = create(path)?;
                    report.write_csv(&mut w)?;
                    finish(w, path)?;
                }
                None => report.write_csv(io::stdout().lock())?,
            }
            if scaling != Scaling::Weak {
                for (workers, speedup) in report.speedups().into_iter().skip(1) {
                    eprintln!("speedup at {workers} workers: {speedup:.2}x");
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
