//! Command-line harness over the library: run experiments from key/value
//! spec files, benchmark the band-reduction pipeline, merge cost reports,
//! and generate matrices with known spectra.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spectraldc::error::Error;
use spectraldc::experiment::{
    generate, parse_cost_csv, report_costs, run_experiment, ExperimentSpec, Generator,
};
use spectraldc::io::save_matrix;
use spectraldc::ledger::CostLedger;
use spectraldc::sbr::sbr_sym_eig;

#[derive(Parser)]
#[command(
    name = "spectraldc",
    about = "Spectral divide-and-conquer and band-reduction experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a key/value spec file.
    Experiment {
        /// Path to the spec file (TOML key/value pairs).
        spec: PathBuf,
        /// Directory for the CSV outputs (defaults to the spec's directory).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Benchmark the symmetric band-reduction pipeline.
    BenchSbr {
        #[arg(long)]
        n: usize,
        /// Fast-memory size in words.
        #[arg(long)]
        m: usize,
        /// Also accumulate eigenvectors.
        #[arg(long)]
        vectors: bool,
        /// Output cost CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge cost CSV files from a directory into one report.
    Costs {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a matrix with known spectrum and write it with its
    /// ground-truth sidecar (`<out>.spectrum`).
    Gen {
        /// normal_random_spectrum | near_axis | jordan_mix |
        /// constructed_sym | constructed_svd
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "box", default_value_t = 1.5)]
        box_half_width: f64,
        #[arg(long, default_value_t = 1e-10)]
        delta: f64,
        #[arg(long, default_value_t = 0.1)]
        center: f64,
        #[arg(long)]
        block_size: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_)
        | Error::Parse { .. }
        | Error::Io(_)
        | Error::DimensionMismatch { .. }
        | Error::EmptyMatrix(_)
        | Error::NotSquare { .. }
        | Error::BandOutOfRange { .. } => 2,
        _ => 3,
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Experiment { spec, out_dir } => {
            let text = std::fs::read_to_string(&spec)?;
            let mut parsed = ExperimentSpec::parse(&text)?;
            if let Ok(seed) = std::env::var("SPECTRALDC_SEED") {
                parsed.seed = seed
                    .parse()
                    .map_err(|e| Error::InvalidArgument(format!("SPECTRALDC_SEED: {e}")))?;
                parsed.cfg.rng_seed = parsed.seed;
            }
            let run = run_experiment(&parsed)?;
            let dir = out_dir
                .or_else(|| spec.parent().map(|p| p.to_path_buf()))
                .unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir)?;
            let write = |suffix: &str, data: &str| {
                std::fs::write(dir.join(format!("{}.{suffix}", run.name)), data)
            };
            write("iterations.csv", &run.iterations_csv())?;
            write("summary.csv", &run.summary_csv())?;
            write("costs.csv", &run.cost_csv)?;
            println!(
                "{}: n = {}, converged_at = {}, final_error = {:.3e}, leaves = {}, enclosures = {}",
                run.name,
                run.n,
                run.converged_at.map_or("-".to_string(), |i| i.to_string()),
                run.final_error,
                run.leaves,
                run.enclosures
            );
            Ok(())
        }
        Command::BenchSbr { n, m, vectors, out } => {
            let g = generate(&Generator::ConstructedSym { n }, 0x5eed)?;
            let a = match g.matrix {
                spectraldc::io::AnyMatrix::Real(a) => a,
                _ => unreachable!("constructed_sym is real"),
            };
            let ledger = CostLedger::new(m);
            let res = sbr_sym_eig(&a, m, vectors, &ledger)?;
            let mut truth: Vec<f64> = g.spectrum.iter().map(|z| z.re).collect();
            truth.sort_by(f64::total_cmp);
            let scale = a.norm(spectraldc::Norm::Fro).max(1e-300);
            let err = res
                .values
                .iter()
                .zip(&truth)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0f64, f64::max)
                / scale;
            let csv = ledger.csv_report(n, 1);
            match out {
                Some(path) => std::fs::write(path, &csv)?,
                None => print!("{csv}"),
            }
            let t = ledger.totals();
            println!(
                "bench-sbr: n = {n}, M = {m}, vectors = {vectors}, flops = {}, words = {}, messages = {}, eigenvalue error = {err:.3e}",
                t.flops, t.words, t.messages
            );
            Ok(())
        }
        Command::Costs { input, out } => {
            let mut runs = Vec::new();
            let mut names: Vec<PathBuf> = std::fs::read_dir(&input)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.file_name()
                        .and_then(|s| s.to_str())
                        .is_some_and(|s| s.ends_with("costs.csv"))
                })
                .collect();
            names.sort();
            for path in names {
                let text = std::fs::read_to_string(&path)?;
                runs.push(parse_cost_csv(&text)?);
            }
            std::fs::write(&out, report_costs(&runs))?;
            println!("costs: merged {} run(s) into {}", runs.len(), out.display());
            Ok(())
        }
        Command::Gen {
            kind,
            n,
            seed,
            out,
            box_half_width,
            delta,
            center,
            block_size,
        } => {
            let generator = match kind.as_str() {
                "normal_random_spectrum" => Generator::NormalRandomSpectrum {
                    n,
                    half_width: box_half_width,
                },
                "near_axis" => Generator::NearAxis { n, delta },
                "jordan_mix" => Generator::JordanMix {
                    n,
                    center,
                    block_size: block_size.unwrap_or(n / 2),
                },
                "constructed_sym" => Generator::ConstructedSym { n },
                "constructed_svd" => Generator::ConstructedSvd { n },
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown generator kind '{other}'"
                    )))
                }
            };
            let g = generate(&generator, seed)?;
            match &g.matrix {
                spectraldc::io::AnyMatrix::Real(m) => save_matrix(m, &out)?,
                spectraldc::io::AnyMatrix::Complex(m) => save_matrix(m, &out)?,
            }
            let mut truth = String::new();
            for z in &g.spectrum {
                truth.push_str(&format!("{} {}\n", z.re, z.im));
            }
            let mut sidecar = out.clone();
            sidecar.set_extension("spectrum");
            std::fs::write(&sidecar, truth)?;
            println!(
                "gen: wrote {} ({}x{}) and {}",
                out.display(),
                g.matrix.rows(),
                g.matrix.cols(),
                sidecar.display()
            );
            Ok(())
        }
    }
}
