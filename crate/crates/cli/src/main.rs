use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use blockwht::quant::{Granularity, OutlierSpec, QuantTarget};
use blockwht::ElementType;
use blockwht_cli::bench::{cmd_bench, BenchConfig, Impl};
use blockwht_cli::quant::{cmd_quant, QuantConfig};
use blockwht_cli::simulate::{cmd_simulate, SimulateConfig};
use blockwht_cli::transform::{cmd_transform, TransformArgs};
use blockwht_cli::verify::{blocked_transform, cmd_verify, faulty_transform, VerifyConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "blockwht",
    version,
    about = "Blocked Walsh-Hadamard transform toolkit"
)]
struct Cli {
    /// Worker threads for row and trial parallelism (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the blocked engine against the dense and scalar oracles.
    Verify {
        #[arg(long, default_value_t = 32768)]
        max_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        rows: usize,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Time scalar, blocked and dense implementations; CSV on stdout.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [256, 512, 1024, 2048, 4096, 8192, 16384, 32768])]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [1usize << 20])]
        element_counts: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [ElementType::F32])]
        dtypes: Vec<ElementType>,
        #[arg(long, value_delimiter = ',', default_values_t = Impl::ALL)]
        impls: Vec<Impl>,
        #[arg(long, default_value_t = 10)]
        repetitions: usize,
        #[arg(long, default_value_t = 2)]
        warmup: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Skip the O(d^2) dense oracle above this size.
        #[arg(long, default_value_t = 2048)]
        dense_max_size: usize,
    },
    /// Transform every row of an HDT1 file.
    Transform {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        size: usize,
        /// Cast the input to this element type first.
        #[arg(long)]
        dtype: Option<ElementType>,
        #[arg(long)]
        in_place: bool,
        /// Output multiplier (default 1/sqrt(size)).
        #[arg(long)]
        scale: Option<f64>,
    },
    /// Run the warp/threadblock schedule model and print its cost counters.
    Simulate {
        #[arg(long, default_value_t = 4096)]
        size: usize,
        #[arg(long)]
        wpb: Option<usize>,
        #[arg(long)]
        nc: Option<usize>,
        #[arg(long, default_value_t = 1)]
        rows: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = ElementType::F32)]
        dtype: ElementType,
    },
    /// Quantization error with and without a Hadamard rotation.
    Quant {
        #[arg(long, default_value_t = 64)]
        rows: usize,
        #[arg(long, default_value_t = 1024)]
        cols: usize,
        #[arg(long, default_value_t = 1.0)]
        base_std: f64,
        #[arg(long, default_value_t = 0.001)]
        outlier_rate: f64,
        #[arg(long, default_value_t = 100.0)]
        outlier_scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "int4")]
        target: QuantTarget,
        #[arg(long, default_value = "per-tensor")]
        granularity: Granularity,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Also print a readable summary to stderr.
        #[arg(long)]
        summary: bool,
    },
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let ok = match cli.command {
        Command::Verify {
            max_size,
            seed,
            rows,
            inject_fault,
        } => {
            let cfg = VerifyConfig {
                max_size,
                seed,
                rows,
                workers: cli.workers,
            };
            if inject_fault {
                cmd_verify(&cfg, &faulty_transform, &mut out)?
            } else {
                cmd_verify(&cfg, &blocked_transform, &mut out)?
            }
        }
        Command::Bench {
            sizes,
            element_counts,
            dtypes,
            impls,
            repetitions,
            warmup,
            seed,
            dense_max_size,
        } => {
            let cfg = BenchConfig {
                sizes,
                element_counts,
                dtypes,
                impls,
                repetitions,
                warmup,
                seed,
                workers: cli.workers,
                dense_max_size,
            };
            cmd_bench(&cfg, &mut out)?;
            true
        }
        Command::Transform {
            input,
            output,
            size,
            dtype,
            in_place,
            scale,
        } => {
            let args = TransformArgs {
                input,
                output,
                size,
                dtype,
                in_place,
                scale,
            };
            let workers = blockwht_cli::resolve_workers(cli.workers);
            let n = blockwht::par::with_workers(workers, || cmd_transform(&args))?;
            eprintln!("wrote {n} bytes");
            true
        }
        Command::Simulate {
            size,
            wpb,
            nc,
            rows,
            seed,
            dtype,
        } => {
            let cfg = SimulateConfig {
                size,
                warps_per_block: wpb,
                num_chunks: nc,
                rows,
                seed,
                dtype,
            };
            cmd_simulate(&cfg, &mut out)?
        }
        Command::Quant {
            rows,
            cols,
            base_std,
            outlier_rate,
            outlier_scale,
            seed,
            target,
            granularity,
            trials,
            summary,
        } => {
            let cfg = QuantConfig {
                spec: OutlierSpec {
                    rows,
                    cols,
                    base_std,
                    outlier_rate,
                    outlier_scale,
                    seed,
                },
                target,
                granularity,
                trials,
                workers: cli.workers,
            };
            let report = cmd_quant(&cfg, &mut out)?;
            if summary {
                eprintln!("{report}");
            }
            true
        }
    };
    out.flush()?;
    Ok(ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
