use std::fmt;
use std::hint::black_box;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use blockwht::oracle::{dense_rotate, fwht_scalar};
use blockwht::{ElementType, Engine, Matrix, TransformOptions, TransformSize};

use crate::{config_err, resolve_workers, write_header};

pub const BENCH_COLUMNS: &str = "impl,size,element_count,dtype,median_ns,p10_ns,p90_ns,mac_count";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Impl {
    Scalar,
    Blocked,
    DenseOracle,
}

impl Impl {
    pub const ALL: [Impl; 3] = [Impl::Scalar, Impl::Blocked, Impl::DenseOracle];

    pub fn name(self) -> &'static str {
        match self {
            Impl::Scalar => "scalar",
            Impl::Blocked => "blocked",
            Impl::DenseOracle => "dense_oracle",
        }
    }

    /// Multiply-accumulates (or butterfly ops for the scalar path) per run.
    pub fn mac_count(self, size: TransformSize, rows: usize) -> u64 {
        let (m, d) = (rows as u64, size.d() as u64);
        match self {
            Impl::Scalar => 2 * m * d * u64::from(size.log2()),
            Impl::Blocked => 16 * m * d * u64::from(size.iterations()),
            Impl::DenseOracle => m * d * d,
        }
    }
}

impl fmt::Display for Impl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Impl {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "scalar" => Ok(Impl::Scalar),
            "blocked" => Ok(Impl::Blocked),
            "dense" | "dense_oracle" => Ok(Impl::DenseOracle),
            _ => Err(format!("unknown implementation {s:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub element_counts: Vec<usize>,
    pub dtypes: Vec<ElementType>,
    pub impls: Vec<Impl>,
    pub repetitions: usize,
    pub warmup: usize,
    pub seed: u64,
    pub workers: Option<usize>,
    /// The dense oracle is skipped above this size.
    pub dense_max_size: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: (8..=15).map(|k| 1 << k).collect(),
            element_counts: vec![1 << 20],
            dtypes: vec![ElementType::F32],
            impls: Impl::ALL.to_vec(),
            repetitions: 10,
            warmup: 2,
            seed: 0,
            workers: None,
            dense_max_size: 2048,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.repetitions == 0 {
            return config_err("repetitions must be at least 1");
        }
        if self.sizes.is_empty() || self.element_counts.is_empty() || self.dtypes.is_empty() {
            return config_err("sizes, element counts and dtypes must be non-empty");
        }
        for &d in &self.sizes {
            if let Err(e) = TransformSize::new(d) {
                return config_err(format!("size {d}: {e}"));
            }
            for &n in &self.element_counts {
                if n == 0 || n % d != 0 {
                    return config_err(format!("element count {n} is not divisible by size {d}"));
                }
            }
        }
        if self.dtypes.contains(&ElementType::Fp8E4M3) {
            return config_err("fp8e4m3 is a quantization target, not a transform dtype");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub implementation: Impl,
    pub size: usize,
    pub element_count: usize,
    pub dtype: ElementType,
    pub median_ns: u128,
    pub p10_ns: u128,
    pub p90_ns: u128,
    pub mac_count: u64,
}

/// Nearest-rank percentile of sorted samples.
fn percentile(sorted: &[u128], p: f64) -> u128 {
    let idx = (p * (sorted.len() - 1) as f64).round() as usize;
    sorted[idx]
}

fn time_once(
    implementation: Impl,
    x: &Matrix,
    size: TransformSize,
    engine: Engine,
) -> blockwht::Result<u128> {
    let opts = TransformOptions::default();
    let scale = 1.0 / (size.d() as f64).sqrt();
    let input = x.clone();
    let start = Instant::now();
    match implementation {
        Impl::Blocked => {
            black_box(engine.transform(input, size, &opts)?);
        }
        Impl::Scalar => {
            black_box(fwht_scalar(input, scale, true)?);
        }
        Impl::DenseOracle => {
            black_box(dense_rotate(&input, size.d(), scale)?);
        }
    }
    Ok(start.elapsed().as_nanos())
}

/// Times every (impl, size, element count, dtype) combination.
pub fn run_bench(cfg: &BenchConfig) -> anyhow::Result<Vec<BenchRow>> {
    cfg.validate()?;
    let workers = resolve_workers(cfg.workers);
    blockwht::par::with_workers(workers, || {
        let engine = Engine::default();
        let mut rows = Vec::new();
        for &n in &cfg.element_counts {
            for &d in &cfg.sizes {
                let size = TransformSize::new(d)?;
                for &dtype in &cfg.dtypes {
                    let x = Matrix::random_normal(n / d, d, dtype, cfg.seed);
                    for &implementation in &cfg.impls {
                        if implementation == Impl::DenseOracle && d > cfg.dense_max_size {
                            continue;
                        }
                        for _ in 0..cfg.warmup {
                            time_once(implementation, &x, size, engine)?;
                        }
                        let mut samples = (0..cfg.repetitions)
                            .map(|_| time_once(implementation, &x, size, engine))
                            .collect::<blockwht::Result<Vec<_>>>()?;
                        samples.sort_unstable();
                        rows.push(BenchRow {
                            implementation,
                            size: d,
                            element_count: n,
                            dtype,
                            median_ns: percentile(&samples, 0.5),
                            p10_ns: percentile(&samples, 0.1),
                            p90_ns: percentile(&samples, 0.9),
                            mac_count: implementation.mac_count(size, n / d),
                        });
                    }
                }
            }
        }
        Ok(rows)
    })
}

pub fn write_bench_csv(
    rows: &[BenchRow],
    cfg: &BenchConfig,
    out: &mut dyn Write,
) -> std::io::Result<()> {
    write_header(out, "bench", cfg.seed, resolve_workers(cfg.workers))?;
    writeln!(out, "{BENCH_COLUMNS}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.implementation,
            r.size,
            r.element_count,
            r.dtype,
            r.median_ns,
            r.p10_ns,
            r.p90_ns,
            r.mac_count
        )?;
    }
    Ok(())
}

pub fn cmd_bench(cfg: &BenchConfig, out: &mut dyn Write) -> anyhow::Result<Vec<BenchRow>> {
    let rows = run_bench(cfg)?;
    write_bench_csv(&rows, cfg, out)?;
    Ok(rows)
}
