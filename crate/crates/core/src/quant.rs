//! Symmetric quantization of synthetic outlier-heavy activations, with and
//! without a normalized Hadamard rotation in front.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dtype::ElementType;
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::par::{self, Exec};
use crate::precision::{fp8_e4m3_from_bits, fp8_e4m3_to_bits, round_to};
use crate::size::{TransformOptions, TransformSize};

/// Gaussian bulk with a sprinkling of large-magnitude entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutlierSpec {
    pub rows: usize,
    pub cols: usize,
    pub base_std: f64,
    /// Probability that an entry is replaced by an outlier.
    pub outlier_rate: f64,
    /// Outliers are `+/- outlier_scale * base_std`.
    pub outlier_scale: f64,
    pub seed: u64,
}

impl Default for OutlierSpec {
    fn default() -> Self {
        OutlierSpec {
            rows: 64,
            cols: 1024,
            base_std: 1.0,
            outlier_rate: 0.001,
            outlier_scale: 100.0,
            seed: 0,
        }
    }
}

impl OutlierSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::BadSpec(msg.to_string()));
        if self.rows == 0 || self.cols == 0 {
            return bad("rows and cols must be positive");
        }
        if !(self.base_std.is_finite() && self.base_std > 0.0) {
            return bad("base_std must be positive and finite");
        }
        if !(0.0..=1.0).contains(&self.outlier_rate) {
            return bad("outlier_rate must lie in [0, 1]");
        }
        if !(self.outlier_scale.is_finite() && self.outlier_scale >= 1.0) {
            return bad("outlier_scale must be at least 1");
        }
        Ok(())
    }
}

/// F64 matrix drawn from `spec`'s default ChaCha8 stream.
pub fn gen_outlier_matrix(spec: &OutlierSpec) -> Result<Matrix> {
    spec.validate()?;
    Ok(generate(spec, &mut ChaCha8Rng::seed_from_u64(spec.seed)))
}

fn generate(spec: &OutlierSpec, rng: &mut ChaCha8Rng) -> Matrix {
    let outlier = spec.outlier_scale * spec.base_std;
    let data = (0..spec.rows * spec.cols)
        .map(|_| {
            let bulk: f64 = StandardNormal.sample(rng);
            if rng.random::<f64>() < spec.outlier_rate {
                if rng.random::<bool>() {
                    outlier
                } else {
                    -outlier
                }
            } else {
                bulk * spec.base_std
            }
        })
        .collect();
    Matrix::new(spec.rows, spec.cols, ElementType::F64, data).expect("finite f64 samples")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuantTarget {
    Fp8E4M3,
    Int8,
    Int4,
}

impl QuantTarget {
    /// Largest code magnitude.
    pub fn max_code(self) -> f64 {
        match self {
            QuantTarget::Fp8E4M3 => 448.0,
            QuantTarget::Int8 => 127.0,
            QuantTarget::Int4 => 7.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            QuantTarget::Fp8E4M3 => "fp8e4m3",
            QuantTarget::Int8 => "int8",
            QuantTarget::Int4 => "int4",
        }
    }
}

impl fmt::Display for QuantTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QuantTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fp8" | "fp8e4m3" | "e4m3" => Ok(QuantTarget::Fp8E4M3),
            "int8" => Ok(QuantTarget::Int8),
            "int4" => Ok(QuantTarget::Int4),
            _ => Err(Error::BadSpec(format!("unknown quantization target {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Granularity {
    PerTensor,
    PerRow,
}

impl Granularity {
    pub fn name(self) -> &'static str {
        match self {
            Granularity::PerTensor => "per-tensor",
            Granularity::PerRow => "per-row",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "per-tensor" | "tensor" => Ok(Granularity::PerTensor),
            "per-row" | "row" => Ok(Granularity::PerRow),
            _ => Err(Error::BadSpec(format!("unknown granularity {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Codes {
    /// Signed integer codes in `[-Q, Q]`.
    Int(Vec<i8>),
    /// E4M3 bit patterns.
    Fp8(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedMatrix {
    pub rows: usize,
    pub cols: usize,
    pub target: QuantTarget,
    pub granularity: Granularity,
    pub codes: Codes,
    /// One scale per tensor or per row.
    pub scales: Vec<f64>,
}

/// `scale = max_abs / Q`; an all-zero slice gets scale 1 and zero codes.
fn symmetric_scale(values: &[f64], target: QuantTarget) -> f64 {
    let m = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        1.0
    } else {
        m / target.max_code()
    }
}

pub fn quantize(
    x: &Matrix,
    target: QuantTarget,
    granularity: Granularity,
) -> Result<QuantizedMatrix> {
    if x.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::BadSpec("quantize needs finite input".into()));
    }
    let cols = x.cols();
    let scales: Vec<f64> = match granularity {
        Granularity::PerTensor => vec![symmetric_scale(x.data(), target)],
        Granularity::PerRow => x.iter_rows().map(|r| symmetric_scale(r, target)).collect(),
    };
    let scale_at = |i: usize| match granularity {
        Granularity::PerTensor => scales[0],
        Granularity::PerRow => scales[i / cols],
    };
    let codes = match target {
        QuantTarget::Fp8E4M3 => Codes::Fp8(
            x.data()
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    round_to(v / scale_at(i), ElementType::Fp8E4M3).map(fp8_e4m3_to_bits)
                })
                .collect::<Result<_>>()?,
        ),
        QuantTarget::Int8 | QuantTarget::Int4 => {
            let q = target.max_code();
            Codes::Int(
                x.data()
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (v / scale_at(i)).round_ties_even().clamp(-q, q) as i8)
                    .collect(),
            )
        }
    };
    Ok(QuantizedMatrix {
        rows: x.rows(),
        cols,
        target,
        granularity,
        codes,
        scales,
    })
}

/// Codes times scales, as an F64 matrix.
pub fn dequantize(q: &QuantizedMatrix) -> Matrix {
    let scale_at = |i: usize| match q.granularity {
        Granularity::PerTensor => q.scales[0],
        Granularity::PerRow => q.scales[i / q.cols],
    };
    let data: Vec<f64> = match &q.codes {
        Codes::Int(c) => c
            .iter()
            .enumerate()
            .map(|(i, &v)| f64::from(v) * scale_at(i))
            .collect(),
        Codes::Fp8(c) => c
            .iter()
            .enumerate()
            .map(|(i, &v)| fp8_e4m3_from_bits(v) * scale_at(i))
            .collect(),
    };
    Matrix::from_parts_unchecked(q.rows, q.cols, ElementType::F64, data)
}

/// Quantize-then-dequantize.
pub fn round_trip(x: &Matrix, target: QuantTarget, granularity: Granularity) -> Result<Matrix> {
    quantize(x, target, granularity).map(|q| dequantize(&q))
}

pub fn mse(a: &Matrix, b: &Matrix) -> f64 {
    let n = a.len().max(1) as f64;
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialReport {
    pub trial: usize,
    pub mse_plain: f64,
    pub mse_rotated: f64,
    pub max_abs_plain: f64,
    pub max_abs_rotated: f64,
}

impl TrialReport {
    pub fn rotation_wins(&self) -> bool {
        self.mse_rotated < self.mse_plain
    }
}

/// Means over trials, plus the fraction of trials the rotation won.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub mse_plain: f64,
    pub mse_rotated: f64,
    pub win_rate: f64,
    pub max_abs_plain: f64,
    pub max_abs_rotated: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub spec: OutlierSpec,
    pub target: QuantTarget,
    pub granularity: Granularity,
    pub trials: Vec<TrialReport>,
    pub aggregate: Aggregate,
}

impl fmt::Display for ExperimentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = &self.aggregate;
        writeln!(
            f,
            "{} trials, {} {}, {}x{} rate={} scale={}",
            self.trials.len(),
            self.target,
            self.granularity,
            self.spec.rows,
            self.spec.cols,
            self.spec.outlier_rate,
            self.spec.outlier_scale
        )?;
        writeln!(f, "  mean mse plain   {:.6e}", a.mse_plain)?;
        writeln!(f, "  mean mse rotated {:.6e}", a.mse_rotated)?;
        writeln!(
            f,
            "  max|x| plain {:.4} rotated {:.4}",
            a.max_abs_plain, a.max_abs_rotated
        )?;
        write!(f, "  rotation wins {:.1}% of trials", 100.0 * a.win_rate)
    }
}

/// Trial `t` draws its matrix from ChaCha8 stream `t` under `spec.seed`.
pub fn trial_matrix(spec: &OutlierSpec, trial: usize) -> Result<Matrix> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(trial as u64);
    Ok(generate(spec, &mut rng))
}

/// Plain and rotated quantization error for one matrix. The rotated path is
/// `H (dequant(quant(H x)))` with normalized H.
pub fn measure(x: &Matrix, target: QuantTarget, granularity: Granularity) -> Result<TrialReport> {
    let size = TransformSize::new(x.cols())?;
    let engine = Engine::sequential();
    let opts = TransformOptions::default();
    let plain = round_trip(x, target, granularity)?;
    let rotated = engine.transform(x.cast(ElementType::F64)?, size, &opts)?;
    let restored = engine.transform(round_trip(&rotated, target, granularity)?, size, &opts)?;
    Ok(TrialReport {
        trial: 0,
        mse_plain: mse(&plain, x),
        mse_rotated: mse(&restored, x),
        max_abs_plain: x.max_abs(),
        max_abs_rotated: rotated.max_abs(),
    })
}

pub fn run_experiment(
    spec: &OutlierSpec,
    target: QuantTarget,
    granularity: Granularity,
    trials: usize,
) -> Result<ExperimentReport> {
    run_experiment_with(spec, target, granularity, trials, Exec::default())
}

pub fn run_experiment_with(
    spec: &OutlierSpec,
    target: QuantTarget,
    granularity: Granularity,
    trials: usize,
    exec: Exec,
) -> Result<ExperimentReport> {
    spec.validate()?;
    TransformSize::new(spec.cols)?;
    if trials == 0 {
        return Err(Error::BadSpec("trials must be positive".into()));
    }
    let results = par::map_indices(trials, exec, |t| {
        let x = trial_matrix(spec, t)?;
        let mut r = measure(&x, target, granularity)?;
        r.trial = t;
        Ok(r)
    });
    let trials: Vec<TrialReport> = results.into_iter().collect::<Result<_>>()?;
    let n = trials.len() as f64;
    let mean = |f: fn(&TrialReport) -> f64| trials.iter().map(f).sum::<f64>() / n;
    let aggregate = Aggregate {
        mse_plain: mean(|t| t.mse_plain),
        mse_rotated: mean(|t| t.mse_rotated),
        win_rate: trials.iter().filter(|t| t.rotation_wins()).count() as f64 / n,
        max_abs_plain: mean(|t| t.max_abs_plain),
        max_abs_rotated: mean(|t| t.max_abs_rotated),
    };
    Ok(ExperimentReport {
        spec: *spec,
        target,
        granularity,
        trials,
        aggregate,
    })
}
