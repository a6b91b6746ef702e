use std::io::Write;

use blockwht::engine::{build_last_tile, microkernel_16x16, plan, Tile16};
use blockwht::oracle::{dense_rotate, fwht_scalar, sign_rule, sylvester};
use blockwht::precision::{round_to, transform_emulated};
use blockwht::{AccumMode, ElementType, Matrix, TransformOptions, TransformSize};

/// Signature of the transform under test.
pub type TransformFn<'a> =
    &'a (dyn Fn(Matrix, TransformSize, &TransformOptions) -> blockwht::Result<Matrix> + Sync);

#[derive(Debug, Clone, Copy)]
pub struct VerifyConfig {
    pub max_size: usize,
    pub seed: u64,
    pub rows: usize,
    pub workers: Option<usize>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            max_size: blockwht::size::MAX_SIZE,
            seed: 0,
            rows: 2,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub check: &'static str,
    pub size: Option<usize>,
    pub error: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.error <= self.tolerance
    }
}

/// The healthy engine.
pub fn blocked_transform(
    x: Matrix,
    size: TransformSize,
    opts: &TransformOptions,
) -> blockwht::Result<Matrix> {
    blockwht::hadamard_transform(x, size, opts)
}

/// Negative control: the healthy engine with the first element nudged.
pub fn faulty_transform(
    x: Matrix,
    size: TransformSize,
    opts: &TransformOptions,
) -> blockwht::Result<Matrix> {
    let y = blockwht::hadamard_transform(x, size, opts)?;
    let (rows, cols, dtype) = (y.rows(), y.cols(), y.dtype());
    let mut data = y.into_data();
    if let Some(v) = data.first_mut() {
        *v += 0.5;
    }
    Matrix::from_rounded(rows, cols, dtype, data)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn bool_err(ok: bool) -> f64 {
    if ok {
        0.0
    } else {
        1.0
    }
}

/// Runs every check and returns the individual results.
pub fn run_checks(
    cfg: &VerifyConfig,
    engine: TransformFn<'_>,
) -> blockwht::Result<Vec<CheckResult>> {
    let mut results = Vec::new();
    let mut push = |check, size, error, tolerance| {
        results.push(CheckResult {
            check,
            size,
            error,
            tolerance,
        })
    };

    let h = Tile16::hadamard16();
    push(
        "microkernel",
        None,
        bool_err(microkernel_16x16(&Tile16::identity(), &h) == h),
        0.0,
    );
    let tiles_ok = (1..=3).all(|a| {
        let t = build_last_tile(a).expect("valid exponent");
        let g = f64::from(1u32 << a);
        microkernel_16x16(&t, &t.transpose())
            == Tile16::from_fn(|i, j| if i == j { g } else { 0.0 })
    });
    push("last_tiles", None, bool_err(tiles_ok), 0.0);
    let rounding_ok = round_to(0.2, ElementType::BF16)? == 0.2001953125
        && round_to(0.2, ElementType::F16)? == 0.199951171875
        && round_to(30.0, ElementType::Fp8E4M3)? == 30.0;
    push("round_to", None, bool_err(rounding_ok), 0.0);

    let sizes: Vec<TransformSize> = TransformSize::all()
        .filter(|s| s.d() <= cfg.max_size)
        .collect();
    for &size in &sizes {
        let d = size.d();
        let seed = cfg.seed ^ (d as u64).rotate_left(17);
        let scale = 1.0 / (d as f64).sqrt();
        let opts = TransformOptions::default();

        push(
            "plan_stages",
            Some(d),
            bool_err(plan(size).stage_count() as u32 == size.iterations()),
            0.0,
        );
        if d <= 256 {
            let hd = sylvester(d)?;
            let ok = (0..d).all(|i| (0..d).all(|j| hd.get(i, j) == sign_rule(i, j)));
            push("sign_rule", Some(d), bool_err(ok), 0.0);
        }

        let x = Matrix::random_normal(cfg.rows, d, ElementType::F64, seed);
        let reference = dense_rotate(&x, d, scale)?;
        let blocked = engine(x.clone(), size, &opts)?;
        let tol = 1e-9;
        push(
            "blocked_vs_dense",
            Some(d),
            max_abs_diff(blocked.data(), reference.data()),
            tol,
        );
        let scalar = fwht_scalar(x.clone(), scale, false)?;
        push(
            "scalar_vs_dense",
            Some(d),
            max_abs_diff(scalar.data(), reference.data()),
            tol,
        );

        let twice = engine(blocked.clone(), size, &opts)?;
        push(
            "involution",
            Some(d),
            max_abs_diff(twice.data(), x.data()) / x.max_abs(),
            1e-12,
        );
        let norm_err = x
            .iter_rows()
            .zip(blocked.iter_rows())
            .map(|(a, b)| (norm(b) / norm(a) - 1.0).abs())
            .fold(0.0, f64::max);
        push("norm", Some(d), norm_err, 1e-12);

        let x32 = x.cast(ElementType::F32)?;
        let ref32 = dense_rotate(&x32, d, scale)?;
        let y32 = engine(x32.clone(), size, &opts)?;
        push(
            "blocked_f32",
            Some(d),
            max_abs_diff(y32.data(), ref32.data()) / ref32.max_abs(),
            1e-4,
        );

        let out_of_place = engine(x32.clone(), size, &TransformOptions::out_of_place())?;
        push(
            "in_place",
            Some(d),
            bool_err(out_of_place.bitwise_eq(&y32)),
            0.0,
        );

        for dtype in [ElementType::F16, ElementType::BF16] {
            let mode = AccumMode::default_for(dtype).expect("narrow dtype");
            let e = Matrix::one_hot(1, d, dtype, 0, 1.0)?;
            let y =
                transform_emulated(e, size, &TransformOptions::default().with_scale(1.0), mode)?;
            let name = if dtype == ElementType::F16 {
                "emulated_f16"
            } else {
                "emulated_bf16"
            };
            push(name, Some(d), max_abs_diff(y.data(), &vec![1.0; d]), 0.0);
        }
    }
    Ok(results)
}

/// Prints a pass/fail table; returns whether every check passed.
pub fn cmd_verify(
    cfg: &VerifyConfig,
    engine: TransformFn<'_>,
    out: &mut dyn Write,
) -> anyhow::Result<bool> {
    if cfg.rows == 0 {
        return crate::config_err("verify needs at least one row");
    }
    let workers = crate::resolve_workers(cfg.workers);
    let results = blockwht::par::with_workers(workers, || run_checks(cfg, engine))?;
    crate::write_header(out, "verify", cfg.seed, workers)?;
    writeln!(
        out,
        "{:<18} {:>6} {:>11} {:>9}  result",
        "check", "size", "error", "tol"
    )?;
    for r in &results {
        let size = r.size.map_or_else(|| "-".to_string(), |d| d.to_string());
        writeln!(
            out,
            "{:<18} {:>6} {:>11.3e} {:>9.0e}  {}",
            r.check,
            size,
            r.error,
            r.tolerance,
            if r.passed() { "PASS" } else { "FAIL" }
        )?;
    }
    let failed = results.iter().filter(|r| !r.passed()).count();
    if failed == 0 {
        writeln!(out, "all {} checks passed", results.len())?;
    } else {
        writeln!(out, "{failed} of {} checks FAILED", results.len())?;
    }
    Ok(failed == 0)
}
