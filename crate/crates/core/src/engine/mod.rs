//! The blocked transform: `ceil(log16 d)` passes of a 16x16 matrix-multiply
//! microkernel with transpose exchanges between passes.

pub(crate) mod arith;
mod exec;
mod plan;
mod tile;

pub use exec::OpCounts;
pub(crate) use exec::{
    apply_stage, check_finite, compile, load_row, transform_row, unload_row, CompiledStage,
    Workspace,
};
pub use plan::{plan, plan_for, Exchange, ExecutionPlan, Stage, TileKind};
pub use tile::{build_last_tile, microkernel_16x16, Tile16, TILE, TILE_ELEMS};

use crate::dtype::ElementType;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::par::{self, Exec};
use crate::size::{TransformOptions, TransformSize};
use arith::{Arith, NarrowAccum, Native32, Native64, WideThenConvert};

/// Blocked transform entry points with a chosen row scheduling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Engine {
    exec: Exec,
}

impl Engine {
    pub fn new(exec: Exec) -> Self {
        Engine { exec }
    }

    pub fn sequential() -> Self {
        Engine::new(Exec::Sequential)
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }

    /// Transforms `x`, reusing its buffer when `opts.in_place` is set.
    pub fn transform(
        &self,
        x: Matrix,
        size: TransformSize,
        opts: &TransformOptions,
    ) -> Result<Matrix> {
        self.transform_counted(x, size, opts).map(|(m, _)| m)
    }

    /// Like [`Engine::transform`], also returning the executed op counts.
    pub fn transform_counted(
        &self,
        mut x: Matrix,
        size: TransformSize,
        opts: &TransformOptions,
    ) -> Result<(Matrix, OpCounts)> {
        if opts.in_place {
            let counts = self.transform_in_place(&mut x, size, opts)?;
            Ok((x, counts))
        } else {
            self.transform_out_of_place(&x, size, opts)
        }
    }

    /// Overwrites `x` with its transform.
    pub fn transform_in_place(
        &self,
        x: &mut Matrix,
        size: TransformSize,
        opts: &TransformOptions,
    ) -> Result<OpCounts> {
        check_cols(x, size)?;
        let scale = opts.scale_for(size)?;
        let dtype = x.dtype();
        self.execute_dtype(dtype, size, scale, None, x.data_mut())
    }

    /// Writes the transform into a fresh matrix; `x` is left untouched.
    pub fn transform_out_of_place(
        &self,
        x: &Matrix,
        size: TransformSize,
        opts: &TransformOptions,
    ) -> Result<(Matrix, OpCounts)> {
        check_cols(x, size)?;
        let scale = opts.scale_for(size)?;
        let mut out = Matrix::zeros(x.rows(), x.cols(), x.dtype());
        let counts = self.execute_dtype(x.dtype(), size, scale, Some(x.data()), out.data_mut())?;
        Ok((out, counts))
    }

    /// Transforms consecutive `d`-element rows of a raw buffer in place.
    ///
    /// Values are assumed to already lie on `dtype`'s grid. Nothing outside
    /// `data` is read or written.
    pub fn transform_slice(
        &self,
        data: &mut [f64],
        dtype: ElementType,
        size: TransformSize,
        opts: &TransformOptions,
    ) -> Result<OpCounts> {
        if !data.len().is_multiple_of(size.d()) {
            return Err(Error::BadShape {
                rows: data.len() / size.d(),
                cols: size.d(),
                len: data.len(),
            });
        }
        let scale = opts.scale_for(size)?;
        self.execute_dtype(dtype, size, scale, None, data)
    }

    pub(crate) fn run_with<A: Arith>(
        &self,
        arith: &A,
        mut x: Matrix,
        size: TransformSize,
        opts: &TransformOptions,
    ) -> Result<(Matrix, OpCounts)> {
        check_cols(&x, size)?;
        let scale = opts.scale_for(size)?;
        if opts.in_place {
            let counts = self.execute(arith, size, scale, None, x.data_mut())?;
            Ok((x, counts))
        } else {
            let mut out = Matrix::zeros(x.rows(), x.cols(), x.dtype());
            let counts = self.execute(arith, size, scale, Some(x.data()), out.data_mut())?;
            Ok((out, counts))
        }
    }

    fn execute_dtype(
        &self,
        dtype: ElementType,
        size: TransformSize,
        scale: f64,
        src: Option<&[f64]>,
        dst: &mut [f64],
    ) -> Result<OpCounts> {
        match dtype {
            ElementType::F64 => self.execute(&Native64, size, scale, src, dst),
            ElementType::F32 => self.execute(&Native32, size, scale, src, dst),
            ElementType::F16 => self.execute(&NarrowAccum::new(dtype), size, scale, src, dst),
            ElementType::BF16 => self.execute(&WideThenConvert::new(dtype), size, scale, src, dst),
            ElementType::Fp8E4M3 => Err(Error::UnsupportedDtype(dtype)),
        }
    }

    fn execute<A: Arith>(
        &self,
        arith: &A,
        size: TransformSize,
        scale: f64,
        src: Option<&[f64]>,
        dst: &mut [f64],
    ) -> Result<OpCounts> {
        let d = size.d();
        let stages = compile::<A::Elem>(&plan(size));
        let scale = arith.load(scale);
        par::try_row_blocks(dst, src, d, self.exec, |src, dst| {
            let mut ws = Workspace::new(d);
            let mut counts = OpCounts::default();
            for (r, row) in dst.chunks_exact_mut(d).enumerate() {
                let src_row = src.map(|s| &s[r * d..(r + 1) * d]);
                counts = counts + transform_row(arith, &stages, scale, src_row, row, &mut ws)?;
            }
            Ok(counts)
        })
    }
}

fn check_cols(x: &Matrix, size: TransformSize) -> Result<()> {
    if x.cols() != size.d() {
        return Err(Error::DimensionMismatch {
            expected: size.d(),
            found: x.cols(),
        });
    }
    Ok(())
}

/// `out[i, :] = scale * H_d * x[i, :]` for every row, honoring `opts.in_place`.
///
/// F16 inputs accumulate in F16 and BF16 inputs accumulate in F32 with a
/// BF16 conversion after each stage; F32 and F64 run natively.
pub fn hadamard_transform(
    x: Matrix,
    size: TransformSize,
    opts: &TransformOptions,
) -> Result<Matrix> {
    Engine::default().transform(x, size, opts)
}

/// Instrumented variant of [`hadamard_transform`].
pub fn hadamard_transform_counted(
    x: Matrix,
    size: TransformSize,
    opts: &TransformOptions,
) -> Result<(Matrix, OpCounts)> {
    Engine::default().transform_counted(x, size, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm() -> TransformOptions {
        TransformOptions::default()
    }

    #[test]
    fn one_hot_256() {
        let size = TransformSize::new(256).unwrap();
        let x = Matrix::one_hot(1, 256, ElementType::F64, 0, 1.0).unwrap();
        let y = hadamard_transform(x, size, &norm()).unwrap();
        assert!(y.data().iter().all(|&v| v == 1.0 / 16.0));
    }

    #[test]
    fn all_ones_512() {
        let size = TransformSize::new(512).unwrap();
        let x = Matrix::new(1, 512, ElementType::F64, vec![1.0; 512]).unwrap();
        let y = hadamard_transform(x, size, &norm()).unwrap();
        assert!((y.get(0, 0) - 512f64.sqrt()).abs() <= 1e-12);
        assert!(y.data()[1..].iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn dimension_mismatch() {
        let size = TransformSize::new(16).unwrap();
        let x = Matrix::zeros(2, 32, ElementType::F64);
        assert!(matches!(
            hadamard_transform(x, size, &norm()),
            Err(Error::DimensionMismatch {
                expected: 16,
                found: 32
            })
        ));
    }

    #[test]
    fn fp8_is_not_a_transform_dtype() {
        let size = TransformSize::new(16).unwrap();
        let x = Matrix::zeros(1, 16, ElementType::Fp8E4M3);
        assert!(matches!(
            hadamard_transform(x, size, &norm()),
            Err(Error::UnsupportedDtype(ElementType::Fp8E4M3))
        ));
    }

    #[test]
    fn empty_batch_is_allowed() {
        let size = TransformSize::new(64).unwrap();
        let x = Matrix::zeros(0, 64, ElementType::F32);
        let (y, counts) = hadamard_transform_counted(x, size, &norm()).unwrap();
        assert_eq!(y.rows(), 0);
        assert_eq!(counts, OpCounts::default());
    }

    #[test]
    fn out_of_place_leaves_input_alone() {
        let size = TransformSize::new(1024).unwrap();
        let x = Matrix::random_normal(3, 1024, ElementType::F32, 5);
        let before = x.clone();
        let (y, _) = Engine::default()
            .transform_out_of_place(&x, size, &norm())
            .unwrap();
        assert!(x.bitwise_eq(&before));
        let mut z = x.clone();
        Engine::default()
            .transform_in_place(&mut z, size, &norm())
            .unwrap();
        assert!(y.bitwise_eq(&z));
    }

    #[test]
    fn mac_count_formula() {
        let size = TransformSize::new(4096).unwrap();
        let x = Matrix::random_normal(1, 4096, ElementType::F64, 1);
        let (_, counts) = hadamard_transform_counted(x, size, &norm()).unwrap();
        assert_eq!(counts.macs, 196_608);
        assert_eq!(counts.tiles, 48);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let size = TransformSize::new(2048).unwrap();
        let x = Matrix::random_normal(37, 2048, ElementType::F64, 8);
        let a = Engine::sequential()
            .transform_out_of_place(&x, size, &norm())
            .unwrap();
        let b = Engine::new(Exec::Parallel)
            .transform_out_of_place(&x, size, &norm())
            .unwrap();
        assert!(a.0.bitwise_eq(&b.0));
        assert_eq!(a.1, b.1);
    }
}
