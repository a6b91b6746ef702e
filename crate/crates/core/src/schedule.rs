//! Logical model of the GPU work decomposition: warps own 256-element
//! chunks, one threadblock barrier separates the in-chunk passes from the
//! cross-chunk passes, and a shared-memory transpose hands columns to warps.
//!
//! One row is one threadblock. Execution is sequential and deterministic.

use std::fmt;

use crate::dtype::ElementType;
use crate::engine::arith::{Arith, NarrowAccum, Native32, Native64, WideThenConvert};
use crate::engine::{
    apply_stage, check_finite, compile, load_row, plan, unload_row, CompiledStage, OpCounts,
    TILE_ELEMS,
};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::size::{TransformOptions, TransformSize};

/// Where an exchange moves data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExchangeKind {
    /// Register shuffles inside one warp; no synchronization.
    WithinWarp,
    /// Staged through shared memory; needs the preceding barrier.
    ThroughSharedMemory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    /// Every warp applies plan stage `stage` to the data it owns.
    Tile {
        stage: usize,
    },
    Exchange(ExchangeKind),
    SharedStore,
    Barrier,
    GlobalStore,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchedulePlan {
    pub size: TransformSize,
    pub warps_per_block: usize,
    pub num_chunks: usize,
    pub steps: Vec<Step>,
}

impl SchedulePlan {
    pub fn barriers(&self) -> usize {
        self.steps.iter().filter(|s| **s == Step::Barrier).count()
    }

    pub fn exchanges(&self) -> impl Iterator<Item = ExchangeKind> + '_ {
        self.steps.iter().filter_map(|s| match s {
            Step::Exchange(k) => Some(*k),
            _ => None,
        })
    }

    /// Columns of the cross-chunk view each warp reads after the barrier.
    pub fn columns_per_warp(&self) -> usize {
        TILE_ELEMS / self.warps_per_block
    }
}

/// Validates `256 * warps_per_block * num_chunks = d` and lays out the steps.
///
/// For `d <= 256` a single warp with a single chunk does everything.
pub fn make_schedule(
    size: TransformSize,
    warps_per_block: usize,
    num_chunks: usize,
) -> Result<SchedulePlan> {
    let d = size.d();
    let product = TILE_ELEMS
        .checked_mul(warps_per_block)
        .and_then(|p| p.checked_mul(num_chunks))
        .unwrap_or(usize::MAX);
    let ok = if d <= TILE_ELEMS {
        warps_per_block == 1 && num_chunks == 1
    } else {
        product == d
    };
    if !ok {
        return Err(Error::ConstraintViolation {
            d,
            warps_per_block,
            num_chunks,
            product,
        });
    }

    let stages = size.iterations() as usize;
    let mut steps = Vec::new();
    let in_chunk = stages.min(2);
    for s in 0..in_chunk {
        if s > 0 {
            steps.push(Step::Exchange(ExchangeKind::WithinWarp));
        }
        steps.push(Step::Tile { stage: s });
    }
    if stages > 2 {
        steps.push(Step::SharedStore);
        steps.push(Step::Barrier);
        steps.push(Step::Exchange(ExchangeKind::ThroughSharedMemory));
        for s in 2..stages {
            if s > 2 {
                steps.push(Step::Exchange(ExchangeKind::WithinWarp));
            }
            steps.push(Step::Tile { stage: s });
        }
    }
    steps.push(Step::GlobalStore);
    Ok(SchedulePlan {
        size,
        warps_per_block,
        num_chunks,
        steps,
    })
}

/// Counters for one simulated (or modeled) transform.
///
/// Barrier and exchange counts are per threadblock, i.e. per row; the op
/// counts cover all rows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CostReport {
    pub mac_count: u64,
    pub tile_matmul_count: u64,
    /// Two tensor-core `mma` instructions per 16x16x16 tile.
    pub mma_count: u64,
    pub barrier_count: u64,
    pub smem_exchange_count: u64,
    pub warp_exchange_count: u64,
    /// Butterfly baseline cost `2 m n log2 n`.
    pub scalar_op_count: u64,
    /// Set when the numbers come from a structural model rather than from
    /// executing a schedule.
    pub reconstructed: bool,
}

impl fmt::Display for CostReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "macs={} tiles={} mma={} barriers={} smem_exchanges={} warp_exchanges={} scalar_ops={}{}",
            self.mac_count,
            self.tile_matmul_count,
            self.mma_count,
            self.barrier_count,
            self.smem_exchange_count,
            self.warp_exchange_count,
            self.scalar_op_count,
            if self.reconstructed { " (reconstructed)" } else { "" }
        )
    }
}

/// `2 m n log2 n`.
pub fn scalar_op_count(size: TransformSize, rows: usize) -> u64 {
    2 * rows as u64 * size.d() as u64 * u64::from(size.log2())
}

/// Structural model of the butterfly kernel: warp-local exchanges up to
/// 256 elements, then two threadblock syncs for anything larger.
pub fn baseline_cost(size: TransformSize, rows: usize) -> CostReport {
    let barriers = if size.d() > TILE_ELEMS { 2 } else { 0 };
    CostReport {
        scalar_op_count: scalar_op_count(size, rows),
        barrier_count: barriers,
        smem_exchange_count: barriers,
        reconstructed: true,
        ..CostReport::default()
    }
}

/// Runs `plan` on every row of `x` with normalized scaling.
pub fn simulate(x: &Matrix, plan: &SchedulePlan) -> Result<(Matrix, CostReport)> {
    let order: Vec<usize> = (0..plan.warps_per_block).collect();
    simulate_with_order(x, plan, &order, &TransformOptions::default())
}

/// Like [`simulate`] with warps visited in `order` (a permutation of
/// `0..warps_per_block`) and an explicit scale. `opts.in_place` is ignored;
/// the input is never modified.
pub fn simulate_with_order(
    x: &Matrix,
    plan: &SchedulePlan,
    order: &[usize],
    opts: &TransformOptions,
) -> Result<(Matrix, CostReport)> {
    let d = plan.size.d();
    if x.cols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.cols(),
        });
    }
    let mut seen = vec![false; plan.warps_per_block];
    if order.len() != plan.warps_per_block {
        return Err(Error::BadWarpOrder(order.len()));
    }
    for &w in order {
        if w >= seen.len() || seen[w] {
            return Err(Error::BadWarpOrder(w));
        }
        seen[w] = true;
    }
    let scale = opts.scale_for(plan.size)?;
    match x.dtype() {
        ElementType::F64 => run(&Native64, x, plan, order, scale),
        ElementType::F32 => run(&Native32, x, plan, order, scale),
        ElementType::F16 => run(&NarrowAccum::new(ElementType::F16), x, plan, order, scale),
        ElementType::BF16 => run(
            &WideThenConvert::new(ElementType::BF16),
            x,
            plan,
            order,
            scale,
        ),
        t @ ElementType::Fp8E4M3 => Err(Error::UnsupportedDtype(t)),
    }
}

fn run<A: Arith>(
    arith: &A,
    x: &Matrix,
    sched: &SchedulePlan,
    order: &[usize],
    scale: f64,
) -> Result<(Matrix, CostReport)> {
    let d = sched.size.d();
    let stages = compile::<A::Elem>(&plan(sched.size));
    let scale = arith.load(scale);
    let mut out = Matrix::zeros(x.rows(), d, x.dtype());
    let mut counts = OpCounts::default();
    let mut report = CostReport::default();

    let mut smem: Vec<A::Elem> = Vec::with_capacity(d);
    let mut warp_buf: Vec<A::Elem> = Vec::new();
    let mut scratch: Vec<A::Elem> = Vec::new();
    for (src, dst) in x.iter_rows().zip(out.data_mut().chunks_exact_mut(d)) {
        load_row(arith, src, &mut smem);
        let mut crossed = false;
        for step in &sched.steps {
            match *step {
                Step::Tile { stage } => {
                    let cs = &stages[stage];
                    counts = counts
                        + if crossed {
                            cross_chunk_pass(
                                arith,
                                sched,
                                order,
                                cs,
                                &mut smem,
                                &mut warp_buf,
                                &mut scratch,
                            )
                        } else {
                            in_chunk_pass(arith, sched, order, cs, &mut smem, &mut scratch)
                        };
                    check_finite(arith, &smem)?;
                }
                Step::Exchange(ExchangeKind::WithinWarp) => report.warp_exchange_count += 1,
                Step::Exchange(ExchangeKind::ThroughSharedMemory) => {
                    report.smem_exchange_count += 1;
                    crossed = true;
                }
                Step::Barrier => report.barrier_count += 1,
                Step::SharedStore | Step::GlobalStore => {}
            }
        }
        unload_row(arith, &smem, scale, dst)?;
    }

    let rows = x.rows().max(1) as u64;
    report.barrier_count /= rows;
    report.smem_exchange_count /= rows;
    report.warp_exchange_count /= rows;
    report.mac_count = counts.macs;
    report.tile_matmul_count = counts.tiles;
    report.mma_count = 2 * counts.tiles;
    report.scalar_op_count = scalar_op_count(sched.size, x.rows());
    Ok((out, report))
}

/// Steps 1-2: each warp transforms its own contiguous 256-element chunks.
fn in_chunk_pass<A: Arith>(
    arith: &A,
    plan: &SchedulePlan,
    order: &[usize],
    cs: &CompiledStage<A::Elem>,
    row: &mut [A::Elem],
    scratch: &mut Vec<A::Elem>,
) -> OpCounts {
    let chunk = row.len().min(TILE_ELEMS);
    let per_warp = chunk * plan.num_chunks;
    let mut counts = OpCounts::default();
    for &w in order {
        for c in row[w * per_warp..(w + 1) * per_warp].chunks_exact_mut(chunk) {
            counts = counts + apply_stage(arith, c, cs.stage.stride, cs, scratch);
        }
    }
    counts
}

/// Steps 4-5: after the barrier, warp `w` reads columns
/// `[w * 256 / wpb, (w + 1) * 256 / wpb)` of the `d/256 x 256` view and
/// applies the remaining factors along each column.
fn cross_chunk_pass<A: Arith>(
    arith: &A,
    plan: &SchedulePlan,
    order: &[usize],
    cs: &CompiledStage<A::Elem>,
    smem: &mut [A::Elem],
    warp_buf: &mut Vec<A::Elem>,
    scratch: &mut Vec<A::Elem>,
) -> OpCounts {
    let len = smem.len() / TILE_ELEMS;
    let cols = plan.columns_per_warp();
    let stride = cs.stage.stride / TILE_ELEMS;
    let mut counts = OpCounts::default();
    for &w in order {
        let first = w * cols;
        warp_buf.clear();
        for c in first..first + cols {
            warp_buf.extend((0..len).map(|r| smem[r * TILE_ELEMS + c]));
        }
        counts = counts + apply_stage(arith, warp_buf, stride, cs, scratch);
        for (k, column) in warp_buf.chunks_exact(len).enumerate() {
            for (r, &v) in column.iter().enumerate() {
                smem[r * TILE_ELEMS + first + k] = v;
            }
        }
    }
    counts
}

/// Every `(warps_per_block, num_chunks)` pair with power-of-two factors that
/// satisfies the product constraint for `size`.
pub fn valid_configs(size: TransformSize) -> Vec<(usize, usize)> {
    let d = size.d();
    if d <= TILE_ELEMS {
        return vec![(1, 1)];
    }
    let q = d / TILE_ELEMS;
    (0..=q.trailing_zeros())
        .map(|k| (1usize << k, q >> k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::hadamard_transform;

    fn size(d: usize) -> TransformSize {
        TransformSize::new(d).unwrap()
    }

    #[test]
    fn constraint_examples() {
        let p = make_schedule(size(1024), 2, 2).unwrap();
        assert_eq!(p.barriers(), 1);
        assert_eq!(make_schedule(size(256), 1, 1).unwrap().barriers(), 0);
        assert!(matches!(
            make_schedule(size(1024), 2, 1),
            Err(Error::ConstraintViolation { product: 512, .. })
        ));
        assert!(matches!(
            make_schedule(size(1024), 3, 1),
            Err(Error::ConstraintViolation { product: 768, .. })
        ));
        assert!(make_schedule(size(64), 2, 1).is_err());
    }

    #[test]
    fn step_layout_for_large_sizes() {
        let p = make_schedule(size(8192), 4, 8).unwrap();
        assert_eq!(
            p.steps,
            vec![
                Step::Tile { stage: 0 },
                Step::Exchange(ExchangeKind::WithinWarp),
                Step::Tile { stage: 1 },
                Step::SharedStore,
                Step::Barrier,
                Step::Exchange(ExchangeKind::ThroughSharedMemory),
                Step::Tile { stage: 2 },
                Step::Exchange(ExchangeKind::WithinWarp),
                Step::Tile { stage: 3 },
                Step::GlobalStore,
            ]
        );
    }

    #[test]
    fn matches_engine_at_256_and_4096() {
        for (d, wpb, nc) in [(256, 1, 1), (4096, 4, 4)] {
            let x = Matrix::random_normal(2, d, ElementType::F64, 11);
            let p = make_schedule(size(d), wpb, nc).unwrap();
            let (y, report) = simulate(&x, &p).unwrap();
            let z = hadamard_transform(x, size(d), &TransformOptions::default()).unwrap();
            assert!(y.bitwise_eq(&z));
            assert_eq!(report.barrier_count, u64::from(d > 256));
        }
    }

    #[test]
    fn cost_for_4096() {
        let x = Matrix::random_normal(1, 4096, ElementType::F32, 0);
        let p = make_schedule(size(4096), 4, 4).unwrap();
        let (_, r) = simulate(&x, &p).unwrap();
        assert_eq!(r.mac_count, 196_608);
        assert_eq!(r.tile_matmul_count, 48);
        assert_eq!(r.mma_count, 96);
        assert_eq!(r.scalar_op_count, 98_304);
    }

    #[test]
    fn baseline_examples() {
        assert_eq!(baseline_cost(size(32768), 1).barrier_count, 2);
        assert_eq!(baseline_cost(size(4096), 1).scalar_op_count, 98_304);
        assert_eq!(baseline_cost(size(2), 3).scalar_op_count, 2 * 3 * 2);
        assert!(baseline_cost(size(2), 1).reconstructed);
    }

    #[test]
    fn warp_order_is_validated() {
        let p = make_schedule(size(1024), 2, 2).unwrap();
        let x = Matrix::zeros(1, 1024, ElementType::F64);
        let opts = TransformOptions::default();
        assert!(matches!(
            simulate_with_order(&x, &p, &[0, 0], &opts),
            Err(Error::BadWarpOrder(0))
        ));
        assert!(simulate_with_order(&x, &p, &[0], &opts).is_err());
        assert!(simulate_with_order(&x, &p, &[1, 0], &opts).is_ok());
    }

    #[test]
    fn valid_configs_cover_the_constraint() {
        assert_eq!(valid_configs(size(128)), vec![(1, 1)]);
        assert_eq!(valid_configs(size(1024)), vec![(1, 4), (2, 2), (4, 1)]);
        for s in TransformSize::all() {
            for (w, c) in valid_configs(s) {
                assert!(make_schedule(s, w, c).is_ok());
            }
        }
    }
}
