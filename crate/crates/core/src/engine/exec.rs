use std::ops::Add;

use num_traits::{Float, ToPrimitive, Zero};

use crate::error::{Error, Result};

use super::arith::Arith;
use super::plan::{ExecutionPlan, Stage};
use super::tile::{apply_lane_rows, CoeffTile, TILE};

/// Counters gathered while tiles execute.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    /// Multiply-accumulates at 16 per lane per stage, the cost a 16x16
    /// tensor-core tile spends whether or not coefficients are zero.
    pub macs: u64,
    /// 16x16x16 tile multiplies; a partially filled tile counts as one.
    pub tiles: u64,
}

impl Add for OpCounts {
    type Output = OpCounts;

    fn add(self, rhs: OpCounts) -> OpCounts {
        OpCounts {
            macs: self.macs + rhs.macs,
            tiles: self.tiles + rhs.tiles,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct CompiledStage<E> {
    pub(crate) stage: Stage,
    pub(crate) coeff: CoeffTile<E>,
}

pub(crate) fn compile<E: Float>(plan: &ExecutionPlan) -> Vec<CompiledStage<E>> {
    plan.stages
        .iter()
        .map(|&stage| CompiledStage {
            stage,
            coeff: CoeffTile::new(&stage.tile.coefficients(), stage.group_len()),
        })
        .collect()
}

/// Runs one stage over `buf` with lane groups `stride` apart.
///
/// For `stride > 1` the exchange is an explicit permutation: each
/// `group x stride` block is transposed into `scratch`, the microkernel runs
/// on contiguous lanes, and the result is transposed back.
pub(crate) fn apply_stage<A: Arith>(
    arith: &A,
    buf: &mut [A::Elem],
    stride: usize,
    cs: &CompiledStage<A::Elem>,
    scratch: &mut Vec<A::Elem>,
) -> OpCounts {
    let g = cs.stage.group_len();
    let tiles = if stride == 1 {
        let tiles = apply_lane_rows(arith, buf, &cs.coeff);
        for v in buf.iter_mut() {
            *v = arith.store(*v);
        }
        tiles
    } else {
        let block = g * stride;
        debug_assert_eq!(buf.len() % block, 0);
        scratch.clear();
        scratch.resize(buf.len(), A::Elem::zero());
        for (src, dst) in buf.chunks_exact(block).zip(scratch.chunks_exact_mut(block)) {
            for t in 0..g {
                let lane = &src[t * stride..(t + 1) * stride];
                for (j, &v) in lane.iter().enumerate() {
                    dst[j * g + t] = v;
                }
            }
        }
        let tiles = apply_lane_rows(arith, scratch, &cs.coeff);
        for (dst, src) in buf.chunks_exact_mut(block).zip(scratch.chunks_exact(block)) {
            for t in 0..g {
                let lane = &mut dst[t * stride..(t + 1) * stride];
                for (j, v) in lane.iter_mut().enumerate() {
                    *v = arith.store(src[j * g + t]);
                }
            }
        }
        tiles
    };
    OpCounts {
        macs: (buf.len() * TILE) as u64,
        tiles,
    }
}

pub(crate) fn check_finite<A: Arith>(arith: &A, buf: &[A::Elem]) -> Result<()> {
    if A::NARROW {
        if let Some(v) = buf.iter().find(|v| v.is_infinite()) {
            return Err(Error::OverflowToInfinity {
                value: v.to_f64().unwrap_or(f64::INFINITY),
                dtype: arith.dtype(),
            });
        }
    }
    Ok(())
}

#[derive(Debug)]
pub(crate) struct Workspace<E> {
    pub(crate) work: Vec<E>,
    pub(crate) scratch: Vec<E>,
}

impl<E> Workspace<E> {
    pub(crate) fn new(d: usize) -> Self {
        Workspace {
            work: Vec::with_capacity(d),
            scratch: Vec::with_capacity(d),
        }
    }
}

pub(crate) fn load_row<A: Arith>(arith: &A, src: &[f64], work: &mut Vec<A::Elem>) {
    work.clear();
    work.extend(src.iter().map(|&v| arith.load(v)));
}

/// Scales, rounds to the storage format and writes `work` into `dst`.
pub(crate) fn unload_row<A: Arith>(
    arith: &A,
    work: &[A::Elem],
    scale: A::Elem,
    dst: &mut [f64],
) -> Result<()> {
    for (d, &w) in dst.iter_mut().zip(work) {
        *d = arith.unload(w * scale);
    }
    if A::NARROW {
        if let Some(&v) = dst.iter().find(|v| v.is_infinite()) {
            return Err(Error::OverflowToInfinity {
                value: v,
                dtype: arith.dtype(),
            });
        }
    }
    Ok(())
}

/// Full transform of one row: `dst = scale * H_d * src` (`src = dst` when
/// `src` is `None`).
pub(crate) fn transform_row<A: Arith>(
    arith: &A,
    stages: &[CompiledStage<A::Elem>],
    scale: A::Elem,
    src: Option<&[f64]>,
    dst: &mut [f64],
    ws: &mut Workspace<A::Elem>,
) -> Result<OpCounts> {
    load_row(arith, src.unwrap_or(dst), &mut ws.work);
    let mut counts = OpCounts::default();
    for cs in stages {
        counts = counts + apply_stage(arith, &mut ws.work, cs.stage.stride, cs, &mut ws.scratch);
        check_finite(arith, &ws.work)?;
    }
    unload_row(arith, &ws.work, scale, dst)?;
    Ok(counts)
}
