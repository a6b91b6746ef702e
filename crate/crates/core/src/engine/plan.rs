use crate::error::Result;
use crate::size::TransformSize;

use super::tile::{build_last_tile, Tile16};

/// Coefficient matrix of one stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TileKind {
    /// Unnormalized H16.
    Hadamard16,
    /// `16 / 2^exponent` copies of H_{2^exponent} on the diagonal.
    DiagonalTiled { exponent: u32 },
}

impl TileKind {
    /// Length of the contiguous lane group one coefficient block mixes.
    pub fn group_len(self) -> usize {
        match self {
            TileKind::Hadamard16 => 16,
            TileKind::DiagonalTiled { exponent } => 1 << exponent,
        }
    }

    pub fn coefficients(self) -> Tile16 {
        match self {
            TileKind::Hadamard16 => Tile16::hadamard16(),
            TileKind::DiagonalTiled { exponent } => {
                build_last_tile(exponent).expect("plan only builds exponents 1..=3")
            }
        }
    }
}

/// Data movement that brings a stage's operands into contiguous 16-lane rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exchange {
    None,
    /// Transpose inside a 256-element chunk (or inside one column of the
    /// cross-chunk view).
    TransposeWithin256,
    /// View the row as `d/256 x 256` and transpose to `256 x d/256`.
    TransposeAcross256,
}

/// One pass of the 16x16 microkernel over the whole row.
///
/// The stage mixes elements `stride` apart: lane group `t` of block `j`
/// holds element `j + t * stride`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stage {
    pub tile: TileKind,
    pub stride: usize,
    pub exchange: Exchange,
}

impl Stage {
    pub fn group_len(&self) -> usize {
        self.tile.group_len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionPlan {
    pub size: TransformSize,
    pub stages: Vec<Stage>,
}

impl ExecutionPlan {
    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn exchanges(&self) -> impl Iterator<Item = Exchange> + '_ {
        self.stages
            .iter()
            .map(|s| s.exchange)
            .filter(|e| *e != Exchange::None)
    }
}

/// Stage sequence realizing H_d as a Kronecker chain of H16 factors plus an
/// optional diagonal-tiled residual factor, which always comes last.
pub fn plan(size: TransformSize) -> ExecutionPlan {
    let mut stages = Vec::with_capacity(size.iterations() as usize);
    let mut stride = 1;
    for _ in 0..size.full_stages() {
        stages.push(Stage {
            tile: TileKind::Hadamard16,
            stride,
            exchange: exchange_for(stride),
        });
        stride *= 16;
    }
    if size.residual_exponent() > 0 {
        stages.push(Stage {
            tile: TileKind::DiagonalTiled {
                exponent: size.residual_exponent(),
            },
            stride,
            exchange: exchange_for(stride),
        });
    }
    ExecutionPlan { size, stages }
}

/// Fallible form for callers holding a raw size.
pub fn plan_for(d: usize) -> Result<ExecutionPlan> {
    Ok(plan(TransformSize::new(d)?))
}

fn exchange_for(stride: usize) -> Exchange {
    match stride {
        1 => Exchange::None,
        256 => Exchange::TransposeAcross256,
        // 16 inside each 256 chunk; 4096 inside each column after the
        // cross-chunk transpose
        _ => Exchange::TransposeWithin256,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(d: usize) -> Vec<(TileKind, Exchange)> {
        plan_for(d)
            .unwrap()
            .stages
            .iter()
            .map(|s| (s.tile, s.exchange))
            .collect()
    }

    #[test]
    fn documented_plans() {
        assert_eq!(
            kinds(256),
            vec![
                (TileKind::Hadamard16, Exchange::None),
                (TileKind::Hadamard16, Exchange::TransposeWithin256)
            ]
        );
        assert_eq!(kinds(16), vec![(TileKind::Hadamard16, Exchange::None)]);
        assert_eq!(
            kinds(512),
            vec![
                (TileKind::Hadamard16, Exchange::None),
                (TileKind::Hadamard16, Exchange::TransposeWithin256),
                (
                    TileKind::DiagonalTiled { exponent: 1 },
                    Exchange::TransposeAcross256
                ),
            ]
        );
        assert_eq!(
            kinds(4),
            vec![(TileKind::DiagonalTiled { exponent: 2 }, Exchange::None)]
        );
    }

    #[test]
    fn structural_invariants() {
        for size in TransformSize::all() {
            let p = plan(size);
            assert_eq!(p.stage_count() as u32, size.iterations());
            let diag: Vec<usize> = p
                .stages
                .iter()
                .enumerate()
                .filter(|(_, s)| matches!(s.tile, TileKind::DiagonalTiled { .. }))
                .map(|(i, _)| i)
                .collect();
            if size.residual_exponent() > 0 {
                assert_eq!(diag, vec![p.stage_count() - 1]);
            } else {
                assert!(diag.is_empty());
            }
            let across = p
                .exchanges()
                .filter(|e| *e == Exchange::TransposeAcross256)
                .count();
            assert_eq!(across, usize::from(size.d() > 256), "d={}", size.d());
            let covered: usize = p.stages.iter().map(|s| s.group_len()).product();
            assert_eq!(covered, size.d());
        }
        assert_eq!(plan_for(4096).unwrap().stage_count(), 3);
        assert_eq!(plan_for(8192).unwrap().stage_count(), 4);
        assert_eq!(plan_for(32768).unwrap().stage_count(), 4);
    }
}
