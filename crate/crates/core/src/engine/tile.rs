use num_traits::{Float, Zero};

use crate::error::{Error, Result};

use super::arith::Arith;

pub const TILE: usize = 16;
pub const TILE_ELEMS: usize = TILE * TILE;

/// A 16x16 block of values, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tile16 {
    pub values: [[f64; TILE]; TILE],
}

impl Default for Tile16 {
    fn default() -> Self {
        Tile16::zeros()
    }
}

impl Tile16 {
    pub fn zeros() -> Self {
        Tile16 {
            values: [[0.0; TILE]; TILE],
        }
    }

    pub fn identity() -> Self {
        let mut t = Tile16::zeros();
        for i in 0..TILE {
            t.values[i][i] = 1.0;
        }
        t
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut t = Tile16::zeros();
        for (i, row) in t.values.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(i, j);
            }
        }
        t
    }

    /// Unnormalized H16 from the doubling construction.
    pub fn hadamard16() -> Self {
        Tile16::from_fn(|i, j| sylvester_entry(TILE, i, j))
    }

    pub fn transpose(&self) -> Self {
        Tile16::from_fn(|i, j| self.values[j][i])
    }
}

/// Entry of the unnormalized order-`n` Sylvester matrix, following
/// H(2k) = [[H(k), H(k)], [H(k), -H(k)]].
fn sylvester_entry(n: usize, i: usize, j: usize) -> f64 {
    if n == 1 {
        return 1.0;
    }
    let k = n / 2;
    let inner = sylvester_entry(k, i % k, j % k);
    if i >= k && j >= k {
        -inner
    } else {
        inner
    }
}

/// `chunk * coeff`: each of the chunk's 16 rows is one group of 16
/// transform elements.
pub fn microkernel_16x16(chunk: &Tile16, coeff: &Tile16) -> Tile16 {
    let mut out = Tile16::zeros();
    for i in 0..TILE {
        for k in 0..TILE {
            let x = chunk.values[i][k];
            for j in 0..TILE {
                out.values[i][j] += x * coeff.values[k][j];
            }
        }
    }
    out
}

/// Block-diagonal tile with `16 / 2^exponent` copies of H_{2^exponent}.
pub fn build_last_tile(exponent: u32) -> Result<Tile16> {
    if !(1..=3).contains(&exponent) {
        return Err(Error::BadExponent(exponent));
    }
    let g = 1usize << exponent;
    Ok(Tile16::from_fn(|i, j| {
        if i / g == j / g {
            sylvester_entry(g, i % g, j % g)
        } else {
            0.0
        }
    }))
}

/// Coefficients in working precision plus the width of their diagonal blocks.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CoeffTile<E> {
    values: [[E; TILE]; TILE],
    block: usize,
}

impl<E: Float> CoeffTile<E> {
    pub(crate) fn new(tile: &Tile16, block: usize) -> Self {
        let mut values = [[E::zero(); TILE]; TILE];
        for (dst, src) in values.iter_mut().zip(&tile.values) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = E::from(s).expect("tile coefficients are small integers");
            }
        }
        CoeffTile { values, block }
    }
}

/// Multiplies every 16-lane row of `lanes` by `coeff` in place and returns
/// the number of 256-lane tiles touched.
///
/// A trailing row shorter than 16 lanes (only for d < 16) is treated as a
/// zero-padded row whose padding is discarded. Output lane `j` only sums
/// over lanes inside its own coefficient block, so structurally zero
/// coefficients never contribute and the result does not depend on which
/// groups share a row.
#[inline]
pub(crate) fn apply_lane_rows<A: Arith>(
    arith: &A,
    lanes: &mut [A::Elem],
    coeff: &CoeffTile<A::Elem>,
) -> u64 {
    let zero = A::Elem::zero();
    let g = coeff.block;
    let mut out = [zero; TILE];
    for row in lanes.chunks_mut(TILE) {
        let n = row.len();
        out[..n].fill(zero);
        if g == TILE && n == TILE {
            for (k, &x) in row.iter().enumerate() {
                let c = &coeff.values[k];
                for j in 0..TILE {
                    out[j] = arith.accumulate(out[j], x * c[j]);
                }
            }
        } else {
            for (k, &x) in row.iter().enumerate() {
                let c = &coeff.values[k];
                let start = k / g * g;
                for j in start..(start + g).min(n) {
                    out[j] = arith.accumulate(out[j], x * c[j]);
                }
            }
        }
        row.copy_from_slice(&out[..n]);
    }
    lanes.len().div_ceil(TILE_ELEMS) as u64
}
