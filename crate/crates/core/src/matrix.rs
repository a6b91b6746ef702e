use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dtype::ElementType;
use crate::error::{Error, Result};
use crate::precision::{is_representable, round_to};

/// Dense row-major matrix whose values lie on the grid of `dtype`.
///
/// Element `(i, j)` lives at index `i * cols + j`. Rows are the batch
/// dimension; transforms act along columns. A matrix may have zero rows but
/// never zero columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    dtype: ElementType,
    data: Vec<f64>,
}

impl Matrix {
    /// Wraps `data`, rejecting values that are not exactly representable.
    pub fn new(rows: usize, cols: usize, dtype: ElementType, data: Vec<f64>) -> Result<Self> {
        check_shape(rows, cols, data.len())?;
        if let Some(&value) = data.iter().find(|&&v| !is_representable(v, dtype)) {
            return Err(Error::NotRepresentable { value, dtype });
        }
        Ok(Matrix {
            rows,
            cols,
            dtype,
            data,
        })
    }

    /// Rounds every value to `dtype` (ties to even).
    pub fn from_rounded(
        rows: usize,
        cols: usize,
        dtype: ElementType,
        mut data: Vec<f64>,
    ) -> Result<Self> {
        check_shape(rows, cols, data.len())?;
        for v in &mut data {
            *v = round_to(*v, dtype)?;
        }
        Ok(Matrix {
            rows,
            cols,
            dtype,
            data,
        })
    }

    /// Caller guarantees shape and representability.
    pub(crate) fn from_parts_unchecked(
        rows: usize,
        cols: usize,
        dtype: ElementType,
        data: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        Matrix {
            rows,
            cols,
            dtype,
            data,
        }
    }

    pub fn zeros(rows: usize, cols: usize, dtype: ElementType) -> Self {
        assert!(cols > 0, "matrix needs at least one column");
        Matrix {
            rows,
            cols,
            dtype,
            data: vec![0.0; rows * cols],
        }
    }

    /// Standard-normal entries from a seeded ChaCha8 stream, rounded to `dtype`.
    pub fn random_normal(rows: usize, cols: usize, dtype: ElementType, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        Matrix::from_rounded(rows, cols, dtype, data).expect("normal samples fit every dtype")
    }

    /// Every row is `value` times the `index`-th unit vector.
    pub fn one_hot(
        rows: usize,
        cols: usize,
        dtype: ElementType,
        index: usize,
        value: f64,
    ) -> Result<Self> {
        let mut m = Matrix::zeros(rows, cols, dtype);
        let v = round_to(value, dtype)?;
        for r in 0..rows {
            m.data[r * cols + index] = v;
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dtype(&self) -> ElementType {
        self.dtype
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable view for code that keeps values on the dtype grid.
    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.cols)
    }

    /// Re-rounds into another element type.
    pub fn cast(&self, dtype: ElementType) -> Result<Matrix> {
        Matrix::from_rounded(self.rows, self.cols, dtype, self.data.clone())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Same shape, dtype and identical f64 bit patterns (NaN-aware equality).
    pub fn bitwise_eq(&self, other: &Matrix) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.dtype == other.dtype
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

fn check_shape(rows: usize, cols: usize, len: usize) -> Result<()> {
    if cols == 0 || rows.checked_mul(cols) != Some(len) {
        return Err(Error::BadShape { rows, cols, len });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_layout() {
        let m = Matrix::new(2, 3, ElementType::F64, vec![0., 1., 2., 3., 4., 5.]).unwrap();
        assert_eq!(m.get(1, 2), 5.0);
        assert_eq!(m.row(1), &[3.0, 4.0, 5.0]);
        assert_eq!(m.iter_rows().count(), 2);
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(matches!(
            Matrix::new(2, 2, ElementType::F64, vec![0.0; 3]),
            Err(Error::BadShape { .. })
        ));
        assert!(matches!(
            Matrix::new(0, 0, ElementType::F64, vec![]),
            Err(Error::BadShape { .. })
        ));
        assert!(matches!(
            Matrix::new(1, 1, ElementType::F16, vec![0.1]),
            Err(Error::NotRepresentable { .. })
        ));
        assert!(Matrix::new(0, 4, ElementType::F32, vec![])
            .unwrap()
            .is_empty());
    }

    #[test]
    fn random_is_seeded() {
        let a = Matrix::random_normal(3, 8, ElementType::BF16, 9);
        let b = Matrix::random_normal(3, 8, ElementType::BF16, 9);
        assert!(a.bitwise_eq(&b));
        assert!(a
            .data()
            .iter()
            .all(|&v| is_representable(v, ElementType::BF16)));
    }
}
