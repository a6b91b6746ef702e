use crate::error::{Error, Result};

pub const MIN_SIZE: usize = 2;
pub const MAX_SIZE: usize = 1 << 15;

/// A power-of-two transform size `d = 2^a * 16^b` with `0 <= a <= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TransformSize {
    d: usize,
    residual: u32,
    full_stages: u32,
}

impl TransformSize {
    pub fn new(d: usize) -> Result<Self> {
        parse_transform_size(d as u64)
    }

    pub fn d(self) -> usize {
        self.d
    }

    /// Exponent `a` of the residual power of two.
    pub fn residual_exponent(self) -> u32 {
        self.residual
    }

    /// Number `b` of full 16-point stages.
    pub fn full_stages(self) -> u32 {
        self.full_stages
    }

    /// `ceil(log16 d)`: the number of 16x16 tile passes.
    pub fn iterations(self) -> u32 {
        self.full_stages + u32::from(self.residual > 0)
    }

    pub fn log2(self) -> u32 {
        self.d.trailing_zeros()
    }

    /// Iterator over every supported size, smallest first.
    pub fn all() -> impl Iterator<Item = TransformSize> {
        (1..=15).map(|k| TransformSize::new(1 << k).expect("supported size"))
    }
}

/// Factorizes `d` as `2^a * 16^b`.
pub fn parse_transform_size(d: u64) -> Result<TransformSize> {
    if d.count_ones() > 1 {
        return Err(Error::NotPowerOfTwo(d));
    }
    if d < MIN_SIZE as u64 || d > MAX_SIZE as u64 {
        return Err(Error::OutOfRange(d));
    }
    let log2 = d.trailing_zeros();
    Ok(TransformSize {
        d: d as usize,
        residual: log2 % 4,
        full_stages: log2 / 4,
    })
}

/// Options shared by every transform entry point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformOptions {
    /// Overwrite the input buffer instead of allocating an output.
    pub in_place: bool,
    /// Multiplier applied once after the last stage. `None` means `1/sqrt(d)`.
    pub scale: Option<f64>,
}

impl Default for TransformOptions {
    fn default() -> Self {
        TransformOptions {
            in_place: true,
            scale: None,
        }
    }
}

impl TransformOptions {
    pub fn normalized() -> Self {
        Self::default()
    }

    pub fn out_of_place() -> Self {
        TransformOptions {
            in_place: false,
            ..Self::default()
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = Some(scale);
        self
    }

    pub fn with_in_place(mut self, in_place: bool) -> Self {
        self.in_place = in_place;
        self
    }

    /// Resolves the effective scale for `size`, rejecting non-positive values.
    pub fn scale_for(&self, size: TransformSize) -> Result<f64> {
        match self.scale {
            None => Ok(1.0 / (size.d() as f64).sqrt()),
            Some(s) if s.is_finite() && s > 0.0 => Ok(s),
            Some(s) => Err(Error::BadScale(s)),
        }
    }
}
