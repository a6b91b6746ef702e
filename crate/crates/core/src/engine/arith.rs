//! Working-precision policies for the tile passes.

use num_traits::Float;

use crate::dtype::ElementType;
use crate::precision::{format_of, round_raw, Format};

pub(crate) trait Arith: Sync {
    type Elem: Float + Send + Sync + std::fmt::Debug;

    /// Whether stage outputs must be scanned for overflow.
    const NARROW: bool = false;

    fn dtype(&self) -> ElementType;

    fn load(&self, v: f64) -> Self::Elem;

    #[inline(always)]
    fn accumulate(&self, acc: Self::Elem, term: Self::Elem) -> Self::Elem {
        acc + term
    }

    /// Rounding applied when a stage writes its outputs back.
    #[inline(always)]
    fn store(&self, v: Self::Elem) -> Self::Elem {
        v
    }

    /// Final conversion to the storage format. May yield ±inf on overflow.
    fn unload(&self, v: Self::Elem) -> f64;
}

pub(crate) struct Native64;

impl Arith for Native64 {
    type Elem = f64;

    fn dtype(&self) -> ElementType {
        ElementType::F64
    }

    #[inline(always)]
    fn load(&self, v: f64) -> f64 {
        v
    }

    #[inline(always)]
    fn unload(&self, v: f64) -> f64 {
        v
    }
}

pub(crate) struct Native32;

impl Arith for Native32 {
    type Elem = f32;

    fn dtype(&self) -> ElementType {
        ElementType::F32
    }

    #[inline(always)]
    fn load(&self, v: f64) -> f32 {
        v as f32
    }

    #[inline(always)]
    fn unload(&self, v: f32) -> f64 {
        f64::from(v)
    }
}

/// Every partial sum rounded to the storage format. Sums of two narrow
/// values are exact in f64, so each accumulate step is a single correctly
/// rounded narrow addition.
pub(crate) struct NarrowAccum {
    dtype: ElementType,
    fmt: Format,
}

impl NarrowAccum {
    pub(crate) fn new(dtype: ElementType) -> Self {
        NarrowAccum {
            dtype,
            fmt: format_of(dtype).expect("narrow dtype"),
        }
    }
}

impl Arith for NarrowAccum {
    type Elem = f64;
    const NARROW: bool = true;

    fn dtype(&self) -> ElementType {
        self.dtype
    }

    #[inline(always)]
    fn load(&self, v: f64) -> f64 {
        v
    }

    #[inline(always)]
    fn accumulate(&self, acc: f64, term: f64) -> f64 {
        round_raw(acc + term, self.fmt)
    }

    #[inline(always)]
    fn unload(&self, v: f64) -> f64 {
        round_raw(v, self.fmt)
    }
}

/// F32 accumulation, converted to the storage format after each stage.
pub(crate) struct WideThenConvert {
    dtype: ElementType,
    fmt: Format,
}

impl WideThenConvert {
    pub(crate) fn new(dtype: ElementType) -> Self {
        WideThenConvert {
            dtype,
            fmt: format_of(dtype).expect("narrow dtype"),
        }
    }
}

impl Arith for WideThenConvert {
    type Elem = f32;
    const NARROW: bool = true;

    fn dtype(&self) -> ElementType {
        self.dtype
    }

    #[inline(always)]
    fn load(&self, v: f64) -> f32 {
        v as f32
    }

    #[inline(always)]
    fn store(&self, v: f32) -> f32 {
        round_raw(f64::from(v), self.fmt) as f32
    }

    #[inline(always)]
    fn unload(&self, v: f32) -> f64 {
        round_raw(f64::from(v), self.fmt)
    }
}
