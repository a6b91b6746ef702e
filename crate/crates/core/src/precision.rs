//! Software emulation of the narrow floating-point formats.
//!
//! Every format is described by its exponent/mantissa split. Rounding is
//! round-to-nearest, ties-to-even, with subnormals. FP8 E4M3 saturates to
//! its largest finite magnitude (448); F16, BF16 and F32 overflow to
//! infinity, which [`round_to`] reports as an error.

use crate::dtype::ElementType;
use crate::engine::{self, arith};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::size::{TransformOptions, TransformSize};

/// How a 16x16 tile accumulates its dot products.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccumMode {
    /// Every partial sum is rounded to the storage format (FP16 tensor-core path).
    NativeNarrow,
    /// Accumulate in F32, convert once per stage (BF16 tensor-core path).
    WideThenConvert,
}

impl AccumMode {
    /// The mode the blocked engine uses for a storage type.
    pub fn default_for(dtype: ElementType) -> Option<AccumMode> {
        match dtype {
            ElementType::F16 => Some(AccumMode::NativeNarrow),
            ElementType::BF16 => Some(AccumMode::WideThenConvert),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Overflow {
    Infinity,
    Saturate,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Format {
    exp_bits: u32,
    man_bits: u32,
    /// Exponent of the smallest normal number.
    min_exp: i32,
    max_finite: f64,
    overflow: Overflow,
}

const F16: Format = Format {
    exp_bits: 5,
    man_bits: 10,
    min_exp: -14,
    max_finite: 65504.0,
    overflow: Overflow::Infinity,
};

const BF16: Format = Format {
    exp_bits: 8,
    man_bits: 7,
    min_exp: -126,
    // (2 - 2^-7) * 2^127
    max_finite: 3.3895313892515355e38,
    overflow: Overflow::Infinity,
};

const F32: Format = Format {
    exp_bits: 8,
    man_bits: 23,
    min_exp: -126,
    max_finite: f32::MAX as f64,
    overflow: Overflow::Infinity,
};

const FP8_E4M3: Format = Format {
    exp_bits: 4,
    man_bits: 3,
    min_exp: -6,
    max_finite: 448.0,
    overflow: Overflow::Saturate,
};

pub(crate) fn format_of(t: ElementType) -> Option<Format> {
    match t {
        ElementType::F64 => None,
        ElementType::F32 => Some(F32),
        ElementType::F16 => Some(F16),
        ElementType::BF16 => Some(BF16),
        ElementType::Fp8E4M3 => Some(FP8_E4M3),
    }
}

/// `2^e` for exponents inside the f64 normal range.
fn pow2(e: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// Floor of log2|x| for finite non-zero `x`.
fn exponent_of(x: f64) -> i32 {
    let biased = ((x.to_bits() >> 52) & 0x7ff) as i32;
    if biased == 0 {
        // f64 subnormal: far below every emulated format's range
        -1023
    } else {
        biased - 1023
    }
}

/// Rounds onto the format grid. Overflowing `Infinity` formats return ±inf.
#[inline]
pub(crate) fn round_raw(x: f64, fmt: Format) -> f64 {
    if x == 0.0 || x.is_nan() {
        return x;
    }
    if x.is_infinite() {
        return match fmt.overflow {
            Overflow::Infinity => x,
            Overflow::Saturate => fmt.max_finite.copysign(x),
        };
    }
    let e = exponent_of(x).max(fmt.min_exp);
    let quantum = pow2(e - fmt.man_bits as i32);
    let r = (x / quantum).round_ties_even() * quantum;
    if r.abs() > fmt.max_finite {
        match fmt.overflow {
            Overflow::Infinity => f64::INFINITY.copysign(x),
            Overflow::Saturate => fmt.max_finite.copysign(x),
        }
    } else {
        r
    }
}

/// Nearest value of `t` to `x`, ties to even.
///
/// `F64` is the identity. Finite values beyond the largest finite F16, BF16
/// or F32 magnitude fail with [`Error::OverflowToInfinity`]; FP8 E4M3
/// saturates to ±448. NaN passes through.
pub fn round_to(x: f64, t: ElementType) -> Result<f64> {
    let Some(fmt) = format_of(t) else {
        return Ok(x);
    };
    let r = round_raw(x, fmt);
    if r.is_infinite() && !x.is_infinite() {
        return Err(Error::OverflowToInfinity { value: x, dtype: t });
    }
    Ok(r)
}

/// True if `x` lies exactly on the grid of `t` (NaN and infinities count as
/// representable where the format has them).
pub fn is_representable(x: f64, t: ElementType) -> bool {
    match format_of(t) {
        None => true,
        Some(_) if x.is_nan() => true,
        Some(fmt) if x.is_infinite() => fmt.overflow == Overflow::Infinity,
        Some(fmt) => round_raw(x, fmt) == x,
    }
}

/// Largest finite magnitude of `t`.
pub fn max_finite(t: ElementType) -> f64 {
    format_of(t).map_or(f64::MAX, |f| f.max_finite)
}

fn encode_bits(v: f64, fmt: Format) -> u32 {
    let bias = (1i32 << (fmt.exp_bits - 1)) - 1;
    let exp_mask = (1u32 << fmt.exp_bits) - 1;
    let man_mask = (1u32 << fmt.man_bits) - 1;
    let sign = u32::from(v.is_sign_negative()) << (fmt.exp_bits + fmt.man_bits);
    if v.is_nan() {
        let payload = match fmt.overflow {
            // E4M3 has a single NaN pattern per sign: S.1111.111
            Overflow::Saturate => man_mask,
            Overflow::Infinity => {
                let p = ((v.to_bits() >> (52 - fmt.man_bits)) as u32) & man_mask;
                if p == 0 {
                    1 << (fmt.man_bits - 1)
                } else {
                    p
                }
            }
        };
        return sign | (exp_mask << fmt.man_bits) | payload;
    }
    let a = v.abs();
    if a.is_infinite() {
        debug_assert_eq!(fmt.overflow, Overflow::Infinity);
        return sign | (exp_mask << fmt.man_bits);
    }
    if a == 0.0 {
        return sign;
    }
    let e = exponent_of(a);
    if e < fmt.min_exp {
        let m = a / pow2(fmt.min_exp - fmt.man_bits as i32);
        return sign | m as u32;
    }
    let m = (a / pow2(e - fmt.man_bits as i32)) as u32 & man_mask;
    sign | (((e + bias) as u32) << fmt.man_bits) | m
}

fn decode_bits(bits: u32, fmt: Format) -> f64 {
    let bias = (1i32 << (fmt.exp_bits - 1)) - 1;
    let exp_mask = (1u32 << fmt.exp_bits) - 1;
    let man_mask = (1u32 << fmt.man_bits) - 1;
    let negative = (bits >> (fmt.exp_bits + fmt.man_bits)) & 1 == 1;
    let exp = (bits >> fmt.man_bits) & exp_mask;
    let man = bits & man_mask;
    let magnitude = match (fmt.overflow, exp == exp_mask) {
        (Overflow::Infinity, true) if man == 0 => f64::INFINITY,
        (Overflow::Infinity, true) => {
            let nan = (0x7ffu64 << 52) | (u64::from(man) << (52 - fmt.man_bits));
            f64::from_bits(nan)
        }
        (Overflow::Saturate, true) if man == man_mask => f64::NAN,
        _ if exp == 0 => f64::from(man) * pow2(fmt.min_exp - fmt.man_bits as i32),
        _ => f64::from((1 << fmt.man_bits) | man) * pow2(exp as i32 - bias - fmt.man_bits as i32),
    };
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

/// IEEE binary16 bit pattern of a value already on the F16 grid.
pub fn f16_to_bits(v: f64) -> u16 {
    encode_bits(v, F16) as u16
}

pub fn f16_from_bits(bits: u16) -> f64 {
    decode_bits(u32::from(bits), F16)
}

/// BF16 bit pattern (the upper half of the binary32 pattern).
pub fn bf16_to_bits(v: f64) -> u16 {
    encode_bits(v, BF16) as u16
}

pub fn bf16_from_bits(bits: u16) -> f64 {
    decode_bits(u32::from(bits), BF16)
}

pub fn fp8_e4m3_to_bits(v: f64) -> u8 {
    encode_bits(v, FP8_E4M3) as u8
}

pub fn fp8_e4m3_from_bits(bits: u8) -> f64 {
    decode_bits(u32::from(bits), FP8_E4M3)
}

/// binary32 pattern; NaN payloads are carried bit-for-bit.
pub fn f32_to_bits(v: f64) -> u32 {
    if v.is_nan() {
        encode_bits(v, F32)
    } else {
        (v as f32).to_bits()
    }
}

pub fn f32_from_bits(bits: u32) -> f64 {
    let f = f32::from_bits(bits);
    if f.is_nan() {
        decode_bits(bits, F32)
    } else {
        f64::from(f)
    }
}

/// Runs the blocked engine with narrow-format storage between stages.
///
/// Each stage's outputs are rounded to `x.dtype()` before the next stage
/// reads them, modeling fragments written back to registers. With
/// [`AccumMode::NativeNarrow`] every partial sum inside a tile is rounded as
/// well. Fails with [`Error::OverflowToInfinity`] if any intermediate value
/// leaves the format's finite range.
pub fn transform_emulated(
    x: Matrix,
    size: TransformSize,
    opts: &TransformOptions,
    mode: AccumMode,
) -> Result<Matrix> {
    let dtype = x.dtype();
    match (dtype, mode) {
        (ElementType::F16, _) | (ElementType::BF16, AccumMode::WideThenConvert) => {}
        (ElementType::BF16, _) => return Err(Error::InvalidAccumMode { mode, dtype }),
        _ => return Err(Error::UnsupportedDtype(dtype)),
    }
    let engine = engine::Engine::default();
    match mode {
        AccumMode::NativeNarrow => engine.run_with(&arith::NarrowAccum::new(dtype), x, size, opts),
        AccumMode::WideThenConvert => {
            engine.run_with(&arith::WideThenConvert::new(dtype), x, size, opts)
        }
    }
    .map(|(m, _)| m)
}
