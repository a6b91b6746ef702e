use crate::dtype::ElementType;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("transform size {0} is not a power of two")]
    NotPowerOfTwo(u64),
    #[error("transform size {0} is outside the supported range [2, 32768]")]
    OutOfRange(u64),
    #[error("dimension mismatch: expected {expected} columns, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix shape {rows}x{cols} does not match buffer length {len}")]
    BadShape {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("value {value} is not representable as {dtype}")]
    NotRepresentable { value: f64, dtype: ElementType },
    #[error("transform does not support element type {0}")]
    UnsupportedDtype(ElementType),
    #[error("scale must be finite and positive, got {0}")]
    BadScale(f64),
    #[error("residual exponent must be in 1..=3, got {0}")]
    BadExponent(u32),
    #[error("{value} overflows to infinity in {dtype}")]
    OverflowToInfinity { value: f64, dtype: ElementType },
    #[error("accumulation mode {mode:?} is not valid for {dtype}")]
    InvalidAccumMode {
        mode: crate::precision::AccumMode,
        dtype: ElementType,
    },
    #[error(
        "schedule constraint violated: 256 * {warps_per_block} * {num_chunks} = {product} != {d}"
    )]
    ConstraintViolation {
        d: usize,
        warps_per_block: usize,
        num_chunks: usize,
        product: usize,
    },
    #[error("warp order must be a permutation of 0..{0}")]
    BadWarpOrder(usize),
    #[error("invalid outlier spec: {0}")]
    BadSpec(String),
    #[error("bad magic bytes {0:?}, expected \"HDT1\"")]
    BadMagic([u8; 4]),
    #[error("unknown dtype code {0}")]
    BadDtypeCode(u8),
    #[error("truncated payload: expected {expected} bytes, got {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
