use std::fmt;
use std::str::FromStr;

/// Storage and arithmetic precision of a [`Matrix`](crate::Matrix).
///
/// `F16`, `BF16` and `Fp8E4M3` are emulated in software; values are held as
/// `f64` but always lie on the grid of the narrow format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementType {
    F64,
    F32,
    F16,
    BF16,
    Fp8E4M3,
}

impl ElementType {
    pub const ALL: [ElementType; 5] = [
        ElementType::F64,
        ElementType::F32,
        ElementType::F16,
        ElementType::BF16,
        ElementType::Fp8E4M3,
    ];

    /// Code used in the HDT1 header.
    pub fn code(self) -> u8 {
        match self {
            ElementType::F64 => 0,
            ElementType::F32 => 1,
            ElementType::F16 => 2,
            ElementType::BF16 => 3,
            ElementType::Fp8E4M3 => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.code() == code)
    }

    /// Bytes per element in the HDT1 payload.
    pub fn byte_width(self) -> usize {
        match self {
            ElementType::F64 => 8,
            ElementType::F32 => 4,
            ElementType::F16 | ElementType::BF16 => 2,
            ElementType::Fp8E4M3 => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementType::F64 => "f64",
            ElementType::F32 => "f32",
            ElementType::F16 => "f16",
            ElementType::BF16 => "bf16",
            ElementType::Fp8E4M3 => "fp8e4m3",
        }
    }

    /// Explicit mantissa bits (excluding the implicit leading one).
    pub fn mantissa_bits(self) -> u32 {
        match self {
            ElementType::F64 => 52,
            ElementType::F32 => 23,
            ElementType::F16 => 10,
            ElementType::BF16 => 7,
            ElementType::Fp8E4M3 => 3,
        }
    }
}

impl fmt::Display for ElementType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ElementType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "f64" | "fp64" => Ok(ElementType::F64),
            "f32" | "fp32" => Ok(ElementType::F32),
            "f16" | "fp16" => Ok(ElementType::F16),
            "bf16" => Ok(ElementType::BF16),
            "fp8" | "fp8e4m3" | "e4m3" => Ok(ElementType::Fp8E4M3),
            other => Err(format!("unknown element type '{other}'")),
        }
    }
}
