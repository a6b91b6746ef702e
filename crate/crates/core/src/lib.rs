//! Walsh-Hadamard transforms built from 16x16 matrix-multiply tiles.
//!
//! The blocked [`engine`] applies a size-`d` transform as `ceil(log16 d)`
//! passes of a 16x16 microkernel with transpose exchanges between passes.
//! Around it sit a dense and a butterfly [`oracle`], bit-exact narrow-float
//! emulation in [`precision`], a GPU work-decomposition model in
//! [`schedule`], and a rotation-vs-quantization experiment in [`quant`].

pub mod dtype;
pub mod engine;
pub mod error;
pub mod format;
pub mod matrix;
pub mod oracle;
pub mod par;
pub mod precision;
pub mod quant;
pub mod schedule;
pub mod size;

pub use dtype::ElementType;
pub use engine::{hadamard_transform, hadamard_transform_counted, Engine, OpCounts};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use par::Exec;
pub use precision::{round_to, transform_emulated, AccumMode};
pub use size::{parse_transform_size, TransformOptions, TransformSize};
