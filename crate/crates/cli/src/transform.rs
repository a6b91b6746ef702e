use std::path::PathBuf;

use blockwht::format::{read_file, write_file};
use blockwht::{ElementType, Engine, TransformOptions, TransformSize};

use crate::config_err;

#[derive(Debug, Clone)]
pub struct TransformArgs {
    pub input: PathBuf,
    /// Defaults to `input` when `in_place` is set.
    pub output: Option<PathBuf>,
    pub size: usize,
    /// Cast the input to this type before transforming.
    pub dtype: Option<ElementType>,
    pub in_place: bool,
    pub scale: Option<f64>,
}

/// Reads an HDT1 file, transforms every row and writes the result. Returns
/// the number of bytes written.
pub fn cmd_transform(args: &TransformArgs) -> anyhow::Result<usize> {
    let output = match (&args.output, args.in_place) {
        (Some(p), _) => p.clone(),
        (None, true) => args.input.clone(),
        (None, false) => return config_err("--output is required without --in-place"),
    };
    let size = TransformSize::new(args.size)?;
    let mut x = read_file(&args.input)?;
    if let Some(t) = args.dtype {
        if t != x.dtype() {
            x = x.cast(t)?;
        }
    }
    let opts = TransformOptions {
        in_place: args.in_place,
        scale: args.scale,
    };
    let y = Engine::default().transform(x, size, &opts)?;
    Ok(write_file(&y, output)?)
}
