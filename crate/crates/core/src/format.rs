//! The HDT1 tensor file format.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "HDT1"
//! 4       1     dtype code (0=f64 1=f32 2=f16 3=bf16 4=fp8e4m3)
//! 5       4     rows, u32 little-endian
//! 9       4     cols, u32 little-endian
//! 13      ...   row-major payload, little-endian, dtype-width elements
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dtype::ElementType;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::precision::{
    bf16_from_bits, bf16_to_bits, f16_from_bits, f16_to_bits, f32_from_bits, f32_to_bits,
    fp8_e4m3_from_bits, fp8_e4m3_to_bits,
};

pub const MAGIC: [u8; 4] = *b"HDT1";
pub const HEADER_LEN: usize = 13;

/// Serializes `m`, returning the number of bytes written.
pub fn write_matrix<W: Write>(m: &Matrix, sink: &mut W) -> Result<usize> {
    let rows = u32::try_from(m.rows()).map_err(|_| bad_dims(m))?;
    let cols = u32::try_from(m.cols()).map_err(|_| bad_dims(m))?;
    let mut header = [0u8; HEADER_LEN];
    header[..4].copy_from_slice(&MAGIC);
    header[4] = m.dtype().code();
    header[5..9].copy_from_slice(&rows.to_le_bytes());
    header[9..13].copy_from_slice(&cols.to_le_bytes());
    sink.write_all(&header)?;

    let width = m.dtype().byte_width();
    let mut payload = Vec::with_capacity(m.len() * width);
    for &v in m.data() {
        match m.dtype() {
            ElementType::F64 => payload.extend_from_slice(&v.to_bits().to_le_bytes()),
            ElementType::F32 => payload.extend_from_slice(&f32_to_bits(v).to_le_bytes()),
            ElementType::F16 => payload.extend_from_slice(&f16_to_bits(v).to_le_bytes()),
            ElementType::BF16 => payload.extend_from_slice(&bf16_to_bits(v).to_le_bytes()),
            ElementType::Fp8E4M3 => payload.push(fp8_e4m3_to_bits(v)),
        }
    }
    sink.write_all(&payload)?;
    Ok(HEADER_LEN + payload.len())
}

fn bad_dims(m: &Matrix) -> Error {
    Error::BadShape {
        rows: m.rows(),
        cols: m.cols(),
        len: m.len(),
    }
}

/// Reads exactly one matrix; bytes after its payload are left unread.
pub fn read_matrix<R: Read>(source: &mut R) -> Result<Matrix> {
    let mut header = Vec::with_capacity(HEADER_LEN);
    source.take(HEADER_LEN as u64).read_to_end(&mut header)?;
    if header.len() >= 4 && header[..4] != MAGIC {
        return Err(Error::BadMagic(header[..4].try_into().expect("4 bytes")));
    }
    if header.len() < HEADER_LEN {
        return Err(Error::TruncatedPayload {
            expected: HEADER_LEN,
            found: header.len(),
        });
    }
    let dtype = ElementType::from_code(header[4]).ok_or(Error::BadDtypeCode(header[4]))?;
    let rows = u32::from_le_bytes(header[5..9].try_into().expect("4 bytes")) as usize;
    let cols = u32::from_le_bytes(header[9..13].try_into().expect("4 bytes")) as usize;
    let count = rows
        .checked_mul(cols)
        .filter(|_| cols > 0)
        .ok_or(Error::BadShape { rows, cols, len: 0 })?;
    let expected = count * dtype.byte_width();

    let mut payload = Vec::with_capacity(expected);
    source.take(expected as u64).read_to_end(&mut payload)?;
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }

    let data: Vec<f64> = match dtype {
        ElementType::F64 => payload
            .chunks_exact(8)
            .map(|b| f64::from_bits(u64::from_le_bytes(b.try_into().expect("8 bytes"))))
            .collect(),
        ElementType::F32 => payload
            .chunks_exact(4)
            .map(|b| f32_from_bits(u32::from_le_bytes(b.try_into().expect("4 bytes"))))
            .collect(),
        ElementType::F16 => payload
            .chunks_exact(2)
            .map(|b| f16_from_bits(u16::from_le_bytes([b[0], b[1]])))
            .collect(),
        ElementType::BF16 => payload
            .chunks_exact(2)
            .map(|b| bf16_from_bits(u16::from_le_bytes([b[0], b[1]])))
            .collect(),
        ElementType::Fp8E4M3 => payload.iter().map(|&b| fp8_e4m3_from_bits(b)).collect(),
    };
    Ok(Matrix::from_parts_unchecked(rows, cols, dtype, data))
}

pub fn write_file(m: &Matrix, path: impl AsRef<Path>) -> Result<usize> {
    let mut w = BufWriter::new(File::create(path)?);
    let n = write_matrix(m, &mut w)?;
    w.flush()?;
    Ok(n)
}

pub fn read_file(path: impl AsRef<Path>) -> Result<Matrix> {
    read_matrix(&mut BufReader::new(File::open(path)?))
}
