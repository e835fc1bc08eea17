//! Binary tensor dump.
//!
//! Layout, all little-endian:
//!
//! | bytes | field |
//! |-------|-------|
//! | 4  | magic `I6DT` |
//! | 4  | format version (u32, currently 1) |
//! | 16 | dims `nx, nz, N, M` (u32 each) |
//! | 1  | stage (0 raw, 1 eec, 2 dt_eec) |
//! | 3  | zero padding |
//! | 8  | seed (u64) |
//!
//! followed by `nx*nz*N*M` complex values as interleaved `f32` re/im pairs in
//! row-major `(n_x, n_z, n, m)` order.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array4;
use num_complex::Complex64;

use super::{EchoTensor, Stage};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"I6DT";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 36;

pub fn write_tensor_to<W: Write>(t: &EchoTensor, mut w: W) -> Result<()> {
    let (a, b, c, d) = t.dims();
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    for dim in [a, b, c, d] {
        let dim = u32::try_from(dim).map_err(|_| Error::InvalidParameter("tensor dimension exceeds u32".into()))?;
        header.extend_from_slice(&dim.to_le_bytes());
    }
    header.push(t.stage.code());
    header.extend_from_slice(&[0u8; 3]);
    header.extend_from_slice(&t.seed.to_le_bytes());
    w.write_all(&header)?;

    let mut body = Vec::with_capacity(t.data.len() * 8);
    for v in t.data.iter() {
        body.extend_from_slice(&(v.re as f32).to_le_bytes());
        body.extend_from_slice(&(v.im as f32).to_le_bytes());
    }
    w.write_all(&body)?;
    w.flush()?;
    Ok(())
}

pub fn read_tensor_from<R: Read>(mut r: R) -> Result<EchoTensor> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[0..4] != MAGIC {
        return Err(Error::InvalidParameter("not a tensor dump (bad magic)".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::InvalidParameter(format!("unsupported tensor dump version {version}")));
    }
    let dims = [u32_at(8), u32_at(12), u32_at(16), u32_at(20)].map(|d| d as usize);
    let stage = Stage::from_code(header[24])
        .ok_or_else(|| Error::InvalidParameter(format!("unknown stage code {}", header[24])))?;
    let seed = u64::from_le_bytes(header[28..36].try_into().unwrap());

    let count: usize = dims.iter().product();
    let mut body = vec![0u8; count * 8];
    r.read_exact(&mut body)?;
    let values: Vec<Complex64> = body
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[0..4].try_into().unwrap());
            let im = f32::from_le_bytes(c[4..8].try_into().unwrap());
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    let data = Array4::from_shape_vec((dims[0], dims[1], dims[2], dims[3]), values)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(EchoTensor { data, stage, seed })
}

pub fn write_tensor(t: &EchoTensor, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_tensor_to(t, std::io::BufWriter::new(f))
}

pub fn read_tensor(path: &Path) -> Result<EchoTensor> {
    let f = std::fs::File::open(path)?;
    read_tensor_from(std::io::BufReader::new(f))
}
