//! Minimal raw-grid file format: magic `ZRAW`, version u8, dtype u8
//! (0 = f32, 1 = f64), ndims u8, dims 3 x u64, then row-major
//! little-endian samples.

use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"ZRAW";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn as_u8(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

#[derive(Debug, Error)]
pub enum RawError {
    #[error("bad magic bytes (not a ZRAW file)")]
    BadMagic,
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("truncated file: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
}

/// An in-memory grid of up to three dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct RawGrid {
    pub dtype: Dtype,
    pub ndims: u8,
    pub dims: [usize; 3],
    pub data: Vec<f64>,
}

impl RawGrid {
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(31 + self.data.len() * self.dtype.size());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.dtype.as_u8());
        out.push(self.ndims);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &x in &self.data {
            match self.dtype {
                Dtype::F32 => out.extend_from_slice(&(x as f32).to_le_bytes()),
                Dtype::F64 => out.extend_from_slice(&x.to_le_bytes()),
            }
        }
        out
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self, RawError> {
        let header = 4 + 1 + 1 + 1 + 24;
        if bytes.len() < header {
            return Err(RawError::Truncated { expected: header, got: bytes.len() });
        }
        if bytes[0..4] != MAGIC {
            return Err(RawError::BadMagic);
        }
        if bytes[4] != VERSION {
            return Err(RawError::BadVersion(bytes[4]));
        }
        let dtype = match bytes[5] {
            0 => Dtype::F32,
            1 => Dtype::F64,
            v => return Err(RawError::Header(format!("unknown dtype {v}"))),
        };
        let ndims = bytes[6];
        if !(1..=3).contains(&ndims) {
            return Err(RawError::Header(format!("ndims must be 1..=3, got {ndims}")));
        }
        let mut dims = [1usize; 3];
        for (a, dim) in dims.iter_mut().enumerate() {
            let off = 7 + 8 * a;
            let v = u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            if v == 0 || v > u32::MAX as u64 {
                return Err(RawError::Header(format!("bad dimension {v}")));
            }
            if a >= ndims as usize && v != 1 {
                return Err(RawError::Header(format!("trailing dimension {v} beyond ndims")));
            }
            *dim = v as usize;
        }
        let n: usize = dims.iter().product();
        let expected = header + n * dtype.size();
        if bytes.len() != expected {
            return Err(RawError::Truncated { expected, got: bytes.len() });
        }
        let mut data = Vec::with_capacity(n);
        for i in 0..n {
            let off = header + i * dtype.size();
            let x = match dtype {
                Dtype::F32 => {
                    f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as f64
                }
                Dtype::F64 => f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()),
            };
            if !x.is_finite() {
                return Err(RawError::NonFinite(i));
            }
            data.push(x);
        }
        Ok(RawGrid { dtype, ndims, dims, data })
    }
}
