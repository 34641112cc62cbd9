//! On-disk container for compressed grids.
//!
//! Layout (little-endian): magic `ZBLB`, version u8, d u8, k u8, q u8,
//! beta u16, rounding u8, dims 3 x u64, then one fixed-size record per
//! block: zero_flag u8, e_max i16, `ceil(beta * 4^d / 8)` plane bytes.
//! Planes are stored most significant first; within a plane, coefficient
//! bits are packed MSB-first. Zero blocks keep their (all-zero) plane
//! bytes so records stay fixed-size.

use crate::codec::{block_grid, CodecConfig, CompressedBlock, Rounding};
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"ZBLB";
pub const VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("bad magic bytes (not a ZBLB stream)")]
    BadMagic,
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("truncated stream: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("trailing garbage after the last block record")]
    TrailingBytes,
}

/// A fully parsed container: parameters plus per-block payloads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Container {
    pub config: CodecConfig,
    pub dims: [usize; 3],
    pub blocks: Vec<CompressedBlock>,
}

fn plane_bytes(cfg: &CodecConfig) -> usize {
    (cfg.beta as usize * cfg.block_len()).div_ceil(8)
}

impl Container {
    pub fn block_count(&self) -> usize {
        block_grid(self.dims, self.config.d).iter().product()
    }

    pub fn serialize(&self) -> Vec<u8> {
        let cfg = &self.config;
        let n = cfg.block_len();
        let pb = plane_bytes(cfg);
        let mut out = Vec::with_capacity(33 + self.blocks.len() * (3 + pb));
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(cfg.d);
        out.push(cfg.k);
        out.push(cfg.q);
        out.extend_from_slice(&cfg.beta.to_le_bytes());
        out.push(cfg.rounding.as_u8());
        for &dim in &self.dims {
            out.extend_from_slice(&(dim as u64).to_le_bytes());
        }
        for b in &self.blocks {
            out.push(b.zero as u8);
            out.extend_from_slice(&b.e_max.to_le_bytes());
            let mut acc = 0u8;
            let mut nbits = 0;
            let start = out.len();
            for p in 0..cfg.beta as usize {
                let plane = if b.zero { 0 } else { b.planes[p] };
                for c in 0..n {
                    acc = (acc << 1) | ((plane >> c) & 1) as u8;
                    nbits += 1;
                    if nbits == 8 {
                        out.push(acc);
                        acc = 0;
                        nbits = 0;
                    }
                }
            }
            if nbits > 0 {
                out.push(acc << (8 - nbits));
            }
            debug_assert_eq!(out.len() - start, pb);
        }
        out
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self, ContainerError> {
        let header = 4 + 1 + 3 + 2 + 1 + 24;
        if bytes.len() < header {
            return Err(ContainerError::Truncated { expected: header, got: bytes.len() });
        }
        if bytes[0..4] != MAGIC {
            return Err(ContainerError::BadMagic);
        }
        if bytes[4] != VERSION {
            return Err(ContainerError::BadVersion(bytes[4]));
        }
        let beta = u16::from_le_bytes([bytes[8], bytes[9]]);
        let rounding = Rounding::from_u8(bytes[10])
            .ok_or_else(|| ContainerError::Header(format!("bad rounding byte {}", bytes[10])))?;
        let config = CodecConfig { d: bytes[5], k: bytes[6], q: bytes[7], beta, rounding };
        config
            .validate()
            .map_err(|e| ContainerError::Header(e.to_string()))?;
        let mut dims = [0usize; 3];
        for (a, dim) in dims.iter_mut().enumerate() {
            let off = 11 + 8 * a;
            let v = u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            if v == 0 || v > u32::MAX as u64 {
                return Err(ContainerError::Header(format!("bad dimension {v}")));
            }
            *dim = v as usize;
        }
        let n = config.block_len();
        let pb = plane_bytes(&config);
        let record = 3 + pb;
        let count: usize = block_grid(dims, config.d).iter().product();
        let expected = header + count * record;
        if bytes.len() < expected {
            return Err(ContainerError::Truncated { expected, got: bytes.len() });
        }
        if bytes.len() > expected {
            return Err(ContainerError::TrailingBytes);
        }
        let mut blocks = Vec::with_capacity(count);
        for bi in 0..count {
            let off = header + bi * record;
            let zero = match bytes[off] {
                0 => false,
                1 => true,
                v => return Err(ContainerError::Header(format!("bad zero flag {v}"))),
            };
            let e_max = i16::from_le_bytes([bytes[off + 1], bytes[off + 2]]);
            let mut planes = Vec::new();
            if !zero {
                planes.reserve(beta as usize);
                let data = &bytes[off + 3..off + 3 + pb];
                let mut bit = 0usize;
                for _ in 0..beta {
                    let mut plane = 0u64;
                    for c in 0..n {
                        let byte = data[bit / 8];
                        let b = (byte >> (7 - bit % 8)) & 1;
                        plane |= (b as u64) << c;
                        bit += 1;
                    }
                    planes.push(plane);
                }
            }
            blocks.push(CompressedBlock { zero, e_max, planes });
        }
        Ok(Container { config, dims, blocks })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::compress_grid;

    fn sample_container() -> Container {
        let config = CodecConfig { d: 2, k: 24, q: 30, beta: 13, rounding: Rounding::Last };
        let dims = [10, 7, 1];
        let data: Vec<f64> = (0..70).map(|i| ((i * 37 % 101) as f64 - 50.0) / 16.0).collect();
        let blocks = compress_grid(&data, dims, &config).unwrap();
        Container { config, dims, blocks }
    }

    #[test]
    fn round_trip() {
        let c = sample_container();
        let bytes = c.serialize();
        assert_eq!(Container::deserialize(&bytes).unwrap(), c);
    }

    #[test]
    fn serialization_is_deterministic() {
        let c = sample_container();
        assert_eq!(c.serialize(), c.serialize());
    }

    #[test]
    fn header_size_and_magic() {
        let c = sample_container();
        let bytes = c.serialize();
        assert_eq!(&bytes[0..4], b"ZBLB");
        // 35-byte header, then 3x2 blocks of a 10x7 grid at d=2 with
        // record size 1 + 2 + ceil(13*16/8)
        assert_eq!(bytes.len(), 35 + 6 * (3 + 26));
    }

    #[test]
    fn rejects_corruption() {
        let c = sample_container();
        let bytes = c.serialize();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Container::deserialize(&bad), Err(ContainerError::BadMagic)));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(Container::deserialize(&bad), Err(ContainerError::BadVersion(9))));
        assert!(matches!(
            Container::deserialize(&bytes[..bytes.len() - 1]),
            Err(ContainerError::Truncated { .. })
        ));
        let mut bad = bytes.clone();
        bad.push(0);
        assert!(matches!(Container::deserialize(&bad), Err(ContainerError::TrailingBytes)));
    }

    #[test]
    fn zero_blocks_keep_fixed_size_records() {
        let config = CodecConfig { d: 1, k: 24, q: 30, beta: 8, rounding: Rounding::Never };
        let dims = [8, 1, 1];
        let mut data = vec![0.0; 8];
        data[4] = 1.0; // first block all-zero, second not
        let blocks = compress_grid(&data, dims, &config).unwrap();
        let c = Container { config, dims, blocks };
        let rt = Container::deserialize(&c.serialize()).unwrap();
        assert!(rt.blocks[0].zero && rt.blocks[0].planes.is_empty());
        assert!(!rt.blocks[1].zero);
    }
}
