//! The eight-step fixed-precision pipeline: block partition, block
//! floating-point conversion, lossy lifting transform, total-sequency
//! permutation, negabinary conversion and bit-plane truncation — plus the
//! lossless reference paths used to isolate each error term.

use crate::bitplane::{decompose, negabinary_decode, negabinary_encode};
use crate::transform::{
    backward_exact, backward_lossy, forward_exact, forward_lossy, inverse_permutation,
    sequency_permutation,
};
use crate::Rat;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("input contains a non-finite value")]
    NonFiniteInput,
    #[error("coefficient overflow (input exceeds the q-bit budget)")]
    Overflow,
    #[error("dimension mismatch: expected {expected} samples, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// When the bias-cancelling offset is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rounding {
    /// Plain plane truncation (the biased variant).
    Never,
    /// Precompression: offset added to every coefficient before truncation.
    First,
    /// Postcompression: offset added after decode, only to coefficients
    /// with a nonzero retained prefix (unconditional application would
    /// re-inject bias on fully truncated coefficients).
    Last,
}

impl std::str::FromStr for Rounding {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "never" => Ok(Rounding::Never),
            "first" => Ok(Rounding::First),
            "last" => Ok(Rounding::Last),
            other => Err(format!("unknown rounding mode {other:?} (never|first|last)")),
        }
    }
}

impl Rounding {
    pub fn as_u8(self) -> u8 {
        match self {
            Rounding::Never => 0,
            Rounding::First => 1,
            Rounding::Last => 2,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Rounding::Never),
            1 => Some(Rounding::First),
            2 => Some(Rounding::Last),
            _ => None,
        }
    }
}

/// Pipeline parameters. `k` is the input precision (24 or 53 for IEEE
/// single/double), `q > k` the block-float significand width (30 or 62),
/// `beta` the number of retained bit planes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodecConfig {
    pub d: u8,
    pub k: u8,
    pub q: u8,
    pub beta: u16,
    pub rounding: Rounding,
}

impl CodecConfig {
    pub fn validate(&self) -> Result<(), CodecError> {
        if !(1..=3).contains(&self.d) {
            return Err(CodecError::Config(format!("d must be 1..=3, got {}", self.d)));
        }
        if self.q <= self.k {
            return Err(CodecError::Config(format!("q must exceed k ({} <= {})", self.q, self.k)));
        }
        if self.q > 62 || self.k < 2 {
            return Err(CodecError::Config(format!("unsupported precision k={} q={}", self.k, self.q)));
        }
        if self.beta > self.q as u16 + 2 {
            return Err(CodecError::Config(format!(
                "beta {} exceeds the lossless cap q+2 = {}",
                self.beta,
                self.q as u16 + 2
            )));
        }
        Ok(())
    }

    /// Number of elements per block.
    pub fn block_len(&self) -> usize {
        4usize.pow(self.d as u32)
    }

    /// Last discarded bit-plane index `eta = q + 1 - beta`.
    pub fn eta(&self) -> i32 {
        self.q as i32 + 1 - self.beta as i32
    }

    /// Upper bound of the analysis range for `beta` (`q - 2d + 2`).
    pub fn beta_analysis_cap(&self) -> u16 {
        (self.q as i32 - 2 * self.d as i32 + 2) as u16
    }
}

/// One compressed block: the shared exponent plus `beta` bit planes of
/// `4^d` negabinary bits, most significant plane first. Bit `c` of a
/// plane belongs to the coefficient at sequency rank `c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedBlock {
    pub zero: bool,
    pub e_max: i16,
    pub planes: Vec<u64>,
}

/// Bit index of the leading binary digit of `x` (`|x|` in `[2^e, 2^{e+1})`).
pub fn exponent_index(x: f64) -> Option<i32> {
    if x == 0.0 {
        return None;
    }
    let (m, e) = decompose(x);
    Some(e + 63 - m.unsigned_abs().leading_zeros() as i32)
}

fn block_e_max(block: &[f64]) -> Option<i32> {
    block.iter().filter_map(|&x| exponent_index(x)).max()
}

/// Step 2 forward: scale by `2^{-l}` with `l = e_max - q + 1` and, when
/// `lossy`, truncate toward zero to an integer. Returns `None` for the
/// all-zero block (handled by a flag, not an error).
pub fn step2_forward(block: &[f64], cfg: &CodecConfig, lossy: bool) -> Option<(Vec<i128>, i32)> {
    let e_max = block_e_max(block)?;
    let l = e_max - cfg.q as i32 + 1;
    debug_assert!(lossy, "exact step 2 lives in step2_exact");
    let ints = block
        .iter()
        .map(|&x| {
            if x == 0.0 {
                return 0;
            }
            let (m, e) = decompose(x);
            let sh = e - l;
            let m = m as i128;
            if sh >= 0 {
                m << sh
            } else if m >= 0 {
                m >> -sh
            } else {
                -((-m) >> -sh) // truncate the magnitude, not the two's complement
            }
        })
        .collect();
    Some((ints, e_max))
}

/// Step 2 of the lossless reference path: the exact scaled rationals.
pub fn step2_exact(block: &[f64], cfg: &CodecConfig) -> Option<(Vec<Rat>, i32)> {
    let e_max = block_e_max(block)?;
    let l = e_max - cfg.q as i32 + 1;
    let vals = block.iter().map(|&x| f64_to_rat(x) * pow2(-l)).collect();
    Some((vals, e_max))
}

/// Step 2 backward: truncate each significand to `k` bits toward zero
/// (`fl_k`) and scale back by `2^l`.
pub fn step2_backward(ints: &[i128], e_max: i32, cfg: &CodecConfig) -> Vec<f64> {
    let l = e_max - cfg.q as i32 + 1;
    let scale = (l as f64).exp2();
    ints.iter()
        .map(|&v| {
            let fl = fl_k_int(v, cfg.k as u32);
            fl as f64 * scale
        })
        .collect()
}

fn fl_k_int(v: i128, k: u32) -> i128 {
    if v == 0 {
        return 0;
    }
    let width = 128 - v.unsigned_abs().leading_zeros();
    if width <= k {
        return v;
    }
    let drop = width - k;
    let mag = (v.unsigned_abs() >> drop) << drop;
    if v < 0 {
        -(mag as i128)
    } else {
        mag as i128
    }
}

/// Centering offset `o_eta`: the nearest integer to minus the truncation
/// mean `(-2)^{eta+1}/6`, so adding it cancels the bias.
pub fn rounding_offset(eta: i32) -> i128 {
    if eta < 0 {
        return 0;
    }
    let pow = if eta.rem_euclid(2) == 0 {
        -(1i128 << (eta + 1) as u32)
    } else {
        1i128 << (eta + 1) as u32
    };
    Rat::new(-pow, 6).round().to_integer()
}

fn plane_mask(eta: i32) -> u128 {
    if eta < 0 {
        !0
    } else if eta >= 127 {
        0
    } else {
        !((1u128 << (eta + 1)) - 1)
    }
}

/// Compress one `4^d` block.
pub fn compress_block(block: &[f64], cfg: &CodecConfig) -> Result<CompressedBlock, CodecError> {
    if block.len() != cfg.block_len() {
        return Err(CodecError::DimensionMismatch { expected: cfg.block_len(), got: block.len() });
    }
    if block.iter().any(|x| !x.is_finite()) {
        return Err(CodecError::NonFiniteInput);
    }
    let Some((mut coeffs, e_max)) = step2_forward(block, cfg, true) else {
        return Ok(CompressedBlock { zero: true, e_max: 0, planes: Vec::new() });
    };
    forward_lossy(&mut coeffs, cfg.d);
    let eta = cfg.eta();
    if cfg.rounding == Rounding::First && eta >= 0 {
        let o = rounding_offset(eta);
        for c in coeffs.iter_mut() {
            *c += o;
        }
    }
    let perm = sequency_permutation(cfg.d);
    let neg: Vec<u128> = perm.iter().map(|&p| negabinary_encode(coeffs[p])).collect();
    // all active bits must sit at or below the guard index q+1
    if neg.iter().any(|&b| b >> (cfg.q as u32 + 2) != 0) {
        return Err(CodecError::Overflow);
    }
    let planes = (0..cfg.beta)
        .map(|p| {
            let idx = (cfg.q as i32 + 1 - p as i32) as u32;
            let mut bits = 0u64;
            for (c, &b) in neg.iter().enumerate() {
                bits |= (((b >> idx) & 1) as u64) << c;
            }
            bits
        })
        .collect();
    Ok(CompressedBlock { zero: false, e_max: e_max as i16, planes })
}

/// Decompress one block.
pub fn decompress_block(cb: &CompressedBlock, cfg: &CodecConfig) -> Vec<f64> {
    let n = cfg.block_len();
    if cb.zero {
        return vec![0.0; n];
    }
    let mut neg = vec![0u128; n];
    for (p, &bits) in cb.planes.iter().enumerate() {
        let idx = (cfg.q as i32 + 1 - p as i32) as u32;
        for (c, nb) in neg.iter_mut().enumerate() {
            *nb |= (((bits >> c) & 1) as u128) << idx;
        }
    }
    let eta = cfg.eta();
    let o = if cfg.rounding == Rounding::Last && eta >= 0 { rounding_offset(eta) } else { 0 };
    let perm = sequency_permutation(cfg.d);
    let inv = inverse_permutation(&perm);
    let mut coeffs: Vec<i128> = (0..n)
        .map(|i| {
            let w = neg[inv[i]];
            let v = negabinary_decode(w);
            if w != 0 {
                v + o
            } else {
                v
            }
        })
        .collect();
    backward_lossy(&mut coeffs, cfg.d);
    step2_backward(&coeffs, cb.e_max as i32, cfg)
}

/// Smallest `beta` whose quantization step meets an absolute tolerance:
/// `2^l * 2^{q+1-beta} <= tol`, clamped to `[0, q+2]`.
pub fn beta_for_tolerance(tol: f64, e_max: i32, cfg: &CodecConfig) -> u16 {
    assert!(tol > 0.0);
    let beta = (e_max as f64 + 2.0 - tol.log2()).ceil();
    beta.clamp(0.0, cfg.q as f64 + 2.0) as u16
}

// ---------------------------------------------------------------------
// Grid partition / reassembly
// ---------------------------------------------------------------------

/// Per-axis block counts for a grid.
pub fn block_grid(dims: [usize; 3], d: u8) -> [usize; 3] {
    std::array::from_fn(|a| {
        if a < d as usize {
            dims[a].div_ceil(4)
        } else {
            1
        }
    })
}

/// Split a row-major grid into `4^d` blocks, replicating the last valid
/// sample along each axis to pad the boundary.
pub fn partition(data: &[f64], dims: [usize; 3], cfg: &CodecConfig) -> Result<Vec<Vec<f64>>, CodecError> {
    let expected: usize = dims.iter().product();
    if data.len() != expected {
        return Err(CodecError::DimensionMismatch { expected, got: data.len() });
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(CodecError::NonFiniteInput);
    }
    let d = cfg.d as usize;
    let grid = block_grid(dims, cfg.d);
    let mut blocks = Vec::with_capacity(grid.iter().product());
    for bz in 0..grid[2] {
        for by in 0..grid[1] {
            for bx in 0..grid[0] {
                let base = [bx * 4, by * 4, bz * 4];
                let mut block = Vec::with_capacity(cfg.block_len());
                let span = |axis: usize| if axis < d { 4 } else { 1 };
                for lz in 0..span(2) {
                    for ly in 0..span(1) {
                        for lx in 0..span(0) {
                            let c = [base[0] + lx, base[1] + ly, base[2] + lz]
                                .map(|v| v)
                                .iter()
                                .zip(dims.iter())
                                .map(|(&v, &n)| v.min(n - 1))
                                .collect::<Vec<_>>();
                            block.push(data[(c[2] * dims[1] + c[1]) * dims[0] + c[0]]);
                        }
                    }
                }
                blocks.push(block);
            }
        }
    }
    Ok(blocks)
}

/// Inverse of [`partition`]: drops the padding.
pub fn reassemble(blocks: &[Vec<f64>], dims: [usize; 3], cfg: &CodecConfig) -> Vec<f64> {
    let d = cfg.d as usize;
    let grid = block_grid(dims, cfg.d);
    let mut out = vec![0.0; dims.iter().product()];
    let mut bi = 0;
    for bz in 0..grid[2] {
        for by in 0..grid[1] {
            for bx in 0..grid[0] {
                let base = [bx * 4, by * 4, bz * 4];
                let block = &blocks[bi];
                bi += 1;
                let span = |axis: usize| if axis < d { 4 } else { 1 };
                let mut li = 0;
                for lz in 0..span(2) {
                    for ly in 0..span(1) {
                        for lx in 0..span(0) {
                            let c = [base[0] + lx, base[1] + ly, base[2] + lz];
                            if c[0] < dims[0] && c[1] < dims[1] && c[2] < dims[2] {
                                out[(c[2] * dims[1] + c[1]) * dims[0] + c[0]] = block[li];
                            }
                            li += 1;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Compress a whole grid (blocks in parallel).
pub fn compress_grid(
    data: &[f64],
    dims: [usize; 3],
    cfg: &CodecConfig,
) -> Result<Vec<CompressedBlock>, CodecError> {
    cfg.validate()?;
    let blocks = partition(data, dims, cfg)?;
    blocks
        .par_iter()
        .map(|b| compress_block(b, cfg))
        .collect()
}

/// Decompress a whole grid.
pub fn decompress_grid(blocks: &[CompressedBlock], dims: [usize; 3], cfg: &CodecConfig) -> Vec<f64> {
    let decoded: Vec<Vec<f64>> = blocks.par_iter().map(|b| decompress_block(b, cfg)).collect();
    reassemble(&decoded, dims, cfg)
}

// ---------------------------------------------------------------------
// Lossless reference path and error decomposition
// ---------------------------------------------------------------------

pub(crate) fn pow2(e: i32) -> Rat {
    assert!((-126..=126).contains(&e), "pow2 exponent out of range");
    if e >= 0 {
        Rat::from_integer(1i128 << e)
    } else {
        Rat::new(1, 1i128 << -e)
    }
}

pub(crate) fn f64_to_rat(x: f64) -> Rat {
    if x == 0.0 {
        return Rat::zero();
    }
    let (m, e) = decompose(x);
    let tz = m.trailing_zeros().min(62) as i32;
    Rat::from_integer((m >> tz) as i128) * pow2(e + tz)
}

/// Per-step snapshots of one traced block (values, not bit patterns).
#[derive(Debug, Clone)]
pub struct StepTrace {
    /// `w = C~_2 x`: block-float integers.
    pub w: Vec<i128>,
    /// `y = C_5 C_4 C~_3 w`: lossy transform coefficients, sequency order.
    pub y: Vec<i128>,
    /// `z = D_3 D_4 D_5 C~_8 y`: exact backward transform of the
    /// truncated coefficients.
    pub z: Vec<Rat>,
    pub e_max: i32,
}

/// The total compression error of one block split into its four lossy
/// sources, each propagated back through the exact decompression
/// operators. The sum of the terms equals the total error exactly in the
/// analysis regime (`beta <= q - 2d + 2`, `rounding = Never`).
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub trace: StepTrace,
    /// Terms in pipeline order: block-float truncation, transform gap,
    /// plane truncation, decode significand rounding.
    pub terms: [Vec<Rat>; 4],
    /// `D~(C~(x)) - D(C(x))`, computed from the real pipeline.
    pub total: Vec<Rat>,
}

fn fl_k_rat(z: &Rat, k: u32) -> Rat {
    if z.is_zero() {
        return Rat::zero();
    }
    // leading bit index of |z|
    let approx = z.to_f64().unwrap().abs();
    let mut e = approx.log2().floor() as i32;
    while pow2(e) > z.abs() {
        e -= 1;
    }
    while pow2(e + 1) <= z.abs() {
        e += 1;
    }
    let step = pow2(e - k as i32 + 1);
    let q = (z.abs() / &step).floor();
    let mag = q * step;
    if z.is_negative() {
        -mag
    } else {
        mag
    }
}

/// Evaluate the exact error decomposition on one block.
pub fn error_decomposition(block: &[f64], cfg: &CodecConfig) -> Result<Decomposition, CodecError> {
    cfg.validate()?;
    if cfg.rounding != Rounding::Never {
        return Err(CodecError::Config("decomposition is defined for the Never variant".into()));
    }
    let n = cfg.block_len();
    let Some((w, e_max)) = step2_forward(block, cfg, true) else {
        return Err(CodecError::Config("zero block has no error decomposition".into()));
    };
    let l = e_max - cfg.q as i32 + 1;
    let scale = pow2(l);
    let perm = sequency_permutation(cfg.d);
    let inv = inverse_permutation(&perm);
    let eta = cfg.eta();

    // lossy forward path
    let mut coeffs = w.clone();
    forward_lossy(&mut coeffs, cfg.d);
    let y: Vec<i128> = perm.iter().map(|&p| coeffs[p]).collect();
    let y_trunc: Vec<i128> = y
        .iter()
        .map(|&c| negabinary_decode(negabinary_encode(c) & plane_mask(eta)))
        .collect();
    let mut z: Vec<Rat> = (0..n).map(|i| Rat::from_integer(y_trunc[inv[i]])).collect();
    backward_exact(&mut z, cfg.d);

    // term 4: block-float truncation, propagated through L^{-1} L = id
    let c2_exact: Vec<Rat> = block.iter().map(|&x| f64_to_rat(x) * pow2(-l)).collect();
    let term4: Vec<Rat> =
        (0..n).map(|i| (Rat::from_integer(w[i]) - &c2_exact[i]) * &scale).collect();

    // term 3: transform gap
    let mut c3_exact: Vec<Rat> = w.iter().map(|&v| Rat::from_integer(v)).collect();
    forward_exact(&mut c3_exact, cfg.d);
    let mut diff3: Vec<Rat> =
        (0..n).map(|i| Rat::from_integer(coeffs[i]) - &c3_exact[i]).collect();
    backward_exact(&mut diff3, cfg.d);
    let term3: Vec<Rat> = diff3.into_iter().map(|v| v * &scale).collect();

    // term 2: plane truncation
    let mut diff2: Vec<Rat> =
        (0..n).map(|i| Rat::from_integer(y_trunc[inv[i]] - y[inv[i]])).collect();
    backward_exact(&mut diff2, cfg.d);
    let term2: Vec<Rat> = diff2.into_iter().map(|v| v * &scale).collect();

    // term 1: decode significand rounding
    let term1: Vec<Rat> =
        z.iter().map(|v| (fl_k_rat(v, cfg.k as u32) - v) * &scale).collect();

    // total from the real pipeline; D(C(x)) = x for in-range dyadic input
    let cb = compress_block(block, cfg)?;
    let out = decompress_block(&cb, cfg);
    let total: Vec<Rat> =
        (0..n).map(|i| f64_to_rat(out[i]) - f64_to_rat(block[i])).collect();

    Ok(Decomposition {
        trace: StepTrace { w, y, z, e_max },
        terms: [term1, term2, term3, term4],
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(d: u8, beta: u16) -> CodecConfig {
        CodecConfig { d, k: 24, q: 30, beta, rounding: Rounding::Never }
    }

    fn snap24(x: f64) -> f64 {
        let (m, e) = decompose(x);
        let width = 64 - m.unsigned_abs().leading_zeros();
        if width <= 24 {
            return x;
        }
        let drop = width - 24;
        let mag = (m.unsigned_abs() >> drop) << drop;
        (if m < 0 { -(mag as f64) } else { mag as f64 }) * (e as f64).exp2()
    }

    #[test]
    fn config_validation() {
        assert!(cfg(1, 20).validate().is_ok());
        assert!(CodecConfig { d: 0, ..cfg(1, 20) }.validate().is_err());
        assert!(CodecConfig { k: 30, ..cfg(1, 20) }.validate().is_err());
        assert!(cfg(1, 33).validate().is_err());
    }

    #[test]
    fn step2_unit_block() {
        let c = cfg(1, 20);
        let (ints, e_max) = step2_forward(&[1.0, 1.0, 1.0, 1.0], &c, true).unwrap();
        assert_eq!(e_max, 0);
        assert_eq!(ints, vec![1 << 29; 4]);
    }

    #[test]
    fn step2_wide_range_truncates_small_elements() {
        let c = cfg(1, 20);
        // rho > q - 1: the smallest element underflows to zero
        let (ints, _) = step2_forward(&[1.0, (-31f64).exp2(), 0.25, 0.5], &c, true).unwrap();
        assert_eq!(ints[1], 0);
    }

    #[test]
    fn step2_backward_drops_to_k_bits() {
        let c = cfg(1, 20);
        let v = (1i128 << 29) | 0x3f; // 30 significant bits
        let out = step2_backward(&[v], 0, &c);
        let expect = ((v >> 6) << 6) as f64 * (-29f64).exp2();
        assert_eq!(out[0], expect);
    }

    #[test]
    fn rounding_offset_magnitude() {
        // |o| = nearest((2^{eta+1})/6); sign opposes the truncation mean
        assert_eq!(rounding_offset(3), -3); // mean +16/6 for odd eta
        assert_eq!(rounding_offset(4), 5); // mean -33/6 for even eta
        assert_eq!(rounding_offset(-1), 0);
    }

    #[test]
    fn zero_block_round_trips_exactly() {
        let c = cfg(2, 10);
        let cb = compress_block(&vec![0.0; 16], &c).unwrap();
        assert!(cb.zero);
        assert!(decompress_block(&cb, &c).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn beta_zero_reconstructs_zero() {
        let c = cfg(1, 0);
        let cb = compress_block(&[1.5, -2.25, 0.75, 3.0], &c).unwrap();
        assert!(decompress_block(&cb, &c).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn lossless_cap_is_near_exact() {
        let c = cfg(1, 32);
        let block: Vec<f64> = [1.5f64, -2.25, 0.7512, 3.0001].map(snap24).to_vec();
        let cb = compress_block(&block, &c).unwrap();
        let out = decompress_block(&cb, &c);
        let scale = block.iter().fold(0f64, |a, &b| a.max(b.abs()));
        for (o, b) in out.iter().zip(&block) {
            assert!((o - b).abs() <= (-23f64).exp2() * scale, "{o} vs {b}");
        }
    }

    #[test]
    fn determinism() {
        let c = cfg(1, 13);
        let block = [0.11f64, -0.73, 0.42, -0.99].map(snap24);
        assert_eq!(compress_block(&block, &c).unwrap(), compress_block(&block, &c).unwrap());
    }

    #[test]
    fn error_envelope_shrinks_with_beta() {
        // realized max error is not strictly monotone in beta (dropping a
        // plane can cancel), but it must stay under a halving envelope
        let block = [0.8193f64, -0.2744, 0.5521, -0.9313].map(snap24);
        let e_max = 0; // |x| < 1
        for beta in 0..=32u16 {
            let c = cfg(1, beta);
            let l = e_max - c.q as i32 + 1;
            let cb = compress_block(&block, &c).unwrap();
            let out = decompress_block(&cb, &c);
            let err = out
                .iter()
                .zip(&block)
                .map(|(o, b)| (o - b).abs())
                .fold(0f64, f64::max);
            // inverse-transform gain 15/4 on a 2^{eta+1} coefficient error,
            // plus slack for the block-float and significand steps
            let bound = 8.0 * ((l + c.eta() + 1) as f64).exp2() + (-22f64).exp2();
            assert!(err <= bound, "beta={beta}: {err} > {bound}");
        }
    }

    #[test]
    fn beta_for_tolerance_examples() {
        let c = cfg(1, 0);
        assert_eq!(beta_for_tolerance((-8f64).exp2(), 8, &c), 18);
        assert_eq!(beta_for_tolerance(10f64.exp2(), 8, &c), 0);
        assert_eq!(beta_for_tolerance(1e-300, 8, &c), 32);
        // halving the tolerance increments beta by one
        assert_eq!(
            beta_for_tolerance((-8f64).exp2() / 2.0, 8, &c),
            beta_for_tolerance((-8f64).exp2(), 8, &c) + 1
        );
    }

    #[test]
    fn partition_shapes() {
        let c2 = cfg(2, 10);
        let data: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let blocks = partition(&data, [10, 10, 1], &c2).unwrap();
        assert_eq!(blocks.len(), 9);
        let data: Vec<f64> = (0..16).map(|i| i as f64).collect();
        assert_eq!(partition(&data, [4, 4, 1], &c2).unwrap().len(), 1);
    }

    #[test]
    fn partition_reassemble_round_trip() {
        let c2 = cfg(2, 10);
        let data: Vec<f64> = (0..7 * 13).map(|i| (i as f64 * 0.773).sin()).collect();
        let blocks = partition(&data, [7, 13, 1], &c2).unwrap();
        assert_eq!(reassemble(&blocks, [7, 13, 1], &c2), data);
        let c3 = cfg(3, 10);
        let data: Vec<f64> = (0..5 * 6 * 7).map(|i| (i as f64 * 1.37).cos()).collect();
        let blocks = partition(&data, [5, 6, 7], &c3).unwrap();
        assert_eq!(reassemble(&blocks, [5, 6, 7], &c3), data);
    }

    #[test]
    fn decomposition_identity_on_random_blocks() {
        let mut s = 42u64;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        for beta in [4u16, 9, 17, 26] {
            let c = cfg(1, beta);
            for _ in 0..25 {
                let block: Vec<f64> =
                    (0..4).map(|_| snap24((next() - 0.5) * 2.0)).collect();
                if block.iter().all(|&x| x == 0.0) {
                    continue;
                }
                let dec = error_decomposition(&block, &c).unwrap();
                for i in 0..4 {
                    let sum = dec.terms.iter().map(|t| &t[i]).sum::<Rat>();
                    assert_eq!(sum, dec.total[i], "beta={beta} i={i} block={block:?}");
                }
            }
        }
    }
}
