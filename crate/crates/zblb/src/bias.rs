//! Closed-form error predictors: the transform-gap mean `E_d`, the total
//! per-element bias of the full pipeline, truncation statistics for both
//! bases, and the piecewise-cubic quantization error densities.

use crate::codec::{CodecConfig, Rounding};
use crate::transform::{backward_exact, L_INV_NUM};
use crate::Rat;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BiasError {
    #[error("dimension {0} not supported (d must be 1, 2 or 3)")]
    UnsupportedDimension(u8),
}

/// Componentwise mean of the 1-d forward transform gap `L a - L~ a`
/// over inputs with uniformly random low bits.
pub fn e1() -> [Rat; 4] {
    [Rat::new(1, 2), Rat::new(-9, 16), Rat::new(-1, 4), Rat::new(1, 8)]
}

/// `E_d`: expected componentwise gap between the exact and lossy forward
/// transform in d dimensions, for the x-fastest flattening the codec uses.
///
/// The recursion follows from applying the 1-d result axis by axis: the
/// last axis contributes a fresh `E_1` to every line, while the earlier
/// axes' accumulated gap survives only in the line's DC output (the other
/// rows of L sum to zero). Flattened:
/// `E_d[u + 4^{d-1} w] = E_{d-1}[u]·[w == 0] + E_1[w]`.
pub fn expected_transform_error(d: u8) -> Result<Vec<Rat>, BiasError> {
    if d == 0 || d > 3 {
        return Err(BiasError::UnsupportedDimension(d));
    }
    let mut e: Vec<Rat> = e1().to_vec();
    for _ in 2..=d {
        let prev = e;
        let stride = prev.len();
        let mut next = vec![Rat::zero(); stride * 4];
        for w in 0..4 {
            for (u, pu) in prev.iter().enumerate() {
                next[u + stride * w] = e1()[w] + if w == 0 { *pu } else { Rat::zero() };
            }
        }
        e = next;
    }
    Ok(e)
}

/// Which branch of the truncation lemmas applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncRegime {
    /// The leading nonzero bit survives the truncation.
    LeadingRetained,
    /// Everything is truncated away; the error is minus the input, so the
    /// mean depends on the input distribution.
    LeadingTruncated,
}

/// Closed-form mean and error interval for truncation at last discarded
/// index `eta`, assuming uniformly random discarded bits.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationStats {
    /// `None` when the mean is input-dependent (fully truncated regime).
    pub mean: Option<Rat>,
    /// Open interval containing the error.
    pub interval: (Rat, Rat),
}

/// Truncation statistics per base/regime, with or without the centering
/// rounding correction.
pub fn truncation_stats(
    base: crate::bitplane::Base,
    eta: i32,
    regime: TruncRegime,
    rounded: bool,
) -> TruncationStats {
    let ulp = Rat::from_integer(1i128 << (eta + 1).clamp(0, 126) as u32);
    match (base, regime) {
        (_, TruncRegime::LeadingTruncated) => TruncationStats {
            mean: None,
            interval: (-ulp, ulp),
        },
        (crate::bitplane::Base::SignedBinary, TruncRegime::LeadingRetained) => TruncationStats {
            mean: Some(Rat::zero()),
            interval: (Rat::from_integer(1) - ulp, ulp - Rat::from_integer(1)),
        },
        (crate::bitplane::Base::Negabinary, TruncRegime::LeadingRetained) => {
            if rounded {
                TruncationStats {
                    mean: Some(Rat::zero()),
                    interval: (-ulp / 2, ulp / 2),
                }
            } else {
                // error = -(discarded value); for even eta the discarded
                // value peaks positive, so the error band leans negative.
                let mean = truncation_mean_integer(eta);
                let interval = if eta.rem_euclid(2) == 0 {
                    (-ulp * Rat::new(2, 3), ulp * Rat::new(1, 3))
                } else {
                    (-ulp * Rat::new(1, 3), ulp * Rat::new(2, 3))
                };
                TruncationStats { mean: Some(mean), interval }
            }
        }
    }
}

/// Exact mean of the negabinary plane truncation for integer coefficients
/// with uniformly random bits at indices `0..=eta`:
/// `((-2)^{eta+1} - 1) / 6`.
pub fn truncation_mean_integer(eta: i32) -> Rat {
    if eta < 0 {
        return Rat::zero();
    }
    let pow = if eta.rem_euclid(2) == 0 {
        -(1i128 << (eta + 1) as u32)
    } else {
        1i128 << (eta + 1) as u32
    };
    Rat::new(pow - 1, 6)
}

/// Per-element expected compression error and its per-term breakdown.
#[derive(Debug, Clone, Serialize)]
pub struct BiasPrediction {
    pub d: u8,
    pub k: u8,
    pub q: u8,
    pub beta: u16,
    pub e_max: i32,
    /// Block-float shift `l = e_max - q + 1`.
    pub l: i32,
    pub rounding: Rounding,
    /// Total expected error per element.
    pub per_element_mean: Vec<f64>,
    /// The four decomposition terms, in pipeline order: block-float
    /// truncation, transform gap, plane truncation, significand rounding.
    pub components: [Vec<f64>; 4],
    /// Elements whose |mean| falls below the representability floor
    /// `2^{e_max - k}` (flagged, never silently zeroed).
    pub below_floor: Vec<bool>,
    /// True when beta is outside the analysis range `[0, q - 2d + 2]` and
    /// the prediction is unreliable.
    pub out_of_analysis_range: bool,
}

/// Theorem-style total bias: `mu = 2^l L_d^{-1} (t·1 - E_d)` where `t` is
/// the plane-truncation mean and `E_d` the transform gap (the gap term is
/// `C~_3 - C_3 = -Theta`, hence the minus). Rounding modes cancel the
/// truncation term, leaving only the transform contribution.
pub fn predict_total_bias(cfg: &CodecConfig, e_max: i32) -> Result<BiasPrediction, BiasError> {
    let n = 4usize.pow(cfg.d as u32);
    let eta = cfg.q as i32 + 1 - cfg.beta as i32;
    let l = e_max - cfg.q as i32 + 1;
    let scale = (l as f64).exp2();

    let t = if cfg.rounding == Rounding::Never {
        truncation_mean_integer(eta)
    } else {
        Rat::zero()
    };
    let ed = expected_transform_error(cfg.d)?;

    let term = |v: Vec<Rat>| -> Vec<f64> {
        let mut v = v;
        backward_exact(&mut v, cfg.d);
        v.iter().map(|r| r.to_f64().unwrap() * scale).collect()
    };
    let trunc_term = term(vec![t; n]);
    let transform_term = term(ed.iter().map(|e| -e).collect());
    let zero = vec![0.0; n];

    let per_element_mean: Vec<f64> = (0..n)
        .map(|i| trunc_term[i] + transform_term[i])
        .collect();
    let floor = ((e_max - cfg.k as i32) as f64).exp2();
    let below_floor = per_element_mean.iter().map(|m| m.abs() < floor).collect();

    Ok(BiasPrediction {
        d: cfg.d,
        k: cfg.k,
        q: cfg.q,
        beta: cfg.beta,
        e_max,
        l,
        rounding: cfg.rounding,
        per_element_mean,
        components: [zero.clone(), transform_term, trunc_term, zero],
        below_floor,
        out_of_analysis_range: cfg.beta as i32 > cfg.q as i32 - 2 * cfg.d as i32 + 2,
    })
}

/// Piecewise-cubic density of the per-position decompression error for a
/// 1-d block, in units of the quantization step (ulp).
#[derive(Debug, Clone, Serialize)]
pub struct ErrorDensity {
    /// Spatial position within the block, 0-based.
    pub i: usize,
    pub biased: bool,
    pub s: f64,
    /// Center = mean of the distribution.
    pub c: f64,
    pub u: [f64; 4],
    pub v: [f64; 4],
}

impl ErrorDensity {
    pub fn support(&self) -> (f64, f64) {
        (self.c - self.u[3], self.c + self.u[3])
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo || x >= hi {
            return 0.0;
        }
        let cube = |t: f64| t.abs().powi(3);
        let mut acc = 0.0;
        for j in 0..4 {
            acc += cube(x - (self.c - self.u[j])) + cube(x - (self.c + self.u[j]))
                - cube(x - (self.c - self.v[j]))
                - cube(x - (self.c + self.v[j]));
        }
        self.s * acc
    }

    /// Exact mean: `E[Y] * (row sum of L^{-1})_i`.
    pub fn mean(&self) -> f64 {
        self.c
    }

    /// Exact variance: `var(Y) * (squared row 2-norm of L^{-1})_i`,
    /// identical for the biased and unbiased variants.
    pub fn variance(&self) -> f64 {
        let row: i128 = L_INV_NUM[self.i].iter().map(|&a| a * a).sum();
        Rat::new(row, 16 * 12).to_f64().unwrap()
    }
}

/// Density of position `i` (0-based) for the biased (truncation-only) or
/// unbiased (rounding-corrected) quantizer.
pub fn quantization_density(i: usize, biased: bool) -> ErrorDensity {
    assert!(i < 4, "position out of range");
    // Knot tables; u/v are the eighth-scaled values.
    let (u8s, v8s) = if i == 0 || i == 3 {
        ([1.0, 5.0, 5.0, 15.0], [3.0, 7.0, 7.0, 13.0])
    } else {
        ([1.0, 3.0, 3.0, 15.0], [5.0, 7.0, 7.0, 11.0])
    };
    let s = if i == 0 || i == 3 { 2.0 / 9.0 } else { 2.0 / 15.0 };
    let c = if biased {
        // -1/6 times the i-th row sum of L^{-1}
        let row: i128 = L_INV_NUM[i].iter().sum();
        Rat::new(-row, 4 * 6).to_f64().unwrap()
    } else {
        0.0
    };
    ErrorDensity {
        i,
        biased,
        s,
        c,
        u: u8s.map(|x| x / 8.0),
        v: v8s.map(|x| x / 8.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitplane::Base;

    #[test]
    fn e1_value() {
        assert_eq!(
            e1(),
            [Rat::new(1, 2), Rat::new(-9, 16), Rat::new(-1, 4), Rat::new(1, 8)]
        );
    }

    #[test]
    fn ed_structure() {
        let e2 = expected_transform_error(2).unwrap();
        assert_eq!(e2.len(), 16);
        // last-axis contribution repeats in every group of 4
        for w in 1..4 {
            for u in 1..4 {
                assert_eq!(e2[u + 4 * w], e1()[w]);
            }
        }
        // w == 0 keeps the earlier axis gap
        for u in 0..4 {
            assert_eq!(e2[u], e1()[u] + e1()[0]);
        }
        assert_eq!(expected_transform_error(4), Err(BiasError::UnsupportedDimension(4)));
    }

    #[test]
    fn truncation_stats_branches() {
        let s = truncation_stats(Base::Negabinary, 4, TruncRegime::LeadingRetained, false);
        assert_eq!(s.mean, Some(Rat::new(-33, 6))); // ((-2)^5 - 1)/6 for eta=4
        assert_eq!(s.interval, (Rat::new(-64, 3), Rat::new(32, 3)));
        let s = truncation_stats(Base::SignedBinary, 4, TruncRegime::LeadingRetained, false);
        assert_eq!(s.mean, Some(Rat::zero()));
        let s = truncation_stats(Base::Negabinary, 4, TruncRegime::LeadingRetained, true);
        assert_eq!(s.mean, Some(Rat::zero()));
        assert_eq!(s.interval, (Rat::from_integer(-16), Rat::from_integer(16)));
    }

    #[test]
    fn truncation_mean_parity() {
        // sign alternates with eta parity; idealized value is
        // (-2)^{eta+1}/6 and the integer form subtracts 1/6
        assert_eq!(truncation_mean_integer(3), Rat::new(15, 6));
        assert_eq!(truncation_mean_integer(4), Rat::new(-33, 6));
        assert_eq!(truncation_mean_integer(-1), Rat::zero());
    }

    #[test]
    fn prediction_parity_and_linearity() {
        let mk = |beta| CodecConfig { d: 1, k: 24, q: 30, beta, rounding: Rounding::Never };
        let a = predict_total_bias(&mk(10), 0).unwrap();
        let b = predict_total_bias(&mk(11), 0).unwrap();
        // truncation terms of consecutive beta have opposite signs
        for i in 0..4 {
            assert!(a.components[2][i] * b.components[2][i] < 0.0);
        }
        // total = sum of components
        for i in 0..4 {
            let sum: f64 = (0..4).map(|t| a.components[t][i]).sum();
            assert!((a.per_element_mean[i] - sum).abs() < 1e-18);
        }
        // corrected rounding removes the truncation term
        let c = predict_total_bias(
            &CodecConfig { rounding: Rounding::First, ..mk(10) },
            0,
        )
        .unwrap();
        assert!(c.components[2].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn density_parameters_match_moment_identities() {
        // biased centers: -1/6 times row sums of L^{-1}
        let centers: Vec<f64> = (0..4).map(|i| quantization_density(i, true).c).collect();
        assert_eq!(centers, vec![-5.0 / 24.0, -5.0 / 8.0, -1.0 / 24.0, 5.0 / 24.0]);
        let vars: Vec<f64> = (0..4).map(|i| quantization_density(i, true).variance()).collect();
        assert_eq!(vars, vec![23.0 / 64.0, 61.0 / 192.0, 61.0 / 192.0, 23.0 / 64.0]);
        // biased i=1 support (-5/2, 5/4)
        let d = quantization_density(1, true);
        let (lo, hi) = d.support();
        assert!((lo + 2.5).abs() < 1e-15 && (hi - 1.25).abs() < 1e-15);
        // unbiased supports are symmetric
        let d = quantization_density(0, false);
        assert_eq!(d.support(), (-15.0 / 8.0, 15.0 / 8.0));
        assert_eq!(d.c, 0.0);
    }
}
