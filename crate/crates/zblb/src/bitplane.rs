//! Finite-precision model of the signed-binary space `B_k` and the
//! negabinary (base −2) space `N_k`.
//!
//! A [`BitVector`] stores bits over the fixed index window `[-64, 63]`,
//! which is wide enough for every value the pipeline produces (q <= 62,
//! shifts bounded by construction). Signed-binary vectors carry a sign
//! bit; negabinary vectors are signless, the sign being encoded in the
//! bit pattern itself.

use thiserror::Error;

/// Lowest representable bit index.
pub const WINDOW_LO: i32 = -64;
/// Highest representable bit index.
pub const WINDOW_HI: i32 = 63;

/// Odd bit positions of a 128-bit word. With the window anchored at the
/// even index −64, these are exactly the odd bit *indices*, i.e. the
/// positions that weigh `-(2^i)` in negabinary.
const ODD: u128 = 0xAAAA_AAAA_AAAA_AAAA_AAAA_AAAA_AAAA_AAAA;

/// Encode a two's-complement integer as a negabinary bit pattern
/// (bit `j` weighs `(-2)^j`).
///
/// This is the closed form of the canonical repeated-division-by-−2
/// encoding: adding the all-odd-bits mask carries every negative weight
/// into the positive row above it, and the xor undoes the additive shift.
#[inline]
pub fn negabinary_encode(v: i128) -> u128 {
    (v as u128).wrapping_add(ODD) ^ ODD
}

/// Decode a negabinary bit pattern back to a two's-complement integer.
#[inline]
pub fn negabinary_decode(b: u128) -> i128 {
    ((b & !ODD) as i128).wrapping_sub((b & ODD) as i128)
}

#[derive(Debug, Error, PartialEq)]
pub enum BitplaneError {
    /// The value has no finite representation inside the index window.
    #[error("value {0} is not a dyadic rational representable in [-64, 63]")]
    NonDyadicInput(f64),
    /// Exponent queries are undefined for zero.
    #[error("exponents are undefined for the zero vector")]
    ZeroInput,
    /// `convert` requires an integer-valued input.
    #[error("conversion requires an integer-valued bit vector")]
    NotInteger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Base {
    SignedBinary,
    Negabinary,
}

/// Largest/smallest active bit index of a vector or block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExponentInfo {
    pub e_max: i32,
    pub e_min: i32,
}

impl ExponentInfo {
    /// Inclusive exponent width `rho = e_max - e_min`.
    pub fn range(&self) -> i32 {
        self.e_max - self.e_min
    }
}

/// A finite-support signed-binary or negabinary bit sequence.
///
/// Zero is canonical: empty bit set and positive sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitVector {
    base: Base,
    negative: bool,
    bits: u128,
}

/// Split a finite f64 into `(m, e)` with `x = m * 2^e` exactly.
pub(crate) fn decompose(x: f64) -> (i64, i32) {
    assert!(x.is_finite());
    let bits = x.abs().to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mag, e) = if biased == 0 {
        (frac as i64, -1074)
    } else {
        ((frac | (1u64 << 52)) as i64, biased - 1075)
    };
    (if x < 0.0 { -mag } else { mag }, e)
}

impl BitVector {
    pub fn zero(base: Base) -> Self {
        BitVector { base, negative: false, bits: 0 }
    }

    pub fn base(&self) -> Base {
        self.base
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    /// Construct from explicit bit indices; panics if an index is outside
    /// the window (only the conversion maps can fail on user data).
    pub fn from_indices<I: IntoIterator<Item = i32>>(base: Base, negative: bool, idx: I) -> Self {
        let mut bits = 0u128;
        for i in idx {
            assert!((WINDOW_LO..=WINDOW_HI).contains(&i), "bit index {i} out of window");
            bits |= 1u128 << (i - WINDOW_LO);
        }
        let negative = negative && bits != 0 && base == Base::SignedBinary;
        BitVector { base, negative, bits }
    }

    pub fn bit(&self, i: i32) -> bool {
        if !(WINDOW_LO..=WINDOW_HI).contains(&i) {
            return false;
        }
        self.bits >> (i - WINDOW_LO) & 1 == 1
    }

    /// Active bit indices, ascending.
    pub fn indices(&self) -> impl Iterator<Item = i32> + '_ {
        (WINDOW_LO..=WINDOW_HI).filter(|&i| self.bit(i))
    }

    /// The map `f_B` / `f_N`: the exact real value of the vector.
    ///
    /// Exact as long as the active width is at most 53 bits (always true
    /// for `B_k`/`N_k` values with k <= 53).
    pub fn to_real(&self) -> f64 {
        let mut acc = 0.0f64;
        for i in self.indices() {
            let w = (i as f64).exp2();
            acc += match self.base {
                Base::SignedBinary => w,
                // (-2)^i = (-1)^i 2^i, also for negative i.
                Base::Negabinary => {
                    if i.rem_euclid(2) == 0 {
                        w
                    } else {
                        -w
                    }
                }
            };
        }
        if self.negative {
            -acc
        } else {
            acc
        }
    }

    /// Inverse of [`to_real`](Self::to_real) for exactly representable x.
    pub fn from_real(x: f64, base: Base) -> Result<Self, BitplaneError> {
        if x == 0.0 {
            return Ok(Self::zero(base));
        }
        if !x.is_finite() {
            return Err(BitplaneError::NonDyadicInput(x));
        }
        let (m, e) = decompose(x);
        let tz = m.trailing_zeros() as i32;
        let (m, e) = (m >> tz, e + tz);
        let top = e + (63 - m.abs().leading_zeros() as i32);
        if e < WINDOW_LO || top > WINDOW_HI {
            return Err(BitplaneError::NonDyadicInput(x));
        }
        match base {
            Base::SignedBinary => {
                let bits = (m.unsigned_abs() as u128) << (e - WINDOW_LO);
                Ok(BitVector { base, negative: m < 0, bits })
            }
            Base::Negabinary => {
                // A pattern shifted to offset e represents (-2)^e * n, so
                // encode n = m * (-1)^e to land on m * 2^e.
                let n = if e.rem_euclid(2) == 0 { m as i128 } else { -(m as i128) };
                let nb = negabinary_encode(n);
                if nb >> (WINDOW_HI - e + 1).min(127) != 0 {
                    return Err(BitplaneError::NonDyadicInput(x));
                }
                Ok(BitVector { base, negative: false, bits: nb << (e - WINDOW_LO) })
            }
        }
    }

    /// The truncation operator `t_S` with `S = { i : i > eta }`: zeroes
    /// every bit at index <= eta. Idempotent.
    pub fn truncate(&self, eta: i32) -> Self {
        if eta < WINDOW_LO {
            return *self;
        }
        let bits = if eta >= WINDOW_HI {
            0
        } else {
            self.bits & !((1u128 << (eta - WINDOW_LO + 1)) - 1)
        };
        BitVector { base: self.base, negative: self.negative && bits != 0, bits }
    }

    /// The shift operator `s_l`: output bit `i` equals input bit `i + l`,
    /// so the signed-binary value scales by `2^{-l}`. Bits shifted out of
    /// the window are lost; pipeline shifts are bounded so this never
    /// happens in practice (debug-asserted).
    pub fn shift(&self, l: i32) -> Self {
        let bits = if l >= 0 {
            let l = l.min(127);
            debug_assert_eq!(self.bits & ((1u128 << l) - 1), 0, "shift dropped low bits");
            self.bits >> l
        } else {
            let l = (-l).min(127);
            debug_assert_eq!(self.bits >> (128 - l), 0, "shift dropped high bits");
            self.bits << l
        };
        BitVector { base: self.base, negative: self.negative && bits != 0, bits }
    }

    /// Exact integer value of an integer-valued vector.
    pub fn to_int(&self) -> Result<i128, BitplaneError> {
        if self.bits & ((1u128 << (-WINDOW_LO)) - 1) != 0 {
            return Err(BitplaneError::NotInteger);
        }
        let payload = self.bits >> (-WINDOW_LO);
        let v = match self.base {
            Base::SignedBinary => {
                let mag = payload as i128;
                if self.negative {
                    -mag
                } else {
                    mag
                }
            }
            Base::Negabinary => negabinary_decode(payload),
        };
        Ok(v)
    }

    /// Step-5 base conversion `C_5 = F_N^{-1} F_B` (and its inverse):
    /// lossless re-encoding of an integer-valued vector.
    pub fn convert(&self, target: Base) -> Result<Self, BitplaneError> {
        if self.base == target {
            return Ok(*self);
        }
        let v = self.to_int()?;
        Ok(Self::from_int(v, target))
    }

    /// Encode an integer (|v| < 2^62) in either base.
    pub fn from_int(v: i128, base: Base) -> Self {
        assert!(v.unsigned_abs() < 1 << 62, "integer out of window");
        match base {
            Base::SignedBinary => BitVector {
                base,
                negative: v < 0,
                bits: (v.unsigned_abs() as u128) << (-WINDOW_LO),
            },
            Base::Negabinary => BitVector {
                base,
                negative: false,
                bits: negabinary_encode(v) << (-WINDOW_LO),
            },
        }
    }

    /// Largest and smallest active bit index.
    pub fn exponents(&self) -> Result<ExponentInfo, BitplaneError> {
        if self.bits == 0 {
            return Err(BitplaneError::ZeroInput);
        }
        Ok(ExponentInfo {
            e_max: 127 - self.bits.leading_zeros() as i32 + WINDOW_LO,
            e_min: self.bits.trailing_zeros() as i32 + WINDOW_LO,
        })
    }
}

/// Exponent extremes over a whole block of vectors.
pub fn block_exponents(block: &[BitVector]) -> Result<ExponentInfo, BitplaneError> {
    let mut info: Option<ExponentInfo> = None;
    for v in block {
        if let Ok(e) = v.exponents() {
            info = Some(match info {
                None => e,
                Some(i) => ExponentInfo { e_max: i.e_max.max(e.e_max), e_min: i.e_min.min(e.e_min) },
            });
        }
    }
    info.ok_or(BitplaneError::ZeroInput)
}
