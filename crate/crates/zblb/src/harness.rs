//! Monte Carlo experiment engine: synthetic block generation, bias and
//! distribution experiments, error-field autocorrelation, and bit-plane
//! randomness statistics. All experiments are seeded and chunked so
//! results are byte-identical regardless of worker count.

use crate::bias::{predict_total_bias, BiasError, BiasPrediction};
use crate::bitplane::decompose;
use crate::codec::{
    beta_for_tolerance, compress_block, decompress_block, exponent_index, step2_forward,
    CodecConfig, CodecError,
};
use crate::transform::{forward_lossy, sequency_permutation, L_INV_NUM};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("field is constant; autocorrelation is undefined")]
    DegenerateField,
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Bias(#[from] BiasError),
}

/// Trials per RNG substream. Chunk `c` always uses stream `c`, so the
/// trial sequence does not depend on how chunks map to threads.
const CHUNK: u64 = 4096;

/// Deterministic generator for one substream of a seeded experiment.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Parameters of one synthetic-block population.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SyntheticBlockSpec {
    pub d: u8,
    pub e_min: i32,
    /// Exponent range `rho = e_max - e_min`.
    pub rho: u32,
    pub trials: u64,
    pub seed: u64,
}

/// Truncate a value's significand to `k` bits toward zero so the input
/// is exactly representable at the stated precision.
pub fn snap_to_k(x: f64, k: u32) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let (m, e) = decompose(x);
    let width = 64 - m.unsigned_abs().leading_zeros();
    if width <= k {
        return x;
    }
    let drop = width - k;
    let mag = (m.unsigned_abs() >> drop) << drop;
    (if m < 0 { -(mag as f64) } else { mag as f64 }) * (e as f64).exp2()
}

/// Draw one block: one magnitude per exponent subinterval, uniform within
/// the subinterval, random signs, shuffled positions, snapped to `k` bits.
/// `rho = 0` collapses every subinterval; we draw from the single binade
/// `[2^{e_min}, 2^{e_min+1})` in that case.
pub fn gen_block(spec: &SyntheticBlockSpec, k: u32, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = 4usize.pow(spec.d as u32);
    let mut block: Vec<f64> = (1..=n)
        .map(|h| {
            let (lo, hi) = if spec.rho == 0 {
                (spec.e_min as f64, (spec.e_min + 1) as f64)
            } else {
                let step = spec.rho as f64 / n as f64;
                (spec.e_min as f64 + (h - 1) as f64 * step, spec.e_min as f64 + h as f64 * step)
            };
            let mag = rng.gen_range(lo.exp2()..hi.exp2());
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            snap_to_k(sign * mag, k)
        })
        .collect();
    block.shuffle(rng);
    block
}

/// Per-element running mean and variance (Welford), mergeable.
#[derive(Debug, Clone, Serialize)]
pub struct TrialStats {
    pub count: u64,
    pub mean: Vec<f64>,
    m2: Vec<f64>,
}

impl TrialStats {
    pub fn new(n: usize) -> Self {
        TrialStats { count: 0, mean: vec![0.0; n], m2: vec![0.0; n] }
    }

    pub fn push(&mut self, sample: &[f64]) {
        self.count += 1;
        let c = self.count as f64;
        for (i, &x) in sample.iter().enumerate() {
            let d = x - self.mean[i];
            self.mean[i] += d / c;
            self.m2[i] += d * (x - self.mean[i]);
        }
    }

    pub fn merge(&mut self, other: &TrialStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * nb / n;
            self.m2[i] += other.m2[i] + d * d * na * nb / n;
        }
        self.count += other.count;
    }

    pub fn variance(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![0.0; self.mean.len()];
        }
        self.m2.iter().map(|&m| m / (self.count - 1) as f64).collect()
    }

    /// Standard error of the mean, per element.
    pub fn std_err(&self) -> Vec<f64> {
        let v = self.variance();
        v.iter().map(|&x| (x / self.count as f64).sqrt()).collect()
    }
}

fn map_chunks<T, F>(trials: u64, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, ChaCha8Rng, u64) -> T + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(trials - c * CHUNK);
            f(c, rng_for(seed, c), count)
        })
        .collect()
}

/// Result of a bias experiment at one `(spec, cfg)` point.
#[derive(Debug, Clone, Serialize)]
pub struct BiasReport {
    pub spec: SyntheticBlockSpec,
    pub config: CodecConfig,
    /// Observed mean error per element.
    pub observed_mean: Vec<f64>,
    pub observed_std_err: Vec<f64>,
    /// Predicted mean, averaged over per-trial block exponents.
    pub predicted_mean: Vec<f64>,
    /// `observed / predicted`; NaN where the prediction is zero.
    pub ratio: Vec<f64>,
    pub relative_error: Vec<f64>,
    /// Elements whose observed mean sits below the representability
    /// floor `2^{e_max - k}` (reported, never silently zeroed).
    pub floor_masked: Vec<bool>,
    pub trials: u64,
}

/// Compress/decompress `spec.trials` synthetic blocks and compare the
/// per-element mean error against the closed-form prediction.
pub fn run_bias_experiment(
    spec: &SyntheticBlockSpec,
    cfg: &CodecConfig,
) -> Result<BiasReport, HarnessError> {
    cfg.validate()?;
    let n = cfg.block_len();
    predict_total_bias(cfg, spec.e_min + spec.rho as i32)?; // validate d up front
    let parts = map_chunks(spec.trials, spec.seed, |_, mut rng, count| {
        let mut err = TrialStats::new(n);
        let mut mu = TrialStats::new(n);
        for _ in 0..count {
            let block = gen_block(spec, cfg.k as u32, &mut rng);
            let cb = compress_block(&block, cfg).expect("synthetic block in range");
            let out = decompress_block(&cb, cfg);
            let delta: Vec<f64> = out.iter().zip(&block).map(|(o, b)| o - b).collect();
            err.push(&delta);
            let pred = predict_total_bias(cfg, cb.e_max as i32).unwrap();
            mu.push(&pred.per_element_mean);
        }
        (err, mu)
    });
    let mut err = TrialStats::new(n);
    let mut mu = TrialStats::new(n);
    for (e, m) in &parts {
        err.merge(e);
        mu.merge(m);
    }
    let floor = ((spec.e_min + spec.rho as i32 - cfg.k as i32) as f64).exp2();
    let ratio: Vec<f64> =
        err.mean.iter().zip(&mu.mean).map(|(&o, &p)| o / p).collect();
    let relative_error: Vec<f64> = err
        .mean
        .iter()
        .zip(&mu.mean)
        .map(|(&o, &p)| if p == 0.0 { f64::NAN } else { (o - p).abs() / p.abs() })
        .collect();
    let floor_masked: Vec<bool> = err.mean.iter().map(|&o| o.abs() < floor).collect();
    Ok(BiasReport {
        spec: *spec,
        config: *cfg,
        observed_std_err: err.std_err(),
        observed_mean: err.mean,
        predicted_mean: mu.mean,
        ratio,
        relative_error,
        floor_masked,
        trials: spec.trials,
    })
}

/// Closed-form prediction at the nominal exponent, for report echoing.
pub fn nominal_prediction(
    spec: &SyntheticBlockSpec,
    cfg: &CodecConfig,
) -> Result<BiasPrediction, HarnessError> {
    Ok(predict_total_bias(cfg, spec.e_min + spec.rho as i32)?)
}

/// One per-position histogram of normalized errors.
#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        Histogram { lo, hi, counts: vec![0; bins] }
    }

    pub fn push(&mut self, x: f64) {
        let b = ((x - self.lo) / (self.hi - self.lo) * self.counts.len() as f64).floor();
        if b >= 0.0 && (b as usize) < self.counts.len() {
            self.counts[b as usize] += 1;
        }
    }

    pub fn merge(&mut self, other: &Histogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }
}

/// Result of a distribution experiment: per-position moments and
/// histograms of the error normalized by the quantization step
/// `Delta = 2^{l + eta + 1}`.
#[derive(Debug, Clone, Serialize)]
pub struct DistributionReport {
    pub spec: SyntheticBlockSpec,
    pub config: CodecConfig,
    pub tolerance: f64,
    pub stats: TrialStats,
    pub histograms: Vec<Histogram>,
    pub trials: u64,
}

/// Compress 1-d blocks at a per-block precision chosen from an absolute
/// tolerance, and collect the distribution of the normalized error at
/// each of the four positions.
pub fn run_distribution_experiment(
    spec: &SyntheticBlockSpec,
    cfg: &CodecConfig,
    tolerance: f64,
) -> Result<DistributionReport, HarnessError> {
    cfg.validate()?;
    if spec.d != 1 || cfg.d != 1 {
        return Err(HarnessError::Codec(CodecError::Config(
            "distribution experiment is defined for d = 1".into(),
        )));
    }
    let bins = 120;
    let (lo, hi) = (-3.0, 3.0);
    let parts = map_chunks(spec.trials, spec.seed, |_, mut rng, count| {
        let mut stats = TrialStats::new(4);
        let mut hists = vec![Histogram::new(lo, hi, bins); 4];
        for _ in 0..count {
            let block = gen_block(spec, cfg.k as u32, &mut rng);
            let e_max = block.iter().filter_map(|&x| exponent_index(x)).max().unwrap();
            let beta = beta_for_tolerance(tolerance, e_max, cfg);
            let c = CodecConfig { beta, ..*cfg };
            let l = e_max - cfg.q as i32 + 1;
            let delta_step = ((l + c.eta() + 1) as f64).exp2();
            let cb = compress_block(&block, &c).expect("synthetic block in range");
            let out = decompress_block(&cb, &c);
            let norm: Vec<f64> =
                out.iter().zip(&block).map(|(o, b)| (o - b) / delta_step).collect();
            stats.push(&norm);
            for (h, &x) in hists.iter_mut().zip(&norm) {
                h.push(x);
            }
        }
        (stats, hists)
    });
    let mut stats = TrialStats::new(4);
    let mut histograms = vec![Histogram::new(lo, hi, bins); 4];
    for (s, hs) in &parts {
        stats.merge(s);
        for (a, b) in histograms.iter_mut().zip(hs) {
            a.merge(b);
        }
    }
    Ok(DistributionReport {
        spec: *spec,
        config: *cfg,
        tolerance,
        stats,
        histograms,
        trials: spec.trials,
    })
}

/// Draw one normalized quantization-error vector directly from the
/// model: `Y_i` i.i.d. uniform (biased `(-2/3, 1/3)`, unbiased
/// `(-1/2, 1/2)`), pushed through the inverse transform.
pub fn sample_quantization_error(biased: bool, rng: &mut ChaCha8Rng) -> [f64; 4] {
    let (lo, hi) = if biased { (-2.0 / 3.0, 1.0 / 3.0) } else { (-0.5, 0.5) };
    let y: [f64; 4] = std::array::from_fn(|_| rng.gen_range(lo..hi));
    std::array::from_fn(|i| {
        (0..4).map(|j| L_INV_NUM[i][j] as f64 * y[j]).sum::<f64>() / 4.0
    })
}

// ---------------------------------------------------------------------
// Autocorrelation
// ---------------------------------------------------------------------

fn fft_axes(data: &mut [Complex<f64>], dims: [usize; 3], inverse: bool) {
    let mut planner = FftPlanner::new();
    for axis in 0..3 {
        let n = dims[axis];
        if n <= 1 {
            continue;
        }
        let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
        let stride = dims[..axis].iter().product::<usize>();
        let lines: usize = data.len() / n;
        let mut buf = vec![Complex::default(); n];
        for line in 0..lines {
            // index of element j on this line: decompose line into
            // (inner, outer) around the axis
            let inner = line % stride.max(1);
            let outer = line / stride.max(1);
            let base = outer * stride * n + inner;
            for (j, b) in buf.iter_mut().enumerate() {
                *b = data[base + j * stride.max(1)];
            }
            fft.process(&mut buf);
            for (j, b) in buf.iter().enumerate() {
                data[base + j * stride.max(1)] = *b;
            }
        }
    }
}

/// Circular autocorrelation of a standardized field via the FFT:
/// `g = (x - mean)/sigma`, `R = IFFT(|FFT(g)|^2)`, normalized so the
/// zero-lag value is exactly 1.
pub fn autocorrelation(field: &[f64], dims: [usize; 3]) -> Result<Vec<f64>, HarnessError> {
    let n: usize = dims.iter().product();
    assert_eq!(field.len(), n);
    let mean = field.iter().sum::<f64>() / n as f64;
    let var = field.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return Err(HarnessError::DegenerateField);
    }
    let sigma = var.sqrt();
    let mut data: Vec<Complex<f64>> =
        field.iter().map(|&x| Complex::new((x - mean) / sigma, 0.0)).collect();
    fft_axes(&mut data, dims, false);
    for v in data.iter_mut() {
        *v = Complex::new(v.norm_sqr(), 0.0);
    }
    fft_axes(&mut data, dims, true);
    let center = data[0].re;
    Ok(data.iter().map(|v| v.re / center).collect())
}

/// Direct O(n^2) circular correlation (test oracle for the FFT path).
pub fn autocorrelation_direct(field: &[f64], dims: [usize; 3]) -> Result<Vec<f64>, HarnessError> {
    let n: usize = dims.iter().product();
    assert_eq!(field.len(), n);
    let mean = field.iter().sum::<f64>() / n as f64;
    let var = field.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return Err(HarnessError::DegenerateField);
    }
    let g: Vec<f64> = field.iter().map(|&x| (x - mean) / var.sqrt()).collect();
    let idx = |c: [usize; 3]| (c[2] * dims[1] + c[1]) * dims[0] + c[0];
    let mut out = vec![0.0; n];
    for lz in 0..dims[2] {
        for ly in 0..dims[1] {
            for lx in 0..dims[0] {
                let mut acc = 0.0;
                for z in 0..dims[2] {
                    for y in 0..dims[1] {
                        for x in 0..dims[0] {
                            let shifted =
                                [(x + lx) % dims[0], (y + ly) % dims[1], (z + lz) % dims[2]];
                            acc += g[idx([x, y, z])] * g[idx(shifted)];
                        }
                    }
                }
                out[idx([lx, ly, lz])] = acc;
            }
        }
    }
    let center = out[0];
    for v in out.iter_mut() {
        *v /= center;
    }
    Ok(out)
}

/// 2-norm of an autocorrelation field excluding the zero-lag sample.
pub fn autocorrelation_norm(r: &[f64]) -> f64 {
    r.iter().skip(1).map(|&x| x * x).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------
// Bit-plane randomness
// ---------------------------------------------------------------------

/// One-bit frequencies of negabinary coefficients through Step 5,
/// per coefficient rank and bit index, bucketed by active width.
#[derive(Debug, Clone, Serialize)]
pub struct BitStats {
    pub q: u8,
    /// `ones[c][i]`: number of blocks whose rank-`c` coefficient has a
    /// one at negabinary index `i` (`i` in `0..=q+1`).
    pub ones: Vec<Vec<u64>>,
    /// Blocks counted (all-zero blocks are excluded).
    pub blocks: u64,
    /// Active-width buckets: width -> (per-index one counts summed over
    /// all coefficients of that width, number of such coefficients).
    pub by_width: BTreeMap<u32, (Vec<u64>, u64)>,
}

impl BitStats {
    /// One-bit frequency for coefficient rank `c` at bit index `i`.
    pub fn frequency(&self, c: usize, i: usize) -> f64 {
        self.ones[c][i] as f64 / self.blocks as f64
    }
}

/// Run the pipeline through negabinary conversion on each block and
/// tabulate one-bit frequencies.
pub fn bitplane_randomness(blocks: &[Vec<f64>], cfg: &CodecConfig) -> Result<BitStats, HarnessError> {
    cfg.validate()?;
    let n = cfg.block_len();
    let width = cfg.q as usize + 2;
    let perm = sequency_permutation(cfg.d);
    let mut ones = vec![vec![0u64; width]; n];
    let mut by_width: BTreeMap<u32, (Vec<u64>, u64)> = BTreeMap::new();
    let mut counted = 0u64;
    for block in blocks {
        let Some((mut coeffs, _)) = step2_forward(block, cfg, true) else { continue };
        counted += 1;
        forward_lossy(&mut coeffs, cfg.d);
        for (c, &p) in perm.iter().enumerate() {
            let neg = crate::bitplane::negabinary_encode(coeffs[p]);
            let w = 128 - neg.leading_zeros();
            let bucket = by_width.entry(w).or_insert_with(|| (vec![0; width], 0));
            bucket.1 += 1;
            for i in 0..width {
                let bit = ((neg >> i) & 1) as u64;
                ones[c][i] += bit;
                bucket.0[i] += bit;
            }
        }
    }
    Ok(BitStats { q: cfg.q, ones, blocks: counted, by_width })
}
