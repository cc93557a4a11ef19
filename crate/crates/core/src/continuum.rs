//! Continuous samples seen through uniform bins.
//!
//! Maxwell velocities have density `∝ exp(-α v²)`, so each Cartesian
//! component is an independent centred normal with variance `1/(2α)`. The
//! report here checks, from samples alone, that the components carry no
//! mutual information and that directions are isotropic. [`bin_sweep`] shows
//! the plug-in entropy of a binned continuous variable growing like `-ln Δ`
//! as the bin width `Δ` shrinks.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dist::{JointDist, Marginal, NormalizeMode};
use crate::entropy::{entropy, mutual_information, EntropyError};
use crate::sum::compensated_sum;

/// Identifier recorded in report metadata for every sampled stream: ChaCha8
/// keyed by the seed, one ChaCha stream id per component, 53-bit uniforms
/// `(u64 >> 11) * 2^-53`, Marsaglia polar method for normals.
pub const RNG_ALGORITHM: &str = "chacha8-stream/u53/marsaglia-polar";

/// Speed histogram resolution for the modal-speed estimate.
pub const SPEED_BINS: usize = 200;
/// Half-width, in units of `1/√α`, of the window around the modal speed bin
/// used to fit the peak parabola.
pub const MODE_WINDOW: f64 = 0.2;
/// Bins used for the cos θ and φ uniformity checks.
pub const ANGULAR_BINS: usize = 36;
/// Velocity bins span ±this many standard deviations.
pub const VELOCITY_RANGE_SIGMAS: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContinuumError {
    #[error("alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("need at least one sample")]
    EmptyInput,
    #[error("sample streams have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("invalid bin spec: lo = {lo}, hi = {hi}, bins = {bins}")]
    InvalidBins { lo: f64, hi: f64, bins: usize },
    #[error("bin counts must be strictly ascending and at least 2")]
    NonAscendingBinCounts,
    #[error("at least {min} bins required, got {got}")]
    TooFewBins { min: usize, got: usize },
    #[error(transparent)]
    Entropy(#[from] EntropyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxwellParams {
    pub alpha: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl MaxwellParams {
    pub fn new(alpha: f64, n_samples: usize, seed: u64) -> Result<Self, ContinuumError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(ContinuumError::InvalidAlpha(alpha));
        }
        if n_samples == 0 {
            return Err(ContinuumError::EmptyInput);
        }
        Ok(MaxwellParams {
            alpha,
            n_samples,
            seed,
        })
    }

    /// Per-component standard deviation `sqrt(1 / 2α)`.
    pub fn component_sigma(&self) -> f64 {
        (0.5 / self.alpha).sqrt()
    }
}

/// Three equal-length velocity component streams.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSet {
    vx: Vec<f64>,
    vy: Vec<f64>,
    vz: Vec<f64>,
}

impl SampleSet {
    pub fn new(vx: Vec<f64>, vy: Vec<f64>, vz: Vec<f64>) -> Result<Self, ContinuumError> {
        if vx.len() != vy.len() {
            return Err(ContinuumError::LengthMismatch(vx.len(), vy.len()));
        }
        if vx.len() != vz.len() {
            return Err(ContinuumError::LengthMismatch(vx.len(), vz.len()));
        }
        for v in [&vx, &vy, &vz] {
            check_finite(v)?;
        }
        Ok(SampleSet { vx, vy, vz })
    }

    pub fn len(&self) -> usize {
        self.vx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vx.is_empty()
    }

    pub fn vx(&self) -> &[f64] {
        &self.vx
    }

    pub fn vy(&self) -> &[f64] {
        &self.vy
    }

    pub fn vz(&self) -> &[f64] {
        &self.vz
    }
}

fn check_finite(xs: &[f64]) -> Result<(), ContinuumError> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(ContinuumError::NonFinite(i)),
        None => Ok(()),
    }
}

/// Uniform bins of width `(hi - lo) / bins` over `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinSpec {
    lo: f64,
    hi: f64,
    bins: usize,
}

impl BinSpec {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self, ContinuumError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi && bins >= 2) || !((hi - lo) / bins as f64 > 0.0) {
            return Err(ContinuumError::InvalidBins { lo, hi, bins });
        }
        Ok(BinSpec { lo, hi, bins })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn midpoint(&self, bin: usize) -> f64 {
        self.lo + (bin as f64 + 0.5) * self.width()
    }

    /// Bin index, and whether the value fell outside `[lo, hi]` and was
    /// clamped to an edge bin.
    pub fn locate(&self, x: f64) -> (usize, bool) {
        if x < self.lo {
            return (0, true);
        }
        if x > self.hi {
            return (self.bins - 1, true);
        }
        let idx = ((x - self.lo) / self.width()).floor() as usize;
        (idx.min(self.bins - 1), false)
    }
}

/// Deterministic standard-normal generator (Marsaglia polar method).
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        NormalStream { rng, spare: None }
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * unit_uniform(&mut self.rng) - 1.0;
            let v = 2.0 * unit_uniform(&mut self.rng) - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let scale = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * scale);
                return u * scale;
            }
        }
    }
}

/// Uniform on `[0, 1)` with 53 random bits.
fn unit_uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `n` standard normals from ChaCha stream `stream` under `seed`.
pub fn standard_normals(seed: u64, stream: u64, n: usize) -> Vec<f64> {
    let mut g = NormalStream::new(seed, stream);
    (0..n).map(|_| g.next_normal()).collect()
}

/// `n` uniforms on `[0, 1)` from ChaCha stream `stream` under `seed`.
pub fn uniform_samples(seed: u64, stream: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..n).map(|_| unit_uniform(&mut rng)).collect()
}

/// Velocity components drawn independently from `N(0, 1/(2α))`.
pub fn sample_maxwell(params: &MaxwellParams) -> SampleSet {
    let sigma = params.component_sigma();
    let component = |stream| {
        standard_normals(params.seed, stream, params.n_samples)
            .into_iter()
            .map(|z| z * sigma)
            .collect::<Vec<_>>()
    };
    SampleSet {
        vx: component(0),
        vy: component(1),
        vz: component(2),
    }
}

/// Binned pairs: the normalized joint plus the raw counts behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedJoint {
    pub joint: JointDist,
    /// Row-major `bx.bins() × by.bins()` counts.
    pub counts: Vec<u64>,
    pub total: u64,
    /// Pairs where either coordinate was clamped into an edge bin.
    pub clamped: u64,
}

pub fn bin_joint(x: &[f64], y: &[f64], bx: &BinSpec, by: &BinSpec) -> Result<BinnedJoint, ContinuumError> {
    if x.is_empty() {
        return Err(ContinuumError::EmptyInput);
    }
    if x.len() != y.len() {
        return Err(ContinuumError::LengthMismatch(x.len(), y.len()));
    }
    check_finite(x)?;
    check_finite(y)?;
    let mut counts = vec![0u64; bx.bins * by.bins];
    let mut clamped = 0u64;
    for (&a, &b) in x.iter().zip(y) {
        let (i, ca) = bx.locate(a);
        let (j, cb) = by.locate(b);
        counts[i * by.bins + j] += 1;
        clamped += u64::from(ca || cb);
    }
    let total = x.len() as u64;
    let joint = JointDist::from_row_major(
        bx.bins,
        by.bins,
        counts.iter().map(|&c| c as f64).collect(),
        NormalizeMode::Renormalize,
    )
    .expect("counts are nonnegative with a positive total");
    Ok(BinnedJoint {
        joint,
        counts,
        total,
        clamped,
    })
}

/// Histogram of a single stream, normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedMarginal {
    pub dist: Marginal,
    pub counts: Vec<u64>,
    pub clamped: u64,
}

pub fn bin_marginal(x: &[f64], spec: &BinSpec) -> Result<BinnedMarginal, ContinuumError> {
    if x.is_empty() {
        return Err(ContinuumError::EmptyInput);
    }
    check_finite(x)?;
    let mut counts = vec![0u64; spec.bins];
    let mut clamped = 0u64;
    for &v in x {
        let (i, c) = spec.locate(v);
        counts[i] += 1;
        clamped += u64::from(c);
    }
    let dist = Marginal::new(counts.iter().map(|&c| c as f64).collect(), NormalizeMode::Renormalize)
        .expect("counts are nonnegative with a positive total");
    Ok(BinnedMarginal {
        dist,
        counts,
        clamped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxwellReport {
    pub mi_xy: f64,
    pub mi_xz: f64,
    pub mi_yz: f64,
    pub speed_mode: f64,
    /// Larger of the cos θ and φ deviations.
    pub angular_deviation: f64,
    pub cos_theta_deviation: f64,
    pub phi_deviation: f64,
    /// Pooled per-component standard deviation estimated from the samples.
    pub sigma_hat: f64,
    /// Samples clamped into edge bins across the three pairwise joints.
    pub clamped: u64,
}

/// Check both Maxwell assumptions on a sample set: pairwise binned mutual
/// information between components (independence) and uniformity of the
/// direction angles (isotropy), plus the mode of the speed histogram.
///
/// Velocity bins span ±6σ̂, and the speed histogram spans `(0, 5/√α̂)` with
/// `α̂ = 1/(2σ̂²)`, where σ̂ is the pooled component standard deviation. The
/// modal speed is the peak of a parabola fitted to the histogram around its
/// tallest bin; the raw tallest bin alone scatters by several bin widths at
/// n = 10⁶.
pub fn maxwell_assumption_report(s: &SampleSet, bins: usize) -> Result<MaxwellReport, ContinuumError> {
    if s.is_empty() {
        return Err(ContinuumError::EmptyInput);
    }
    if bins < 10 {
        return Err(ContinuumError::TooFewBins { min: 10, got: bins });
    }
    let n = s.len() as f64;
    let comps = [s.vx(), s.vy(), s.vz()];
    let mean = compensated_sum(comps.iter().flat_map(|c| c.iter().copied())) / (3.0 * n);
    let var = compensated_sum(comps.iter().flat_map(|c| c.iter().map(|v| (v - mean).powi(2)))) / (3.0 * n);
    let sigma_hat = var.sqrt();
    if !(sigma_hat > 0.0) {
        return Err(ContinuumError::InvalidBins {
            lo: mean,
            hi: mean,
            bins,
        });
    }

    let half = VELOCITY_RANGE_SIGMAS * sigma_hat;
    let spec = BinSpec::new(-half, half, bins)?;
    let mut clamped = 0;
    let mut mi = |a: &[f64], b: &[f64]| -> Result<f64, ContinuumError> {
        let bj = bin_joint(a, b, &spec, &spec)?;
        clamped += bj.clamped;
        Ok(mutual_information(&bj.joint)?.nats())
    };
    let mi_xy = mi(s.vx(), s.vy())?;
    let mi_xz = mi(s.vx(), s.vz())?;
    let mi_yz = mi(s.vy(), s.vz())?;

    let mut speeds = Vec::with_capacity(s.len());
    let mut cos_theta = Vec::with_capacity(s.len());
    let mut phi = Vec::with_capacity(s.len());
    for ((&x, &y), &z) in s.vx.iter().zip(&s.vy).zip(&s.vz) {
        let v = (x * x + y * y + z * z).sqrt();
        speeds.push(v);
        if v > 0.0 {
            cos_theta.push(z / v);
            phi.push(y.atan2(x));
        }
    }

    let alpha_hat = 0.5 / var;
    let speed_spec = BinSpec::new(0.0, 5.0 / alpha_hat.sqrt(), SPEED_BINS)?;
    let speed_hist = bin_marginal(&speeds, &speed_spec)?;
    let modal = speed_hist
        .counts
        .iter()
        .enumerate()
        .max_by_key(|&(i, &c)| (c, std::cmp::Reverse(i)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let speed_mode = refine_mode(
        &speed_hist.counts,
        &speed_spec,
        speed_spec.midpoint(modal),
        MODE_WINDOW / alpha_hat.sqrt(),
    );

    let uniformity = |xs: &[f64], spec: BinSpec| -> Result<f64, ContinuumError> {
        let h = bin_marginal(xs, &spec)?;
        let target = 1.0 / spec.bins() as f64;
        Ok(h.dist.probs().iter().map(|p| (p - target).abs()).fold(0.0, f64::max))
    };
    let cos_theta_deviation = uniformity(&cos_theta, BinSpec::new(-1.0, 1.0, ANGULAR_BINS)?)?;
    let phi_deviation = uniformity(&phi, BinSpec::new(-PI, PI, ANGULAR_BINS)?)?;

    Ok(MaxwellReport {
        mi_xy,
        mi_xz,
        mi_yz,
        speed_mode,
        angular_deviation: cos_theta_deviation.max(phi_deviation),
        cos_theta_deviation,
        phi_deviation,
        sigma_hat,
        clamped,
    })
}

/// Vertex of the least-squares parabola through the histogram counts whose
/// bin midpoints lie within `window` of the current peak estimate, recentred
/// twice. Falls back to `start` when the fit is not a downward parabola.
fn refine_mode(counts: &[u64], spec: &BinSpec, start: f64, window: f64) -> f64 {
    let mut centre = start;
    for _ in 0..2 {
        let pts: Vec<(f64, f64)> = (0..spec.bins())
            .map(|b| (spec.midpoint(b) - centre, counts[b] as f64))
            .filter(|(dx, _)| dx.abs() <= window)
            .collect();
        if pts.len() < 3 {
            return start;
        }
        // Normal equations for c0 + c1 dx + c2 dx².
        let mut ata = Matrix3::zeros();
        let mut atb = Vector3::zeros();
        for &(dx, y) in &pts {
            let row = Vector3::new(1.0, dx, dx * dx);
            ata += row * row.transpose();
            atb += row * y;
        }
        let Some(c) = ata.lu().solve(&atb) else {
            return start;
        };
        if !(c[2] < 0.0) {
            return start;
        }
        let vertex = -c[1] / (2.0 * c[2]);
        if vertex.abs() > window {
            return start;
        }
        centre += vertex;
    }
    centre
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub bins: usize,
    pub delta: f64,
    pub s_binned: f64,
    /// `s_binned + ln Δ`.
    pub s_corrected: f64,
    pub clamped: u64,
}

/// Plug-in entropy of `x` at each bin count over a fixed range.
pub fn bin_sweep(x: &[f64], bin_counts: &[usize], range: (f64, f64)) -> Result<Vec<SweepRow>, ContinuumError> {
    if x.is_empty() {
        return Err(ContinuumError::EmptyInput);
    }
    if bin_counts.is_empty()
        || bin_counts[0] < 2
        || bin_counts.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(ContinuumError::NonAscendingBinCounts);
    }
    bin_counts
        .iter()
        .map(|&bins| {
            let spec = BinSpec::new(range.0, range.1, bins)?;
            let h = bin_marginal(x, &spec)?;
            let delta = spec.width();
            let s_binned = entropy(&h.dist).nats();
            Ok(SweepRow {
                bins,
                delta,
                s_binned,
                s_corrected: s_binned + delta.ln(),
                clamped: h.clamped,
            })
        })
        .collect()
}

/// Differential entropy `½ ln(2πe σ²)` of a normal density.
pub fn normal_differential_entropy(sigma: f64) -> f64 {
    0.5 * (2.0 * PI * std::f64::consts::E * sigma * sigma).ln()
}
