//! Monte Carlo sampling of Rayleigh channels: exact spectra of `K_α/M`,
//! empirical densities, and a simulation of the first-hop signal power.

use std::io::Write;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::freeprob::SpectralDensity;
use crate::linalg::{hermitian_eigenvalues, identity, CMatrix};
use crate::params::{validate_config, SystemConfig};

/// Antenna counts `(K, M, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub users: usize,
    pub relay_antennas: usize,
    pub bs_antennas: usize,
}

impl Dims {
    pub fn new(users: usize, relay_antennas: usize, bs_antennas: usize) -> Self {
        Dims {
            users,
            relay_antennas,
            bs_antennas,
        }
    }

    pub fn of(cfg: &SystemConfig) -> Self {
        Dims::new(cfg.users, cfg.relay_antennas, cfg.bs_antennas)
    }
}

/// One realization of both hops.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair {
    /// `M × K`, users to relay.
    pub h1: CMatrix,
    /// `N × M`, relay to base station.
    pub h2: CMatrix,
    pub seed: u64,
}

fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A `CN(0, 1)` draw: `(g₁ + i g₂)/√2`.
pub fn complex_normal(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_normal_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    // column-major fill so the draw order does not depend on nalgebra internals
    let data: Vec<Complex64> = (0..rows * cols).map(|_| complex_normal(rng)).collect();
    CMatrix::from_vec(rows, cols, data)
}

fn check_dims(dims: Dims) -> Result<()> {
    if dims.users == 0 || dims.relay_antennas == 0 || dims.bs_antennas == 0 {
        return Err(domain(format!("antenna counts must be positive, got {dims:?}")));
    }
    Ok(())
}

/// Draw both hops from the stream `(seed, 0)`.
pub fn sample_channel_pair(dims: Dims, seed: u64) -> Result<ChannelPair> {
    sample_channel_pair_stream(dims, seed, 0)
}

/// Draw both hops from stream `stream` of `seed`. Trial `i` of a Monte Carlo
/// run uses stream `i`, so each trial is reproducible on its own.
pub fn sample_channel_pair_stream(dims: Dims, seed: u64, stream: u64) -> Result<ChannelPair> {
    check_dims(dims)?;
    let mut rng = trial_rng(seed, stream);
    let h1 = complex_normal_matrix(dims.relay_antennas, dims.users, &mut rng);
    let h2 = complex_normal_matrix(dims.bs_antennas, dims.relay_antennas, &mut rng);
    Ok(ChannelPair { h1, h2, seed })
}

/// Eigenvalues of `K_α/M = H₂ᴴH₂(I + αH₁H₁ᴴ)/M`, ascending.
///
/// With `I + αH₁H₁ᴴ = LLᴴ` these are the eigenvalues of the Hermitian
/// `(H₂L)ᴴ(H₂L)/M`. Round-off below zero is clamped.
pub fn eigenvalues_k_alpha(pair: &ChannelPair, alpha: f64) -> Result<Vec<f64>> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(domain(format!("alpha must be non-negative, got {alpha}")));
    }
    let m = pair.h1.nrows();
    if pair.h2.ncols() != m {
        return Err(domain("H1 rows and H2 columns differ"));
    }
    let m_alpha = identity(m) + (&pair.h1 * pair.h1.adjoint()).scale(alpha);
    let l = m_alpha
        .cholesky()
        .ok_or_else(|| Error::Numerical("I + αH₁H₁ᴴ is not positive definite".into()))?
        .unpack();
    let hl = &pair.h2 * l;
    let gram = (hl.adjoint() * &hl).scale(1.0 / m as f64);
    let mut values = hermitian_eigenvalues(&gram)?;
    for v in values.iter_mut() {
        *v = v.max(0.0);
    }
    Ok(values)
}

/// Pooled eigenvalues of `K_α/M` over independent trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSampleSet {
    pub values: Vec<f64>,
    /// Trial that produced each entry of `values`.
    pub trial_index: Vec<usize>,
    pub trials: usize,
    pub dims: Dims,
    /// `M α`.
    pub alpha_bar: f64,
}

impl EigenSampleSet {
    /// `trial,eigenvalue` rows.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "trial,eigenvalue")?;
        for (t, v) in self.trial_index.iter().zip(&self.values) {
            writeln!(w, "{t},{v:e}")?;
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Eigenvalues of `K_α/M` for trials `0..trials`, evaluated in parallel and
/// pooled in trial order.
pub fn collect_eigenvalues(dims: Dims, alpha: f64, trials: usize, seed: u64) -> Result<EigenSampleSet> {
    check_dims(dims)?;
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|t| {
            let pair = sample_channel_pair_stream(dims, seed, t as u64)?;
            eigenvalues_k_alpha(&pair, alpha)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(trials * dims.relay_antennas);
    let mut trial_index = Vec::with_capacity(values.capacity());
    for (t, vals) in per_trial.into_iter().enumerate() {
        trial_index.extend(std::iter::repeat_n(t, vals.len()));
        values.extend(vals);
    }
    Ok(EigenSampleSet {
        values,
        trial_index,
        trials,
        dims,
        alpha_bar: dims.relay_antennas as f64 * alpha,
    })
}

/// Area-normalized histogram on `[min, max]` widened by 5% of the range on
/// each side. Bins are stored as midpoints with their widths as weights.
pub fn empirical_density(samples: &[f64], bins: usize) -> Result<SpectralDensity> {
    if bins < 10 {
        return Err(domain(format!("need at least 10 bins, got {bins}")));
    }
    if samples.is_empty() {
        return Err(domain("no samples"));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(domain("non-finite sample"));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let pad = if span > 0.0 { 0.05 * span } else { 0.5e-3 * lo.abs().max(1.0) };
    let (a, b) = (lo - pad, hi + pad);
    let width = (b - a) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in samples {
        let i = (((v - a) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let n = samples.len() as f64;
    let grid = (0..bins).map(|i| a + (i as f64 + 0.5) * width).collect();
    let values = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    Ok(SpectralDensity {
        grid,
        values,
        weights: vec![width; bins],
        support: (a, b),
        atoms: Vec::new(),
    })
}

/// Channel uses simulated per channel realization in
/// [`first_hop_power_check`].
pub const USES_PER_TRIAL: usize = 16;

/// Outcome of [`first_hop_power_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub trials: usize,
    /// Empirical `E|√ν y₁,m|²` per relay antenna.
    pub diagonal: Vec<f64>,
    /// `mu_tilde ν K`.
    pub expected_diagonal: f64,
    pub max_diagonal_rel_error: f64,
    pub max_off_diagonal: f64,
    /// Largest `|mean| / standard error` over the off-diagonal entries.
    pub max_off_diagonal_score: f64,
    /// Empirical `E‖√ν y₁‖²`.
    pub total_power: f64,
    pub alpha: f64,
    pub total_power_ratio: f64,
    pub passed: bool,
}

/// Simulate `y₁ = H₁(x₁ + η_t1) + η_r1 + z₁` and compare the sample
/// covariance of `√ν y₁` with `mu_tilde ν K I_M`.
///
/// Each trial draws one `H₁` and [`USES_PER_TRIAL`] channel uses with fresh
/// symbols and distortion noise. The pass criteria are: every diagonal entry
/// within 3%, every off-diagonal entry below three standard errors, and
/// total power within 2% of the relay budget.
pub fn first_hop_power_check(cfg: &SystemConfig, trials: usize, seed: u64) -> Result<PowerReport> {
    let violations = validate_config(cfg);
    if !violations.is_empty() {
        return Err(Error::InvalidConfig(violations));
    }
    if trials < 2 {
        return Err(domain("power check needs at least two trials"));
    }
    let cfg = cfg.resolved();
    let (k, m) = (cfg.users, cfg.relay_antennas);
    let d = cfg.delta;
    let mu = cfg.mu;
    let sig_x = mu.sqrt();
    let sig_t = (d.t1 * d.t1 * mu).sqrt();
    // the relay receiver distortion scales with the average received power μK
    let sig_r = (d.r1 * d.r1 * mu * k as f64).sqrt();
    let nu = cfg.nu;

    let per_trial: Vec<CMatrix> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let h1 = complex_normal_matrix(m, k, &mut rng);
            let mut acc = CMatrix::zeros(m, m);
            for _ in 0..USES_PER_TRIAL {
                let s = DVector::from_fn(k, |_, _| complex_normal(&mut rng) * sig_x)
                    + DVector::from_fn(k, |_, _| complex_normal(&mut rng) * sig_t);
                let y = &h1 * s
                    + DVector::from_fn(m, |_, _| complex_normal(&mut rng) * sig_r)
                    + DVector::from_fn(m, |_, _| complex_normal(&mut rng));
                acc += &y * y.adjoint();
            }
            acc.scale(nu / USES_PER_TRIAL as f64)
        })
        .collect();

    let n = trials as f64;
    let mut mean = CMatrix::zeros(m, m);
    for c in &per_trial {
        mean += c;
    }
    mean.scale_mut(1.0 / n);
    let mut var = nalgebra::DMatrix::<f64>::zeros(m, m);
    for c in &per_trial {
        for j in 0..m {
            for i in 0..m {
                var[(i, j)] += (c[(i, j)] - mean[(i, j)]).norm_sqr();
            }
        }
    }
    var.scale_mut(1.0 / (n - 1.0));

    let expected = cfg.mu_tilde() * nu * k as f64;
    let diagonal: Vec<f64> = (0..m).map(|i| mean[(i, i)].re).collect();
    let max_diagonal_rel_error = diagonal
        .iter()
        .map(|v| (v / expected - 1.0).abs())
        .fold(0.0, f64::max);
    let (mut max_off, mut max_score) = (0.0f64, 0.0f64);
    for j in 0..m {
        for i in 0..m {
            if i != j {
                let v = mean[(i, j)].norm();
                let se = (var[(i, j)] / n).sqrt();
                max_off = max_off.max(v);
                max_score = max_score.max(if se > 0.0 { v / se } else { 0.0 });
            }
        }
    }
    let total_power: f64 = diagonal.iter().sum();
    let alpha = cfg.implied_alpha();
    let ratio = total_power / alpha;
    Ok(PowerReport {
        trials,
        diagonal,
        expected_diagonal: expected,
        max_diagonal_rel_error,
        max_off_diagonal: max_off,
        max_off_diagonal_score: max_score,
        total_power,
        alpha,
        total_power_ratio: ratio,
        passed: max_diagonal_rel_error < 0.03 && max_score < 3.0 && (ratio - 1.0).abs() < 0.02,
    })
}
