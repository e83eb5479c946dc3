//! Ergodic capacity per receive antenna, asymptotically and by Monte Carlo.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::freeprob::stieltjes::ALPHA_BAR_MP_CUTOFF;
use crate::freeprob::{k_alpha_density, DensityOptions, SpectralDensity};
use crate::linalg::{identity, ln_det_hpd, CMatrix};
use crate::montecarlo::{sample_channel_pair_stream, Dims};
use crate::params::{derive_coefficients, Coefficients, SystemConfig};

/// Normalization defect above which a density is reported as suspect.
pub const DEFECT_WARNING: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Asymptotic,
    MonteCarlo,
}

/// Capacity in nats per receive antenna, `c = c1 − c2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub c1: f64,
    pub c2: f64,
    pub c: f64,
    pub method: Method,
    /// Monte Carlo only.
    pub trials: Option<usize>,
    /// 95% half-width, `1.96·stderr`; absent below two trials.
    pub ci_halfwidth: Option<f64>,
    /// Largest normalization defect of the two densities (asymptotic only).
    pub quadrature_defect: Option<f64>,
    /// Largest fixed-point residual met while sampling the densities.
    pub max_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Informational, e.g. a closed-form law substituted for a branch.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CapacityResult {
    pub const CSV_HEADER: &'static str = "method,c,c1,c2,trials,ci_halfwidth,quadrature_defect";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
        let mut s = String::new();
        let method = match self.method {
            Method::Asymptotic => "asymptotic",
            Method::MonteCarlo => "monte-carlo",
        };
        let _ = write!(
            s,
            "{method},{:e},{:e},{:e},{},{},{}",
            self.c,
            self.c1,
            self.c2,
            self.trials.map_or(String::new(), |t| t.to_string()),
            opt(self.ci_halfwidth),
            opt(self.quadrature_defect)
        );
        s
    }

    /// Same result in bits.
    pub fn to_bits(&self) -> Self {
        let k = std::f64::consts::LOG2_E;
        CapacityResult {
            c1: self.c1 * k,
            c2: self.c2 * k,
            c: self.c * k,
            ci_halfwidth: self.ci_halfwidth.map(|h| h * k),
            ..self.clone()
        }
    }
}

/// `∫ ln(1 + scale·x) dF(x)`, with the continuous part rescaled to make the
/// law's total mass exactly one. An atom at zero contributes nothing.
pub fn shannon_integral(density: &SpectralDensity, scale: f64) -> Result<f64> {
    if !(scale.is_finite() && scale >= 0.0) {
        return Err(domain(format!("Shannon scale must be non-negative, got {scale}")));
    }
    Ok(density.expect_normalized(|x| (scale * x).ln_1p()))
}

/// Large-system capacity from the two limiting densities of `K_α/M`.
pub fn asymptotic_capacity(cfg: &SystemConfig) -> Result<CapacityResult> {
    asymptotic_capacity_with(cfg, &DensityOptions::default())
}

/// The two densities the asymptotic capacity integrates against, for the
/// `C1` and `C2` branches.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchDensities {
    pub coefficients: Coefficients,
    pub c1: SpectralDensity,
    pub c2: SpectralDensity,
    pub max_residual: f64,
    /// Set when `ᾱ` of the second branch is zero and its law is exactly
    /// Marčenko–Pastur.
    pub c2_is_marchenko_pastur: bool,
}

pub fn branch_densities(cfg: &SystemConfig, opts: &DensityOptions) -> Result<BranchDensities> {
    let co = derive_coefficients(cfg)?;
    let first = k_alpha_density(co.beta, co.gamma, co.alpha_bar_c1, opts)?;
    let mp = co.alpha_bar_c2 < ALPHA_BAR_MP_CUTOFF;
    let (second, r2) = if mp {
        (SpectralDensity::marchenko_pastur(co.gamma, opts.points)?, 0.0)
    } else {
        let d = k_alpha_density(co.beta, co.gamma, co.alpha_bar_c2, opts)?;
        (d.density, d.max_residual)
    };
    Ok(BranchDensities {
        coefficients: co,
        c1: first.density,
        c2: second,
        max_residual: first.max_residual.max(r2),
        c2_is_marchenko_pastur: mp,
    })
}

pub fn asymptotic_capacity_with(cfg: &SystemConfig, opts: &DensityOptions) -> Result<CapacityResult> {
    let b = branch_densities(cfg, opts)?;
    let co = &b.coefficients;
    let c1 = shannon_integral(&b.c1, co.shannon_scale)? / co.gamma;
    let c2 = shannon_integral(&b.c2, co.shannon_scale)? / co.gamma;
    let defect = b.c1.normalization_defect().max(b.c2.normalization_defect());
    let mut warnings = Vec::new();
    if defect > DEFECT_WARNING {
        warnings.push(format!("density normalization defect {defect:.3e} exceeds {DEFECT_WARNING:e}"));
    }
    let mut notes = Vec::new();
    if b.c2_is_marchenko_pastur {
        notes.push("second branch has alpha_bar = 0; used the Marchenko-Pastur law at ratio gamma".into());
    }
    if !(c1.is_finite() && c2.is_finite()) {
        return Err(Error::Numerical(format!("non-finite capacity terms c1={c1}, c2={c2}")));
    }
    Ok(CapacityResult {
        c1,
        c2,
        c: c1 - c2,
        method: Method::Asymptotic,
        trials: None,
        ci_halfwidth: None,
        quadrature_defect: Some(defect),
        max_residual: Some(b.max_residual),
        warnings,
        notes,
    })
}

fn check_shapes(h1: &CMatrix, h2: &CMatrix) -> Result<()> {
    if h2.ncols() != h1.nrows() {
        return Err(domain(format!(
            "H1 is {}x{} but H2 is {}x{}",
            h1.nrows(),
            h1.ncols(),
            h2.nrows(),
            h2.ncols()
        )));
    }
    Ok(())
}

/// `(1/N) ln det(I_N + f4·G·Φ⁻¹)` with `G = H₂H₁H₁ᴴH₂ᴴ` and
/// `Φ = f2·G + f3·H₂H₂ᴴ + I_N`, evaluated as `ln det(Φ + f4 G) − ln det Φ`
/// from two Cholesky factorizations.
pub fn logdet_capacity_sample(h1: &CMatrix, h2: &CMatrix, co: &Coefficients) -> Result<f64> {
    check_shapes(h1, h2)?;
    let n = h2.nrows();
    let a = h2 * h1;
    let g = &a * a.adjoint();
    let phi = g.scale(co.f2) + (h2 * h2.adjoint()).scale(co.f3) + identity(n);
    let with_signal = &phi + g.scale(co.f4);
    let v = (ln_det_hpd(&with_signal)? - ln_det_hpd(&phi)?) / n as f64;
    Ok(v.max(0.0))
}

/// The per-realization pair `(C1, C2)` with
/// `C_i = (1/N) ln det(I_M + f3 H₂ᴴH₂(I_M + α_i H₁H₁ᴴ))`, `α_1 = f1`,
/// `α_2 = f2/f3`.
///
/// The argument is not Hermitian. With `I_M + α_i H₁H₁ᴴ = LLᴴ` it is
/// similar to `I_M + f3 (H₂L)ᴴ(H₂L)`, which is, so Cholesky applies.
pub fn logdet_capacity_terms(h1: &CMatrix, h2: &CMatrix, co: &Coefficients) -> Result<(f64, f64)> {
    check_shapes(h1, h2)?;
    let m = h1.nrows();
    let n = h2.nrows() as f64;
    let gram1 = h1 * h1.adjoint();
    let term = |alpha: f64| -> Result<f64> {
        let b = identity(m) + gram1.scale(alpha);
        let l = b
            .cholesky()
            .ok_or_else(|| Error::Numerical("I + αH₁H₁ᴴ is not positive definite".into()))?
            .unpack();
        let a = h2 * l;
        let mat = identity(m) + (a.adjoint() * a).scale(co.f3);
        Ok(ln_det_hpd(&mat)? / n)
    };
    Ok((term(co.alpha_c1())?, term(co.alpha_c2())?))
}

struct Moments {
    mean: f64,
    var: f64,
}

fn moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        f64::NAN
    };
    Moments { mean, var }
}

/// Sample mean of [`logdet_capacity_sample`] over `trials` channel draws;
/// trial `i` uses stream `i` of `seed`.
pub fn mc_ergodic_capacity(cfg: &SystemConfig, trials: usize, seed: u64) -> Result<CapacityResult> {
    if trials == 0 {
        return Err(domain("Monte Carlo needs at least one trial"));
    }
    let co = derive_coefficients(cfg)?;
    let dims = Dims::of(cfg);
    let samples = (0..trials)
        .into_par_iter()
        .map(|t| {
            let pair = sample_channel_pair_stream(dims, seed, t as u64)?;
            let c = logdet_capacity_sample(&pair.h1, &pair.h2, &co)?;
            let (c1, c2) = logdet_capacity_terms(&pair.h1, &pair.h2, &co)?;
            Ok((c, c1, c2))
        })
        .collect::<Result<Vec<_>>>()?;
    let c: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let c1: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let c2: Vec<f64> = samples.iter().map(|s| s.2).collect();
    let mc = moments(&c);
    let ci = (trials > 1).then(|| 1.96 * (mc.var / trials as f64).sqrt());
    Ok(CapacityResult {
        c1: moments(&c1).mean,
        c2: moments(&c2).mean,
        c: mc.mean,
        method: Method::MonteCarlo,
        trials: Some(trials),
        ci_halfwidth: ci,
        quadrature_defect: None,
        max_residual: None,
        warnings: Vec::new(),
        notes: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freeprob::mp_density;
    use crate::montecarlo::sample_channel_pair;
    use crate::params::Impairments;

    fn fig2(mu_db: f64, delta: f64) -> SystemConfig {
        SystemConfig::new(50, 10, 100, crate::db_to_linear(mu_db), 100.0)
            .with_impairments(Impairments::uniform(delta))
    }

    #[test]
    fn shannon_of_point_mass_and_zero_scale() {
        let d = SpectralDensity::point_mass(3.0);
        assert!((shannon_integral(&d, 2.0).unwrap() - 7f64.ln()).abs() < 1e-15);
        let mp = SpectralDensity::marchenko_pastur(5.0, 256).unwrap();
        assert_eq!(shannon_integral(&mp, 0.0).unwrap(), 0.0);
        assert!(shannon_integral(&mp, -1.0).is_err());
    }

    #[test]
    fn shannon_of_mp_matches_fine_midpoint_rule() {
        let ours = shannon_integral(&SpectralDensity::marchenko_pastur(5.0, 2048).unwrap(), 1.0).unwrap();
        let (a, b) = crate::freeprob::mp_edges(5.0);
        let n = 2_000_000;
        let h = (b - a) / n as f64;
        let brute: f64 = (0..n)
            .map(|i| {
                let x = a + (i as f64 + 0.5) * h;
                mp_density(x, 5.0).unwrap() * x.ln_1p() * h
            })
            .sum();
        assert!((ours - brute).abs() < 1e-6, "{ours} vs {brute}");
    }

    #[test]
    fn no_signal_gives_zero() {
        let pair = sample_channel_pair(Dims::new(3, 4, 5), 1).unwrap();
        let co = derive_coefficients(&fig2(20.0, 0.1)).unwrap();
        let zero = CMatrix::zeros(4, 3);
        assert_eq!(logdet_capacity_sample(&zero, &pair.h2, &co).unwrap(), 0.0);
        assert!(logdet_capacity_sample(&pair.h1, &CMatrix::zeros(5, 3), &co).is_err());
    }

    #[test]
    fn ideal_hardware_reduces_phi() {
        let pair = sample_channel_pair(Dims::new(3, 4, 5), 4).unwrap();
        let co = derive_coefficients(&fig2(10.0, 0.0)).unwrap();
        assert_eq!(co.f2, 0.0);
        let a = &pair.h2 * &pair.h1;
        let g = &a * a.adjoint();
        let phi = (&pair.h2 * pair.h2.adjoint()).scale(co.f3) + identity(5);
        let direct = (ln_det_hpd(&(&phi + g.scale(co.f4))).unwrap() - ln_det_hpd(&phi).unwrap()) / 5.0;
        let ours = logdet_capacity_sample(&pair.h1, &pair.h2, &co).unwrap();
        assert!((ours - direct).abs() < 1e-14);
    }

    #[test]
    fn ci_scaling_and_single_trial() {
        let cfg = SystemConfig::new(4, 3, 6, 10.0, 10.0).with_impairments(Impairments::uniform(0.05));
        let one = mc_ergodic_capacity(&cfg, 1, 5).unwrap();
        assert!(one.ci_halfwidth.is_none());
        let a = mc_ergodic_capacity(&cfg, 400, 5).unwrap();
        let b = mc_ergodic_capacity(&cfg, 800, 5).unwrap();
        let r = b.ci_halfwidth.unwrap() / a.ci_halfwidth.unwrap();
        assert!((r / std::f64::consts::FRAC_1_SQRT_2 - 1.0).abs() < 0.2, "{r}");
        assert_eq!(a, mc_ergodic_capacity(&cfg, 400, 5).unwrap());
        assert!((a.c - (a.c1 - a.c2)).abs() < 1e-10 * a.c);
        assert!(mc_ergodic_capacity(&cfg, 0, 5).is_err());
    }

    #[test]
    fn ideal_hardware_second_branch_is_mp_shannon() {
        let cfg = fig2(20.0, 0.0);
        let co = derive_coefficients(&cfg).unwrap();
        let r = asymptotic_capacity(&cfg).unwrap();
        let mp = SpectralDensity::marchenko_pastur(co.gamma, 4096).unwrap();
        let expect = shannon_integral(&mp, co.shannon_scale).unwrap() / co.gamma;
        assert!((r.c2 - expect).abs() < 1e-9 * expect);
        assert!(r.notes.iter().any(|w| w.contains("alpha_bar = 0")));
        assert!(r.warnings.is_empty());
        assert!(r.c >= 0.0 && r.c1 >= r.c2);
    }

    #[test]
    fn asymptotic_matches_monte_carlo_at_one_point() {
        for delta in [0.0, 0.08] {
            let cfg = fig2(20.0, delta);
            let asym = asymptotic_capacity(&cfg).unwrap();
            let mc = mc_ergodic_capacity(&cfg, 200, 1).unwrap();
            let rel = (asym.c - mc.c).abs() / mc.c;
            assert!(rel < 0.03, "delta={delta}: {} vs {}", asym.c, mc.c);
        }
    }

    #[test]
    fn csv_and_bits() {
        let r = CapacityResult {
            c1: 2.0,
            c2: 1.0,
            c: 1.0,
            method: Method::MonteCarlo,
            trials: Some(10),
            ci_halfwidth: Some(0.1),
            quadrature_defect: None,
            max_residual: None,
            warnings: vec![],
            notes: vec![],
        };
        assert_eq!(r.csv_row(), "monte-carlo,1e0,2e0,1e0,10,1e-1,");
        assert_eq!(CapacityResult::CSV_HEADER.split(',').count(), r.csv_row().split(',').count());
        assert!((r.to_bits().c - std::f64::consts::LOG2_E).abs() < 1e-15);
        let json = serde_json::to_string(&r).unwrap();
        let back: CapacityResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
