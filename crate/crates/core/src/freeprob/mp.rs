//! Marčenko–Pastur law with mean `ratio`.
//!
//! This is the limiting spectrum of `HHᴴ/M` for an `M × ratio·M` matrix of
//! unit-variance entries: continuous part `√((x−a)⁺(b−x)⁺)/(2πx)` on
//! `[a, b] = [(1−√ratio)², (1+√ratio)²]` plus an atom `(1−ratio)⁺` at zero.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Result};

fn check_ratio(ratio: f64) -> Result<()> {
    if ratio.is_finite() && ratio > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("Marčenko–Pastur ratio must be positive, got {ratio}")))
    }
}

/// Support endpoints `(a, b)` of the continuous part.
pub fn mp_edges(ratio: f64) -> (f64, f64) {
    let s = ratio.sqrt();
    ((1.0 - s).powi(2), (1.0 + s).powi(2))
}

/// Continuous part of the density at `x`.
pub fn mp_density(x: f64, ratio: f64) -> Result<f64> {
    check_ratio(ratio)?;
    let (a, b) = mp_edges(ratio);
    if x <= a || x >= b || x <= 0.0 {
        return Ok(0.0);
    }
    Ok(((x - a) * (b - x)).sqrt() / (2.0 * PI * x))
}

/// Point mass at zero, `max(0, 1 − ratio)`.
pub fn mp_atom(ratio: f64) -> f64 {
    (1.0 - ratio).max(0.0)
}

/// `√(A(t − t₁)(t − t₂))` with the cut on the segment `[t₁, t₂]`, positive
/// for real `t` to the right of both roots.
pub(crate) fn sqrt_two_roots(t: Complex64, lead: f64, t1: f64, t2: f64) -> Complex64 {
    lead.sqrt() * (t - t1).sqrt() * (t - t2).sqrt()
}

/// η-transform `E[1/(1 + ψX)]` in closed form, valid for complex `ψ` off
/// the cut `(−∞, −1/b]`.
///
/// From the S-transform `1/(ratio + x)`, η solves
/// `ψη² + (ψ(ratio−1) + 1)η − 1 = 0`; the root is written in rationalized
/// form so that `ψ → 0` is exact.
pub fn mp_eta(psi: Complex64, ratio: f64) -> Complex64 {
    let lin = psi * (ratio - 1.0) + 1.0;
    // discriminant (ratio−1)²ψ² + 2(ratio+1)ψ + 1, roots at −1/a and −1/b
    let disc_sqrt = if (ratio - 1.0).abs() < 1e-12 {
        (psi * 4.0 + 1.0).sqrt()
    } else {
        let (a, b) = mp_edges(ratio);
        sqrt_two_roots(psi, (ratio - 1.0).powi(2), -1.0 / a, -1.0 / b)
    };
    Complex64::new(2.0, 0.0) / (lin + disc_sqrt)
}

/// Stieltjes transform `∫ f(x)/(x − z)` of the full law (atom included), the
/// root of `zS² + (z − ratio + 1)S + 1 = 0` that is analytic off `[a, b]`.
pub fn mp_stieltjes(z: Complex64, ratio: f64) -> Complex64 {
    let (a, b) = mp_edges(ratio);
    let lin = z - ratio + 1.0;
    // product of principal roots: cut exactly on [a, b], ~z at infinity
    let root = (z - a).sqrt() * (z - b).sqrt();
    // (−lin + root)/(2z), rationalized using root² − lin² = −4z
    Complex64::new(-2.0, 0.0) / (lin + root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_for_ratio_five() {
        let (a, b) = mp_edges(5.0);
        assert!((a - 1.527_864_045_000_420_6).abs() < 1e-12);
        assert!((b - 10.472_135_954_999_58).abs() < 1e-12);
    }

    #[test]
    fn unit_ratio_support_and_boundary() {
        assert_eq!(mp_edges(1.0), (0.0, 4.0));
        assert_eq!(mp_density(4.0, 1.0).unwrap(), 0.0);
        assert_eq!(mp_density(-1.0, 1.0).unwrap(), 0.0);
        assert!(mp_density(2.0, 1.0).unwrap() > 0.0);
    }

    #[test]
    fn atoms() {
        assert_eq!(mp_atom(5.0), 0.0);
        assert_eq!(mp_atom(0.25), 0.75);
        assert_eq!(mp_atom(1.0), 0.0);
    }

    #[test]
    fn rejects_bad_ratio() {
        assert!(mp_density(1.0, 0.0).is_err());
        assert!(mp_density(1.0, -2.0).is_err());
    }

    #[test]
    fn eta_limits() {
        for ratio in [0.3, 1.0, 5.0] {
            assert!((mp_eta(Complex64::new(0.0, 0.0), ratio).re - 1.0).abs() < 1e-15);
            let far = mp_eta(Complex64::new(1e12, 0.0), ratio).re;
            assert!((far - mp_atom(ratio)).abs() < 1e-5, "{ratio}: {far}");
        }
    }

    #[test]
    fn stieltjes_decays_like_unit_mass() {
        for ratio in [0.4, 1.0, 10.0] {
            let z = Complex64::new(3e5, 2e5);
            let s = mp_stieltjes(z, ratio);
            assert!((s * z + 1.0).norm() < 1e-4);
            let zi = Complex64::new(2.0, 0.5);
            let si = mp_stieltjes(zi, ratio);
            assert!(si.im > 0.0);
            let resid = zi * si * si + (zi - ratio + 1.0) * si + 1.0;
            assert!(resid.norm() < 1e-12);
        }
    }
}
