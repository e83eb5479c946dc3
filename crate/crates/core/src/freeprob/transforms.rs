//! η- and S-transforms of `M̃_α = I + αH₁H₁ᴴ` and of the product
//! `K_α/M = (H₂ᴴH₂/M)·M̃_α`.
//!
//! The spectrum of `M̃_α` is `1 + ᾱ·MP(β)` with `ᾱ = Mα`. Its density is the
//! Marčenko–Pastur density pushed through `x ↦ 1 + ᾱx`, and when `β < 1` the
//! Marčenko–Pastur atom at zero becomes an atom of mass `1 − β` at one.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Result};

use super::density::{cosine_nodes, Atom, SpectralDensity};
use super::mp::{mp_atom, mp_edges, mp_eta};

fn check_alpha_bar(alpha_bar: f64) -> Result<()> {
    if alpha_bar.is_finite() && alpha_bar > 0.0 {
        Ok(())
    } else {
        Err(domain(format!(
            "alpha_bar must be positive (treat zero as a point mass at 1), got {alpha_bar}"
        )))
    }
}

/// Support `[1 + ᾱa, 1 + ᾱb]` of the continuous part of `M̃_α`.
pub fn m_alpha_edges(beta: f64, alpha_bar: f64) -> (f64, f64) {
    let (a, b) = mp_edges(beta);
    (1.0 + alpha_bar * a, 1.0 + alpha_bar * b)
}

/// Continuous part of the eigenvalue density of `M̃_α`:
/// `√((x−1−ᾱ+2ᾱ√β−ᾱβ)(ᾱ+2ᾱ√β+ᾱβ−x+1)) / (2ᾱπ(x−1))` on its support.
pub fn m_alpha_density(x: f64, beta: f64, alpha_bar: f64) -> Result<f64> {
    check_alpha_bar(alpha_bar)?;
    if !(beta.is_finite() && beta > 0.0) {
        return Err(domain(format!("beta must be positive, got {beta}")));
    }
    let (lo, hi) = m_alpha_edges(beta, alpha_bar);
    if x <= lo || x >= hi || x <= 1.0 {
        return Ok(0.0);
    }
    let sb = beta.sqrt();
    let left = x - 1.0 - alpha_bar + 2.0 * alpha_bar * sb - alpha_bar * beta;
    let right = alpha_bar + 2.0 * alpha_bar * sb + alpha_bar * beta - x + 1.0;
    Ok((left * right).max(0.0).sqrt() / (2.0 * alpha_bar * PI * (x - 1.0)))
}

impl SpectralDensity {
    /// Eigenvalue law of `M̃_α` on `points` cosine nodes over its support.
    pub fn m_alpha(beta: f64, alpha_bar: f64, points: usize) -> Result<Self> {
        check_alpha_bar(alpha_bar)?;
        let (lo, hi) = m_alpha_edges(beta, alpha_bar);
        let (grid, weights) = cosine_nodes(lo, hi, points);
        let values = grid
            .iter()
            .map(|&x| m_alpha_density(x, beta, alpha_bar))
            .collect::<Result<Vec<_>>>()?;
        let atom = mp_atom(beta);
        let atoms = if atom > 0.0 {
            vec![Atom {
                location: 1.0,
                mass: atom,
            }]
        } else {
            Vec::new()
        };
        Ok(SpectralDensity {
            grid,
            values,
            weights,
            support: (lo, hi),
            atoms,
        })
    }
}

/// `η(ψ) = E[1/(1 + ψX)]` by quadrature against a sampled law.
pub fn eta_numeric(density: &SpectralDensity, psi: f64) -> f64 {
    density.expect(|x| 1.0 / (1.0 + psi * x))
}

/// Closed-form η-transform of `M̃_α` for complex `ψ`:
/// `η(ψ) = η_MP(ψᾱ/(1+ψ)) / (1 + ψ)`.
pub fn eta_m_alpha(psi: Complex64, beta: f64, alpha_bar: f64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let t = psi * alpha_bar / (one + psi);
    mp_eta(t, beta) / (one + psi)
}

/// Both branches of the inverse η-transform of `M̃_α` at complex `u`, i.e.
/// the two roots `ψ` of `uᾱψ² + (uᾱ + βᾱ − ᾱ + 1)ψ + (u − 1)/u = 0`.
///
/// Written as `2(1−u) / (u(B ± √D))`, which equals the textbook
/// `(−B ± √D)/(2uᾱ)` but stays finite as `ᾱ → 0` and `u → 1`. The first
/// entry uses the principal square root.
pub fn inverse_eta_m_alpha_branches(u: Complex64, beta: f64, alpha_bar: f64) -> [Complex64; 2] {
    let ab = alpha_bar;
    let lin = u * ab + beta * ab - ab + 1.0;
    let disc = u * u * ab * ab + u * (2.0 * ab * ab * beta - 2.0 * ab * ab - 2.0 * ab)
        + (beta * beta * ab * ab - 2.0 * beta * ab * ab + 2.0 * beta * ab + ab * ab + 2.0 * ab + 1.0);
    let root = disc.sqrt();
    let num = (Complex64::new(1.0, 0.0) - u) * 2.0;
    let (plus, minus) = (lin + root, lin - root);
    let mut out = [num / (u * plus), num / (u * minus)];
    // the denominator with cancellation loses digits; take that root from
    // the product ψ₁ψ₂ = (u − 1)/(u²ᾱ) instead
    let product = (u - 1.0) / (u * u * ab);
    let (good, bad) = if plus.norm() >= minus.norm() { (0, 1) } else { (1, 0) };
    let fixed = product / out[good];
    if ab > 0.0 && out[good].norm() > 0.0 && fixed.is_finite() {
        out[bad] = fixed;
    }
    out
}

/// The branch of the inverse η-transform of `M̃_α` at complex `u`: the root
/// `ψ` of the defining quadratic with `η(ψ) = u`.
pub fn inverse_eta_m_alpha_complex(u: Complex64, beta: f64, alpha_bar: f64) -> Complex64 {
    let [a, b] = inverse_eta_m_alpha_branches(u, beta, alpha_bar);
    let ea = (eta_m_alpha(a, beta, alpha_bar) - u).norm();
    let eb = (eta_m_alpha(b, beta, alpha_bar) - u).norm();
    if !(eb < ea) {
        a
    } else {
        b
    }
}

/// Inverse η-transform of `M̃_α` on `(0, 1)`:
/// `(−xᾱ − βᾱ + ᾱ − 1 + √(x²ᾱ² + 2xᾱ²β − 2xᾱ² − 2xᾱ + β²ᾱ² − 2βᾱ² + 2βᾱ + ᾱ² + 2ᾱ + 1)) / (2xᾱ)`.
pub fn inverse_eta_m_alpha(x: f64, beta: f64, alpha_bar: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(domain(format!("inverse η-transform needs x in (0, 1), got {x}")));
    }
    check_alpha_bar(alpha_bar)?;
    // the principal (positive) root is the branch on the real interval
    Ok(inverse_eta_m_alpha_branches(Complex64::new(x, 0.0), beta, alpha_bar)[0].re)
}

/// S-transform `1/(γ + x)` of `H₂ᴴH₂/M`.
pub fn s_transform_n2(x: f64, gamma: f64) -> Result<f64> {
    let d = gamma + x;
    if d == 0.0 {
        return Err(domain(format!("S-transform pole at x = −γ = {x}")));
    }
    Ok(1.0 / d)
}

/// Inverse η-transform of `K_α/M`: `Σ_{N₂}(x − 1)·η⁻¹_{M̃_α}(x)`.
pub fn inverse_eta_k_alpha(x: f64, beta: f64, gamma: f64, alpha_bar: f64) -> Result<f64> {
    Ok(s_transform_n2(x - 1.0, gamma)? * inverse_eta_m_alpha(x, beta, alpha_bar)?)
}
