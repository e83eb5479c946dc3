//! Stieltjes transform of `K_α/M` from the quartic, and density extraction by
//! Stieltjes inversion.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::density::{cosine_nodes, graded_nodes, trapezoid_weights, Atom, SpectralDensity};
use super::mp::{mp_atom, mp_edges};
use super::quartic::{quartic_coefficients, solve_quadratic, solve_quartic};
use super::transforms::{eta_m_alpha, inverse_eta_m_alpha_branches, inverse_eta_m_alpha_complex};

type C = Complex64;

/// Below this `ᾱ` the product law is treated as Marčenko–Pastur at ratio `γ`.
pub const ALPHA_BAR_MP_CUTOFF: f64 = 1e-10;

/// Required size of the fixed-point residual at the selected root.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// One evaluation of the Stieltjes transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StieltjesSample {
    pub z: C,
    /// All roots of the polynomial equation at `z` (four, or two on the
    /// Marčenko–Pastur route).
    pub roots: Vec<C>,
    pub selected: usize,
    pub value: C,
    /// `|z·η⁻¹_K(−zS) + 1|` at the selected root.
    pub residual: f64,
}

/// `|z·η⁻¹_K(−zS) + 1|` with `η⁻¹_K(u) = η⁻¹_{M̃_α}(u)/(γ + u − 1)`.
///
/// η of `M̃_α` is not injective on the complex plane, so both roots of the
/// quadratic for `η⁻¹_{M̃_α}(u)` can be genuine preimages of `u`. The
/// residual is the smaller one over the branches that do invert η at `u`
/// (falling back to the best-inverting branch when neither does so to
/// 1e-8).
pub fn fixed_point_residual(z: C, s: C, beta: f64, gamma: f64, alpha_bar: f64) -> f64 {
    let u = -z * s;
    let denom = u + gamma - 1.0;
    let tol = 1e-8 * u.norm().max(1.0);
    let branches = inverse_eta_m_alpha_branches(u, beta, alpha_bar);
    let valid = branches
        .iter()
        .filter(|&&psi| (eta_m_alpha(psi, beta, alpha_bar) - u).norm() <= tol)
        .map(|&psi| (z * psi / denom + 1.0).norm())
        .fold(f64::INFINITY, f64::min);
    if valid.is_finite() {
        valid
    } else {
        let psi = inverse_eta_m_alpha_complex(u, beta, alpha_bar);
        (z * psi / denom + 1.0).norm()
    }
}

fn polynomial_roots(z: C, beta: f64, gamma: f64, alpha_bar: f64) -> Vec<C> {
    if alpha_bar < ALPHA_BAR_MP_CUTOFF {
        solve_quadratic(z, z - gamma + 1.0, C::new(1.0, 0.0)).to_vec()
    } else {
        solve_quartic(&quartic_coefficients(z, beta, gamma, alpha_bar)).to_vec()
    }
}

/// `S(z) = ∫ f(x)/(x − z) dF(x)` for the law of `K_α/M`, atom included.
pub fn stieltjes_k_alpha(z: C, beta: f64, gamma: f64, alpha_bar: f64) -> Result<StieltjesSample> {
    stieltjes_k_alpha_near(z, beta, gamma, alpha_bar, None)
}

/// As [`stieltjes_k_alpha`]; when several roots qualify, the one closest to
/// `hint` wins.
///
/// A root qualifies when `Im S > 0` and `Im zS > 0` (true of any Stieltjes
/// transform of a measure on `[0, ∞)`), and among those the smallest
/// fixed-point residual is preferred. If no root lies in that quadrant, any
/// root in the closed upper half-plane with residual below
/// [`RESIDUAL_TOL`] is accepted.
pub fn stieltjes_k_alpha_near(
    z: C,
    beta: f64,
    gamma: f64,
    alpha_bar: f64,
    hint: Option<C>,
) -> Result<StieltjesSample> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!("Stieltjes transform needs Im z > 0, got {z}")));
    }
    let roots = polynomial_roots(z, beta, gamma, alpha_bar);
    let residuals: Vec<f64> = roots
        .iter()
        .map(|&s| fixed_point_residual(z, s, beta, gamma, alpha_bar))
        .collect();

    let strict: Vec<usize> = (0..roots.len())
        .filter(|&i| roots[i].im > 0.0 && (z * roots[i]).im > 0.0 && roots[i].is_finite())
        .collect();
    let pool = if strict.is_empty() {
        (0..roots.len())
            .filter(|&i| roots[i].im >= 0.0 && residuals[i] < RESIDUAL_TOL)
            .collect()
    } else {
        strict
    };
    if pool.is_empty() {
        return Err(Error::NoValidRoot { z });
    }
    let good: Vec<usize> = pool
        .iter()
        .copied()
        .filter(|&i| residuals[i] < RESIDUAL_TOL)
        .collect();
    let selected = match (hint, good.len()) {
        (Some(h), n) if n > 1 => good
            .iter()
            .copied()
            .min_by(|&i, &j| (roots[i] - h).norm().total_cmp(&(roots[j] - h).norm()))
            .unwrap(),
        _ => pool
            .iter()
            .copied()
            .min_by(|&i, &j| residuals[i].total_cmp(&residuals[j]))
            .unwrap(),
    };
    Ok(StieltjesSample {
        z,
        value: roots[selected],
        residual: residuals[selected],
        roots,
        selected,
    })
}

/// Point mass at zero of `K_α/M`, `(1 − γ)⁺`.
pub fn k_alpha_atom(gamma: f64) -> f64 {
    mp_atom(gamma)
}

fn continuous_part(sample: &StieltjesSample, atom: f64) -> C {
    sample.value + atom / sample.z
}

/// Density of `K_α/M` on a caller-chosen ascending grid by Stieltjes
/// inversion at a fixed offset `y_eps`, integrated by the trapezoid rule.
///
/// The support is the smallest interval holding every sample above
/// `1e-4·max`.
pub fn aepdf_k_alpha(
    grid: &[f64],
    beta: f64,
    gamma: f64,
    alpha_bar: f64,
    y_eps: f64,
) -> Result<SpectralDensity> {
    if !(y_eps > 0.0) {
        return Err(Error::Domain(format!("y_eps must be positive, got {y_eps}")));
    }
    let atom = k_alpha_atom(gamma);
    let mut values = Vec::with_capacity(grid.len());
    let mut hint = None;
    for &x in grid {
        let s = stieltjes_k_alpha_near(C::new(x, y_eps), beta, gamma, alpha_bar, hint)?;
        hint = Some(s.value);
        values.push((continuous_part(&s, atom).im / PI).max(0.0));
    }
    let peak = values.iter().copied().fold(0.0, f64::max);
    let above = |v: &f64| *v > 1e-4 * peak;
    let support = match (values.iter().position(above), values.iter().rposition(above)) {
        (Some(i), Some(j)) => (grid[i], grid[j]),
        _ => (0.0, 0.0),
    };
    let mut d = SpectralDensity::from_trapezoid(grid.to_vec(), values, atom_list(atom))?;
    d.support = support;
    debug_assert_eq!(d.weights, trapezoid_weights(grid));
    Ok(d)
}

fn atom_list(atom: f64) -> Vec<Atom> {
    if atom > 0.0 {
        vec![Atom {
            location: 0.0,
            mass: atom,
        }]
    } else {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityOptions {
    /// Total quadrature nodes, split across support intervals.
    pub points: usize,
    /// Inversion offset relative to the abscissa: `y = y_rel·x`.
    pub y_rel: f64,
    /// Geometric scan resolution for locating support edges.
    pub scan_points: usize,
}

impl Default for DensityOptions {
    fn default() -> Self {
        DensityOptions {
            points: 2048,
            y_rel: 1e-8,
            scan_points: 1024,
        }
    }
}

/// Density of `K_α/M` with its support intervals located automatically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KAlphaDensity {
    pub density: SpectralDensity,
    pub intervals: Vec<(f64, f64)>,
    /// Largest fixed-point residual over all nodes.
    pub max_residual: f64,
    /// Change in continuous mass when the offset is halved.
    pub offset_sensitivity: f64,
}

/// Whether real `x` lies in the support: the equation then has a non-real
/// root that passes the fixed-point check. Off the support every root is
/// real.
fn in_support(x: f64, beta: f64, gamma: f64, alpha_bar: f64) -> bool {
    let z = C::new(x, 0.0);
    polynomial_roots(z, beta, gamma, alpha_bar).iter().any(|&s| {
        s.is_finite()
            && s.im.abs() > 1e-6 * s.norm()
            && fixed_point_residual(z, C::new(s.re, s.im.abs()), beta, gamma, alpha_bar) < 1e-6
    })
}

/// A bracket `[lo, hi]` containing the support of the continuous part.
pub fn k_alpha_support_bracket(beta: f64, gamma: f64, alpha_bar: f64) -> (f64, f64) {
    let (ag, bg) = mp_edges(gamma);
    let (ab, bb) = mp_edges(beta);
    let low_m = if beta >= 1.0 { 1.0 + alpha_bar * ab } else { 1.0 };
    (ag * low_m, bg * (1.0 + alpha_bar * bb))
}

fn bisect_edge(mut out: f64, mut inn: f64, beta: f64, gamma: f64, alpha_bar: f64) -> f64 {
    // geometric bisection; `out` is outside the support, `inn` inside
    for _ in 0..200 {
        if (inn / out - 1.0).abs() < 1e-14 {
            break;
        }
        let mid = (out * inn).sqrt();
        if in_support(mid, beta, gamma, alpha_bar) {
            inn = mid;
        } else {
            out = mid;
        }
    }
    inn
}

/// Support intervals of the continuous part of `K_α/M`.
pub fn k_alpha_support(beta: f64, gamma: f64, alpha_bar: f64, scan_points: usize) -> Vec<(f64, f64)> {
    let (lo, hi) = k_alpha_support_bracket(beta, gamma, alpha_bar);
    let start = if lo > 0.0 { 0.9 * lo } else { 1e-10 * hi };
    let stop = 1.1 * hi;
    let n = scan_points.max(16);
    let ratio = (stop / start).powf(1.0 / (n - 1) as f64);
    let xs: Vec<f64> = (0..n).map(|i| start * ratio.powi(i as i32)).collect();
    let inside: Vec<bool> = xs.iter().map(|&x| in_support(x, beta, gamma, alpha_bar)).collect();

    let mut intervals = Vec::new();
    let mut left = if inside[0] { Some(if lo > 0.0 { xs[0] } else { 0.0 }) } else { None };
    for i in 1..n {
        match (inside[i - 1], inside[i]) {
            (false, true) => left = Some(bisect_edge(xs[i - 1], xs[i], beta, gamma, alpha_bar)),
            (true, false) => {
                let right = bisect_edge(xs[i], xs[i - 1], beta, gamma, alpha_bar);
                if let Some(l) = left.take() {
                    intervals.push((l, right));
                }
            }
            _ => {}
        }
    }
    if let Some(l) = left {
        intervals.push((l, xs[n - 1]));
    }
    intervals
}

fn sample_nodes(
    grid: &[f64],
    y_rel: f64,
    beta: f64,
    gamma: f64,
    alpha_bar: f64,
) -> Result<(Vec<f64>, f64)> {
    let atom = k_alpha_atom(gamma);
    let mut values = Vec::with_capacity(grid.len());
    let mut worst: f64 = 0.0;
    let mut hint = None;
    for &x in grid {
        let mut y = y_rel * x;
        let mut tries = 0;
        let s = loop {
            match stieltjes_k_alpha_near(C::new(x, y), beta, gamma, alpha_bar, hint) {
                Ok(s) => break s,
                Err(Error::NoValidRoot { .. }) if tries < 6 => {
                    y *= 10.0;
                    tries += 1;
                }
                Err(e) => return Err(e),
            }
        };
        hint = Some(s.value);
        worst = worst.max(s.residual);
        values.push((continuous_part(&s, atom).im / PI).max(0.0));
    }
    Ok((values, worst))
}

/// Density of `K_α/M` on cosine-clustered nodes over each detected support
/// interval, with the `(1 − γ)⁺` atom at zero.
pub fn k_alpha_density(beta: f64, gamma: f64, alpha_bar: f64, opts: &DensityOptions) -> Result<KAlphaDensity> {
    for (name, v) in [("beta", beta), ("gamma", gamma)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain(format!("{name} must be positive, got {v}")));
        }
    }
    if !(alpha_bar.is_finite() && alpha_bar >= 0.0) {
        return Err(Error::Domain(format!("alpha_bar must be non-negative, got {alpha_bar}")));
    }
    let intervals = k_alpha_support(beta, gamma, alpha_bar, opts.scan_points);
    if intervals.is_empty() {
        return Err(Error::Numerical(format!(
            "no support found for beta={beta}, gamma={gamma}, alpha_bar={alpha_bar}"
        )));
    }
    let per = (opts.points / intervals.len()).max(64);
    let (mut grid, mut weights) = (Vec::new(), Vec::new());
    for &(a, b) in &intervals {
        let (g, w) = if a == 0.0 { graded_nodes(b, per) } else { cosine_nodes(a, b, per) };
        grid.extend(g);
        weights.extend(w);
    }
    let (values, max_residual) = sample_nodes(&grid, opts.y_rel, beta, gamma, alpha_bar)?;
    let (half, _) = sample_nodes(&grid, 0.5 * opts.y_rel, beta, gamma, alpha_bar)?;
    let mass = |v: &[f64]| v.iter().zip(&weights).map(|(a, w)| a * w).sum::<f64>();
    let offset_sensitivity = (mass(&values) - mass(&half)).abs();

    let density = SpectralDensity {
        support: (intervals[0].0, intervals[intervals.len() - 1].1),
        grid,
        values,
        weights,
        atoms: atom_list(k_alpha_atom(gamma)),
    };
    Ok(KAlphaDensity {
        density,
        intervals,
        max_residual,
        offset_sensitivity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freeprob::mp::{mp_density, mp_stieltjes};

    const FIG1: (f64, f64, f64) = (5.0, 10.0, 1000.0);

    #[test]
    fn large_z_behaves_like_unit_mass() {
        for &(beta, gamma, ab) in &[FIG1, (0.5, 0.5, 3.0), (1.0, 1.0, 1.0)] {
            let z = C::new(1e9, 1e9);
            let s = stieltjes_k_alpha(z, beta, gamma, ab).unwrap();
            assert!((s.value * z + 1.0).norm() < 1e-3, "{beta} {gamma} {ab}: {}", s.value);
        }
    }

    #[test]
    fn rejects_lower_half_plane() {
        assert!(stieltjes_k_alpha(C::new(1.0, 0.0), 5.0, 10.0, 1.0).is_err());
        assert!(stieltjes_k_alpha(C::new(1.0, -1.0), 5.0, 10.0, 1.0).is_err());
    }

    #[test]
    fn selected_root_passes_fixed_point_check() {
        for &(beta, gamma, ab) in &[FIG1, (0.5, 0.5, 3.0), (2.0, 0.3, 50.0), (1.0, 1.0, 1.0)] {
            let (lo, hi) = k_alpha_support_bracket(beta, gamma, ab);
            for i in 0..50 {
                let x = lo.max(1e-3) * 0.5 + (hi * 1.2) * i as f64 / 49.0;
                for y in [1e-6 * x, 1e-2 * x, x] {
                    let s = stieltjes_k_alpha(C::new(x, y), beta, gamma, ab).unwrap();
                    assert!(s.residual < RESIDUAL_TOL, "{beta} {gamma} {ab} z={}: {}", s.z, s.residual);
                    assert!(s.value.im > 0.0);
                }
            }
        }
    }

    #[test]
    fn vanishing_alpha_is_marchenko_pastur() {
        for gamma in [0.4, 1.0, 10.0] {
            for &z in &[C::new(2.0, 0.1), C::new(0.3, 1e-4), C::new(30.0, 5.0)] {
                let ours = stieltjes_k_alpha(z, 5.0, gamma, 0.0).unwrap().value;
                let exact = mp_stieltjes(z, gamma);
                assert!((ours - exact).norm() < 1e-12 * exact.norm(), "{gamma} {z}: {ours} vs {exact}");
                // just above the cutoff the quartic route must agree too
                let near = stieltjes_k_alpha(z, 5.0, gamma, 1e-9).unwrap().value;
                assert!((near - exact).norm() < 1e-6 * exact.norm(), "{gamma} {z}: {near} vs {exact}");
            }
        }
    }

    #[test]
    fn imaginary_part_vanishes_off_support() {
        let (beta, gamma, ab) = FIG1;
        let (lo, hi) = k_alpha_support_bracket(beta, gamma, ab);
        for x in [0.5 * lo, 2.0 * hi] {
            let s = stieltjes_k_alpha(C::new(x, 1e-9 * x), beta, gamma, ab).unwrap();
            assert!(s.value.im < 1e-6 * s.value.norm(), "{x}: {}", s.value);
        }
    }

    #[test]
    fn continuous_along_horizontal_line() {
        let (beta, gamma, ab) = FIG1;
        let (lo, hi) = k_alpha_support_bracket(beta, gamma, ab);
        let n = 4000;
        let xs: Vec<f64> = (0..n).map(|i| 0.8 * lo + (1.2 * hi - 0.8 * lo) * i as f64 / (n - 1) as f64).collect();
        let y = 1e-3 * hi;
        let vals: Vec<C> = xs
            .iter()
            .map(|&x| stieltjes_k_alpha(C::new(x, y), beta, gamma, ab).unwrap().value)
            .collect();
        for i in 1..n - 1 {
            let step = (vals[i + 1] - vals[i]).norm();
            let secant = 0.5 * ((vals[i] - vals[i - 1]).norm() + (vals[i + 1] - vals[i]).norm());
            let scale = vals[i].norm() * 1e-9;
            assert!(step <= 10.0 * secant + scale, "jump at x={}: {step} vs {secant}", xs[i]);
        }
    }

    #[test]
    fn fig1_density_is_normalized_with_correct_mean() {
        let (beta, gamma, ab) = FIG1;
        let d = k_alpha_density(beta, gamma, ab, &DensityOptions::default()).unwrap();
        assert_eq!(d.intervals.len(), 1);
        assert!(d.density.normalization_defect() < 1e-3, "{}", d.density.normalization_defect());
        let mean = d.density.mean();
        let expect = gamma * (1.0 + ab * beta);
        assert!((mean / expect - 1.0).abs() < 0.02, "{mean} vs {expect}");
        assert!(d.max_residual < RESIDUAL_TOL);
        assert!(d.offset_sensitivity < 1e-4);
    }

    #[test]
    fn rank_deficient_and_split_supports() {
        // gamma < 1 adds an atom at zero; beta < 1 splits the support
        for &(beta, gamma, ab) in &[(0.3, 0.5, 100.0), (0.5, 2.0, 20.0), (2.0, 0.5, 1.0), (1.0, 1.0, 1.0)] {
            let d = k_alpha_density(beta, gamma, ab, &DensityOptions::default()).unwrap();
            let defect = d.density.normalization_defect();
            assert!(defect < 1e-3, "{beta} {gamma} {ab}: defect {defect} in {:?}", d.intervals);
            let expect = gamma * (1.0 + ab * beta);
            assert!((d.density.mean() / expect - 1.0).abs() < 0.02);
            assert!(d.max_residual < RESIDUAL_TOL);
        }
    }

    #[test]
    fn zero_alpha_density_matches_closed_form() {
        let d = k_alpha_density(5.0, 10.0, 0.0, &DensityOptions::default()).unwrap();
        let (a, b) = mp_edges(10.0);
        assert_eq!(d.intervals.len(), 1);
        assert!((d.intervals[0].0 - a).abs() < 1e-8 && (d.intervals[0].1 - b).abs() < 1e-8);
        let peak = d.density.values.iter().copied().fold(0.0, f64::max);
        for (x, v) in d.density.grid.iter().zip(&d.density.values) {
            let exact = mp_density(*x, 10.0).unwrap();
            assert!((v - exact).abs() < 1e-6 * peak, "{x}: {v} vs {exact}");
        }
    }

    #[test]
    fn fixed_grid_inversion() {
        let (beta, gamma, ab) = (5.0, 10.0, 1.0);
        let (lo, hi) = k_alpha_support_bracket(beta, gamma, ab);
        let grid: Vec<f64> = (0..4000).map(|i| 0.9 * lo + (1.1 * hi - 0.9 * lo) * i as f64 / 3999.0).collect();
        let d = aepdf_k_alpha(&grid, beta, gamma, ab, 1e-4 * hi).unwrap();
        assert!(d.normalization_defect() < 1e-3, "{}", d.normalization_defect());
        assert!(d.support.0 >= grid[0] && d.support.1 <= grid[3999]);
        assert!(aepdf_k_alpha(&grid, beta, gamma, ab, 0.0).is_err());
    }
}
