//! Quartic equation for the Stieltjes transform of `K_α/M`, and a
//! closed-form complex quartic solver.
//!
//! With `u = −zS` and `ψ = S − (γ−1)/z`, the fixed point
//! `z·η⁻¹_K(−zS) + 1 = 0` becomes `ψ = η⁻¹_{M̃_α}(u)`. Clearing the square
//! root of the inverse η-transform leaves
//! `u²ᾱψ² + u(uᾱ + βᾱ − ᾱ + 1)ψ + u − 1 = 0`, which is quartic in `S`.
//! Squaring admits the roots of the other square-root branch as well, so
//! roots must be screened afterwards (see `stieltjes`).

use num_complex::Complex64;

type C = Complex64;

/// Coefficients `[c4, c3, c2, c1, c0]` of the quartic in `S` at `z`.
///
/// `c4 = ᾱz²`, `c3 = ᾱz(z + 2(1−γ))`,
/// `c2 = ᾱ(γ−1)² + z(ᾱ(2−β−γ) − 1)`,
/// `c1 = ᾱ(β(γ−1) − γ + 1) + γ − 1 − z`, `c0 = −1`.
///
/// As `ᾱ → 0` this degrades to `−(zS² + (z − γ + 1)S + 1)`, the
/// Marčenko–Pastur equation at ratio `γ`.
pub fn quartic_coefficients(z: C, beta: f64, gamma: f64, alpha_bar: f64) -> [C; 5] {
    let ab = alpha_bar;
    let g1 = gamma - 1.0;
    [
        z * z * ab,
        z * ab * (z + 2.0 * (1.0 - gamma)),
        z * (ab * (2.0 - beta - gamma) - 1.0) + ab * g1 * g1,
        C::new(ab * (beta * g1 - gamma + 1.0) + g1, 0.0) - z,
        C::new(-1.0, 0.0),
    ]
}

/// Horner evaluation of a polynomial given highest degree first, with its
/// derivative.
pub fn eval_with_derivative(coeffs: &[C], x: C) -> (C, C) {
    let mut p = C::new(0.0, 0.0);
    let mut dp = C::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

fn eval_abs_bound(coeffs: &[C], x: C) -> f64 {
    let r = x.norm();
    coeffs.iter().fold(0.0, |acc, c| acc * r + c.norm())
}

/// Roots of `a x² + b x + c` (`a ≠ 0`) without cancellation.
pub fn solve_quadratic(a: C, b: C, c: C) -> [C; 2] {
    let disc = (b * b - a * c * 4.0).sqrt();
    let q = if (b.conj() * disc).re >= 0.0 {
        -(b + disc) * 0.5
    } else {
        -(b - disc) * 0.5
    };
    if q.norm() == 0.0 {
        return [C::new(0.0, 0.0); 2];
    }
    [q / a, c / q]
}

/// Roots of the monic cubic `x³ + a x² + b x + c` by Cardano's formula.
fn solve_monic_cubic(a: C, b: C, c: C) -> [C; 3] {
    let p = b - a * a / 3.0;
    let q = a * a * a * (2.0 / 27.0) - a * b / 3.0 + c;
    let shift = -a / 3.0;
    let disc = (q * q * 0.25 + p * p * p / 27.0).sqrt();
    // pick the larger of −q/2 ± √disc to keep u away from zero
    let w1 = -q * 0.5 + disc;
    let w2 = -q * 0.5 - disc;
    let w = if w1.norm() >= w2.norm() { w1 } else { w2 };
    let omega = C::new(-0.5, 3f64.sqrt() * 0.5);
    if w.norm() == 0.0 {
        // p = q = 0: triple root
        return [C::new(0.0, 0.0) + shift; 3];
    }
    let u0 = w.cbrt();
    let mut out = [C::new(0.0, 0.0); 3];
    let mut u = u0;
    for r in out.iter_mut() {
        let v = -p / (u * 3.0);
        *r = u + v + shift;
        u *= omega;
    }
    out
}

fn newton_polish(coeffs: &[C], mut x: C, iters: usize) -> C {
    for _ in 0..iters {
        let (p, dp) = eval_with_derivative(coeffs, x);
        if p.norm() == 0.0 || dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        let next = x - step;
        let (pn, _) = eval_with_derivative(coeffs, next);
        if !(pn.norm() < p.norm()) {
            break;
        }
        x = next;
        if step.norm() <= 4.0 * f64::EPSILON * x.norm() {
            break;
        }
    }
    x
}

/// All four roots of `c4 x⁴ + c3 x³ + c2 x² + c1 x + c0` (`c4 ≠ 0`), by
/// Ferrari's resolvent cubic followed by Newton polishing on the original
/// polynomial.
pub fn solve_quartic(coeffs: &[C; 5]) -> [C; 4] {
    let lead = coeffs[0];
    let a = coeffs[1] / lead;
    let b = coeffs[2] / lead;
    let c = coeffs[3] / lead;
    let d = coeffs[4] / lead;

    // depressed quartic t⁴ + p t² + q t + r with x = t − a/4
    let shift = -a / 4.0;
    let a2 = a * a;
    let p = b - a2 * (3.0 / 8.0);
    let q = c - a * b / 2.0 + a2 * a / 8.0;
    let r = d - a * c / 4.0 + a2 * b / 16.0 - a2 * a2 * (3.0 / 256.0);

    let ts: [C; 4] = if q.norm() <= 1e-14 * (p.norm().powf(1.5) + r.norm().powf(0.75) + f64::MIN_POSITIVE) {
        // biquadratic
        let [y1, y2] = solve_quadratic(C::new(1.0, 0.0), p, r);
        let (s1, s2) = (y1.sqrt(), y2.sqrt());
        [s1, -s1, s2, -s2]
    } else {
        // 8m³ + 8pm² + (2p² − 8r)m − q² = 0
        let ms = solve_monic_cubic(p, p * p * 0.25 - r, -q * q / 8.0);
        let m = ms
            .iter()
            .copied()
            .max_by(|x, y| x.norm().total_cmp(&y.norm()))
            .unwrap();
        let s = (m * 2.0).sqrt();
        let k = q / (s * 2.0);
        let one = C::new(1.0, 0.0);
        let [t1, t2] = solve_quadratic(one, -s, p * 0.5 + m + k);
        let [t3, t4] = solve_quadratic(one, s, p * 0.5 + m - k);
        [t1, t2, t3, t4]
    };

    let mut roots = ts.map(|t| t + shift);
    for x in roots.iter_mut() {
        *x = newton_polish(coeffs, *x, 8);
    }
    repair_by_deflation(coeffs, &mut roots);
    refine_close_pair(coeffs, &mut roots);
    roots
}

/// Backward error below which a polished root is trusted for deflation.
const GOOD_ROOT: f64 = 1e-12;

/// Divide out the root `r`, highest degree first. Forward division (from the
/// leading coefficient) is stable when `r` is smaller than the remaining
/// roots, backward division (from the constant term) when it is larger.
fn deflate(coeffs: &[C], r: C, forward: bool) -> Vec<C> {
    let n = coeffs.len() - 1;
    let mut q = vec![C::new(0.0, 0.0); n];
    if forward {
        q[0] = coeffs[0];
        for i in 1..n {
            q[i] = coeffs[i] + r * q[i - 1];
        }
    } else {
        // lowest-degree first: b₀ = −a₀/r, bᵢ = (bᵢ₋₁ − aᵢ)/r
        let mut prev = -coeffs[n] / r;
        q[n - 1] = prev;
        for i in 1..n {
            prev = (prev - coeffs[n - i]) / r;
            q[n - 1 - i] = prev;
        }
    }
    q
}

fn solve_low_degree(coeffs: &[C]) -> Vec<C> {
    match coeffs.len() {
        2 => vec![-coeffs[1] / coeffs[0]],
        3 => solve_quadratic(coeffs[0], coeffs[1], coeffs[2]).to_vec(),
        4 => {
            let l = coeffs[0];
            solve_monic_cubic(coeffs[1] / l, coeffs[2] / l, coeffs[3] / l).to_vec()
        }
        _ => Vec::new(),
    }
}

/// Ferrari's formulas can lose the small roots entirely when the root
/// magnitudes span many decades. Recover them from the quotient left after
/// dividing out the roots that did come out accurately.
fn repair_by_deflation(coeffs: &[C; 5], roots: &mut [C; 4]) {
    let mut good: Vec<usize> = Vec::new();
    for i in 0..4 {
        let r = roots[i];
        let distinct = good.iter().all(|&g| (roots[g] - r).norm() > 1e-10 * r.norm());
        if distinct && roots[i].is_finite() && relative_residual(coeffs, r) <= GOOD_ROOT {
            good.push(i);
        }
    }
    if good.len() == 4 || good.is_empty() {
        return;
    }
    let bad: Vec<usize> = (0..4).filter(|i| !good.contains(i)).collect();
    let worst = |rs: &[C]| rs.iter().map(|&r| relative_residual(coeffs, r)).fold(0.0, f64::max);
    let mut best: Option<(f64, Vec<C>)> = None;
    for forward in [false, true] {
        let mut order = good.clone();
        // remove the largest roots first from the bottom, the smallest from the top
        order.sort_by(|&a, &b| roots[a].norm().total_cmp(&roots[b].norm()));
        if !forward {
            order.reverse();
        }
        let mut q = coeffs.to_vec();
        for &g in &order {
            q = deflate(&q, roots[g], forward);
        }
        let cand: Vec<C> = solve_low_degree(&q)
            .into_iter()
            .map(|x| newton_polish(coeffs, x, 8))
            .collect();
        if cand.len() != bad.len() || cand.iter().any(|x| !x.is_finite()) {
            continue;
        }
        let w = worst(&cand);
        if best.as_ref().is_none_or(|(bw, _)| w < *bw) {
            best = Some((w, cand));
        }
    }
    let current: Vec<C> = bad.iter().map(|&i| roots[i]).collect();
    if let Some((w, cand)) = best {
        if w < worst(&current) {
            for (&i, x) in bad.iter().zip(cand) {
                roots[i] = x;
            }
        }
    }
}

/// Coefficients of `p(m + w)` in `w`, highest degree first.
fn taylor_shift(coeffs: &[C], m: C) -> Vec<C> {
    let mut a = coeffs.to_vec();
    let n = a.len();
    for k in 0..n - 1 {
        for i in 1..n - k {
            let prev = a[i - 1];
            a[i] += prev * m;
        }
    }
    a
}

/// Re-solve the closest pair of roots when it is much tighter than its
/// distance to the rest.
///
/// Ferrari's formulas lose about half the digits of an almost double root,
/// and Newton started between the two can stall on the saddle of `|p|`
/// between them. Expanding `p` about the pair's midpoint and solving the
/// local quadratic puts both estimates on the right side first.
fn refine_close_pair(coeffs: &[C; 5], roots: &mut [C; 4]) {
    let mut best = (0, 1, f64::INFINITY);
    for i in 0..4 {
        for j in (i + 1)..4 {
            let d = (roots[i] - roots[j]).norm();
            if d < best.2 {
                best = (i, j, d);
            }
        }
    }
    let (i, j, sep) = best;
    let others = (0..4)
        .filter(|&k| k != i && k != j)
        .flat_map(|k| [(roots[k] - roots[i]).norm(), (roots[k] - roots[j]).norm()])
        .fold(f64::INFINITY, f64::min);
    if !(sep < 0.1 * others) {
        return;
    }
    let m = (roots[i] + roots[j]) * 0.5;
    let d = taylor_shift(coeffs, m);
    // p(m + w) ≈ d[2] w² + d[3] w + d[4] for |w| ≪ the distance to the others
    if d[2].norm() == 0.0 {
        return;
    }
    let [w1, w2] = solve_quadratic(d[2], d[3], d[4]);
    let (a, b) = (newton_polish(coeffs, m + w1, 8), newton_polish(coeffs, m + w2, 8));
    let before = relative_residual(coeffs, roots[i]).max(relative_residual(coeffs, roots[j]));
    let after = relative_residual(coeffs, a).max(relative_residual(coeffs, b));
    if after <= before && (a - b).norm() > 0.0 {
        roots[i] = a;
        roots[j] = b;
    }
}

/// Relative backward error `|p(x)| / Σ|cᵢ||x|ⁱ` of a candidate root.
pub fn relative_residual(coeffs: &[C], x: C) -> f64 {
    let (p, _) = eval_with_derivative(coeffs, x);
    let bound = eval_abs_bound(coeffs, x);
    if bound == 0.0 {
        0.0
    } else {
        p.norm() / bound
    }
}
