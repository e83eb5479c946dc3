//! System configuration and the closed-form coefficients of the impaired
//! dual-hop channel.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance within which a user-supplied gain is accepted as
/// consistent with the power budget in [`NuMode::FromAlpha`].
pub const NU_AGREEMENT_RTOL: f64 = 1e-12;

/// How the relay amplification gain is determined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum NuMode {
    /// `nu` is taken as given.
    Direct,
    /// `nu = alpha / (K M mu_tilde)` for a relay power budget `alpha`.
    FromAlpha { alpha: f64 },
}

/// Impairment proportionality parameters (EVM-like, dimensionless).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Impairments {
    /// User transmitters.
    pub t1: f64,
    /// Relay receiver.
    pub r1: f64,
    /// Relay transmitter.
    pub t2: f64,
    /// Base-station receiver.
    pub r2: f64,
}

impl Impairments {
    pub const NONE: Impairments = Impairments {
        t1: 0.0,
        r1: 0.0,
        t2: 0.0,
        r2: 0.0,
    };

    /// The same severity at every transceiver.
    pub fn uniform(delta: f64) -> Self {
        Impairments {
            t1: delta,
            r1: delta,
            t2: delta,
            r2: delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// K, single-antenna users.
    pub users: usize,
    /// M, relay antennas.
    pub relay_antennas: usize,
    /// N, base-station antennas.
    pub bs_antennas: usize,
    /// Per-user SNR `mu = rho / K`, linear.
    pub mu: f64,
    /// Relay amplification gain, linear. Overwritten in `FromAlpha` mode.
    pub nu: f64,
    pub delta: Impairments,
    pub nu_mode: NuMode,
}

impl SystemConfig {
    pub fn new(users: usize, relay_antennas: usize, bs_antennas: usize, mu: f64, nu: f64) -> Self {
        SystemConfig {
            users,
            relay_antennas,
            bs_antennas,
            mu,
            nu,
            delta: Impairments::NONE,
            nu_mode: NuMode::Direct,
        }
    }

    pub fn with_impairments(mut self, delta: Impairments) -> Self {
        self.delta = delta;
        self
    }

    /// Switch to fixed-gain relaying with power budget `alpha`; the gain is
    /// recomputed immediately.
    pub fn with_power_budget(mut self, alpha: f64) -> Self {
        self.nu_mode = NuMode::FromAlpha { alpha };
        self.resolve_nu();
        self
    }

    /// `mu (1 + δ_t1² + δ_r1²) + 1/K`.
    pub fn mu_tilde(&self) -> f64 {
        let d = &self.delta;
        self.mu * (1.0 + d.t1 * d.t1 + d.r1 * d.r1) + 1.0 / self.users as f64
    }

    /// Total user power `rho = K mu`.
    pub fn rho(&self) -> f64 {
        self.users as f64 * self.mu
    }

    /// Relay power budget implied by the current gain, `nu K M mu_tilde`.
    pub fn implied_alpha(&self) -> f64 {
        match self.nu_mode {
            NuMode::FromAlpha { alpha } => alpha,
            NuMode::Direct => {
                self.nu * self.users as f64 * self.relay_antennas as f64 * self.mu_tilde()
            }
        }
    }

    /// In `FromAlpha` mode, replace `nu` by `alpha / (K M mu_tilde)` unless it
    /// already agrees to [`NU_AGREEMENT_RTOL`].
    pub fn resolve_nu(&mut self) {
        if let NuMode::FromAlpha { alpha } = self.nu_mode {
            let derived =
                alpha / (self.users as f64 * self.relay_antennas as f64 * self.mu_tilde());
            if !((self.nu - derived).abs() <= NU_AGREEMENT_RTOL * derived.abs()) {
                self.nu = derived;
            }
        }
    }

    pub fn resolved(mut self) -> Self {
        self.resolve_nu();
        self
    }

    pub fn beta(&self) -> f64 {
        self.users as f64 / self.relay_antennas as f64
    }

    pub fn gamma(&self) -> f64 {
        self.bs_antennas as f64 / self.relay_antennas as f64
    }
}

/// A single failed invariant, naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Violation {
            field: field.to_owned(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Every invariant of `cfg` that does not hold; empty when the configuration
/// is usable.
pub fn validate_config(cfg: &SystemConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    for (field, v) in [
        ("users", cfg.users),
        ("relay_antennas", cfg.relay_antennas),
        ("bs_antennas", cfg.bs_antennas),
    ] {
        if v == 0 {
            out.push(Violation::new(field, format!("{field} must be at least 1")));
        }
    }
    if !(cfg.mu.is_finite() && cfg.mu > 0.0) {
        out.push(Violation::new("mu", "mu must be positive"));
    }
    match cfg.nu_mode {
        NuMode::Direct => {
            if !(cfg.nu.is_finite() && cfg.nu > 0.0) {
                out.push(Violation::new("nu", "nu must be positive"));
            }
        }
        NuMode::FromAlpha { alpha } => {
            if !(alpha.is_finite() && alpha > 0.0) {
                out.push(Violation::new("alpha", "alpha must be positive"));
            }
        }
    }
    let d = &cfg.delta;
    for (field, v) in [
        ("delta_t1", d.t1),
        ("delta_r1", d.r1),
        ("delta_t2", d.t2),
        ("delta_r2", d.r2),
    ] {
        if !v.is_finite() {
            out.push(Violation::new(field, format!("{field} must be finite")));
        } else if v < 0.0 {
            out.push(Violation::new(field, format!("{field} must be non-negative, got {v}")));
        }
    }
    out
}

/// Derived algebra of the impaired channel.
///
/// The capacity is `C = C1 - C2` with `C_i = (1/N) E ln det(I_M + f3 H₂ᴴH₂
/// (I_M + α_i H₁H₁ᴴ))`, where `α_1 = f1` and `α_2 = f2/f3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    /// K / M.
    pub beta: f64,
    /// N / M.
    pub gamma: f64,
    pub mu_tilde: f64,
    /// The resolved relay gain the coefficients were derived with.
    pub nu: f64,
    /// `δ_r2² mu_tilde nu K M + 1`.
    pub b: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
    /// `M f1`.
    pub alpha_bar_c1: f64,
    /// `M f2 / f3`.
    pub alpha_bar_c2: f64,
    /// `f3 M`, the argument scale of the Shannon integrand.
    pub shannon_scale: f64,
}

impl Coefficients {
    /// Unbarred α for the first (`C1`) determinant.
    pub fn alpha_c1(&self) -> f64 {
        self.f1
    }

    /// Unbarred α for the second (`C2`) determinant.
    pub fn alpha_c2(&self) -> f64 {
        self.f2 / self.f3
    }
}

pub fn derive_coefficients(cfg: &SystemConfig) -> Result<Coefficients> {
    let violations = validate_config(cfg);
    if !violations.is_empty() {
        return Err(Error::InvalidConfig(violations));
    }
    let cfg = cfg.resolved();
    let k = cfg.users as f64;
    let m = cfg.relay_antennas as f64;
    let d = &cfg.delta;
    let (mu, nu) = (cfg.mu, cfg.nu);
    let mu_tilde = cfg.mu_tilde();

    let b = d.r2 * d.r2 * mu_tilde * nu * k * m + 1.0;
    let f4 = mu * nu / b;
    let f2 = f4 * d.t1 * d.t1;
    let f3 = nu * (d.t2 * d.t2 * mu_tilde * k + d.r1 * d.r1 * mu * k + 1.0) / b;
    let f1 = (f2 + f4) / f3;

    Ok(Coefficients {
        beta: cfg.beta(),
        gamma: cfg.gamma(),
        mu_tilde,
        nu,
        b,
        f1,
        f2,
        f3,
        f4,
        alpha_bar_c1: m * f1,
        alpha_bar_c2: m * f2 / f3,
        shannon_scale: f3 * m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fig1() -> SystemConfig {
        SystemConfig::new(50, 10, 100, 100.0, 100.0)
    }

    #[test]
    fn ideal_hardware_coefficients() {
        let c = derive_coefficients(&fig1()).unwrap();
        assert_eq!(c.beta, 5.0);
        assert_eq!(c.gamma, 10.0);
        assert!((c.mu_tilde - 100.02).abs() < 1e-12);
        assert_eq!(c.b, 1.0);
        assert_eq!(c.f2, 0.0);
        assert_eq!(c.f4, 10_000.0);
        assert_eq!(c.f3, 100.0);
        assert_eq!(c.f1, 100.0);
        assert_eq!(c.alpha_bar_c2, 0.0);
        assert_eq!(c.f1 * c.f3, c.f2 + c.f4);
    }

    #[test]
    fn mu_tilde_offset_is_inverse_users() {
        let cfg = fig1();
        assert!((cfg.mu_tilde() - cfg.mu - 0.02).abs() < 1e-12);
    }

    #[test]
    fn impaired_coefficients_by_hand() {
        let cfg = fig1().with_impairments(Impairments::uniform(0.08));
        let c = derive_coefficients(&cfg).unwrap();
        let mt = 100.0 * (1.0 + 0.0064 + 0.0064) + 0.02;
        assert!((c.mu_tilde - 101.3).abs() < 1e-12);
        let b = 0.0064 * mt * 100.0 * 50.0 * 10.0 + 1.0;
        assert!((c.b - b).abs() < 1e-9 * b);
        let f4 = 1e4 / b;
        assert!((c.f4 - f4).abs() < 1e-12 * f4);
        assert!((c.f2 - f4 * 0.0064).abs() < 1e-12 * f4);
        let f3 = 100.0 * (0.0064 * mt * 50.0 + 0.0064 * 100.0 * 50.0 + 1.0) / b;
        assert!((c.f3 - f3).abs() < 1e-12 * f3);
        assert!((c.alpha_bar_c1 - 10.0 * (c.f2 + c.f4) / c.f3).abs() < 1e-12 * c.alpha_bar_c1);
    }

    #[test]
    fn validation_names_fields() {
        assert!(validate_config(&fig1()).is_empty());

        let mut bad = fig1();
        bad.mu = 0.0;
        let v = validate_config(&bad);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "mu");
        assert_eq!(v[0].message, "mu must be positive");

        let bad = fig1().with_impairments(Impairments {
            t1: -0.1,
            ..Impairments::NONE
        });
        let v = validate_config(&bad);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "delta_t1");
        assert!(v[0].message.contains("non-negative"));

        let mut bad = fig1();
        bad.users = 0;
        bad.nu = -1.0;
        let fields: Vec<_> = validate_config(&bad).into_iter().map(|v| v.field).collect();
        assert_eq!(fields, ["users", "nu"]);
        assert!(matches!(derive_coefficients(&bad), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn from_alpha_recomputes_gain() {
        let cfg = fig1().with_impairments(Impairments::uniform(0.05));
        let alpha = 3.0e5;
        let tied = cfg.with_power_budget(alpha);
        let expect = alpha / (50.0 * 10.0 * cfg.mu_tilde());
        assert!((tied.nu - expect).abs() < 1e-15 * expect);
        assert_eq!(tied.implied_alpha(), alpha);

        // near-agreeing user value survives, a disagreeing one is overwritten
        let mut near = tied;
        near.nu = expect * (1.0 + 1e-14);
        assert_eq!(near.resolved().nu, near.nu);
        let mut far = tied;
        far.nu = 7.0;
        assert!((far.resolved().nu - expect).abs() < 1e-15 * expect);
    }

    fn random_config(rng: &mut impl Rng) -> SystemConfig {
        let delta = Impairments {
            t1: rng.random_range(0.0..0.3),
            r1: rng.random_range(0.0..0.3),
            t2: rng.random_range(0.0..0.3),
            r2: rng.random_range(0.0..0.3),
        };
        SystemConfig::new(
            rng.random_range(1..200),
            rng.random_range(1..100),
            rng.random_range(1..300),
            10f64.powf(rng.random_range(-2.0..5.0)),
            10f64.powf(rng.random_range(-2.0..5.0)),
        )
        .with_impairments(delta)
    }

    #[test]
    fn defining_identity_and_bounds_hold_for_random_configs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100_000 {
            let c = derive_coefficients(&random_config(&mut rng)).unwrap();
            let lhs = c.f1 * c.f3;
            let rhs = c.f2 + c.f4;
            assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * rhs, "{lhs} vs {rhs}");
            assert!(c.b >= 1.0 && c.f3 > 0.0 && c.f4 > 0.0 && c.f2 >= 0.0);
            assert!(c.f1 >= c.f4 / c.f3 * (1.0 - 1e-15));
        }
    }

    #[test]
    fn zero_impairments_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let mut cfg = random_config(&mut rng);
            cfg.delta = Impairments::NONE;
            let c = derive_coefficients(&cfg).unwrap();
            assert_eq!(c.b, 1.0);
            assert_eq!(c.f2, 0.0);
            assert_eq!(c.alpha_bar_c2, 0.0);
        }
    }

    #[test]
    fn coefficients_are_lipschitz_in_delta() {
        let base = fig1().with_impairments(Impairments::uniform(0.08));
        let c0 = derive_coefficients(&base).unwrap();
        let fields = |c: &Coefficients| [c.mu_tilde, c.b, c.f1, c.f2, c.f3, c.f4];
        for which in 0..4 {
            let mut slopes = Vec::new();
            for eps in [1e-4, 1e-5, 1e-6] {
                let mut cfg = base;
                match which {
                    0 => cfg.delta.t1 += eps,
                    1 => cfg.delta.r1 += eps,
                    2 => cfg.delta.t2 += eps,
                    _ => cfg.delta.r2 += eps,
                }
                let c = derive_coefficients(&cfg).unwrap();
                let s: Vec<f64> = fields(&c)
                    .iter()
                    .zip(fields(&c0))
                    .map(|(a, b)| (a - b).abs() / (eps * b.abs().max(1.0)))
                    .collect();
                slopes.push(s);
            }
            // finite-difference slopes settle instead of blowing up as eps shrinks
            for j in 0..6 {
                let (a, b) = (slopes[1][j], slopes[2][j]);
                assert!(b < 1e3, "delta {which} field {j}: slope {b}");
                assert!((a - b).abs() <= 1e-2 * a.max(1e-6) + 1e-6, "{a} vs {b}");
            }
        }
    }
}
