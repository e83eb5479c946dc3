//! Parameter sets of the reference figures.
//!
//! Every preset uses K = 50, M = 10, N = 100 (β = 5, γ = 10) and
//! μ = ν = 20 dB wherever those are not the swept quantity.

use afrelay::{db_to_linear, SystemConfig};

use crate::args::Preset;
use crate::sweep::Axis;

/// One curve: fixed overrides on top of the baseline, then a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub overrides: Vec<(Axis, f64)>,
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PresetKind {
    /// Densities of both branches plus the Monte Carlo histogram.
    Density,
    Sweeps(Vec<Series>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresetPlan {
    pub baseline: SystemConfig,
    /// Used when `--mc-trials` is not given.
    pub default_mc_trials: usize,
    pub kind: PresetKind,
}

pub const FIG_DELTAS: [f64; 4] = [0.0, 0.01, 0.08, 0.15];

pub fn baseline() -> SystemConfig {
    SystemConfig::new(50, 10, 100, db_to_linear(20.0), db_to_linear(20.0))
}

fn mu_curves(deltas: &[f64]) -> Vec<Series> {
    deltas
        .iter()
        .map(|&d| Series {
            overrides: vec![(Axis::Delta, d)],
            axis: Axis::MuDb,
            start: 0.0,
            stop: 50.0,
            steps: 11,
        })
        .collect()
}

/// Grid in (ν, μ): one μ curve per ν from 0 to 50 dB.
fn snr_surface(delta: f64) -> Vec<Series> {
    (0..=5)
        .map(|i| Series {
            overrides: vec![(Axis::Delta, delta), (Axis::NuDb, 10.0 * i as f64)],
            axis: Axis::MuDb,
            start: 0.0,
            stop: 50.0,
            steps: 11,
        })
        .collect()
}

/// Grid in (γ, β): one β curve from 1 to 10 per γ from 1 to 10.
fn dimension_surface(delta: f64) -> Vec<Series> {
    (1..=10)
        .map(|g| Series {
            overrides: vec![(Axis::Delta, delta), (Axis::Gamma, g as f64)],
            axis: Axis::Beta,
            start: 1.0,
            stop: 10.0,
            steps: 10,
        })
        .collect()
}

pub fn plan(p: Preset) -> PresetPlan {
    let (kind, default_mc_trials) = match p {
        Preset::Fig1 => (PresetKind::Density, 1000),
        Preset::Fig2 => (PresetKind::Sweeps(mu_curves(&FIG_DELTAS)), 500),
        Preset::Fig3a => (PresetKind::Sweeps(snr_surface(0.0)), 0),
        Preset::Fig3b => (PresetKind::Sweeps(snr_surface(0.08)), 0),
        Preset::Fig4a => (PresetKind::Sweeps(dimension_surface(0.0)), 0),
        Preset::Fig4b => (PresetKind::Sweeps(dimension_surface(0.08)), 0),
    };
    PresetPlan {
        baseline: baseline(),
        default_mc_trials,
        kind,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use afrelay::Impairments;

    #[test]
    fn baseline_dimensions_and_snr() {
        let b = baseline();
        assert_eq!((b.users, b.relay_antennas, b.bs_antennas), (50, 10, 100));
        assert_eq!(b.beta(), 5.0);
        assert_eq!(b.gamma(), 10.0);
        assert!((b.mu - 100.0).abs() < 1e-12 && (b.nu - 100.0).abs() < 1e-12);
        assert_eq!(b.delta, Impairments::NONE);
    }

    #[test]
    fn fig2_has_one_curve_per_delta() {
        let PresetKind::Sweeps(s) = plan(Preset::Fig2).kind else { panic!() };
        let ds: Vec<f64> = s.iter().map(|c| c.overrides[0].1).collect();
        assert_eq!(ds, FIG_DELTAS);
        assert!(s.iter().all(|c| c.axis == Axis::MuDb));
    }

    #[test]
    fn impaired_presets_use_008() {
        for p in [Preset::Fig3b, Preset::Fig4b] {
            let PresetKind::Sweeps(s) = plan(p).kind else { panic!() };
            assert!(s.iter().all(|c| c.overrides.contains(&(Axis::Delta, 0.08))));
        }
        for p in [Preset::Fig3a, Preset::Fig4a] {
            let PresetKind::Sweeps(s) = plan(p).kind else { panic!() };
            assert!(s.iter().all(|c| c.overrides.contains(&(Axis::Delta, 0.0))));
        }
    }

    #[test]
    fn fig1_is_a_density_export() {
        let p = plan(Preset::Fig1);
        assert_eq!(p.kind, PresetKind::Density);
        assert!(p.default_mc_trials >= 1000);
    }
}
