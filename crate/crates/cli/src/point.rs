use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use afrelay::capacity::{asymptotic_capacity, branch_densities, mc_ergodic_capacity};
use afrelay::freeprob::DensityOptions;
use afrelay::montecarlo::{collect_eigenvalues, empirical_density};
use afrelay::params::derive_coefficients;
use afrelay::{CapacityResult, Coefficients, Dims, SystemConfig};
use serde::Serialize;

use crate::args::Units;
use crate::error::{CliError, CliResult};

/// Everything known about a single configuration.
#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub units: Units,
    /// With the gain resolved.
    pub config: SystemConfig,
    pub coefficients: Coefficients,
    pub asymptotic: CapacityResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<CapacityResult>,
    /// `asymptotic.c / monte_carlo.c`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement_ratio: Option<f64>,
}

fn in_units(r: CapacityResult, units: Units) -> CapacityResult {
    match units {
        Units::Nats => r,
        Units::Bits => r.to_bits(),
    }
}

pub fn run_point(cfg: &SystemConfig, mc_trials: usize, seed: u64, units: Units) -> CliResult<PointReport> {
    let coefficients = derive_coefficients(cfg)?;
    let asymptotic = asymptotic_capacity(cfg)?;
    let monte_carlo = if mc_trials > 0 {
        Some(mc_ergodic_capacity(cfg, mc_trials, seed)?)
    } else {
        None
    };
    let agreement_ratio = monte_carlo.as_ref().map(|m| asymptotic.c / m.c);
    Ok(PointReport {
        units,
        config: cfg.resolved(),
        coefficients,
        asymptotic: in_units(asymptotic, units),
        monte_carlo: monte_carlo.map(|m| in_units(m, units)),
        agreement_ratio,
    })
}

/// Files written by [`export_densities`].
#[derive(Debug, Clone, Serialize)]
pub struct DensityExport {
    pub density_c1: PathBuf,
    pub density_c2: PathBuf,
    pub histogram: PathBuf,
    pub eigenvalues: PathBuf,
    pub report: PathBuf,
    /// KS distance between the first-branch density and the pooled samples.
    pub ks_distance: f64,
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Limiting densities of both determinant branches, the simulated
/// eigenvalues of `K_α/M` for the first branch with their histogram, and
/// the point report, all under `dir`.
pub fn export_densities(
    cfg: &SystemConfig,
    trials: usize,
    seed: u64,
    bins: usize,
    units: Units,
    dir: &Path,
) -> CliResult<DensityExport> {
    if trials == 0 {
        return Err(CliError::Validation("the density export needs --mc-trials of at least 1".into()));
    }
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let co = derive_coefficients(cfg)?;
    let branches = branch_densities(cfg, &DensityOptions::default())?;
    let samples = collect_eigenvalues(Dims::of(cfg), co.alpha_c1(), trials, seed)?;
    let hist = empirical_density(&samples.values, bins)?;
    let ks_distance = branches.c1.ks_distance_to_samples(&samples.values);

    let out = DensityExport {
        density_c1: dir.join("density_c1.csv"),
        density_c2: dir.join("density_c2.csv"),
        histogram: dir.join("histogram_c1.csv"),
        eigenvalues: dir.join("eigenvalues_c1.csv"),
        report: dir.join("report.json"),
        ks_distance,
    };
    branches.c1.write_csv(create(&out.density_c1)?)?;
    branches.c2.write_csv(create(&out.density_c2)?)?;
    hist.write_csv(create(&out.histogram)?)?;
    samples.write_csv(create(&out.eigenvalues)?)?;

    let report = run_point(cfg, trials, seed, units)?;
    let json = serde_json::json!({ "point": report, "ks_distance": ks_distance });
    serde_json::to_writer_pretty(create(&out.report)?, &json)?;
    Ok(out)
}
