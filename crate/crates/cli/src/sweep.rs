use std::fmt;
use std::io::Write;
use std::str::FromStr;

use afrelay::capacity::{asymptotic_capacity, mc_ergodic_capacity};
use afrelay::{db_to_linear, linear_to_db, Impairments, NuMode, SystemConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::Units;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    MuDb,
    NuDb,
    Beta,
    Gamma,
    Delta,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::MuDb => "mu_db",
            Axis::NuDb => "nu_db",
            Axis::Beta => "beta",
            Axis::Gamma => "gamma",
            Axis::Delta => "delta",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Ok(match s {
            "mu_db" => Axis::MuDb,
            "nu_db" => Axis::NuDb,
            "beta" => Axis::Beta,
            "gamma" => Axis::Gamma,
            "delta" => Axis::Delta,
            _ => {
                return Err(CliError::Validation(format!(
                    "sweep axis must be one of mu_db, nu_db, beta, gamma, delta; got {s:?}"
                )))
            }
        })
    }
}

/// `antennas = round(ratio·M)`, with a note when the product is not whole.
fn ratio_to_count(ratio: f64, m: usize, what: &str, notes: &mut Vec<String>) -> Result<usize, String> {
    let exact = ratio * m as f64;
    if !(exact.is_finite() && exact > 0.0) {
        return Err(format!("{what} must be positive, got {ratio}"));
    }
    let n = exact.round();
    if n < 1.0 {
        return Err(format!("{what} = {ratio} gives fewer than one antenna at M = {m}"));
    }
    if (n - exact).abs() > 1e-9 * exact {
        notes.push(format!("{what}·M = {exact} is not an integer; using {n}"));
    }
    Ok(n as usize)
}

/// Set one axis of `cfg`. Messages about rounding go to `notes`.
pub fn apply_axis(
    cfg: &SystemConfig,
    axis: Axis,
    value: f64,
    notes: &mut Vec<String>,
) -> Result<SystemConfig, String> {
    let mut c = *cfg;
    match axis {
        Axis::MuDb => c.mu = db_to_linear(value),
        Axis::NuDb => {
            if let NuMode::FromAlpha { .. } = c.nu_mode {
                return Err("cannot sweep nu_db while the gain is derived from alpha".into());
            }
            c.nu = db_to_linear(value);
        }
        Axis::Beta => c.users = ratio_to_count(value, c.relay_antennas, "beta", notes)?,
        Axis::Gamma => c.bs_antennas = ratio_to_count(value, c.relay_antennas, "gamma", notes)?,
        Axis::Delta => c.delta = Impairments::uniform(value),
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    pub fixed: SystemConfig,
    /// 0 disables the Monte Carlo column.
    pub mc_trials: usize,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> CliResult<()> {
        if self.steps < 2 {
            return Err(CliError::Validation(format!("sweep needs at least 2 steps, got {}", self.steps)));
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.start < self.stop) {
            return Err(CliError::Validation(format!(
                "sweep needs start < stop, got {} and {}",
                self.start, self.stop
            )));
        }
        Ok(())
    }

    /// Evenly spaced values from `start` to `stop` inclusive.
    pub fn values(&self) -> Vec<f64> {
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.stop } else { self.start + h * i as f64 })
            .collect()
    }
}

/// Parse `AXIS START STOP STEPS`.
pub fn parse_sweep(parts: &[String], fixed: SystemConfig, mc_trials: usize, seed: u64) -> CliResult<SweepSpec> {
    let [axis, start, stop, steps] = parts else {
        return Err(CliError::Validation("--sweep takes AXIS START STOP STEPS".into()));
    };
    let num = |s: &str, what: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::Validation(format!("sweep {what} must be a number, got {s:?}")))
    };
    let spec = SweepSpec {
        axis: axis.parse()?,
        start: num(start, "start")?,
        stop: num(stop, "stop")?,
        steps: steps
            .parse()
            .map_err(|_| CliError::Validation(format!("sweep steps must be a count, got {steps:?}")))?,
        fixed,
        mc_trials,
        seed,
    };
    spec.validate()?;
    Ok(spec)
}

/// One evaluated grid point. Capacities are NaN when the point failed and
/// `None` when not requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: Axis,
    pub value: f64,
    #[serde(rename = "K")]
    pub users: usize,
    #[serde(rename = "M")]
    pub relay_antennas: usize,
    #[serde(rename = "N")]
    pub bs_antennas: usize,
    pub mu_db: f64,
    pub nu_db: f64,
    pub delta_t1: f64,
    pub delta_r1: f64,
    pub delta_t2: f64,
    pub delta_r2: f64,
    pub c_asym: f64,
    pub c1: f64,
    pub c2: f64,
    pub c_mc: Option<f64>,
    pub ci: Option<f64>,
    pub defect: f64,
}

pub const CSV_HEADER: &str =
    "axis,value,K,M,N,mu_db,nu_db,delta_t1,delta_r1,delta_t2,delta_r2,c_asym,c1,c2,c_mc,ci,defect";

impl SweepRow {
    fn blank(axis: Axis, value: f64, cfg: &SystemConfig, mc: bool) -> Self {
        let r = cfg.resolved();
        SweepRow {
            axis,
            value,
            users: r.users,
            relay_antennas: r.relay_antennas,
            bs_antennas: r.bs_antennas,
            mu_db: linear_to_db(r.mu),
            nu_db: linear_to_db(r.nu),
            delta_t1: r.delta.t1,
            delta_r1: r.delta.r1,
            delta_t2: r.delta.t2,
            delta_r2: r.delta.r2,
            c_asym: f64::NAN,
            c1: f64::NAN,
            c2: f64::NAN,
            c_mc: mc.then_some(f64::NAN),
            ci: mc.then_some(f64::NAN),
            defect: f64::NAN,
        }
    }

    pub fn csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.axis,
            self.value,
            self.users,
            self.relay_antennas,
            self.bs_antennas,
            self.mu_db,
            self.nu_db,
            self.delta_t1,
            self.delta_r1,
            self.delta_t2,
            self.delta_r2,
            self.c_asym,
            self.c1,
            self.c2,
            opt(self.c_mc),
            opt(self.ci),
            self.defect
        )
    }

    fn in_units(mut self, units: Units) -> Self {
        if units == Units::Bits {
            let k = std::f64::consts::LOG2_E;
            self.c_asym *= k;
            self.c1 *= k;
            self.c2 *= k;
            self.c_mc = self.c_mc.map(|v| v * k);
            self.ci = self.ci.map(|v| v * k);
        }
        self
    }
}

/// Evaluate one point; failures are reported on stderr and leave NaN cells.
pub fn evaluate_point(axis: Axis, value: f64, base: &SystemConfig, mc_trials: usize, seed: u64) -> SweepRow {
    let mut notes = Vec::new();
    let cfg = match apply_axis(base, axis, value, &mut notes) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("warning: {axis} = {value}: {e}");
            return SweepRow::blank(axis, value, base, mc_trials > 0);
        }
    };
    for n in notes {
        eprintln!("warning: {axis} = {value}: {n}");
    }
    let mut row = SweepRow::blank(axis, value, &cfg, mc_trials > 0);
    match asymptotic_capacity(&cfg) {
        Ok(r) => {
            for w in &r.warnings {
                eprintln!("warning: {axis} = {value}: {w}");
            }
            row.c_asym = r.c;
            row.c1 = r.c1;
            row.c2 = r.c2;
            row.defect = r.quadrature_defect.unwrap_or(f64::NAN);
        }
        Err(e) => eprintln!("warning: {axis} = {value}: asymptotic capacity failed: {e}"),
    }
    if mc_trials > 0 {
        match mc_ergodic_capacity(&cfg, mc_trials, seed) {
            Ok(r) => {
                row.c_mc = Some(r.c);
                row.ci = Some(r.ci_halfwidth.unwrap_or(f64::NAN));
            }
            Err(e) => eprintln!("warning: {axis} = {value}: Monte Carlo failed: {e}"),
        }
    }
    row
}

/// All rows of the sweep in axis order. Points run concurrently on the
/// current rayon pool.
pub fn run_sweep(spec: &SweepSpec, units: Units) -> Vec<SweepRow> {
    spec.values()
        .par_iter()
        .map(|&v| evaluate_point(spec.axis, v, &spec.fixed, spec.mc_trials, spec.seed).in_units(units))
        .collect()
}

pub fn write_csv(rows: &[SweepRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.csv())?;
    }
    Ok(())
}
