//! Front end for the `afrelay` binary: flag and config-file handling,
//! figure presets, sweeps and exports.

pub mod args;
pub mod config;
pub mod error;
pub mod point;
pub mod preset;
pub mod sweep;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use afrelay::capacity::CapacityResult as Capacity;
use afrelay::params::validate_config;
use afrelay::{db_to_linear, Impairments, NuMode, SystemConfig};

pub use args::{Args, Format, Preset, Units};
pub use error::{CliError, CliResult};

use preset::PresetKind;
use sweep::{apply_axis, parse_sweep, run_sweep, SweepRow, SweepSpec};

pub const SEED_ENV: &str = "RELAY_RMT_SEED";
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_BINS: usize = 100;

/// Apply the system flags on top of `cfg`. `--delta` sets all four
/// impairments before the individual flags are applied.
pub fn apply_flags(cfg: &mut SystemConfig, a: &Args) -> CliResult<()> {
    if let Some(k) = a.users {
        cfg.users = k;
    }
    if let Some(m) = a.relay_antennas {
        cfg.relay_antennas = m;
    }
    if let Some(n) = a.bs_antennas {
        cfg.bs_antennas = n;
    }
    if let Some(mu) = a.mu_db {
        cfg.mu = db_to_linear(mu);
    }
    match (a.alpha, a.nu_db) {
        (Some(_), Some(_)) => {
            return Err(CliError::Validation("--alpha and --nu-db cannot be combined".into()));
        }
        (Some(alpha), None) => cfg.nu_mode = NuMode::FromAlpha { alpha },
        (None, Some(nu)) => {
            cfg.nu = db_to_linear(nu);
            cfg.nu_mode = NuMode::Direct;
        }
        (None, None) => {}
    }
    if let Some(d) = a.delta {
        cfg.delta = Impairments::uniform(d);
    }
    for (v, slot) in [
        (a.delta_t1, &mut cfg.delta.t1),
        (a.delta_r1, &mut cfg.delta.r1),
        (a.delta_t2, &mut cfg.delta.t2),
        (a.delta_r2, &mut cfg.delta.r2),
    ] {
        if let Some(v) = v {
            *slot = v;
        }
    }
    Ok(())
}

fn check(cfg: &SystemConfig) -> CliResult<()> {
    let v = validate_config(cfg);
    if v.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "),
        ))
    }
}

/// Flag, then config file (already merged into `flag`), then environment.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>) -> CliResult<u64> {
    match (flag, env) {
        (Some(s), _) => Ok(s),
        (None, Some(e)) => e
            .trim()
            .parse()
            .map_err(|_| CliError::Validation(format!("{SEED_ENV} must be an unsigned integer, got {e:?}"))),
        (None, None) => Ok(DEFAULT_SEED),
    }
}

fn sink(out: &Option<PathBuf>, stdout: &mut dyn Write, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult<()> {
    match out {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            let mut w = BufWriter::new(f);
            body(&mut w)?;
            w.flush()?;
        }
        None => body(stdout)?,
    }
    Ok(())
}

fn write_rows(rows: &[SweepRow], format: Format, out: &Option<PathBuf>, stdout: &mut dyn Write) -> CliResult<()> {
    sink(out, stdout, |w| match format {
        Format::Csv => sweep::write_csv(rows, w),
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, rows)?;
            writeln!(w)
        }
    })?;
    if !rows.is_empty() && rows.iter().all(|r| r.c_asym.is_nan()) {
        return Err(CliError::Numerical("every sweep point failed".into()));
    }
    Ok(())
}

/// Run the command with `env_seed` standing in for the environment and
/// results written to `stdout` unless `--out` is given.
pub fn run_with(args: Args, env_seed: Option<&str>, stdout: &mut dyn Write) -> CliResult<()> {
    let args = match &args.config {
        Some(p) => config::merge(args.clone(), config::load_config(p)?),
        None => args,
    };
    let plan = args.preset.map(preset::plan);
    let mut cfg = plan.as_ref().map_or_else(preset::baseline, |p| p.baseline);
    apply_flags(&mut cfg, &args)?;
    check(&cfg)?;

    let seed = resolve_seed(args.seed, env_seed)?;
    let mc_trials = args
        .mc_trials
        .unwrap_or_else(|| plan.as_ref().map_or(0, |p| p.default_mc_trials));
    let units = args.units.unwrap_or_default();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = args.jobs {
        if j == 0 {
            return Err(CliError::Validation("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?;

    let work = pool.install(|| -> CliResult<Work> {
        if let Some(parts) = &args.sweep {
            let spec = parse_sweep(parts, cfg, mc_trials, seed)?;
            return Ok(Work::Rows(run_sweep(&spec, units)));
        }
        match plan.map(|p| p.kind) {
            Some(PresetKind::Sweeps(series)) => {
                let mut rows = Vec::new();
                for s in series {
                    let mut base = cfg;
                    let mut notes = Vec::new();
                    for &(axis, v) in &s.overrides {
                        base = apply_axis(&base, axis, v, &mut notes).map_err(CliError::Validation)?;
                    }
                    let spec = SweepSpec {
                        axis: s.axis,
                        start: s.start,
                        stop: s.stop,
                        steps: s.steps,
                        fixed: base,
                        mc_trials,
                        seed,
                    };
                    spec.validate()?;
                    rows.extend(run_sweep(&spec, units));
                }
                Ok(Work::Rows(rows))
            }
            Some(PresetKind::Density) => {
                let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("fig1"));
                let bins = args.bins.unwrap_or(DEFAULT_BINS);
                point::export_densities(&cfg, mc_trials, seed, bins, units, &dir).map(Work::Export)
            }
            None => point::run_point(&cfg, mc_trials, seed, units).map(Work::Point),
        }
    })?;

    match work {
        Work::Rows(rows) => write_rows(&rows, args.format.unwrap_or_default(), &args.out, stdout),
        Work::Export(export) => {
            serde_json::to_writer_pretty(&mut *stdout, &export)?;
            writeln!(stdout)?;
            Ok(())
        }
        Work::Point(report) => sink(&args.out, stdout, |w| match args.format.unwrap_or(Format::Json) {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *w, &report)?;
                writeln!(w)
            }
            Format::Csv => {
                writeln!(w, "{}", Capacity::CSV_HEADER)?;
                writeln!(w, "{}", report.asymptotic.csv_row())?;
                if let Some(m) = &report.monte_carlo {
                    writeln!(w, "{}", m.csv_row())?;
                }
                Ok(())
            }
        }),
    }
}

enum Work {
    Rows(Vec<SweepRow>),
    Point(point::PointReport),
    Export(point::DensityExport),
}

pub fn run(args: Args) -> CliResult<()> {
    let env = std::env::var(SEED_ENV).ok();
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    run_with(args, env.as_deref(), &mut lock)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(7), Some("9")).unwrap(), 7);
        assert_eq!(resolve_seed(None, Some(" 9 ")).unwrap(), 9);
        assert_eq!(resolve_seed(None, None).unwrap(), DEFAULT_SEED);
        assert!(matches!(resolve_seed(None, Some("abc")), Err(CliError::Validation(_))));
    }

    #[test]
    fn delta_then_individual_overrides() {
        let mut cfg = preset::baseline();
        let a = Args {
            delta: Some(0.08),
            delta_r2: Some(0.0),
            ..Default::default()
        };
        apply_flags(&mut cfg, &a).unwrap();
        assert_eq!(cfg.delta.t1, 0.08);
        assert_eq!(cfg.delta.r2, 0.0);
    }

    #[test]
    fn alpha_switches_gain_mode() {
        let mut cfg = preset::baseline();
        apply_flags(&mut cfg, &Args { alpha: Some(5e5), ..Default::default() }).unwrap();
        assert_eq!(cfg.nu_mode, NuMode::FromAlpha { alpha: 5e5 });
        let both = Args {
            alpha: Some(1.0),
            nu_db: Some(20.0),
            ..Default::default()
        };
        assert!(matches!(apply_flags(&mut cfg, &both), Err(CliError::Validation(_))));
    }

    #[test]
    fn negative_delta_names_the_field() {
        let a = Args {
            delta: Some(-0.1),
            ..Default::default()
        };
        let err = run_with(a, None, &mut Vec::new()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("delta_t1"), "{err}");
    }

    #[test]
    fn point_without_trials_has_no_mc_section() {
        let mut buf = Vec::new();
        run_with(Args::default(), None, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert!(v.get("asymptotic").is_some());
        assert!(v.get("monte_carlo").is_none());
        assert!(v.get("agreement_ratio").is_none());
    }
}
