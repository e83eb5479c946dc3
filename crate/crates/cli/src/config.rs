use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::args::{Args, Format, Preset, Units};
use crate::error::{CliError, CliResult};

/// Flat key/value file mirroring the long flags, e.g.
///
/// ```toml
/// preset = "fig2"
/// mu-db = 20
/// delta = 0.08
/// sweep = "mu_db 0 50 11"
/// ```
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub preset: Option<Preset>,
    #[serde(rename = "K")]
    pub users: Option<usize>,
    #[serde(rename = "M")]
    pub relay_antennas: Option<usize>,
    #[serde(rename = "N")]
    pub bs_antennas: Option<usize>,
    pub mu_db: Option<f64>,
    pub nu_db: Option<f64>,
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub delta_t1: Option<f64>,
    pub delta_r1: Option<f64>,
    pub delta_t2: Option<f64>,
    pub delta_r2: Option<f64>,
    /// `"axis start stop steps"`.
    pub sweep: Option<String>,
    pub mc_trials: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub jobs: Option<usize>,
    pub units: Option<Units>,
    pub bins: Option<usize>,
}

pub fn parse_config(text: &str) -> CliResult<FileConfig> {
    toml::from_str(text).map_err(|e| CliError::Validation(format!("config file: {e}")))
}

pub fn load_config(path: &Path) -> CliResult<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Fill every flag left unset from the file.
pub fn merge(mut args: Args, file: FileConfig) -> Args {
    macro_rules! fill {
        ($($f:ident),*) => { $( if args.$f.is_none() { args.$f = file.$f; } )* };
    }
    fill!(
        preset,
        users,
        relay_antennas,
        bs_antennas,
        mu_db,
        nu_db,
        alpha,
        delta,
        delta_t1,
        delta_r1,
        delta_t2,
        delta_r2,
        mc_trials,
        seed,
        out,
        format,
        jobs,
        units,
        bins
    );
    if args.sweep.is_none() {
        args.sweep = file
            .sweep
            .map(|s| s.split_whitespace().map(str::to_owned).collect());
    }
    args
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = parse_config("mu-db = 10\nK = 20\ndelta = 0.08\nsweep = \"beta 1 10 10\"\n").unwrap();
        let args = Args {
            mu_db: Some(30.0),
            ..Default::default()
        };
        let merged = merge(args, file);
        assert_eq!(merged.mu_db, Some(30.0));
        assert_eq!(merged.users, Some(20));
        assert_eq!(merged.delta, Some(0.08));
        assert_eq!(merged.sweep.unwrap(), ["beta", "1", "10", "10"]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(parse_config("mu_db = 3"), Err(CliError::Validation(_))));
    }

    #[test]
    fn enums_parse_lowercase() {
        let f = parse_config("preset = \"fig4b\"\nformat = \"json\"\nunits = \"bits\"").unwrap();
        assert_eq!(f.preset, Some(Preset::Fig4b));
        assert_eq!(f.format, Some(Format::Json));
        assert_eq!(f.units, Some(Units::Bits));
    }
}
