use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3a,
    Fig3b,
    Fig4a,
    Fig4b,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

/// Ergodic capacity of a dual-hop AF MIMO relay with transceiver
/// impairments: single points, parameter sweeps and density exports.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "afrelay", version)]
pub struct Args {
    /// Parameter set of one of the reference figures.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,

    /// Flat TOML file with keys named like the long flags. Flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Number of single-antenna users.
    #[arg(long = "K")]
    pub users: Option<usize>,

    /// Relay antennas.
    #[arg(long = "M")]
    pub relay_antennas: Option<usize>,

    /// Base-station antennas.
    #[arg(long = "N")]
    pub bs_antennas: Option<usize>,

    /// Per-user transmit SNR in dB.
    #[arg(long, allow_negative_numbers = true)]
    pub mu_db: Option<f64>,

    /// Relay amplification gain in dB.
    #[arg(long, allow_negative_numbers = true)]
    pub nu_db: Option<f64>,

    /// Relay power budget (linear). Derives the gain from it instead of
    /// taking `--nu-db`.
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Impairment level applied to all four transceivers.
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    pub delta_t1: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    pub delta_r1: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    pub delta_t2: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    pub delta_r2: Option<f64>,

    /// Sweep one axis: mu_db, nu_db, beta, gamma or delta.
    #[arg(
        long,
        num_args = 4,
        value_names = ["AXIS", "START", "STOP", "STEPS"],
        allow_negative_numbers = true
    )]
    pub sweep: Option<Vec<String>>,

    /// Monte Carlo trials per point; 0 disables the simulation.
    #[arg(long)]
    pub mc_trials: Option<usize>,

    /// Seed for the Monte Carlo streams. Falls back to RELAY_RMT_SEED.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output file (directory for the fig1 export). Stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Points evaluated concurrently.
    #[arg(long)]
    pub jobs: Option<usize>,

    #[arg(long, value_enum)]
    pub units: Option<Units>,

    /// Histogram bins for the fig1 export.
    #[arg(long)]
    pub bins: Option<usize>,
}
