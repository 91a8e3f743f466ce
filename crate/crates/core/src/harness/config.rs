//! Experiment description and its flat `key = value` config file.
//!
//! ```text
//! # comments start with '#'
//! n_fft       = 256
//! pilot_ratio = 1/4, 1/8, 1/16
//! scheme      = PS-ISAC, CI-ISAC
//! power_mode  = constrained
//! snr_db      = 0, 5, 10, 15, 20, 25, 30
//! trials      = 10000
//! seed        = 1
//! output      = mse.csv
//! ```
//!
//! `n_cp`, `num_tx` and `num_taps` are optional. When absent every grid point
//! uses `N_CP = N * PR`, `U = 1 / PR` and `N_CP - 1` taps; when present they
//! override the derived value at every grid point.

use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::waveform::{PilotRatio, PowerMode, Scheme};

pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_SNR_GRID_DB: [f64; 7] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub n_fft: usize,
    pub n_cp: Option<usize>,
    pub num_tx: Option<usize>,
    pub num_taps: Option<usize>,
    pub power_mode: PowerMode,
    pub seed: u64,
    /// SNR per pilot subcarrier for unit-power pilots; `inf` means noiseless.
    pub snr_grid_db: Vec<f64>,
    pub schemes: Vec<Scheme>,
    /// Comb ratios `1/U` defining each grid point's `U` and `N_CP`.
    pub pilot_ratios: Vec<PilotRatio>,
    pub num_trials: usize,
    pub output_path: PathBuf,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            n_fft: 256,
            n_cp: None,
            num_tx: None,
            num_taps: None,
            power_mode: PowerMode::Constrained,
            seed: 0,
            snr_grid_db: DEFAULT_SNR_GRID_DB.to_vec(),
            schemes: vec![Scheme::PsIsac, Scheme::CiIsac],
            pilot_ratios: [4, 8, 16]
                .into_iter()
                .map(|d| PilotRatio::reciprocal_of(d).expect("valid ratio"))
                .collect(),
            num_trials: DEFAULT_TRIALS,
            output_path: PathBuf::from("mse.csv"),
        }
    }
}

fn parse_list<T, E>(value: &str, line: usize, parse: impl Fn(&str) -> std::result::Result<T, E>) -> Result<Vec<T>>
where
    E: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            parse(s).map_err(|e| Error::Parse {
                line,
                msg: format!("'{s}': {e}"),
            })
        })
        .collect()
}

fn parse_one<T>(value: &str, line: usize) -> Result<T>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e: T::Err| Error::Parse {
        line,
        msg: format!("'{}': {e}", value.trim()),
    })
}

impl FromStr for ExperimentSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut spec = ExperimentSpec::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected key = value, got '{content}'"),
            })?;
            match key.trim() {
                "n_fft" => spec.n_fft = parse_one(value, line)?,
                "n_cp" => spec.n_cp = Some(parse_one(value, line)?),
                "num_tx" => spec.num_tx = Some(parse_one(value, line)?),
                "num_taps" => spec.num_taps = Some(parse_one(value, line)?),
                "power_mode" => spec.power_mode = parse_one(value, line)?,
                "seed" => spec.seed = parse_one(value, line)?,
                "trials" => spec.num_trials = parse_one(value, line)?,
                "output" => spec.output_path = PathBuf::from(value.trim()),
                "snr_db" => spec.snr_grid_db = parse_list(value, line, f64::from_str)?,
                "scheme" => spec.schemes = parse_list(value, line, Scheme::from_str)?,
                "pilot_ratio" => spec.pilot_ratios = parse_list(value, line, PilotRatio::from_str)?,
                other => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("unknown key '{other}'"),
                    })
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl ExperimentSpec {
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse()
    }

    /// Structural checks; per-point configs are checked when the grid is built.
    pub fn validate(&self) -> Result<()> {
        if self.snr_grid_db.is_empty() || self.schemes.is_empty() || self.pilot_ratios.is_empty() {
            return Err(Error::config("snr_db, scheme and pilot_ratio lists must be non-empty"));
        }
        if self.num_trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.num_trials as u64 > super::MAX_TRIALS {
            return Err(Error::config(format!("trials must be below {}", super::MAX_TRIALS)));
        }
        if let Some(s) = self.snr_grid_db.iter().find(|s| s.is_nan() || **s == f64::NEG_INFINITY) {
            return Err(Error::config(format!("snr_db value {s} is not usable")));
        }
        if let Some(r) = self.pilot_ratios.iter().find(|r| r.num() != 1) {
            return Err(Error::config(format!("pilot_ratio {r} is not of the form 1/U")));
        }
        let points = self.schemes.len() * self.pilot_ratios.len() * self.snr_grid_db.len();
        if points as u64 > super::MAX_GRID_POINTS {
            return Err(Error::config(format!("{points} grid points exceed {}", super::MAX_GRID_POINTS)));
        }
        Ok(())
    }
}
