//! Monte Carlo orchestration: per-trial random streams, the full
//! transmit/channel/receive chain for one symbol, grid sweeps and CSV output.

mod config;
mod diagnostics;
mod experiment;
mod parallel;

pub use config::{ExperimentSpec, DEFAULT_SNR_GRID_DB, DEFAULT_TRIALS};
pub use diagnostics::{
    cir_snapshot, dump_cir_snapshot, emit_tables, psd_experiment, psd_for, table_rows, write_cir_snapshot,
    write_tables, CirSnapshot, TableRow, TABLE_HEADER,
};
pub use experiment::{
    run_experiment, run_grid, run_trial, snr_to_noise_variance, write_csv, GridPoint, GridRow, TrialOutcome,
    CSV_HEADER,
};
pub use parallel::{map_indices, with_threads};

use crate::analysis;
use crate::channel::{apply_channel, draw_channel, superpose_and_add_noise, ChannelRealization};
use crate::error::{Error, Result};
use crate::estimator::{run_receiver, EstimationResult};
use crate::numerics::{RngStream, C64};
use crate::waveform::{generate_pilots, modulate_tx, PilotGrid, SystemConfig};

const PURPOSE_BITS: u32 = 16;
const TRIAL_BITS: u32 = 32;
const POINT_BITS: u32 = 16;

pub const MAX_TRIALS: u64 = 1 << TRIAL_BITS;
pub const MAX_GRID_POINTS: u64 = 1 << POINT_BITS;
/// Two purposes are reserved for pilots and noise.
pub const MAX_TRANSMITTERS: usize = (1 << PURPOSE_BITS) - 2;

/// The independent random streams of one trial.
///
/// The ChaCha stream id packs `(grid point, trial, purpose)`, so every draw of
/// every trial is fixed by `(seed, point, trial)` alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialRng {
    seed: u64,
    base: u64,
}

impl TrialRng {
    pub fn new(seed: u64, point: u64, trial: u64) -> Self {
        debug_assert!(point < MAX_GRID_POINTS && trial < MAX_TRIALS);
        TrialRng {
            seed,
            base: (point << (TRIAL_BITS + PURPOSE_BITS)) | (trial << PURPOSE_BITS),
        }
    }

    fn stream(&self, purpose: u64) -> RngStream {
        RngStream::new(self.seed, self.base | purpose)
    }

    pub fn pilots(&self) -> RngStream {
        self.stream(0)
    }

    pub fn noise(&self) -> RngStream {
        self.stream(1)
    }

    /// Channel stream of transmitter `u` (1-based).
    pub fn channel(&self, u: usize) -> RngStream {
        self.stream(1 + u as u64)
    }
}

/// Everything produced by one simulated uplink symbol.
#[derive(Clone, Debug)]
pub struct SymbolRun {
    pub pilots: PilotGrid,
    pub channels: Vec<ChannelRealization>,
    pub received: Vec<C64>,
    pub estimate: EstimationResult,
}

impl SymbolRun {
    pub fn true_cfrs(&self) -> Vec<Vec<C64>> {
        self.channels.iter().map(|c| c.cfr.clone()).collect()
    }

    pub fn mse(&self) -> Result<f64> {
        analysis::mse(&self.true_cfrs(), &self.estimate)
    }
}

/// Pilots, per-transmitter channels, superposition with AWGN, and the receiver.
pub fn simulate_symbol(cfg: &SystemConfig, rng: &TrialRng) -> Result<SymbolRun> {
    cfg.validate()?;
    if cfg.num_tx > MAX_TRANSMITTERS {
        return Err(Error::config(format!(
            "num_tx = {} exceeds the {MAX_TRANSMITTERS} supported streams",
            cfg.num_tx
        )));
    }
    let pilots = generate_pilots(cfg, &mut rng.pilots())?;
    let channels = (1..=cfg.num_tx)
        .map(|u| draw_channel(&mut rng.channel(u), cfg.num_taps, cfg.n_fft))
        .collect::<Result<Vec<_>>>()?;
    let rx = channels
        .iter()
        .enumerate()
        .map(|(i, ch)| apply_channel(&modulate_tx(cfg, &pilots, i + 1)?, ch, cfg.n_cp))
        .collect::<Result<Vec<_>>>()?;
    let received = superpose_and_add_noise(&rx, &mut rng.noise(), cfg.noise_variance)?;
    let estimate = run_receiver(&received, &pilots, cfg)?;
    Ok(SymbolRun {
        pilots,
        channels,
        received,
        estimate,
    })
}
