use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{map_indices, simulate_symbol, ExperimentSpec, TrialRng};
use crate::error::{Error, Result};
use crate::waveform::{PilotRatio, Scheme, SystemConfig};

/// `sigma^2 = 10^(-SNR/10)` for unit-power pilots; `+inf` dB gives zero.
pub fn snr_to_noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// One `(scheme, pilot ratio, SNR)` cell of the sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub scheme: Scheme,
    pub pilot_ratio: PilotRatio,
    pub snr_db: f64,
    pub config: SystemConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub scheme: Scheme,
    pub num_tx: usize,
    pub pilot_ratio: PilotRatio,
    pub snr_db: f64,
    pub trial_id: u64,
    pub mse: f64,
    pub cir_dump: Option<Vec<Complex64>>,
}

/// Aggregated result of one grid point; one CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct GridRow {
    pub scheme: Scheme,
    pub num_tx: usize,
    pub pilot_ratio: PilotRatio,
    pub snr_db: f64,
    pub trials: usize,
    pub mse_mean: f64,
    pub mse_stderr: f64,
}

impl ExperimentSpec {
    /// Expands the sweep, scheme-major then pilot ratio then SNR.
    pub fn grid(&self) -> Result<Vec<GridPoint>> {
        self.validate()?;
        let mut points = Vec::new();
        for &scheme in &self.schemes {
            for &ratio in &self.pilot_ratios {
                for &snr_db in &self.snr_grid_db {
                    let index = points.len();
                    let config = self.point_config(scheme, ratio, snr_db).map_err(|e| {
                        let detail = match e {
                            Error::Config(m) => m,
                            other => other.to_string(),
                        };
                        Error::config(format!("grid point {index} ({scheme}, PR={ratio}, SNR={snr_db} dB): {detail}"))
                    })?;
                    points.push(GridPoint {
                        index,
                        scheme,
                        pilot_ratio: ratio,
                        snr_db,
                        config,
                    });
                }
            }
        }
        Ok(points)
    }

    fn point_config(&self, scheme: Scheme, ratio: PilotRatio, snr_db: f64) -> Result<SystemConfig> {
        let derived_cp = ratio
            .scale(self.n_fft)
            .ok_or_else(|| Error::config(format!("N * PR = {} * {ratio} is not an integer", self.n_fft)))?;
        let n_cp = self.n_cp.unwrap_or(derived_cp);
        let num_tx = self.num_tx.unwrap_or(ratio.den() as usize);
        let cfg = SystemConfig {
            n_fft: self.n_fft,
            n_cp,
            num_tx,
            pilot_ratio: match scheme {
                Scheme::PsIsac => PilotRatio::FULL,
                Scheme::CiIsac => ratio,
            },
            scheme,
            power_mode: self.power_mode,
            noise_variance: snr_to_noise_variance(snr_db),
            num_taps: self.num_taps.unwrap_or(n_cp.saturating_sub(1).max(1)),
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs one trial of a grid point with its pre-assigned streams.
pub fn run_trial(point: &GridPoint, seed: u64, trial_id: u64, keep_cir: bool) -> Result<TrialOutcome> {
    let run = simulate_symbol(&point.config, &TrialRng::new(seed, point.index as u64, trial_id))?;
    Ok(TrialOutcome {
        scheme: point.scheme,
        num_tx: point.config.num_tx,
        pilot_ratio: point.pilot_ratio,
        snr_db: point.snr_db,
        trial_id,
        mse: run.mse()?,
        cir_dump: keep_cir.then(|| run.estimate.joint_cir.clone()),
    })
}

/// Neumaier-compensated sum, evaluated in index order.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = compensated_sum(samples.iter().copied()) / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(samples.iter().map(|x| (x - mean) * (x - mean)));
    (mean, (ss / (n - 1.0) / n).sqrt())
}

/// Evaluates every grid point. All `(point, trial)` pairs are farmed out
/// together; per-trial MSEs come back in index order and are reduced
/// sequentially, so the result is independent of the thread count.
pub fn run_grid(spec: &ExperimentSpec) -> Result<Vec<GridRow>> {
    let points = spec.grid()?;
    let trials = spec.num_trials;
    let mses = map_indices(points.len() * trials, |i| {
        let point = &points[i / trials];
        run_trial(point, spec.seed, (i % trials) as u64, false).map(|o| o.mse)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;

    Ok(points
        .iter()
        .zip(mses.chunks_exact(trials))
        .map(|(p, samples)| {
            let (mse_mean, mse_stderr) = mean_and_stderr(samples);
            GridRow {
                scheme: p.scheme,
                num_tx: p.config.num_tx,
                pilot_ratio: p.pilot_ratio,
                snr_db: p.snr_db,
                trials,
                mse_mean,
                mse_stderr,
            }
        })
        .collect())
}

pub const CSV_HEADER: &str = "scheme,U,PR,snr_db,trials,mse_mean,mse_stderr";

/// Writes the header, one row per grid point, then `#` metadata lines.
pub fn write_csv<W: Write>(out: &mut W, spec: &ExperimentSpec, rows: &[GridRow]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{:.15e},{:.15e}",
            r.scheme, r.num_tx, r.pilot_ratio, r.snr_db, r.trials, r.mse_mean, r.mse_stderr
        )?;
    }
    writeln!(out, "# snr_db: SNR per pilot subcarrier with unit-power pilots, noise_variance = 10^(-snr_db/10)")?;
    writeln!(
        out,
        "# PR: comb ratio of the grid point; U = 1/PR and N_CP = N*PR for both schemes, PS-ISAC pilots occupy all bins"
    )?;
    writeln!(
        out,
        "# n_fft={} power_mode={} seed={} trials={} snr_db_grid={:?}",
        spec.n_fft, spec.power_mode, spec.seed, spec.num_trials, spec.snr_grid_db
    )?;
    Ok(())
}

/// Runs the sweep and writes the CSV. The output file is created before any
/// trial runs, so an unwritable path fails fast.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<GridRow>> {
    let path: &Path = &spec.output_path;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let rows = run_grid(spec)?;
    let mut w = BufWriter::new(file);
    write_csv(&mut w, spec, &rows)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))?;
    Ok(rows)
}
