//! Sample-spaced Rayleigh channels, CP-framed convolution and AWGN.

use crate::error::{Error, Result};
use crate::numerics::{complex_gaussian, phasor_table, RngStream, C64};

/// One transmitter's channel: time-domain taps and their response on the FFT grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub taps: Vec<C64>,
    /// `cfr(k) = sum_l taps(l) e^{-j2pi kl/N}`.
    pub cfr: Vec<C64>,
}

impl ChannelRealization {
    /// Builds the realization from explicit taps, computing the CFR exactly.
    pub fn from_taps(taps: Vec<C64>, n_fft: usize) -> Result<Self> {
        if taps.is_empty() || taps.len() > n_fft {
            return Err(Error::invalid(format!(
                "need 1 <= taps <= n_fft, got {} taps for n_fft = {n_fft}",
                taps.len()
            )));
        }
        let phasors = phasor_table(n_fft);
        let cfr = (0..n_fft)
            .map(|k| {
                taps.iter()
                    .enumerate()
                    .map(|(l, &h)| h * phasors[(k * l) % n_fft])
                    .sum()
            })
            .collect();
        Ok(Self { taps, cfr })
    }

    pub fn num_taps(&self) -> usize {
        self.taps.len()
    }
}

/// Rayleigh channel with a uniform power-delay profile: taps i.i.d.
/// `CN(0, 1/L)`, so total tap power and per-bin CFR power both average to one.
pub fn draw_channel(rng: &mut RngStream, num_taps: usize, n_fft: usize) -> Result<ChannelRealization> {
    if num_taps == 0 || num_taps > n_fft {
        return Err(Error::invalid(format!(
            "draw_channel: need 1 <= num_taps <= n_fft, got {num_taps} and {n_fft}"
        )));
    }
    let taps = complex_gaussian(rng, num_taps, 1.0 / num_taps as f64)?;
    ChannelRealization::from_taps(taps, n_fft)
}

/// Linear convolution of a CP-framed symbol with the channel taps, truncated
/// to the frame length. Taps longer than the CP would leak the previous
/// symbol into the FFT window, so they are rejected.
pub fn apply_channel(tx_signal_with_cp: &[C64], ch: &ChannelRealization, n_cp: usize) -> Result<Vec<C64>> {
    if ch.taps.len() > n_cp {
        return Err(Error::ContractViolation(format!(
            "channel has {} taps but the CP is only {n_cp} samples",
            ch.taps.len()
        )));
    }
    if tx_signal_with_cp.len() <= n_cp {
        return Err(Error::invalid(format!(
            "apply_channel: frame of {} samples is not longer than the CP ({n_cp})",
            tx_signal_with_cp.len()
        )));
    }
    let x = tx_signal_with_cp;
    Ok((0..x.len())
        .map(|n| {
            ch.taps
                .iter()
                .take(n + 1)
                .enumerate()
                .map(|(l, &h)| h * x[n - l])
                .sum()
        })
        .collect())
}

/// Sum of all received signals plus `CN(0, noise_variance)` noise.
pub fn superpose_and_add_noise(signals: &[Vec<C64>], rng: &mut RngStream, noise_variance: f64) -> Result<Vec<C64>> {
    let first = signals
        .first()
        .ok_or_else(|| Error::invalid("superpose_and_add_noise: no signals"))?;
    let len = first.len();
    if let Some(bad) = signals.iter().position(|s| s.len() != len) {
        return Err(Error::invalid(format!(
            "signal {bad} has {} samples, expected {len}",
            signals[bad].len()
        )));
    }
    if !noise_variance.is_finite() || noise_variance < 0.0 {
        return Err(Error::invalid(format!(
            "noise variance must be finite and >= 0, got {noise_variance}"
        )));
    }
    let mut out = first.clone();
    for s in &signals[1..] {
        out.iter_mut().zip(s).for_each(|(o, v)| *o += v);
    }
    if noise_variance > 0.0 {
        let noise = complex_gaussian(rng, len, noise_variance)?;
        out.iter_mut().zip(&noise).for_each(|(o, w)| *o += w);
    }
    Ok(out)
}
