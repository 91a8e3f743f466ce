//! Receiver-side channel estimation for both pilot schemes.
//!
//! PS-ISAC: one LS estimate against the shared base pilot gives
//! `sum_u psi_u(k) H_u(k)`. Its IDFT places transmitter `u`'s impulse response
//! in samples `[(u-1)N_CP, u N_CP)`; each window is cut out, moved back to the
//! origin and transformed to recover `H_u` on all `N` bins.
//!
//! CI-ISAC: each comb is LS-estimated on its own `N * PR` bins, brought to the
//! delay domain with a size-`N * PR` IDFT, zero-padded to `N` and transformed
//! back.

use crate::error::{Error, Result};
use crate::numerics::{self, C64};
use crate::waveform::{remove_cp, PilotGrid, Scheme, SystemConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct EstimationResult {
    /// Estimated full-band CFR of each transmitter.
    pub per_tx_cfr: Vec<Vec<C64>>,
    /// Joint CIR from the single receiver IDFT. Empty for CI-ISAC.
    pub joint_cir: Vec<C64>,
}

/// LS estimate `y(k) / x(k)` on the occupied bins, returned compacted in the
/// order of `occupied`.
pub fn ls_estimate(y_f: &[C64], known_pilots: &[C64], occupied: &[usize]) -> Result<Vec<C64>> {
    occupied
        .iter()
        .map(|&k| {
            let (y, x) = match (y_f.get(k), known_pilots.get(k)) {
                (Some(y), Some(x)) => (*y, *x),
                _ => {
                    return Err(Error::invalid(format!(
                        "occupied bin {k} outside received grid ({}) or pilots ({})",
                        y_f.len(),
                        known_pilots.len()
                    )))
                }
            };
            if x.norm_sqr() == 0.0 {
                return Err(Error::DivisionHazard { bin: k });
            }
            Ok(y / x)
        })
        .collect()
}

/// Splits the joint LS estimate of an overlapped PS-ISAC grid into
/// per-transmitter CFRs.
pub fn separate_ps_isac(h_f_joint: &[C64], cfg: &SystemConfig) -> Result<EstimationResult> {
    if cfg.scheme != Scheme::PsIsac {
        return Err(Error::config("separate_ps_isac called with a CI-ISAC config"));
    }
    let (n, n_cp, u_count) = (cfg.n_fft, cfg.n_cp, cfg.num_tx);
    if u_count * n_cp > n {
        return Err(Error::WindowOverlap {
            num_tx: u_count,
            n_cp,
            n_fft: n,
        });
    }
    if h_f_joint.len() != n {
        return Err(Error::invalid(format!(
            "joint CFR has {} bins, expected {n}",
            h_f_joint.len()
        )));
    }
    let joint_cir = numerics::idft(h_f_joint)?;
    let per_tx_cfr = (0..u_count)
        .map(|u| {
            let mut block = vec![C64::new(0.0, 0.0); n];
            block[..n_cp].copy_from_slice(&joint_cir[u * n_cp..(u + 1) * n_cp]);
            numerics::dft(&block)
        })
        .collect::<Result<_>>()?;
    Ok(EstimationResult {
        per_tx_cfr,
        joint_cir,
    })
}

fn check_disjoint(pilots: &PilotGrid, n: usize) -> Result<()> {
    let mut owner = vec![usize::MAX; n];
    for (u, bins) in pilots.allocation.iter().enumerate() {
        for &k in bins {
            if k >= n {
                return Err(Error::config(format!("transmitter {} occupies bin {k} >= {n}", u + 1)));
            }
            if owner[k] != usize::MAX {
                return Err(Error::config(format!(
                    "bin {k} is allocated to transmitters {} and {}",
                    owner[k] + 1,
                    u + 1
                )));
            }
            owner[k] = u;
        }
    }
    Ok(())
}

/// Offset and spacing of one CI-ISAC comb.
fn comb_layout(bins: &[usize], n: usize) -> Result<(usize, usize)> {
    let m = bins.len();
    if m == 0 || !n.is_multiple_of(m) || !m.is_power_of_two() {
        return Err(Error::config(format!(
            "comb of {m} bins is not a power-of-two divisor of {n}"
        )));
    }
    let spacing = n / m;
    let offset = bins[0];
    if bins.iter().enumerate().any(|(i, &k)| k != offset + i * spacing) {
        return Err(Error::config(format!(
            "allocation starting at bin {offset} is not a uniform comb of spacing {spacing}"
        )));
    }
    Ok((offset, spacing))
}

/// Per-transmitter interleaved estimation with delay-domain interpolation.
pub fn estimate_ci_isac(y_f: &[C64], pilots: &PilotGrid, cfg: &SystemConfig) -> Result<EstimationResult> {
    if cfg.scheme != Scheme::CiIsac {
        return Err(Error::config("estimate_ci_isac called with a PS-ISAC config"));
    }
    let n = cfg.n_fft;
    if y_f.len() != n {
        return Err(Error::invalid(format!("received grid has {} bins, expected {n}", y_f.len())));
    }
    if pilots.num_tx() != cfg.num_tx {
        return Err(Error::config(format!(
            "pilot grid has {} transmitters, config has {}",
            pilots.num_tx(),
            cfg.num_tx
        )));
    }
    check_disjoint(pilots, n)?;

    let per_tx_cfr = pilots
        .allocation
        .iter()
        .zip(&pilots.per_tx_pilots)
        .map(|(bins, x)| {
            let (offset, _) = comb_layout(bins, n)?;
            let m = bins.len();
            let ls = ls_estimate(y_f, x, bins)?;
            // Comb bins k = offset + i*spacing see taps rotated by e^{-j2pi*offset*l/N}.
            let cir = numerics::idft(&ls)?;
            let gain = (n as f64 / m as f64).sqrt();
            let table = numerics::phasor_table(n);
            let mut padded = vec![C64::new(0.0, 0.0); n];
            for (l, v) in cir.iter().enumerate() {
                padded[l] = v * table[(offset * l) % n].conj() * gain;
            }
            numerics::dft(&padded)
        })
        .collect::<Result<_>>()?;
    Ok(EstimationResult {
        per_tx_cfr,
        joint_cir: Vec::new(),
    })
}

/// Strips the CP, transforms, and estimates every transmitter's CFR.
pub fn run_receiver(y_t_with_cp: &[C64], pilots: &PilotGrid, cfg: &SystemConfig) -> Result<EstimationResult> {
    let body = remove_cp(y_t_with_cp, cfg.n_cp, cfg.n_fft)?;
    let y_f = numerics::dft(&body)?;
    match cfg.scheme {
        Scheme::PsIsac => {
            let all: Vec<usize> = (0..cfg.n_fft).collect();
            let joint = ls_estimate(&y_f, pilots.base(), &all)?;
            separate_ps_isac(&joint, cfg)
        }
        Scheme::CiIsac => estimate_ci_isac(&y_f, pilots, cfg),
    }
}

/// Per-transmitter CIR view of an interleaved grid obtained by zero-filling
/// the comb LS estimate to length `N` before a size-`N` IDFT. The comb
/// sampling makes each trace periodic with period `N * PR`. Diagnostic only.
pub fn ci_periodic_cirs(y_f: &[C64], pilots: &PilotGrid, n_fft: usize) -> Result<Vec<Vec<C64>>> {
    pilots
        .allocation
        .iter()
        .zip(&pilots.per_tx_pilots)
        .map(|(bins, x)| {
            let ls = ls_estimate(y_f, x, bins)?;
            let mut filled = vec![C64::new(0.0, 0.0); n_fft];
            for (&k, v) in bins.iter().zip(ls) {
                filled[k] = v;
            }
            numerics::idft(&filled)
        })
        .collect()
}
