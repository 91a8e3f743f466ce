//! Closed-form audits (complexity, unambiguous range) and empirical metrics
//! (MSE, periodogram PSD, spectrum-mask compliance).

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimator::EstimationResult;
use crate::numerics::{self, C64};
use crate::waveform::Scheme;

/// Real-operation counts per OFDM symbol for one scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComplexityReport {
    pub scheme: Scheme,
    pub num_tx: u64,
    pub n_fft: u64,
    pub tx_additions: u64,
    pub tx_multiplications: u64,
    pub rx_additions: u64,
    pub rx_multiplications: u64,
}

/// Operation counts for transmitters and receiver. A radix-2 (I)FFT of size
/// `N` costs `3N log2 N - 3N + 4` real additions and `N log2 N - 3N + 4` real
/// multiplications; the phase shift adds `2N` multiplications per PS-ISAC
/// transmitter and LS division `2N` at the receiver. CI-ISAC needs one receiver
/// IFFT and FFT per transmitter, PS-ISAC one shared IFFT.
pub fn complexity(scheme: Scheme, num_tx: u64, n_fft: u64) -> Result<ComplexityReport> {
    if num_tx == 0 {
        return Err(Error::invalid("complexity: U must be at least 1"));
    }
    if n_fft < 2 || !n_fft.is_power_of_two() {
        return Err(Error::invalid(format!(
            "complexity: N = {n_fft} is not a power of two >= 2"
        )));
    }
    let n = n_fft;
    let u = num_tx;
    let log_n = u64::from(n.trailing_zeros());
    let overflow = || Error::invalid(format!("complexity: counts overflow for U = {u}, N = {n}"));
    let eval = || -> Option<[u64; 4]> {
        // Both FFT terms are >= 0 for N >= 2 (they equal 4 and 0 at N = 2).
        let three_n = n.checked_mul(3)?;
        let fft_add = three_n.checked_mul(log_n)?.checked_sub(three_n)?.checked_add(4)?;
        let fft_mul = n.checked_mul(log_n)?.checked_add(4)?.checked_sub(three_n)?;
        let ps_tx_mul = n.checked_mul(log_n)?.checked_add(4)?.checked_sub(n)?;
        let two_n = n.checked_mul(2)?;
        Some(match scheme {
            Scheme::CiIsac => {
                let rx_ffts = u.checked_mul(2)?.checked_add(1)?;
                [
                    u.checked_mul(fft_add)?,
                    u.checked_mul(fft_mul)?,
                    rx_ffts.checked_mul(fft_add)?,
                    rx_ffts.checked_mul(fft_mul)?.checked_add(two_n)?,
                ]
            }
            Scheme::PsIsac => {
                let rx_ffts = u.checked_add(2)?;
                [
                    u.checked_mul(fft_add)?,
                    u.checked_mul(ps_tx_mul)?,
                    rx_ffts.checked_mul(fft_add)?,
                    rx_ffts.checked_mul(fft_mul)?.checked_add(two_n)?,
                ]
            }
        })
    };
    let [tx_additions, tx_multiplications, rx_additions, rx_multiplications] =
        eval().ok_or_else(overflow)?;
    Ok(ComplexityReport {
        scheme,
        num_tx: u,
        n_fft: n,
        tx_additions,
        tx_multiplications,
        rx_additions,
        rx_multiplications,
    })
}

pub const DEFAULT_SUBCARRIER_SPACING_HZ: f64 = 15e3;
pub const DEFAULT_LIGHT_SPEED_M_S: f64 = 2.998e8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeConfig {
    pub n_fft: usize,
    /// Number of pilot-carrying subcarriers.
    pub n_pilot: usize,
    pub subcarrier_spacing: f64,
    pub light_speed: f64,
}

impl RangeConfig {
    /// Pilot count for a scheme with `num_tx` transmitters: all bins for
    /// PS-ISAC, `N / U` for CI-ISAC.
    pub fn for_scheme(scheme: Scheme, num_tx: usize, n_fft: usize) -> Result<Self> {
        if num_tx == 0 {
            return Err(Error::invalid("range: U must be at least 1"));
        }
        let n_pilot = match scheme {
            Scheme::PsIsac => n_fft,
            Scheme::CiIsac => {
                if !n_fft.is_multiple_of(num_tx) {
                    return Err(Error::invalid(format!("range: U = {num_tx} does not divide N = {n_fft}")));
                }
                n_fft / num_tx
            }
        };
        Ok(RangeConfig {
            n_fft,
            n_pilot,
            subcarrier_spacing: DEFAULT_SUBCARRIER_SPACING_HZ,
            light_speed: DEFAULT_LIGHT_SPEED_M_S,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.n_fft == 0 || self.n_pilot == 0 || self.n_pilot > self.n_fft {
            return Err(Error::invalid(format!(
                "range: need 0 < n_pilot <= n_fft, got {} and {}",
                self.n_pilot, self.n_fft
            )));
        }
        if !positive(self.subcarrier_spacing) || !positive(self.light_speed) {
            return Err(Error::invalid("range: spacing and light speed must be positive"));
        }
        Ok(())
    }
}

/// `R_max = N_p c / (2 N df)` in metres.
pub fn max_unambiguous_range(rc: &RangeConfig) -> Result<f64> {
    rc.validate()?;
    Ok(rc.n_pilot as f64 * rc.light_speed / (2.0 * rc.n_fft as f64 * rc.subcarrier_spacing))
}

/// Per-bin squared error averaged over transmitters and bins for one trial.
pub fn mse(true_cfrs: &[Vec<C64>], estimates: &EstimationResult) -> Result<f64> {
    let est = &estimates.per_tx_cfr;
    if true_cfrs.is_empty() || true_cfrs.len() != est.len() {
        return Err(Error::invalid(format!(
            "mse: {} true CFRs vs {} estimates",
            true_cfrs.len(),
            est.len()
        )));
    }
    let n = true_cfrs[0].len();
    if n == 0 {
        return Err(Error::invalid("mse: empty CFR"));
    }
    let mut total = 0.0;
    for (u, (h, e)) in true_cfrs.iter().zip(est).enumerate() {
        if h.len() != n || e.len() != n {
            return Err(Error::invalid(format!(
                "mse: transmitter {} has {} true and {} estimated bins, expected {n}",
                u + 1,
                h.len(),
                e.len()
            )));
        }
        total += h.iter().zip(e).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
    }
    Ok(total / (true_cfrs.len() * n) as f64)
}

/// Value used in place of `-inf` dB.
pub const PSD_FLOOR_DB: f64 = -300.0;

/// Averaged periodogram of length-`n_fft` time-domain symbols, in dB relative
/// to a unit-power-per-bin reference (a unit-modulus pilot reads 0 dB).
pub fn psd(signals: &[Vec<C64>], n_fft: usize) -> Result<Vec<f64>> {
    if signals.is_empty() {
        return Err(Error::invalid("psd: no signals"));
    }
    let mut acc = vec![0.0; n_fft];
    for (i, s) in signals.iter().enumerate() {
        if s.len() != n_fft {
            return Err(Error::invalid(format!(
                "psd: symbol {i} has {} samples, expected {n_fft}",
                s.len()
            )));
        }
        for (a, v) in acc.iter_mut().zip(numerics::dft(s)?) {
            *a += v.norm_sqr();
        }
    }
    let count = signals.len() as f64;
    Ok(acc
        .into_iter()
        .map(|p| {
            let p = p / count;
            if p > 0.0 {
                (10.0 * p.log10()).max(PSD_FLOOR_DB)
            } else {
                PSD_FLOOR_DB
            }
        })
        .collect())
}

/// Normalised frequency of bin `k`, wrapped to `[-0.5, 0.5)` cycles/sample.
pub fn bin_frequency(k: usize, n_fft: usize) -> f64 {
    let f = k as f64 / n_fft as f64;
    if f >= 0.5 {
        f - 1.0
    } else {
        f
    }
}

/// Piecewise-linear spectrum mask over normalised frequency (cycles/sample,
/// `[-0.5, 0.5)`), limits in dB relative to the unit-power in-band level.
/// Frequencies outside the breakpoint span take the nearest end value.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskSpec {
    breakpoints: Vec<(f64, f64)>,
}

/// Representative mask shipped as the default: a flat +3 dB ceiling over the
/// occupied band. It is illustrative, not regulatory data.
pub const DEFAULT_MASK: &str = "\
# Representative in-band spectrum mask (not certified regulatory data).
# frequency_offset (cycles/sample), limit_db relative to unit-power pilots
-0.5,3.0
0.5,3.0
";

impl MaskSpec {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::invalid("mask: no breakpoints"));
        }
        if breakpoints.iter().any(|(f, l)| !f.is_finite() || !l.is_finite()) {
            return Err(Error::invalid("mask: breakpoints must be finite"));
        }
        if breakpoints.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::invalid("mask: breakpoints are not sorted by frequency"));
        }
        Ok(MaskSpec { breakpoints })
    }

    pub fn flat(limit_db: f64) -> Self {
        MaskSpec {
            breakpoints: vec![(-0.5, limit_db), (0.5, limit_db)],
        }
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn limit_at(&self, f: f64) -> f64 {
        let bp = &self.breakpoints;
        let first = bp[0];
        let last = bp[bp.len() - 1];
        if f <= first.0 {
            return first.1;
        }
        if f >= last.0 {
            return last.1;
        }
        let i = bp.partition_point(|&(x, _)| x <= f);
        let (f0, l0) = bp[i - 1];
        let (f1, l1) = bp[i];
        if f1 == f0 {
            return l1;
        }
        l0 + (l1 - l0) * (f - f0) / (f1 - f0)
    }
}

impl Default for MaskSpec {
    fn default() -> Self {
        DEFAULT_MASK.parse().expect("default mask is valid")
    }
}

impl FromStr for MaskSpec {
    type Err = Error;

    /// Lines of `frequency_offset,limit_db`; `#` starts a comment.
    fn from_str(text: &str) -> Result<Self> {
        let mut bps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: &str| Error::Parse {
                line: i + 1,
                msg: format!("{msg}: '{raw}'"),
            };
            let (f, l) = line
                .split_once(',')
                .ok_or_else(|| parse_err("expected frequency_offset,limit_db"))?;
            let f: f64 = f.trim().parse().map_err(|_| parse_err("bad frequency"))?;
            let l: f64 = l.trim().parse().map_err(|_| parse_err("bad limit"))?;
            if let Some(&(prev, _)) = bps.last() {
                if f < prev {
                    return Err(parse_err("breakpoints must be sorted ascending"));
                }
            }
            bps.push((f, l));
        }
        MaskSpec::new(bps)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MaskReport {
    /// `(bin, excess dB)` for every bin above the mask.
    pub violations: Vec<(usize, f64)>,
}

impl MaskReport {
    pub fn compliant(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn mask_check(psd_db: &[f64], mask: &MaskSpec) -> MaskReport {
    let n = psd_db.len();
    let violations = psd_db
        .iter()
        .enumerate()
        .filter_map(|(k, &p)| {
            let excess = p - mask.limit_at(bin_frequency(k, n));
            (excess > 0.0).then_some((k, excess))
        })
        .collect();
    MaskReport { violations }
}
