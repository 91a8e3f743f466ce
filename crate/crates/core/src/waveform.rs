//! Pilot generation, per-transmitter phase shifting and CP framing.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::{self, RngStream, C64};

/// Pilot allocation scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Overlapped full-band block pilots separated by a CP-sized phase ramp.
    PsIsac,
    /// Conventional interleaved comb, one offset per transmitter.
    CiIsac,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::PsIsac => "PS-ISAC",
            Scheme::CiIsac => "CI-ISAC",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "ps-isac" | "ps" => Ok(Scheme::PsIsac),
            "ci-isac" | "ci" => Ok(Scheme::CiIsac),
            other => Err(Error::invalid(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Per-subcarrier pilot power policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PowerMode {
    /// Every occupied bin carries unit power (spectral-mask friendly).
    Constrained,
    /// Occupied bins are boosted by `sqrt(1/PR)` so total power matches PR = 1.
    Unconstrained,
}

impl fmt::Display for PowerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PowerMode::Constrained => "constrained",
            PowerMode::Unconstrained => "unconstrained",
        })
    }
}

impl FromStr for PowerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "constrained" | "pc" => Ok(PowerMode::Constrained),
            "unconstrained" | "no-pc" | "nopc" => Ok(PowerMode::Unconstrained),
            other => Err(Error::invalid(format!("unknown power mode '{other}'"))),
        }
    }
}

/// Fraction of subcarriers carrying one transmitter's pilots, kept as an exact
/// reduced rational.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PilotRatio {
    num: u32,
    den: u32,
}

impl PilotRatio {
    pub const FULL: PilotRatio = PilotRatio { num: 1, den: 1 };

    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 || num > den {
            return Err(Error::invalid(format!(
                "pilot ratio {num}/{den} is not in (0, 1]"
            )));
        }
        let g = gcd(num, den);
        Ok(PilotRatio {
            num: num / g,
            den: den / g,
        })
    }

    /// `1 / den`.
    pub fn reciprocal_of(den: u32) -> Result<Self> {
        Self::new(1, den)
    }

    pub fn num(&self) -> u32 {
        self.num
    }

    pub fn den(&self) -> u32 {
        self.den
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `n * PR` when it is an integer.
    pub fn scale(&self, n: usize) -> Option<usize> {
        let prod = n * self.num as usize;
        prod.is_multiple_of(self.den as usize).then(|| prod / self.den as usize)
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl fmt::Display for PilotRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for PilotRatio {
    type Err = Error;

    /// Accepts `a/b` or a bare integer.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("cannot parse pilot ratio '{s}'"));
        match s.split_once('/') {
            Some((a, b)) => {
                let a = a.trim().parse().map_err(|_| bad())?;
                let b = b.trim().parse().map_err(|_| bad())?;
                PilotRatio::new(a, b)
            }
            None => PilotRatio::new(s.parse().map_err(|_| bad())?, 1),
        }
    }
}

/// All parameters of one simulated scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    pub n_fft: usize,
    pub n_cp: usize,
    pub num_tx: usize,
    pub pilot_ratio: PilotRatio,
    pub scheme: Scheme,
    pub power_mode: PowerMode,
    pub noise_variance: f64,
    pub num_taps: usize,
    pub seed: u64,
}

impl SystemConfig {
    /// The simulation setup used for the MSE sweeps: for a comb ratio
    /// `1/den`, `U = den`, `N_CP = N/den` and `N_CP - 1` channel taps.
    /// PS-ISAC keeps `U` and `N_CP` but puts pilots on every bin.
    pub fn sweep_point(
        n_fft: usize,
        ratio_den: u32,
        scheme: Scheme,
        power_mode: PowerMode,
        noise_variance: f64,
        seed: u64,
    ) -> Result<Self> {
        let ratio = PilotRatio::reciprocal_of(ratio_den)?;
        let n_cp = ratio
            .scale(n_fft)
            .ok_or_else(|| Error::config(format!("N * PR = {n_fft}/{ratio_den} is not an integer")))?;
        let cfg = SystemConfig {
            n_fft,
            n_cp,
            num_tx: ratio_den as usize,
            pilot_ratio: match scheme {
                Scheme::PsIsac => PilotRatio::FULL,
                Scheme::CiIsac => ratio,
            },
            scheme,
            power_mode,
            noise_variance,
            num_taps: n_cp.saturating_sub(1).max(1),
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::config(m));
        if !self.n_fft.is_power_of_two() || self.n_fft < 2 {
            return fail(format!("n_fft = {} is not a power of two >= 2", self.n_fft));
        }
        if self.n_cp == 0 || self.n_cp >= self.n_fft {
            return fail(format!(
                "need 0 < n_cp < n_fft, got n_cp = {}, n_fft = {}",
                self.n_cp, self.n_fft
            ));
        }
        if self.num_tx == 0 {
            return fail("num_tx must be at least 1".into());
        }
        if self.num_taps == 0 || self.num_taps > self.n_cp {
            return fail(format!(
                "need 1 <= num_taps <= n_cp, got num_taps = {}, n_cp = {}",
                self.num_taps, self.n_cp
            ));
        }
        if !self.noise_variance.is_finite() || self.noise_variance < 0.0 {
            return fail(format!(
                "noise_variance must be finite and >= 0, got {}",
                self.noise_variance
            ));
        }
        match self.scheme {
            Scheme::PsIsac => {
                if self.num_tx * self.n_cp > self.n_fft {
                    return fail(format!(
                        "PS-ISAC needs num_tx * n_cp <= n_fft, got {} * {} > {}",
                        self.num_tx, self.n_cp, self.n_fft
                    ));
                }
                if self.pilot_ratio != PilotRatio::FULL {
                    return fail(format!(
                        "PS-ISAC needs pilot_ratio = 1, got {}",
                        self.pilot_ratio
                    ));
                }
            }
            Scheme::CiIsac => {
                let expected = PilotRatio::reciprocal_of(self.num_tx as u32)?;
                if self.pilot_ratio != expected {
                    return fail(format!(
                        "CI-ISAC needs pilot_ratio = 1/num_tx = {expected}, got {}",
                        self.pilot_ratio
                    ));
                }
                if self.pilot_ratio.scale(self.n_fft).is_none() {
                    return fail(format!(
                        "CI-ISAC needs n_fft * pilot_ratio integral, got {} * {}",
                        self.n_fft, self.pilot_ratio
                    ));
                }
            }
        }
        Ok(())
    }

    /// Pilot amplitude on every occupied bin.
    pub fn pilot_amplitude(&self) -> f64 {
        match self.power_mode {
            PowerMode::Constrained => 1.0,
            PowerMode::Unconstrained => (1.0 / self.pilot_ratio.value()).sqrt(),
        }
    }
}

/// Per-transmitter frequency-domain pilots before any phase shift.
#[derive(Clone, Debug, PartialEq)]
pub struct PilotGrid {
    /// One length-N vector per transmitter; zeros on unallocated bins.
    pub per_tx_pilots: Vec<Vec<C64>>,
    /// Occupied subcarrier indices per transmitter, ascending.
    pub allocation: Vec<Vec<usize>>,
}

impl PilotGrid {
    pub fn num_tx(&self) -> usize {
        self.per_tx_pilots.len()
    }

    /// Pilots of transmitter `u` (1-based).
    pub fn tx(&self, u: usize) -> &[C64] {
        &self.per_tx_pilots[u - 1]
    }

    /// The shared base sequence of an overlapped grid.
    pub fn base(&self) -> &[C64] {
        &self.per_tx_pilots[0]
    }
}

/// QPSK point `e^{j pi (2m+1)/4}`.
fn qpsk(m: u32) -> C64 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match m & 3 {
        0 => C64::new(h, h),
        1 => C64::new(-h, h),
        2 => C64::new(-h, -h),
        _ => C64::new(h, -h),
    }
}

/// Draws pseudo-random unit-modulus QPSK pilots and lays them out per scheme.
pub fn generate_pilots(cfg: &SystemConfig, rng: &mut RngStream) -> Result<PilotGrid> {
    cfg.validate()?;
    let n = cfg.n_fft;
    let amp = cfg.pilot_amplitude();
    match cfg.scheme {
        Scheme::PsIsac => {
            let base: Vec<C64> = (0..n).map(|_| qpsk(rng.below(4)) * amp).collect();
            Ok(PilotGrid {
                per_tx_pilots: vec![base; cfg.num_tx],
                allocation: vec![(0..n).collect(); cfg.num_tx],
            })
        }
        Scheme::CiIsac => {
            let u_count = cfg.num_tx;
            let mut per_tx_pilots = Vec::with_capacity(u_count);
            let mut allocation = Vec::with_capacity(u_count);
            for offset in 0..u_count {
                let bins: Vec<usize> = (offset..n).step_by(u_count).collect();
                let mut grid = vec![C64::new(0.0, 0.0); n];
                for &k in &bins {
                    grid[k] = qpsk(rng.below(4)) * amp;
                }
                per_tx_pilots.push(grid);
                allocation.push(bins);
            }
            Ok(PilotGrid {
                per_tx_pilots,
                allocation,
            })
        }
    }
}

/// Applies `psi_u(k) = e^{-j2pi k (u-1) N_CP / N}` for transmitter `u` (1-based).
pub fn phase_shift(pilots: &[C64], tx_index: usize, n_cp: usize, n_fft: usize) -> Result<Vec<C64>> {
    if pilots.len() != n_fft {
        return Err(Error::invalid(format!(
            "phase_shift: pilots have length {}, expected {n_fft}",
            pilots.len()
        )));
    }
    if tx_index == 0 {
        return Err(Error::invalid("phase_shift: transmitter index is 1-based"));
    }
    let shift = (tx_index - 1) * n_cp;
    if shift >= n_fft {
        return Err(Error::invalid(format!(
            "phase_shift: shift (u-1)*N_CP = {shift} >= N = {n_fft}"
        )));
    }
    if shift == 0 {
        return Ok(pilots.to_vec());
    }
    let table = numerics::phasor_table(n_fft);
    Ok(pilots
        .iter()
        .enumerate()
        .map(|(k, &x)| x * table[(k * shift) % n_fft])
        .collect())
}

/// Prepends the last `n_cp` samples.
pub fn add_cp(time: &[C64], n_cp: usize) -> Result<Vec<C64>> {
    if n_cp >= time.len() {
        return Err(Error::invalid(format!(
            "add_cp: n_cp = {n_cp} must be shorter than the symbol ({})",
            time.len()
        )));
    }
    let mut out = Vec::with_capacity(time.len() + n_cp);
    out.extend_from_slice(&time[time.len() - n_cp..]);
    out.extend_from_slice(time);
    Ok(out)
}

/// Drops the first `n_cp` samples of an `n_fft + n_cp` frame.
pub fn remove_cp(time: &[C64], n_cp: usize, n_fft: usize) -> Result<Vec<C64>> {
    if time.len() != n_fft + n_cp {
        return Err(Error::invalid(format!(
            "remove_cp: frame has {} samples, expected {} + {}",
            time.len(),
            n_fft,
            n_cp
        )));
    }
    Ok(time[n_cp..].to_vec())
}

/// Time-domain CP-framed symbol of transmitter `tx_index` (1-based).
pub fn modulate_tx(cfg: &SystemConfig, pilots: &PilotGrid, tx_index: usize) -> Result<Vec<C64>> {
    if tx_index == 0 || tx_index > pilots.num_tx() {
        return Err(Error::invalid(format!(
            "transmitter index {tx_index} outside 1..={}",
            pilots.num_tx()
        )));
    }
    let freq = match cfg.scheme {
        Scheme::PsIsac => phase_shift(pilots.tx(tx_index), tx_index, cfg.n_cp, cfg.n_fft)?,
        Scheme::CiIsac => pilots.tx(tx_index).to_vec(),
    };
    add_cp(&numerics::idft(&freq)?, cfg.n_cp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{energy, max_abs_diff, rotate_right};
    use proptest::prelude::*;

    fn cfg(scheme: Scheme, n: usize, u: usize, n_cp: usize, mode: PowerMode) -> SystemConfig {
        SystemConfig {
            n_fft: n,
            n_cp,
            num_tx: u,
            pilot_ratio: match scheme {
                Scheme::PsIsac => PilotRatio::FULL,
                Scheme::CiIsac => PilotRatio::reciprocal_of(u as u32).unwrap(),
            },
            scheme,
            power_mode: mode,
            noise_variance: 0.0,
            num_taps: 1,
            seed: 0,
        }
    }

    #[test]
    fn ps_grid_shares_base_sequence() {
        let c = cfg(Scheme::PsIsac, 8, 2, 2, PowerMode::Constrained);
        let g = generate_pilots(&c, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(g.per_tx_pilots[0], g.per_tx_pilots[1]);
        assert!(g.base().iter().all(|p| (p.norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn ci_grid_interleaves() {
        let c = cfg(Scheme::CiIsac, 8, 4, 2, PowerMode::Constrained);
        let g = generate_pilots(&c, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(g.allocation[0], vec![0, 4]);
        for k in 0..8 {
            let mag = g.tx(1)[k].norm();
            if k % 4 == 0 {
                assert!((mag - 1.0).abs() < 1e-15);
            } else {
                assert_eq!(mag, 0.0);
            }
        }
        for u in 0..4 {
            for v in (u + 1)..4 {
                assert!(g.per_tx_pilots[u]
                    .iter()
                    .zip(&g.per_tx_pilots[v])
                    .all(|(a, b)| (a * b).norm() == 0.0));
            }
        }
    }

    #[test]
    fn ci_unconstrained_boost() {
        let c = cfg(Scheme::CiIsac, 8, 4, 2, PowerMode::Unconstrained);
        let g = generate_pilots(&c, &mut RngStream::new(1, 0)).unwrap();
        for &k in &g.allocation[2] {
            assert!((g.tx(3)[k].norm() - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn total_pilot_power() {
        let n = 64;
        let cases = [
            (Scheme::PsIsac, PowerMode::Constrained, n as f64),
            (Scheme::CiIsac, PowerMode::Constrained, n as f64 / 4.0),
            (Scheme::CiIsac, PowerMode::Unconstrained, n as f64),
        ];
        for (scheme, mode, expected) in cases {
            let c = cfg(scheme, n, 4, 16, mode);
            let g = generate_pilots(&c, &mut RngStream::new(5, 0)).unwrap();
            for p in &g.per_tx_pilots {
                assert!((energy(p) - expected).abs() < 1e-9, "{scheme} {mode}");
            }
        }
    }

    #[test]
    fn invalid_configs_name_the_invariant() {
        let mut c = cfg(Scheme::PsIsac, 32, 5, 8, PowerMode::Constrained);
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("num_tx * n_cp"), "{err}");
        c = cfg(Scheme::CiIsac, 32, 4, 8, PowerMode::Constrained);
        c.pilot_ratio = PilotRatio::reciprocal_of(2).unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("1/num_tx"));
        c = cfg(Scheme::PsIsac, 24, 1, 4, PowerMode::Constrained);
        assert!(c.validate().unwrap_err().to_string().contains("power of two"));
        c = cfg(Scheme::PsIsac, 32, 1, 4, PowerMode::Constrained);
        c.num_taps = 5;
        assert!(c.validate().unwrap_err().to_string().contains("num_taps"));
    }

    #[test]
    fn phase_shift_examples() {
        let ones = vec![C64::new(1.0, 0.0); 8];
        assert_eq!(phase_shift(&ones, 1, 2, 8).unwrap(), ones);
        let got = phase_shift(&ones, 2, 2, 8).unwrap();
        let j = C64::new(0.0, 1.0);
        let one = C64::new(1.0, 0.0);
        let want = [one, -j, -one, j, one, -j, -one, j];
        assert!(max_abs_diff(&got, &want) < 1e-15);
        assert!(phase_shift(&ones, 5, 2, 8).is_err());
        assert!(phase_shift(&ones, 0, 2, 8).is_err());
    }

    #[test]
    fn cp_examples() {
        let v = |xs: &[f64]| xs.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>();
        let (a, b, c, d) = (1.0, 2.0, 3.0, 4.0);
        assert_eq!(add_cp(&v(&[a, b, c, d]), 1).unwrap(), v(&[d, a, b, c, d]));
        assert_eq!(add_cp(&v(&[2., 0., 0., 0.]), 2).unwrap(), v(&[0., 0., 2., 0., 0., 0.]));
        assert_eq!(remove_cp(&v(&[d, a, b, c, d]), 1, 4).unwrap(), v(&[a, b, c, d]));
        assert!(remove_cp(&v(&[a, b, c]), 1, 4).is_err());
        assert!(add_cp(&v(&[a, b]), 2).is_err());
    }

    #[test]
    fn modulate_ps_u1_is_plain_ofdm() {
        let c = cfg(Scheme::PsIsac, 32, 4, 8, PowerMode::Constrained);
        let g = generate_pilots(&c, &mut RngStream::new(2, 0)).unwrap();
        let plain = add_cp(&numerics::idft(g.base()).unwrap(), 8).unwrap();
        assert_eq!(modulate_tx(&c, &g, 1).unwrap(), plain);
    }

    #[test]
    fn modulate_ps_u2_is_shifted_body() {
        let c = cfg(Scheme::PsIsac, 32, 4, 8, PowerMode::Constrained);
        let g = generate_pilots(&c, &mut RngStream::new(2, 0)).unwrap();
        let s1 = modulate_tx(&c, &g, 1).unwrap();
        let s2 = modulate_tx(&c, &g, 2).unwrap();
        let body1 = &s1[8..];
        let body2 = &s2[8..];
        assert!(max_abs_diff(body2, &rotate_right(body1, 8)) < 1e-12);
        assert!((energy(body2) - energy(g.base())).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn shift_preserves_magnitude_and_moves_cir(seed in any::<u64>(), u in 1usize..=4) {
            let n = 64;
            let n_cp = 16;
            let x = numerics::complex_gaussian(&mut RngStream::new(seed, 0), n, 1.0).unwrap();
            let y = phase_shift(&x, u, n_cp, n).unwrap();
            for (a, b) in x.iter().zip(&y) {
                prop_assert!((a.norm() - b.norm()).abs() < 1e-12);
            }
            let lhs = numerics::idft(&y).unwrap();
            let rhs = rotate_right(&numerics::idft(&x).unwrap(), (u - 1) * n_cp);
            prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
        }

        #[test]
        fn cp_round_trip(seed in any::<u64>(), m in 0usize..32) {
            let x = numerics::complex_gaussian(&mut RngStream::new(seed, 1), 32, 1.0).unwrap();
            let framed = add_cp(&x, m).unwrap();
            prop_assert_eq!(remove_cp(&framed, m, 32).unwrap(), x);
        }
    }
}
