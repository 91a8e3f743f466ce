//! CIR snapshots, complexity/range tables and PSD data for plotting.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{map_indices, simulate_symbol, TrialRng};
use crate::analysis::{self, complexity, max_unambiguous_range, RangeConfig};
use crate::error::{Error, Result};
use crate::estimator::ci_periodic_cirs;
use crate::numerics::{self, RngStream};
use crate::waveform::{generate_pilots, modulate_tx, PowerMode, Scheme, SystemConfig};

/// Magnitude traces of one noiseless symbol.
#[derive(Clone, Debug, PartialEq)]
pub enum CirSnapshot {
    /// `|joint CIR(n)|` for `n = 0..N`, with window width `n_cp`.
    Joint { magnitudes: Vec<f64>, n_cp: usize },
    /// One zero-filled, size-`N` IDFT trace per transmitter.
    PerTransmitter { magnitudes: Vec<Vec<f64>> },
}

pub fn cir_snapshot(cfg: &SystemConfig, seed: u64) -> Result<CirSnapshot> {
    let cfg = SystemConfig {
        noise_variance: 0.0,
        ..cfg.clone()
    };
    let run = simulate_symbol(&cfg, &TrialRng::new(seed, 0, 0))?;
    Ok(match cfg.scheme {
        Scheme::PsIsac => CirSnapshot::Joint {
            magnitudes: run.estimate.joint_cir.iter().map(|v| v.norm()).collect(),
            n_cp: cfg.n_cp,
        },
        Scheme::CiIsac => {
            let body = &run.received[cfg.n_cp..];
            let y_f = numerics::dft(body)?;
            let traces = ci_periodic_cirs(&y_f, &run.pilots, cfg.n_fft)?;
            CirSnapshot::PerTransmitter {
                magnitudes: traces.iter().map(|t| t.iter().map(|v| v.norm()).collect()).collect(),
            }
        }
    })
}

pub fn write_cir_snapshot<W: Write>(out: &mut W, snap: &CirSnapshot) -> std::io::Result<()> {
    match snap {
        CirSnapshot::Joint { magnitudes, n_cp } => {
            writeln!(out, "n,window,magnitude")?;
            for (n, m) in magnitudes.iter().enumerate() {
                writeln!(out, "{n},{},{m:.15e}", n / n_cp + 1)?;
            }
        }
        CirSnapshot::PerTransmitter { magnitudes } => {
            let header: Vec<String> = (1..=magnitudes.len()).map(|u| format!("tx{u}")).collect();
            writeln!(out, "n,{}", header.join(","))?;
            let len = magnitudes.first().map_or(0, Vec::len);
            for n in 0..len {
                let row: Vec<String> = magnitudes.iter().map(|t| format!("{:.15e}", t[n])).collect();
                writeln!(out, "{n},{}", row.join(","))?;
            }
        }
    }
    Ok(())
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Runs one noiseless trial and writes its CIR magnitudes as CSV.
pub fn dump_cir_snapshot(cfg: &SystemConfig, seed: u64, path: &Path) -> Result<CirSnapshot> {
    let snap = cir_snapshot(cfg, seed)?;
    write_file(path, |w| write_cir_snapshot(w, &snap))?;
    Ok(snap)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub complexity: analysis::ComplexityReport,
    pub n_pilot: usize,
    pub r_max_m: f64,
}

/// Complexity and unambiguous range for both schemes at every `U`.
/// Only the spacing and light speed of `rc` are used; `N` and `N_p` follow
/// from `n_fft` and the scheme.
pub fn table_rows(u_list: &[usize], n_fft: usize, rc: &RangeConfig) -> Result<Vec<TableRow>> {
    if u_list.is_empty() {
        return Err(Error::invalid("tables: empty transmitter list"));
    }
    let mut rows = Vec::new();
    for scheme in [Scheme::CiIsac, Scheme::PsIsac] {
        for &u in u_list {
            let range_cfg = RangeConfig {
                subcarrier_spacing: rc.subcarrier_spacing,
                light_speed: rc.light_speed,
                ..RangeConfig::for_scheme(scheme, u, n_fft)?
            };
            rows.push(TableRow {
                complexity: complexity(scheme, u as u64, n_fft as u64)?,
                n_pilot: range_cfg.n_pilot,
                r_max_m: max_unambiguous_range(&range_cfg)?,
            });
        }
    }
    Ok(rows)
}

pub const TABLE_HEADER: &str = "method,U,N,tx_add,tx_mult,rx_add,rx_mult,n_pilot,r_max_m";

pub fn write_tables<W: Write>(out: &mut W, rows: &[TableRow]) -> std::io::Result<()> {
    writeln!(out, "{TABLE_HEADER}")?;
    for r in rows {
        let c = &r.complexity;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.3}",
            c.scheme,
            c.num_tx,
            c.n_fft,
            c.tx_additions,
            c.tx_multiplications,
            c.rx_additions,
            c.rx_multiplications,
            r.n_pilot,
            r.r_max_m
        )?;
    }
    Ok(())
}

pub fn emit_tables(u_list: &[usize], n_fft: usize, rc: &RangeConfig, path: &Path) -> Result<Vec<TableRow>> {
    let rows = table_rows(u_list, n_fft, rc)?;
    write_file(path, |w| write_tables(w, &rows))?;
    Ok(rows)
}

/// Averaged periodogram (dB) of transmitter `tx_index`'s OFDM body over
/// `symbols` independently drawn pilot symbols. The CP is excluded.
pub fn psd_experiment(cfg: &SystemConfig, tx_index: usize, symbols: usize, seed: u64) -> Result<Vec<f64>> {
    cfg.validate()?;
    if symbols == 0 {
        return Err(Error::invalid("psd: need at least one symbol"));
    }
    let bodies = map_indices(symbols, |s| -> Result<_> {
        let pilots = generate_pilots(cfg, &mut RngStream::new(seed, s as u64))?;
        let framed = modulate_tx(cfg, &pilots, tx_index)?;
        Ok(framed[cfg.n_cp..].to_vec())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    analysis::psd(&bodies, cfg.n_fft)
}

/// Convenience for the spectrum comparison: one transmitter of a sweep point.
pub fn psd_for(
    n_fft: usize,
    ratio_den: u32,
    scheme: Scheme,
    mode: PowerMode,
    symbols: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let cfg = SystemConfig::sweep_point(n_fft, ratio_den, scheme, mode, 0.0, seed)?;
    psd_experiment(&cfg, 1, symbols, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::PilotRatio;

    fn small_scenario(scheme: Scheme) -> SystemConfig {
        SystemConfig {
            n_fft: 32,
            n_cp: 8,
            num_tx: 4,
            pilot_ratio: match scheme {
                Scheme::PsIsac => PilotRatio::FULL,
                Scheme::CiIsac => PilotRatio::reciprocal_of(4).unwrap(),
            },
            scheme,
            power_mode: PowerMode::Constrained,
            noise_variance: 0.5,
            num_taps: 4,
            seed: 0,
        }
    }

    #[test]
    fn joint_cir_windows() {
        let CirSnapshot::Joint { magnitudes, n_cp } = cir_snapshot(&small_scenario(Scheme::PsIsac), 5).unwrap() else {
            panic!("expected joint snapshot");
        };
        assert_eq!(n_cp, 8);
        for u in 0..4 {
            let w = &magnitudes[u * 8..(u + 1) * 8];
            assert!(w[..4].iter().all(|&m| m > 1e-6));
            assert!(w[4..].iter().all(|&m| m < 1e-10));
        }
    }

    #[test]
    fn single_user_energy_in_first_window() {
        let cfg = SystemConfig {
            num_tx: 1,
            ..small_scenario(Scheme::PsIsac)
        };
        let CirSnapshot::Joint { magnitudes, .. } = cir_snapshot(&cfg, 1).unwrap() else {
            panic!()
        };
        assert!(magnitudes[8..].iter().all(|&m| m < 1e-10));
    }

    #[test]
    fn ci_snapshot_is_per_transmitter() {
        let snap = cir_snapshot(&small_scenario(Scheme::CiIsac), 5).unwrap();
        let CirSnapshot::PerTransmitter { magnitudes } = &snap else { panic!() };
        assert_eq!(magnitudes.len(), 4);
        let mut buf = Vec::new();
        write_cir_snapshot(&mut buf, &snap).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,tx1,tx2,tx3,tx4\n"));
        assert_eq!(text.lines().count(), 33);
    }

    #[test]
    fn tables_need_transmitters() {
        let rc = RangeConfig::for_scheme(Scheme::PsIsac, 1, 256).unwrap();
        assert!(table_rows(&[], 256, &rc).is_err());
        assert_eq!(table_rows(&[4, 8, 16], 256, &rc).unwrap().len(), 6);
    }

    #[test]
    fn psd_levels() {
        let ps = psd_for(64, 4, Scheme::PsIsac, PowerMode::Constrained, 50, 1).unwrap();
        assert!(ps.iter().all(|p| p.abs() < 1e-9));
        let ci = psd_for(64, 16, Scheme::CiIsac, PowerMode::Unconstrained, 50, 1).unwrap();
        for (k, p) in ci.iter().enumerate() {
            if k % 16 == 0 {
                assert!((p - 10.0 * 16f64.log10()).abs() < 1e-9);
            } else {
                assert!(*p < -250.0, "bin {k}: {p}");
            }
        }
    }
}
