use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use psisac::analysis::{self, MaskSpec, RangeConfig, DEFAULT_LIGHT_SPEED_M_S, DEFAULT_SUBCARRIER_SPACING_HZ};
use psisac::harness::{self, ExperimentSpec};
use psisac::waveform::{PilotRatio, PowerMode, Scheme, SystemConfig};
use psisac::Error;

#[derive(Debug, Parser)]
#[command(name = "psisac", version, about = "Uplink OFDMA-ISAC pilot allocation simulator")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// Master seed for every random stream
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trials (or averaged symbols for `psd`)
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output file; stdout when omitted (simulate falls back to its config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an MSE sweep described by a config file
    Simulate {
        #[arg(long, short)]
        config: PathBuf,
    },
    /// Real-operation counts for both schemes
    Complexity {
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [4, 8, 16])]
        users: Vec<usize>,
    },
    /// Maximum unambiguous range for both schemes
    Range {
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [4, 8, 16])]
        users: Vec<usize>,
        /// Subcarrier spacing in Hz
        #[arg(long, default_value_t = DEFAULT_SUBCARRIER_SPACING_HZ)]
        subcarrier_spacing: f64,
        /// Propagation speed in m/s
        #[arg(long, default_value_t = DEFAULT_LIGHT_SPEED_M_S)]
        light_speed: f64,
    },
    /// Averaged transmit spectrum of one transmitter plus a mask check
    Psd {
        #[arg(long, default_value = "CI-ISAC")]
        scheme: Scheme,
        /// Comb ratio 1/U; fixes U and N_CP for both schemes
        #[arg(long, default_value = "1/16")]
        pr: PilotRatio,
        #[arg(long, default_value = "unconstrained")]
        power_mode: PowerMode,
        #[arg(long, default_value_t = 256)]
        n: usize,
        /// Transmitter index (1-based)
        #[arg(long, default_value_t = 1)]
        tx: usize,
        /// Mask file of `frequency_offset,limit_db` lines; built-in default otherwise
        #[arg(long)]
        mask: Option<PathBuf>,
    },
    /// CIR magnitudes of one noiseless symbol
    CirDump {
        #[arg(long, default_value = "PS-ISAC")]
        scheme: Scheme,
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        users: usize,
        #[arg(long, default_value_t = 8)]
        n_cp: usize,
        #[arg(long, default_value_t = 4)]
        taps: usize,
    },
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn finish(mut w: Box<dyn Write>, path: Option<&Path>) -> Result<(), Error> {
    w.flush().map_err(|e| Error::Io {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf),
        source: e,
    })
}

fn io_err(path: Option<&Path>) -> impl Fn(io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf),
        source: e,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let g = &cli.global;
    let out = g.out.as_deref();
    let seed = g.seed.unwrap_or(0);
    match cli.command {
        Command::Simulate { config } => {
            let mut spec = ExperimentSpec::from_file(&config)?;
            if let Some(s) = g.seed {
                spec.seed = s;
            }
            if let Some(t) = g.trials {
                spec.num_trials = t;
            }
            if let Some(o) = &g.out {
                spec.output_path = o.clone();
            }
            spec.validate()?;
            let rows = harness::with_threads(g.threads.map(|t| t as usize), || harness::run_experiment(&spec))??;
            eprintln!("wrote {} rows to {}", rows.len(), spec.output_path.display());
        }
        Command::Complexity { n, users } => {
            let rc = RangeConfig::for_scheme(Scheme::PsIsac, 1, n)?;
            let rows = harness::table_rows(&users, n, &rc)?;
            let mut w = open_out(out)?;
            (|| -> io::Result<()> {
                writeln!(w, "method,U,N,tx_add,tx_mult,rx_add,rx_mult")?;
                for r in &rows {
                    let c = &r.complexity;
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{}",
                        c.scheme, c.num_tx, c.n_fft, c.tx_additions, c.tx_multiplications, c.rx_additions,
                        c.rx_multiplications
                    )?;
                }
                Ok(())
            })()
            .map_err(io_err(out))?;
            finish(w, out)?;
        }
        Command::Range {
            n,
            users,
            subcarrier_spacing,
            light_speed,
        } => {
            let rc = RangeConfig {
                subcarrier_spacing,
                light_speed,
                ..RangeConfig::for_scheme(Scheme::PsIsac, 1, n)?
            };
            let rows = harness::table_rows(&users, n, &rc)?;
            let mut w = open_out(out)?;
            (|| -> io::Result<()> {
                writeln!(w, "method,U,n_pilot,r_max_m,r_max_m_floor")?;
                for r in &rows {
                    let c = &r.complexity;
                    writeln!(w, "{},{},{},{:.3},{}", c.scheme, c.num_tx, r.n_pilot, r.r_max_m, r.r_max_m.floor())?;
                }
                Ok(())
            })()
            .map_err(io_err(out))?;
            finish(w, out)?;
        }
        Command::Psd {
            scheme,
            pr,
            power_mode,
            n,
            tx,
            mask,
        } => {
            if pr.num() != 1 {
                return Err(Error::InvalidArgument(format!("--pr {pr} is not of the form 1/U")));
            }
            let mask = match &mask {
                Some(p) => std::fs::read_to_string(p)
                    .map_err(|e| Error::Io {
                        path: p.clone(),
                        source: e,
                    })?
                    .parse()?,
                None => MaskSpec::default(),
            };
            let cfg = SystemConfig::sweep_point(n, pr.den(), scheme, power_mode, 0.0, seed)?;
            let symbols = g.trials.unwrap_or(1000);
            let psd = harness::with_threads(g.threads.map(|t| t as usize), || harness::psd_experiment(&cfg, tx, symbols, seed))??;
            let report = analysis::mask_check(&psd, &mask);
            let mut excess = vec![None; n];
            for &(k, e) in &report.violations {
                excess[k] = Some(e);
            }
            let mut w = open_out(out)?;
            (|| -> io::Result<()> {
                writeln!(w, "bin,freq,psd_db,mask_db,excess_db")?;
                for (k, p) in psd.iter().enumerate() {
                    let f = analysis::bin_frequency(k, n);
                    let e = excess[k].map_or_else(String::new, |e: f64| format!("{e:.6}"));
                    writeln!(w, "{k},{f},{p:.6},{:.6},{e}", mask.limit_at(f))?;
                }
                Ok(())
            })()
            .map_err(io_err(out))?;
            finish(w, out)?;
            eprintln!(
                "{scheme} PR={pr} {power_mode}: {} of {n} bins exceed the mask",
                report.violations.len()
            );
        }
        Command::CirDump {
            scheme,
            n,
            users,
            n_cp,
            taps,
        } => {
            let cfg = SystemConfig {
                n_fft: n,
                n_cp,
                num_tx: users,
                pilot_ratio: match scheme {
                    Scheme::PsIsac => PilotRatio::FULL,
                    Scheme::CiIsac => PilotRatio::reciprocal_of(users as u32)?,
                },
                scheme,
                power_mode: PowerMode::Constrained,
                noise_variance: 0.0,
                num_taps: taps,
                seed,
            };
            let snap = harness::cir_snapshot(&cfg, seed)?;
            let mut w = open_out(out)?;
            harness::write_cir_snapshot(&mut w, &snap).map_err(io_err(out))?;
            finish(w, out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
