//! Uplink OFDMA pilot allocation for integrated sensing and communication.
//!
//! Two schemes are modelled end to end:
//!
//! * **PS-ISAC**: every transmitter sends the same full-band block pilot,
//!   rotated by a transmitter-specific linear phase so that its channel impulse
//!   response lands in its own cyclic-prefix-sized window at the receiver. A
//!   single joint LS estimate and a single IDFT separate all transmitters.
//! * **CI-ISAC**: the conventional comb, transmitter `u` owns every `U`-th
//!   subcarrier and is estimated independently.
//!
//! The crate is organised bottom-up: [`numerics`] (unitary DFT pair, seeded
//! streams), [`waveform`] (pilots, phase shift, CP framing), [`channel`]
//! (Rayleigh taps, convolution, AWGN), [`estimator`] (the receiver),
//! [`analysis`] (complexity, unambiguous range, MSE, PSD and masks) and
//! [`harness`] (Monte Carlo sweeps and CSV output).

pub mod analysis;
pub mod channel;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod numerics;
pub mod waveform;

pub use error::{Error, Result};
pub use numerics::C64;
