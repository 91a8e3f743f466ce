//! Complex vectors, the unitary DFT pair and seeded random streams.
//!
//! Both transforms carry a `1/sqrt(N)` factor so that `dft(idft(x)) == x` and
//! `||dft(x)|| == ||x||`. Power-of-two lengths go through an iterative radix-2
//! FFT; any other length falls back to direct summation.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// `e^{-j 2 pi m / n}`, with the integer phase index reduced mod `n` first so
/// large products `k * l` do not lose precision.
#[inline]
pub fn unit_phasor(m: usize, n: usize) -> C64 {
    let m = m % n;
    C64::from_polar(1.0, -2.0 * PI * m as f64 / n as f64)
}

thread_local! {
    static PHASORS: RefCell<HashMap<usize, Rc<[C64]>>> = RefCell::new(HashMap::new());
}

/// `unit_phasor(m, n)` for `m in 0..n`, built once per thread and length.
pub fn phasor_table(n: usize) -> Rc<[C64]> {
    PHASORS.with(|cache| {
        cache
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| (0..n).map(|m| unit_phasor(m, n)).collect())
            .clone()
    })
}

/// Forward unitary DFT, `X(k) = N^{-1/2} sum_n x(n) e^{-j2pi nk/N}`.
pub fn dft(x: &[C64]) -> Result<Vec<C64>> {
    transform(x, Direction::Forward)
}

/// Inverse unitary DFT, `x(n) = N^{-1/2} sum_k X(k) e^{+j2pi kn/N}`.
pub fn idft(x: &[C64]) -> Result<Vec<C64>> {
    transform(x, Direction::Inverse)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

fn transform(x: &[C64], dir: Direction) -> Result<Vec<C64>> {
    if x.is_empty() {
        return Err(Error::invalid("transform of an empty vector"));
    }
    let n = x.len();
    let mut out = if n.is_power_of_two() {
        let mut buf = x.to_vec();
        fft_in_place(&mut buf, dir);
        buf
    } else {
        direct(x, dir)
    };
    let scale = 1.0 / (n as f64).sqrt();
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(out)
}

fn direct(x: &[C64], dir: Direction) -> Vec<C64> {
    let n = x.len();
    let table = phasor_table(n);
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(i, &v)| {
                    let w = table[(i * k) % n];
                    match dir {
                        Direction::Forward => v * w,
                        Direction::Inverse => v * w.conj(),
                    }
                })
                .sum()
        })
        .collect()
}

/// Unscaled iterative decimation-in-time radix-2 FFT.
fn fft_in_place(buf: &mut [C64], dir: Direction) {
    let n = buf.len();
    if n < 2 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            buf.swap(i, j);
        }
    }

    let table = phasor_table(n);

    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for chunk in buf.chunks_exact_mut(len) {
            let (lo, hi) = chunk.split_at_mut(half);
            for (k, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                let w = table[k * stride];
                let t = *b * if dir == Direction::Forward { w } else { w.conj() };
                *b = *a - t;
                *a += t;
            }
        }
        len <<= 1;
    }
}

pub fn energy(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

/// Largest elementwise distance `max_k |a(k) - b(k)|`.
pub fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Circular right shift: `out(n) = x((n - m) mod N)`.
pub fn rotate_right(x: &[C64], m: usize) -> Vec<C64> {
    let mut out = x.to_vec();
    if !out.is_empty() {
        out.rotate_right(m % x.len());
    }
    out
}

/// Rejects empty vectors and non-finite entries.
pub fn check_vector(x: &[C64], what: &str) -> Result<()> {
    if x.is_empty() {
        return Err(Error::invalid(format!("{what} is empty")));
    }
    if let Some(i) = x.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::invalid(format!("{what}[{i}] is not finite")));
    }
    Ok(())
}

/// A deterministic random stream identified by `(seed, stream_id)`.
///
/// Backed by ChaCha8 with the stream id mapped onto the cipher's 64-bit stream
/// selector, so distinct ids give independent sequences without any shared
/// state and the output never depends on which thread draws it.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform integer in `0..upper`.
    pub fn below(&mut self, upper: u32) -> u32 {
        self.rng.random_range(0..upper)
    }
}

/// `n` i.i.d. circularly symmetric `CN(0, variance)` samples.
pub fn complex_gaussian(rng: &mut RngStream, n: usize, variance: f64) -> Result<Vec<C64>> {
    if n == 0 {
        return Err(Error::invalid("complex_gaussian: n must be at least 1"));
    }
    if !variance.is_finite() || variance <= 0.0 {
        return Err(Error::invalid(format!(
            "complex_gaussian: variance must be positive and finite, got {variance}"
        )));
    }
    let sigma = (variance / 2.0).sqrt();
    Ok((0..n)
        .map(|_| {
            let re = rng.standard_normal();
            let im = rng.standard_normal();
            C64::new(re * sigma, im * sigma)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    /// Reference transform evaluated straight from the definition with
    /// `sin`/`cos` of the unreduced angle.
    fn oracle(x: &[C64], sign: f64) -> Vec<C64> {
        let n = x.len();
        let s = 1.0 / (n as f64).sqrt();
        (0..n)
            .map(|k| {
                let mut acc = C64::new(0.0, 0.0);
                for (i, v) in x.iter().enumerate() {
                    let ang = sign * 2.0 * PI * (i * k) as f64 / n as f64;
                    acc += v * C64::new(ang.cos(), ang.sin());
                }
                acc * s
            })
            .collect()
    }

    fn random_vec(seed: u64, n: usize) -> Vec<C64> {
        let mut rng = RngStream::new(seed, 0);
        complex_gaussian(&mut rng, n, 1.0).unwrap()
    }

    #[test]
    fn idft_examples() {
        let y = idft(&[c(1.0); 4]).unwrap();
        assert!(max_abs_diff(&y, &[c(2.0), c(0.0), c(0.0), c(0.0)]) < 1e-15);
        let y = idft(&[c(1.0), c(0.0), c(0.0), c(0.0)]).unwrap();
        assert!(max_abs_diff(&y, &[c(0.5); 4]) < 1e-15);
    }

    #[test]
    fn dft_examples() {
        let y = dft(&[c(2.0), c(0.0), c(0.0), c(0.0)]).unwrap();
        assert!(max_abs_diff(&y, &[c(1.0); 4]) < 1e-15);
        let y = dft(&[c(1.0); 4]).unwrap();
        assert!(max_abs_diff(&y, &[c(2.0), c(0.0), c(0.0), c(0.0)]) < 1e-15);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(dft(&[]), Err(Error::InvalidArgument(_))));
        assert!(matches!(idft(&[]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn fft_matches_direct_oracle() {
        for n in [1usize, 2, 4, 8, 16, 64, 256, 1024] {
            let x = random_vec(n as u64, n);
            assert!(max_abs_diff(&dft(&x).unwrap(), &oracle(&x, -1.0)) < 1e-11, "n={n}");
            assert!(max_abs_diff(&idft(&x).unwrap(), &oracle(&x, 1.0)) < 1e-11, "n={n}");
        }
    }

    #[test]
    fn non_power_of_two_uses_direct_sum() {
        let x = random_vec(3, 12);
        assert!(max_abs_diff(&dft(&x).unwrap(), &oracle(&x, -1.0)) < 1e-12);
        assert!(max_abs_diff(&dft(&idft(&x).unwrap()).unwrap(), &x) < 1e-12);
    }

    #[test]
    fn round_trip_len8_and_parseval_len16() {
        let v = random_vec(8, 8);
        let back = dft(&oracle(&v, 1.0)).unwrap();
        assert!(max_abs_diff(&back, &v) < 1e-12);
        let v = random_vec(16, 16);
        let e = energy(&v).sqrt();
        assert!((energy(&dft(&v).unwrap()).sqrt() - e).abs() < 1e-12);
    }

    #[test]
    fn gaussian_moments() {
        let mut rng = RngStream::new(7, 0);
        let n = 100_000;
        let s = complex_gaussian(&mut rng, n, 1.0).unwrap();
        let mean: C64 = s.iter().sum::<C64>() / n as f64;
        let var = s.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (n - 1) as f64;
        assert!(mean.norm() < 0.02, "mean {mean}");
        assert!((0.98..=1.02).contains(&var), "var {var}");
    }

    #[test]
    fn gaussian_rejects_non_positive_variance() {
        let mut rng = RngStream::new(1, 0);
        assert!(complex_gaussian(&mut rng, 4, 0.0).is_err());
        assert!(complex_gaussian(&mut rng, 4, -1.0).is_err());
        assert!(complex_gaussian(&mut rng, 0, 1.0).is_err());
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let a = complex_gaussian(&mut RngStream::new(9, 3), 64, 1.0).unwrap();
        let b = complex_gaussian(&mut RngStream::new(9, 3), 64, 1.0).unwrap();
        let other = complex_gaussian(&mut RngStream::new(9, 4), 64, 1.0).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, other);
    }

    proptest! {
        #[test]
        fn unitary_round_trip(seed in any::<u64>(), log_n in 0u32..=12) {
            let x = random_vec(seed, 1 << log_n);
            let y = dft(&idft(&x).unwrap()).unwrap();
            prop_assert!(max_abs_diff(&x, &y) < 1e-12);
            let e = energy(&x);
            prop_assert!((energy(&dft(&x).unwrap()) - e).abs() <= 1e-12 * e.max(1.0) * 10.0);
        }

        #[test]
        fn linearity(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let x = random_vec(seed, 64);
            let y = random_vec(seed.wrapping_add(1), 64);
            let (a, b) = (C64::new(a, b), C64::new(b, -a));
            let mix: Vec<C64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
            let lhs = dft(&mix).unwrap();
            let (fx, fy) = (dft(&x).unwrap(), dft(&y).unwrap());
            let rhs: Vec<C64> = fx.iter().zip(&fy).map(|(p, q)| a * p + b * q).collect();
            prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
        }

        #[test]
        fn phase_ramp_is_circular_shift(seed in any::<u64>(), m in 0usize..64) {
            let n = 64;
            let x = random_vec(seed, n);
            let ramped: Vec<C64> = x.iter().enumerate().map(|(k, v)| v * unit_phasor(k * m, n)).collect();
            let lhs = idft(&ramped).unwrap();
            let rhs = rotate_right(&idft(&x).unwrap(), m);
            prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
        }
    }
}
