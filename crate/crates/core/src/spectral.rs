//! Fourier frequencies, the finite Fourier transform and the periodogram.
//!
//! `w_z(λ) = (2πT)^{-1/2} Σ_{t=1}^T z_t e^{iλt}` and `I_z(λ) = |w_z(λ)|²`,
//! evaluated at `λ_j = 2πj/T`. Any length `T` is supported; rustfft picks a
//! mixed-radix or Bluestein plan as needed.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, TimeSeries};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Plan for `Σ_s x_s e^{+2πi js/n}`, cached per thread.
pub(crate) fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(n, direction))
}

/// Ordinates `I_z(λ_j)` for `j = 1..=m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Periodogram {
    pub t_len: usize,
    pub lambdas: Vec<f64>,
    pub ordinates: Vec<f64>,
}

impl Periodogram {
    /// Number of ordinates `m`.
    pub fn m(&self) -> usize {
        self.ordinates.len()
    }
}

fn check_bandwidth(t_len: usize, m: usize) -> Result<()> {
    if m == 0 || m > t_len / 2 {
        return Err(Error::Domain(format!(
            "bandwidth m = {m} must satisfy 1 <= m <= floor(T/2) = {}",
            t_len / 2
        )));
    }
    Ok(())
}

/// `(2π·1/T, …, 2π·m/T)`.
pub fn fourier_frequencies(t_len: usize, m: usize) -> Result<Vec<f64>> {
    check_bandwidth(t_len, m)?;
    Ok((1..=m).map(|j| 2.0 * PI * j as f64 / t_len as f64).collect())
}

/// Direct evaluation of `w_z(λ_j)`, `0 <= j < T`.
pub fn fourier_transform(z: &TimeSeries, j: usize) -> Result<Complex64> {
    let t_len = z.len();
    if j >= t_len {
        return Err(Error::Domain(format!("frequency index {j} outside 0..{t_len}")));
    }
    let base = 2.0 * PI / t_len as f64;
    let sum: Complex64 = z
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            // reduce the phase index mod T before scaling to keep the angle small
            let k = ((i + 1) * j) % t_len;
            Complex64::from_polar(v, base * k as f64)
        })
        .sum();
    Ok(sum / (2.0 * PI * t_len as f64).sqrt())
}

/// Unnormalised `Σ_{s=0}^{T-1} z_{s+1} e^{2πi js/T}` for all `j`.
fn raw_transform(z: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = z.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(buf.len(), FftDirection::Inverse).process(&mut buf);
    buf
}

/// Periodogram at the first `m` Fourier frequencies, computed by FFT.
pub fn periodogram(z: &TimeSeries, m: usize) -> Result<Periodogram> {
    let t_len = z.len();
    let lambdas = fourier_frequencies(t_len, m)?;
    let raw = raw_transform(z.values());
    let scale = 1.0 / (2.0 * PI * t_len as f64);
    let ordinates = raw[1..=m].iter().map(|w| w.norm_sqr() * scale).collect();
    Ok(Periodogram {
        t_len,
        lambdas,
        ordinates,
    })
}

/// `I_z(λ_j)` for every `j = 0..T-1`, including the zero frequency.
pub fn periodogram_full(z: &TimeSeries) -> Vec<f64> {
    let scale = 1.0 / (2.0 * PI * z.len() as f64);
    raw_transform(z.values()).iter().map(|w| w.norm_sqr() * scale).collect()
}
