//! Fractional filters and simulators for `u_t = (1 − L)^{−δ} η_t`.
//!
//! Two conventions are available. Type II applies the filter truncated at
//! `t = 1` to the supplied innovations. Type I draws exactly from the
//! stationary ARFIMA(0, δ, 0) Gaussian process by circulant embedding of its
//! autocovariance, falling back to a Cholesky factor when the embedding is
//! not nonnegative definite and `T` is small enough.

use nalgebra::{Cholesky, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::spectral::plan;
use crate::{Error, Result, TimeSeries};

/// Largest `T` for which a failed embedding may fall back to Cholesky.
pub const CHOLESKY_FALLBACK_MAX_T: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMethod {
    /// Stationary process with exact ARFIMA(0, δ, 0) autocovariances.
    TypeI,
    /// Filter truncated at `t = 1` (pre-sample innovations set to zero).
    TypeII,
}

impl std::str::FromStr for SimMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "type1" | "typei" | "type_i" | "i" => Ok(SimMethod::TypeI),
            "type2" | "typeii" | "type_ii" | "ii" => Ok(SimMethod::TypeII),
            other => Err(Error::Config(format!("unknown simulation method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    delta: f64,
    innovation_sd: f64,
    method: SimMethod,
}

impl FracParams {
    /// Parameters for the stationary range `|δ| < 1/2`.
    pub fn new(delta: f64, innovation_sd: f64, method: SimMethod) -> Result<Self> {
        if !delta.is_finite() || delta.abs() >= 0.5 {
            return Err(Error::Domain(format!(
                "memory parameter δ = {delta} must satisfy |δ| < 0.5"
            )));
        }
        Self::checked(delta, innovation_sd, method)
    }

    /// Type II parameters with `|δ| < 1`, for experimenting outside the
    /// stationary region.
    pub fn nonstationary_type2(delta: f64, innovation_sd: f64) -> Result<Self> {
        if !delta.is_finite() || delta.abs() >= 1.0 {
            return Err(Error::Domain(format!(
                "memory parameter δ = {delta} must satisfy |δ| < 1 for the truncated filter"
            )));
        }
        Self::checked(delta, innovation_sd, SimMethod::TypeII)
    }

    fn checked(delta: f64, innovation_sd: f64, method: SimMethod) -> Result<Self> {
        if !(innovation_sd.is_finite() && innovation_sd > 0.0) {
            return Err(Error::Domain(format!(
                "innovation standard deviation {innovation_sd} must be positive"
            )));
        }
        Ok(FracParams {
            delta,
            innovation_sd,
            method,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn innovation_sd(&self) -> f64 {
        self.innovation_sd
    }

    pub fn method(&self) -> SimMethod {
        self.method
    }
}

/// Coefficients `π_0..π_n` of `(1 − L)^{−δ}`.
pub fn frac_coeffs(delta: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    for j in 1..=n {
        let prev = out[j - 1];
        out.push(prev * (j as f64 - 1.0 + delta) / j as f64);
    }
    out
}

/// Truncated convolution `x_t = Σ_{j=0}^{t−1} π_j z_{t−j}`.
fn truncated_filter(z: &[f64], delta: f64) -> Vec<f64> {
    let pi = frac_coeffs(delta, z.len().saturating_sub(1));
    (0..z.len()).map(|t| (0..=t).map(|j| pi[j] * z[t - j]).sum()).collect()
}

/// Type II fractional noise built from the given innovations.
pub fn simulate_type2(params: &FracParams, t_len: usize, innovations: &[f64]) -> Result<TimeSeries> {
    if innovations.len() != t_len {
        return Err(Error::Input(format!(
            "expected {t_len} innovations, got {}",
            innovations.len()
        )));
    }
    TimeSeries::new(truncated_filter(innovations, params.delta))
}

/// Truncated fractional difference `(1 − L)^δ z_t`.
pub fn frac_diff(z: &TimeSeries, delta: f64) -> TimeSeries {
    TimeSeries::new(truncated_filter(z.values(), -delta))
        .expect("filtering finite data with finite weights stays finite")
}

/// Autocovariances `γ_0..γ_{max_lag}` of ARFIMA(0, δ, 0) with innovation variance `σ²`.
pub fn arfima_acvf(delta: f64, max_lag: usize, sigma2: f64) -> Result<Vec<f64>> {
    if !delta.is_finite() || delta.abs() >= 0.5 {
        return Err(Error::Domain(format!("autocovariance needs |δ| < 0.5, got {delta}")));
    }
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::Domain(format!("variance {sigma2} must be positive")));
    }
    let gamma0 = sigma2 * (libm::lgamma(1.0 - 2.0 * delta) - 2.0 * libm::lgamma(1.0 - delta)).exp();
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(gamma0);
    for h in 1..=max_lag {
        let h = h as f64;
        let prev = out[out.len() - 1];
        out.push(prev * (h - 1.0 + delta) / (h - delta));
    }
    Ok(out)
}

enum Factor {
    /// `sqrt(λ_k / M)` for the circulant of size `M = 2T`.
    Circulant(Vec<f64>),
    Cholesky(DMatrix<f64>),
}

/// Exact sampler for the stationary (Type I) process. Building it once and
/// drawing many times amortises the embedding.
pub struct StationarySampler {
    t_len: usize,
    factor: Factor,
}

impl StationarySampler {
    pub fn new(params: &FracParams, t_len: usize) -> Result<Self> {
        Self::with_fallback_limit(params, t_len, CHOLESKY_FALLBACK_MAX_T)
    }

    pub fn with_fallback_limit(params: &FracParams, t_len: usize, fallback_max_t: usize) -> Result<Self> {
        if t_len < 2 {
            return Err(Error::Input(format!("series length {t_len} must be at least 2")));
        }
        let sigma2 = params.innovation_sd * params.innovation_sd;
        let acvf = arfima_acvf(params.delta, t_len, sigma2)?;
        match circulant_factor(&acvf, t_len) {
            Some(scales) => Ok(StationarySampler {
                t_len,
                factor: Factor::Circulant(scales),
            }),
            None if t_len <= fallback_max_t => Ok(StationarySampler {
                t_len,
                factor: Factor::Cholesky(cholesky_factor(&acvf, t_len)?),
            }),
            None => Err(Error::Simulation(format!(
                "circulant embedding is not nonnegative definite for δ = {} at T = {t_len}",
                params.delta
            ))),
        }
    }

    /// Forces the Cholesky factorisation regardless of the embedding.
    pub fn cholesky(params: &FracParams, t_len: usize) -> Result<Self> {
        if t_len < 2 {
            return Err(Error::Input(format!("series length {t_len} must be at least 2")));
        }
        let sigma2 = params.innovation_sd * params.innovation_sd;
        let acvf = arfima_acvf(params.delta, t_len, sigma2)?;
        Ok(StationarySampler {
            t_len,
            factor: Factor::Cholesky(cholesky_factor(&acvf, t_len)?),
        })
    }

    pub fn uses_circulant(&self) -> bool {
        matches!(self.factor, Factor::Circulant(_))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TimeSeries {
        let values = match &self.factor {
            Factor::Circulant(scales) => {
                let mut buf: Vec<Complex64> = scales
                    .iter()
                    .map(|s| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex64::new(s * re, s * im)
                    })
                    .collect();
                plan(buf.len(), FftDirection::Forward).process(&mut buf);
                buf[..self.t_len].iter().map(|c| c.re).collect()
            }
            Factor::Cholesky(l) => {
                let z = nalgebra::DVector::from_fn(self.t_len, |_, _| rng.sample(StandardNormal));
                (l * z).iter().copied().collect()
            }
        };
        TimeSeries::new(values).expect("Gaussian draws are finite")
    }
}

fn cholesky_factor(acvf: &[f64], t_len: usize) -> Result<DMatrix<f64>> {
    let cov = DMatrix::from_fn(t_len, t_len, |r, c| acvf[r.abs_diff(c)]);
    Cholesky::new(cov)
        .map(|c| c.l())
        .ok_or_else(|| Error::Simulation("autocovariance matrix is not positive definite".into()))
}

/// Eigenvalue scales for the embedding `(γ_0..γ_T, γ_{T−1}..γ_1)`, or `None`
/// when an eigenvalue is negative beyond rounding.
fn circulant_factor(acvf: &[f64], t_len: usize) -> Option<Vec<f64>> {
    let size = 2 * t_len;
    let mut row: Vec<Complex64> = Vec::with_capacity(size);
    row.extend(acvf[..=t_len].iter().map(|&g| Complex64::new(g, 0.0)));
    row.extend(acvf[1..t_len].iter().rev().map(|&g| Complex64::new(g, 0.0)));
    plan(size, FftDirection::Forward).process(&mut row);
    let max = row.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    let tol = 1e-12 * max;
    if row.iter().any(|c| c.re < -tol) {
        return None;
    }
    // eigenvalues in [-tol, 0) are rounding noise around an exact zero
    Some(row.iter().map(|c| (c.re.max(0.0) / size as f64).sqrt()).collect())
}

/// One exact draw of the stationary process.
pub fn simulate_type1<R: Rng + ?Sized>(params: &FracParams, t_len: usize, rng: &mut R) -> Result<TimeSeries> {
    Ok(StationarySampler::new(params, t_len)?.sample(rng))
}

/// Draws `T` innovations `N(0, sd²)`.
pub fn gaussian_innovations<R: Rng + ?Sized>(t_len: usize, sd: f64, rng: &mut R) -> Vec<f64> {
    (0..t_len).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Simulates `u_1..u_T` with the method recorded in `params`.
pub fn simulate<R: Rng + ?Sized>(params: &FracParams, t_len: usize, rng: &mut R) -> Result<TimeSeries> {
    match params.method {
        SimMethod::TypeI => simulate_type1(params, t_len, rng),
        SimMethod::TypeII => {
            let eta = gaussian_innovations(t_len, params.innovation_sd, rng);
            simulate_type2(params, t_len, &eta)
        }
    }
}

/// Reusable simulator for repeated draws of the same process.
pub enum Simulator {
    TypeI(StationarySampler),
    TypeII(FracParams, usize),
}

impl Simulator {
    pub fn new(params: &FracParams, t_len: usize) -> Result<Self> {
        match params.method {
            SimMethod::TypeI => Ok(Simulator::TypeI(StationarySampler::new(params, t_len)?)),
            SimMethod::TypeII => {
                if t_len < 2 {
                    return Err(Error::Input(format!("series length {t_len} must be at least 2")));
                }
                Ok(Simulator::TypeII(*params, t_len))
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TimeSeries {
        match self {
            Simulator::TypeI(s) => s.sample(rng),
            Simulator::TypeII(params, t_len) => {
                let eta = gaussian_innovations(*t_len, params.innovation_sd, rng);
                simulate_type2(params, *t_len, &eta).expect("lengths agree by construction")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn coefficient_examples() {
        assert_eq!(frac_coeffs(0.0, 4), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        let c = frac_coeffs(0.4, 2);
        assert_abs_diff_eq!(c[1], 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(c[2], 0.28, epsilon = 1e-15);
        assert_eq!(frac_coeffs(-0.3, 1), vec![1.0, -0.3]);
    }

    #[test]
    fn coefficient_convolution_is_identity() {
        for &d in &[0.45, 0.3, -0.2, -0.49, 0.8] {
            let n = 512;
            let a = frac_coeffs(d, n);
            let b = frac_coeffs(-d, n);
            for k in 0..=n {
                let s: f64 = (0..=k).map(|j| a[j] * b[k - j]).sum();
                let target = if k == 0 { 1.0 } else { 0.0 };
                assert!((s - target).abs() < 1e-10, "δ={d} k={k} s={s}");
            }
        }
    }

    #[test]
    fn type2_examples() {
        let p = FracParams::new(0.4, 1.0, SimMethod::TypeII).unwrap();
        let u = simulate_type2(&p, 3, &[1.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(u.values()[1], 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(u.values()[2], 0.28, epsilon = 1e-15);

        let eta = [0.3, -1.2, 2.0, 0.1];
        let p0 = FracParams::new(0.0, 1.0, SimMethod::TypeII).unwrap();
        assert_eq!(simulate_type2(&p0, 4, &eta).unwrap().values(), &eta);
        assert!(simulate_type2(&p, 4, &[0.0; 4])
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        assert!(matches!(simulate_type2(&p, 5, &eta), Err(Error::Input(_))));
    }

    #[test]
    fn frac_diff_inverts_type2() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for &d in &[0.4, -0.3, 0.1] {
            let p = FracParams::new(d, 1.0, SimMethod::TypeII).unwrap();
            let eta = gaussian_innovations(400, 1.0, &mut rng);
            let u = simulate_type2(&p, 400, &eta).unwrap();
            let back = frac_diff(&u, d);
            for (a, b) in back.values().iter().zip(&eta) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        let ones = TimeSeries::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(frac_diff(&ones, 1.0).values(), &[1.0, 0.0, 0.0]);
        let z = TimeSeries::new(vec![0.5, -2.0, 3.0]).unwrap();
        assert_eq!(frac_diff(&z, 0.0), z);
    }

    #[test]
    fn acvf_examples() {
        assert_eq!(arfima_acvf(0.0, 3, 2.0).unwrap(), vec![2.0, 0.0, 0.0, 0.0]);
        let g = arfima_acvf(0.4, 1, 1.0).unwrap();
        assert_abs_diff_eq!(g[1] / g[0], 2.0 / 3.0, epsilon = 1e-14);
        // Γ(0.2)/Γ(0.6)²
        assert_abs_diff_eq!(g[0], 2.070_098_325_296_286, epsilon = 1e-12);
        let g = arfima_acvf(-0.3, 1, 1.0).unwrap();
        assert!(g[1] < 0.0);
        assert_abs_diff_eq!(g[0], 1.109_331_801_376_244, epsilon = 1e-12);
        assert!(arfima_acvf(0.5, 1, 1.0).is_err());
        // large lags stay finite and decay hyperbolically
        let g = arfima_acvf(0.45, 100_000, 1.0).unwrap();
        assert!(g.iter().all(|v| v.is_finite() && *v > 0.0));
    }

    #[test]
    fn params_validation() {
        assert!(FracParams::new(0.5, 1.0, SimMethod::TypeI).is_err());
        assert!(FracParams::new(0.2, 0.0, SimMethod::TypeI).is_err());
        assert!(FracParams::new(0.6, 1.0, SimMethod::TypeII).is_err());
        let p = FracParams::nonstationary_type2(0.6, 1.0).unwrap();
        assert_eq!(p.method(), SimMethod::TypeII);
        assert!(FracParams::nonstationary_type2(1.0, 1.0).is_err());
        assert!("type3".parse::<SimMethod>().is_err());
        assert_eq!("type1".parse::<SimMethod>().unwrap(), SimMethod::TypeI);
    }

    #[test]
    fn type1_is_deterministic_per_seed() {
        let p = FracParams::new(0.3, 1.0, SimMethod::TypeI).unwrap();
        let a = simulate_type1(&p, 300, &mut ChaCha20Rng::seed_from_u64(9)).unwrap();
        let b = simulate_type1(&p, 300, &mut ChaCha20Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        let c = simulate_type1(&p, 300, &mut ChaCha20Rng::seed_from_u64(10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn embedding_is_nonnegative_across_the_stationary_range() {
        for &d in &[-0.49, -0.3, -0.1, 0.0, 0.1, 0.3, 0.49] {
            for &t_len in &[2, 16, 255, 512, 1024] {
                let p = FracParams::new(d, 1.0, SimMethod::TypeI).unwrap();
                let s = StationarySampler::new(&p, t_len).unwrap();
                assert!(s.uses_circulant(), "δ={d} T={t_len}");
            }
        }
    }

    #[test]
    fn type1_white_noise_moments() {
        let p = FracParams::new(0.0, 2.0, SimMethod::TypeI).unwrap();
        let u = simulate_type1(&p, 20_000, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        let n = u.len() as f64;
        let mean = u.values().iter().sum::<f64>() / n;
        let var = u.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let lag1 = u
            .values()
            .windows(2)
            .map(|w| (w[0] - mean) * (w[1] - mean))
            .sum::<f64>()
            / n
            / var;
        // 4σ bands
        assert!(mean.abs() < 4.0 * 2.0 / n.sqrt());
        assert!((var - 4.0).abs() < 4.0 * 4.0 * (2.0 / n).sqrt());
        assert!(lag1.abs() < 4.0 / n.sqrt());
    }

    #[test]
    fn cholesky_and_circulant_agree_in_distribution() {
        let p = FracParams::new(0.35, 1.0, SimMethod::TypeI).unwrap();
        let t_len = 64;
        let acvf = arfima_acvf(0.35, 2, 1.0).unwrap();
        let circ = StationarySampler::new(&p, t_len).unwrap();
        let chol = StationarySampler::cholesky(&p, t_len).unwrap();
        assert!(!chol.uses_circulant());
        let reps = 4000;
        for sampler in [&circ, &chol] {
            let mut rng = ChaCha20Rng::seed_from_u64(77);
            let (mut c0, mut c1) = (0.0, 0.0);
            for _ in 0..reps {
                let u = sampler.sample(&mut rng);
                let v = u.values();
                c0 += v[10] * v[10];
                c1 += v[10] * v[11];
            }
            c0 /= reps as f64;
            c1 /= reps as f64;
            // se of a product moment is about γ0·sqrt(2/reps)
            let se = acvf[0] * (2.0 / reps as f64).sqrt();
            assert!((c0 - acvf[0]).abs() < 4.0 * se, "c0={c0}");
            assert!((c1 - acvf[1]).abs() < 4.0 * se, "c1={c1}");
        }
    }
}
