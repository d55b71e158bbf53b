//! Local Whittle score tests for the memory parameter.
//!
//! For a series `u` and hypothesised order `δ₀`,
//!
//! ```text
//! t = −( m^{−1/2} Σ v_j λ_j^{2δ₀} I_u(λ_j) ) / ( m^{−1} Σ λ_j^{2δ₀} I_u(λ_j) ),   LM = t²
//! ```
//!
//! with `v_j = ln j − mean(ln 1..ln m)`. Under the null `t` is asymptotically
//! `N(0, 1)`; under `δ = δ₀ + c/√m` it is `N(2c, 1)`. Large positive `t`
//! points towards `δ > δ₀`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::selection::{select_order, IcTrace, Penalty};
use crate::spectral::{periodogram, Periodogram};
use crate::{build_basis, Error, Result, TimeSeries};

/// Bandwidth exponent used when none is given.
pub const DEFAULT_ALPHA: f64 = 0.65;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    TwoSided,
    /// `H₁: δ > δ₀`, rejecting for large positive `t`.
    Greater,
    /// `H₁: δ < δ₀`
    Less,
}

impl std::str::FromStr for Alternative {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-sided" | "two_sided" => Ok(Alternative::TwoSided),
            "greater" => Ok(Alternative::Greater),
            "less" => Ok(Alternative::Less),
            other => Err(Error::Config(format!("unknown alternative '{other}'"))),
        }
    }
}

impl std::fmt::Display for Alternative {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Alternative::TwoSided => "two-sided",
            Alternative::Greater => "greater",
            Alternative::Less => "less",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    /// Explicit number of ordinates `m`.
    Fixed(usize),
    /// `m = ⌊T^α⌋`
    Exponent(f64),
}

impl Bandwidth {
    pub fn resolve(&self, t_len: usize) -> Result<ResolvedBandwidth> {
        match *self {
            Bandwidth::Fixed(m) => {
                if m == 0 || m > t_len / 2 {
                    return Err(Error::Config(format!(
                        "bandwidth m = {m} must satisfy 1 <= m <= floor(T/2) = {}",
                        t_len / 2
                    )));
                }
                Ok(ResolvedBandwidth { m, clamped: false })
            }
            Bandwidth::Exponent(alpha) => default_bandwidth(t_len, alpha),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedBandwidth {
    pub m: usize,
    /// `⌊T^α⌋` exceeded `⌊T/2⌋` and was reduced to it.
    pub clamped: bool,
}

/// `m = ⌊T^α⌋`, clamped to `⌊T/2⌋`.
pub fn default_bandwidth(t_len: usize, alpha: f64) -> Result<ResolvedBandwidth> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!(
            "bandwidth exponent α = {alpha} must lie in (0, 1)"
        )));
    }
    let raw = (t_len as f64).powf(alpha);
    // guard exact powers such as 1024^0.8 = 256 against landing just below the integer
    let m = (raw * (1.0 + 1e-12)).floor() as usize;
    if m == 0 {
        return Err(Error::Config(format!("T = {t_len} with α = {alpha} gives m = 0")));
    }
    let half = t_len / 2;
    if m > half {
        if half == 0 {
            return Err(Error::Config(format!("T = {t_len} is too short for any bandwidth")));
        }
        return Ok(ResolvedBandwidth { m: half, clamped: true });
    }
    Ok(ResolvedBandwidth { m, clamped: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendOrder {
    Fixed(usize),
    /// Choose `k̂ ∈ {0..k_star}` by information criterion.
    Auto {
        k_star: usize,
        penalty: Penalty,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub delta0: f64,
    pub bandwidth: Bandwidth,
    pub trend_order: TrendOrder,
    pub alternative: Alternative,
    pub level: f64,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            delta0: 0.0,
            bandwidth: Bandwidth::Exponent(DEFAULT_ALPHA),
            trend_order: TrendOrder::Auto {
                k_star: 10,
                penalty: Penalty::Bic,
            },
            alternative: Alternative::TwoSided,
            level: 0.05,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta0.is_finite() && self.delta0.abs() < 0.5) {
            return Err(Error::Config(format!(
                "hypothesised order δ₀ = {} must satisfy |δ₀| < 0.5",
                self.delta0
            )));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("level {} must lie in (0, 1)", self.level)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub t_stat: f64,
    pub lm_stat: f64,
    pub p_value: f64,
    pub m: usize,
    pub k_used: usize,
    pub delta0: f64,
    pub alternative: Alternative,
    pub level: f64,
    pub reject_at_level: bool,
    pub t_len: usize,
    pub bandwidth_clamped: bool,
    pub beta_hat: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ic_trace: Option<IcTrace>,
}

/// Centred log weights `v_j`, `j = 1..m`.
pub fn lw_weights(m: usize) -> Vec<f64> {
    let logs: Vec<f64> = (1..=m).map(|j| (j as f64).ln()).collect();
    let mean = compensated_sum(logs.iter().copied()) / m.max(1) as f64;
    logs.into_iter().map(|l| l - mean).collect()
}

/// Neumaier summation.
fn compensated_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// The score statistic evaluated on a precomputed periodogram.
pub fn t_from_periodogram(p: &Periodogram, delta0: f64) -> Result<f64> {
    let m = p.m();
    let v = lw_weights(m);
    let mut num = 0.0;
    let mut den = 0.0;
    for ((vj, lambda), ord) in v.iter().zip(&p.lambdas).zip(&p.ordinates) {
        let w = (2.0 * delta0 * lambda.ln()).exp() * ord;
        num += vj * w;
        den += w;
    }
    if !(den.is_finite() && den > 0.0) {
        return Err(Error::Degenerate(
            "all periodogram ordinates in the band are zero".into(),
        ));
    }
    let mf = m as f64;
    Ok(-(num / mf.sqrt()) / (den / mf))
}

pub fn t_statistic(u: &TimeSeries, delta0: f64, m: usize) -> Result<f64> {
    t_from_periodogram(&periodogram(u, m)?, delta0)
}

pub fn lm_statistic(u: &TimeSeries, delta0: f64, m: usize) -> Result<f64> {
    t_statistic(u, delta0, m).map(|t| t * t)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail `1 − Φ(x)` without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile: a rational starting value polished by Newton steps.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut x = Normal::standard().inverse_cdf(p);
    for _ in 0..2 {
        // work in the smaller tail so the residual does not cancel
        let resid = if x > 0.0 {
            (1.0 - p) - normal_sf(x)
        } else {
            normal_cdf(x) - p
        };
        let step = resid / normal_pdf(x);
        x = if x > 0.0 { x + step } else { x - step };
    }
    x
}

/// χ²₁ CDF, `2Φ(√x) − 1 = erf(√(x/2))`.
pub fn chisq1_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        libm::erf((x / 2.0).sqrt())
    }
}

pub fn chisq1_sf(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        libm::erfc((x / 2.0).sqrt())
    }
}

/// p-value of `t` under the standard normal reference.
pub fn p_value(t: f64, alternative: Alternative) -> f64 {
    match alternative {
        Alternative::TwoSided => chisq1_sf(t * t),
        Alternative::Greater => normal_sf(t),
        Alternative::Less => normal_cdf(t),
    }
}

/// Limiting rejection probability under `δ = δ₀ + c/√m`.
pub fn asymptotic_local_power(c: f64, level: f64, alternative: Alternative) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("level {level} must lie in (0, 1)")));
    }
    let shift = 2.0 * c;
    Ok(match alternative {
        Alternative::TwoSided => {
            let z = normal_quantile(1.0 - level / 2.0);
            normal_cdf(-z - shift) + normal_sf(z - shift)
        }
        Alternative::Greater => normal_sf(normal_quantile(1.0 - level) - shift),
        Alternative::Less => normal_cdf(-normal_quantile(1.0 - level) - shift),
    })
}

/// Fits the Chebyshev trend (fixed or selected order) and tests the residuals.
pub fn test_with_detrend(y: &TimeSeries, config: &TestConfig) -> Result<TestResult> {
    config.validate()?;
    let t_len = y.len();
    let bw = config.bandwidth.resolve(t_len)?;
    let (k, ic_trace) = match config.trend_order {
        TrendOrder::Fixed(k) => {
            if k + 1 > t_len {
                return Err(Error::Config(format!(
                    "trend order k = {k} needs more than T = {t_len} observations"
                )));
            }
            (k, None)
        }
        TrendOrder::Auto { k_star, penalty } => {
            if k_star + 1 > t_len {
                return Err(Error::Config(format!(
                    "maximum trend order k* = {k_star} needs more than T = {t_len} observations"
                )));
            }
            let trace = select_order(y, k_star, penalty)?;
            (trace.k_hat, Some(trace))
        }
    };
    let fit = build_basis(t_len, k)?.fit(y, k)?;
    let floor = 1e-13 * y.max_abs();
    if fit.sigma2_hat <= floor * floor {
        return Err(Error::Degenerate(format!(
            "trend of order {k} fits the series exactly; residuals carry no information"
        )));
    }
    let t_stat = t_statistic(&fit.residuals, config.delta0, bw.m)?;
    let lm_stat = t_stat * t_stat;
    let p = p_value(t_stat, config.alternative);
    Ok(TestResult {
        t_stat,
        lm_stat,
        p_value: p,
        m: bw.m,
        k_used: k,
        delta0: config.delta0,
        alternative: config.alternative,
        level: config.level,
        reject_at_level: p < config.level,
        t_len,
        bandwidth_clamped: bw.clamped,
        beta_hat: fit.beta_hat,
        ic_trace,
    })
}
