//! Semi-parametric tests for fractional integration in the presence of
//! smooth deterministic trends.
//!
//! The observable series is modelled as a Chebyshev time-polynomial trend
//! plus a fractionally integrated error `u_t = (1 - L)^{-δ} η_t`. Residuals
//! from an OLS trend fit feed the local Whittle score (t) and LM statistics,
//! computed from the lowest `m` periodogram ordinates.
//!
//! Module map:
//!
//! - [`chebyshev`]: basis construction, OLS trend fit, residuals
//! - [`spectral`]: Fourier frequencies, DFT, periodogram
//! - [`fracsim`]: fractional filters and Type I / Type II simulators
//! - [`fractest`]: t / LM statistics, reference distributions, bandwidths
//! - [`selection`]: information-criterion choice of the trend order
//! - [`montecarlo`]: size, power and order-selection experiments
//! - [`io`]: CSV ingestion, run manifests
//! - [`cli`]: command implementations behind the `fractrend` binary

pub mod chebyshev;
pub mod cli;
mod error;
pub mod fracsim;
pub mod fractest;
pub mod io;
pub mod montecarlo;
pub mod selection;
mod series;
pub mod spectral;

pub use error::{Error, Result};
pub use series::TimeSeries;

pub use chebyshev::{build_basis, chebyshev_value, ols_fit, ChebyshevBasis, ChebyshevFit};
pub use fracsim::{FracParams, SimMethod};
pub use fractest::{test_with_detrend, Alternative, Bandwidth, TestConfig, TestResult, TrendOrder};
pub use selection::{select_order, IcTrace, Penalty};
