use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Ordered, finite observations `y_1..y_T` with `T >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeSeries(Vec<f64>);

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Input(format!(
                "a time series needs at least 2 observations, got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite observation {} at t = {}",
                values[pos],
                pos + 1
            )));
        }
        Ok(TimeSeries(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Number of observations `T`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn mean_square(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>() / self.0.len() as f64
    }

    /// Elementwise `a * y_t + b`.
    pub fn affine(&self, a: f64, b: f64) -> Result<Self> {
        TimeSeries::new(self.0.iter().map(|v| a * v + b).collect())
    }
}

impl TryFrom<Vec<f64>> for TimeSeries {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        TimeSeries::new(values)
    }
}

impl From<TimeSeries> for Vec<f64> {
    fn from(series: TimeSeries) -> Self {
        series.0
    }
}

impl AsRef<[f64]> for TimeSeries {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}
