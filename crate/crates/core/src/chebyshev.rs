//! Chebyshev time polynomials and OLS trend removal.
//!
//! The basis functions are `P_t(0) = 1` and `P_t(n) = √2·cos(nπ(t − 0.5)/T)`
//! for `n >= 1`, `t = 1..T`. They are orthonormal in sample:
//! `(1/T) Σ_t P_t(i) P_t(j) = 1{i = j}` for `0 <= i, j < T`, so the OLS
//! coefficients reduce to sample inner products with the basis.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, TimeSeries};

/// `P_t(n)` for `1 <= t <= T`.
pub fn chebyshev_value(n: usize, t: usize, t_len: usize) -> Result<f64> {
    if t == 0 || t > t_len {
        return Err(Error::Domain(format!("time index t = {t} outside 1..={t_len}")));
    }
    Ok(basis_value(n, t, t_len))
}

#[inline]
fn basis_value(n: usize, t: usize, t_len: usize) -> f64 {
    if n == 0 {
        1.0
    } else {
        SQRT_2 * (n as f64 * PI * (t as f64 - 0.5) / t_len as f64).cos()
    }
}

/// The `T × (k+1)` design matrix `x(k)`, stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevBasis {
    t_len: usize,
    columns: Vec<Vec<f64>>,
}

/// Builds the basis `P_t(0..=k)` for a series of length `T`.
pub fn build_basis(t_len: usize, k: usize) -> Result<ChebyshevBasis> {
    if t_len == 0 || k + 1 > t_len {
        return Err(Error::Rank {
            columns: k + 1,
            rows: t_len,
        });
    }
    let columns = (0..=k)
        .map(|n| (1..=t_len).map(|t| basis_value(n, t, t_len)).collect())
        .collect();
    Ok(ChebyshevBasis { t_len, columns })
}

impl ChebyshevBasis {
    pub fn t_len(&self) -> usize {
        self.t_len
    }

    /// Trend order `k` (the basis has `k + 1` columns).
    pub fn order(&self) -> usize {
        self.columns.len() - 1
    }

    pub fn column(&self, n: usize) -> &[f64] {
        &self.columns[n]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// `(1/T) x(k)' x(k)`, which is the identity up to rounding.
    pub fn scaled_gram(&self) -> Vec<Vec<f64>> {
        let t = self.t_len as f64;
        self.columns
            .iter()
            .map(|a| self.columns.iter().map(|b| dot(a, b) / t).collect())
            .collect()
    }

    /// Evaluates `Σ_n coeffs[n] P_t(n)` for every `t`. Extra coefficients beyond
    /// the basis order are an error.
    pub fn combine(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() > self.columns.len() {
            return Err(Error::Rank {
                columns: coeffs.len(),
                rows: self.columns.len(),
            });
        }
        let mut out = vec![0.0; self.t_len];
        for (beta, col) in coeffs.iter().zip(&self.columns) {
            for (o, p) in out.iter_mut().zip(col) {
                *o += beta * p;
            }
        }
        Ok(out)
    }

    /// OLS fit of `y` on the first `k + 1` columns of this basis.
    pub fn fit(&self, y: &TimeSeries, k: usize) -> Result<ChebyshevFit> {
        if y.len() != self.t_len {
            return Err(Error::Input(format!(
                "series length {} does not match basis length {}",
                y.len(),
                self.t_len
            )));
        }
        if k > self.order() {
            return Err(Error::Rank {
                columns: k + 1,
                rows: self.columns.len(),
            });
        }
        let t = self.t_len as f64;
        let beta_hat: Vec<f64> = self.columns[..=k].iter().map(|col| dot(col, y.values()) / t).collect();
        let mut residuals = y.values().to_vec();
        for (beta, col) in beta_hat.iter().zip(&self.columns) {
            for (r, p) in residuals.iter_mut().zip(col) {
                *r -= beta * p;
            }
        }
        let sigma2_hat = residuals.iter().map(|r| r * r).sum::<f64>() / t;
        Ok(ChebyshevFit {
            k,
            beta_hat,
            residuals: TimeSeries::new(residuals)?,
            sigma2_hat,
        })
    }
}

/// Result of regressing a series on `P_t(0..=k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevFit {
    pub k: usize,
    pub beta_hat: Vec<f64>,
    /// `û_t(k) = y_t − x_t(k)'β̂(k)`
    pub residuals: TimeSeries,
    /// `(1/T) Σ û_t(k)²`
    pub sigma2_hat: f64,
}

/// Fits a Chebyshev trend of order `k` by OLS.
pub fn ols_fit(y: &TimeSeries, k: usize) -> Result<ChebyshevFit> {
    build_basis(y.len(), k)?.fit(y, k)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    /// Dense `(X'X)^{-1} X'y` via LU, independent of the orthonormal shortcut.
    fn normal_equation_oracle(y: &[f64], k: usize) -> Vec<f64> {
        let t_len = y.len();
        let x = DMatrix::from_fn(t_len, k + 1, |r, c| {
            let t = (r + 1) as f64;
            if c == 0 {
                1.0
            } else {
                2f64.sqrt() * (c as f64 * PI * (t - 0.5) / t_len as f64).cos()
            }
        });
        let yv = DVector::from_column_slice(y);
        let xtx = x.transpose() * &x;
        let xty = x.transpose() * yv;
        xtx.lu().solve(&xty).unwrap().iter().copied().collect()
    }

    #[test]
    fn value_examples() {
        assert_eq!(chebyshev_value(0, 7, 100).unwrap(), 1.0);
        assert_abs_diff_eq!(
            chebyshev_value(1, 1, 4).unwrap(),
            1.306_562_964_876_376_5,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            chebyshev_value(1, 4, 4).unwrap(),
            -1.306_562_964_876_376_5,
            epsilon = 1e-12
        );
        assert!(matches!(chebyshev_value(1, 0, 4), Err(Error::Domain(_))));
        assert!(matches!(chebyshev_value(1, 5, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn basis_shapes_and_rank() {
        let b = build_basis(4, 0).unwrap();
        assert_eq!(b.columns().len(), 1);
        assert!(b.column(0).iter().all(|&v| v == 1.0));
        assert!(matches!(build_basis(4, 4), Err(Error::Rank { columns: 5, rows: 4 })));
        assert!(build_basis(4, 3).is_ok());
    }

    #[test]
    fn orthonormal_gram() {
        for &(t_len, k) in &[(64, 3), (5, 4), (260, 10), (1000, 40)] {
            let g = build_basis(t_len, k).unwrap().scaled_gram();
            for (i, row) in g.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((v - target).abs() < 1e-10, "T={t_len} ({i},{j}) = {v}");
                }
            }
        }
    }

    #[test]
    fn constant_series() {
        let y = TimeSeries::new(vec![3.5; 20]).unwrap();
        let fit = ols_fit(&y, 0).unwrap();
        assert_abs_diff_eq!(fit.beta_hat[0], 3.5, epsilon = 1e-14);
        assert!(fit.residuals.values().iter().all(|r| r.abs() < 1e-14));
    }

    #[test]
    fn reproduces_basis_column() {
        let t_len = 32;
        let y: Vec<f64> = (1..=t_len).map(|t| chebyshev_value(1, t, t_len).unwrap()).collect();
        let fit = ols_fit(&TimeSeries::new(y).unwrap(), 2).unwrap();
        assert_abs_diff_eq!(fit.beta_hat[0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.beta_hat[1], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.beta_hat[2], 0.0, epsilon = 1e-10);
        assert!(fit.residuals.values().iter().all(|r| r.abs() < 1e-10));
    }

    #[test]
    fn matches_dense_normal_equations() {
        let mut rng = ChaCha20Rng::seed_from_u64(16);
        for trial in 0..20 {
            let t_len = 16 + trial;
            let y: Vec<f64> = (0..t_len).map(|_| rng.gen_range(-5.0..5.0)).collect();
            for k in [0, 1, 3, 7] {
                let fit = ols_fit(&TimeSeries::new(y.clone()).unwrap(), k).unwrap();
                let oracle = normal_equation_oracle(&y, k);
                for (a, b) in fit.beta_hat.iter().zip(&oracle) {
                    assert!((a - b).abs() < 1e-10, "k={k}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn residuals_orthogonal_and_centred() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let y: Vec<f64> = (0..300).map(|i| (i as f64 * 0.01).powi(2) + rng.gen::<f64>()).collect();
        let ts = TimeSeries::new(y).unwrap();
        let basis = build_basis(300, 6).unwrap();
        let fit = basis.fit(&ts, 6).unwrap();
        let bound = 1e-8 * 300.0 * ts.max_abs();
        for col in basis.columns() {
            assert!(dot(col, fit.residuals.values()).abs() <= bound);
        }
        let mean = fit.residuals.values().iter().sum::<f64>() / 300.0;
        assert!(mean.abs() < 1e-10);
    }

    #[test]
    fn basis_length_mismatch_is_input_error() {
        let basis = build_basis(10, 2).unwrap();
        let y = TimeSeries::new(vec![1.0; 9]).unwrap();
        assert!(matches!(basis.fit(&y, 1), Err(Error::Input(_))));
        let y = TimeSeries::new(vec![1.0; 10]).unwrap();
        assert!(matches!(basis.fit(&y, 3), Err(Error::Rank { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn projection_is_idempotent(
                y in proptest::collection::vec(-100.0f64..100.0, 12..80),
                k in 0usize..6,
            ) {
                let ts = TimeSeries::new(y.clone()).unwrap();
                let fit = ols_fit(&ts, k).unwrap();
                let fitted: Vec<f64> = y.iter().zip(fit.residuals.values()).map(|(a, r)| a - r).collect();
                let refit = ols_fit(&TimeSeries::new(fitted).unwrap(), k).unwrap();
                for (a, b) in fit.beta_hat.iter().zip(&refit.beta_hat) {
                    prop_assert!((a - b).abs() < 1e-10);
                }
            }

            #[test]
            fn sigma2_non_increasing_in_k(
                y in proptest::collection::vec(-10.0f64..10.0, 20..60),
            ) {
                let ts = TimeSeries::new(y).unwrap();
                let basis = build_basis(ts.len(), 10).unwrap();
                let mut prev = f64::INFINITY;
                for k in 0..=10 {
                    let s = basis.fit(&ts, k).unwrap().sigma2_hat;
                    prop_assert!(s <= prev + 1e-12 * prev.abs().min(1e6));
                    prev = s;
                }
            }
        }
    }
}
