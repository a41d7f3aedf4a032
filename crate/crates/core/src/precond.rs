//! Gauss-Newton rank-one preconditioner.
//!
//! The curvature surrogate is `B(p) = λI + v vᵀ` and the update direction is
//! `A(p) v` with `A(p) = B(p)⁻¹ − I`. Both are applied in `O(dim)` through the
//! Sherman-Morrison identity; no matrix is ever formed.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::vecfield::dot;

/// Regularization `λ` and step size `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GNConfig {
    pub lambda: f64,
    pub step: f64,
}

impl Default for GNConfig {
    fn default() -> Self {
        Self { lambda: 0.1, step: 1e-5 }
    }
}

impl GNConfig {
    pub fn new(lambda: f64, step: f64) -> Result<Self> {
        let cfg = Self { lambda, step };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Builds the configuration whose equilibrium step `h(1/λ − 1)` equals
    /// `sigma`. Requires `0 < λ < 1`.
    pub fn from_sigma(lambda: f64, sigma: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidParameter(format!("sigma parametrization needs 0 < lambda < 1, got {lambda}")));
        }
        Self::new(lambda, sigma / (1.0 / lambda - 1.0))
    }

    /// Rejects `λ ≤ 0` or `h ≤ 0`; logs a warning when `λ ∉ (0, 1)`.
    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidParameter(format!("step size h must satisfy h > 0, got {}", self.step)));
        }
        if let Some(msg) = self.lambda_warning() {
            warn!("{msg}");
        }
        Ok(())
    }

    /// Non-fatal advisory when `λ` lies outside `(0, 1)`.
    pub fn lambda_warning(&self) -> Option<String> {
        (self.lambda >= 1.0).then(|| {
            format!(
                "lambda = {} is outside the recommended range (0, 1); \
                 the equilibrium step h(1/lambda - 1) is not positive",
                self.lambda
            )
        })
    }

    /// Equilibrium step `σ = h(1/λ − 1)`.
    pub fn sigma(&self) -> f64 {
        self.step * (1.0 / self.lambda - 1.0)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("regularization lambda must satisfy lambda > 0, got {lambda}")));
    }
    Ok(())
}

/// `z = (λI + v vᵀ)⁻¹ v`, computed with the explicit Sherman-Morrison steps
/// `u = v/√λ`, `z = (v − u(uᵀv)/(1 + uᵀu)) / λ`.
pub fn sm_solve(v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    ensure_finite(v, "sm_solve input")?;
    let scale = 1.0 / lambda.sqrt();
    let u: Vec<f64> = v.iter().map(|vi| scale * vi).collect();
    Ok(rank_one_apply(v, &u, lambda))
}

// (v - u (uᵀv) / (1 + uᵀu)) / λ
fn rank_one_apply(v: &[f64], u: &[f64], lambda: f64) -> Vec<f64> {
    let utv = dot(u, v);
    let utu = dot(u, u);
    let coeff = utv / (1.0 + utu);
    v.iter().zip(u).map(|(vi, ui)| (vi - ui * coeff) / lambda).collect()
}

/// `Δ = A(p) v = sm_solve(v, λ) − v`, collinear with `v` with coefficient
/// `−(1 − 1/(λ + ‖v‖²))`.
pub fn gn_delta(v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let z = sm_solve(v, lambda)?;
    Ok(z.iter().zip(v).map(|(zi, vi)| -(vi - zi)).collect())
}

/// `z = (λI + h g gᵀ)⁻¹ v` via `u = √(h/λ) g`.
pub fn sm_solve_scaled(v: &[f64], g: &[f64], h: f64, lambda: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("step size h must satisfy h > 0, got {h}")));
    }
    if v.len() != g.len() {
        return Err(Error::DimensionMismatch { expected: v.len(), got: g.len(), context: "scaled rank-one direction" });
    }
    ensure_finite(v, "sm_solve_scaled field")?;
    ensure_finite(g, "sm_solve_scaled direction")?;
    let scale = (h / lambda).sqrt();
    let u: Vec<f64> = g.iter().map(|gi| scale * gi).collect();
    Ok(rank_one_apply(v, &u, lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    // dense (λI + s w wᵀ)⁻¹ v
    fn dense_oracle(v: &[f64], w: &[f64], s: f64, lambda: f64) -> Vec<f64> {
        let n = v.len();
        let w = DVector::from_column_slice(w);
        let mat = DMatrix::identity(n, n) * lambda + &w * w.transpose() * s;
        let inv = mat.try_inverse().unwrap();
        (inv * DVector::from_column_slice(v)).as_slice().to_vec()
    }

    #[test]
    fn sm_solve_worked_values() {
        assert_eq!(sm_solve(&[0.0, 0.0], 0.3).unwrap(), vec![0.0, 0.0]);

        let z = sm_solve(&[1.0, 1.0], 0.5).unwrap();
        let oracle = dense_oracle(&[1.0, 1.0], &[1.0, 1.0], 1.0, 0.5);
        for i in 0..2 {
            assert!((z[i] - 0.4).abs() < 1e-15);
            assert!((oracle[i] - 0.4).abs() < 1e-14);
        }

        let z = sm_solve(&[3.0, 4.0], 1.0).unwrap();
        let oracle = dense_oracle(&[3.0, 4.0], &[3.0, 4.0], 1.0, 1.0);
        assert!((z[0] - 3.0 / 26.0).abs() < 1e-15);
        assert!((z[1] - 4.0 / 26.0).abs() < 1e-15);
        assert!((z[0] - 0.11538).abs() < 1e-5 && (z[1] - 0.15385).abs() < 1e-5);
        assert!((oracle[0] - z[0]).abs() < 1e-14 && (oracle[1] - z[1]).abs() < 1e-14);
    }

    #[test]
    fn gn_delta_worked_values() {
        assert_eq!(gn_delta(&[0.0, 0.0, 0.0], 0.1).unwrap(), vec![0.0; 3]);
        let d = gn_delta(&[1.0, 1.0], 0.5).unwrap();
        assert!((d[0] + 0.6).abs() < 1e-15 && (d[1] + 0.6).abs() < 1e-15);
        // λ + ‖v‖² = 1 exactly
        let d = gn_delta(&[0.5, 0.0], 0.75).unwrap();
        assert_eq!(d, vec![0.0, 0.0]);
    }

    #[test]
    fn sm_solve_scaled_worked_values() {
        let z = sm_solve_scaled(&[2.0, -1.0], &[0.0, 0.0], 0.3, 0.5).unwrap();
        assert_eq!(z, vec![4.0, -2.0]);

        let z = sm_solve_scaled(&[1.0, 1.0], &[1.0, 1.0], 0.1, 0.5).unwrap();
        // dense solve of [[0.6, 0.1], [0.1, 0.6]] z = (1, 1)
        let dense = DMatrix::from_row_slice(2, 2, &[0.6, 0.1, 0.1, 0.6])
            .lu()
            .solve(&DVector::from_column_slice(&[1.0, 1.0]))
            .unwrap();
        for i in 0..2 {
            assert!((z[i] - 10.0 / 7.0).abs() < 1e-14);
            assert!((dense[i] - z[i]).abs() < 1e-14);
        }

        let z = sm_solve_scaled(&[1.0, 0.0], &[0.0, 1.0], 1.0, 1.0).unwrap();
        assert_eq!(z, vec![1.0, 0.0]);
    }

    #[test]
    fn invalid_inputs() {
        assert!(sm_solve(&[1.0], 0.0).is_err());
        assert!(sm_solve(&[1.0], -1.0).is_err());
        assert!(sm_solve(&[f64::NAN], 1.0).is_err());
        assert!(gn_delta(&[f64::INFINITY], 1.0).is_err());
        assert!(sm_solve_scaled(&[1.0], &[1.0, 2.0], 0.1, 1.0).is_err());
        assert!(sm_solve_scaled(&[1.0], &[1.0], 0.0, 1.0).is_err());
        assert!(GNConfig::new(-1.0, 0.1).is_err());
        assert!(GNConfig::new(0.5, 0.0).is_err());
    }

    #[test]
    fn lambda_outside_unit_interval_warns_but_proceeds() {
        let cfg = GNConfig::new(2.0, 0.1).unwrap();
        assert!(cfg.lambda_warning().is_some());
        assert!(GNConfig::new(0.1, 1e-5).unwrap().lambda_warning().is_none());
    }

    #[test]
    fn sigma_parametrization() {
        let cfg = GNConfig::from_sigma(0.5, 0.1).unwrap();
        assert!((cfg.step - 0.1).abs() < 1e-15);
        assert!((cfg.sigma() - 0.1).abs() < 1e-15);
        assert!(GNConfig::from_sigma(1.5, 0.1).is_err());
    }

    proptest::proptest! {
        #[test]
        fn matches_dense_inverse(
            v in proptest::collection::vec(-3.0f64..3.0, 1..24),
            lambda in proptest::sample::select(vec![0.1, 0.5, 2.0]),
        ) {
            let z = sm_solve(&v, lambda).unwrap();
            let oracle = dense_oracle(&v, &v, 1.0, lambda);
            let scale = oracle.iter().map(|x| x.abs()).fold(1e-300, f64::max);
            for (a, b) in z.iter().zip(&oracle) {
                proptest::prop_assert!((a - b).abs() / scale <= 1e-10);
            }
        }
    }
}
