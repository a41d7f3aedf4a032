//! Analytic zero-sum test games with closed-form derivatives.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecfield::{GameOracle, HessianBlocks, ParamPoint};

/// `f(x, y) = ½ xᵀPx + xᵀBy + ½ yᵀQy` with symmetric `P` (`m×m`) and `Q`
/// (`n×n`). The origin is always stationary.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    p: DMatrix<f64>,
    b: DMatrix<f64>,
    q: DMatrix<f64>,
}

impl QuadraticForm {
    pub fn new(p: DMatrix<f64>, b: DMatrix<f64>, q: DMatrix<f64>) -> Result<Self> {
        let m = b.nrows();
        let n = b.ncols();
        if p.shape() != (m, m) {
            return Err(Error::InvalidParameter(format!(
                "x-curvature block has shape {:?}, expected ({m}, {m})",
                p.shape()
            )));
        }
        if q.shape() != (n, n) {
            return Err(Error::InvalidParameter(format!(
                "y-curvature block has shape {:?}, expected ({n}, {n})",
                q.shape()
            )));
        }
        for (name, mat) in [("P", &p), ("B", &b), ("Q", &q)] {
            if mat.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} has non-finite entries")));
            }
        }
        let p = (&p + p.transpose()) * 0.5;
        let q = (&q + q.transpose()) * 0.5;
        Ok(Self { p, b, q })
    }

    pub fn interaction(&self) -> &DMatrix<f64> {
        &self.b
    }
}

impl GameOracle for QuadraticForm {
    fn dims(&self) -> (usize, usize) {
        (self.b.nrows(), self.b.ncols())
    }

    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        let y = DVector::from_column_slice(y);
        0.5 * x.dot(&(&self.p * &x)) + x.dot(&(&self.b * &y)) + 0.5 * y.dot(&(&self.q * &y))
    }

    fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(x);
        let y = DVector::from_column_slice(y);
        (&self.p * x + &self.b * y).as_slice().to_vec()
    }

    fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(x);
        let y = DVector::from_column_slice(y);
        (self.b.tr_mul(&x) + &self.q * y).as_slice().to_vec()
    }

    fn hessian(&self, _x: &[f64], _y: &[f64]) -> Option<HessianBlocks> {
        Some(HessianBlocks { xx: self.p.clone(), xy: self.b.clone(), yy: self.q.clone() })
    }

    fn nash_points(&self) -> Vec<ParamPoint> {
        let (m, n) = self.dims();
        vec![ParamPoint::zeros(m, n)]
    }
}

/// `f(x, y) = (a/2)‖x‖² + xᵀBy − (c/2)‖y‖²` with `a, c ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticGameSpec {
    pub a: f64,
    pub c: f64,
    /// Interaction matrix as rows; `m = b.len()`, `n = b[0].len()`.
    pub b: Vec<Vec<f64>>,
}

impl QuadraticGameSpec {
    /// Scalar game with `B = [[beta]]`.
    pub fn scalar(a: f64, c: f64, beta: f64) -> Self {
        Self { a, c, b: vec![vec![beta]] }
    }
}

pub(crate) fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("interaction matrix must be at least 1x1".into()));
    }
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidParameter("interaction matrix rows have unequal lengths".into()));
    }
    Ok(DMatrix::from_fn(m, n, |i, j| rows[i][j]))
}

pub fn make_quadratic(spec: &QuadraticGameSpec) -> Result<QuadraticForm> {
    if !(spec.a >= 0.0) || !spec.a.is_finite() {
        return Err(Error::InvalidParameter(format!("x-curvature a must satisfy a >= 0, got {}", spec.a)));
    }
    if !(spec.c >= 0.0) || !spec.c.is_finite() {
        return Err(Error::InvalidParameter(format!("y-curvature c must satisfy c >= 0, got {}", spec.c)));
    }
    let b = rows_to_matrix(&spec.b)?;
    let (m, n) = b.shape();
    QuadraticForm::new(DMatrix::identity(m, m) * spec.a, b, DMatrix::identity(n, n) * -spec.c)
}

/// `f(x, y) = xᵀBy`.
pub fn make_bilinear(b: &[Vec<f64>]) -> Result<QuadraticForm> {
    make_quadratic(&QuadraticGameSpec { a: 0.0, c: 0.0, b: b.to_vec() })
}

/// Discriminator loss shape of the Dirac-GAN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiracLoss {
    /// `ℓ(t) = −log(1 + e^(−t))`.
    Logistic,
    /// `ℓ(t) = t`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiracGanSpec {
    pub loss: DiracLoss,
}

/// `f(θ, ψ) = ℓ(θψ) + ℓ(0)`, one parameter per player.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiracGan {
    loss: DiracLoss,
}

pub fn make_dirac_gan(spec: &DiracGanSpec) -> DiracGan {
    DiracGan { loss: spec.loss }
}

// log(1 + e^z) without overflow
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl DiracGan {
    pub fn loss(&self, t: f64) -> f64 {
        match self.loss {
            DiracLoss::Logistic => -softplus(-t),
            DiracLoss::Linear => t,
        }
    }

    fn dloss(&self, t: f64) -> f64 {
        match self.loss {
            DiracLoss::Logistic => sigmoid(-t),
            DiracLoss::Linear => 1.0,
        }
    }

    fn d2loss(&self, t: f64) -> f64 {
        match self.loss {
            DiracLoss::Logistic => -sigmoid(t) * sigmoid(-t),
            DiracLoss::Linear => 0.0,
        }
    }
}

impl GameOracle for DiracGan {
    fn dims(&self) -> (usize, usize) {
        (1, 1)
    }

    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.loss(x[0] * y[0]) + self.loss(0.0)
    }

    fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        vec![self.dloss(x[0] * y[0]) * y[0]]
    }

    fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        vec![self.dloss(x[0] * y[0]) * x[0]]
    }

    fn hessian(&self, x: &[f64], y: &[f64]) -> Option<HessianBlocks> {
        let (th, ps) = (x[0], y[0]);
        let t = th * ps;
        let d1 = self.dloss(t);
        let d2 = self.d2loss(t);
        Some(HessianBlocks {
            xx: DMatrix::from_element(1, 1, d2 * ps * ps),
            xy: DMatrix::from_element(1, 1, d2 * t + d1),
            yy: DMatrix::from_element(1, 1, d2 * th * th),
        })
    }

    fn nash_points(&self) -> Vec<ParamPoint> {
        vec![ParamPoint::zeros(1, 1)]
    }
}

/// Serializable description of any analytic game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GameSpec {
    Quadratic {
        a: f64,
        c: f64,
        b: Vec<Vec<f64>>,
    },
    Bilinear {
        b: Vec<Vec<f64>>,
    },
    DiracGan {
        loss: DiracLoss,
    },
    /// General quadratic form with arbitrary symmetric curvature blocks.
    QuadraticForm {
        p: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        q: Vec<Vec<f64>>,
    },
}

impl GameSpec {
    pub fn build(&self) -> Result<Box<dyn GameOracle>> {
        Ok(match self {
            GameSpec::Quadratic { a, c, b } => {
                Box::new(make_quadratic(&QuadraticGameSpec { a: *a, c: *c, b: b.clone() })?)
            }
            GameSpec::Bilinear { b } => Box::new(make_bilinear(b)?),
            GameSpec::DiracGan { loss } => Box::new(make_dirac_gan(&DiracGanSpec { loss: *loss })),
            GameSpec::QuadraticForm { p, b, q } => {
                Box::new(QuadraticForm::new(rows_to_matrix(p)?, rows_to_matrix(b)?, rows_to_matrix(q)?)?)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecfield::{grad_check, joint_field, FieldConvention};

    #[test]
    fn quadratic_gradients_by_substitution() {
        let g = make_quadratic(&QuadraticGameSpec::scalar(1.0, 1.0, 0.0)).unwrap();
        assert_eq!(g.grad_x(&[1.0], &[1.0]), vec![1.0]);
        assert_eq!(g.grad_y(&[1.0], &[1.0]), vec![-1.0]);

        let g = make_quadratic(&QuadraticGameSpec::scalar(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(g.grad_x(&[2.0], &[3.0]), vec![3.0]);
        assert_eq!(g.grad_y(&[2.0], &[3.0]), vec![2.0]);
    }

    #[test]
    fn negative_curvature_rejected() {
        assert!(make_quadratic(&QuadraticGameSpec::scalar(-1.0, 1.0, 0.0)).is_err());
        assert!(make_quadratic(&QuadraticGameSpec::scalar(1.0, -0.1, 0.0)).is_err());
        assert!(make_quadratic(&QuadraticGameSpec::scalar(f64::NAN, 1.0, 0.0)).is_err());
    }

    #[test]
    fn ragged_interaction_rejected() {
        let spec = QuadraticGameSpec { a: 1.0, c: 1.0, b: vec![vec![1.0, 2.0], vec![3.0]] };
        assert!(make_quadratic(&spec).is_err());
    }

    #[test]
    fn bilinear_field_is_isometry() {
        let g = make_bilinear(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let p = ParamPoint::from_blocks(&[0.3, -1.2], &[0.7, 2.0]).unwrap();
        let v = joint_field(&g, &p, FieldConvention::PaperOriented).unwrap();
        assert!((v.norm() - p.norm()).abs() < 1e-14);

        let g = make_bilinear(&[vec![1.0]]).unwrap();
        let p = ParamPoint::from_blocks(&[1.0], &[0.0]).unwrap();
        let v = joint_field(&g, &p, FieldConvention::PaperOriented).unwrap();
        assert_eq!(&*v, &[0.0, -1.0]);
    }

    #[test]
    fn dirac_values() {
        let g = make_dirac_gan(&DiracGanSpec { loss: DiracLoss::Logistic });
        // independent scalar evaluation of 2 * (-ln 2)
        let expected = -2.0 * std::f64::consts::LN_2;
        assert!((g.value(&[0.0], &[0.0]) - expected).abs() < 1e-15);
        assert!((g.value(&[0.0], &[0.0]) + 1.386294).abs() < 1e-6);
        assert_eq!(g.grad_x(&[1.0], &[0.0]), vec![0.0]);
        assert!((g.grad_y(&[1.0], &[0.0])[0] - 0.5).abs() < 1e-15);

        let lin = make_dirac_gan(&DiracGanSpec { loss: DiracLoss::Linear });
        let bil = make_bilinear(&[vec![1.0]]).unwrap();
        for (a, b) in [(0.3, -0.7), (1.5, 2.0), (-2.0, 0.1)] {
            let lhs = lin.value(&[a], &[b]) - lin.loss(0.0);
            assert!((lhs - bil.value(&[a], &[b])).abs() < 1e-15);
        }
    }

    #[test]
    fn dirac_large_arguments_stay_finite() {
        let g = make_dirac_gan(&DiracGanSpec { loss: DiracLoss::Logistic });
        for t in [-800.0, 800.0] {
            assert!(g.value(&[t], &[1.0]).is_finite());
            assert!(g.grad_x(&[t], &[1.0])[0].is_finite());
        }
    }

    #[test]
    fn every_game_passes_grad_check_at_sample_points() {
        let games: Vec<Box<dyn GameOracle>> = vec![
            Box::new(make_quadratic(&QuadraticGameSpec::scalar(1.0, 1.0, 0.5)).unwrap()),
            Box::new(make_dirac_gan(&DiracGanSpec { loss: DiracLoss::Logistic })),
            Box::new(make_dirac_gan(&DiracGanSpec { loss: DiracLoss::Linear })),
        ];
        for g in &games {
            let p = ParamPoint::from_blocks(&[0.3], &[-0.7]).unwrap();
            let report = grad_check(g.as_ref(), &p);
            assert!(report.pass, "{report:?}");
        }
    }

    #[test]
    fn game_spec_builds_each_kind() {
        let specs = [
            r#"{"kind":"quadratic","a":1,"c":1,"b":[[0.5]]}"#,
            r#"{"kind":"bilinear","b":[[1,0],[0,1]]}"#,
            r#"{"kind":"dirac_gan","loss":"logistic"}"#,
            r#"{"kind":"quadratic_form","p":[[-1]],"b":[[0]],"q":[[1]]}"#,
        ];
        for s in specs {
            let spec: GameSpec = serde_json::from_str(s).unwrap();
            spec.build().unwrap();
        }
        let bad = r#"{"kind":"bilinear","b":[[1]],"extra":1}"#;
        assert!(serde_json::from_str::<GameSpec>(bad).is_err());
    }
}
