//! Parameter points, the joint gradient field of a zero-sum game and its
//! Jacobian.
//!
//! A game is `min_x max_y f(x, y)` with `x` of length `m` and `y` of length
//! `n`. Its joint field comes in two orientations that are exact negations
//! of each other:
//!
//! ```text
//! PaperOriented:  v = [  ∇x f ; -∇y f ]
//! DescentAscent:  v = [ -∇x f ;  ∇y f ]
//! ```
//!
//! `PaperOriented` stacks each player's own minimization gradient.
//! `DescentAscent` is the direction simultaneous descent-ascent moves in, and
//! is the orientation under which the local-convergence results of the
//! convergence lab hold with negative-real-part spectra.

use std::ops::Deref;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Step used by the numerical Jacobian fallback.
pub const JACOBIAN_FD_STEP: f64 = 1e-5;
/// Step used by [`grad_check`].
pub const GRAD_CHECK_STEP: f64 = 1e-4;
/// Pass threshold used by [`grad_check`].
pub const GRAD_CHECK_TOL: f64 = 1e-5;

/// Concatenated player parameters `p = [x, y]` with the split between blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    values: Vec<f64>,
    split: usize,
}

impl ParamPoint {
    pub fn new(values: Vec<f64>, split: usize) -> Result<Self> {
        if split > values.len() {
            return Err(Error::InvalidParameter(format!("split {split} exceeds point length {}", values.len())));
        }
        ensure_finite(&values, "parameter point")?;
        Ok(Self { values, split })
    }

    pub fn from_blocks(x: &[f64], y: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(x.len() + y.len());
        values.extend_from_slice(x);
        values.extend_from_slice(y);
        Self::new(values, x.len())
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        Self { values: vec![0.0; m + n], split: m }
    }

    /// Min-player block.
    pub fn x(&self) -> &[f64] {
        &self.values[..self.split]
    }

    /// Max-player block.
    pub fn y(&self) -> &[f64] {
        &self.values[self.split..]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn split(&self) -> usize {
        self.split
    }

    /// `(m, n)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.split, self.values.len() - self.split)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    pub fn distance(&self, other: &ParamPoint) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// Returns `self + scale * direction`, rejecting non-finite results.
    pub fn displaced(&self, direction: &[f64], scale: f64) -> Result<ParamPoint> {
        if direction.len() != self.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                got: direction.len(),
                context: "update direction",
            });
        }
        let values = self.values.iter().zip(direction).map(|(p, d)| p + scale * d).collect();
        ParamPoint::new(values, self.split)
    }
}

/// Orientation of the joint field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum FieldConvention {
    /// `v = [∇x f; -∇y f]`.
    #[default]
    #[serde(rename = "paper")]
    PaperOriented,
    /// `v = [-∇x f; ∇y f]`.
    #[serde(rename = "descent-ascent")]
    DescentAscent,
}

impl FieldConvention {
    /// `+1` for `PaperOriented`, `-1` for `DescentAscent`.
    pub fn sign(self) -> f64 {
        match self {
            FieldConvention::PaperOriented => 1.0,
            FieldConvention::DescentAscent => -1.0,
        }
    }
}

impl std::str::FromStr for FieldConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(FieldConvention::PaperOriented),
            "descent-ascent" => Ok(FieldConvention::DescentAscent),
            other => Err(Error::InvalidParameter(format!(
                "unknown convention {other:?}, expected \"paper\" or \"descent-ascent\""
            ))),
        }
    }
}

/// Joint field value at a point, length `m + n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointVector(Vec<f64>);

impl JointVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn negated(&self) -> JointVector {
        JointVector(self.0.iter().map(|v| -v).collect())
    }
}

impl Deref for JointVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Unoriented first-order information: gradients of the min player's
/// objective `f` with respect to each block.
///
/// For non-zero-sum objectives (the toy GAN) `grad_y` is minus the gradient of
/// the max player's own loss, so the oriented field still stacks each
/// player's minimization gradient under `PaperOriented`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerGradients {
    pub grad_x: Vec<f64>,
    pub grad_y: Vec<f64>,
}

impl PlayerGradients {
    pub fn oriented(&self, conv: FieldConvention) -> JointVector {
        let s = conv.sign();
        let mut v = Vec::with_capacity(self.grad_x.len() + self.grad_y.len());
        v.extend(self.grad_x.iter().map(|g| s * g));
        v.extend(self.grad_y.iter().map(|g| -s * g));
        JointVector(v)
    }

    /// Inverse of [`PlayerGradients::oriented`].
    pub fn from_field(v: &[f64], split: usize, conv: FieldConvention) -> Self {
        let s = conv.sign();
        PlayerGradients {
            grad_x: v[..split].iter().map(|g| s * g).collect(),
            grad_y: v[split..].iter().map(|g| -s * g).collect(),
        }
    }
}

/// Second-order blocks of `f`: `xx` is `m×m`, `xy` is `m×n` with
/// `xy[(i, j)] = ∂²f/∂x_i∂y_j`, `yy` is `n×n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianBlocks {
    pub xx: DMatrix<f64>,
    pub xy: DMatrix<f64>,
    pub yy: DMatrix<f64>,
}

/// A two-player zero-sum objective `f(x, y)` minimized by `x`, maximized by `y`.
pub trait GameOracle: Send + Sync {
    /// `(m, n)`.
    fn dims(&self) -> (usize, usize);

    fn value(&self, x: &[f64], y: &[f64]) -> f64;

    fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64>;

    fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64>;

    /// Analytic Hessian blocks, when available.
    fn hessian(&self, _x: &[f64], _y: &[f64]) -> Option<HessianBlocks> {
        None
    }

    /// Known equilibria, possibly empty.
    fn nash_points(&self) -> Vec<ParamPoint> {
        Vec::new()
    }
}

pub(crate) fn check_dims(oracle: &dyn GameOracle, p: &ParamPoint) -> Result<()> {
    let (m, n) = oracle.dims();
    let (pm, pn) = p.dims();
    if pm != m {
        return Err(Error::DimensionMismatch { expected: m, got: pm, context: "min-player block" });
    }
    if pn != n {
        return Err(Error::DimensionMismatch { expected: n, got: pn, context: "max-player block" });
    }
    Ok(())
}

/// Evaluates both player gradients, rejecting non-finite output.
pub fn player_gradients(oracle: &dyn GameOracle, p: &ParamPoint) -> Result<PlayerGradients> {
    check_dims(oracle, p)?;
    let grad_x = oracle.grad_x(p.x(), p.y());
    let grad_y = oracle.grad_y(p.x(), p.y());
    let (m, n) = oracle.dims();
    if grad_x.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: grad_x.len(), context: "oracle grad_x" });
    }
    if grad_y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: grad_y.len(), context: "oracle grad_y" });
    }
    ensure_finite(&grad_x, "oracle grad_x")?;
    if let Some(index) = grad_y.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite { index: m + index, context: "oracle grad_y" });
    }
    Ok(PlayerGradients { grad_x, grad_y })
}

/// Joint field `v(p)` under the requested orientation.
pub fn joint_field(oracle: &dyn GameOracle, p: &ParamPoint, conv: FieldConvention) -> Result<JointVector> {
    Ok(player_gradients(oracle, p)?.oriented(conv))
}

/// How [`joint_jacobian`] may obtain second-order information.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianSource {
    /// Hessian blocks from the oracle; error when absent.
    Analytic,
    /// Analytic when available, otherwise central differences of the field.
    AllowNumerical,
    /// Always central differences of the field.
    Numerical,
}

/// Assembles `[Hxx, Hxy; -Hyx, -Hyy]` (negated under `DescentAscent`).
pub fn assemble_jacobian(h: &HessianBlocks, conv: FieldConvention) -> DMatrix<f64> {
    let m = h.xx.nrows();
    let n = h.yy.nrows();
    let s = conv.sign();
    let mut jac = DMatrix::zeros(m + n, m + n);
    jac.view_mut((0, 0), (m, m)).copy_from(&(&h.xx * s));
    jac.view_mut((0, m), (m, n)).copy_from(&(&h.xy * s));
    jac.view_mut((m, 0), (n, m)).copy_from(&(h.xy.transpose() * -s));
    jac.view_mut((m, m), (n, n)).copy_from(&(&h.yy * -s));
    jac
}

/// Jacobian `v'(p)` of the joint field.
pub fn joint_jacobian(
    oracle: &dyn GameOracle,
    p: &ParamPoint,
    conv: FieldConvention,
    source: JacobianSource,
) -> Result<DMatrix<f64>> {
    check_dims(oracle, p)?;
    let analytic = match source {
        JacobianSource::Numerical => None,
        _ => oracle.hessian(p.x(), p.y()),
    };
    match (analytic, source) {
        (Some(h), _) => Ok(assemble_jacobian(&h, conv)),
        (None, JacobianSource::Analytic) => Err(Error::MissingHessian),
        (None, _) => {
            let split = p.split();
            central_difference_jacobian(
                |values| {
                    let q = ParamPoint::new(values.to_vec(), split)?;
                    Ok(joint_field(oracle, &q, conv)?.into_inner())
                },
                p.values(),
                JACOBIAN_FD_STEP,
            )
        }
    }
}

/// Central-difference Jacobian of `map` at `at`; column `j` is
/// `(map(at + step e_j) - map(at - step e_j)) / (2 step)`.
pub fn central_difference_jacobian<F>(map: F, at: &[f64], step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let dim = at.len();
    let out_dim = map(at)?.len();
    let mut jac = DMatrix::zeros(out_dim, dim);
    let mut probe = at.to_vec();
    for j in 0..dim {
        probe[j] = at[j] + step;
        let plus = map(&probe)?;
        probe[j] = at[j] - step;
        let minus = map(&probe)?;
        probe[j] = at[j];
        for i in 0..out_dim {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * step);
        }
    }
    Ok(jac)
}

/// Outcome of [`grad_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    /// Max relative error between analytic and finite-difference gradients.
    pub gradient_error: f64,
    /// Same for the Hessian blocks, when the oracle provides them.
    pub hessian_error: Option<f64>,
    /// Whether any analytic or finite-difference value was non-finite.
    pub non_finite: bool,
    pub pass: bool,
}

fn rel_err(analytic: f64, reference: f64) -> f64 {
    (analytic - reference).abs() / reference.abs().max(1.0)
}

/// Compares analytic gradients (and Hessian blocks, when present) against
/// central differences with step [`GRAD_CHECK_STEP`]. Relative error is
/// `|analytic - fd| / max(1, |fd|)`.
pub fn grad_check(oracle: &dyn GameOracle, p: &ParamPoint) -> CheckReport {
    let (m, n) = oracle.dims();
    let (x, y) = (p.x(), p.y());
    let h = GRAD_CHECK_STEP;
    let mut non_finite = false;
    let mut worst = 0.0f64;
    let mut track = |a: f64, r: f64, worst: &mut f64| {
        if !a.is_finite() || !r.is_finite() {
            non_finite = true;
        } else {
            *worst = worst.max(rel_err(a, r));
        }
    };

    let gx = oracle.grad_x(x, y);
    let gy = oracle.grad_y(x, y);
    let mut xp = x.to_vec();
    let mut yp = y.to_vec();
    for i in 0..m {
        xp[i] = x[i] + h;
        let fp = oracle.value(&xp, y);
        xp[i] = x[i] - h;
        let fm = oracle.value(&xp, y);
        xp[i] = x[i];
        track(gx[i], (fp - fm) / (2.0 * h), &mut worst);
    }
    for j in 0..n {
        yp[j] = y[j] + h;
        let fp = oracle.value(x, &yp);
        yp[j] = y[j] - h;
        let fm = oracle.value(x, &yp);
        yp[j] = y[j];
        track(gy[j], (fp - fm) / (2.0 * h), &mut worst);
    }

    let hessian_error = oracle.hessian(x, y).map(|blocks| {
        let mut hworst = 0.0f64;
        // column j of Hxx and Hyx from perturbing x_j
        for j in 0..m {
            xp[j] = x[j] + h;
            let gxp = oracle.grad_x(&xp, y);
            xp[j] = x[j] - h;
            let gxm = oracle.grad_x(&xp, y);
            xp[j] = x[j];
            for i in 0..m {
                track(blocks.xx[(i, j)], (gxp[i] - gxm[i]) / (2.0 * h), &mut hworst);
            }
        }
        for j in 0..n {
            yp[j] = y[j] + h;
            let gxp = oracle.grad_x(x, &yp);
            let gyp = oracle.grad_y(x, &yp);
            yp[j] = y[j] - h;
            let gxm = oracle.grad_x(x, &yp);
            let gym = oracle.grad_y(x, &yp);
            yp[j] = y[j];
            for i in 0..m {
                track(blocks.xy[(i, j)], (gxp[i] - gxm[i]) / (2.0 * h), &mut hworst);
            }
            for i in 0..n {
                track(blocks.yy[(i, j)], (gyp[i] - gym[i]) / (2.0 * h), &mut hworst);
            }
        }
        hworst
    });

    let pass = !non_finite && worst <= GRAD_CHECK_TOL && hessian_error.is_none_or(|e| e <= GRAD_CHECK_TOL);
    CheckReport { gradient_error: worst, hessian_error, non_finite, pass }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
