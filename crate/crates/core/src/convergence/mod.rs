//! Local convergence analysis of the preconditioned fixed-point iteration
//! `F(p) = p + h·A(p)·v(p)`.
//!
//! At a stationary point `p̄` the `A'(p)v(p)` term vanishes and
//! `F'(p̄) = I + σ·v'(p̄)` with `σ = h(1/λ − 1)`. If every eigenvalue `ξ` of
//! `v'(p̄)` has negative real part, `I + σ·v'(p̄)` has spectral radius below
//! one exactly when `σ < 2|Re ξ| / |ξ|²` for every `ξ`.

pub mod eigen;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use eigen::{eigen_residual, eigenvalues};

use crate::error::{Error, Result};
use crate::precond::{gn_delta, GNConfig};
use crate::solvers::{run_solver, SolverConfig, SolverKind, StoppingRule, Verdict};
use crate::vecfield::{
    central_difference_jacobian, joint_field, joint_jacobian, FieldConvention, GameOracle, JacobianSource, ParamPoint,
    JACOBIAN_FD_STEP,
};

/// Field norm below which a point counts as stationary.
pub const STATIONARY_TOL: f64 = 1e-8;
/// Margin separating genuine signs from round-off.
pub const SIGN_MARGIN: f64 = 1e-10;
/// Number of trailing ratios averaged by [`contraction_experiment`].
pub const RATE_WINDOW: usize = 100;
/// A run that moves this many times farther from `p̄` than it started counts
/// as locally divergent.
pub const LOCAL_ESCAPE: f64 = 1e3;
// distances below this are dominated by underflow
const DISTANCE_FLOOR: f64 = 1e-280;

/// Serializable complex eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Eigenvalue {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<Eigenvalue> for Complex64 {
    fn from(e: Eigenvalue) -> Self {
        Complex64::new(e.re, e.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    NashCandidate,
    NotNash,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Definiteness {
    Zero,
    PositiveDefinite,
    PositiveSemidefinite,
    NegativeDefinite,
    NegativeSemidefinite,
    Indefinite,
}

impl Definiteness {
    pub fn is_psd(self) -> bool {
        matches!(self, Definiteness::Zero | Definiteness::PositiveDefinite | Definiteness::PositiveSemidefinite)
    }

    pub fn is_nsd(self) -> bool {
        matches!(self, Definiteness::Zero | Definiteness::NegativeDefinite | Definiteness::NegativeSemidefinite)
    }
}

/// Definiteness of the symmetric part of `mat`.
pub fn symmetric_definiteness(mat: &DMatrix<f64>) -> Result<Definiteness> {
    let sym = (mat + mat.transpose()) * 0.5;
    let eigs = eigenvalues(&sym)?;
    let m = SIGN_MARGIN;
    let re = eigs.iter().map(|z| z.re);
    Ok(if re.clone().all(|r| r.abs() <= m) {
        Definiteness::Zero
    } else if re.clone().all(|r| r > m) {
        Definiteness::PositiveDefinite
    } else if re.clone().all(|r| r >= -m) {
        Definiteness::PositiveSemidefinite
    } else if re.clone().all(|r| r < -m) {
        Definiteness::NegativeDefinite
    } else if re.clone().all(|r| r <= m) {
        Definiteness::NegativeSemidefinite
    } else {
        Definiteness::Indefinite
    })
}

pub fn spectral_radius(eigs: &[Complex64]) -> f64 {
    eigs.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest `σ` for which `I + σU` is a contraction, given the eigenvalues of
/// `U`: `min over ξ of (1/|Re ξ|)·2/(1 + (Im ξ/Re ξ)²)`.
pub fn sigma_bound(eigs: &[Complex64]) -> Result<f64> {
    if eigs.is_empty() {
        return Err(Error::Empty("eigenvalue list"));
    }
    let mut bound = f64::INFINITY;
    for xi in eigs {
        if !(xi.re < 0.0) {
            return Err(Error::BoundInapplicable { re: xi.re, im: xi.im });
        }
        let ratio = xi.im / xi.re;
        bound = bound.min((1.0 / xi.re.abs()) * 2.0 / (1.0 + ratio * ratio));
    }
    Ok(bound)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMode {
    /// `I + σ·v'(p̄)`; only valid at a stationary point.
    AtEquilibrium,
    /// Central differences of the full update map, valid anywhere.
    NumericalGeneral,
}

/// Jacobian `F'(p)` of the update map `p ↦ p + h·gn_delta(v(p), λ)`.
pub fn fixed_point_jacobian(
    oracle: &dyn GameOracle,
    p: &ParamPoint,
    cfg: &GNConfig,
    conv: FieldConvention,
    mode: JacobianMode,
) -> Result<DMatrix<f64>> {
    match mode {
        JacobianMode::AtEquilibrium => {
            let norm = joint_field(oracle, p, conv)?.norm();
            if !(norm <= STATIONARY_TOL) {
                return Err(Error::NotStationary { norm, tol: STATIONARY_TOL });
            }
            let jac = joint_jacobian(oracle, p, conv, JacobianSource::AllowNumerical)?;
            let dim = p.len();
            Ok(DMatrix::identity(dim, dim) + jac * cfg.sigma())
        }
        JacobianMode::NumericalGeneral => {
            let split = p.split();
            central_difference_jacobian(
                |values| {
                    let q = ParamPoint::new(values.to_vec(), split)?;
                    let v = joint_field(oracle, &q, conv)?;
                    let delta = gn_delta(&v, cfg.lambda)?;
                    Ok(values.iter().zip(&delta).map(|(x, d)| x + cfg.step * d).collect())
                },
                p.values(),
                JACOBIAN_FD_STEP,
            )
        }
    }
}

/// Stationary-point classification from the spectrum of the
/// descent-ascent Jacobian, plus the block-definiteness cross-check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryReport {
    pub classification: Classification,
    /// Eigenvalues of `v'(p̄)` under the requested convention.
    pub field_eigenvalues: Vec<Eigenvalue>,
    /// Symmetric part of `∇²xx f`.
    pub hxx: Definiteness,
    /// Symmetric part of `∇²yy f`.
    pub hyy: Definiteness,
    /// `∇²xx f ⪰ 0` and `∇²yy f ⪯ 0`: the block conditions equivalent to the
    /// descent-ascent Jacobian being negative semidefinite.
    pub blocks_nash: bool,
    /// Whether the eigenvalue test and the block test disagree.
    pub tests_disagree: bool,
}

pub fn classify_stationary(oracle: &dyn GameOracle, p: &ParamPoint, conv: FieldConvention) -> Result<StationaryReport> {
    let norm = joint_field(oracle, p, conv)?.norm();
    if !(norm <= STATIONARY_TOL) {
        return Err(Error::NotStationary { norm, tol: STATIONARY_TOL });
    }
    let paper = joint_jacobian(oracle, p, FieldConvention::PaperOriented, JacobianSource::AllowNumerical)?;
    let descent = -&paper;
    let da_eigs = eigenvalues(&descent)?;
    let classification = if da_eigs.iter().all(|z| z.re < -SIGN_MARGIN) {
        Classification::NashCandidate
    } else if da_eigs.iter().any(|z| z.re > SIGN_MARGIN) {
        Classification::NotNash
    } else {
        Classification::Indeterminate
    };
    let field_eigenvalues = match conv {
        FieldConvention::DescentAscent => da_eigs.clone(),
        FieldConvention::PaperOriented => eigenvalues(&paper)?,
    };

    let (m, n) = p.dims();
    let hxx = paper.view((0, 0), (m, m)).into_owned();
    let hyy = -paper.view((m, m), (n, n)).into_owned();
    let hxx = symmetric_definiteness(&hxx)?;
    let hyy = symmetric_definiteness(&hyy)?;
    let blocks_nash = hxx.is_psd() && hyy.is_nsd();
    let eig_nsd = da_eigs.iter().all(|z| z.re <= SIGN_MARGIN);
    Ok(StationaryReport {
        classification,
        field_eigenvalues: field_eigenvalues.into_iter().map(Into::into).collect(),
        hxx,
        hyy,
        blocks_nash,
        tests_disagree: blocks_nash != eig_nsd,
    })
}

/// Predicted and observed local rate of the fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionMeasurement {
    /// Spectral radius of `F'(p̄)`.
    pub predicted: f64,
    /// Geometric mean of `‖p_{t+1} − p̄‖ / ‖p_t − p̄‖` over the last
    /// [`RATE_WINDOW`] usable steps.
    pub measured: f64,
    pub verdict: Verdict,
}

/// Runs the preconditioned iteration from `p0` and compares its per-step
/// contraction with the spectral radius of `F'(p̄)` at the game's first known
/// equilibrium. The run uses a field-norm tolerance of zero, so it lasts
/// `iters` steps unless it leaves the neighbourhood of `p̄`; escaping to
/// [`LOCAL_ESCAPE`] times the initial distance is reported as
/// [`Verdict::Diverged`] together with the measured growth rate.
pub fn contraction_experiment(
    oracle: &dyn GameOracle,
    cfg: &GNConfig,
    conv: FieldConvention,
    p0: &ParamPoint,
    iters: usize,
) -> Result<ContractionMeasurement> {
    let nash = oracle.nash_points().into_iter().next().ok_or(Error::UnknownEquilibrium)?;
    let fprime = fixed_point_jacobian(oracle, &nash, cfg, conv, JacobianMode::AtEquilibrium)?;
    let predicted = spectral_radius(&eigenvalues(&fprime)?);

    let mut solver = SolverConfig::new(SolverKind::Gn).with_convention(conv);
    solver.gn = *cfg;
    let d0 = p0.distance(&nash);
    let escape = LOCAL_ESCAPE * d0;
    let stop = StoppingRule { tol: 0.0, blowup: nash.norm() + escape };
    let traj = run_solver(p0, oracle, &solver, iters, &stop, 0)?;
    let dist: Vec<f64> =
        traj.points.iter().map(|q| q.distance(&nash)).take_while(|d| *d > DISTANCE_FLOOR && d.is_finite()).collect();
    let verdict = if dist.iter().any(|d| *d >= escape) { Verdict::Diverged } else { traj.verdict };
    // an escaping run is measured over whatever steps it took
    let window = if verdict == Verdict::Diverged { RATE_WINDOW.min(dist.len().saturating_sub(1)) } else { RATE_WINDOW };
    if window == 0 || dist.len() < window + 1 {
        return Err(Error::InvalidParameter(format!(
            "only {} usable iterates; need at least {}",
            dist.len(),
            RATE_WINDOW + 1
        )));
    }
    let end = dist.len() - 1;
    let measured = (dist[end] / dist[end - window]).powf(1.0 / window as f64);
    Ok(ContractionMeasurement { predicted, measured, verdict })
}

/// Full spectral summary at a stationary point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub convention: FieldConvention,
    pub lambda: f64,
    pub step: f64,
    /// `σ = h(1/λ − 1)`.
    pub sigma: f64,
    /// Eigenvalues of `v'(p̄)`.
    pub eigenvalues: Vec<Eigenvalue>,
    /// Largest admissible `σ`; `None` when some eigenvalue has
    /// non-negative real part.
    pub sigma_bound: Option<f64>,
    /// Eigenvalues of `F'(p̄) = I + σ v'(p̄)`.
    pub update_eigenvalues: Vec<Eigenvalue>,
    /// Spectral radius of `F'(p̄)`.
    pub spectral_radius: f64,
    /// All `|eig F'(p̄)| < 1`.
    pub contraction: bool,
    pub classification: Classification,
    pub stationary: StationaryReport,
    pub measurement: Option<ContractionMeasurement>,
}

pub fn spectral_report(
    oracle: &dyn GameOracle,
    p_bar: &ParamPoint,
    cfg: &GNConfig,
    conv: FieldConvention,
) -> Result<SpectralReport> {
    let stationary = classify_stationary(oracle, p_bar, conv)?;
    let field_eigs: Vec<Complex64> = stationary.field_eigenvalues.iter().map(|e| (*e).into()).collect();
    let fprime = fixed_point_jacobian(oracle, p_bar, cfg, conv, JacobianMode::AtEquilibrium)?;
    let update = eigenvalues(&fprime)?;
    let radius = spectral_radius(&update);
    Ok(SpectralReport {
        convention: conv,
        lambda: cfg.lambda,
        step: cfg.step,
        sigma: cfg.sigma(),
        eigenvalues: stationary.field_eigenvalues.clone(),
        sigma_bound: sigma_bound(&field_eigs).ok(),
        update_eigenvalues: update.into_iter().map(Into::into).collect(),
        spectral_radius: radius,
        contraction: radius < 1.0,
        classification: stationary.classification,
        stationary,
        measurement: None,
    })
}
