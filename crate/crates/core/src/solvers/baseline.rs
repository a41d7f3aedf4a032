//! First-player update rules of the classical baselines, completed for the
//! second player by applying the same rule to `g = −f` with roles swapped.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::vecfield::{player_gradients, GameOracle, HessianBlocks, ParamPoint, PlayerGradients};

use super::{BaselineParams, SolverConfig, SolverKind};

/// Largest `m + n` accepted by the dense CGD solve.
pub const CGD_DIM_CAP: usize = 512;

/// One player's view of its own objective.
#[derive(Debug, Clone, Copy)]
pub struct PlayerView<'a> {
    /// Gradient with respect to the player's own block.
    pub own_grad: &'a DVector<f64>,
    /// Gradient with respect to the opponent's block.
    pub opp_grad: &'a DVector<f64>,
    /// Hessian with respect to the player's own block.
    pub own_hess: Option<&'a DMatrix<f64>>,
    /// Mixed second derivative, rows own block, columns opponent block.
    pub mixed: Option<&'a DMatrix<f64>>,
}

fn need(m: Option<&DMatrix<f64>>, kind: SolverKind) -> Result<&DMatrix<f64>> {
    m.ok_or(Error::SecondOrderUnavailable { kind: kind.name() })
}

/// `Δ` for the player described by `view`:
///
/// ```text
/// GDA     −∇own
/// SGA     −∇own − γ M ∇opp
/// ConOpt  −∇own − γ M ∇opp − γ H ∇own
/// OGDA    −∇own − η M ∇opp + η H ∇own
/// CGD     (I + η² M Mᵀ)⁻¹ (−∇own − η M ∇opp)
/// ```
pub fn table_rule(kind: SolverKind, view: PlayerView<'_>, params: &BaselineParams) -> Result<DVector<f64>> {
    let BaselineParams { gamma, eta } = *params;
    let g = view.own_grad;
    Ok(match kind {
        SolverKind::Gda => -g,
        SolverKind::Sga => {
            let m = need(view.mixed, kind)?;
            -g - (m * view.opp_grad) * gamma
        }
        SolverKind::ConOpt => {
            let m = need(view.mixed, kind)?;
            let h = need(view.own_hess, kind)?;
            -g - (m * view.opp_grad) * gamma - (h * g) * gamma
        }
        SolverKind::Ogda => {
            let m = need(view.mixed, kind)?;
            let h = need(view.own_hess, kind)?;
            -g - (m * view.opp_grad) * eta + (h * g) * eta
        }
        SolverKind::Cgd => {
            let m = need(view.mixed, kind)?;
            let rhs = -g - (m * view.opp_grad) * eta;
            let k = g.len();
            let system = DMatrix::identity(k, k) + (m * m.transpose()) * (eta * eta);
            system.lu().solve(&rhs).ok_or(Error::Singular("CGD system"))?
        }
        SolverKind::Gn | SolverKind::GnAdaptive => {
            return Err(Error::InvalidParameter(format!("{} is not a baseline rule", kind.name())))
        }
    })
}

/// Joint baseline direction `[Δx; Δy]` from unoriented gradients.
pub fn baseline_direction(
    grads: &PlayerGradients,
    hessian: Option<&HessianBlocks>,
    kind: SolverKind,
    params: &BaselineParams,
) -> Result<Vec<f64>> {
    let (m, n) = (grads.grad_x.len(), grads.grad_y.len());
    if kind == SolverKind::Cgd && m + n > CGD_DIM_CAP {
        return Err(Error::DimensionCap { dim: m + n, cap: CGD_DIM_CAP });
    }
    if kind.is_second_order() && hessian.is_none() {
        return Err(Error::SecondOrderUnavailable { kind: kind.name() });
    }
    let gx = DVector::from_column_slice(&grads.grad_x);
    let gy = DVector::from_column_slice(&grads.grad_y);

    let dx = table_rule(
        kind,
        PlayerView { own_grad: &gx, opp_grad: &gy, own_hess: hessian.map(|h| &h.xx), mixed: hessian.map(|h| &h.xy) },
        params,
    )?;

    // max player minimizes g = −f
    let neg_gy = -&gy;
    let neg_gx = -&gx;
    let neg_hyy = hessian.map(|h| -&h.yy);
    let neg_hyx = hessian.map(|h| -h.xy.transpose());
    let dy = table_rule(
        kind,
        PlayerView { own_grad: &neg_gy, opp_grad: &neg_gx, own_hess: neg_hyy.as_ref(), mixed: neg_hyx.as_ref() },
        params,
    )?;

    let mut out = Vec::with_capacity(m + n);
    out.extend_from_slice(dx.as_slice());
    out.extend_from_slice(dy.as_slice());
    Ok(out)
}

/// `p + h·Δ` for a baseline rule.
pub fn baseline_update(
    p: &ParamPoint,
    grads: &PlayerGradients,
    hessian: Option<&HessianBlocks>,
    cfg: &SolverConfig,
) -> Result<ParamPoint> {
    let delta = baseline_direction(grads, hessian, cfg.kind, &cfg.baseline)?;
    p.displaced(&delta, cfg.gn.step)
}

pub fn step_baseline(p: &ParamPoint, oracle: &dyn GameOracle, cfg: &SolverConfig) -> Result<ParamPoint> {
    if matches!(cfg.kind, SolverKind::Gn | SolverKind::GnAdaptive) {
        return Err(Error::InvalidParameter(format!("{} is not a baseline rule", cfg.kind.name())));
    }
    if cfg.kind == SolverKind::Cgd && p.len() > CGD_DIM_CAP {
        return Err(Error::DimensionCap { dim: p.len(), cap: CGD_DIM_CAP });
    }
    let grads = player_gradients(oracle, p)?;
    let hessian = if cfg.kind.is_second_order() {
        Some(oracle.hessian(p.x(), p.y()).ok_or(Error::SecondOrderUnavailable { kind: cfg.kind.name() })?)
    } else {
        None
    };
    baseline_update(p, &grads, hessian.as_ref(), cfg)
}
