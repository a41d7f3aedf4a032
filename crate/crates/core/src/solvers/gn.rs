use crate::error::{ensure_finite, Error, Result};
use crate::precond::{gn_delta, sm_solve_scaled, GNConfig};
use crate::vecfield::{joint_field, GameOracle, ParamPoint};

use super::{SolverConfig, SolverKind};

/// `p + h·Δ` with `Δ = gn_delta(v, λ)`.
pub fn gn_update(p: &ParamPoint, v: &[f64], gn: &GNConfig) -> Result<ParamPoint> {
    let delta = gn_delta(v, gn.lambda)?;
    p.displaced(&delta, gn.step)
}

/// One step of the rank-one preconditioned fixed-point iteration.
pub fn step_gn(p: &ParamPoint, oracle: &dyn GameOracle, cfg: &SolverConfig) -> Result<ParamPoint> {
    if cfg.kind != SolverKind::Gn {
        return Err(Error::InvalidParameter(format!("step_gn called with solver kind {}", cfg.kind.name())));
    }
    let v = joint_field(oracle, p, cfg.convention)?;
    gn_update(p, &v, &cfg.gn)
}

/// Second-moment accumulator of the adaptive variant.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveState {
    /// `θ_t`, elementwise non-negative.
    pub theta: Vec<f64>,
    /// Field from the previous evaluation, `v_{t−1}`.
    pub prev_field: Vec<f64>,
    pub beta2: f64,
    pub epsilon: f64,
    /// Completed steps.
    pub t: u64,
}

impl AdaptiveState {
    /// `θ₀ = v₀²` from the field at the starting point.
    pub fn init(v0: &[f64], beta2: f64, epsilon: f64) -> Result<Self> {
        ensure_finite(v0, "initial field")?;
        if !(0.0..1.0).contains(&beta2) {
            return Err(Error::InvalidParameter(format!("beta2 must lie in [0, 1), got {beta2}")));
        }
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be non-negative, got {epsilon}")));
        }
        Ok(Self { theta: v0.iter().map(|v| v * v).collect(), prev_field: v0.to_vec(), beta2, epsilon, t: 0 })
    }
}

/// Adaptive step given the field `v_t` at `p`:
///
/// ```text
/// θ_t = β₂ θ_{t−1} + (1 − β₂) v_{t−1}²
/// g_t = v_t / (√θ_t + ε)
/// z   = (λI + h g_t g_tᵀ)⁻¹ v_t
/// Δ   = −(g_t − z)
/// p  ← p + h Δ
/// ```
pub fn adaptive_update(
    p: &ParamPoint,
    v: &[f64],
    state: AdaptiveState,
    gn: &GNConfig,
) -> Result<(ParamPoint, AdaptiveState)> {
    if v.len() != p.len() || state.theta.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: if v.len() != p.len() { v.len() } else { state.theta.len() },
            context: "adaptive step",
        });
    }
    let AdaptiveState { theta, prev_field, beta2, epsilon, t } = state;
    let theta: Vec<f64> = theta.iter().zip(&prev_field).map(|(th, pv)| beta2 * th + (1.0 - beta2) * pv * pv).collect();
    let g: Vec<f64> = v.iter().zip(&theta).map(|(vi, th)| vi / (th.sqrt() + epsilon)).collect();
    ensure_finite(&g, "scaled field (theta and epsilon both zero?)")?;
    let z = sm_solve_scaled(v, &g, gn.step, gn.lambda)?;
    let delta: Vec<f64> = g.iter().zip(&z).map(|(gi, zi)| -(gi - zi)).collect();
    let next = p.displaced(&delta, gn.step)?;
    Ok((next, AdaptiveState { theta, prev_field: v.to_vec(), beta2, epsilon, t: t + 1 }))
}

pub fn step_gn_adaptive(
    p: &ParamPoint,
    state: AdaptiveState,
    oracle: &dyn GameOracle,
    cfg: &SolverConfig,
) -> Result<(ParamPoint, AdaptiveState)> {
    if cfg.kind != SolverKind::GnAdaptive {
        return Err(Error::InvalidParameter(format!("step_gn_adaptive called with solver kind {}", cfg.kind.name())));
    }
    let v = joint_field(oracle, p, cfg.convention)?;
    adaptive_update(p, &v, state, &cfg.gn)
}
