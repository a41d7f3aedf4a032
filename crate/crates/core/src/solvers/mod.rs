//! Update rules behind one stepping interface.
//!
//! Every rule consumes the same first-order information ([`PlayerGradients`],
//! optionally [`HessianBlocks`]) and returns the next iterate `p + h·Δ`.
//! The Gauss-Newton rules orient the field with the configured
//! [`FieldConvention`]; the Table-style baselines are written in terms of
//! `∇f` directly and ignore it.

mod baseline;
mod gn;
mod run;

pub use baseline::{baseline_update, step_baseline, table_rule, PlayerView, CGD_DIM_CAP};
pub use gn::{adaptive_update, gn_update, step_gn, step_gn_adaptive, AdaptiveState};
pub use run::{run_solver, StoppingRule, Trajectory, TrajectoryRow, Verdict};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precond::GNConfig;
use crate::vecfield::{FieldConvention, HessianBlocks, ParamPoint, PlayerGradients};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Gda,
    Sga,
    #[serde(rename = "conopt")]
    ConOpt,
    Ogda,
    Cgd,
    Gn,
    GnAdaptive,
}

impl SolverKind {
    pub const ALL: [SolverKind; 7] = [
        SolverKind::Gda,
        SolverKind::Sga,
        SolverKind::ConOpt,
        SolverKind::Ogda,
        SolverKind::Cgd,
        SolverKind::Gn,
        SolverKind::GnAdaptive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Gda => "GDA",
            SolverKind::Sga => "SGA",
            SolverKind::ConOpt => "ConOpt",
            SolverKind::Ogda => "OGDA",
            SolverKind::Cgd => "CGD",
            SolverKind::Gn => "GN",
            SolverKind::GnAdaptive => "GNAdaptive",
        }
    }

    /// Whether the rule needs Hessian blocks.
    pub fn is_second_order(self) -> bool {
        matches!(self, SolverKind::Sga | SolverKind::ConOpt | SolverKind::Ogda | SolverKind::Cgd)
    }
}

/// Correction weights of the second-order baselines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineParams {
    /// SGA / ConOpt gradient-correction weight.
    pub gamma: f64,
    /// OGDA / CGD coupling.
    pub eta: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self { gamma: 0.1, eta: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptiveParams {
    /// Second-moment decay `β₂`.
    pub beta2: f64,
    /// Denominator guard `ε`.
    pub epsilon: f64,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        Self { beta2: 0.99, epsilon: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub kind: SolverKind,
    /// `λ` and the step size `h` shared by every rule.
    #[serde(default)]
    pub gn: GNConfig,
    #[serde(default)]
    pub baseline: BaselineParams,
    #[serde(default)]
    pub adaptive: AdaptiveParams,
    #[serde(default)]
    pub convention: FieldConvention,
    /// Standard deviation of additive Gaussian noise on both player
    /// gradients; `0` disables it.
    #[serde(default)]
    pub noise_std: f64,
}

impl SolverConfig {
    pub fn new(kind: SolverKind) -> Self {
        Self {
            kind,
            gn: GNConfig::default(),
            baseline: BaselineParams::default(),
            adaptive: AdaptiveParams::default(),
            convention: FieldConvention::PaperOriented,
            noise_std: 0.0,
        }
    }

    pub fn with_gn(mut self, lambda: f64, step: f64) -> Self {
        self.gn = GNConfig { lambda, step };
        self
    }

    pub fn with_convention(mut self, convention: FieldConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.gn.validate()?;
        let BaselineParams { gamma, eta } = self.baseline;
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma must satisfy gamma >= 0, got {gamma}")));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidParameter(format!("eta must satisfy eta > 0, got {eta}")));
        }
        let AdaptiveParams { beta2, epsilon } = self.adaptive;
        if !(0.0..1.0).contains(&beta2) {
            return Err(Error::InvalidParameter(format!("beta2 must lie in [0, 1), got {beta2}")));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!("epsilon must satisfy epsilon > 0, got {epsilon}")));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise_std must satisfy noise_std >= 0, got {}",
                self.noise_std
            )));
        }
        Ok(())
    }
}

/// A configured rule plus whatever state it carries between steps.
#[derive(Debug, Clone)]
pub struct Solver {
    cfg: SolverConfig,
    adaptive: Option<AdaptiveState>,
}

impl Solver {
    pub fn new(cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, adaptive: None })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn adaptive_state(&self) -> Option<&AdaptiveState> {
        self.adaptive.as_ref()
    }

    /// Advances one iteration. `hessian` is only read by second-order rules.
    ///
    /// The adaptive state is initialized on the first call with `θ₀ = v₀²`
    /// taken from the field at the starting point.
    pub fn step(
        &mut self,
        p: &ParamPoint,
        grads: &PlayerGradients,
        hessian: Option<&HessianBlocks>,
    ) -> Result<ParamPoint> {
        let cfg = &self.cfg;
        match cfg.kind {
            SolverKind::Gn => gn_update(p, &grads.oriented(cfg.convention), &cfg.gn),
            SolverKind::GnAdaptive => {
                let v = grads.oriented(cfg.convention);
                let state = match self.adaptive.take() {
                    Some(s) => s,
                    None => AdaptiveState::init(&v, cfg.adaptive.beta2, cfg.adaptive.epsilon)?,
                };
                let (next, state) = adaptive_update(p, &v, state, &cfg.gn)?;
                self.adaptive = Some(state);
                Ok(next)
            }
            _ => baseline_update(p, grads, hessian, cfg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_validation() {
        let cfg: SolverConfig = serde_json::from_str(r#"{"kind":"gn"}"#).unwrap();
        assert_eq!(cfg.gn.lambda, 0.1);
        assert_eq!(cfg.gn.step, 1e-5);
        assert_eq!(cfg.adaptive.beta2, 0.99);
        assert_eq!(cfg.adaptive.epsilon, 1e-8);
        assert_eq!(cfg.convention, FieldConvention::PaperOriented);
        cfg.validate().unwrap();

        let mut bad = cfg;
        bad.adaptive.beta2 = 1.0;
        assert!(bad.validate().is_err());
        let mut bad = cfg;
        bad.baseline.eta = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = cfg;
        bad.noise_std = -1.0;
        assert!(bad.validate().is_err());

        assert!(serde_json::from_str::<SolverConfig>(r#"{"kind":"gn","momentum":0.9}"#).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in SolverKind::ALL {
            let s = serde_json::to_string(&kind).unwrap();
            assert_eq!(serde_json::from_str::<SolverKind>(&s).unwrap(), kind);
        }
        assert_eq!(serde_json::to_string(&SolverKind::ConOpt).unwrap(), "\"conopt\"");
        assert_eq!(serde_json::to_string(&SolverKind::GnAdaptive).unwrap(), "\"gn_adaptive\"");
    }
}
