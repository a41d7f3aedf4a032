//! Experiment configuration files.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use minimax_core::games::GameSpec;
use minimax_core::solvers::{SolverConfig, StoppingRule};
use minimax_core::toygan::ToyGanConfig;
use minimax_core::vecfield::ParamPoint;
use minimax_core::FieldConvention;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

fn default_iters() -> usize {
    1000
}

fn default_measure_iters() -> usize {
    2000
}

/// Options of the `analyze` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeOptions {
    /// Also run the iteration from `init` and compare its rate with the
    /// predicted spectral radius.
    #[serde(default)]
    pub measure: bool,
    #[serde(default = "default_measure_iters")]
    pub iters: usize,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self { measure: false, iters: default_measure_iters() }
    }
}

/// A solver run on an analytic game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameRunConfig {
    pub game: GameSpec,
    pub solver: SolverConfig,
    /// Starting point `[x; y]`; defaults to 0.1 in every coordinate.
    #[serde(default)]
    pub init: Option<Vec<f64>>,
    #[serde(default = "default_iters")]
    pub iters: usize,
    #[serde(default)]
    pub stop: StoppingRule,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub analyze: AnalyzeOptions,
}

impl GameRunConfig {
    pub fn initial_point(&self) -> Result<ParamPoint> {
        let (m, n) = self.game.build()?.dims();
        let values = self.init.clone().unwrap_or_else(|| vec![0.1; m + n]);
        if values.len() != m + n {
            bail!("init: expected {} values (x then y), got {}", m + n, values.len());
        }
        Ok(ParamPoint::new(values, m)?)
    }

    /// Replaces `init: None` by the default it stands for, so snapshots are
    /// explicit.
    fn fill_defaults(&mut self) -> Result<()> {
        let p0 = self.initial_point()?;
        self.init = Some(p0.into_values());
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate().context("solver")?;
        self.game.build().context("game")?;
        self.initial_point()?;
        if self.iters == 0 {
            bail!("iters: must be at least 1");
        }
        if !(self.stop.tol >= 0.0) || !(self.stop.blowup > 0.0) {
            bail!("stop: need tol >= 0 and blowup > 0");
        }
        if self.analyze.iters == 0 {
            bail!("analyze.iters: must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExperimentConfig {
    Game(GameRunConfig),
    Gan(ToyGanConfig),
}

impl ExperimentConfig {
    pub fn solver_mut(&mut self) -> &mut SolverConfig {
        match self {
            ExperimentConfig::Game(c) => &mut c.solver,
            ExperimentConfig::Gan(c) => &mut c.solver,
        }
    }

    pub fn solver(&self) -> &SolverConfig {
        match self {
            ExperimentConfig::Game(c) => &c.solver,
            ExperimentConfig::Gan(c) => &c.solver,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ExperimentConfig::Game(c) => c.seed,
            ExperimentConfig::Gan(c) => c.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            ExperimentConfig::Game(c) => c.seed = seed,
            ExperimentConfig::Gan(c) => c.seed = seed,
        }
    }

    pub fn set_convention(&mut self, conv: FieldConvention) {
        self.solver_mut().convention = conv;
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ExperimentConfig::Game(c) => c.validate(),
            ExperimentConfig::Gan(c) => Ok(c.validate()?),
        }
    }
}

/// Strict deserialization with the failing field path in the message.
pub fn from_value<T: DeserializeOwned>(value: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        anyhow!("{path}: {}", e.into_inner())
    })
}

/// Parses and validates a configuration document. Game experiments are
/// recognised by a `game` key, GAN experiments by a `target` key.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let value: serde_json::Value = serde_json::from_str(text).context("config is not valid JSON")?;
    let cfg = parse_config_value(value)?;
    Ok(cfg)
}

pub fn parse_config_value(value: serde_json::Value) -> Result<ExperimentConfig> {
    let obj = value.as_object().ok_or_else(|| anyhow!("config must be a JSON object"))?;
    let mut cfg = match (obj.contains_key("game"), obj.contains_key("target")) {
        (true, false) => ExperimentConfig::Game(from_value(value)?),
        (false, true) => ExperimentConfig::Gan(from_value(value)?),
        (true, true) => bail!("config has both `game` and `target`; choose one experiment"),
        (false, false) => bail!("config needs a `game` (solver run) or a `target` (toy GAN)"),
    };
    if let ExperimentConfig::Game(c) = &mut cfg {
        c.fill_defaults()?;
    }
    cfg.validate().context("invalid config")?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use minimax_core::solvers::SolverKind;

    const MINIMAL: &str = r#"{"game":{"kind":"quadratic","a":1.0,"c":1.0,"b":[[0.0]]},"solver":{"kind":"gn"}}"#;

    #[test]
    fn minimal_config_records_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        let snapshot = serde_json::to_value(&cfg).unwrap();
        assert_eq!(snapshot["solver"]["gn"]["lambda"], 0.1);
        assert_eq!(snapshot["solver"]["gn"]["step"], 1e-5);
        assert_eq!(snapshot["solver"]["adaptive"]["beta2"], 0.99);
        assert_eq!(snapshot["solver"]["adaptive"]["epsilon"], 1e-8);
        assert_eq!(snapshot["init"], serde_json::json!([0.1, 0.1]));
        assert_eq!(snapshot["stop"]["tol"], 1e-8);
        assert_eq!(cfg.solver().kind, SolverKind::Gn);
    }

    #[test]
    fn negative_lambda_names_the_invariant() {
        let text = r#"{"game":{"kind":"bilinear","b":[[1.0]]},"solver":{"kind":"gn","gn":{"lambda":-1}}}"#;
        let err = format!("{:#}", parse_config(text).unwrap_err());
        assert!(err.contains("lambda > 0"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected_with_path() {
        let text = r#"{"game":{"kind":"bilinear","b":[[1.0]]},"solver":{"kind":"gn","momentum":0.9}}"#;
        let err = format!("{:#}", parse_config(text).unwrap_err());
        assert!(err.contains("momentum") && err.contains("solver"), "{err}");
        let text = r#"{"game":{"kind":"bilinear","b":[[1.0]]},"solver":{"kind":"gn"},"momentum":1}"#;
        assert!(format!("{:#}", parse_config(text).unwrap_err()).contains("momentum"));
    }

    #[test]
    fn type_mismatch_and_missing_field() {
        let text = r#"{"game":{"kind":"bilinear","b":[[1.0]]},"solver":{"kind":"gn","gn":{"lambda":"big"}}}"#;
        let err = format!("{:#}", parse_config(text).unwrap_err());
        assert!(err.contains("solver.gn.lambda"), "{err}");
        let text = r#"{"game":{"kind":"bilinear","b":[[1.0]]}}"#;
        let err = format!("{:#}", parse_config(text).unwrap_err());
        assert!(err.contains("solver"), "{err}");
    }

    #[test]
    fn round_trip() {
        let cfg = parse_config(MINIMAL).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(parse_config(&text).unwrap(), cfg);
        let gan = r#"{"target":{"kind":"gaussian1d","mean":2.0,"std":0.5},"solver":{"kind":"gn_adaptive"}}"#;
        let cfg = parse_config(gan).unwrap();
        assert!(matches!(cfg, ExperimentConfig::Gan(_)));
        assert_eq!(parse_config(&serde_json::to_string(&cfg).unwrap()).unwrap(), cfg);
    }

    proptest::proptest! {
        #[test]
        fn serialized_configs_parse_back(
            kind in proptest::sample::select(vec!["gda", "gn", "gn_adaptive", "sga", "conopt", "ogda", "cgd"]),
            lambda in 1e-3f64..5.0,
            step in 1e-6f64..1.0,
            eps in 1e-9f64..1.0,
            paper in proptest::bool::ANY,
            seed in proptest::num::u64::ANY,
            iters in 1usize..100_000,
            init in proptest::collection::vec(-1e3f64..1e3, 3),
        ) {
            let conv = if paper { "paper" } else { "descent-ascent" };
            let text = serde_json::json!({
                "game": {"kind": "quadratic", "a": 0.5, "c": 2.0, "b": [[0.1], [0.2]]},
                "solver": {"kind": kind, "gn": {"lambda": lambda, "step": step},
                           "adaptive": {"epsilon": eps}, "convention": conv},
                "init": init, "seed": seed, "iters": iters,
            })
            .to_string();
            let cfg = parse_config(&text).unwrap();
            proptest::prop_assert_eq!(parse_config(&serde_json::to_string(&cfg).unwrap()).unwrap(), cfg);
        }
    }

    #[test]
    fn wrong_init_length() {
        let text = r#"{"game":{"kind":"bilinear","b":[[1.0]]},"solver":{"kind":"gda"},"init":[1,2,3]}"#;
        assert!(format!("{:#}", parse_config(text).unwrap_err()).contains("init"));
    }
}
