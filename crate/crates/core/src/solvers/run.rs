use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecfield::{player_gradients, GameOracle, ParamPoint, PlayerGradients};

use super::{Solver, SolverConfig};

/// When to stop iterating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StoppingRule {
    /// Converged once `‖v‖ ≤ tol`. Zero disables the check.
    pub tol: f64,
    /// Diverged once `‖p‖ ≥ blowup`.
    pub blowup: f64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self { tol: 1e-8, blowup: 1e6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Converged,
    Diverged,
    IterCap,
}

/// Metrics after `iter` completed steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub iter: usize,
    /// Seconds since the run started (monotonic clock).
    pub wall_time: f64,
    /// Noise-free `‖v(p)‖`.
    pub field_norm: f64,
    /// Distance to the nearest known equilibrium.
    pub distance: Option<f64>,
    pub value: f64,
    /// Task metric, when one is logged at this row.
    pub metric: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    pub verdict: Verdict,
    /// Last finite iterate.
    pub points: Vec<ParamPoint>,
}

impl Trajectory {
    pub fn final_point(&self) -> &ParamPoint {
        self.points.last().expect("trajectory holds the initial point")
    }
}

fn nearest(nash: &[ParamPoint], p: &ParamPoint) -> Option<f64> {
    nash.iter().map(|q| q.distance(p)).min_by(f64::total_cmp)
}

fn is_divergence(err: &Error) -> bool {
    matches!(err, Error::NonFinite { .. })
}

/// Iterates the configured rule from `p0` for at most `iters` steps.
///
/// Every iterate is kept in `points` (the analysis code needs the raw
/// sequence); rows carry the scalar metrics. Non-finite iterates end the run
/// with [`Verdict::Diverged`] instead of an error.
pub fn run_solver(
    p0: &ParamPoint,
    oracle: &dyn GameOracle,
    cfg: &SolverConfig,
    iters: usize,
    stop: &StoppingRule,
    seed: u64,
) -> Result<Trajectory> {
    if iters == 0 {
        return Err(Error::InvalidParameter("iters must be at least 1".into()));
    }
    let mut solver = Solver::new(*cfg)?;
    let nash = oracle.nash_points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = (cfg.noise_std > 0.0).then(|| Normal::new(0.0, cfg.noise_std).expect("validated noise std"));
    let start = Instant::now();

    let mut p = p0.clone();
    let mut grads = player_gradients(oracle, &p)?;
    let row = |iter: usize, p: &ParamPoint, grads: &PlayerGradients| {
        let field_norm = grads.oriented(cfg.convention).norm();
        TrajectoryRow {
            iter,
            wall_time: start.elapsed().as_secs_f64(),
            field_norm,
            distance: nearest(&nash, p),
            value: oracle.value(p.x(), p.y()),
            metric: None,
        }
    };
    let mut rows = vec![row(0, &p, &grads)];
    let mut points = vec![p.clone()];
    if rows[0].field_norm <= stop.tol {
        return Ok(Trajectory { rows, verdict: Verdict::Converged, points });
    }

    let mut verdict = Verdict::IterCap;
    for t in 1..=iters {
        let mut sample = grads.clone();
        if let Some(dist) = &noise {
            for g in sample.grad_x.iter_mut().chain(sample.grad_y.iter_mut()) {
                *g += dist.sample(&mut rng);
            }
        }
        let hessian = if cfg.kind.is_second_order() { oracle.hessian(p.x(), p.y()) } else { None };
        let next = match solver.step(&p, &sample, hessian.as_ref()) {
            Ok(next) => next,
            Err(e) if is_divergence(&e) => {
                verdict = Verdict::Diverged;
                break;
            }
            Err(e) => return Err(e),
        };
        grads = match player_gradients(oracle, &next) {
            Ok(g) => g,
            Err(e) if is_divergence(&e) => {
                verdict = Verdict::Diverged;
                break;
            }
            Err(e) => return Err(e),
        };
        p = next;
        let r = row(t, &p, &grads);
        let (field_norm, value) = (r.field_norm, r.value);
        rows.push(r);
        points.push(p.clone());
        if !field_norm.is_finite() || !value.is_finite() {
            verdict = Verdict::Diverged;
            break;
        }
        if field_norm <= stop.tol {
            verdict = Verdict::Converged;
            break;
        }
        if p.norm() >= stop.blowup {
            verdict = Verdict::Diverged;
            break;
        }
    }
    Ok(Trajectory { rows, verdict, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{make_bilinear, make_quadratic, QuadraticGameSpec};
    use crate::precond::GNConfig;
    use crate::solvers::SolverKind;
    use crate::vecfield::FieldConvention;

    #[test]
    fn gda_on_bilinear_expands_by_exact_factor() {
        let game = make_bilinear(&[vec![1.0]]).unwrap();
        let p0 = ParamPoint::from_blocks(&[1.0], &[0.0]).unwrap();
        let h = 0.01;
        let mut cfg = SolverConfig::new(SolverKind::Gda);
        cfg.gn.step = h;
        let stop = StoppingRule { tol: 1e-8, blowup: 1.5 };
        let traj = run_solver(&p0, &game, &cfg, 10_000, &stop, 0).unwrap();
        assert_eq!(traj.verdict, Verdict::Diverged);
        for (t, q) in traj.points.iter().enumerate() {
            let expected = (1.0 + h * h).powf(t as f64 / 2.0);
            assert!((q.norm() - expected).abs() <= 1e-9 * expected);
        }
        assert!(traj.rows.windows(2).all(|w| w[1].distance > w[0].distance));
    }

    #[test]
    fn gn_descent_ascent_converges() {
        let game = make_quadratic(&QuadraticGameSpec::scalar(1.0, 1.0, 0.0)).unwrap();
        let gn = GNConfig::from_sigma(0.5, 0.1).unwrap();
        let mut cfg = SolverConfig::new(SolverKind::Gn).with_convention(FieldConvention::DescentAscent);
        cfg.gn = gn;
        // inside the region ‖v‖² < 1 − λ where the step points along v
        let p0 = ParamPoint::from_blocks(&[0.4], &[-0.3]).unwrap();
        let traj = run_solver(&p0, &game, &cfg, 400, &StoppingRule::default(), 0).unwrap();
        assert_eq!(traj.verdict, Verdict::Converged);
        assert!(traj.final_point().norm() <= 1e-8);
        assert!(traj.rows.len() <= 401);
    }

    #[test]
    fn single_iteration_has_two_rows() {
        let game = make_quadratic(&QuadraticGameSpec::scalar(1.0, 1.0, 0.3)).unwrap();
        let p0 = ParamPoint::from_blocks(&[1.0], &[-1.0]).unwrap();
        for kind in SolverKind::ALL {
            let traj = run_solver(&p0, &game, &SolverConfig::new(kind), 1, &StoppingRule::default(), 0).unwrap();
            assert_eq!(traj.rows.len(), 2, "{kind:?}");
            assert_eq!(traj.verdict, Verdict::IterCap);
            assert_eq!(traj.rows[1].iter, 1);
        }
    }

    #[test]
    fn zero_iters_rejected() {
        let game = make_bilinear(&[vec![1.0]]).unwrap();
        let p0 = ParamPoint::zeros(1, 1);
        assert!(run_solver(&p0, &game, &SolverConfig::new(SolverKind::Gda), 0, &StoppingRule::default(), 0).is_err());
    }

    #[test]
    fn overflow_is_divergence_not_error() {
        let game = make_quadratic(&QuadraticGameSpec::scalar(1.0, 1.0, 0.0)).unwrap();
        let mut cfg = SolverConfig::new(SolverKind::Gda);
        cfg.gn.step = 1e150;
        let p0 = ParamPoint::from_blocks(&[1e150], &[1e150]).unwrap();
        let stop = StoppingRule { tol: 0.0, blowup: f64::INFINITY };
        let traj = run_solver(&p0, &game, &cfg, 50, &stop, 0).unwrap();
        assert_eq!(traj.verdict, Verdict::Diverged);
    }

    #[test]
    fn noise_is_seeded() {
        let game = make_quadratic(&QuadraticGameSpec::scalar(1.0, 1.0, 0.5)).unwrap();
        let mut cfg = SolverConfig::new(SolverKind::Gn).with_convention(FieldConvention::DescentAscent);
        cfg.gn = GNConfig::from_sigma(0.5, 0.1).unwrap();
        cfg.noise_std = 0.05;
        let p0 = ParamPoint::from_blocks(&[1.0], &[1.0]).unwrap();
        let a = run_solver(&p0, &game, &cfg, 50, &StoppingRule::default(), 7).unwrap();
        let b = run_solver(&p0, &game, &cfg, 50, &StoppingRule::default(), 7).unwrap();
        let c = run_solver(&p0, &game, &cfg, 50, &StoppingRule::default(), 8).unwrap();
        assert_eq!(a.points, b.points);
        assert_ne!(a.points, c.points);
    }
}
