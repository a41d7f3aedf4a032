use std::time::Instant;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::record::RunRecord;
use crate::solvers::{Solver, TrajectoryRow, Verdict};
use crate::vecfield::ParamPoint;

use super::energy::energy_distance;
use super::gan::{gan_gradients, gan_losses, GanBatch, GanLoss, ToyGanConfig};
use super::mlp::{init_params, mlp_forward};

// independent ChaCha streams derived from the run seed
const INIT_STREAM: u64 = 0;
const DATA_STREAM: u64 = 1;
const EVAL_STREAM: u64 = 2;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seeded Glorot initialisation of both networks, generator first.
pub fn initial_params(cfg: &ToyGanConfig) -> ParamPoint {
    let mut rng = rng_for(cfg.seed, INIT_STREAM);
    let x = init_params(&cfg.generator_spec(), &mut rng);
    let y = init_params(&cfg.discriminator_spec(), &mut rng);
    ParamPoint::from_blocks(&x, &y).expect("initial parameters are finite")
}

/// Fixed evaluation set: the same latent draws and target samples are used
/// at every evaluation of a run.
pub struct Evaluator {
    noise: DMatrix<f64>,
    target: DMatrix<f64>,
}

impl Evaluator {
    pub fn new(cfg: &ToyGanConfig) -> Self {
        let mut rng = rng_for(cfg.seed, EVAL_STREAM);
        let n = cfg.eval_samples;
        let noise = DMatrix::from_fn(cfg.latent_dim, n, |_, _| StandardNormal.sample(&mut rng));
        let target = cfg.target.sample(&mut rng, n);
        Self { noise, target }
    }

    pub fn generate(&self, cfg: &ToyGanConfig, p: &ParamPoint) -> Result<DMatrix<f64>> {
        mlp_forward(&cfg.generator_spec(), p.x(), &self.noise)
    }

    pub fn energy_distance(&self, cfg: &ToyGanConfig, p: &ParamPoint) -> Result<f64> {
        energy_distance(&self.generate(cfg, p)?, &self.target)
    }
}

fn clip_discriminator(p: ParamPoint, clip: f64) -> Result<ParamPoint> {
    let split = p.split();
    let mut values = p.into_values();
    for w in &mut values[split..] {
        *w = w.clamp(-clip, clip);
    }
    ParamPoint::new(values, split)
}

/// Result of a training run including the final parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GanRun {
    pub record: RunRecord,
    pub params: ParamPoint,
}

pub fn train_toy_gan(cfg: &ToyGanConfig) -> Result<RunRecord> {
    Ok(train_toy_gan_full(cfg)?.record)
}

/// Simultaneous updates of both players for `cfg.steps` minibatches.
///
/// Row `t` holds the minibatch field norm and discriminator objective at the
/// parameters after `t` steps; energy distance is logged at step 0, every
/// `eval_every` steps and at the final step.
pub fn train_toy_gan_full(cfg: &ToyGanConfig) -> Result<GanRun> {
    cfg.validate()?;
    let mut solver = Solver::new(cfg.solver)?;
    let mut data = rng_for(cfg.seed, DATA_STREAM);
    let eval = Evaluator::new(cfg);
    let start = Instant::now();

    let mut p = initial_params(cfg);
    if let GanLoss::WganClipped { clip } = cfg.loss {
        p = clip_discriminator(p, clip)?;
    }
    let mut rows = Vec::with_capacity(cfg.steps + 1);
    let mut verdict = Verdict::IterCap;
    let mut t = 0;
    loop {
        let batch = GanBatch::sample(cfg, &mut data);
        let grads = gan_gradients(cfg, &p, &batch);
        let losses = gan_losses(cfg, &p, &batch);
        let (grads, losses) = match (grads, losses) {
            (Ok(g), Ok(l)) => (g, l),
            (Err(Error::NonFinite { .. }), _) | (_, Err(Error::NonFinite { .. })) => {
                verdict = Verdict::Diverged;
                break;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let field_norm = grads.oriented(cfg.solver.convention).norm();
        let metric =
            if t % cfg.eval_every == 0 || t == cfg.steps { Some(eval.energy_distance(cfg, &p)?) } else { None };
        rows.push(TrajectoryRow {
            iter: t,
            wall_time: start.elapsed().as_secs_f64(),
            field_norm,
            distance: None,
            value: losses.discriminator,
            metric,
        });
        if !field_norm.is_finite() || !losses.discriminator.is_finite() || metric.is_some_and(|m| !m.is_finite()) {
            verdict = Verdict::Diverged;
            break;
        }
        if t == cfg.steps {
            break;
        }
        let next = match solver.step(&p, &grads, None) {
            Ok(next) => next,
            Err(Error::NonFinite { .. }) => {
                verdict = Verdict::Diverged;
                break;
            }
            Err(e) => return Err(e),
        };
        p = match cfg.loss {
            GanLoss::WganClipped { clip } => clip_discriminator(next, clip)?,
            _ => next,
        };
        t += 1;
        if p.norm() >= cfg.blowup {
            verdict = Verdict::Diverged;
            break;
        }
    }
    Ok(GanRun { record: RunRecord::new(cfg, rows, verdict)?, params: p })
}
