use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solvers::{SolverConfig, SolverKind};
use crate::vecfield::{FieldConvention, JointVector, ParamPoint, PlayerGradients};

use super::mlp::{mlp_backward, mlp_forward, Activation, FinalActivation, MlpSpec};

/// Distribution the generator should learn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Target {
    #[serde(rename = "gaussian1d")]
    Gaussian1D { mean: f64, std: f64 },
    #[serde(rename = "ring2d")]
    Ring2D { modes: usize, radius: f64, mode_std: f64 },
}

impl Target {
    pub fn dim(&self) -> usize {
        match self {
            Target::Gaussian1D { .. } => 1,
            Target::Ring2D { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Target::Gaussian1D { mean, std } => mean.is_finite() && std.is_finite() && std >= 0.0,
            Target::Ring2D { modes, radius, mode_std } => {
                modes >= 1 && radius.is_finite() && mode_std.is_finite() && mode_std >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid target {self:?}")))
        }
    }

    /// `dim × n` sample matrix.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> DMatrix<f64> {
        match *self {
            Target::Gaussian1D { mean, std } => {
                let d = Normal::new(mean, std).expect("validated target");
                DMatrix::from_fn(1, n, |_, _| d.sample(rng))
            }
            Target::Ring2D { modes, radius, mode_std } => {
                let noise = Normal::new(0.0, mode_std).expect("validated target");
                let mut out = DMatrix::zeros(2, n);
                for j in 0..n {
                    let k = rng.random_range(0..modes);
                    let angle = std::f64::consts::TAU * k as f64 / modes as f64;
                    out[(0, j)] = radius * angle.cos() + noise.sample(rng);
                    out[(1, j)] = radius * angle.sin() + noise.sample(rng);
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GanLoss {
    /// Logistic discriminator; the generator minimises `−log D(G(z))`.
    NonSaturating,
    /// Critic `E D(real) − E D(fake)` with weights clipped to `[−clip, clip]`.
    WganClipped { clip: f64 },
    /// Critic with gradient penalty `λ_gp E(‖∇D(x̂)‖ − 1)²`. The penalty's
    /// parameter gradient is approximated by central differences with step
    /// `fd_step`.
    WganGpFd { lambda_gp: f64, fd_step: f64 },
}

impl Default for GanLoss {
    fn default() -> Self {
        GanLoss::WganClipped { clip: 0.01 }
    }
}

impl GanLoss {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GanLoss::NonSaturating => Ok(()),
            GanLoss::WganClipped { clip } if clip > 0.0 && clip.is_finite() => Ok(()),
            GanLoss::WganClipped { clip } => {
                Err(Error::InvalidParameter(format!("clip must satisfy clip > 0, got {clip}")))
            }
            GanLoss::WganGpFd { lambda_gp, fd_step }
                if lambda_gp >= 0.0 && lambda_gp.is_finite() && fd_step > 0.0 && fd_step.is_finite() =>
            {
                Ok(())
            }
            GanLoss::WganGpFd { lambda_gp, fd_step } => Err(Error::InvalidParameter(format!(
                "need lambda_gp >= 0 and fd_step > 0, got {lambda_gp} and {fd_step}"
            ))),
        }
    }
}

fn default_latent_dim() -> usize {
    1
}
fn default_batch_size() -> usize {
    64
}
fn default_hidden() -> Vec<usize> {
    vec![16]
}
fn default_steps() -> usize {
    20_000
}
fn default_eval_every() -> usize {
    500
}
fn default_eval_samples() -> usize {
    4096
}
fn default_blowup() -> f64 {
    1e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyGanConfig {
    pub target: Target,
    #[serde(default = "default_latent_dim")]
    pub latent_dim: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_hidden")]
    pub generator_hidden: Vec<usize>,
    #[serde(default = "default_hidden")]
    pub discriminator_hidden: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub loss: GanLoss,
    pub solver: SolverConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Energy distance is logged every this many steps.
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
    #[serde(default = "default_eval_samples")]
    pub eval_samples: usize,
    /// Diverged once `‖p‖ ≥ blowup`.
    #[serde(default = "default_blowup")]
    pub blowup: f64,
}

impl ToyGanConfig {
    pub fn new(target: Target, loss: GanLoss, solver: SolverConfig) -> Self {
        Self {
            target,
            latent_dim: default_latent_dim(),
            batch_size: default_batch_size(),
            generator_hidden: default_hidden(),
            discriminator_hidden: default_hidden(),
            activation: Activation::default(),
            loss,
            solver,
            seed: 0,
            steps: default_steps(),
            eval_every: default_eval_every(),
            eval_samples: default_eval_samples(),
            blowup: default_blowup(),
        }
    }

    pub fn generator_spec(&self) -> MlpSpec {
        let mut widths = vec![self.latent_dim];
        widths.extend(&self.generator_hidden);
        widths.push(self.target.dim());
        MlpSpec { widths, activation: self.activation, final_activation: FinalActivation::Identity }
    }

    /// The discriminator always emits a logit; the non-saturating loss
    /// applies the sigmoid inside its log terms.
    pub fn discriminator_spec(&self) -> MlpSpec {
        let mut widths = vec![self.target.dim()];
        widths.extend(&self.discriminator_hidden);
        widths.push(1);
        MlpSpec { widths, activation: self.activation, final_activation: FinalActivation::Identity }
    }

    /// `(generator, discriminator)` parameter counts.
    pub fn dims(&self) -> (usize, usize) {
        (self.generator_spec().num_params(), self.discriminator_spec().num_params())
    }

    pub fn validate(&self) -> Result<()> {
        self.target.validate()?;
        self.loss.validate()?;
        self.solver.validate()?;
        self.generator_spec().validate()?;
        self.discriminator_spec().validate()?;
        if self.latent_dim == 0 {
            return Err(Error::InvalidParameter("latent_dim must be at least 1".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::InvalidParameter(format!("batch_size must be at least 2, got {}", self.batch_size)));
        }
        if self.eval_every == 0 || self.eval_samples == 0 {
            return Err(Error::InvalidParameter("eval_every and eval_samples must be at least 1".into()));
        }
        if !matches!(self.solver.kind, SolverKind::Gda | SolverKind::Gn | SolverKind::GnAdaptive) {
            return Err(Error::SecondOrderUnavailable { kind: self.solver.kind.name() });
        }
        if self.solver.noise_std != 0.0 {
            return Err(Error::InvalidParameter(
                "noise_std is not used by GAN training; minibatches are already stochastic".into(),
            ));
        }
        if !(self.blowup > 0.0) {
            return Err(Error::InvalidParameter(format!("blowup must be positive, got {}", self.blowup)));
        }
        Ok(())
    }
}

/// One minibatch: real samples, latent noise and interpolation weights for
/// the gradient penalty, all stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct GanBatch {
    pub real: DMatrix<f64>,
    pub noise: DMatrix<f64>,
    /// One weight in `[0, 1]` per sample.
    pub mix: Vec<f64>,
}

impl GanBatch {
    pub fn sample<R: Rng + ?Sized>(cfg: &ToyGanConfig, rng: &mut R) -> Self {
        let n = cfg.batch_size;
        let real = cfg.target.sample(rng, n);
        let noise = DMatrix::from_fn(cfg.latent_dim, n, |_, _| StandardNormal.sample(rng));
        let unit = Uniform::new_inclusive(0.0, 1.0).expect("unit interval");
        let mix = (0..n).map(|_| unit.sample(rng)).collect();
        Self { real, noise, mix }
    }

    pub fn len(&self) -> usize {
        self.real.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Minibatch objectives: the generator minimises `generator`, the
/// discriminator maximises `discriminator`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GanLosses {
    pub generator: f64,
    pub discriminator: f64,
}

fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn check_batch(cfg: &ToyGanConfig, p: &ParamPoint, batch: &GanBatch) -> Result<()> {
    if batch.is_empty() || batch.noise.ncols() == 0 {
        return Err(Error::Empty("GAN minibatch"));
    }
    if batch.noise.ncols() != batch.len() || batch.mix.len() != batch.len() {
        return Err(Error::DimensionMismatch {
            expected: batch.len(),
            got: batch.noise.ncols(),
            context: "GAN minibatch columns",
        });
    }
    let (m, n) = cfg.dims();
    if p.dims() != (m, n) {
        return Err(Error::DimensionMismatch {
            expected: m + n,
            got: p.len(),
            context: "GAN parameters (generator | discriminator)",
        });
    }
    Ok(())
}

fn interpolates(real: &DMatrix<f64>, fake: &DMatrix<f64>, mix: &[f64]) -> DMatrix<f64> {
    let mut out = fake.clone();
    for (j, w) in mix.iter().enumerate() {
        for i in 0..out.nrows() {
            out[(i, j)] = w * real[(i, j)] + (1.0 - w) * fake[(i, j)];
        }
    }
    out
}

/// `E (‖∇ₓ D(x̂)‖ − 1)²` over the interpolates.
fn gradient_penalty(d_spec: &MlpSpec, d: &[f64], xhat: &DMatrix<f64>) -> Result<f64> {
    let ones = DMatrix::from_element(1, xhat.ncols(), 1.0);
    let (_, gin) = mlp_backward(d_spec, d, xhat, &ones)?;
    let total: f64 = gin.column_iter().map(|c| (c.norm() - 1.0).powi(2)).sum();
    Ok(total / xhat.ncols() as f64)
}

pub fn gan_losses(cfg: &ToyGanConfig, p: &ParamPoint, batch: &GanBatch) -> Result<GanLosses> {
    check_batch(cfg, p, batch)?;
    let (g_spec, d_spec) = (cfg.generator_spec(), cfg.discriminator_spec());
    let fake = mlp_forward(&g_spec, p.x(), &batch.noise)?;
    let lr = mlp_forward(&d_spec, p.y(), &batch.real)?;
    let lf = mlp_forward(&d_spec, p.y(), &fake)?;
    let n = batch.len() as f64;
    Ok(match cfg.loss {
        GanLoss::NonSaturating => GanLosses {
            generator: lf.iter().map(|t| softplus(-t)).sum::<f64>() / n,
            discriminator: -(lr.iter().map(|t| softplus(-t)).sum::<f64>()
                + lf.iter().map(|t| softplus(*t)).sum::<f64>())
                / n,
        },
        GanLoss::WganClipped { .. } | GanLoss::WganGpFd { .. } => {
            let mut critic = (lr.sum() - lf.sum()) / n;
            if let GanLoss::WganGpFd { lambda_gp, .. } = cfg.loss {
                if lambda_gp != 0.0 {
                    let xhat = interpolates(&batch.real, &fake, &batch.mix);
                    critic -= lambda_gp * gradient_penalty(&d_spec, p.y(), &xhat)?;
                }
            }
            GanLosses { generator: -lf.sum() / n, discriminator: critic }
        }
    })
}

/// Gradients `∇ₓ` of the generator objective and `∇_y` of the
/// discriminator objective, arranged like the gradients of a zero-sum `f`.
pub fn gan_gradients(cfg: &ToyGanConfig, p: &ParamPoint, batch: &GanBatch) -> Result<PlayerGradients> {
    check_batch(cfg, p, batch)?;
    let (g_spec, d_spec) = (cfg.generator_spec(), cfg.discriminator_spec());
    let (gx, dy) = (p.x(), p.y());
    let fake = mlp_forward(&g_spec, gx, &batch.noise)?;
    let lr = mlp_forward(&d_spec, dy, &batch.real)?;
    let lf = mlp_forward(&d_spec, dy, &fake)?;
    let n = batch.len() as f64;

    // upstream gradients with respect to the logits
    let (up_real, up_fake_d, up_fake_g) = match cfg.loss {
        GanLoss::NonSaturating => {
            (lr.map(|t| sigmoid(-t) / n), lf.map(|t| -sigmoid(t) / n), lf.map(|t| -sigmoid(-t) / n))
        }
        GanLoss::WganClipped { .. } | GanLoss::WganGpFd { .. } => {
            (lr.map(|_| 1.0 / n), lf.map(|_| -1.0 / n), lf.map(|_| -1.0 / n))
        }
    };

    let (d_real, _) = mlp_backward(&d_spec, dy, &batch.real, &up_real)?;
    let (d_fake, _) = mlp_backward(&d_spec, dy, &fake, &up_fake_d)?;
    let mut grad_y: Vec<f64> = d_real.iter().zip(&d_fake).map(|(a, b)| a + b).collect();

    let (_, through_d) = mlp_backward(&d_spec, dy, &fake, &up_fake_g)?;
    let (grad_x, _) = mlp_backward(&g_spec, gx, &batch.noise, &through_d)?;

    if let GanLoss::WganGpFd { lambda_gp, fd_step } = cfg.loss {
        if lambda_gp != 0.0 {
            let xhat = interpolates(&batch.real, &fake, &batch.mix);
            let mut probe = dy.to_vec();
            for (j, gy) in grad_y.iter_mut().enumerate() {
                let orig = probe[j];
                probe[j] = orig + fd_step;
                let plus = gradient_penalty(&d_spec, &probe, &xhat)?;
                probe[j] = orig - fd_step;
                let minus = gradient_penalty(&d_spec, &probe, &xhat)?;
                probe[j] = orig;
                *gy -= lambda_gp * (plus - minus) / (2.0 * fd_step);
            }
        }
    }
    Ok(PlayerGradients { grad_x, grad_y })
}

/// Minibatch estimate of the joint field under `conv`.
pub fn gan_field(cfg: &ToyGanConfig, p: &ParamPoint, batch: &GanBatch, conv: FieldConvention) -> Result<JointVector> {
    Ok(gan_gradients(cfg, p, batch)?.oriented(conv))
}
