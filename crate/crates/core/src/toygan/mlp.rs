//! Fully connected network with a flat parameter vector and a hand-written
//! reverse pass.
//!
//! Batches are column-major `features × batch` matrices. Parameters are laid
//! out layer by layer: the weight matrix in row-major order (`fan_out` rows of
//! `fan_in` entries), then the bias.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Activation {
    Identity,
    #[default]
    Tanh,
    LeakyRelu {
        slope: f64,
    },
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
            Activation::LeakyRelu { slope } => {
                if z > 0.0 {
                    z
                } else {
                    slope * z
                }
            }
        }
    }

    /// Derivative given the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - a * a,
            Activation::LeakyRelu { slope } => {
                if z > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FinalActivation {
    #[default]
    Identity,
    Sigmoid,
}

impl FinalActivation {
    fn as_activation(self) -> Option<Activation> {
        match self {
            FinalActivation::Identity => Some(Activation::Identity),
            FinalActivation::Sigmoid => None,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    /// `[input, hidden..., output]`.
    pub widths: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub final_activation: FinalActivation,
}

/// Position of one layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSlot {
    pub fan_in: usize,
    pub fan_out: usize,
    /// Offset of the weights; the bias follows at `offset + fan_in·fan_out`.
    pub offset: usize,
}

impl LayerSlot {
    pub fn weights(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.fan_in * self.fan_out
    }

    pub fn bias(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.fan_in * self.fan_out;
        start..start + self.fan_out
    }
}

impl MlpSpec {
    pub fn new(widths: Vec<usize>, activation: Activation, final_activation: FinalActivation) -> Result<Self> {
        let spec = Self { widths, activation, final_activation };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 3 {
            return Err(Error::InvalidParameter(format!(
                "an MLP needs at least one hidden layer, got widths {:?}",
                self.widths
            )));
        }
        if self.widths.contains(&0) {
            return Err(Error::InvalidParameter(format!("layer widths must be at least 1, got {:?}", self.widths)));
        }
        if let Activation::LeakyRelu { slope } = self.activation {
            if !slope.is_finite() {
                return Err(Error::InvalidParameter(format!("leaky slope must be finite, got {slope}")));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().expect("validated widths")
    }

    pub fn layers(&self) -> Vec<LayerSlot> {
        let mut offset = 0;
        self.widths
            .windows(2)
            .map(|w| {
                let slot = LayerSlot { fan_in: w[0], fan_out: w[1], offset };
                offset += w[0] * w[1] + w[1];
                slot
            })
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    fn activation_of(&self, layer: usize) -> Option<Activation> {
        if layer + 2 == self.widths.len() {
            self.final_activation.as_activation()
        } else {
            Some(self.activation)
        }
    }

    fn check(&self, params: &[f64], input: &DMatrix<f64>) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::DimensionMismatch {
                expected: self.num_params(),
                got: params.len(),
                context: "MLP parameter vector",
            });
        }
        if input.nrows() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: input.nrows(),
                context: "MLP input features",
            });
        }
        Ok(())
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_params<R: Rng + ?Sized>(spec: &MlpSpec, rng: &mut R) -> Vec<f64> {
    let mut params = vec![0.0; spec.num_params()];
    for slot in spec.layers() {
        let limit = (6.0 / (slot.fan_in + slot.fan_out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
        for w in &mut params[slot.weights()] {
            *w = dist.sample(rng);
        }
    }
    params
}

fn weight_matrix(params: &[f64], slot: &LayerSlot) -> DMatrix<f64> {
    DMatrix::from_row_slice(slot.fan_out, slot.fan_in, &params[slot.weights()])
}

/// Activations of every layer, kept for the reverse pass.
struct Tape {
    /// `inputs[k]` feeds layer `k`; the last entry is the network output.
    inputs: Vec<DMatrix<f64>>,
    pre: Vec<DMatrix<f64>>,
}

fn forward_tape(spec: &MlpSpec, params: &[f64], input: &DMatrix<f64>) -> Result<Tape> {
    spec.check(params, input)?;
    let slots = spec.layers();
    let mut inputs = Vec::with_capacity(slots.len() + 1);
    let mut pre = Vec::with_capacity(slots.len());
    inputs.push(input.clone());
    for (k, slot) in slots.iter().enumerate() {
        let w = weight_matrix(params, slot);
        let bias = &params[slot.bias()];
        let mut z = w * &inputs[k];
        for mut col in z.column_iter_mut() {
            for (zi, bi) in col.iter_mut().zip(bias) {
                *zi += bi;
            }
        }
        let a = match spec.activation_of(k) {
            Some(act) => z.map(|v| act.apply(v)),
            None => z.map(sigmoid),
        };
        pre.push(z);
        inputs.push(a);
    }
    Ok(Tape { inputs, pre })
}

pub fn mlp_forward(spec: &MlpSpec, params: &[f64], input: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut tape = forward_tape(spec, params, input)?;
    Ok(tape.inputs.pop().expect("tape holds the output"))
}

/// Gradients of `Σ upstream ⊙ output` with respect to the parameters and the
/// input batch.
pub fn mlp_backward(
    spec: &MlpSpec,
    params: &[f64],
    input: &DMatrix<f64>,
    upstream: &DMatrix<f64>,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let tape = forward_tape(spec, params, input)?;
    if upstream.shape() != (spec.output_dim(), input.ncols()) {
        return Err(Error::DimensionMismatch {
            expected: spec.output_dim() * input.ncols(),
            got: upstream.len(),
            context: "MLP upstream gradient",
        });
    }
    let slots = spec.layers();
    let mut grad = vec![0.0; params.len()];
    let mut delta = upstream.clone();
    for k in (0..slots.len()).rev() {
        let out = &tape.inputs[k + 1];
        match spec.activation_of(k) {
            Some(act) => delta.zip_zip_apply(&tape.pre[k], out, |d, z, a| *d *= act.derivative(z, a)),
            None => delta.zip_apply(out, |d, a| *d *= a * (1.0 - a)),
        }
        let slot = &slots[k];
        let gw = &delta * tape.inputs[k].transpose();
        // gw is column-major; the flat layout is row-major
        for (r, row) in gw.row_iter().enumerate() {
            let start = slot.offset + r * slot.fan_in;
            for (dst, src) in grad[start..start + slot.fan_in].iter_mut().zip(row.iter()) {
                *dst = *src;
            }
        }
        for (dst, row) in grad[slot.bias()].iter_mut().zip(delta.row_iter()) {
            *dst = row.sum();
        }
        delta = weight_matrix(params, slot).transpose() * delta;
    }
    Ok((grad, delta))
}
