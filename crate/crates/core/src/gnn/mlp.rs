//! Dense layers and ReLU MLPs recorded on a [`Tape`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numerics::{Tape, Tensor, Var};

/// `y = x W + b` with `W: in × out`, `b: 1 × out`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Dense {
    /// Glorot-uniform weights, zero bias. The bound `√(6/(in+out))` is at
    /// most 1 whenever `in + out ≥ 6`.
    pub fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = (6.0 / (inputs + outputs) as f64).sqrt().min(1.0);
        Self {
            weight: Tensor::from_fn(inputs, outputs, |_, _| rng.random_range(-bound..=bound)),
            bias: Tensor::zeros(1, outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.rows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.cols()
    }

    pub fn num_params(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn bind(&self, tape: &mut Tape, tracked: bool) -> BoundDense {
        let leaf = |t: &mut Tape, x: &Tensor| {
            if tracked {
                t.param(x.clone())
            } else {
                t.constant(x.clone())
            }
        };
        BoundDense {
            weight: leaf(tape, &self.weight),
            bias: leaf(tape, &self.bias),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BoundDense {
    pub weight: Var,
    pub bias: Var,
}

impl BoundDense {
    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let xw = tape.matmul(x, self.weight)?;
        tape.add(xw, self.bias)
    }

    pub fn forward_relu(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let y = self.forward(tape, x)?;
        tape.relu(y)
    }
}

/// Stack of dense layers, ReLU after every layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    /// `widths[0]` is the input width.
    pub fn init<R: Rng + ?Sized>(widths: &[usize], rng: &mut R) -> Self {
        Self {
            layers: widths
                .windows(2)
                .map(|w| Dense::init(w[0], w[1], rng))
                .collect(),
        }
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w: Vec<usize> = self
            .layers
            .first()
            .map(|l| vec![l.inputs()])
            .unwrap_or_default();
        w.extend(self.layers.iter().map(Dense::outputs));
        w
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Dense::num_params).sum()
    }

    pub fn bind(&self, tape: &mut Tape, tracked: bool) -> BoundMlp {
        BoundMlp {
            layers: self.layers.iter().map(|l| l.bind(tape, tracked)).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoundMlp {
    pub layers: Vec<BoundDense>,
}

impl BoundMlp {
    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        self.forward_prefix(tape, x, self.layers.len())
    }

    /// Runs only the first `depth` layers.
    pub fn forward_prefix(&self, tape: &mut Tape, mut x: Var, depth: usize) -> Result<Var> {
        for layer in &self.layers[..depth] {
            x = layer.forward_relu(tape, x)?;
        }
        Ok(x)
    }
}
