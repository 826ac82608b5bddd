use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Architecture {
    Linear {
        d_in: usize,
        d_out: usize,
    },
    /// One hidden ReLU layer.
    Mlp {
        d_in: usize,
        hidden: usize,
        d_out: usize,
    },
}

impl Architecture {
    pub fn d_in(self) -> usize {
        match self {
            Architecture::Linear { d_in, .. } | Architecture::Mlp { d_in, .. } => d_in,
        }
    }

    pub fn d_out(self) -> usize {
        match self {
            Architecture::Linear { d_out, .. } | Architecture::Mlp { d_out, .. } => d_out,
        }
    }

    /// Layer widths from input to output.
    pub fn widths(self) -> Vec<usize> {
        match self {
            Architecture::Linear { d_in, d_out } => vec![d_in, d_out],
            Architecture::Mlp {
                d_in,
                hidden,
                d_out,
            } => vec![d_in, hidden, d_out],
        }
    }

    pub fn validate(self) -> Result<()> {
        if self.widths().contains(&0) {
            return Err(Error::Config(format!("{self:?} has a zero-width layer")));
        }
        Ok(())
    }
}

/// An affine map `x W + b`; `weight` is `inputs x outputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    fn zeros_like(&self) -> Self {
        Self {
            weight: Array2::zeros(self.weight.raw_dim()),
            bias: Array1::zeros(self.bias.raw_dim()),
        }
    }
}

/// Maps feature rows to embedding rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedderModel {
    arch: Architecture,
    layers: Vec<Layer>,
}

/// Layer inputs and pre-activations kept from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    pre_activations: Vec<Array2<f64>>,
}

/// Gradients with the same shapes as the model's layers.
pub type Gradients = Vec<Layer>;

impl EmbedderModel {
    /// Weights drawn from N(0, 0.1^2), biases zero.
    pub fn new(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.1).expect("valid deviation");
        let widths = arch.widths();
        let layers = widths
            .windows(2)
            .map(|w| Layer {
                weight: Array2::from_shape_simple_fn((w[0], w[1]), || normal.sample(&mut rng)),
                bias: Array1::zeros(w[1]),
            })
            .collect();
        Ok(Self { arch, layers })
    }

    pub fn from_layers(arch: Architecture, layers: Vec<Layer>) -> Result<Self> {
        arch.validate()?;
        let widths = arch.widths();
        if layers.len() != widths.len() - 1 {
            return Err(Error::ShapeMismatch(format!(
                "{arch:?} needs {} layers, got {}",
                widths.len() - 1,
                layers.len()
            )));
        }
        for (l, w) in layers.iter().zip(widths.windows(2)) {
            if l.weight.dim() != (w[0], w[1]) || l.bias.len() != w[1] {
                return Err(Error::ShapeMismatch(format!(
                    "layer expected {}x{} weights and {} biases, got {:?} and {}",
                    w[0],
                    w[1],
                    w[1],
                    l.weight.dim(),
                    l.bias.len()
                )));
            }
            if l.weight.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(
                    "model parameters must be finite".into(),
                ));
            }
        }
        Ok(Self { arch, layers })
    }

    /// A `d x d` linear model with identity weights.
    pub fn identity(d: usize) -> Self {
        Self {
            arch: Architecture::Linear { d_in: d, d_out: d },
            layers: vec![Layer {
                weight: Array2::eye(d),
                bias: Array1::zeros(d),
            }],
        }
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    fn check_input(&self, x: ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.arch.d_in() {
            return Err(Error::DimensionMismatch {
                left: x.ncols(),
                right: self.arch.d_in(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        Ok(self.forward_cached(x)?.0)
    }

    pub fn forward_cached(&self, x: ArrayView2<'_, f64>) -> Result<(Array2<f64>, ForwardCache)> {
        self.check_input(x)?;
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre_activations: Vec::with_capacity(self.layers.len()),
        };
        let mut h = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = h.dot(&layer.weight) + &layer.bias;
            cache.inputs.push(h);
            h = if i < last {
                z.mapv(|v| v.max(0.0))
            } else {
                z.clone()
            };
            cache.pre_activations.push(z);
        }
        Ok((h, cache))
    }

    /// Parameter gradients given `d loss / d output`.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &Array2<f64>) -> Gradients {
        let mut grads: Gradients = self.layers.iter().map(Layer::zeros_like).collect();
        let mut g = grad_out.clone();
        for i in (0..self.layers.len()).rev() {
            if i + 1 < self.layers.len() {
                // ReLU passes gradient only where the pre-activation was positive
                g.zip_mut_with(&cache.pre_activations[i], |gv, &z| {
                    if z <= 0.0 {
                        *gv = 0.0;
                    }
                });
            }
            grads[i].weight = cache.inputs[i].t().dot(&g);
            grads[i].bias = g.sum_axis(Axis(0));
            if i > 0 {
                g = g.dot(&self.layers[i].weight.t());
            }
        }
        grads
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(&l.bias).all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn shapes_and_seed() {
        let arch = Architecture::Mlp {
            d_in: 4,
            hidden: 5,
            d_out: 2,
        };
        let m = EmbedderModel::new(arch, 1).unwrap();
        assert_eq!(m.parameter_count(), 4 * 5 + 5 + 5 * 2 + 2);
        assert_eq!(m, EmbedderModel::new(arch, 1).unwrap());
        assert_ne!(m, EmbedderModel::new(arch, 2).unwrap());
        let out = m.forward(Array2::ones((3, 4)).view()).unwrap();
        assert_eq!(out.dim(), (3, 2));
        assert!(m.forward(Array2::ones((3, 5)).view()).is_err());
    }

    #[test]
    fn identity_model() {
        let x = array![[1.0, -2.0], [0.5, 3.0]];
        assert_eq!(EmbedderModel::identity(2).forward(x.view()).unwrap(), x);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let arch = Architecture::Mlp {
            d_in: 3,
            hidden: 4,
            d_out: 2,
        };
        let model = EmbedderModel::new(arch, 5).unwrap();
        let x = array![[0.3, -1.2, 0.8], [1.1, 0.4, -0.6], [-0.7, 0.9, 0.2]];
        let target = array![[0.5, -0.1], [0.2, 0.3], [-0.4, 0.6]];
        // loss = sum(out * target)
        let f = |m: &EmbedderModel| (m.forward(x.view()).unwrap() * &target).sum();
        let (_, cache) = model.forward_cached(x.view()).unwrap();
        let grads = model.backward(&cache, &target);
        let h = 1e-6;
        for (li, g) in grads.iter().enumerate() {
            for ((r, c), analytic) in g.weight.indexed_iter() {
                let mut p = model.clone();
                p.layers_mut()[li].weight[[r, c]] += h;
                let mut q = model.clone();
                q.layers_mut()[li].weight[[r, c]] -= h;
                let fd = (f(&p) - f(&q)) / (2.0 * h);
                assert!((fd - analytic).abs() < 1e-7, "layer {li} w[{r},{c}]");
            }
            for (k, analytic) in g.bias.iter().enumerate() {
                let mut p = model.clone();
                p.layers_mut()[li].bias[k] += h;
                let mut q = model.clone();
                q.layers_mut()[li].bias[k] -= h;
                let fd = (f(&p) - f(&q)) / (2.0 * h);
                assert!((fd - analytic).abs() < 1e-7, "layer {li} b[{k}]");
            }
        }
    }
}
