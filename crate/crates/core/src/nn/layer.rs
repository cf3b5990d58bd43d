use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use super::Real;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Silu,
    /// `sin(omega0 * z)`
    Sine { omega0: f64 },
    Sigmoid,
}

pub(crate) fn sigmoid<F: Real>(z: F) -> F {
    if z >= F::zero() {
        F::one() / (F::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (F::one() + e)
    }
}

impl Activation {
    pub fn apply<F: Real>(&self, z: F) -> F {
        match *self {
            Activation::Identity => z,
            Activation::Silu => z * sigmoid(z),
            Activation::Sine { omega0 } => (F::lit(omega0) * z).sin(),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative with respect to the pre-activation.
    pub fn derivative<F: Real>(&self, z: F) -> F {
        match *self {
            Activation::Identity => F::one(),
            Activation::Silu => {
                let s = sigmoid(z);
                s * (F::one() + z * (F::one() - s))
            }
            Activation::Sine { omega0 } => {
                let w = F::lit(omega0);
                w * (w * z).cos()
            }
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (F::one() - s)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<F> {
    /// `fan_out x fan_in`
    pub weight: Array2<F>,
    pub bias: Array1<F>,
    pub activation: Activation,
}

impl<F: Real> DenseLayer<F> {
    pub fn new(weight: Array2<F>, bias: Array1<F>, activation: Activation) -> Result<Self> {
        if weight.nrows() != bias.len() {
            return Err(Error::Shape(format!(
                "weight has {} rows, bias has {} entries",
                weight.nrows(),
                bias.len()
            )));
        }
        if let Activation::Sine { omega0 } = activation {
            if !(omega0 > 0.0) {
                return Err(Error::invalid("omega0", format!("must be > 0, got {omega0}")));
            }
        }
        Ok(Self {
            weight: weight.as_standard_layout().into_owned(),
            bias,
            activation,
        })
    }

    pub fn fan_in(&self) -> usize {
        self.weight.ncols()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.nrows()
    }

    fn pre_activation(&self, x: ArrayView2<F>) -> Array2<F> {
        let mut z = x.dot(&self.weight.t());
        z += &self.bias;
        z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad<F> {
    pub weight: Array2<F>,
    pub bias: Array1<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads<F> {
    pub layers: Vec<LayerGrad<F>>,
}

/// Intermediates kept by [`Mlp::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache<F> {
    inputs: Vec<Array2<F>>,
    pre: Vec<Array2<F>>,
}

/// Chain of dense layers; rows of every activation matrix are samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<F> {
    pub layers: Vec<DenseLayer<F>>,
}

impl<F: Real> Mlp<F> {
    pub fn new(layers: Vec<DenseLayer<F>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("layers", "network needs at least one layer"));
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].fan_out() != w[1].fan_in() {
                return Err(Error::Shape(format!(
                    "layer {i} outputs {} features, layer {} expects {}",
                    w[0].fan_out(),
                    i + 1,
                    w[1].fan_in()
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].fan_out()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    fn check_input(&self, x: &ArrayView2<F>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} features, network expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Forward pass without keeping intermediates.
    pub fn infer(&self, x: ArrayView2<F>) -> Result<Array2<F>> {
        self.check_input(&x)?;
        let mut a = x.to_owned();
        for layer in &self.layers {
            let mut z = layer.pre_activation(a.view());
            let act = layer.activation;
            if act != Activation::Identity {
                z.mapv_inplace(|v| act.apply(v));
            }
            a = z;
        }
        Ok(a)
    }

    pub fn forward(&self, x: ArrayView2<F>) -> Result<(Array2<F>, MlpCache<F>)> {
        self.check_input(&x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        for layer in &self.layers {
            let z = layer.pre_activation(a.view());
            let act = layer.activation;
            let next = if act == Activation::Identity {
                z.clone()
            } else {
                z.mapv(|v| act.apply(v))
            };
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        Ok((a, MlpCache { inputs, pre }))
    }

    /// Gradients of a scalar loss given `d loss / d output`; also returns `d loss / d input`.
    pub fn backward(&self, cache: MlpCache<F>, grad_output: Array2<F>) -> Result<(MlpGrads<F>, Array2<F>)> {
        if cache.pre.len() != self.layers.len() || cache.inputs.len() != self.layers.len() {
            return Err(Error::Shape(format!(
                "cache holds {} layers, network has {}",
                cache.pre.len(),
                self.layers.len()
            )));
        }
        let last = &cache.pre[cache.pre.len() - 1];
        if grad_output.dim() != last.dim() {
            return Err(Error::Shape(format!(
                "output gradient is {:?}, forward output was {:?}",
                grad_output.dim(),
                last.dim()
            )));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = grad_output;
        for ((layer, input), z) in self
            .layers
            .iter()
            .zip(cache.inputs)
            .zip(cache.pre)
            .rev()
        {
            let act = layer.activation;
            if act != Activation::Identity {
                Zip::from(&mut delta).and(&z).for_each(|d, &zv| *d *= act.derivative(zv));
            }
            let weight = delta.t().dot(&input);
            let bias = delta.sum_axis(Axis(0));
            let next = delta.dot(&layer.weight);
            grads.push(LayerGrad { weight, bias });
            delta = next;
        }
        grads.reverse();
        Ok((MlpGrads { layers: grads }, delta))
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [F]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for layer in &mut self.layers {
            out.push(layer.weight.as_slice_mut().expect("standard layout"));
            out.push(layer.bias.as_slice_mut().expect("contiguous"));
        }
        out
    }

    pub fn parameters(&self) -> Vec<&[F]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for layer in &self.layers {
            out.push(layer.weight.as_slice().expect("standard layout"));
            out.push(layer.bias.as_slice().expect("contiguous"));
        }
        out
    }

    pub fn cast<G: Real>(&self) -> Mlp<G> {
        let conv = |v: &F| G::from_f64(v.to_f64().unwrap_or(f64::NAN)).unwrap_or(G::nan());
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer {
                    weight: l.weight.map(conv),
                    bias: l.bias.map(conv),
                    activation: l.activation,
                })
                .collect(),
        }
    }
}

impl<F: Real> MlpGrads<F> {
    pub fn slices(&self) -> Vec<&[F]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for g in &self.layers {
            out.push(g.weight.as_slice().expect("standard layout"));
            out.push(g.bias.as_slice().expect("contiguous"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn identity_layer_passes_input() {
        let layer = DenseLayer::new(Array2::<f64>::eye(3), Array1::zeros(3), Activation::Identity).unwrap();
        let net = Mlp::new(vec![layer]).unwrap();
        let x = array![[0.1, -2.0, 3.5], [1.0, 0.0, 0.25]];
        assert_eq!(net.infer(x.view()).unwrap(), x);
    }

    #[test]
    fn zero_sine_layer_outputs_zero() {
        let layer = DenseLayer::new(
            Array2::<f64>::zeros((4, 2)),
            Array1::zeros(4),
            Activation::Sine { omega0: 20.0 },
        )
        .unwrap();
        let net = Mlp::new(vec![layer]).unwrap();
        let y = net.infer(array![[0.3, 0.7]].view()).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn silu_values() {
        assert_eq!(Activation::Silu.apply(0.0_f64), 0.0);
        let expected = 1.0 / (1.0 + (-1.0_f64).exp());
        assert!((Activation::Silu.apply(1.0_f64) - expected).abs() < 1e-15);
        assert!((expected - 0.731_058_578_630_005).abs() < 1e-12);
    }

    #[test]
    fn square_gradient() {
        // loss = w^2 with w = 3 and unit input.
        let layer = DenseLayer::new(array![[3.0_f64]], array![0.0], Activation::Identity).unwrap();
        let net = Mlp::new(vec![layer]).unwrap();
        let (y, cache) = net.forward(array![[1.0]].view()).unwrap();
        let (g, _) = net.backward(cache, y.mapv(|v| 2.0 * v)).unwrap();
        assert_eq!(g.layers[0].weight[[0, 0]], 6.0);
    }

    #[test]
    fn zero_loss_gives_zero_gradients() {
        let layer = DenseLayer::new(array![[0.5_f64, -0.2], [1.0, 0.3]], array![0.1, 0.0], Activation::Silu).unwrap();
        let net = Mlp::new(vec![layer]).unwrap();
        let (y, cache) = net.forward(array![[1.0, 2.0]].view()).unwrap();
        let (g, dx) = net.backward(cache, Array2::zeros(y.dim())).unwrap();
        assert!(g.slices().iter().all(|s| s.iter().all(|&v| v == 0.0)));
        assert!(dx.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_mismatched_shapes() {
        assert!(DenseLayer::new(Array2::<f64>::zeros((2, 3)), Array1::zeros(3), Activation::Identity).is_err());
        assert!(DenseLayer::new(Array2::<f64>::zeros((2, 3)), Array1::zeros(2), Activation::Sine { omega0: 0.0 }).is_err());
        let a = DenseLayer::new(Array2::<f64>::zeros((2, 3)), Array1::zeros(2), Activation::Identity).unwrap();
        let b = DenseLayer::new(Array2::<f64>::zeros((2, 4)), Array1::zeros(2), Activation::Identity).unwrap();
        assert!(Mlp::new(vec![a.clone(), b]).is_err());
        let net = Mlp::new(vec![a]).unwrap();
        assert!(net.infer(Array2::zeros((1, 2)).view()).is_err());
        let (_, cache) = net.forward(Array2::zeros((1, 3)).view()).unwrap();
        assert!(net.backward(cache, Array2::zeros((1, 5))).is_err());
    }

    #[test]
    fn sigmoid_is_stable_for_large_inputs() {
        assert_eq!(sigmoid(-1000.0_f64), 0.0);
        assert_eq!(sigmoid(1000.0_f64), 1.0);
        assert!((sigmoid(0.0_f64) - 0.5).abs() < 1e-16);
    }
}
