use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use super::{Activation, DenseLayer, Mlp, Real};
use crate::error::{Error, Result};

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::invalid("dims", format!("need >= 2 positive widths, got {dims:?}")));
    }
    Ok(())
}

fn last_activation(i: usize, n: usize, hidden: Activation) -> Activation {
    if i + 1 == n {
        Activation::Identity
    } else {
        hidden
    }
}

/// Sine network: hidden layers use `sin(omega0 z)`, the last layer is linear.
///
/// First layer weights are `U(-1/fan_in, 1/fan_in)`, later layers
/// `U(-sqrt(6/fan_in)/omega0, sqrt(6/fan_in)/omega0)`; biases are zero.
pub fn init_siren<F: Real, R: Rng>(dims: &[usize], omega0: f64, rng: &mut R) -> Result<Mlp<F>> {
    check_dims(dims)?;
    if !(omega0 > 0.0) {
        return Err(Error::invalid("omega0", format!("must be > 0, got {omega0}")));
    }
    let n = dims.len() - 1;
    let layers = dims
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = if i == 0 {
                1.0 / fan_in as f64
            } else {
                (6.0 / fan_in as f64).sqrt() / omega0
            };
            let dist = Uniform::new_inclusive(-bound, bound);
            let weight = Array2::from_shape_simple_fn((fan_out, fan_in), || F::lit(dist.sample(rng)));
            let act = last_activation(i, n, Activation::Sine { omega0 });
            DenseLayer::new(weight, Array1::zeros(fan_out), act)
        })
        .collect::<Result<Vec<_>>>()?;
    Mlp::new(layers)
}

/// SiLU network with He-normal weights `N(0, 2/fan_in)` and zero biases; the last layer is linear.
pub fn init_kaiming<F: Real, R: Rng>(dims: &[usize], rng: &mut R) -> Result<Mlp<F>> {
    check_dims(dims)?;
    let n = dims.len() - 1;
    let layers = dims
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let dist = Normal::new(0.0, (2.0 / fan_in as f64).sqrt())
                .map_err(|e| Error::invalid("dims", e.to_string()))?;
            let weight = Array2::from_shape_simple_fn((fan_out, fan_in), || F::lit(dist.sample(rng)));
            DenseLayer::new(weight, Array1::zeros(fan_out), last_activation(i, n, Activation::Silu))
        })
        .collect::<Result<Vec<_>>>()?;
    Mlp::new(layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn siren_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net: Mlp<f64> = init_siren(&[2, 100, 100, 10], 20.0, &mut rng).unwrap();
        let first = net.layers[0].weight.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(first <= 0.5);
        let hidden_bound = (6.0_f64 / 100.0).sqrt() / 20.0;
        assert!((hidden_bound - 0.012_247_448_7).abs() < 1e-9);
        for layer in &net.layers[1..] {
            let m = layer.weight.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            assert!(m <= hidden_bound);
            assert!(m > 0.9 * hidden_bound);
        }
        assert!(net.layers.iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        assert_eq!(net.layers[0].activation, Activation::Sine { omega0: 20.0 });
        assert_eq!(net.layers[2].activation, Activation::Identity);
    }

    #[test]
    fn kaiming_std() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let net: Mlp<f64> = init_kaiming(&[200, 200, 3], &mut rng).unwrap();
        let w = &net.layers[0].weight;
        let n = w.len() as f64;
        let mean = w.sum() / n;
        let std = (w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!((std - 0.1).abs() < 0.01, "std {std}");
        assert!(net.layers.iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        assert_eq!(net.layers[0].activation, Activation::Silu);
        assert_eq!(net.layers[1].activation, Activation::Identity);
    }

    #[test]
    fn empty_dims_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(init_kaiming::<f64, _>(&[], &mut rng).is_err());
        assert!(init_kaiming::<f64, _>(&[3], &mut rng).is_err());
        assert!(init_siren::<f64, _>(&[2, 0, 1], 20.0, &mut rng).is_err());
        assert!(init_siren::<f64, _>(&[2, 4, 1], -1.0, &mut rng).is_err());
    }
}
