#![allow(dead_code)]

use adsorb_deeponet::icgen::SplitSizes;
use adsorb_deeponet::{build_dataset, Dataset, DatasetConfig, DeepONetConfig, Grid};
use ndarray::Array1;
use rand::Rng;

pub fn small_grid() -> Grid {
    Grid::new(16, 21)
}

pub fn small_dataset(n: usize, seed: u64) -> Dataset {
    let mut cfg = DatasetConfig::with_samples(n);
    cfg.grid = small_grid();
    let val = n / 4;
    let test = n / 4;
    cfg.splits = Some(SplitSizes {
        train: n - val - test,
        val,
        test,
    });
    build_dataset(&cfg, seed).expect("dataset")
}

pub fn tiny_model_config(sensors: usize) -> DeepONetConfig {
    DeepONetConfig {
        sensors,
        hidden_layers: 2,
        width: 8,
        latent: 4,
        omega0: 20.0,
        output_bias: true,
    }
}

pub fn random_ic<R: Rng>(rng: &mut R, n: usize) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| rng.gen::<f64>())
}

use adsorb_deeponet::trainer::{Batch, Objective};
use adsorb_deeponet::DeepONet;

/// Analytic gradient of the training loss and its central-difference estimate, flattened.
pub fn gradient_pair(
    model: &mut DeepONet<f64>,
    objective: &Objective<f64>,
    batch: &Batch<f64>,
    h: f64,
) -> (Vec<f64>, Vec<f64>) {
    let (_, grads) = objective.loss_and_gradients(model, batch).unwrap();
    let analytic: Vec<f64> = grads.slices().into_iter().flatten().copied().collect();
    let sizes: Vec<usize> = model.parameters().iter().map(|p| p.len()).collect();
    let mut fd = Vec::with_capacity(analytic.len());
    for (t, &n) in sizes.iter().enumerate() {
        for e in 0..n {
            let orig = model.parameters()[t][e];
            model.parameters_mut()[t][e] = orig + h;
            let plus = objective.loss(model, batch).unwrap().total;
            model.parameters_mut()[t][e] = orig - h;
            let minus = objective.loss(model, batch).unwrap().total;
            model.parameters_mut()[t][e] = orig;
            fd.push((plus - minus) / (2.0 * h));
        }
    }
    (analytic, fd)
}

pub fn norm_relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(f64::MIN_POSITIVE)
}
