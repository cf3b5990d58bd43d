//! Compares backpropagated gradients of the training loss with central differences.

use adsorb_deeponet::icgen::SplitSizes;
use adsorb_deeponet::trainer::{Batch, LossWeights, Objective};
use adsorb_deeponet::{build_dataset, DatasetConfig, DeepONet, DeepONetConfig, Grid, Phase};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> adsorb_deeponet::Result<()> {
    let mut cfg = DatasetConfig::with_samples(8);
    cfg.grid = Grid::new(16, 21);
    cfg.splits = Some(SplitSizes { train: 8, val: 0, test: 0 });
    let data = build_dataset(&cfg, 1)?;
    let batch = Batch::from_dataset(&data, &[0, 1, 2, 3], Phase::Gas);
    let objective = Objective::new(data.grid, LossWeights::default());

    let model_cfg = DeepONetConfig {
        sensors: 16,
        hidden_layers: 2,
        width: 10,
        latent: 6,
        ..DeepONetConfig::default()
    };
    let mut model = DeepONet::<f64>::new(model_cfg, Phase::Gas, &mut ChaCha8Rng::seed_from_u64(2))?;
    let (_, grads) = objective.loss_and_gradients(&model, &batch)?;
    let analytic: Vec<f64> = grads.slices().into_iter().flatten().copied().collect();

    let h = 1e-6;
    let sizes: Vec<usize> = model.parameters().iter().map(|p| p.len()).collect();
    let (mut num, mut den, mut k) = (0.0, 0.0, 0);
    for (t, &n) in sizes.iter().enumerate() {
        for e in 0..n {
            let orig = model.parameters()[t][e];
            model.parameters_mut()[t][e] = orig + h;
            let plus = objective.loss(&model, &batch)?.total;
            model.parameters_mut()[t][e] = orig - h;
            let minus = objective.loss(&model, &batch)?.total;
            model.parameters_mut()[t][e] = orig;
            let fd = (plus - minus) / (2.0 * h);
            num += (fd - analytic[k]).powi(2);
            den += fd * fd;
            k += 1;
        }
    }
    println!("{k} parameters, relative gradient error {:.3e}", (num / den).sqrt());
    Ok(())
}
