//! Desk-scale training run: 512/128/128 samples, 3x64 networks, gas phase.
//!
//! Usage: `cargo run --release --example train_desk -- [epochs] [checkpoint_dir] [f32]`

use adsorb_deeponet::icgen::SplitSizes;
use adsorb_deeponet::nn::Real;
use adsorb_deeponet::{
    build_dataset, evaluate, train, DatasetConfig, DeepONet, DeepONetConfig, Error, Phase, Split, TrainConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn run<F: Real>(epochs: usize, out: &str) -> adsorb_deeponet::Result<()> {
    let mut cfg = DatasetConfig::with_samples(768);
    cfg.splits = Some(SplitSizes { train: 512, val: 128, test: 128 });
    let data = build_dataset(&cfg, 7)?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let model = DeepONet::<F>::new(DeepONetConfig::desk(), Phase::Gas, &mut rng)?;
    let config = TrainConfig {
        max_epochs: epochs,
        seed: 11,
        log_every: 100,
        ..TrainConfig::default()
    };
    let trained = train(model, &data, &config).map_err(|e| Error::Numerical(e.to_string()))?;
    let r = &trained.report;
    println!(
        "epochs {} (best {}), {:.1}s, {:.3}s/epoch, min val loss {:.4e}",
        r.epochs_run,
        r.best_epoch,
        r.wall_time_s,
        r.wall_time_s / r.epochs_run.max(1) as f64,
        r.min_val_loss.unwrap_or(f64::NAN)
    );
    let eval = evaluate(&trained.model, None, &data, Split::Test)?;
    println!("test mean relative L2 (gas): {:.3}%", 100.0 * eval.mean_r_gas);
    trained.model.save(out)?;
    println!("checkpoint written to {out}");
    Ok(())
}

fn main() -> adsorb_deeponet::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let epochs = args.first().and_then(|s| s.parse().ok()).unwrap_or(400);
    let out = args.get(1).map(String::as_str).unwrap_or("target/desk-gas");
    if args.get(2).map(String::as_str) == Some("f32") {
        run::<f32>(epochs, out)
    } else {
        run::<f64>(epochs, out)
    }
}
