//! Scores a saved gas checkpoint on in-distribution test data and an extended-range set.
//!
//! Usage: `cargo run --release --example evaluate_ood -- <checkpoint_dir>`
//! (a checkpoint is produced by `train_desk` or `adsorb train`).

use adsorb_deeponet::icgen::SplitSizes;
use adsorb_deeponet::{build_dataset, build_ood_dataset, evaluate, AnyModel, DatasetConfig, Split};

fn main() -> adsorb_deeponet::Result<()> {
    let dir = std::env::args().nth(1).expect("usage: evaluate_ood <checkpoint_dir>");
    let model = AnyModel::load(&dir)?;

    let mut cfg = DatasetConfig::with_samples(768);
    cfg.splits = Some(SplitSizes { train: 512, val: 128, test: 128 });
    let test = evaluate(&model, None, &build_dataset(&cfg, 7)?, Split::Test)?;
    let ood = evaluate(&model, None, &build_ood_dataset(&DatasetConfig::with_samples(128), 8)?, Split::All)?;

    println!("in-distribution test: {:.3}%", 100.0 * test.mean_r_gas);
    println!("extended ranges:      {:.3}%", 100.0 * ood.mean_r_gas);
    for (family, m) in &ood.per_family {
        println!("  {family:<12} n={:<3} {:.3}%", m.count, 100.0 * m.mean_r_gas);
    }
    Ok(())
}
