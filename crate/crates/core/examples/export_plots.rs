//! Writes parity, heatmap and snapshot CSVs for one test sample.
//!
//! With a checkpoint directory argument the trained model is exported; otherwise
//! the reference solver stands in as a perfect predictor.
//!
//! Usage: `cargo run --release --example export_plots -- [checkpoint_dir] [out_dir]`

use adsorb_deeponet::cli::{export_sample, ExportKind};
use adsorb_deeponet::{
    build_dataset, dimensionless_coefficients, AnyModel, DatasetConfig, FieldPredictor, Phase, ReferenceSolver,
};

fn main() -> adsorb_deeponet::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = std::path::PathBuf::from(args.get(1).cloned().unwrap_or_else(|| "target/example-plots".into()));
    std::fs::create_dir_all(&out)?;

    let data = build_dataset(&DatasetConfig::with_samples(40), 7)?;
    let coeffs = dimensionless_coefficients(&data.params)?;
    let oracle = ReferenceSolver { coeffs, phase: Phase::Gas };
    let loaded = args.first().map(AnyModel::load).transpose()?;
    let gas: &dyn FieldPredictor = match &loaded {
        Some(m) => m,
        None => &oracle,
    };

    let index = data.splits.test[0];
    for what in [ExportKind::Parity, ExportKind::Heatmap, ExportKind::Snapshots] {
        for name in export_sample(gas, None, &data, index, what, &[0.0, 0.25, 0.5, 0.75, 1.0], &out)? {
            println!("{}", out.join(name).display());
        }
    }
    Ok(())
}
