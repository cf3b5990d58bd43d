//! Builds a small dataset, writes it to disk and reads it back.
//!
//! Usage: `cargo run --release --example build_dataset -- [n] [dir]`

use adsorb_deeponet::{build_dataset, load_dataset, save_dataset, DatasetConfig};

fn main() -> adsorb_deeponet::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n = args.first().and_then(|s| s.parse().ok()).unwrap_or(200);
    let dir = args.get(1).cloned().unwrap_or_else(|| "target/example-dataset".into());

    let data = build_dataset(&DatasetConfig::with_samples(n), 7)?;
    println!(
        "{} samples, splits {}/{}/{}",
        data.len(),
        data.splits.train.len(),
        data.splits.val.len(),
        data.splits.test.len()
    );
    for (family, count) in data.family_counts() {
        println!("  {family}: {count}");
    }
    save_dataset(&data, &dir)?;
    let back = load_dataset(&dir)?;
    assert_eq!(back.gas, data.gas);
    println!("wrote and re-read {dir}");
    Ok(())
}
