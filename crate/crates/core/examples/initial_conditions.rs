//! Draws one profile per family from the training and extended ranges.

use adsorb_deeponet::icgen::{evaluate_ic, sample_ic_seeded, RangeTable};
use adsorb_deeponet::Grid;

fn main() -> adsorb_deeponet::Result<()> {
    let xi = Grid::default().xi_centers();
    for (label, table) in [
        ("in-distribution", RangeTable::in_distribution()),
        ("extended", RangeTable::out_of_distribution()),
    ] {
        println!("{label}:");
        for (i, family) in table.families().into_iter().enumerate() {
            let spec = sample_ic_seeded(family, &table, 100 + i as u64)?;
            let v = evaluate_ic(&spec, &xi);
            let picks: Vec<String> = [0, 25, 50, 75, 99].iter().map(|&j| format!("{:.3}", v[j])).collect();
            println!("  {:<12} {}  a={:.3} b={:.3}", family, picks.join(" "), spec.a, spec.b);
            println!("  {}", serde_json::to_string(&spec)?);
        }
    }
    Ok(())
}
