mod common;

use adsorb_deeponet::metrics::max_abs_error;
use adsorb_deeponet::{dimensionless_coefficients, evaluate, relative_l2, FieldPredictor, Grid, Phase, ReferenceSolver, Split};
use common::small_dataset;
use ndarray::{array, Array1, Array2, ArrayView1};
use proptest::prelude::*;

fn field(n: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-1.0..1.0_f64, n * n).prop_map(move |v| Array2::from_shape_vec((n, n), v).unwrap())
}

fn norm(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

proptest! {
    #[test]
    fn numerator_scales_with_the_perturbation(t in field(5), d in field(5), c in -10.0..10.0_f64) {
        prop_assume!(norm(&t) > 1e-3);
        let base = relative_l2((&t + &d).view(), t.view()).unwrap();
        let scaled = relative_l2((&t + &(&d * c)).view(), t.view()).unwrap();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-12 * (1.0 + scaled));
    }

    #[test]
    fn triangle_bound(p in field(4), t in field(4)) {
        prop_assume!(norm(&t) > 1e-3);
        let r = relative_l2(p.view(), t.view()).unwrap();
        prop_assert!(r >= 0.0);
        prop_assert!(r <= (norm(&p) + norm(&t)) / norm(&t) * (1.0 + 1e-14));
    }
}

#[test]
fn hand_computed_values() {
    let t = array![[1.0, 0.0], [0.0, 1.0]];
    let p = array![[1.0, 0.0], [0.0, 0.0]];
    assert!((relative_l2(p.view(), t.view()).unwrap() - 0.5_f64.sqrt()).abs() <= 1e-12);
    let t = array![[0.3, 0.7, 1.0], [0.2, 0.9, 0.4]];
    assert!((relative_l2((&t * 1.01).view(), t.view()).unwrap() - 0.01).abs() <= 1e-14);
    assert_eq!(max_abs_error(p.view(), t.view()), 1.0);
}

#[test]
fn solver_scored_against_itself_is_exact() {
    let data = small_dataset(12, 4);
    let coeffs = dimensionless_coefficients(&data.params).unwrap();
    let gas = ReferenceSolver { coeffs, phase: Phase::Gas };
    let solid = ReferenceSolver { coeffs, phase: Phase::Solid };
    let report = evaluate(&gas, Some(&solid), &data, Split::All).unwrap();
    assert_eq!(report.n_samples, 12);
    assert_eq!(report.mean_r_gas, 0.0);
    assert_eq!(report.mean_r_solid, Some(0.0));
    assert_eq!(report.max_abs_err, 0.0);
    assert_eq!(report.per_family.values().map(|f| f.count).sum::<usize>(), 12);
}

/// Predicts the reference field scaled by a per-sample factor chosen by the first sensor.
struct Scaled(ReferenceSolver);

impl FieldPredictor for Scaled {
    fn phase(&self) -> Phase {
        self.0.phase
    }

    fn predict(&self, ic: ArrayView1<f64>, grid: &Grid) -> adsorb_deeponet::Result<Array2<f64>> {
        Ok(self.0.predict(ic, grid)? * (1.0 + 0.1 * ic[0]))
    }
}

#[test]
fn means_and_union_weighting() {
    let data = small_dataset(20, 8);
    let coeffs = dimensionless_coefficients(&data.params).unwrap();
    let model = Scaled(ReferenceSolver { coeffs, phase: Phase::Gas });
    let all = evaluate(&model, None, &data, Split::All).unwrap();
    for s in &all.samples {
        assert!((s.r_gas - 0.1 * data.ics[[s.index, 0]]).abs() <= 1e-12);
    }
    let per: Array1<f64> = all.samples.iter().map(|s| s.r_gas).collect();
    assert!((all.mean_r_gas - per.mean().unwrap()).abs() <= 1e-15 * all.mean_r_gas);

    let parts: Vec<_> = [Split::Train, Split::Val, Split::Test]
        .into_iter()
        .map(|s| evaluate(&model, None, &data, s).unwrap())
        .collect();
    let combined = parts.iter().map(|r| r.mean_r_gas * r.n_samples as f64).sum::<f64>() / data.len() as f64;
    assert!((combined - all.mean_r_gas).abs() <= 1e-12);

    let mut buf = Vec::new();
    all.write_samples_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("index,family,r_gas,r_solid,max_abs_err\n"));
    assert_eq!(text.lines().count(), 21);
    assert!(all.worst.len() == 5 && all.samples.iter().all(|s| s.r_gas <= all.samples.iter().find(|w| w.index == all.worst[0]).unwrap().r_gas));
}

#[test]
fn two_sample_mean() {
    let data = small_dataset(8, 2);
    let coeffs = dimensionless_coefficients(&data.params).unwrap();
    let model = Scaled(ReferenceSolver { coeffs, phase: Phase::Gas });
    let r = evaluate(&model, None, &data, Split::Test).unwrap();
    assert_eq!(r.n_samples, 2);
    let expected = (r.samples[0].r_gas + r.samples[1].r_gas) / 2.0;
    assert_eq!(r.mean_r_gas, expected);
}

#[test]
fn phase_and_split_errors() {
    let data = small_dataset(8, 2);
    let coeffs = dimensionless_coefficients(&data.params).unwrap();
    let solid = ReferenceSolver { coeffs, phase: Phase::Solid };
    assert!(evaluate(&solid, None, &data, Split::Test).is_err());
    let mut empty = data.clone();
    empty.splits.val.clear();
    let gas = ReferenceSolver { coeffs, phase: Phase::Gas };
    assert!(evaluate(&gas, None, &empty, Split::Val).is_err());
}
