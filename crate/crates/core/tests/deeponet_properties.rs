mod common;

use adsorb_deeponet::{DeepONet, DeepONetConfig, FieldPredictor, Grid, Phase};
use common::{random_ic, tiny_model_config};
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model(seed: u64, sensors: usize) -> DeepONet<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DeepONet::new(tiny_model_config(sensors), Phase::Gas, &mut rng).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn predictions_are_strictly_inside_unit_interval(seed in any::<u64>(), scale in 0.1..3.0_f64) {
        let mut m = model(seed, 10);
        for p in m.parameters_mut() {
            for v in p.iter_mut() {
                *v *= scale;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let ic = random_ic(&mut rng, 10);
        let pts: Vec<(f64, f64)> = (0..200).map(|_| (rng.gen(), rng.gen())).collect();
        for y in m.forward(ic.view(), &pts).unwrap() {
            prop_assert!(y > 0.0 && y < 1.0, "{}", y);
        }
    }

    #[test]
    fn permuting_queries_permutes_outputs(seed in any::<u64>()) {
        let m = model(seed, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ic = random_ic(&mut rng, 10);
        let pts: Vec<(f64, f64)> = (0..50).map(|_| (rng.gen(), rng.gen())).collect();
        let rev: Vec<(f64, f64)> = pts.iter().rev().copied().collect();
        let a = m.forward(ic.view(), &pts).unwrap();
        let mut b = m.forward(ic.view(), &rev).unwrap();
        b.reverse();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn batched_and_pointwise_evaluation_agree() {
    let m = model(5, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let ics = Array2::from_shape_fn((4, 10), |_| rng.gen::<f64>());
    let coords = Array2::from_shape_fn((30, 2), |_| rng.gen::<f64>());
    let batch = m.forward_batch(ics.view(), coords.view()).unwrap();
    for (i, ic) in ics.rows().into_iter().enumerate() {
        for (p, c) in coords.rows().into_iter().enumerate() {
            let single = m.forward(ic, &[(c[0], c[1])]).unwrap()[0];
            assert!((single - batch[[i, p]]).abs() <= 1e-12);
        }
    }
}

#[test]
fn untrained_field_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = DeepONet::<f64>::new(DeepONetConfig::desk(), Phase::Gas, &mut rng).unwrap();
    let ic = random_ic(&mut rng, 100);
    let grid = Grid::default();
    let f = m.predict_field(ic.view(), &grid).unwrap();
    assert_eq!(f.values.dim(), (100, 101));
    assert!(f.values.iter().all(|&v| v > 0.0 && v < 1.0));
    let again = m.predict(ic.view(), &grid).unwrap();
    assert_eq!(f.values, again);
}

#[test]
fn wrong_sensor_count_is_rejected() {
    let m = model(2, 10);
    let ic = ndarray::Array1::zeros(9);
    assert!(m.predict(ic.view(), &Grid::new(10, 5)).is_err());
}
