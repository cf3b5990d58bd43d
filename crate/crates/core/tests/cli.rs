use std::fs;
use std::path::Path;

use adsorb_deeponet::cli::{export_sample, run, Cli, ExportKind};
use adsorb_deeponet::{dimensionless_coefficients, load_dataset, Phase, ReferenceSolver};
use clap::Parser;

fn adsorb(args: &[&str]) -> adsorb_deeponet::Result<()> {
    let mut argv = vec!["adsorb"];
    argv.extend_from_slice(args);
    run(Cli::try_parse_from(argv).expect("arguments parse"))
}

fn write_small_config(dir: &Path) -> String {
    let path = dir.join("run.json");
    fs::write(&path, r#"{ "grid": { "n_x": 12, "n_t": 11 } }"#).unwrap();
    path.to_string_lossy().into_owned()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn dataset_command_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_small_config(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        adsorb(&["--config", &cfg, "--seed", "7", "--out", &s(out), "dataset", "--n", "20"]).unwrap();
    }
    for f in ["manifest.json", "ics.bin", "gas.bin", "solid.bin"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let data = load_dataset(&a).unwrap();
    assert_eq!((data.splits.train.len(), data.splits.val.len(), data.splits.test.len()), (14, 4, 2));
}

#[test]
fn ood_dataset_has_five_families() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_small_config(tmp.path());
    let out = tmp.path().join("ood");
    adsorb(&["--config", &cfg, "--seed", "7", "--out", &s(&out), "dataset", "--ood", "--n", "10"]).unwrap();
    let data = load_dataset(&out).unwrap();
    assert_eq!(data.family_counts().len(), 5);
}

#[test]
fn missing_seed_and_bad_splits_are_validation_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_small_config(tmp.path());
    let out = tmp.path().join("d");
    let err = adsorb(&["--config", &cfg, "--out", &s(&out), "dataset", "--n", "10"]).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let err = adsorb(&["--config", &cfg, "--seed", "1", "--out", &s(&out), "dataset", "--n", "10", "--splits", "5,5,5"])
        .unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(!out.exists(), "partial output left behind");
}

#[test]
fn solve_train_eval_export_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_small_config(tmp.path());
    let data_dir = tmp.path().join("data");
    let model_dir = tmp.path().join("gas");
    adsorb(&["--config", &cfg, "--seed", "3", "--out", &s(&data_dir), "dataset", "--n", "16"]).unwrap();

    let solve_dir = tmp.path().join("solve");
    adsorb(&["--config", &cfg, "--seed", "3", "--out", &s(&solve_dir), "solve", "--family", "sigmoid"]).unwrap();
    for f in ["gas.bin", "solid.bin", "gas.csv", "solid.csv", "solve.json"] {
        assert!(solve_dir.join(f).exists(), "{f}");
    }

    adsorb(&[
        "--config", &cfg, "--seed", "3", "--out", &s(&model_dir), "train", "--data", &s(&data_dir), "--desk", "--epochs",
        "3", "--batch-size", "4",
    ])
    .unwrap();
    for f in ["model.json", "weights.bin", "report.json", "history.csv"] {
        assert!(model_dir.join(f).exists(), "{f}");
    }

    let eval_dir = tmp.path().join("eval");
    adsorb(&["--out", &s(&eval_dir), "eval", "--data", &s(&data_dir), "--gas-model", &s(&model_dir)]).unwrap();
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(eval_dir.join("eval.json")).unwrap()).unwrap();
    assert!(report["mean_r_gas"].as_f64().unwrap().is_finite());

    let export_dir = tmp.path().join("export");
    adsorb(&[
        "--out", &s(&export_dir), "export", "--data", &s(&data_dir), "--gas-model", &s(&model_dir), "--what", "parity",
        "--index", "0",
    ])
    .unwrap();
    let text = fs::read_to_string(export_dir.join("parity_gas_0.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 12 * 11);

    let err = adsorb(&[
        "--out", &s(&export_dir), "export", "--data", &s(&data_dir), "--gas-model", &s(&model_dir), "--what", "parity",
        "--index", "99",
    ])
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);

    let err = adsorb(&["--out", &s(&eval_dir), "eval", "--data", &s(&data_dir), "--gas-model", &s(&tmp.path().join("nope"))])
        .unwrap_err();
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn oracle_exports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_small_config(tmp.path());
    let data_dir = tmp.path().join("data");
    adsorb(&["--config", &cfg, "--seed", "5", "--out", &s(&data_dir), "dataset", "--n", "8"]).unwrap();
    let data = load_dataset(&data_dir).unwrap();
    let coeffs = dimensionless_coefficients(&data.params).unwrap();
    let gas = ReferenceSolver { coeffs, phase: Phase::Gas };
    let solid = ReferenceSolver { coeffs, phase: Phase::Solid };
    let out = tmp.path().join("x");
    fs::create_dir_all(&out).unwrap();

    let files = export_sample(&gas, Some(&solid), &data, 2, ExportKind::Parity, &[], &out).unwrap();
    assert_eq!(files.len(), 2);
    for f in &files {
        let mut rdr = csv::Reader::from_path(out.join(f)).unwrap();
        for rec in rdr.records() {
            let rec = rec.unwrap();
            assert_eq!(rec[0], rec[1]);
        }
    }

    let files = export_sample(&gas, Some(&solid), &data, 2, ExportKind::Snapshots, &[0.0, 0.25, 0.5, 0.75, 1.0], &out).unwrap();
    let mut rdr = csv::Reader::from_path(out.join(&files[0])).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["phase", "tau", "xi", "true", "pred"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2 * 5 * 12);
    let mut slices: Vec<(String, String)> = rows.iter().map(|r| (r[0].to_string(), r[1].to_string())).collect();
    slices.dedup();
    assert_eq!(slices.len(), 10);

    let files = export_sample(&gas, None, &data, 2, ExportKind::Heatmap, &[], &out).unwrap();
    assert_eq!(files, vec!["heatmap_pred_gas_2.csv", "heatmap_err_gas_2.csv"]);
    let mut rdr = csv::Reader::from_path(out.join(&files[1])).unwrap();
    assert!(rdr.records().all(|r| r.unwrap()[2].parse::<f64>().unwrap() == 0.0));
}
