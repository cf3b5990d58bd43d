//! On-disk dataset layout: `manifest.json` plus `ics.bin`, `gas.bin`, `solid.bin`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::{Array2, Array3, ArrayD, Ix2, Ix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::icgen::{Dataset, DatasetKind, Family, ICSpec, RangeTable, Splits};
use crate::io::{load_array, save_array};
use crate::physics::PhysicalParams;
use crate::solver::Grid;

const DATASET_FORMAT: &str = "adsorb-dataset/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub kind: DatasetKind,
    pub seed: u64,
    pub n_samples: usize,
    pub family_counts: BTreeMap<Family, usize>,
    pub grid: Grid,
    pub params: PhysicalParams,
    pub ranges: RangeTable,
    pub splits: Splits,
    pub specs: Vec<ICSpec>,
}

impl DatasetManifest {
    pub fn of(dataset: &Dataset) -> Self {
        Self {
            format: DATASET_FORMAT.into(),
            kind: dataset.kind,
            seed: dataset.seed,
            n_samples: dataset.len(),
            family_counts: dataset.family_counts(),
            grid: dataset.grid,
            params: dataset.params,
            ranges: dataset.ranges.clone(),
            splits: dataset.splits.clone(),
            specs: dataset.specs.clone(),
        }
    }
}

pub fn save_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let manifest = DatasetManifest::of(dataset);
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    save_array(dir.join("ics.bin"), dataset.ics.view())?;
    save_array(dir.join("gas.bin"), dataset.gas.view())?;
    save_array(dir.join("solid.bin"), dataset.solid.view())?;
    Ok(())
}

pub fn load_manifest(dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = dir.as_ref().join("manifest.json");
    if !path.is_file() {
        return Err(Error::missing(&path));
    }
    let m: DatasetManifest = serde_json::from_str(&fs::read_to_string(path)?)?;
    if m.format != DATASET_FORMAT {
        return Err(Error::Format(format!("unknown dataset format `{}`", m.format)));
    }
    Ok(m)
}

fn load_f64(path: &Path) -> Result<ArrayD<f64>> {
    if !path.is_file() {
        return Err(Error::missing(path));
    }
    Ok(load_array(path)?.into_f64())
}

pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let m = load_manifest(dir)?;
    m.grid.validate()?;
    let (n, nx, nt) = (m.n_samples, m.grid.n_x, m.grid.n_t);
    if m.specs.len() != n {
        return Err(Error::Format(format!("manifest lists {} specs for {n} samples", m.specs.len())));
    }
    let all: Vec<usize> = m
        .splits
        .train
        .iter()
        .chain(&m.splits.val)
        .chain(&m.splits.test)
        .copied()
        .collect();
    let mut seen = vec![false; n];
    for &i in &all {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::Format(format!("split index {i} is out of range or repeated")));
        }
    }
    if all.len() != n {
        return Err(Error::Format("splits do not cover every sample".into()));
    }

    let shape_err = |name: &str, e: ndarray::ShapeError| Error::Format(format!("{name}: {e}"));
    let ics: Array2<f64> = load_f64(&dir.join("ics.bin"))?
        .into_dimensionality::<Ix2>()
        .map_err(|e| shape_err("ics.bin", e))?;
    let gas: Array3<f64> = load_f64(&dir.join("gas.bin"))?
        .into_dimensionality::<Ix3>()
        .map_err(|e| shape_err("gas.bin", e))?;
    let solid: Array3<f64> = load_f64(&dir.join("solid.bin"))?
        .into_dimensionality::<Ix3>()
        .map_err(|e| shape_err("solid.bin", e))?;
    if ics.dim() != (n, nx) || gas.dim() != (n, nx, nt) || solid.dim() != (n, nx, nt) {
        return Err(Error::Format(format!(
            "array shapes {:?}, {:?}, {:?} disagree with manifest ({n}, {nx}, {nt})",
            ics.dim(),
            gas.dim(),
            solid.dim()
        )));
    }
    Ok(Dataset {
        kind: m.kind,
        seed: m.seed,
        grid: m.grid,
        params: m.params,
        ranges: m.ranges,
        ics,
        gas,
        solid,
        specs: m.specs,
        splits: m.splits,
    })
}
