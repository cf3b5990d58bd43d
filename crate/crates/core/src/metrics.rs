//! Relative L2 errors of predicted fields against the reference solver.

use std::collections::BTreeMap;

use ndarray::{ArrayView, Axis, Dimension};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldPredictor, Phase};
use crate::icgen::{Dataset, Family, Split};

/// `||pred - truth||_F / ||truth||_F`, unweighted over all entries.
pub fn relative_l2<D: Dimension>(pred: ArrayView<f64, D>, truth: ArrayView<f64, D>) -> Result<f64> {
    if pred.shape() != truth.shape() {
        return Err(Error::Shape(format!(
            "prediction {:?} vs truth {:?}",
            pred.shape(),
            truth.shape()
        )));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (&p, &t) in pred.iter().zip(truth.iter()) {
        num += (p - t) * (p - t);
        den += t * t;
    }
    if !(den > 0.0) {
        return Err(Error::Numerical("reference field has zero norm".into()));
    }
    Ok((num / den).sqrt())
}

pub fn max_abs_error<D: Dimension>(pred: ArrayView<f64, D>, truth: ArrayView<f64, D>) -> f64 {
    pred.iter()
        .zip(truth.iter())
        .fold(0.0_f64, |m, (&p, &t)| m.max((p - t).abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub index: usize,
    pub family: Family,
    pub r_gas: f64,
    pub r_solid: Option<f64>,
    /// Largest pointwise error over every evaluated phase.
    pub max_abs_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMetrics {
    pub count: usize,
    pub mean_r_gas: f64,
    pub mean_r_solid: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: Split,
    pub n_samples: usize,
    pub mean_r_gas: f64,
    pub mean_r_solid: Option<f64>,
    pub max_r_gas: f64,
    pub max_abs_err: f64,
    pub per_family: BTreeMap<Family, FamilyMetrics>,
    /// Sample indices with the largest gas error, worst first.
    pub worst: Vec<usize>,
    #[serde(skip)]
    pub samples: Vec<SampleMetrics>,
}

const WORST_KEPT: usize = 5;
const EVAL_CHUNK: usize = 32;

impl EvalReport {
    fn from_samples(split: Split, samples: Vec<SampleMetrics>) -> Self {
        let n = samples.len();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let gas: Vec<f64> = samples.iter().map(|s| s.r_gas).collect();
        let solid: Option<Vec<f64>> = samples.iter().map(|s| s.r_solid).collect();

        let mut groups: BTreeMap<Family, Vec<&SampleMetrics>> = BTreeMap::new();
        for s in &samples {
            groups.entry(s.family).or_default().push(s);
        }
        let per_family = groups
            .into_iter()
            .map(|(fam, group)| {
                let g: Vec<f64> = group.iter().map(|s| s.r_gas).collect();
                let sol: Option<Vec<f64>> = group.iter().map(|s| s.r_solid).collect();
                let m = FamilyMetrics {
                    count: group.len(),
                    mean_r_gas: mean(&g),
                    mean_r_solid: sol.map(|v| mean(&v)),
                };
                (fam, m)
            })
            .collect();

        let mut order: Vec<&SampleMetrics> = samples.iter().collect();
        order.sort_by(|a, b| b.r_gas.total_cmp(&a.r_gas).then(a.index.cmp(&b.index)));
        let worst = order.iter().take(WORST_KEPT).map(|s| s.index).collect();

        Self {
            split,
            n_samples: n,
            mean_r_gas: mean(&gas),
            mean_r_solid: solid.map(|v| mean(&v)),
            max_r_gas: gas.iter().fold(0.0, |m: f64, &v| m.max(v)),
            max_abs_err: samples.iter().fold(0.0, |m: f64, s| m.max(s.max_abs_err)),
            per_family,
            worst,
            samples,
        }
    }

    /// Writes `index,family,r_gas,r_solid,max_abs_err`; `r_solid` is empty when not evaluated.
    pub fn write_samples_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "family", "r_gas", "r_solid", "max_abs_err"])?;
        for s in &self.samples {
            let solid = s.r_solid.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([
                s.index.to_string(),
                s.family.to_string(),
                s.r_gas.to_string(),
                solid,
                s.max_abs_err.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn expect_phase(p: &dyn FieldPredictor, phase: Phase) -> Result<()> {
    if p.phase() != phase {
        return Err(Error::invalid(
            "model",
            format!("expected a {phase} predictor, got {}", p.phase()),
        ));
    }
    Ok(())
}

/// Scores predictors on one split of `dataset`.
pub fn evaluate(
    gas: &dyn FieldPredictor,
    solid: Option<&dyn FieldPredictor>,
    dataset: &Dataset,
    split: Split,
) -> Result<EvalReport> {
    expect_phase(gas, Phase::Gas)?;
    if let Some(s) = solid {
        expect_phase(s, Phase::Solid)?;
    }
    let indices = dataset.indices(split);
    if indices.is_empty() {
        return Err(Error::invalid("split", format!("`{split}` split is empty")));
    }
    let grid = &dataset.grid;
    let mut samples = Vec::with_capacity(indices.len());
    for part in indices.chunks(EVAL_CHUNK) {
        let ics = dataset.ics.select(Axis(0), part);
        let pred_gas = gas.predict_batch(ics.view(), grid)?;
        let pred_solid = solid.map(|s| s.predict_batch(ics.view(), grid)).transpose()?;
        for (r, &i) in part.iter().enumerate() {
            let pg = pred_gas.index_axis(Axis(0), r);
            let tg = dataset.gas.index_axis(Axis(0), i);
            let r_gas = relative_l2(pg, tg).map_err(|e| sample_err(i, e))?;
            let mut max_abs_err = max_abs_error(pg, tg);
            let r_solid = match &pred_solid {
                Some(ps) => {
                    let ps = ps.index_axis(Axis(0), r);
                    let ts = dataset.solid.index_axis(Axis(0), i);
                    max_abs_err = max_abs_err.max(max_abs_error(ps, ts));
                    Some(relative_l2(ps, ts).map_err(|e| sample_err(i, e))?)
                }
                None => None,
            };
            samples.push(SampleMetrics {
                index: i,
                family: dataset.specs[i].family(),
                r_gas,
                r_solid,
                max_abs_err,
            });
        }
    }
    Ok(EvalReport::from_samples(split, samples))
}

fn sample_err(index: usize, e: Error) -> Error {
    Error::Sample {
        index,
        source: Box::new(e),
    }
}
