use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Array3, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Gas,
    Solid,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Phase::Gas => "gas",
            Phase::Solid => "solid",
        })
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gas" => Ok(Phase::Gas),
            "solid" => Ok(Phase::Solid),
            other => Err(Error::invalid("phase", format!("expected gas or solid, got `{other}`"))),
        }
    }
}

/// Normalized concentration on the `(xi*, tau*)` grid; rows are cells, columns time levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Array2<f64>,
    pub phase: Phase,
}

impl Field {
    pub fn new(values: Array2<f64>, phase: Phase) -> Self {
        Self { values, phase }
    }

    pub fn n_x(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.values.ncols()
    }

    /// Profile at the stored level nearest to `tau`, together with that level's index.
    pub fn snapshot(&self, tau: f64) -> Result<(usize, Vec<f64>)> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::invalid("tau", format!("{tau} outside [0, 1]")));
        }
        let last = self.n_t() - 1;
        let k = ((tau * last as f64).round() as usize).min(last);
        Ok((k, self.values.column(k).to_vec()))
    }

    /// Writes `xi,tau,value` rows in row-major order.
    pub fn write_csv<W: std::io::Write>(&self, grid: &Grid, writer: W) -> Result<()> {
        if self.values.dim() != (grid.n_x, grid.n_t) {
            return Err(Error::Shape(format!(
                "field is {:?}, grid is {}x{}",
                self.values.dim(),
                grid.n_x,
                grid.n_t
            )));
        }
        let xi = grid.xi_centers();
        let tau = grid.tau_levels();
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["xi", "tau", "value"])?;
        for ((j, k), v) in self.values.indexed_iter() {
            w.serialize((xi[j], tau[k], *v))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Anything that maps a gas-phase initial profile to a full field of one phase.
pub trait FieldPredictor {
    fn phase(&self) -> Phase;

    /// Returns an `n_x x n_t` matrix on the canonical grid.
    fn predict(&self, ic: ArrayView1<f64>, grid: &Grid) -> Result<Array2<f64>>;

    /// Fields for every row of `ics`, `N x n_x x n_t`.
    fn predict_batch(&self, ics: ArrayView2<f64>, grid: &Grid) -> Result<Array3<f64>> {
        let mut out = Array3::zeros((ics.nrows(), grid.n_x, grid.n_t));
        for (ic, mut dst) in ics.rows().into_iter().zip(out.outer_iter_mut()) {
            dst.assign(&self.predict(ic, grid)?);
        }
        Ok(out)
    }
}
