//! Reference solver for the coupled gas/solid balances.
//!
//! Cell-centred finite volumes with first-order upwind convection and backward
//! Euler in time. Implicit upwinding couples each cell only to its upstream
//! neighbour, so one step is a single inlet-to-outlet sweep that solves a 2x2
//! system per cell:
//!
//! ```text
//! | g_t + g_x + 1    -1      | |Cg|   | g_t Cg_old + g_x Cg_upstream |
//! |      -1        s_t + 1   | |Cs| = | s_t Cs_old                   |
//! ```
//!
//! with `g_t = a_gas_t/dtau`, `g_x = a_gas_x/dxi`, `s_t = a_solid_t/dtau`. The
//! inlet face carries `Cg = 1`; the outlet face takes the upwind (last cell)
//! value, which is the zero-gradient condition.

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, FieldPredictor, Phase};
use crate::physics::{equilibrium_solid_ic, DimlessCoeffs};

/// Normalized feed concentration at the inlet face.
pub const INLET_CONCENTRATION: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Grid {
    /// Number of finite-volume cells on `(0, 1)`.
    pub n_x: usize,
    /// Number of stored time levels including `tau* = 0`.
    pub n_t: usize,
    /// Backward-Euler steps between consecutive stored levels.
    pub substeps: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            n_x: 100,
            n_t: 101,
            substeps: 1,
        }
    }
}

impl Grid {
    pub fn new(n_x: usize, n_t: usize) -> Self {
        Self {
            n_x,
            n_t,
            substeps: 1,
        }
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_x == 0 {
            return Err(Error::invalid("n_x", "need at least one cell"));
        }
        if self.n_t < 2 {
            return Err(Error::invalid("n_t", "need at least two time levels"));
        }
        if self.substeps == 0 {
            return Err(Error::invalid("substeps", "must be >= 1"));
        }
        Ok(())
    }

    pub fn dxi(&self) -> f64 {
        1.0 / self.n_x as f64
    }

    /// Spacing between stored levels.
    pub fn dtau_stored(&self) -> f64 {
        1.0 / (self.n_t - 1) as f64
    }

    /// Internal time step.
    pub fn dtau(&self) -> f64 {
        1.0 / ((self.n_t - 1) * self.substeps) as f64
    }

    pub fn xi_centers(&self) -> Vec<f64> {
        let n = self.n_x as f64;
        (1..=self.n_x).map(|j| (j as f64 - 0.5) / n).collect()
    }

    pub fn tau_levels(&self) -> Vec<f64> {
        let last = (self.n_t - 1) as f64;
        (0..self.n_t).map(|k| k as f64 / last).collect()
    }

    pub fn n_points(&self) -> usize {
        self.n_x * self.n_t
    }

    /// All `(xi*, tau*)` pairs in row-major field order (cell-major, time-minor).
    pub fn coordinates(&self) -> Array2<f64> {
        let xi = self.xi_centers();
        let tau = self.tau_levels();
        let mut out = Array2::zeros((self.n_points(), 2));
        for (j, &x) in xi.iter().enumerate() {
            for (k, &t) in tau.iter().enumerate() {
                let row = j * self.n_t + k;
                out[[row, 0]] = x;
                out[[row, 1]] = t;
            }
        }
        out
    }

    /// Flat indices of the `tau* = 0` column within [`Grid::coordinates`].
    pub fn initial_column(&self) -> Vec<usize> {
        (0..self.n_x).map(|j| j * self.n_t).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub gas: Field,
    pub solid: Field,
    /// Discrete mass balance defect for every interval between stored levels.
    pub mass_balance_residual: Vec<f64>,
}

/// Integrates both phases from a gas-phase initial profile.
///
/// The solid phase starts in equilibrium with the gas phase.
pub fn solve(ic: ArrayView1<f64>, coeffs: &DimlessCoeffs, grid: &Grid) -> Result<SolveOutput> {
    grid.validate()?;
    if ic.len() != grid.n_x {
        return Err(Error::Shape(format!(
            "initial condition has {} values, grid has {} cells",
            ic.len(),
            grid.n_x
        )));
    }
    if let Some(v) = ic.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid("ic", format!("non-finite value {v}")));
    }
    let solid_ic = equilibrium_solid_ic(ic)?;
    for (name, c) in [
        ("a_gas_t", coeffs.a_gas_t),
        ("a_gas_x", coeffs.a_gas_x),
        ("a_solid_t", coeffs.a_solid_t),
    ] {
        if !c.is_finite() || c <= 0.0 {
            return Err(Error::invalid(name, format!("must be finite and > 0, got {c}")));
        }
    }

    let n = grid.n_x;
    let dxi = grid.dxi();
    let dtau = grid.dtau();
    let g_t = coeffs.a_gas_t / dtau;
    let g_x = coeffs.a_gas_x / dxi;
    let s_t = coeffs.a_solid_t / dtau;
    let a11 = g_t + g_x + 1.0;
    let a22 = s_t + 1.0;
    let det = a11 * a22 - 1.0;

    let mut gas = Array2::zeros((n, grid.n_t));
    let mut solid = Array2::zeros((n, grid.n_t));
    gas.column_mut(0).assign(&ic);
    solid.column_mut(0).assign(&solid_ic);

    let mut c = ic.to_vec();
    let mut s = solid_ic.to_vec();
    let mut residuals = Vec::with_capacity(grid.n_t - 1);

    for level in 1..grid.n_t {
        let mut defect = 0.0;
        for _ in 0..grid.substeps {
            let gas_before: f64 = c.iter().sum();
            let solid_before: f64 = s.iter().sum();
            let mut upstream = INLET_CONCENTRATION;
            for j in 0..n {
                let r1 = g_t * c[j] + g_x * upstream;
                let r2 = s_t * s[j];
                c[j] = (r1 * a22 + r2) / det;
                s[j] = (a11 * r2 + r1) / det;
                upstream = c[j];
            }
            let gas_after: f64 = c.iter().sum();
            let solid_after: f64 = s.iter().sum();
            defect += step_defect(
                coeffs,
                dxi,
                dtau,
                (gas_after - gas_before, solid_after - solid_before),
                c[n - 1],
            );
        }
        gas.column_mut(level).assign(&ArrayView1::from(&c));
        solid.column_mut(level).assign(&ArrayView1::from(&s));
        residuals.push(defect);
    }

    if gas.iter().chain(solid.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("solver produced non-finite values".into()));
    }

    Ok(SolveOutput {
        gas: Field::new(gas, Phase::Gas),
        solid: Field::new(solid, Phase::Solid),
        mass_balance_residual: residuals,
    })
}

/// Accumulation in both phases minus net convective inflow over one step.
fn step_defect(
    coeffs: &DimlessCoeffs,
    dxi: f64,
    dtau: f64,
    (gas_change, solid_change): (f64, f64),
    outlet: f64,
) -> f64 {
    let accumulation = coeffs.a_gas_t * gas_change * dxi + coeffs.a_solid_t * solid_change * dxi;
    let influx = dtau * coeffs.a_gas_x * (INLET_CONCENTRATION - outlet);
    accumulation - influx
}

/// Recomputes the discrete balance defect from the stored levels.
///
/// Summing the cell equations over the bed telescopes the convective fluxes, so
/// for each step
///
/// ```text
/// a_gas_t sum(dCg) dxi + a_solid_t sum(dCs) dxi = dtau a_gas_x (C_in - Cg_out)
/// ```
///
/// holds exactly. Needs one internal step per stored level, since the outlet
/// flux is only known at stored levels.
pub fn mass_balance_residual(
    out: &SolveOutput,
    coeffs: &DimlessCoeffs,
    grid: &Grid,
) -> Result<Vec<f64>> {
    check_output_grid(out, grid)?;
    if grid.substeps != 1 {
        return Err(Error::Shape(
            "stored levels do not resolve internal substeps; use SolveOutput::mass_balance_residual"
                .into(),
        ));
    }
    let gas = &out.gas.values;
    let solid = &out.solid.values;
    let dxi = grid.dxi();
    let dtau = grid.dtau();
    Ok((1..grid.n_t)
        .map(|k| {
            let dg = gas.column(k).sum() - gas.column(k - 1).sum();
            let ds = solid.column(k).sum() - solid.column(k - 1).sum();
            step_defect(coeffs, dxi, dtau, (dg, ds), gas[[grid.n_x - 1, k]])
        })
        .collect())
}

/// Largest per-step defect divided by the inlet inflow over one step.
pub fn relative_mass_balance(residuals: &[f64], coeffs: &DimlessCoeffs, grid: &Grid) -> f64 {
    let inflow = grid.dtau_stored() * coeffs.a_gas_x * INLET_CONCENTRATION;
    residuals.iter().fold(0.0_f64, |m, r| m.max(r.abs())) / inflow
}

fn check_output_grid(out: &SolveOutput, grid: &Grid) -> Result<()> {
    let dim = (grid.n_x, grid.n_t);
    if out.gas.values.dim() != dim || out.solid.values.dim() != dim {
        return Err(Error::Shape(format!(
            "solve output is {:?}, grid is {dim:?}",
            out.gas.values.dim()
        )));
    }
    Ok(())
}

/// Averages groups of `factor` adjacent cells along the first axis (fine to coarse cells).
pub fn coarsen(values: ArrayView2<f64>, factor: usize) -> Result<Array2<f64>> {
    if factor == 0 || !values.nrows().is_multiple_of(factor) {
        return Err(Error::invalid(
            "factor",
            format!("{factor} does not divide {} cells", values.nrows()),
        ));
    }
    let n = values.nrows() / factor;
    let mut out = Array2::zeros((n, values.ncols()));
    for (j, mut row) in out.rows_mut().into_iter().enumerate() {
        for r in 0..factor {
            row += &values.row(j * factor + r);
        }
        row /= factor as f64;
    }
    Ok(out)
}

/// The numerical solver packaged as a predictor, used as a perfect-model oracle.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceSolver {
    pub coeffs: DimlessCoeffs,
    pub phase: Phase,
}

impl FieldPredictor for ReferenceSolver {
    fn phase(&self) -> Phase {
        self.phase
    }

    fn predict(&self, ic: ArrayView1<f64>, grid: &Grid) -> Result<Array2<f64>> {
        let out = solve(ic, &self.coeffs, grid)?;
        Ok(match self.phase {
            Phase::Gas => out.gas.values,
            Phase::Solid => out.solid.values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{dimensionless_coefficients, PhysicalParams};
    use ndarray::Array1;

    fn coeffs() -> DimlessCoeffs {
        dimensionless_coefficients(&PhysicalParams::default()).unwrap()
    }

    #[test]
    fn grid_layout() {
        let g = Grid::default();
        let xi = g.xi_centers();
        assert_eq!(xi.len(), 100);
        assert!((xi[0] - 0.005).abs() < 1e-15);
        assert!(xi.windows(2).all(|w| w[1] > w[0]));
        let tau = g.tau_levels();
        assert_eq!(tau.len(), 101);
        assert_eq!(tau[0], 0.0);
        assert_eq!(tau[100], 1.0);
        let coords = g.coordinates();
        assert_eq!(coords.nrows(), 10_100);
        assert_eq!(coords[[101, 0]], xi[1]);
        assert_eq!(coords[[101, 1]], 0.0);
        assert_eq!(g.initial_column()[3], 303);
    }

    #[test]
    fn fixed_point() {
        let out = solve(Array1::ones(100).view(), &coeffs(), &Grid::default()).unwrap();
        let dev = out
            .gas
            .values
            .iter()
            .chain(out.solid.values.iter())
            .fold(0.0_f64, |m, v| m.max((v - 1.0).abs()));
        assert!(dev <= 1e-12, "deviation {dev}");
        assert!(out.mass_balance_residual.iter().all(|r| r.abs() <= 1e-14));
    }

    #[test]
    fn breakthrough_is_monotone_in_time() {
        let out = solve(Array1::zeros(100).view(), &coeffs(), &Grid::default()).unwrap();
        let gas = &out.gas.values;
        for j in 0..100 {
            for k in 1..101 {
                assert!(gas[[j, k]] >= gas[[j, k - 1]] - 1e-15, "cell {j} level {k}");
            }
        }
        // Upstream cells saturate first.
        for k in 1..101 {
            for j in 1..100 {
                assert!(gas[[j - 1, k]] >= gas[[j, k]] - 1e-15);
            }
        }
        assert!(gas[[0, 1]] > gas[[99, 1]]);
    }

    #[test]
    fn initial_columns_match_ic() {
        let ic = Array1::linspace(0.1, 0.9, 100);
        let out = solve(ic.view(), &coeffs(), &Grid::default()).unwrap();
        assert_eq!(out.gas.values.column(0), ic);
        assert_eq!(out.solid.values.column(0), ic);
    }

    #[test]
    fn rejects_bad_input() {
        let c = coeffs();
        let g = Grid::default();
        assert!(matches!(solve(Array1::zeros(99).view(), &c, &g), Err(Error::Shape(_))));
        let mut ic = Array1::zeros(100);
        ic[4] = f64::NAN;
        assert!(matches!(solve(ic.view(), &c, &g), Err(Error::Validation { .. })));
        ic[4] = 1.5;
        assert!(solve(ic.view(), &c, &g).is_err());
    }

    #[test]
    fn stored_and_recomputed_residuals_agree() {
        let c = coeffs();
        let g = Grid::default();
        let ic = Array1::from_shape_fn(100, |j| 0.5 + 0.4 * (j as f64 * 0.2).sin());
        let out = solve(ic.view(), &c, &g).unwrap();
        let recomputed = mass_balance_residual(&out, &c, &g).unwrap();
        for (a, b) in recomputed.iter().zip(&out.mass_balance_residual) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(relative_mass_balance(&recomputed, &c, &g) <= 1e-9);
    }

    #[test]
    fn residual_needs_matching_grid() {
        let c = coeffs();
        let out = solve(Array1::zeros(100).view(), &c, &Grid::default()).unwrap();
        assert!(mass_balance_residual(&out, &c, &Grid::new(50, 101)).is_err());
        let sub = Grid::default().with_substeps(2);
        let out = solve(Array1::zeros(100).view(), &c, &sub).unwrap();
        assert!(mass_balance_residual(&out, &c, &sub).is_err());
        assert!(relative_mass_balance(&out.mass_balance_residual, &c, &sub) <= 1e-9);
    }

    #[test]
    fn residual_independent_of_summation_order() {
        let c = coeffs();
        let g = Grid::default();
        let ic = Array1::from_shape_fn(100, |j| (j as f64 / 99.0).powi(2));
        let out = solve(ic.view(), &c, &g).unwrap();
        let r = mass_balance_residual(&out, &c, &g).unwrap();
        for k in 1..g.n_t {
            let dg = out.gas.values.column(k).sum() - out.gas.values.column(k - 1).sum();
            let ds = out.solid.values.column(k).sum() - out.solid.values.column(k - 1).sum();
            let solid_first = c.a_solid_t * ds * g.dxi() + c.a_gas_t * dg * g.dxi()
                - g.dtau() * c.a_gas_x * (1.0 - out.gas.values[[99, k]]);
            assert!((solid_first - r[k - 1]).abs() <= 1e-12);
        }
    }
}
