//! Physical parameters of the packed bed and the dimensionless transform.
//!
//! With the linear driving force model and a Henry isotherm, the normalized
//! balances for a single adsorbing species read
//!
//! ```text
//! a_gas_t * dCg/dtau + a_gas_x * dCg/dxi = -(Cg - Cs)
//! a_solid_t * dCs/dtau                   =   Cg - Cs
//! ```
//!
//! on the unit square `(xi, tau) in (0,1)^2`, where
//!
//! ```text
//! tau0      = k_g a_s t_tot / ((1 - eps_B) K_eq)
//! xi0       = k_g a_s L / (eps_B v_x)
//! a_gas_t   = eps_B / ((1 - eps_B) K_eq tau0)
//! a_gas_x   = 1 / xi0
//! a_solid_t = 1 / tau0
//! ```

use std::path::Path;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensional constants of the bed, sorbent, flow and equilibrium.
///
/// JSON keys are the conventional symbol names; missing keys fall back to the
/// defaults (1 m bed, 0.1 m/s, porosity 0.5, ...).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    /// Bed length (m).
    #[serde(rename = "L")]
    pub bed_length: f64,
    /// Superficial gas velocity (m/s).
    #[serde(rename = "v_x")]
    pub velocity: f64,
    /// Bed porosity (-).
    #[serde(rename = "eps_B")]
    pub porosity: f64,
    /// Film mass transfer coefficient (m/s).
    #[serde(rename = "k_g")]
    pub mass_transfer: f64,
    /// Particle diameter (m). Only used by the `a_s = 6/d_p` consistency check.
    #[serde(rename = "d_p")]
    pub particle_diameter: f64,
    /// Specific surface area (1/m).
    #[serde(rename = "a_s")]
    pub specific_area: f64,
    /// Henry equilibrium constant (-).
    #[serde(rename = "K_eq")]
    pub equilibrium_constant: f64,
    /// Simulated time horizon (s).
    #[serde(rename = "t_tot")]
    pub total_time: f64,
    /// Reference (feed) concentration (mol/m^3).
    #[serde(rename = "C_0")]
    pub reference_concentration: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            bed_length: 1.0,
            velocity: 0.1,
            porosity: 0.5,
            mass_transfer: 0.01,
            particle_diameter: 0.005,
            specific_area: 1200.0,
            equilibrium_constant: 100.0,
            total_time: 1200.0,
            reference_concentration: 1000.0,
        }
    }
}

impl PhysicalParams {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let params: Self = serde_json::from_str(&text)?;
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("L", self.bed_length),
            ("v_x", self.velocity),
            ("eps_B", self.porosity),
            ("k_g", self.mass_transfer),
            ("d_p", self.particle_diameter),
            ("a_s", self.specific_area),
            ("K_eq", self.equilibrium_constant),
            ("t_tot", self.total_time),
            ("C_0", self.reference_concentration),
        ];
        for (name, value) in fields {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {value}")));
            }
        }
        if self.porosity >= 1.0 {
            return Err(Error::invalid(
                "eps_B",
                format!("porosity must lie in (0, 1), got {}", self.porosity),
            ));
        }
        Ok(())
    }

    /// Relative deviation of `a_s` from the spherical-particle value `6/d_p`.
    pub fn surface_area_mismatch(&self) -> f64 {
        let spherical = 6.0 / self.particle_diameter;
        (self.specific_area - spherical).abs() / spherical
    }

    /// Logs a warning when `a_s` is inconsistent with `d_p`; returns whether the check passed.
    pub fn check_surface_area(&self) -> bool {
        let mismatch = self.surface_area_mismatch();
        if mismatch > 1e-12 {
            log::warn!(
                "a_s = {} differs from 6/d_p = {} (relative {mismatch:.3e})",
                self.specific_area,
                6.0 / self.particle_diameter
            );
            false
        } else {
            true
        }
    }

    /// Rate converting seconds into the dimensionless time `tau`.
    fn tau_rate(&self) -> f64 {
        self.mass_transfer * self.specific_area
            / ((1.0 - self.porosity) * self.equilibrium_constant)
    }

    /// Rate converting metres into the dimensionless length `xi`.
    fn xi_rate(&self) -> f64 {
        self.mass_transfer * self.specific_area / (self.porosity * self.velocity)
    }
}

/// Coefficients of the normalized balances plus the reference scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimlessCoeffs {
    pub tau0: f64,
    pub xi0: f64,
    /// Gas accumulation prefactor.
    pub a_gas_t: f64,
    /// Gas convection prefactor.
    pub a_gas_x: f64,
    /// Solid accumulation prefactor.
    pub a_solid_t: f64,
}

/// Reference scales are the values of `tau` and `xi` at `t_tot` and `L`, so the
/// normalized domain is exactly the unit square.
pub fn dimensionless_coefficients(params: &PhysicalParams) -> Result<DimlessCoeffs> {
    params.validate()?;
    let tau0 = params.tau_rate() * params.total_time;
    let xi0 = params.xi_rate() * params.bed_length;
    Ok(DimlessCoeffs {
        tau0,
        xi0,
        a_gas_t: params.porosity / ((1.0 - params.porosity) * params.equilibrium_constant * tau0),
        a_gas_x: 1.0 / xi0,
        a_solid_t: 1.0 / tau0,
    })
}

/// Maps physical `(x, t)` to normalized `(xi*, tau*)`.
pub fn normalize_coordinates(
    params: &PhysicalParams,
    coeffs: &DimlessCoeffs,
    x: f64,
    t: f64,
) -> (f64, f64) {
    (params.xi_rate() * x / coeffs.xi0, params.tau_rate() * t / coeffs.tau0)
}

/// Inverse of [`normalize_coordinates`].
pub fn physical_coordinates(
    params: &PhysicalParams,
    coeffs: &DimlessCoeffs,
    xi: f64,
    tau: f64,
) -> (f64, f64) {
    (xi * coeffs.xi0 / params.xi_rate(), tau * coeffs.tau0 / params.tau_rate())
}

/// Solid-phase initial profile in local equilibrium with the gas profile.
///
/// With `Cs* = Cs / (K_eq C0)` and a linear isotherm, `K_eq` cancels and the
/// normalized solid profile equals the gas profile.
pub fn equilibrium_solid_ic(gas_ic: ArrayView1<f64>) -> Result<Array1<f64>> {
    if let Some((j, v)) = gas_ic
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(Error::invalid(
            "gas_ic",
            format!("value {v} at index {j} outside [0, 1]"),
        ));
    }
    Ok(gas_ic.to_owned())
}
