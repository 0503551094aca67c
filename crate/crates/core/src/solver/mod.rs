//! Reaction-diffusion solvers on an interval.

mod coeffs;
mod engine;
mod grid;
mod sample;
mod scalar;
mod system;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::InitialDensity;

pub use coeffs::{h_profile, r_decay, DecaySpec, HeterogeneitySpec};
pub use engine::{trapezoid, trapezoid_weights};
pub use grid::{GridSpec, SolutionField};
pub use sample::{sample_at_distances, Sampled};
pub use scalar::{right_boundary_flux, solve_scalar, ScalarFamily, ScalarModel};
pub use system::{solve_system, SystemFamily, SystemModel, INCIDENCE_EPS};

pub(crate) use engine::{diffusion_operator, integrate, Reaction};

/// Boundary closure at the right end; the left end is always no-flux.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BoundaryCondition {
    #[default]
    Neumann,
    /// `u_x(L) + alpha u(L) = 0`.
    Robin { alpha: f64 },
}

/// Anything that can supply initial values at the grid nodes.
pub trait InitialProfile {
    fn value_at(&self, x: f64) -> Result<f64>;
}

impl InitialProfile for InitialDensity {
    fn value_at(&self, x: f64) -> Result<f64> {
        self.eval(x)
    }
}

impl<F: Fn(f64) -> f64> InitialProfile for F {
    fn value_at(&self, x: f64) -> Result<f64> {
        Ok(self(x))
    }
}

pub(crate) fn sample_profile(grid: &GridSpec, phi: &(impl InitialProfile + ?Sized)) -> Result<Vec<f64>> {
    grid.nodes()
        .into_iter()
        .map(|x| {
            let v = phi.value_at(x)?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::validation(format!(
                    "initial value {v} at x = {x} is not finite and non-negative"
                )));
            }
            Ok(v)
        })
        .collect()
}
