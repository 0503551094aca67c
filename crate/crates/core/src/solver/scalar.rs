use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::coeffs::{DecaySpec, HeterogeneitySpec};
use super::grid::{GridSpec, SolutionField};
use super::{diffusion_operator, integrate, sample_profile, BoundaryCondition, InitialProfile, Reaction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalarFamily {
    /// `I_t = d I_xx + r(t) I (1 - I/K)`
    Logistic,
    /// `I_t = d I_xx + r(t) h(x) I`
    Linear,
    /// `I_t = (d e^{-bx} I_x)_x + r(t) I (h(x) - I/K)`
    VariableDiffusionLogistic,
}

/// One scalar model. `scale` multiplies the reaction term (the bifurcation
/// parameter of the Robin-boundary model); it is 1 for ordinary runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarModel {
    pub family: ScalarFamily,
    pub d: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(rename = "K", default = "default_k")]
    pub k: f64,
    pub decay: DecaySpec,
    #[serde(default)]
    pub heterogeneity: HeterogeneitySpec,
    #[serde(default)]
    pub bc: BoundaryCondition,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_k() -> f64 {
    1.0
}

fn default_scale() -> f64 {
    1.0
}

impl ScalarModel {
    pub fn logistic(d: f64, k: f64, decay: DecaySpec) -> Self {
        Self {
            family: ScalarFamily::Logistic,
            d,
            b: 0.0,
            k,
            decay,
            heterogeneity: HeterogeneitySpec::Constant,
            bc: BoundaryCondition::Neumann,
            scale: 1.0,
        }
    }

    pub fn linear(d: f64, decay: DecaySpec, heterogeneity: HeterogeneitySpec) -> Self {
        Self {
            family: ScalarFamily::Linear,
            d,
            b: 0.0,
            k: 1.0,
            decay,
            heterogeneity,
            bc: BoundaryCondition::Neumann,
            scale: 1.0,
        }
    }

    pub fn variable_diffusion(d: f64, b: f64, k: f64, decay: DecaySpec, heterogeneity: HeterogeneitySpec) -> Self {
        Self {
            family: ScalarFamily::VariableDiffusionLogistic,
            d,
            b,
            k,
            decay,
            heterogeneity,
            bc: BoundaryCondition::Neumann,
            scale: 1.0,
        }
    }

    pub fn with_bc(mut self, bc: BoundaryCondition) -> Self {
        self.bc = bc;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::validation(format!("d = {} must be positive", self.d)));
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(Error::validation(format!("b = {} must be non-negative", self.b)));
        }
        if self.family != ScalarFamily::Linear && !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::validation(format!("K = {} must be positive", self.k)));
        }
        if !(self.scale >= 0.0 && self.scale.is_finite()) {
            return Err(Error::validation("reaction scale must be non-negative"));
        }
        self.decay.validate()?;
        match self.family {
            ScalarFamily::Logistic => {
                if self.heterogeneity != HeterogeneitySpec::Constant || self.b != 0.0 {
                    return Err(Error::validation(
                        "logistic family requires constant heterogeneity and b = 0",
                    ));
                }
            }
            ScalarFamily::Linear => {
                if self.b != 0.0 {
                    return Err(Error::validation("linear family requires b = 0"));
                }
            }
            ScalarFamily::VariableDiffusionLogistic => {}
        }
        if let BoundaryCondition::Robin { alpha } = self.bc {
            if !(alpha >= 0.0 && alpha.is_finite()) {
                return Err(Error::validation("Robin coefficient must be non-negative"));
            }
        }
        Ok(())
    }

    /// Diffusivity `a(x) = d e^{-bx}`.
    pub fn diffusivity(&self, x: f64) -> f64 {
        if self.b == 0.0 {
            self.d
        } else {
            self.d * (-self.b * x).exp()
        }
    }

    pub fn reaction(&self, t: f64, x: f64, u: f64) -> f64 {
        let r = self.scale * self.decay.rate(t);
        match self.family {
            ScalarFamily::Logistic => r * u * (1.0 - u / self.k),
            ScalarFamily::Linear => r * self.heterogeneity.eval(x) * u,
            ScalarFamily::VariableDiffusionLogistic => r * u * (self.heterogeneity.eval(x) - u / self.k),
        }
    }
}

impl Reaction for ScalarModel {
    fn eval(&self, t: f64, x: f64, u: &[f64], out: &mut [f64]) {
        out[0] = self.reaction(t, x, u[0]);
    }
}

/// Solve one scalar model on `grid` from the initial profile `phi`.
pub fn solve_scalar(
    model: &ScalarModel,
    grid: &GridSpec,
    phi: &(impl InitialProfile + ?Sized),
) -> Result<SolutionField> {
    model.validate()?;
    grid.validate()?;
    let init = sample_profile(grid, phi)?;
    let phi_max = init.iter().copied().fold(0.0, f64::max);
    let op = diffusion_operator(grid, |x| model.diffusivity(x), model.bc);
    let mut sol = integrate(grid, &[op], model, vec![init], vec!["I".to_string()])?;
    sol.bounds_warning = check_bounds(model, grid, &sol, phi_max);
    Ok(sol)
}

fn check_bounds(model: &ScalarModel, grid: &GridSpec, sol: &SolutionField, phi_max: f64) -> Option<String> {
    const TOL: f64 = 1e-8;
    let upper = match model.family {
        ScalarFamily::Linear => f64::INFINITY,
        _ => {
            let h_max = grid
                .nodes()
                .iter()
                .map(|&x| model.heterogeneity.eval(x))
                .fold(1.0, f64::max);
            (model.k * h_max).max(phi_max)
        }
    };
    for (k, &t) in sol.times.iter().enumerate() {
        for (i, &v) in sol.data[0][k].iter().enumerate() {
            if v < -TOL || v > upper + TOL {
                return Some(format!(
                    "I = {v} at x = {}, t = {t} outside [0, {upper}]",
                    sol.xs[i]
                ));
            }
        }
    }
    None
}

/// Outward information flux `-a(L) u_x(L)` at the right boundary.
pub fn right_boundary_flux(model: &ScalarModel, grid: &GridSpec, u: &[f64]) -> f64 {
    let a = model.diffusivity(grid.upper);
    let n = u.len();
    match model.bc {
        BoundaryCondition::Robin { alpha } => a * alpha * u[n - 1],
        BoundaryCondition::Neumann => 0.0,
    }
}
