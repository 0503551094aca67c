use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::coeffs::DecaySpec;
use super::grid::{GridSpec, SolutionField};
use super::{diffusion_operator, integrate, sample_profile, BoundaryCondition, InitialProfile, Reaction};

/// Below this total `S + I` the standard incidence `S I / (S + I)` is taken as 0.
pub const INCIDENCE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemFamily {
    /// Two logistic sources with mutual benefit `+alpha_i u1 u2`.
    Cooperative,
    /// Two logistic sources with competition `-alpha_i u1 u2`.
    Competing,
    /// `S, I` with standard incidence `r(t) S I / (S + I)`.
    Si,
    /// `S, I, R` with incidence `beta S I / (S + I)` and removal `gamma I`.
    Sir,
}

impl SystemFamily {
    pub fn component_count(self) -> usize {
        match self {
            SystemFamily::Sir => 3,
            _ => 2,
        }
    }

    pub fn component_names(self) -> &'static [&'static str] {
        match self {
            SystemFamily::Cooperative | SystemFamily::Competing => &["u1", "u2"],
            SystemFamily::Si => &["S", "I"],
            SystemFamily::Sir => &["S", "I", "R"],
        }
    }
}

/// Parameters of a multi-component model. Unused fields for a family are ignored:
/// `rates`/`capacities`/`interaction` for the two-source families, `rates[0]` for
/// SI, `beta`/`gamma` for SIR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemModel {
    pub family: SystemFamily,
    pub diffusivities: Vec<f64>,
    #[serde(default)]
    pub rates: Vec<DecaySpec>,
    #[serde(default)]
    pub capacities: Vec<f64>,
    #[serde(default)]
    pub interaction: [f64; 2],
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub bc: BoundaryCondition,
}

impl SystemModel {
    pub fn two_source(
        family: SystemFamily,
        d: [f64; 2],
        r: [DecaySpec; 2],
        k: [f64; 2],
        alpha: [f64; 2],
    ) -> Self {
        Self {
            family,
            diffusivities: d.to_vec(),
            rates: r.to_vec(),
            capacities: k.to_vec(),
            interaction: alpha,
            beta: 0.0,
            gamma: 0.0,
            bc: BoundaryCondition::Neumann,
        }
    }

    pub fn si(d: [f64; 2], r: DecaySpec) -> Self {
        Self {
            family: SystemFamily::Si,
            diffusivities: d.to_vec(),
            rates: vec![r],
            capacities: Vec::new(),
            interaction: [0.0; 2],
            beta: 0.0,
            gamma: 0.0,
            bc: BoundaryCondition::Neumann,
        }
    }

    pub fn sir(d: [f64; 3], beta: f64, gamma: f64) -> Self {
        Self {
            family: SystemFamily::Sir,
            diffusivities: d.to_vec(),
            rates: Vec::new(),
            capacities: Vec::new(),
            interaction: [0.0; 2],
            beta,
            gamma,
            bc: BoundaryCondition::Neumann,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nc = self.family.component_count();
        if self.diffusivities.len() != nc {
            return Err(Error::validation(format!(
                "{:?} needs {nc} diffusivities, got {}",
                self.family,
                self.diffusivities.len()
            )));
        }
        if self.diffusivities.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::validation("diffusivities must be positive"));
        }
        match self.family {
            SystemFamily::Cooperative | SystemFamily::Competing => {
                if self.rates.len() != 2 || self.capacities.len() != 2 {
                    return Err(Error::validation("two-source families need 2 rates and 2 capacities"));
                }
                if self.capacities.iter().any(|k| !(*k > 0.0)) {
                    return Err(Error::validation("capacities must be positive"));
                }
                if self.interaction.iter().any(|a| !(*a >= 0.0)) {
                    return Err(Error::validation("interaction coefficients must be non-negative"));
                }
            }
            SystemFamily::Si => {
                if self.rates.len() != 1 {
                    return Err(Error::validation("si needs exactly one rate"));
                }
            }
            SystemFamily::Sir => {
                if !(self.beta >= 0.0 && self.gamma >= 0.0) {
                    return Err(Error::validation("beta and gamma must be non-negative"));
                }
            }
        }
        for r in &self.rates {
            r.validate()?;
        }
        Ok(())
    }
}

fn incidence(s: f64, i: f64) -> f64 {
    let total = s + i;
    if total < INCIDENCE_EPS {
        0.0
    } else {
        s * i / total
    }
}

impl Reaction for SystemModel {
    fn eval(&self, t: f64, _x: f64, u: &[f64], out: &mut [f64]) {
        match self.family {
            SystemFamily::Cooperative | SystemFamily::Competing => {
                let sign = if self.family == SystemFamily::Cooperative { 1.0 } else { -1.0 };
                let (u1, u2) = (u[0], u[1]);
                let r1 = self.rates[0].rate(t);
                let r2 = self.rates[1].rate(t);
                out[0] = r1 * u1 * (1.0 - u1 / self.capacities[0]) + sign * self.interaction[0] * u1 * u2;
                out[1] = r2 * u2 * (1.0 - u2 / self.capacities[1]) + sign * self.interaction[1] * u1 * u2;
            }
            SystemFamily::Si => {
                let flow = self.rates[0].rate(t) * incidence(u[0], u[1]);
                out[0] = -flow;
                out[1] = flow;
            }
            SystemFamily::Sir => {
                let flow = self.beta * incidence(u[0], u[1]);
                let removal = self.gamma * u[1];
                out[0] = -flow;
                out[1] = flow - removal;
                out[2] = removal;
            }
        }
    }
}

/// Solve a multi-component model; `inits` holds one profile per component.
pub fn solve_system(
    model: &SystemModel,
    grid: &GridSpec,
    inits: &[&dyn InitialProfile],
) -> Result<SolutionField> {
    model.validate()?;
    grid.validate()?;
    let nc = model.family.component_count();
    if inits.len() != nc {
        return Err(Error::validation(format!(
            "{:?} needs {nc} initial profiles, got {}",
            model.family,
            inits.len()
        )));
    }
    let init = inits
        .iter()
        .map(|p| sample_profile(grid, *p))
        .collect::<Result<Vec<_>>>()?;
    let ops: Vec<_> = model
        .diffusivities
        .iter()
        .map(|&d| diffusion_operator(grid, |_| d, model.bc))
        .collect();
    let names = model
        .family
        .component_names()
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut sol = integrate(grid, &ops, model, init, names)?;
    sol.bounds_warning = sol
        .data
        .iter()
        .enumerate()
        .find_map(|(c, snaps)| {
            let min = snaps.iter().flatten().copied().fold(f64::INFINITY, f64::min);
            (min < -1e-10).then(|| format!("component {} reached {min}", sol.names[c]))
        });
    Ok(sol)
}
