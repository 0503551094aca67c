use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time-dependent intrinsic growth rate `r(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DecaySpec {
    /// Solution of `r' = -alpha r + beta`, `r(1) = gamma`.
    OdeDecay { alpha: f64, beta: f64, gamma: f64 },
    /// `r(t) = A + B exp(-C t)`.
    OffsetExp {
        #[serde(rename = "A")]
        a: f64,
        #[serde(rename = "B")]
        b: f64,
        #[serde(rename = "C")]
        c: f64,
    },
    Constant { r: f64 },
}

impl DecaySpec {
    pub fn validate(&self) -> Result<()> {
        let params: &[f64] = match self {
            DecaySpec::OdeDecay { alpha, beta, gamma } => {
                if *alpha == 0.0 {
                    return Err(Error::validation("ode-decay requires alpha > 0"));
                }
                &[*alpha, *beta, *gamma]
            }
            DecaySpec::OffsetExp { a, b, c } => &[*a, *b, *c],
            DecaySpec::Constant { r } => &[*r],
        };
        if params.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::validation(format!(
                "decay rates must be finite and non-negative: {self:?}"
            )));
        }
        Ok(())
    }

    /// Rate at time `t`. Call [`DecaySpec::validate`] first.
    pub fn rate(&self, t: f64) -> f64 {
        match *self {
            DecaySpec::OdeDecay { alpha, beta, gamma } => {
                let limit = beta / alpha;
                limit - (-alpha * (t - 1.0)).exp() * (limit - gamma)
            }
            DecaySpec::OffsetExp { a, b, c } => a + b * (-c * t).exp(),
            DecaySpec::Constant { r } => r,
        }
    }

    /// `lim_{t -> inf} r(t)`.
    pub fn limit(&self) -> f64 {
        match *self {
            DecaySpec::OdeDecay { alpha, beta, .. } => beta / alpha,
            DecaySpec::OffsetExp { a, c, b } => {
                if c > 0.0 {
                    a
                } else {
                    a + b
                }
            }
            DecaySpec::Constant { r } => r,
        }
    }
}

/// Validated evaluation of `r(t)`.
pub fn r_decay(spec: &DecaySpec, t: f64) -> Result<f64> {
    spec.validate()?;
    if matches!(spec, DecaySpec::OdeDecay { .. }) && t < 1.0 {
        return Err(Error::Domain {
            value: t,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }
    Ok(spec.rate(t))
}

/// Distance heterogeneity of the growth rate, `h(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HeterogeneitySpec {
    #[default]
    Constant,
    /// `h(x) = -(x - rho)(x - sigma)`.
    Quadratic { rho: f64, sigma: f64 },
}

impl HeterogeneitySpec {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            HeterogeneitySpec::Constant => 1.0,
            HeterogeneitySpec::Quadratic { rho, sigma } => -(x - rho) * (x - sigma),
        }
    }

    /// Location of the maximum of a quadratic profile.
    pub fn vertex(&self) -> Option<f64> {
        match *self {
            HeterogeneitySpec::Constant => None,
            HeterogeneitySpec::Quadratic { rho, sigma } => Some(0.5 * (rho + sigma)),
        }
    }
}

pub fn h_profile(spec: &HeterogeneitySpec, x: f64) -> f64 {
    spec.eval(x)
}
