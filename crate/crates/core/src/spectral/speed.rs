use serde::Serialize;

use crate::error::{Error, Result};

use super::{phi, Linearization};

const LAMBDA_MIN: f64 = 1e-6;
const LAMBDA_MAX: f64 = 1e6;
const SCAN_POINTS: usize = 241;
const REL_TOL: f64 = 1e-10;
const PROFILE_POINTS: usize = 61;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpeedMethod {
    ClosedForm,
    Numeric,
}

/// Minimum wave speed `c*`, its minimizer `lambda*` and a sampled `Phi` curve
/// over `[lambda*/10, 10 lambda*]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedResult {
    pub c_star: f64,
    pub lambda_star: f64,
    pub method: SpeedMethod,
    pub profile: Vec<(f64, f64)>,
}

impl SpeedResult {
    fn build(lin: &Linearization, c_star: f64, lambda_star: f64, method: SpeedMethod) -> Result<Self> {
        let profile = (0..PROFILE_POINTS)
            .map(|k| {
                let s = -1.0 + 2.0 * k as f64 / (PROFILE_POINTS - 1) as f64;
                let l = lambda_star * 10f64.powf(s);
                Ok((l, phi(lin, l)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            c_star,
            lambda_star,
            method,
            profile,
        })
    }

    /// `Phi(lambda*/2) >= c*` and `Phi(2 lambda*) >= c*`, up to rounding.
    pub fn is_local_minimum(&self, lin: &Linearization) -> bool {
        let tol = 1e-12 * self.c_star.abs().max(1.0);
        [0.5, 2.0].iter().all(|f| {
            phi(lin, f * self.lambda_star)
                .map(|v| v >= self.c_star - tol)
                .unwrap_or(false)
        })
    }
}

/// `inf_{lambda > 0} Phi(lambda)` by a logarithmic scan of `[1e-6, 1e6]`
/// followed by golden-section search in `log lambda`.
///
/// Non-cooperative linearizations are accepted; their `Phi` is evaluated with
/// the largest real eigenvalue, which is only meaningful when the spectrum of
/// `A_lambda` is real (as for the SIR linearization). Check
/// [`Linearization::is_cooperative`] when in doubt.
pub fn min_speed_numeric(lin: &Linearization) -> Result<SpeedResult> {
    let (lo, hi) = (LAMBDA_MIN.ln(), LAMBDA_MAX.ln());
    let f = |s: f64| phi(lin, s.exp()).unwrap_or(f64::NAN);
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|k| lo + (hi - lo) * k as f64 / (SCAN_POINTS - 1) as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&s| f(s)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("Phi is not finite on the scan grid".into()));
    }
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if best == 0 || best == SCAN_POINTS - 1 {
        return Err(Error::NoMinimum {
            lo: LAMBDA_MIN,
            hi: LAMBDA_MAX,
        });
    }
    let (mut a, mut b) = (grid[best - 1], grid[best + 1]);
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= REL_TOL * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let s = if fc <= fd { c } else { d };
    let lambda_star = s.exp();
    let c_star = phi(lin, lambda_star)?;
    if c_star < 0.0 {
        return Err(Error::NoMinimum {
            lo: LAMBDA_MIN,
            hi: LAMBDA_MAX,
        });
    }
    SpeedResult::build(lin, c_star, lambda_star, SpeedMethod::Numeric)
}

fn fisher(lin: &Linearization, d: f64, r: f64) -> Result<SpeedResult> {
    SpeedResult::build(lin, 2.0 * (d * r).sqrt(), (r / d).sqrt(), SpeedMethod::ClosedForm)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(format!("{name} = {v} must be positive")))
    }
}

/// Two cooperating sources. The ordered cases (one source dominant in both
/// diffusivity and growth) have the closed form `2 sqrt(d r)` of the dominant
/// source; other cases are minimized numerically.
#[allow(clippy::too_many_arguments)]
pub fn min_speed_cooperative(
    d1: f64,
    r1: f64,
    d2: f64,
    r2: f64,
    alpha1: f64,
    alpha2: f64,
    k1: f64,
    k2: f64,
) -> Result<SpeedResult> {
    for (name, v) in [("d1", d1), ("r1", r1), ("d2", d2), ("r2", r2), ("k1", k1), ("k2", k2)] {
        check_positive(name, v)?;
    }
    if !(alpha1 >= 0.0 && alpha2 >= 0.0) {
        return Err(Error::validation("interaction coefficients must be non-negative"));
    }
    let denominator = r1 * r2 - alpha1 * alpha2 * k1 * k2;
    if denominator <= 0.0 {
        return Err(Error::NoEquilibrium { denominator });
    }
    let lin = Linearization::cooperative([d1, d2], [r1, r2])?;
    if d1 >= d2 && r1 >= r2 {
        fisher(&lin, d1, r1)
    } else if d2 >= d1 && r2 >= r1 {
        fisher(&lin, d2, r2)
    } else {
        min_speed_numeric(&lin)
    }
}

/// Invasion of `u1` into the `u2`-only state: `2 sqrt(d1 (r1 - alpha1 k2))`.
/// Equals the minimum of the full transformed linearization whenever `d1 >= d2`.
pub fn min_speed_competition(d1: f64, r1: f64, alpha1: f64, k2: f64) -> Result<SpeedResult> {
    check_positive("d1", d1)?;
    check_positive("r1", r1)?;
    check_positive("k2", k2)?;
    if !(alpha1 >= 0.0) {
        return Err(Error::validation("alpha1 must be non-negative"));
    }
    let threshold = alpha1 * k2;
    if r1 <= threshold {
        return Err(Error::NoInvasion { r1, threshold });
    }
    let growth = r1 - threshold;
    let lin = Linearization::scalar(d1, growth)?;
    fisher(&lin, d1, growth)
}

/// SIR cut-off speed `2 sqrt(d2 (beta - gamma))`; no wave when `beta <= gamma`.
pub fn min_speed_sir(d2: f64, beta: f64, gamma: f64) -> Result<SpeedResult> {
    check_positive("d2", d2)?;
    if !(beta >= 0.0 && gamma > 0.0 && beta.is_finite()) {
        return Err(Error::validation("beta must be non-negative and gamma positive"));
    }
    if beta <= gamma {
        return Err(Error::NoWave { r0: beta / gamma });
    }
    let lin = Linearization::sir([d2, d2], beta, gamma)?;
    fisher(&lin, d2, beta - gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn fisher_numeric() {
        let lin = Linearization::scalar(1.0, 1.0).unwrap();
        let s = min_speed_numeric(&lin).unwrap();
        assert!(rel(s.c_star, 2.0) < 1e-10);
        assert!(rel(s.lambda_star, 1.0) < 1e-4);
        assert!(s.is_local_minimum(&lin));
        assert_eq!(s.method, SpeedMethod::Numeric);
    }

    #[test]
    fn cooperative_numeric_matches_dominant_source() {
        let lin = Linearization::cooperative([1.0, 0.5], [1.0, 0.5]).unwrap();
        let s = min_speed_numeric(&lin).unwrap();
        assert!(rel(s.c_star, 2.0) < 1e-9);
    }

    #[test]
    fn sir_numeric_and_closed_form() {
        let lin = Linearization::sir([1.0, 1.0], 1.0, 0.25).unwrap();
        let n = min_speed_numeric(&lin).unwrap();
        let c = min_speed_sir(1.0, 1.0, 0.25).unwrap();
        assert!(rel(c.c_star, 3f64.sqrt()) < 1e-15);
        assert!(rel(n.c_star, c.c_star) < 1e-9);
        assert!(matches!(min_speed_sir(1.0, 1.0, 1.0), Err(Error::NoWave { .. })));
        assert_eq!(min_speed_sir(4.0, 2.0, 1.0).unwrap().c_star, 4.0);
    }

    #[test]
    fn cooperative_cases() {
        let s = min_speed_cooperative(1.0, 1.0, 1.0, 1.0, 0.1, 0.1, 1.0, 1.0).unwrap();
        assert_eq!(s.c_star, 2.0);
        assert_eq!(s.method, SpeedMethod::ClosedForm);
        let s = min_speed_cooperative(2.0, 0.5, 1.0, 0.5, 0.1, 0.1, 1.0, 1.0).unwrap();
        assert!(rel(s.c_star, 2.0) < 1e-15);
        let err = min_speed_cooperative(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
        assert!(matches!(err, Err(Error::NoEquilibrium { .. })));
        let s = min_speed_cooperative(2.0, 0.5, 1.0, 1.5, 0.1, 0.1, 1.0, 1.0).unwrap();
        assert_eq!(s.method, SpeedMethod::Numeric);
    }

    #[test]
    fn competition_cases() {
        assert_eq!(min_speed_competition(1.0, 1.0, 0.0, 7.0).unwrap().c_star, 2.0);
        let s = min_speed_competition(1.0, 1.0, 0.5, 1.0).unwrap();
        assert!(rel(s.c_star, 2.0 * 0.5f64.sqrt()) < 1e-15);
        let lin = Linearization::competition([1.0, 0.7], [1.0, 0.9], [0.5, 0.4], 1.0).unwrap();
        let n = min_speed_numeric(&lin).unwrap();
        assert!(rel(n.c_star, s.c_star) < 1e-9);
        assert!(matches!(
            min_speed_competition(1.0, 1.0, 1.0, 1.0),
            Err(Error::NoInvasion { .. })
        ));
    }

    #[test]
    fn decaying_linearization_has_no_minimum() {
        let lin = Linearization::scalar(1.0, -1.0).unwrap();
        assert!(matches!(min_speed_numeric(&lin), Err(Error::NoMinimum { .. })));
    }
}
