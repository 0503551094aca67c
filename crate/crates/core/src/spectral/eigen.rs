use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Tridiagonal;
use crate::solver::{diffusion_operator, trapezoid_weights, BoundaryCondition, GridSpec, HeterogeneitySpec};

const MAX_ITERATIONS: usize = 200;

/// Weighted Sturm–Liouville problem `-(a u')' = mu h u` on `[l, L]` with
/// `a(x) = d e^{-bx}`, `u'(l) = 0` and `u'(L) + alpha_r u(L) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenProblem {
    pub d: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub heterogeneity: HeterogeneitySpec,
    pub alpha_r: f64,
    pub l: f64,
    #[serde(rename = "L")]
    pub upper: f64,
    pub nx: usize,
}

impl EigenProblem {
    fn diffusivity(&self, x: f64) -> f64 {
        self.d * (-self.b * x).exp()
    }

    fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.l, self.upper, self.nx, 0.0, 0.0, 1.0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::validation("d must be positive"));
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(Error::validation("b must be non-negative"));
        }
        if !(self.alpha_r >= 0.0 && self.alpha_r.is_finite()) {
            return Err(Error::validation("alpha_r must be non-negative"));
        }
        Ok(())
    }
}

/// Principal eigenvalue `mu1+` with its positive eigenfunction (max-normalized).
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub mu: f64,
    pub xs: Vec<f64>,
    pub u: Vec<f64>,
}

struct Symmetric {
    diag: Vec<f64>,
    /// `off[i]` couples `i` and `i + 1`.
    off: Vec<f64>,
}

impl Symmetric {
    /// Number of eigenvalues below `x` (Sturm sequence).
    fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.diag.len() {
            let coupling = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] / q };
            q = self.diag[i] - x - coupling;
            if q == 0.0 {
                q = -f64::EPSILON * (self.diag[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    fn rayleigh(&self, y: &[f64]) -> f64 {
        let n = y.len();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            let mut cy = self.diag[i] * y[i];
            if i > 0 {
                cy += self.off[i - 1] * y[i - 1];
            }
            if i + 1 < n {
                cy += self.off[i] * y[i + 1];
            }
            num += y[i] * cy;
            den += y[i] * y[i];
        }
        num / den
    }
}

/// Smallest eigenvalue of the discretized problem, located by Sturm bisection
/// and refined by shifted inverse iteration.
pub fn principal_eigenvalue(problem: &EigenProblem) -> Result<Eigenpair> {
    problem.validate()?;
    let grid = problem.grid()?;
    let xs = grid.nodes();
    let h: Vec<f64> = xs.iter().map(|&x| problem.heterogeneity.eval(x)).collect();
    if let Some((x, v)) = xs.iter().zip(&h).find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::Unsupported(format!(
            "h({x}) = {v}: sign-indefinite weights are not supported"
        )));
    }
    let op = diffusion_operator(&grid, |x| problem.diffusivity(x), BoundaryCondition::Robin { alpha: problem.alpha_r });
    let w = trapezoid_weights(&grid);
    let n = xs.len();
    // K = -W L is symmetric, M = W diag(h); scale to M^{-1/2} K M^{-1/2}.
    let m: Vec<f64> = w.iter().zip(&h).map(|(w, h)| w * h).collect();
    let sym = Symmetric {
        diag: (0..n).map(|i| -w[i] * op.diag[i] / m[i]).collect(),
        off: (0..n - 1)
            .map(|i| -w[i] * op.upper[i] / (m[i] * m[i + 1]).sqrt())
            .collect(),
    };

    let (mut lo, mut hi) = sym.gershgorin();
    let norm = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    while hi - lo > 8.0 * f64::EPSILON * norm {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sym.count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let shift = lo - 16.0 * f64::EPSILON * norm;

    let mut mat = Tridiagonal::zeros(n);
    for i in 0..n {
        mat.diag[i] = sym.diag[i] - shift;
        if i > 0 {
            mat.lower[i] = sym.off[i - 1];
        }
        if i + 1 < n {
            mat.upper[i] = sym.off[i];
        }
    }
    let mut y: Vec<f64> = m.iter().map(|v| v.sqrt()).collect();
    normalize(&mut y);
    let mut scratch = vec![0.0; n];
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let mut next = y.clone();
        mat.solve_in_place(&mut next, &mut scratch)?;
        normalize(&mut next);
        if next.iter().sum::<f64>() < 0.0 {
            next.iter_mut().for_each(|v| *v = -*v);
        }
        let change = next
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        y = next;
        if change < 1e-13 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "inverse iteration did not converge in {MAX_ITERATIONS} iterations"
        )));
    }
    let mu = sym.rayleigh(&y);
    let mut u: Vec<f64> = y.iter().zip(&m).map(|(y, m)| y / m.sqrt()).collect();
    let peak = u.iter().copied().fold(0.0, f64::max);
    u.iter_mut().for_each(|v| *v /= peak);
    if u.iter().any(|&v| v < -1e-10) {
        return Err(Error::Numeric("principal eigenfunction changes sign".into()));
    }
    Ok(Eigenpair { mu, xs, u })
}

fn normalize(y: &mut [f64]) {
    let s = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    y.iter_mut().for_each(|v| *v /= s);
}

/// Discrete form of `int h u^2 / (int a u'^2 + a(L) alpha_r u(L)^2)` on the
/// problem's grid; `u` holds nodal values. Equals `1 / mu` for an eigenfunction.
pub fn variational_quotient(problem: &EigenProblem, u: &[f64]) -> Result<f64> {
    let grid = problem.grid()?;
    if u.len() != grid.node_count() {
        return Err(Error::validation("function does not match the grid"));
    }
    let dx = grid.dx();
    let w = trapezoid_weights(&grid);
    let num: f64 = (0..u.len())
        .map(|i| w[i] * problem.heterogeneity.eval(grid.x(i)) * u[i] * u[i])
        .sum();
    let mut den: f64 = u
        .windows(2)
        .enumerate()
        .map(|(i, p)| problem.diffusivity(grid.x(i) + 0.5 * dx) * (p[1] - p[0]).powi(2) / dx)
        .sum();
    let n = u.len() - 1;
    den += problem.diffusivity(problem.upper) * problem.alpha_r * u[n] * u[n];
    Ok(num / den)
}

/// Persistence threshold `mu1+ / r_inf` on the reaction scale.
pub fn persistence_threshold(mu: f64, r_infinity: f64) -> Result<f64> {
    if !(r_infinity > 0.0 && r_infinity.is_finite()) {
        return Err(Error::validation("r_infinity must be positive"));
    }
    Ok(mu / r_infinity)
}
