//! Method-of-lines integrator shared by the scalar and system solvers.
//!
//! Diffusion is discretized in flux form with `a(x)` sampled at half nodes and
//! advanced with the trapezoidal rule; the reaction is explicit. The first two
//! steps are replaced by four backward-Euler half steps to damp the
//! trapezoidal rule's high-frequency ringing on rough initial data.

use crate::error::{Error, Result};
use crate::linalg::Tridiagonal;

use super::grid::{GridSpec, SolutionField};
use super::BoundaryCondition;

const STARTUP_STEPS: usize = 2;
const MAX_HALVINGS: usize = 12;
/// A step is rejected when some value moves by more than this fraction of the
/// largest magnitude in the state.
const MAX_REL_CHANGE: f64 = 0.5;
pub(crate) const MAX_COMPONENTS: usize = 4;

pub(crate) trait Reaction {
    /// Reaction rates at one node. `u` and `out` have one entry per component.
    fn eval(&self, t: f64, x: f64, u: &[f64], out: &mut [f64]);
}

/// Row form of `u -> (a u_x)_x` with the ghost-node boundary closures.
/// The left end is always a no-flux boundary.
pub(crate) fn diffusion_operator(
    grid: &GridSpec,
    a: impl Fn(f64) -> f64,
    bc: BoundaryCondition,
) -> Tridiagonal {
    let n = grid.node_count();
    let dx = grid.dx();
    let dx2 = dx * dx;
    let mut op = Tridiagonal::zeros(n);
    for i in 0..n {
        let x = grid.x(i);
        let a_m = a(x - 0.5 * dx);
        let a_p = a(x + 0.5 * dx);
        if i == 0 {
            op.diag[i] = -2.0 * a_p / dx2;
            op.upper[i] = 2.0 * a_p / dx2;
        } else if i == n - 1 {
            op.lower[i] = 2.0 * a_m / dx2;
            op.diag[i] = -2.0 * a_m / dx2;
            if let BoundaryCondition::Robin { alpha } = bc {
                op.diag[i] -= 2.0 * a(grid.upper) * alpha / dx;
            }
        } else {
            op.lower[i] = a_m / dx2;
            op.diag[i] = -(a_m + a_p) / dx2;
            op.upper[i] = a_p / dx2;
        }
    }
    op
}

/// Trapezoidal quadrature weights matching [`diffusion_operator`]: the weighted
/// sum of a reaction-free Neumann solution is invariant.
pub fn trapezoid_weights(grid: &GridSpec) -> Vec<f64> {
    let dx = grid.dx();
    let n = grid.node_count();
    (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.5 * dx } else { dx })
        .collect()
}

pub fn trapezoid(grid: &GridSpec, u: &[f64]) -> f64 {
    trapezoid_weights(grid).iter().zip(u).map(|(w, v)| w * v).sum()
}

struct Stepper<'a, R: Reaction + ?Sized> {
    grid: &'a GridSpec,
    ops: &'a [Tridiagonal],
    reaction: &'a R,
    xs: Vec<f64>,
    cache: Vec<(f64, f64, Vec<Tridiagonal>)>,
    rates: Vec<Vec<f64>>,
    work: Vec<f64>,
    scratch: Vec<f64>,
    halvings: usize,
}

impl<'a, R: Reaction + ?Sized> Stepper<'a, R> {
    fn matrices(&mut self, tau: f64, theta: f64) -> usize {
        if let Some(pos) = self
            .cache
            .iter()
            .position(|(t, th, _)| *t == tau && *th == theta)
        {
            return pos;
        }
        let mats = self
            .ops
            .iter()
            .map(|op| {
                let mut m = Tridiagonal::zeros(op.len());
                for i in 0..op.len() {
                    m.lower[i] = -theta * tau * op.lower[i];
                    m.diag[i] = 1.0 - theta * tau * op.diag[i];
                    m.upper[i] = -theta * tau * op.upper[i];
                }
                m
            })
            .collect();
        self.cache.push((tau, theta, mats));
        self.cache.len() - 1
    }

    /// One step of size `tau`; `Ok(false)` means the step was rejected.
    fn attempt(&mut self, t: f64, tau: f64, theta: f64, u: &[Vec<f64>], out: &mut [Vec<f64>]) -> Result<bool> {
        let nc = u.len();
        let n = self.xs.len();
        let mut buf = [0.0; MAX_COMPONENTS];
        let mut f = [0.0; MAX_COMPONENTS];
        for i in 0..n {
            for c in 0..nc {
                buf[c] = u[c][i];
            }
            self.reaction.eval(t, self.xs[i], &buf[..nc], &mut f[..nc]);
            for c in 0..nc {
                self.rates[c][i] = f[c];
            }
        }
        let idx = self.matrices(tau, theta);
        let mut scale = 0.0f64;
        for comp in u {
            for v in comp {
                scale = scale.max(v.abs());
            }
        }
        let mut max_change = 0.0f64;
        for c in 0..nc {
            self.ops[c].mul_vec(&u[c], &mut self.work);
            let explicit = (1.0 - theta) * tau;
            for i in 0..n {
                out[c][i] = u[c][i] + explicit * self.work[i] + tau * self.rates[c][i];
            }
            self.cache[idx].2[c].solve_in_place(&mut out[c], &mut self.scratch)?;
            for i in 0..n {
                let v = out[c][i];
                if !v.is_finite() {
                    return Ok(false);
                }
                max_change = max_change.max((v - u[c][i]).abs());
            }
        }
        Ok(max_change <= MAX_REL_CHANGE * scale || max_change == 0.0)
    }

    /// Advance `u` by `tau`, halving on rejection.
    fn advance(&mut self, step: usize, t: f64, tau: f64, theta: f64, depth: usize, u: &mut Vec<Vec<f64>>) -> Result<()> {
        let mut next = u.clone();
        if self.attempt(t, tau, theta, u, &mut next)? {
            *u = next;
            return Ok(());
        }
        if depth >= MAX_HALVINGS {
            return Err(Error::Divergence {
                step,
                time: t,
                reason: format!(
                    "step rejected after {MAX_HALVINGS} halvings (dt = {tau:e}); state non-finite or oscillating"
                ),
            });
        }
        self.halvings += 1;
        let half = 0.5 * tau;
        self.advance(step, t, half, theta, depth + 1, u)?;
        self.advance(step, t + half, half, theta, depth + 1, u)
    }
}

/// Integrate `u_t = (a_c u_x)_x + f(t, x, u)` component-wise from `grid.t0` to `grid.t_end`.
pub(crate) fn integrate<R: Reaction + ?Sized>(
    grid: &GridSpec,
    ops: &[Tridiagonal],
    reaction: &R,
    init: Vec<Vec<f64>>,
    names: Vec<String>,
) -> Result<SolutionField> {
    debug_assert_eq!(ops.len(), init.len());
    debug_assert!(init.len() <= MAX_COMPONENTS);
    let n = grid.node_count();
    let nc = init.len();
    let mut stepper = Stepper {
        grid,
        ops,
        reaction,
        xs: grid.nodes(),
        cache: Vec::new(),
        rates: vec![vec![0.0; n]; nc],
        work: vec![0.0; n],
        scratch: vec![0.0; n],
        halvings: 0,
    };
    let steps = grid.step_count();
    let mut u = init;
    let mut times = vec![grid.t0];
    let mut data: Vec<Vec<Vec<f64>>> = u.iter().map(|c| vec![c.clone()]).collect();
    for k in 0..steps {
        let t = grid.time_after(k);
        let tau = grid.time_after(k + 1) - t;
        if k < STARTUP_STEPS {
            let half = 0.5 * tau;
            stepper.advance(k, t, half, 1.0, 0, &mut u)?;
            stepper.advance(k, t + half, half, 1.0, 0, &mut u)?;
        } else {
            stepper.advance(k, t, tau, 0.5, 0, &mut u)?;
        }
        if (k + 1) % stepper.grid.save_every == 0 || k + 1 == steps {
            times.push(grid.time_after(k + 1));
            for (c, comp) in u.iter().enumerate() {
                data[c].push(comp.clone());
            }
        }
    }
    Ok(SolutionField {
        xs: stepper.xs,
        times,
        names,
        data,
        halvings: stepper.halvings,
        bounds_warning: None,
    })
}
