//! One-phase free-boundary model
//!
//! ```text
//! u_t = d u_xx + r(t) u (1 - u/K),  0 < x < h(t)
//! u_x(t, 0) = 0,  u(t, h(t)) = 0,  h'(t) = -mu u_x(t, h(t))
//! ```
//!
//! solved on the fixed reference interval `xi = x / h(t) in [0, 1]`, where the
//! equation becomes `v_t = d/h^2 v_xixi + xi h'/h v_xi + r v (1 - v/K)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Tridiagonal;
use crate::solver::{DecaySpec, InitialProfile};

const STARTUP_STEPS: usize = 2;
const MAX_HALVINGS: usize = 12;
const MAX_REL_CHANGE: f64 = 0.5;
const CORRECTOR_PASSES: usize = 2;
/// Largest tolerated negative front velocity before the run is rejected.
pub const RETREAT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StefanModel {
    pub d: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub decay: DecaySpec,
    pub mu: f64,
    pub h0: f64,
}

impl StefanModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("d", self.d), ("K", self.k), ("mu", self.mu), ("h0", self.h0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(format!("{name} = {v} must be positive")));
            }
        }
        self.decay.validate()?;
        if !(self.decay.limit() > 0.0) {
            return Err(Error::validation("the growth rate must have a positive limit"));
        }
        Ok(())
    }
}

/// Reference grid on `[0, 1]` with `n` cells and the time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StefanGrid {
    pub n: usize,
    #[serde(default)]
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Keep a profile every `save_every` steps (the front is kept at every step).
    #[serde(default = "default_save_every")]
    pub save_every: usize,
}

fn default_save_every() -> usize {
    100
}

impl StefanGrid {
    pub fn new(n: usize, t_end: f64, dt: f64) -> Self {
        Self {
            n,
            t0: 0.0,
            t_end,
            dt,
            save_every: default_save_every(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(Error::validation(format!("n = {} < 8", self.n)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::validation("dt must be positive"));
        }
        if !(self.t_end > self.t0) {
            return Err(Error::validation("t_end must exceed t0"));
        }
        if self.save_every == 0 {
            return Err(Error::validation("save_every must be at least 1"));
        }
        Ok(())
    }

    fn step_count(&self) -> usize {
        let n = (self.t_end - self.t0) / self.dt;
        let r = n.round();
        if (n - r).abs() <= 1e-9 * n.max(1.0) {
            r as usize
        } else {
            n.ceil() as usize
        }
    }

    fn time_after(&self, k: usize) -> f64 {
        if k >= self.step_count() {
            self.t_end
        } else {
            self.t0 + k as f64 * self.dt
        }
    }
}

/// Cut-offs that classify a run as vanishing or spreading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Classifier {
    /// Vanishing once `sup u` drops below this value.
    #[serde(default = "default_vanish_tol")]
    pub vanish_tol: f64,
    /// Spreading once `h` exceeds `spread_factor * h0`.
    #[serde(default = "default_spread_factor")]
    pub spread_factor: f64,
}

fn default_vanish_tol() -> f64 {
    1e-6
}

fn default_spread_factor() -> f64 {
    5.0
}

impl Default for Classifier {
    fn default() -> Self {
        Self {
            vanish_tol: default_vanish_tol(),
            spread_factor: default_spread_factor(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Vanishing,
    Spreading,
    Undetermined,
}

/// Front position at every step and profiles on the reference grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontTrajectory {
    pub times: Vec<f64>,
    pub h_values: Vec<f64>,
    /// `sup u` at each entry of `times`.
    pub sup_norm: Vec<f64>,
    pub xi: Vec<f64>,
    pub profile_times: Vec<f64>,
    /// `v(xi)` at each entry of `profile_times`; physical `x = xi * h`.
    pub profiles: Vec<Vec<f64>>,
    pub halvings: usize,
}

impl FrontTrajectory {
    /// Physical `(x, u)` pairs of stored profile `k`.
    pub fn profile_at(&self, k: usize) -> Vec<(f64, f64)> {
        let t = self.profile_times[k];
        let idx = self.times.iter().position(|&s| s == t).unwrap_or(0);
        let h = self.h_values[idx];
        self.xi.iter().zip(&self.profiles[k]).map(|(&s, &v)| (s * h, v)).collect()
    }

    pub fn final_front(&self) -> f64 {
        *self.h_values.last().expect("trajectory is never empty")
    }
}

struct Run<'a> {
    model: &'a StefanModel,
    xi: Vec<f64>,
    dxi: f64,
    mat: Tridiagonal,
    scratch: Vec<f64>,
    halvings: usize,
}

impl Run<'_> {
    /// `h'` from `v_xi(1)` by a one-sided second-order difference.
    fn front_rate(&self, v: &[f64], h: f64, t: f64) -> Result<f64> {
        let n = v.len() - 1;
        let grad = (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * self.dxi);
        let rate = -self.model.mu * grad / h;
        if rate < -RETREAT_TOL {
            return Err(Error::FrontRetreat { time: t, rate });
        }
        Ok(rate.max(0.0))
    }

    /// One step from `(v, h)`; `None` when the step is rejected.
    fn attempt(&mut self, t: f64, tau: f64, theta: f64, v: &[f64], h: f64) -> Result<Option<(Vec<f64>, f64)>> {
        let n = v.len() - 1;
        let rate0 = self.front_rate(v, h, t)?;
        let r = self.model.decay.rate(t);
        let mut h_new = h + tau * rate0;
        let mut out = v.to_vec();
        for _ in 0..CORRECTOR_PASSES {
            let h_mid = 0.5 * (h + h_new);
            let rate_mid = (h_new - h) / tau;
            let diff = self.model.d / (h_mid * h_mid) / (self.dxi * self.dxi);
            let adv = rate_mid / h_mid / (2.0 * self.dxi);
            // operator rows: lower, diag, upper
            let row = |i: usize| -> (f64, f64, f64) {
                if i == 0 {
                    (0.0, -2.0 * diff, 2.0 * diff)
                } else {
                    let a = adv * self.xi[i];
                    (diff - a, -2.0 * diff, diff + a)
                }
            };
            for i in 0..n {
                let (lo, di, up) = row(i);
                let mut lv = di * v[i] + up * v[i + 1];
                if i > 0 {
                    lv += lo * v[i - 1];
                }
                let reaction = r * v[i] * (1.0 - v[i] / self.model.k);
                out[i] = v[i] + (1.0 - theta) * tau * lv + tau * reaction;
                self.mat.lower[i] = -theta * tau * lo;
                self.mat.diag[i] = 1.0 - theta * tau * di;
                self.mat.upper[i] = -theta * tau * up;
            }
            self.mat.lower[n] = 0.0;
            self.mat.diag[n] = 1.0;
            self.mat.upper[n] = 0.0;
            out[n] = 0.0;
            self.mat.solve_in_place(&mut out, &mut self.scratch)?;
            let rate1 = self.front_rate(&out, h_new, t + tau)?;
            h_new = h + 0.5 * tau * (rate0 + rate1);
        }
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut change = 0.0f64;
        for (a, b) in out.iter().zip(v) {
            if !a.is_finite() {
                return Ok(None);
            }
            change = change.max((a - b).abs());
        }
        if !h_new.is_finite() || (change > MAX_REL_CHANGE * scale && change > 0.0) {
            return Ok(None);
        }
        Ok(Some((out, h_new)))
    }

    fn advance(&mut self, step: usize, t: f64, tau: f64, theta: f64, depth: usize, state: &mut (Vec<f64>, f64)) -> Result<()> {
        if let Some(next) = self.attempt(t, tau, theta, &state.0, state.1)? {
            *state = next;
            return Ok(());
        }
        if depth >= MAX_HALVINGS {
            return Err(Error::Divergence {
                step,
                time: t,
                reason: format!("free-boundary step rejected after {MAX_HALVINGS} halvings (dt = {tau:e})"),
            });
        }
        self.halvings += 1;
        let half = 0.5 * tau;
        self.advance(step, t, half, theta, depth + 1, state)?;
        self.advance(step, t + half, half, theta, depth + 1, state)
    }
}

fn check_initial(model: &StefanModel, u0: &(impl InitialProfile + ?Sized), xi: &[f64]) -> Result<Vec<f64>> {
    let values = xi
        .iter()
        .map(|&s| u0.value_at(s * model.h0))
        .collect::<Result<Vec<_>>>()?;
    let peak = values.iter().copied().fold(0.0, f64::max);
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) || !(values[0] > 0.0) {
        return Err(Error::validation("initial density must be finite, non-negative and positive at 0"));
    }
    let end = values[values.len() - 1];
    if end.abs() > 1e-12 * peak.max(1.0) {
        return Err(Error::validation(format!("initial density must vanish at h0 (got {end})")));
    }
    let delta = 1e-4 * model.h0;
    let flat = (u0.value_at(delta)? - values[0]).abs();
    if flat > 1e-6 * peak {
        return Err(Error::validation("initial density must have zero slope at 0"));
    }
    Ok(values)
}

fn integrate(
    model: &StefanModel,
    u0: &(impl InitialProfile + ?Sized),
    grid: &StefanGrid,
    mut stop: impl FnMut(f64, f64) -> bool,
) -> Result<FrontTrajectory> {
    model.validate()?;
    grid.validate()?;
    let n = grid.n;
    let dxi = 1.0 / n as f64;
    let xi: Vec<f64> = (0..=n).map(|i| if i == n { 1.0 } else { i as f64 * dxi }).collect();
    let v0 = check_initial(model, u0, &xi)?;
    let mut run = Run {
        model,
        xi: xi.clone(),
        dxi,
        mat: Tridiagonal::zeros(n + 1),
        scratch: vec![0.0; n + 1],
        halvings: 0,
    };
    let sup = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let mut traj = FrontTrajectory {
        times: vec![grid.t0],
        h_values: vec![model.h0],
        sup_norm: vec![sup(&v0)],
        xi,
        profile_times: vec![grid.t0],
        profiles: vec![v0.clone()],
        halvings: 0,
    };
    let mut state = (v0, model.h0);
    let steps = grid.step_count();
    for k in 0..steps {
        let t = grid.time_after(k);
        let tau = grid.time_after(k + 1) - t;
        if k < STARTUP_STEPS {
            let half = 0.5 * tau;
            run.advance(k, t, half, 1.0, 0, &mut state)?;
            run.advance(k, t + half, half, 1.0, 0, &mut state)?;
        } else {
            run.advance(k, t, tau, 0.5, 0, &mut state)?;
        }
        let t_next = grid.time_after(k + 1);
        let s = sup(&state.0);
        traj.times.push(t_next);
        traj.h_values.push(state.1);
        traj.sup_norm.push(s);
        let done = stop(state.1, s);
        if (k + 1) % grid.save_every == 0 || k + 1 == steps || done {
            traj.profile_times.push(t_next);
            traj.profiles.push(state.0.clone());
        }
        if done {
            break;
        }
    }
    traj.halvings = run.halvings;
    Ok(traj)
}

/// Solve the free-boundary problem from `u0` on `[0, h0]` over the whole window.
pub fn solve_stefan(
    model: &StefanModel,
    u0: &(impl InitialProfile + ?Sized),
    grid: &StefanGrid,
) -> Result<FrontTrajectory> {
    integrate(model, u0, grid, |_, _| false)
}

/// Run until the classifier decides, or to the end of the window.
pub fn classify(
    model: &StefanModel,
    u0: &(impl InitialProfile + ?Sized),
    grid: &StefanGrid,
    classifier: &Classifier,
) -> Result<(Regime, FrontTrajectory)> {
    let horizon = classifier.spread_factor * model.h0;
    let mut regime = Regime::Undetermined;
    let traj = integrate(model, u0, grid, |h, s| {
        if s < classifier.vanish_tol {
            regime = Regime::Vanishing;
        } else if h > horizon {
            regime = Regime::Spreading;
        }
        regime != Regime::Undetermined
    })?;
    Ok((regime, traj))
}

/// Least-squares front speed over the tail of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontSpeed {
    pub k0: f64,
    /// Root-mean-square regression residual.
    pub residual: f64,
    pub samples: usize,
}

pub fn front_speed(traj: &FrontTrajectory, tail_fraction: f64) -> Result<FrontSpeed> {
    front_speed_of(&traj.times, &traj.h_values, tail_fraction)
}

/// [`front_speed`] on raw `(t, h)` samples.
pub fn front_speed_of(times: &[f64], h: &[f64], tail_fraction: f64) -> Result<FrontSpeed> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::validation("tail_fraction must lie in (0, 1)"));
    }
    if times.len() != h.len() {
        return Err(Error::validation("times and front positions differ in length"));
    }
    let count = (tail_fraction * times.len() as f64).floor() as usize;
    if count < 10 {
        return Err(Error::Estimation(format!("tail window has {count} samples, need at least 10")));
    }
    let start = times.len() - count;
    let (ts, hs) = (&times[start..], &h[start..]);
    if hs.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Estimation("front position decreases in the tail window".into()));
    }
    let m = count as f64;
    let t_mean = ts.iter().sum::<f64>() / m;
    let h_mean = hs.iter().sum::<f64>() / m;
    let sxx: f64 = ts.iter().map(|t| (t - t_mean).powi(2)).sum();
    let sxy: f64 = ts.iter().zip(hs).map(|(t, h)| (t - t_mean) * (h - h_mean)).sum();
    if sxx == 0.0 {
        return Err(Error::Estimation("tail window spans no time".into()));
    }
    let k0 = sxy / sxx;
    let intercept = h_mean - k0 * t_mean;
    let ss: f64 = ts.iter().zip(hs).map(|(t, h)| (h - intercept - k0 * t).powi(2)).sum();
    Ok(FrontSpeed {
        k0,
        residual: (ss / m).sqrt(),
        samples: count,
    })
}

/// Bracket `[lo, hi]` around the spreading threshold of `u0 = lambda phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdBracket {
    pub lo: f64,
    pub hi: f64,
    pub bisections: usize,
    /// Set when a midpoint could not be classified before `t_end`; the bracket
    /// is then the last one that was resolved.
    pub undetermined_at: Option<f64>,
}

/// Bisection on `lambda` between a vanishing `lambda_lo` and a spreading `lambda_hi`.
pub fn vanishing_threshold(
    model: &StefanModel,
    phi: &(impl InitialProfile + Sync + ?Sized),
    lambda_lo: f64,
    lambda_hi: f64,
    grid: &StefanGrid,
    classifier: &Classifier,
    bisections: usize,
) -> Result<ThresholdBracket> {
    if !(lambda_lo > 0.0 && lambda_hi > lambda_lo) {
        return Err(Error::validation("need 0 < lambda_lo < lambda_hi"));
    }
    let regime_at = |lambda: f64| -> Result<Regime> {
        let scaled = |x: f64| lambda * phi.value_at(x).unwrap_or(f64::NAN);
        Ok(classify(model, &scaled, grid, classifier)?.0)
    };
    let (r_lo, r_hi) = rayon::join(|| regime_at(lambda_lo), || regime_at(lambda_hi));
    let (r_lo, r_hi) = (r_lo?, r_hi?);
    if r_lo != Regime::Vanishing || r_hi != Regime::Spreading {
        return Err(Error::Range(format!(
            "lambda range [{lambda_lo}, {lambda_hi}] classifies as {r_lo:?} / {r_hi:?}; \
             need vanishing at the low end and spreading at the high end"
        )));
    }
    let (mut lo, mut hi) = (lambda_lo, lambda_hi);
    for k in 0..bisections {
        let mid = 0.5 * (lo + hi);
        match regime_at(mid)? {
            Regime::Vanishing => lo = mid,
            Regime::Spreading => hi = mid,
            Regime::Undetermined => {
                return Ok(ThresholdBracket {
                    lo,
                    hi,
                    bisections: k,
                    undetermined_at: Some(mid),
                })
            }
        }
    }
    Ok(ThresholdBracket {
        lo,
        hi,
        bisections,
        undetermined_at: None,
    })
}

/// One row of a front-speed sweep over `mu K / d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub mu_k_over_d: f64,
    pub k0: f64,
    /// `k0 / sqrt(r_inf d)`.
    pub ratio: f64,
    pub residual: f64,
    pub front_monotone: bool,
}

/// Front speeds for several `mu K / d`, varying `mu` only. Runs are independent
/// and evaluated in parallel.
pub fn speed_ratio_sweep(
    model: &StefanModel,
    u0: &(impl InitialProfile + Sync + ?Sized),
    grid: &StefanGrid,
    mu_k_over_d: &[f64],
    tail_fraction: f64,
) -> Result<Vec<SweepRow>> {
    let scale = (model.decay.limit() * model.d).sqrt();
    mu_k_over_d
        .par_iter()
        .map(|&q| {
            let m = StefanModel {
                mu: q * model.d / model.k,
                ..*model
            };
            let traj = solve_stefan(&m, u0, grid)?;
            let fs = front_speed(&traj, tail_fraction)?;
            Ok(SweepRow {
                mu_k_over_d: q,
                k0: fs.k0,
                ratio: fs.k0 / scale,
                residual: fs.residual,
                front_monotone: traj.h_values.windows(2).all(|w| w[1] >= w[0]),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(mu: f64, h0: f64) -> StefanModel {
        StefanModel {
            d: 1.0,
            k: 1.0,
            decay: DecaySpec::Constant { r: 1.0 },
            mu,
            h0,
        }
    }

    fn cosine(h0: f64, amp: f64) -> impl Fn(f64) -> f64 + Sync {
        move |x: f64| amp * (std::f64::consts::FRAC_PI_2 * x / h0).cos().max(0.0)
    }

    #[test]
    fn linear_front_regression() {
        let t: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let h: Vec<f64> = t.iter().map(|t| 3.0 + 2.0 * t).collect();
        let fs = front_speed_of(&t, &h, 0.5).unwrap();
        assert!((fs.k0 - 2.0).abs() < 1e-12);
        assert!(fs.residual < 1e-12);
        let flat = vec![4.0; 50];
        assert_eq!(front_speed_of(&t, &flat, 0.5).unwrap().k0, 0.0);
        let mut bad = h.clone();
        bad[45] = 0.0;
        assert!(matches!(front_speed_of(&t, &bad, 0.5), Err(Error::Estimation(_))));
        assert!(front_speed_of(&t[..15], &h[..15], 0.5).is_err());
    }

    #[test]
    fn small_data_vanishes() {
        let m = model(1.0, 1.0);
        let grid = StefanGrid::new(200, 40.0, 0.01);
        let (regime, traj) = classify(&m, &cosine(1.0, 1e-4), &grid, &Classifier::default()).unwrap();
        assert_eq!(regime, Regime::Vanishing);
        assert!(traj.final_front() < 1.2);
        assert!(traj.h_values.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn large_domain_spreads() {
        let m = model(5.0, 4.0);
        let grid = StefanGrid::new(400, 30.0, 0.01);
        let traj = solve_stefan(&m, &cosine(4.0, 1.0), &grid).unwrap();
        assert!(traj.h_values.windows(2).all(|w| w[1] >= w[0]));
        let fs = front_speed(&traj, 0.3).unwrap();
        assert!(fs.k0 > 0.5 && fs.k0 < 2.0, "{}", fs.k0);
    }

    #[test]
    fn rejects_inadmissible_data() {
        let m = model(1.0, 2.0);
        let grid = StefanGrid::new(50, 1.0, 0.01);
        assert!(solve_stefan(&m, &|_x: f64| 1.0, &grid).is_err());
        assert!(solve_stefan(&m, &|x: f64| 2.0 - x, &grid).is_err());
    }
}
