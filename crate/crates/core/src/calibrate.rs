//! Parameter fitting against observed density fields, the accuracy report,
//! and synthetic field generation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{csv_err, DensityField, DensityMode};
use crate::solver::{
    sample_at_distances, solve_scalar, BoundaryCondition, DecaySpec, GridSpec, HeterogeneitySpec, InitialProfile,
    ScalarFamily, ScalarModel,
};
use crate::spline::InitialDensity;

/// `1 - |predicted - actual| / actual`; `None` when `actual` is 0.
pub fn accuracy(predicted: f64, actual: f64) -> Option<f64> {
    if actual == 0.0 {
        None
    } else {
        Some(1.0 - (predicted - actual).abs() / actual.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    #[default]
    Rmse,
    /// Mean of `1 - accuracy` over cells with non-zero observations.
    MeanInaccuracy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayForm {
    #[default]
    OdeDecay,
    OffsetExp,
    Constant,
}

impl DecayForm {
    fn names(self) -> &'static [&'static str] {
        match self {
            DecayForm::OdeDecay => &["alpha", "beta", "gamma"],
            DecayForm::OffsetExp => &["A", "B", "C"],
            DecayForm::Constant => &["r"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeterogeneityForm {
    #[default]
    Constant,
    Quadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeParameter {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub init: f64,
}

/// Model structure shared by every candidate parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelShape {
    pub family: ScalarFamily,
    #[serde(default)]
    pub decay_form: DecayForm,
    #[serde(default)]
    pub heterogeneity_form: HeterogeneityForm,
    #[serde(default)]
    pub bc: BoundaryCondition,
}

impl ModelShape {
    /// Names of every parameter of this shape.
    pub fn parameter_names(&self) -> Vec<&'static str> {
        let mut names = vec!["d"];
        if self.family == ScalarFamily::VariableDiffusionLogistic {
            names.push("b");
        }
        if self.family != ScalarFamily::Linear {
            names.push("K");
        }
        names.extend_from_slice(self.decay_form.names());
        if self.family != ScalarFamily::Logistic && self.heterogeneity_form == HeterogeneityForm::Quadratic {
            names.extend_from_slice(&["rho", "sigma"]);
        }
        names
    }

    /// Assemble a model from a complete parameter map.
    pub fn model(&self, p: &BTreeMap<String, f64>) -> Result<ScalarModel> {
        let get = |name: &str| {
            p.get(name)
                .copied()
                .ok_or_else(|| Error::validation(format!("missing parameter `{name}`")))
        };
        let decay = match self.decay_form {
            DecayForm::OdeDecay => DecaySpec::OdeDecay {
                alpha: get("alpha")?,
                beta: get("beta")?,
                gamma: get("gamma")?,
            },
            DecayForm::OffsetExp => DecaySpec::OffsetExp {
                a: get("A")?,
                b: get("B")?,
                c: get("C")?,
            },
            DecayForm::Constant => DecaySpec::Constant { r: get("r")? },
        };
        let heterogeneity = match (self.family, self.heterogeneity_form) {
            (ScalarFamily::Logistic, _) | (_, HeterogeneityForm::Constant) => HeterogeneitySpec::Constant,
            (_, HeterogeneityForm::Quadratic) => HeterogeneitySpec::Quadratic {
                rho: get("rho")?,
                sigma: get("sigma")?,
            },
        };
        let model = match self.family {
            ScalarFamily::Logistic => ScalarModel::logistic(get("d")?, get("K")?, decay),
            ScalarFamily::Linear => ScalarModel::linear(get("d")?, decay, heterogeneity),
            ScalarFamily::VariableDiffusionLogistic => {
                ScalarModel::variable_diffusion(get("d")?, get("b")?, get("K")?, decay, heterogeneity)
            }
        };
        Ok(model.with_bc(self.bc))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitProblem {
    pub shape: ModelShape,
    pub observed: DensityField,
    pub free: Vec<FreeParameter>,
    pub fixed: BTreeMap<String, f64>,
    pub loss: Loss,
}

impl FitProblem {
    pub fn validate(&self) -> Result<()> {
        let required: BTreeSet<&str> = self.shape.parameter_names().into_iter().collect();
        let mut seen = BTreeSet::new();
        for name in self.free.iter().map(|f| f.name.as_str()).chain(self.fixed.keys().map(String::as_str)) {
            if !required.contains(name) {
                return Err(Error::validation(format!("`{name}` is not a parameter of this model")));
            }
            if !seen.insert(name) {
                return Err(Error::validation(format!("`{name}` is listed more than once")));
            }
        }
        if let Some(missing) = required.iter().find(|n| !seen.contains(*n)) {
            return Err(Error::validation(format!("`{missing}` is neither free nor fixed")));
        }
        for f in &self.free {
            if !(f.lo.is_finite() && f.hi.is_finite() && f.lo < f.hi) {
                return Err(Error::validation(format!("`{}` needs finite bounds lo < hi", f.name)));
            }
            if !(f.init >= f.lo && f.init <= f.hi) {
                return Err(Error::validation(format!("initial `{}` = {} outside its bounds", f.name, f.init)));
            }
        }
        if self.fixed.values().any(|v| !v.is_finite()) {
            return Err(Error::validation("fixed parameters must be finite"));
        }
        if self.observed.distances().len() < 2 || self.observed.times().len() < 3 {
            return Err(Error::validation("observed field needs at least 2 distances and 3 times"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitOptions {
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
    /// Objective evaluations per simplex run.
    #[serde(default = "default_max_evaluations")]
    pub max_evaluations: usize,
}

fn default_restarts() -> usize {
    3
}

fn default_max_evaluations() -> usize {
    4000
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: default_restarts(),
            seed: 0,
            max_evaluations: default_max_evaluations(),
        }
    }
}

/// Accuracy of a prediction cell by cell, per distance and overall.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub distances: Vec<u32>,
    pub times: Vec<f64>,
    /// `None` for excluded cells (zero observation or the initial column).
    pub per_cell: Vec<Vec<Option<f64>>>,
    pub per_distance: BTreeMap<u32, f64>,
    pub per_distance_cells: BTreeMap<u32, usize>,
    pub overall: f64,
    pub included_cells: usize,
}

impl AccuracyReport {
    /// Compare `predicted` with `observed` on the same layout, skipping the
    /// column at `skip_time` if given.
    pub fn compute(predicted: &DensityField, observed: &DensityField, skip_time: Option<f64>) -> Result<Self> {
        if predicted.distances() != observed.distances() || predicted.times().len() != observed.times().len() {
            return Err(Error::validation("prediction and observation layouts differ"));
        }
        let skip = skip_time.and_then(|t| observed.times().iter().position(|&s| (s - t).abs() <= 1e-9));
        let mut per_cell = Vec::new();
        let mut per_distance = BTreeMap::new();
        let mut per_distance_cells = BTreeMap::new();
        let mut total = 0.0;
        let mut included = 0;
        for (row, &x) in observed.distances().iter().enumerate() {
            let mut cells = Vec::new();
            let mut sum = 0.0;
            let mut count = 0;
            for col in 0..observed.times().len() {
                let acc = if Some(col) == skip {
                    None
                } else {
                    accuracy(predicted.value(row, col), observed.value(row, col))
                };
                if let Some(a) = acc {
                    sum += a;
                    count += 1;
                }
                cells.push(acc);
            }
            if count > 0 {
                per_distance.insert(x, sum / count as f64);
                per_distance_cells.insert(x, count);
            }
            total += sum;
            included += count;
            per_cell.push(cells);
        }
        Ok(Self {
            distances: observed.distances().to_vec(),
            times: observed.times().to_vec(),
            per_cell,
            per_distance,
            per_distance_cells,
            overall: if included > 0 { total / included as f64 } else { f64::NAN },
            included_cells: included,
        })
    }

    /// Grid of accuracies with a trailing per-distance average; blank cells are excluded.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["distance".to_string()];
        header.extend(self.times.iter().map(|t| t.to_string()));
        header.push("average".into());
        wtr.write_record(&header).map_err(csv_err)?;
        for (row, x) in self.distances.iter().enumerate() {
            let mut rec = vec![x.to_string()];
            rec.extend(self.per_cell[row].iter().map(|c| c.map(|v| v.to_string()).unwrap_or_default()));
            rec.push(self.per_distance.get(x).map(|v| v.to_string()).unwrap_or_default());
            wtr.write_record(&rec).map_err(csv_err)?;
        }
        let mut rec = vec!["overall".to_string()];
        rec.extend(std::iter::repeat_n(String::new(), self.times.len()));
        rec.push(self.overall.to_string());
        wtr.write_record(&rec).map_err(csv_err)?;
        wtr.flush().map_err(|e| Error::io("<accuracy csv>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub parameters: BTreeMap<String, f64>,
    pub model: ScalarModel,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub prediction: DensityField,
    pub report: AccuracyReport,
}

impl FitResult {
    pub fn write_parameters_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["parameter", "value"]).map_err(csv_err)?;
        for (name, v) in &self.parameters {
            wtr.write_record([name.as_str(), &v.to_string()]).map_err(csv_err)?;
        }
        wtr.flush().map_err(|e| Error::io("<parameter csv>", e))?;
        Ok(())
    }

    /// Plain-text summary of the fit.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "fitted parameters:");
        for (name, v) in &self.parameters {
            let _ = writeln!(s, "  {name} = {v}");
        }
        let _ = writeln!(s, "loss: {} -> {}", self.initial_loss, self.final_loss);
        let _ = writeln!(s, "iterations: {}, evaluations: {}", self.iterations, self.evaluations);
        let _ = writeln!(s, "accuracy by distance:");
        for (x, a) in &self.report.per_distance {
            let _ = writeln!(s, "  x = {x}: {:.4}%", 100.0 * a);
        }
        let _ = writeln!(
            s,
            "overall accuracy: {:.4}% over {} cells",
            100.0 * self.report.overall,
            self.report.included_cells
        );
        s
    }
}

/// Solve `model` from `phi` and read it off at the given cells.
pub fn predict(
    model: &ScalarModel,
    grid: &GridSpec,
    phi: &(impl InitialProfile + ?Sized),
    times: &[f64],
    distances: &[u32],
    mode: DensityMode,
) -> Result<DensityField> {
    let sol = solve_scalar(model, grid, phi)?;
    Ok(sample_at_distances(&sol, 0, distances, times, mode)?.field)
}

/// Initial profile from the observed column at `t0`.
pub fn initial_from_observed(observed: &DensityField, t0: f64) -> Result<InitialDensity> {
    let column = observed
        .column_at(t0)
        .ok_or_else(|| Error::validation(format!("observed field has no column at t = {t0}")))?;
    let samples: Vec<(f64, f64)> = observed.distances().iter().map(|&x| x as f64).zip(column).collect();
    InitialDensity::build(&samples)
}

/// Solve, sample at integer distances and hourly times, and perturb every cell
/// by a uniform factor in `[1 - noise, 1 + noise]`. Ratio fields are clamped to `[0, 1]`.
pub fn synthesize(
    model: &ScalarModel,
    grid: &GridSpec,
    phi: &(impl InitialProfile + ?Sized),
    mode: DensityMode,
    noise: f64,
    seed: u64,
) -> Result<DensityField> {
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::validation("noise level must be non-negative"));
    }
    let first = grid.l.ceil() as i64;
    let last = grid.upper.floor() as i64;
    if first < 0 || last < first {
        return Err(Error::validation("grid holds no non-negative integer distance"));
    }
    let distances: Vec<u32> = (first..=last).map(|x| x as u32).collect();
    let hours = ((grid.t_end - grid.t0) + 1e-9).floor() as usize;
    let times: Vec<f64> = (0..=hours).map(|k| grid.t0 + k as f64).collect();
    let clean = predict(model, grid, phi, &times, &distances, mode)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = clean
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .map(|&v| {
                    let factor = if noise > 0.0 { 1.0 + noise * rng.gen_range(-1.0..=1.0) } else { 1.0 };
                    let v = (v * factor).max(0.0);
                    if mode == DensityMode::Ratio {
                        v.min(1.0)
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect();
    DensityField::new(distances, times, values, mode, BTreeMap::new())
}

/// Maps between bounded parameters and the unconstrained simplex coordinates.
struct Transform<'a> {
    free: &'a [FreeParameter],
}

impl Transform<'_> {
    fn is_log(p: &FreeParameter) -> bool {
        p.lo > 0.0
    }

    fn to_z(&self, values: &[f64]) -> Vec<f64> {
        self.free
            .iter()
            .zip(values)
            .map(|(p, &v)| if Self::is_log(p) { v.ln() } else { v })
            .collect()
    }

    fn bounds_z(&self, p: &FreeParameter) -> (f64, f64) {
        if Self::is_log(p) {
            (p.lo.ln(), p.hi.ln())
        } else {
            (p.lo, p.hi)
        }
    }

    /// Parameter values clamped into bounds plus a squared violation measure.
    fn decode(&self, z: &[f64]) -> (Vec<f64>, f64) {
        let mut violation = 0.0;
        let values = self
            .free
            .iter()
            .zip(z)
            .map(|(p, &zi)| {
                let (lo, hi) = self.bounds_z(p);
                let c = zi.clamp(lo, hi);
                violation += ((zi - c) / (hi - lo)).powi(2);
                if Self::is_log(p) {
                    c.exp()
                } else {
                    c
                }
            })
            .collect();
        (values, violation)
    }
}

struct Objective<'a> {
    problem: &'a FitProblem,
    grid: &'a GridSpec,
    phi: &'a InitialDensity,
    transform: Transform<'a>,
}

impl Objective<'_> {
    fn parameters(&self, values: &[f64]) -> BTreeMap<String, f64> {
        let mut p = self.problem.fixed.clone();
        for (f, &v) in self.problem.free.iter().zip(values) {
            p.insert(f.name.clone(), v);
        }
        p
    }

    fn prediction(&self, values: &[f64]) -> Result<DensityField> {
        let model = self.problem.shape.model(&self.parameters(values))?;
        let obs = &self.problem.observed;
        predict(&model, self.grid, self.phi, obs.times(), obs.distances(), obs.mode())
    }

    fn loss_of(&self, predicted: &DensityField) -> f64 {
        let obs = &self.problem.observed;
        let mut sum = 0.0;
        let mut n = 0usize;
        for (row, obs_row) in obs.rows().iter().enumerate() {
            for (col, &a) in obs_row.iter().enumerate() {
                if (obs.times()[col] - self.grid.t0).abs() <= 1e-9 {
                    continue;
                }
                let p = predicted.value(row, col);
                match self.problem.loss {
                    Loss::Rmse => {
                        sum += (p - a).powi(2);
                        n += 1;
                    }
                    Loss::MeanInaccuracy => {
                        if let Some(acc) = accuracy(p, a) {
                            sum += 1.0 - acc;
                            n += 1;
                        }
                    }
                }
            }
        }
        if n == 0 {
            return f64::NAN;
        }
        match self.problem.loss {
            Loss::Rmse => (sum / n as f64).sqrt(),
            Loss::MeanInaccuracy => sum / n as f64,
        }
    }

    fn eval_values(&self, values: &[f64]) -> f64 {
        match self.prediction(values) {
            Ok(pred) => self.loss_of(&pred),
            Err(_) => f64::INFINITY,
        }
    }

    /// Loss at `z` with a penalty outside the bounds; non-finite on solver failure.
    fn eval_z(&self, z: &[f64]) -> f64 {
        let (values, violation) = self.transform.decode(z);
        let base = self.eval_values(&values);
        if violation > 0.0 {
            base + (1.0 + base.abs()) * 1e3 * violation
        } else {
            base
        }
    }
}

struct SimplexRun {
    best_z: Vec<f64>,
    best_f: f64,
    iterations: usize,
    evaluations: usize,
    finite_evaluations: usize,
}

/// Nelder–Mead on `f` from `start` with initial edge lengths `steps`.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, start: &[f64], steps: &[f64], max_evaluations: usize) -> SimplexRun {
    const ALPHA: f64 = 1.0;
    const GAMMA: f64 = 2.0;
    const RHO: f64 = 0.5;
    const SIGMA: f64 = 0.5;
    let n = start.len();
    let evaluations = std::cell::Cell::new(0usize);
    let finite = std::cell::Cell::new(0usize);
    let eval = |z: &[f64]| {
        evaluations.set(evaluations.get() + 1);
        let v = f(z);
        if v.is_finite() {
            finite.set(finite.get() + 1);
            v
        } else {
            f64::INFINITY
        }
    };
    let mut pts: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += steps[i];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();
    let mut iterations = 0;
    while evaluations.get() < max_evaluations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        let spread = vals[n] - vals[0];
        let diameter = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if vals[0].is_finite() && spread <= 1e-14 + 1e-10 * vals[0].abs() && diameter <= 1e-9 {
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> = (0..n).map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (pts[n][j] - centroid[j])).collect() };
        let xr = along(-ALPHA);
        let fr = eval(&xr);
        if fr < vals[0] {
            let xe = along(-ALPHA * GAMMA);
            let fe = eval(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let xc = along(-ALPHA * RHO);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(RHO);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        for i in 1..=n {
            let p: Vec<f64> = (0..n).map(|j| pts[0][j] + SIGMA * (pts[i][j] - pts[0][j])).collect();
            vals[i] = eval(&p);
            pts[i] = p;
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    SimplexRun {
        best_z: pts[best].clone(),
        best_f: vals[best],
        iterations,
        evaluations: evaluations.get(),
        finite_evaluations: finite.get(),
    }
}

/// Fit the free parameters by simplex search with seeded random restarts.
/// The initial profile is the observed column at `grid.t0`.
pub fn fit(problem: &FitProblem, grid: &GridSpec, options: &FitOptions) -> Result<FitResult> {
    problem.validate()?;
    grid.validate()?;
    let obs = &problem.observed;
    let t_last = obs.times()[obs.times().len() - 1];
    if grid.t_end < t_last - 1e-9 || obs.times()[0] < grid.t0 - 1e-9 {
        return Err(Error::validation(format!(
            "grid window [{}, {}] does not cover the observed times",
            grid.t0, grid.t_end
        )));
    }
    let phi = initial_from_observed(obs, grid.t0)?;
    let objective = Objective {
        problem,
        grid,
        phi: &phi,
        transform: Transform { free: &problem.free },
    };
    let init: Vec<f64> = problem.free.iter().map(|f| f.init).collect();
    let initial_loss = objective.eval_values(&init);
    if !initial_loss.is_finite() {
        let reason = match objective.prediction(&init) {
            Err(e) => e.to_string(),
            Ok(_) => "loss is not finite".to_string(),
        };
        return Err(Error::FitInitialization(format!("at the initial guess: {reason}")));
    }

    let mut best_values = init.clone();
    let mut iterations = 0;
    let mut evaluations = 1;
    if !problem.free.is_empty() {
        let t = &objective.transform;
        let z0 = t.to_z(&init);
        let steps: Vec<f64> = problem
            .free
            .iter()
            .zip(&z0)
            .map(|(p, &z)| {
                let (lo, hi) = t.bounds_z(p);
                let step = 0.1 * (hi - lo);
                let step = if Transform::is_log(p) { step.min(0.25) } else { step };
                if z + step > hi {
                    -step
                } else {
                    step
                }
            })
            .collect();
        let starts: Vec<Vec<f64>> = (0..options.restarts.max(1))
            .map(|k| {
                if k == 0 {
                    z0.clone()
                } else {
                    let mut rng = ChaCha8Rng::seed_from_u64(options.seed.wrapping_add(k as u64));
                    problem
                        .free
                        .iter()
                        .map(|p| {
                            let (lo, hi) = t.bounds_z(p);
                            rng.gen_range(lo..=hi)
                        })
                        .collect()
                }
            })
            .collect();
        let f = |z: &[f64]| objective.eval_z(z);
        let runs: Vec<SimplexRun> = starts
            .par_iter()
            .map(|s| nelder_mead(&f, s, &steps, options.max_evaluations))
            .collect();
        let finite: usize = runs.iter().map(|r| r.finite_evaluations).sum();
        if finite == 0 {
            return Err(Error::FitInfeasible("every solver evaluation failed".into()));
        }
        let winner = runs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.best_f.total_cmp(&b.1.best_f).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        iterations += runs.iter().map(|r| r.iterations).sum::<usize>();
        evaluations += runs.iter().map(|r| r.evaluations).sum::<usize>();
        let small: Vec<f64> = steps.iter().map(|s| 0.1 * s).collect();
        let polish = nelder_mead(&f, &runs[winner].best_z, &small, options.max_evaluations);
        iterations += polish.iterations;
        evaluations += polish.evaluations;
        let best_z = if polish.best_f <= runs[winner].best_f {
            polish.best_z
        } else {
            runs[winner].best_z.clone()
        };
        let candidate = t.decode(&best_z).0;
        if objective.eval_values(&candidate) <= initial_loss {
            best_values = candidate;
        }
    }
    let parameters = objective.parameters(&best_values);
    let model = problem.shape.model(&parameters)?;
    let prediction = objective.prediction(&best_values)?;
    let final_loss = objective.loss_of(&prediction);
    let report = AccuracyReport::compute(&prediction, obs, Some(grid.t0))?;
    Ok(FitResult {
        parameters,
        model,
        initial_loss,
        final_loss,
        iterations,
        evaluations,
        prediction,
        report,
    })
}
