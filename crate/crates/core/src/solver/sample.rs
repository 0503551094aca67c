use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::field::{DensityField, DensityMode};

use super::grid::SolutionField;

/// A density field read off a solution, plus whether any point needed
/// interpolation in `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    pub field: DensityField,
    pub interpolated_in_x: bool,
}

/// Read component `component` at integer `distances` and arbitrary `times`.
/// Times between snapshots are interpolated linearly; distances that are not
/// nodes fall back to linear interpolation and set the warning flag.
pub fn sample_at_distances(
    field: &SolutionField,
    component: usize,
    distances: &[u32],
    times: &[f64],
    mode: DensityMode,
) -> Result<Sampled> {
    if component >= field.component_count() {
        return Err(Error::validation(format!("no component {component}")));
    }
    let xs = field.xs();
    let (x_lo, x_hi) = (xs[0], xs[xs.len() - 1]);
    let ts = field.times();
    let (t_lo, t_hi) = (ts[0], ts[ts.len() - 1]);
    let mut interpolated = false;

    let x_weights = distances
        .iter()
        .map(|&d| {
            let x = d as f64;
            if x < x_lo - 1e-9 || x > x_hi + 1e-9 {
                return Err(Error::Domain { value: x, lo: x_lo, hi: x_hi });
            }
            let (i, w) = bracket(xs, x);
            if w != 0.0 {
                interpolated = true;
            }
            Ok((i, w))
        })
        .collect::<Result<Vec<_>>>()?;
    let t_weights = times
        .iter()
        .map(|&t| {
            if t < t_lo - 1e-9 || t > t_hi + 1e-9 {
                return Err(Error::Domain { value: t, lo: t_lo, hi: t_hi });
            }
            Ok(bracket(ts, t))
        })
        .collect::<Result<Vec<_>>>()?;

    let value_at = |k: usize, (i, w): (usize, f64)| {
        let snap = field.snapshot(component, k);
        if w == 0.0 {
            snap[i]
        } else {
            (1.0 - w) * snap[i] + w * snap[i + 1]
        }
    };
    let values = x_weights
        .iter()
        .map(|&xw| {
            t_weights
                .iter()
                .map(|&(k, w)| {
                    if w == 0.0 {
                        value_at(k, xw)
                    } else {
                        (1.0 - w) * value_at(k, xw) + w * value_at(k + 1, xw)
                    }
                })
                .collect()
        })
        .collect();
    let field = DensityField::predicted(distances.to_vec(), times.to_vec(), values, mode, BTreeMap::new())?;
    Ok(Sampled {
        field,
        interpolated_in_x: interpolated,
    })
}

/// Index `i` and weight `w` with `v = (1-w) grid[i] + w grid[i+1]`; `w = 0` on a node.
fn bracket(grid: &[f64], v: f64) -> (usize, f64) {
    let n = grid.len();
    let scale = 1e-9 * (1.0 + v.abs());
    let p = grid.partition_point(|&g| g < v - scale);
    if p < n && (grid[p] - v).abs() <= scale {
        return (p, 0.0);
    }
    let i = p.saturating_sub(1).min(n - 2);
    let w = ((v - grid[i]) / (grid[i + 1] - grid[i])).clamp(0.0, 1.0);
    (i, w)
}
