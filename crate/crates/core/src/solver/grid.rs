use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::csv_err;

/// Spatial interval `[l, L]` split into `nx` equal cells, plus the time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub l: f64,
    #[serde(rename = "L")]
    pub upper: f64,
    pub nx: usize,
    #[serde(default = "default_t0")]
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Keep every `save_every`-th step in the solution (the final step is always kept).
    #[serde(default = "default_save_every")]
    pub save_every: usize,
}

fn default_t0() -> f64 {
    1.0
}

fn default_save_every() -> usize {
    1
}

impl GridSpec {
    pub fn new(l: f64, upper: f64, nx: usize, t0: f64, t_end: f64, dt: f64) -> Result<Self> {
        let g = Self {
            l,
            upper,
            nx,
            t0,
            t_end,
            dt,
            save_every: 1,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid on which every integer in `[l, L]` is a node: `nx = (L - l) * per_unit`.
    pub fn aligned(l: i64, upper: i64, per_unit: usize, t0: f64, t_end: f64, dt: f64) -> Result<Self> {
        if upper <= l {
            return Err(Error::validation("grid needs l < L"));
        }
        Self::new(
            l as f64,
            upper as f64,
            (upper - l) as usize * per_unit,
            t0,
            t_end,
            dt,
        )
    }

    pub fn with_save_every(mut self, every: usize) -> Self {
        self.save_every = every.max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l.is_finite() && self.upper.is_finite() && self.l < self.upper) {
            return Err(Error::validation(format!(
                "grid interval [{}, {}] is empty",
                self.l, self.upper
            )));
        }
        if self.nx < 8 {
            return Err(Error::validation(format!("nx = {} < 8", self.nx)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::validation("dt must be positive"));
        }
        if !(self.t_end >= self.t0) {
            return Err(Error::validation("t_end must not precede t0"));
        }
        if self.save_every == 0 {
            return Err(Error::validation("save_every must be at least 1"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.upper - self.l) / self.nx as f64
    }

    pub fn node_count(&self) -> usize {
        self.nx + 1
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx {
            self.upper
        } else {
            self.l + i as f64 * self.dx()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.node_count()).map(|i| self.x(i)).collect()
    }

    /// Index of the node at `x`, if `x` lies on the grid.
    pub fn node_of(&self, x: f64) -> Option<usize> {
        let s = (x - self.l) / self.dx();
        let i = s.round();
        if (s - i).abs() <= 1e-9 && i >= 0.0 && i as usize <= self.nx {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Number of time steps; the last one is shortened to land on `t_end`.
    pub fn step_count(&self) -> usize {
        let n = (self.t_end - self.t0) / self.dt;
        let r = n.round();
        if (n - r).abs() <= 1e-9 * n.max(1.0) {
            r as usize
        } else {
            n.ceil() as usize
        }
    }

    pub fn time_after(&self, step: usize) -> f64 {
        if step >= self.step_count() {
            self.t_end
        } else {
            self.t0 + step as f64 * self.dt
        }
    }
}

/// Named snapshots of one or more solution components on a fixed node set.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    pub(crate) xs: Vec<f64>,
    pub(crate) times: Vec<f64>,
    pub(crate) names: Vec<String>,
    /// `data[component][time][node]`
    pub(crate) data: Vec<Vec<Vec<f64>>>,
    pub(crate) halvings: usize,
    pub(crate) bounds_warning: Option<String>,
}

impl SolutionField {
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn component_names(&self) -> &[String] {
        &self.names
    }

    pub fn component_count(&self) -> usize {
        self.data.len()
    }

    /// Snapshot of component `c` at stored time index `k`.
    pub fn snapshot(&self, c: usize, k: usize) -> &[f64] {
        &self.data[c][k]
    }

    pub fn last(&self, c: usize) -> &[f64] {
        self.data[c].last().expect("solution has at least one snapshot")
    }

    pub fn value(&self, c: usize, node: usize, k: usize) -> f64 {
        self.data[c][k][node]
    }

    /// How many times a step had to be halved.
    pub fn halvings(&self) -> usize {
        self.halvings
    }

    /// Set when the solution left its a-priori bounds (see the model docs).
    pub fn bounds_warning(&self) -> Option<&str> {
        self.bounds_warning.as_deref()
    }

    /// Export component `c` as `distance,<t...>,group_size` with one row per node.
    pub fn write_component_csv<W: Write>(&self, c: usize, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["distance".to_string()];
        header.extend(self.times.iter().map(|t| t.to_string()));
        header.push("group_size".into());
        wtr.write_record(&header).map_err(csv_err)?;
        for (i, x) in self.xs.iter().enumerate() {
            let mut rec = vec![x.to_string()];
            rec.extend(self.data[c].iter().map(|snap| snap[i].to_string()));
            rec.push(String::new());
            wtr.write_record(&rec).map_err(csv_err)?;
        }
        wtr.flush().map_err(|e| Error::io("<solution csv>", e))?;
        Ok(())
    }
}
