//! Initial density `φ(x)` built from discrete distance/density samples.
//!
//! Four or more samples give a clamped cubic spline with zero end slopes.
//! Two or three samples fall back to a monotone piecewise cubic (Fritsch-Carlson
//! slopes) with the same zero end slopes.

use crate::error::{Error, Result};
use crate::linalg::Tridiagonal;

#[derive(Debug, Clone, PartialEq)]
pub struct InitialDensity {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// First derivative at each knot; the interpolant is the cubic Hermite
    /// interpolant of `(xs, ys, slopes)`.
    slopes: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplineKind {
    Clamped,
    Monotone,
}

impl InitialDensity {
    pub fn build(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::validation("at least two samples are required"));
        }
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::validation(format!(
                    "sample abscissae must be strictly increasing (x = {} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if samples
            .iter()
            .any(|&(x, y)| !x.is_finite() || !y.is_finite() || y < 0.0)
        {
            return Err(Error::validation("samples must be finite with values >= 0"));
        }
        if samples.iter().all(|&(_, y)| y == 0.0) {
            return Err(Error::validation("initial density is identically zero"));
        }
        let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let slopes = if xs.len() >= 4 {
            clamped_slopes(&xs, &ys)?
        } else {
            monotone_slopes(&xs, &ys)
        };
        Ok(Self { xs, ys, slopes })
    }

    pub fn kind(&self) -> SplineKind {
        if self.xs.len() >= 4 {
            SplineKind::Clamped
        } else {
            SplineKind::Monotone
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    /// `φ(x)`, with undershoot below zero clamped to zero.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.eval_unclamped(x).map(|v| v.max(0.0))
    }

    /// Raw spline value, which may dip below zero between knots.
    pub fn eval_unclamped(&self, x: f64) -> Result<f64> {
        let (i, s) = self.locate(x)?;
        let h = self.xs[i + 1] - self.xs[i];
        let (h00, h10, h01, h11) = (
            2.0 * s * s * s - 3.0 * s * s + 1.0,
            s * s * s - 2.0 * s * s + s,
            -2.0 * s * s * s + 3.0 * s * s,
            s * s * s - s * s,
        );
        Ok(h00 * self.ys[i]
            + h10 * h * self.slopes[i]
            + h01 * self.ys[i + 1]
            + h11 * h * self.slopes[i + 1])
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        let (i, s) = self.locate(x)?;
        let h = self.xs[i + 1] - self.xs[i];
        let (d00, d10, d01, d11) = (
            6.0 * s * s - 6.0 * s,
            3.0 * s * s - 4.0 * s + 1.0,
            -6.0 * s * s + 6.0 * s,
            3.0 * s * s - 2.0 * s,
        );
        Ok((d00 * self.ys[i] + d01 * self.ys[i + 1]) / h
            + d10 * self.slopes[i]
            + d11 * self.slopes[i + 1])
    }

    /// Second derivative on interval `i`, evaluated from that interval's cubic.
    /// At an interior knot the left and right values agree for the clamped spline.
    pub fn second_derivative_on(&self, i: usize, x: f64) -> f64 {
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        let (e00, e10, e01, e11) = (
            12.0 * s - 6.0,
            6.0 * s - 4.0,
            -12.0 * s + 6.0,
            6.0 * s - 2.0,
        );
        (e00 * self.ys[i] + e01 * self.ys[i + 1]) / (h * h)
            + (e10 * self.slopes[i] + e11 * self.slopes[i + 1]) / h
    }

    fn locate(&self, x: f64) -> Result<(usize, f64)> {
        let (lo, hi) = self.domain();
        let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        if !(x >= lo - tol && x <= hi + tol) {
            return Err(Error::Domain { value: x, lo, hi });
        }
        let x = x.clamp(lo, hi);
        let i = match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            p => (p - 1).min(self.xs.len() - 2),
        };
        let s = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        Ok((i, s))
    }
}

/// Knot slopes of the cubic spline with `S'(x_0) = S'(x_n) = 0`.
fn clamped_slopes(xs: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    // Continuity of S'' written in terms of the knot slopes m_i:
    // h_i m_{i-1} + 2(h_{i-1}+h_i) m_i + h_{i-1} m_{i+1} = 3(h_i δ_{i-1} + h_{i-1} δ_i),
    // with m_0 = m_{n-1} = 0 eliminated.
    let k = n - 2;
    let mut a = Tridiagonal::zeros(k);
    let mut rhs = vec![0.0; k];
    for j in 0..k {
        let i = j + 1;
        a.diag[j] = 2.0 * (h[i - 1] + h[i]);
        if j > 0 {
            a.lower[j] = h[i];
        }
        if j + 1 < k {
            a.upper[j] = h[i - 1];
        }
        rhs[j] = 3.0 * (h[i] * delta[i - 1] + h[i - 1] * delta[i]);
    }
    let inner = a.solve(&rhs)?;
    let mut slopes = vec![0.0; n];
    slopes[1..n - 1].copy_from_slice(&inner);
    Ok(slopes)
}

fn monotone_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut slopes = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = xs[i] - xs[i - 1];
        let h1 = xs[i + 1] - xs[i];
        let d0 = (ys[i] - ys[i - 1]) / h0;
        let d1 = (ys[i + 1] - ys[i]) / h1;
        if d0 * d1 > 0.0 {
            let w0 = 2.0 * h1 + h0;
            let w1 = h1 + 2.0 * h0;
            slopes[i] = (w0 + w1) / (w0 / d0 + w1 / d1);
        }
    }
    slopes
}
