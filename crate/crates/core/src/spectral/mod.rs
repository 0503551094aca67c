//! Minimum wave speeds of reaction-diffusion systems and principal eigenvalues
//! of the Robin steady-state problem.
//!
//! For a linearization `u_t = D u_xx + J u` the speed function is
//! `Phi(lambda) = Psi(diag(d_i lambda^2) + J) / lambda` and the minimum wave
//! speed is `c* = inf_{lambda > 0} Phi(lambda)`.

mod eigen;
mod poly;
mod speed;

use crate::error::{Error, Result};

pub use eigen::{persistence_threshold, principal_eigenvalue, variational_quotient, EigenProblem, Eigenpair};
pub use speed::{
    min_speed_competition, min_speed_cooperative, min_speed_numeric, min_speed_sir, SpeedMethod, SpeedResult,
};

const MAX_SIZE: usize = 4;

/// Linearization `D u_xx + J u` of a reaction-diffusion system at the invaded state.
#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    diffusion: Vec<f64>,
    jacobian: Vec<Vec<f64>>,
}

impl Linearization {
    pub fn new(diffusion: Vec<f64>, jacobian: Vec<Vec<f64>>) -> Result<Self> {
        let n = diffusion.len();
        if n == 0 || n > MAX_SIZE {
            return Err(Error::validation(format!("system size {n} not in 1..={MAX_SIZE}")));
        }
        if jacobian.len() != n || jacobian.iter().any(|row| row.len() != n) {
            return Err(Error::validation("Jacobian must be square and match the diffusion vector"));
        }
        if diffusion.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::validation("diffusion coefficients must be positive"));
        }
        if jacobian.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::validation("Jacobian entries must be finite"));
        }
        Ok(Self { diffusion, jacobian })
    }

    /// Fisher-KPP: `u_t = d u_xx + r u (1 - u/K)` at `u = 0`.
    pub fn scalar(d: f64, r: f64) -> Result<Self> {
        Self::new(vec![d], vec![vec![r]])
    }

    /// Two sources at `(0, 0)`; the `u1 u2` coupling vanishes there.
    pub fn cooperative(d: [f64; 2], r: [f64; 2]) -> Result<Self> {
        Self::new(d.to_vec(), vec![vec![r[0], 0.0], vec![0.0, r[1]]])
    }

    /// Competition at `(0, k2)` in the variables `v1 = u1`, `v2 = k2 - u2`,
    /// which turn the system into a cooperative one.
    pub fn competition(d: [f64; 2], r: [f64; 2], alpha: [f64; 2], k2: f64) -> Result<Self> {
        Self::new(
            d.to_vec(),
            vec![vec![r[0] - alpha[0] * k2, 0.0], vec![alpha[1] * k2, -r[1]]],
        )
    }

    /// `(S, I)` with standard incidence at the disease-free state `(S0, 0)`.
    pub fn sir(d: [f64; 2], beta: f64, gamma: f64) -> Result<Self> {
        Self::new(d.to_vec(), vec![vec![0.0, -beta], vec![0.0, beta - gamma]])
    }

    pub fn diffusion(&self) -> &[f64] {
        &self.diffusion
    }

    pub fn jacobian(&self) -> &[Vec<f64>] {
        &self.jacobian
    }

    pub fn size(&self) -> usize {
        self.diffusion.len()
    }

    /// All off-diagonal Jacobian entries are non-negative.
    pub fn is_cooperative(&self) -> bool {
        self.jacobian
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().enumerate().all(|(j, &v)| i == j || v >= 0.0))
    }

    /// `A_lambda = diag(d_i lambda^2) + J`.
    pub fn a_lambda(&self, lambda: f64) -> Vec<Vec<f64>> {
        let mut a = self.jacobian.clone();
        for (i, d) in self.diffusion.iter().enumerate() {
            a[i][i] += d * lambda * lambda;
        }
        a
    }
}

/// Largest eigenvalue modulus of a square matrix of size at most 4.
pub fn spectral_radius(matrix: &[Vec<f64>]) -> Result<f64> {
    let n = matrix.len();
    if n > MAX_SIZE || matrix.iter().any(|row| row.len() != n) {
        return Err(Error::validation(format!(
            "spectral radius needs a square matrix of size <= {MAX_SIZE}"
        )));
    }
    Ok(match n {
        0 => 0.0,
        1 => matrix[0][0].abs(),
        2 => {
            let (a, b, c, d) = (matrix[0][0], matrix[0][1], matrix[1][0], matrix[1][1]);
            let half_tr = 0.5 * (a + d);
            let half_gap = 0.5 * (a - d);
            let disc = half_gap * half_gap + b * c;
            if disc >= 0.0 {
                let s = disc.sqrt();
                (half_tr + s).abs().max((half_tr - s).abs())
            } else {
                (a * d - b * c).abs().sqrt()
            }
        }
        _ => poly::max_root_modulus(&poly::characteristic_polynomial(matrix)),
    })
}

/// Largest real eigenvalue of `A_lambda`, computed as `rho(A + sI) - s` with
/// `s` lifting every diagonal entry to be non-negative.
fn psi(lin: &Linearization, lambda: f64) -> f64 {
    let mut a = lin.a_lambda(lambda);
    let shift = a
        .iter()
        .enumerate()
        .map(|(i, row)| -row[i])
        .fold(0.0, f64::max);
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += shift;
    }
    // size was checked on construction
    spectral_radius(&a).unwrap_or(f64::NAN) - shift
}

/// `Phi(lambda) = Psi(A_lambda) / lambda`.
pub fn phi(lin: &Linearization, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain {
            value: lambda,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    Ok(psi(lin, lambda) / lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_radius_examples() {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(spectral_radius(&id).unwrap(), 1.0);
        let d = vec![vec![3.0, 0.0], vec![0.0, -5.0]];
        assert_eq!(spectral_radius(&d).unwrap(), 5.0);
        let sir = vec![vec![0.0, -1.0], vec![0.0, 0.75]];
        assert!((spectral_radius(&sir).unwrap() - 0.75).abs() < 1e-15);
        let rot = vec![vec![0.0, -2.0], vec![2.0, 0.0]];
        assert!((spectral_radius(&rot).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn near_repeated_eigenvalues_keep_full_precision() {
        let m = vec![vec![2.0, 0.0], vec![0.0, 2.0 + 1e-12]];
        assert!((spectral_radius(&m).unwrap() - (2.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn spectral_radius_size_four() {
        // block diag of a rotation (modulus 3) and diag(1, -2)
        let m = vec![
            vec![0.0, -3.0, 0.0, 0.0],
            vec![3.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, -2.0],
        ];
        assert!((spectral_radius(&m).unwrap() - 3.0).abs() < 1e-9);
        let big = vec![vec![0.0; 5]; 5];
        assert!(spectral_radius(&big).is_err());
    }

    #[test]
    fn phi_examples() {
        let fisher = Linearization::scalar(1.0, 1.0).unwrap();
        assert_eq!(phi(&fisher, 1.0).unwrap(), 2.0);
        assert!(phi(&fisher, 0.0).is_err());
        assert!(phi(&fisher, -1.0).is_err());
        let sir = Linearization::sir([1.0, 1.0], 1.0, 0.25).unwrap();
        assert!((phi(&sir, 0.5).unwrap() - 2.0).abs() < 1e-14);
        assert!(!sir.is_cooperative());
    }

    #[test]
    fn competition_transform_is_cooperative() {
        let lin = Linearization::competition([1.0, 0.5], [1.0, 0.8], [0.5, 0.3], 1.0).unwrap();
        assert!(lin.is_cooperative());
        // Phi is the larger of the two decoupled branches
        let l: f64 = 0.4;
        let expect = (1.0 * l + 0.5 / l).max(0.5 * l - 0.8 / l);
        assert!((phi(&lin, l).unwrap() - expect).abs() < 1e-12);
    }
}
