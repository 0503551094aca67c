//! Largest eigenvalue modulus of small dense matrices via the characteristic polynomial.

use num_complex::Complex64;

/// Coefficients `c` of `det(zI - A) = z^n + c[1] z^{n-1} + ... + c[n]` (with `c[0] = 1`),
/// by the Faddeev–LeVerrier recursion.
pub(crate) fn characteristic_polynomial(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut c = vec![0.0; n + 1];
    c[0] = 1.0;
    let mut m = vec![vec![0.0; n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{k-1} I
        let mut next = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += a[i][l] * m[l][j];
                }
                next[i][j] = s;
            }
            next[i][i] += c[k - 1];
        }
        m = next;
        let mut trace = 0.0;
        for i in 0..n {
            for l in 0..n {
                trace += a[i][l] * m[l][i];
            }
        }
        c[k] = -trace / k as f64;
    }
    c
}

fn eval(p: &[f64], x: f64) -> f64 {
    p.iter().fold(0.0, |acc, &c| acc * x + c)
}

fn derivative(p: &[f64]) -> Vec<f64> {
    let n = p.len() - 1;
    p[..n]
        .iter()
        .enumerate()
        .map(|(i, &c)| c * (n - i) as f64)
        .collect()
}

/// Divide a monic polynomial by `(z - r)`, dropping the remainder.
fn deflate(p: &[f64], r: f64) -> Vec<f64> {
    let mut q = Vec::with_capacity(p.len() - 1);
    let mut acc = 0.0;
    for &c in &p[..p.len() - 1] {
        acc = acc * r + c;
        q.push(acc);
    }
    q
}

/// Every root lies in `|z| <= 1 + max |c_k| / |c_0|`.
fn cauchy_bound(p: &[f64]) -> f64 {
    1.0 + p[1..].iter().map(|c| (c / p[0]).abs()).fold(0.0, f64::max)
}

/// Root of `p` in `[lo, hi]` given a sign change, by bisection polished with Newton.
fn bracketed_root(p: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = eval(p, lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = eval(p, mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let dp = derivative(p);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = eval(&dp, x);
        if d == 0.0 {
            break;
        }
        let step = eval(p, x) / d;
        let cand = x - step;
        if !cand.is_finite() || (cand - x).abs() > (hi - lo).abs() + 1e-300 {
            break;
        }
        x = cand;
    }
    x
}

/// Real roots of `p` with odd multiplicity, in increasing order. Roots are
/// isolated between consecutive critical points, which are found recursively.
fn real_roots(p: &[f64]) -> Vec<f64> {
    let deg = p.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    if deg == 1 {
        return vec![-p[1] / p[0]];
    }
    let bound = cauchy_bound(p);
    let mut points = vec![-bound];
    points.extend(real_roots(&derivative(p)).into_iter().filter(|c| c.abs() < bound));
    points.push(bound);
    let mut roots = Vec::new();
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (eval(p, a), eval(p, b));
        if fa == 0.0 {
            if roots.last() != Some(&a) {
                roots.push(a);
            }
        } else if fb != 0.0 && (fa < 0.0) != (fb < 0.0) {
            roots.push(bracketed_root(p, a, b));
        }
    }
    if let Some(&last) = points.last() {
        if eval(p, last) == 0.0 && roots.last() != Some(&last) {
            roots.push(last);
        }
    }
    roots
}

fn quadratic_max_modulus(p: &[f64]) -> f64 {
    let (a, b, c) = (p[0], p[1], p[2]);
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        let r1 = if q != 0.0 { q / a } else { 0.0 };
        let r2 = if q != 0.0 { c / q } else { 0.0 };
        r1.abs().max(r2.abs())
    } else {
        // complex pair with |z|^2 = c / a
        (c / a).abs().sqrt()
    }
}

/// All roots of a monic polynomial by simultaneous (Durand–Kerner) iteration.
fn durand_kerner(p: &[f64]) -> Vec<Complex64> {
    let n = p.len() - 1;
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32)).collect();
    let f = |x: Complex64| p.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c);
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= z[i] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                denom = Complex64::new(1e-300, 0.0);
            }
            let step = f(z[i]) / denom;
            z[i] -= step;
            moved = moved.max(step.norm() / (1.0 + z[i].norm()));
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Largest root modulus of a monic polynomial of degree at most 4.
pub(crate) fn max_root_modulus(p: &[f64]) -> f64 {
    match p.len() - 1 {
        0 => 0.0,
        1 => p[1].abs(),
        2 => quadratic_max_modulus(p),
        _ => {
            let roots = real_roots(p);
            match roots.first() {
                Some(&r) => r.abs().max(max_root_modulus(&deflate(p, r))),
                None => durand_kerner(p).iter().map(|z| z.norm()).fold(0.0, f64::max),
            }
        }
    }
}
