#![allow(clippy::needless_range_loop)]

//! Test-only oracles, written independently of the library's fitting and
//! quadrature code.
#![allow(dead_code)]

use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub fn phi(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * PI).sqrt()
}

pub fn big_phi(t: f64) -> f64 {
    0.5 * libm::erfc(-t * FRAC_1_SQRT_2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OracleLink {
    Logit,
    Probit,
}

impl OracleLink {
    pub fn cdf(self, t: f64) -> f64 {
        match self {
            OracleLink::Logit => 1.0 / (1.0 + (-t).exp()),
            OracleLink::Probit => big_phi(t),
        }
    }

    /// `ln P(Y = y | eta)` and its derivative in `eta`.
    fn term(self, y: f64, eta: f64) -> (f64, f64) {
        match self {
            OracleLink::Logit => {
                let log1pexp = if eta > 0.0 { eta + (-eta).exp().ln_1p() } else { eta.exp().ln_1p() };
                let mu = 1.0 / (1.0 + (-eta).exp());
                (y * eta - log1pexp, y - mu)
            }
            OracleLink::Probit => {
                let s = if y > 0.5 { 1.0 } else { -1.0 };
                let c = big_phi(s * eta);
                (c.ln(), s * phi(eta) / c)
            }
        }
    }
}

/// Log-likelihood and gradient of a binary regression with intercept.
pub fn loglik_and_grad(cols: &[Vec<f64>], y: &[f64], theta: &[f64], link: OracleLink) -> (f64, Vec<f64>) {
    let mut ll = 0.0;
    let mut grad = vec![0.0; theta.len()];
    for i in 0..y.len() {
        let eta = theta[0] + cols.iter().zip(&theta[1..]).map(|(c, t)| c[i] * t).sum::<f64>();
        let (l, d) = link.term(y[i], eta);
        ll += l;
        grad[0] += d;
        for (k, c) in cols.iter().enumerate() {
            grad[k + 1] += d * c[i];
        }
    }
    (ll, grad)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let m = b.len();
    for col in 0..m {
        let pivot = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..m {
            let f = a[row][col] / a[col][col];
            for k in col..m {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let s: f64 = (row + 1..m).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Maximum-likelihood estimate by Newton's method with a finite-difference
/// Hessian and backtracking, iterated until the gradient is at rounding level.
pub fn oracle_mle(cols: &[Vec<f64>], y: &[f64], link: OracleLink) -> Vec<f64> {
    let q = cols.len() + 1;
    let mut theta = vec![0.0; q];
    let (mut ll, mut grad) = loglik_and_grad(cols, y, &theta, link);
    for _ in 0..200 {
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax < 1e-11 * y.len() as f64 {
            break;
        }
        let mut hess = vec![vec![0.0; q]; q];
        for k in 0..q {
            let h = 1e-5 * (1.0 + theta[k].abs());
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[k] += h;
            down[k] -= h;
            let gu = loglik_and_grad(cols, y, &up, link).1;
            let gd = loglik_and_grad(cols, y, &down, link).1;
            for r in 0..q {
                hess[r][k] = -(gu[r] - gd[r]) / (2.0 * h);
            }
        }
        for r in 0..q {
            for k in 0..r {
                let avg = 0.5 * (hess[r][k] + hess[k][r]);
                hess[r][k] = avg;
                hess[k][r] = avg;
            }
        }
        let step = solve(hess, grad.clone());
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            let (cl, cg) = loglik_and_grad(cols, y, &cand, link);
            if cl >= ll - 1e-12 * ll.abs() || t < 1e-10 {
                theta = cand;
                ll = cl;
                grad = cg;
                break;
            }
            t *= 0.5;
        }
    }
    theta
}

pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

