//! Population limits of the screening statistics under a misspecified
//! working model with normal predictors.
//!
//! For a working model on the predictor subset `S` (partition `Z1 = X_S`,
//! `Z2` = the rest):
//!
//! * least squares converges to `(gamma_1 + Sigma_11^{-1} Sigma_12 gamma_2) * c1`
//!   with `c1 = E[h_T(gamma0 + W)]`, `W ~ N(0, gamma' Sigma gamma)`;
//! * maximum likelihood under working link `H_W` converges to
//!   `beta_LS / c2`, with `c2 = E[h_W(beta0 + V)]`, `V ~ N(0, beta' Sigma_11 beta)`,
//!   and `beta0` matching the marginal mean of `Y`.
//!
//! Because the ML limit is parallel to `beta_LS`, the coupled system reduces
//! to a scalar equation `s * c2(s) = 1` for `beta = s * beta_LS`, which is
//! solved by bracketing. Each evaluation solves the intercept equation by a
//! bisection-safeguarded Newton iteration on `[-40, 40]`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::datagen::TrueModel;
use crate::error::{Error, Result};
use crate::links::{normal_cdf, normal_pdf, normal_pdf_with, LinkFamily, LinkKind};

const INTERCEPT_BRACKET: f64 = 40.0;
const MAX_SCALE_ITERATIONS: usize = 500;

/// `e_j = sum_{i != j} sigma_ij gamma_i / sigma_jj` for 0-based `j`.
pub fn contamination(model: &TrueModel, j: usize) -> Result<f64> {
    let p = model.p();
    if j >= p {
        return Err(Error::domain(format!("predictor index {j} out of range for p = {p}")));
    }
    model.cov.validate(p)?;
    let cov = &model.cov;
    let sum: f64 = (0..p)
        .filter(|&i| i != j)
        .map(|i| cov.entry(i, j) * model.gamma[i])
        .sum();
    Ok(sum / cov.entry(j, j))
}

fn check_subset(subset: &[usize], p: usize) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::domain("subset must be nonempty"));
    }
    let mut seen = vec![false; p];
    for &j in subset {
        if j >= p {
            return Err(Error::domain(format!("subset index {j} out of range for p = {p}")));
        }
        if std::mem::replace(&mut seen[j], true) {
            return Err(Error::domain(format!("subset index {j} repeated")));
        }
    }
    Ok(())
}

struct Partition {
    sigma11: DMatrix<f64>,
    /// `gamma_1 + Sigma_11^{-1} Sigma_12 gamma_2`.
    adjusted: DVector<f64>,
}

fn partition(model: &TrueModel, sigma: &DMatrix<f64>, subset: &[usize]) -> Result<Partition> {
    let p = model.p();
    check_subset(subset, p)?;
    let mut in_subset = vec![false; p];
    subset.iter().for_each(|&j| in_subset[j] = true);
    let rest: Vec<usize> = (0..p).filter(|&j| !in_subset[j]).collect();

    let sigma11 = DMatrix::from_fn(subset.len(), subset.len(), |a, b| sigma[(subset[a], subset[b])]);
    let gamma1 = DVector::from_iterator(subset.len(), subset.iter().map(|&j| model.gamma[j]));
    let cross = DVector::from_fn(subset.len(), |a, _| {
        rest.iter().map(|&k| sigma[(subset[a], k)] * model.gamma[k]).sum::<f64>()
    });
    let chol = sigma11
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular(format!("Sigma_11 for subset {subset:?} is not positive definite")))?;
    let correction = if cross.iter().all(|&v| v == 0.0) {
        DVector::zeros(subset.len())
    } else {
        chol.solve(&cross)
    };
    Ok(Partition {
        sigma11,
        adjusted: gamma1 + correction,
    })
}

/// `c1 = E[h_T(gamma0 + W)]`, `W ~ N(0, gamma' Sigma gamma)`.
pub fn c1(model: &TrueModel) -> Result<f64> {
    model.link.mixture_integral(model.gamma0, model.signal_variance()?)
}

/// Least-squares limit on `subset` (0-based) and its constant `c1`.
pub fn beta_ls_population(model: &TrueModel, subset: &[usize]) -> Result<(Vec<f64>, f64)> {
    model.validate()?;
    let sigma = model.sigma()?;
    let part = partition(model, &sigma, subset)?;
    let c1 = c1(model)?;
    Ok((part.adjusted.iter().map(|v| v * c1).collect(), c1))
}

/// Maximum-likelihood limit of a working model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MlLimit {
    pub beta0: f64,
    pub beta: Vec<f64>,
    pub c2: f64,
    /// Outer iterations used by the scale solve.
    pub iterations: usize,
}

/// Both limits for one working model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationCoefficients {
    pub subset: Vec<usize>,
    pub beta_ls: Vec<f64>,
    pub c1: f64,
    pub beta0_ml: f64,
    pub beta_ml: Vec<f64>,
    pub c2: f64,
}

pub fn population_coefficients(
    model: &TrueModel,
    working_link: &LinkFamily,
    subset: &[usize],
) -> Result<PopulationCoefficients> {
    let (beta_ls, c1) = beta_ls_population(model, subset)?;
    let ml = beta_ml_population(model, working_link, subset)?;
    Ok(PopulationCoefficients {
        subset: subset.to_vec(),
        beta_ls,
        c1,
        beta0_ml: ml.beta0,
        beta_ml: ml.beta,
        c2: ml.c2,
    })
}

/// Solves `population_mean(link, b0, v) = target` for `b0` in `[-40, 40]`.
fn solve_intercept(link: &LinkFamily, v: f64, target: f64) -> Result<f64> {
    let (mut lo, mut hi) = (-INTERCEPT_BRACKET, INTERCEPT_BRACKET);
    let f_lo = link.population_mean(lo, v)? - target;
    let f_hi = link.population_mean(hi, v)? - target;
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(Error::domain(format!(
            "mean {target} is not attainable with an intercept in [-40, 40] at v = {v}"
        )));
    }
    let mut b = match link.kind {
        LinkKind::Probit => (v + 1.0).sqrt() * crate::links::normal_quantile(target.clamp(1e-300, 1.0 - 1e-16)),
        LinkKind::Logit => 0.0,
    }
    .clamp(lo, hi);
    for _ in 0..200 {
        let f = link.population_mean(b, v)? - target;
        if f == 0.0 {
            return Ok(b);
        }
        if f < 0.0 {
            lo = b;
        } else {
            hi = b;
        }
        // d/db E[H(b + W)] = E[h(b + W)]
        let slope = link.mixture_integral(b, v)?;
        let newton = b - f / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - b).abs() <= 1e-15 * (1.0 + b.abs()) || hi - lo <= 1e-15 * (1.0 + b.abs()) {
            return Ok(next);
        }
        b = next;
    }
    Ok(b)
}

/// Maximum-likelihood limit of the working model on `subset` (0-based).
///
/// The fixed point `beta = beta_LS / c2(beta0, beta)` with the intercept
/// matching `E[Y]` is solved along the ray `beta = s * beta_LS`.
pub fn beta_ml_population(model: &TrueModel, working_link: &LinkFamily, subset: &[usize]) -> Result<MlLimit> {
    model.validate()?;
    let sigma = model.sigma()?;
    let part = partition(model, &sigma, subset)?;
    let v_true = model.signal_variance()?;
    let c1 = model.link.mixture_integral(model.gamma0, v_true)?;
    let target = model.link.population_mean(model.gamma0, v_true)?;
    let b_ls: DVector<f64> = &part.adjusted * c1;

    if b_ls.iter().all(|&v| v == 0.0) {
        let beta0 = solve_intercept(working_link, 0.0, target)?;
        return Ok(MlLimit {
            beta0,
            beta: vec![0.0; subset.len()],
            c2: working_link.mixture_integral(beta0, 0.0)?,
            iterations: 0,
        });
    }

    let quad = b_ls.dot(&(&part.sigma11 * &b_ls));
    // g(s) = s * c2(s) - 1 is increasing in s with g(0) = -1.
    let eval = |s: f64| -> Result<(f64, f64, f64)> {
        let v = s * s * quad;
        let beta0 = solve_intercept(working_link, v, target)?;
        let c2 = working_link.mixture_integral(beta0, v)?;
        Ok((s * c2 - 1.0, beta0, c2))
    };

    let (mut lo, mut g_lo) = (0.0, -1.0);
    let mut hi = 1.0;
    let mut g_hi = eval(hi)?.0;
    let mut iterations = 1;
    while g_hi < 0.0 {
        lo = hi;
        g_lo = g_hi;
        hi *= 2.0;
        g_hi = eval(hi)?.0;
        iterations += 1;
        if iterations > 200 {
            return Err(Error::NoConvergence {
                iterations,
                last_beta0: f64::NAN,
                last_beta: b_ls.iter().map(|v| v * hi).collect(),
            });
        }
    }

    // Illinois regula falsi on [lo, hi].
    let mut side = 0i8;
    let mut s = hi;
    let mut best = eval(s)?;
    while iterations < MAX_SCALE_ITERATIONS {
        iterations += 1;
        let next = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        let next = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        let r = eval(next)?;
        let step = (next - s).abs();
        s = next;
        best = r;
        if r.0 == 0.0 || step * b_ls.amax() < 1e-14 || (hi - lo) * b_ls.amax() < 1e-14 {
            let beta: Vec<f64> = b_ls.iter().map(|v| v * s).collect();
            return Ok(MlLimit { beta0: best.1, beta, c2: best.2, iterations });
        }
        if r.0 < 0.0 {
            lo = next;
            g_lo = r.0;
            if side == -1 {
                g_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = next;
            g_hi = r.0;
            if side == 1 {
                g_lo *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::NoConvergence {
        iterations,
        last_beta0: best.1,
        last_beta: b_ls.iter().map(|v| v * s).collect(),
    })
}

/// Mean of the linearly skewed normal with density `phi(x) Phi(l0 + l1'x) / Phi(u)`:
/// `l1 / sqrt(1 + l1'l1) * phi(u) / Phi(u)`, `u = l0 / sqrt(1 + l1'l1)`.
pub fn lsn_mean(lambda0: f64, lambda1: &[f64]) -> Result<Vec<f64>> {
    if !lambda0.is_finite() || lambda1.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("skew-normal parameters must be finite"));
    }
    let k = (1.0 + lambda1.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let u = lambda0 / k;
    if u < -37.0 {
        return Err(Error::domain(format!("normalising constant Phi({u}) underflows")));
    }
    let factor = normal_pdf(u) / normal_cdf(u) / k;
    Ok(lambda1.iter().map(|v| v * factor).collect())
}

/// `E(Z1 Y)` under a probit true model, in closed form:
/// `(Sigma_11 gamma_1 + Sigma_12 gamma_2) * phi(0; gamma0, 1 + gamma' Sigma gamma)`.
pub fn probit_cross_moment(model: &TrueModel, subset: &[usize]) -> Result<Vec<f64>> {
    if model.link.kind != LinkKind::Probit {
        return Err(Error::domain("the closed-form cross moment needs a probit true link"));
    }
    model.validate()?;
    check_subset(subset, model.p())?;
    let sigma = model.sigma()?;
    let g = DVector::from_column_slice(&model.gamma);
    let sg = &sigma * &g;
    let scale = normal_pdf_with(0.0, model.gamma0, 1.0 + g.dot(&sg));
    Ok(subset.iter().map(|&j| sg[j] * scale).collect())
}

/// Per-predictor single-variable limits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationCurve {
    pub working_link: LinkKind,
    pub c1: f64,
    pub beta_ls: Vec<f64>,
    pub beta0_ml: Vec<f64>,
    pub beta_ml: Vec<f64>,
    pub c2: Vec<f64>,
}

/// `beta_LS` and `beta_ML` for each single-predictor working model.
pub fn population_curve(model: &TrueModel, working_link: &LinkFamily) -> Result<PopulationCurve> {
    model.validate()?;
    let c1 = c1(model)?;
    let per_index: Vec<(f64, MlLimit)> = (0..model.p())
        .into_par_iter()
        .map(|j| {
            let (ls, _) = beta_ls_population(model, &[j])?;
            let ml = beta_ml_population(model, working_link, &[j])?;
            Ok((ls[0], ml))
        })
        .collect::<Result<_>>()?;
    Ok(PopulationCurve {
        working_link: working_link.kind,
        c1,
        beta_ls: per_index.iter().map(|(ls, _)| *ls).collect(),
        beta0_ml: per_index.iter().map(|(_, ml)| ml.beta0).collect(),
        beta_ml: per_index.iter().map(|(_, ml)| ml.beta[0]).collect(),
        c2: per_index.iter().map(|(_, ml)| ml.c2).collect(),
    })
}
