//! Maximum-likelihood binary regression by Newton–Raphson with step halving.
//!
//! One code path serves both the marginal (one predictor plus intercept)
//! screening fits and the multivariate post-screening model. Predictors are
//! centred internally; the reported intercept is on the original scale.
//!
//! For both supported links the log-likelihood is concave, so the observed
//! Hessian is negative definite away from separation and each Newton step is
//! an ascent direction. A step that lowers the log-likelihood (beyond
//! rounding) is halved until it does not.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::links::{LinkFamily, LinkKind};

/// Coefficient cap (on the centred intercept and on slopes per standard
/// deviation of their predictor) beyond which a fit is declared separated.
pub const SEPARATION_CAP: f64 = 30.0;

const MAX_HALVINGS: usize = 40;
const RANK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlmOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the largest score component.
    pub tolerance: f64,
    pub separation_cap: f64,
}

impl Default for GlmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-8,
            separation_cap: SEPARATION_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlmFit {
    pub link: LinkKind,
    /// Intercept first, then one slope per design column.
    pub coefficients: Vec<f64>,
    pub converged: bool,
    pub separation_detected: bool,
    pub log_likelihood: f64,
    pub iterations: usize,
    /// Log-likelihood of every accepted iterate, starting point included.
    pub log_likelihood_trace: Vec<f64>,
}

impl GlmFit {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn slopes(&self) -> &[f64] {
        &self.coefficients[1..]
    }

    /// Fitted `P(Y = 1)` for each row of `x`.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        let q = self.coefficients.len() - 1;
        if x.ncols() != q {
            return Err(Error::DimensionMismatch { expected: q, found: x.ncols() });
        }
        let link = LinkFamily::new(self.link);
        Ok((0..x.nrows())
            .map(|i| {
                let eta = self.coefficients[0]
                    + (0..q).map(|j| self.coefficients[j + 1] * x[(i, j)]).sum::<f64>();
                link.cdf_unchecked(eta)
            })
            .collect())
    }
}

/// Fits `P(Y=1) = H(b0 + X b)` with default options.
pub fn fit(x: &DMatrix<f64>, y: &[f64], link: &LinkFamily) -> Result<GlmFit> {
    fit_with(x, y, link, &GlmOptions::default())
}

pub fn fit_with(x: &DMatrix<f64>, y: &[f64], link: &LinkFamily, opts: &GlmOptions) -> Result<GlmFit> {
    let n = x.nrows();
    let columns: Vec<&[f64]> = (0..x.ncols()).map(|j| &x.as_slice()[j * n..(j + 1) * n]).collect();
    fit_columns(&columns, y, link, opts)
}

/// Fits the model on borrowed design columns.
pub fn fit_columns(columns: &[&[f64]], y: &[f64], link: &LinkFamily, opts: &GlmOptions) -> Result<GlmFit> {
    let n = y.len();
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: c.len() });
    }
    if n == 0 {
        return Err(Error::domain("empty response"));
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::domain("response must be coded 0/1"));
    }
    let positives = y.iter().filter(|&&v| v == 1.0).count();
    if positives == 0 || positives == n {
        return Err(Error::domain("both response classes must be present"));
    }
    let design = CentredDesign::new(columns)?;
    Ok(newton(&design, y, link, opts, positives as f64 / n as f64))
}

struct CentredDesign<'a> {
    columns: &'a [&'a [f64]],
    means: Vec<f64>,
    sds: Vec<f64>,
}

impl<'a> CentredDesign<'a> {
    fn new(columns: &'a [&'a [f64]]) -> Result<Self> {
        let means: Vec<f64> = columns
            .iter()
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect();
        let sds = columns
            .iter()
            .zip(&means)
            .map(|(c, m)| (c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / c.len() as f64).sqrt())
            .collect();
        let design = Self { columns, means, sds };
        design.check_rank()?;
        Ok(design)
    }

    fn q(&self) -> usize {
        self.columns.len()
    }

    /// Modified Gram–Schmidt on the centred columns; a column whose residual
    /// vanishes is reported together with the earlier columns it depends on.
    fn check_rank(&self) -> Result<()> {
        let q = self.q();
        let n = self.columns.first().map_or(0, |c| c.len());
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(q);
        for j in 0..q {
            let mut r: Vec<f64> = self.columns[j].iter().map(|v| v - self.means[j]).collect();
            let norm0 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            let scale = self.columns[j].iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if norm0 <= 1e-12 * scale * (n as f64).sqrt() || norm0 == 0.0 {
                return Err(Error::RankDeficient { columns: vec![j] });
            }
            for b in &basis {
                let proj: f64 = r.iter().zip(b).map(|(u, v)| u * v).sum();
                r.iter_mut().zip(b).for_each(|(u, v)| *u -= proj * v);
            }
            let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm <= RANK_TOLERANCE * norm0 {
                return Err(Error::RankDeficient { columns: self.dependencies(j) });
            }
            r.iter_mut().for_each(|v| *v /= norm);
            basis.push(r);
        }
        Ok(())
    }

    /// Earlier columns carrying weight in the least-squares fit of column
    /// `j` on columns `0..j`, followed by `j` itself.
    fn dependencies(&self, j: usize) -> Vec<usize> {
        let n = self.columns[j].len();
        let a = DMatrix::from_fn(n, j, |i, k| (self.columns[k][i] - self.means[k]) / self.sds[k]);
        let b = DVector::from_fn(n, |i, _| (self.columns[j][i] - self.means[j]) / self.sds[j]);
        let mut cols: Vec<usize> = match (a.transpose() * &a).cholesky() {
            Some(chol) => {
                let coef = chol.solve(&(a.transpose() * b));
                (0..j).filter(|&k| coef[k].abs() > 1e-6).collect()
            }
            None => (0..j).collect(),
        };
        cols.push(j);
        cols
    }

    #[inline]
    fn centred(&self, i: usize, j: usize) -> f64 {
        self.columns[j][i] - self.means[j]
    }
}

struct Evaluation {
    loglik: f64,
    score: DVector<f64>,
    neg_hessian: DMatrix<f64>,
}

fn evaluate(design: &CentredDesign<'_>, y: &[f64], link: &LinkFamily, theta: &DVector<f64>) -> Evaluation {
    let q = design.q();
    let k = q + 1;
    let mut loglik = 0.0;
    let mut score = DVector::<f64>::zeros(k);
    let mut neg_hessian = DMatrix::<f64>::zeros(k, k);
    let mut row = vec![0.0; k];
    row[0] = 1.0;
    for (i, &yi) in y.iter().enumerate() {
        let mut eta = theta[0];
        for j in 0..q {
            let v = design.centred(i, j);
            row[j + 1] = v;
            eta += theta[j + 1] * v;
        }
        let (ll, d1, d2) = link.loglik_derivatives(yi, eta);
        loglik += ll;
        for a in 0..k {
            score[a] += d1 * row[a];
            let w = -d2 * row[a];
            for b in 0..=a {
                neg_hessian[(a, b)] += w * row[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            neg_hessian[(b, a)] = neg_hessian[(a, b)];
        }
    }
    Evaluation { loglik, score, neg_hessian }
}

fn newton(design: &CentredDesign<'_>, y: &[f64], link: &LinkFamily, opts: &GlmOptions, ybar: f64) -> GlmFit {
    let q = design.q();
    let mut theta = DVector::<f64>::zeros(q + 1);
    theta[0] = link.quantile(ybar).expect("both classes present");
    let mut current = evaluate(design, y, link, &theta);
    let mut trace = vec![current.loglik];
    let mut converged = false;
    let mut separated = false;
    let mut iterations = 0;

    loop {
        if current.score.amax() < opts.tolerance {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        let step = match current.neg_hessian.clone().cholesky() {
            Some(chol) => chol.solve(&current.score),
            None => {
                // Curvature has collapsed: fitted probabilities saturate.
                separated = true;
                break;
            }
        };
        let floor = current.loglik - 1e-12 * (1.0 + current.loglik.abs());
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let candidate = &theta + &step * t;
            let eval = evaluate(design, y, link, &candidate);
            if eval.loglik.is_finite() && eval.loglik >= floor {
                accepted = Some((candidate, eval));
                break;
            }
            t *= 0.5;
        }
        let Some((next_theta, next_eval)) = accepted else {
            break;
        };
        theta = next_theta;
        current = next_eval;
        iterations += 1;
        trace.push(current.loglik);

        let cap_exceeded = theta[0].abs() > opts.separation_cap
            || (0..q).any(|j| (theta[j + 1] * design.sds[j]).abs() > opts.separation_cap);
        if cap_exceeded || current.loglik > -1e-8 {
            separated = current.score.amax() >= opts.tolerance;
            if separated {
                break;
            }
        }
    }

    let mut coefficients = Vec::with_capacity(q + 1);
    let intercept = theta[0] - (0..q).map(|j| theta[j + 1] * design.means[j]).sum::<f64>();
    coefficients.push(intercept);
    coefficients.extend(theta.iter().skip(1));
    GlmFit {
        link: link.kind,
        coefficients,
        converged,
        separation_detected: separated,
        log_likelihood: current.loglik,
        iterations,
        log_likelihood_trace: trace,
    }
}

/// Fraction of rows misclassified by the rule `P(Y=1) >= 0.5 -> 1`.
///
/// A fitted probability of exactly one half is classified as 1.
pub fn misclassification_rate(fit: &GlmFit, x: &DMatrix<f64>, y: &[f64]) -> Result<f64> {
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), found: y.len() });
    }
    if y.is_empty() {
        return Err(Error::domain("no observations to classify"));
    }
    let probs = fit.predict(x)?;
    let errors = probs
        .iter()
        .zip(y)
        .filter(|(&p, &yi)| (if p >= 0.5 { 1.0 } else { 0.0 }) != yi)
        .count();
    Ok(errors as f64 / y.len() as f64)
}

/// Ordinary least squares with an intercept; returns intercept then slopes.
pub fn least_squares(x: &DMatrix<f64>, y: &[f64]) -> Result<Vec<f64>> {
    let (n, q) = x.shape();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    if n <= q {
        return Err(Error::domain(format!("least squares needs n > q, got n = {n}, q = {q}")));
    }
    let means: Vec<f64> = (0..q).map(|j| x.column(j).mean()).collect();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let xc = DMatrix::from_fn(n, q, |i, j| x[(i, j)] - means[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - ybar));
    let gram = xc.transpose() * &xc;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Singular("design cross-product is not positive definite".into()))?;
    let slopes = chol.solve(&(xc.transpose() * yc));
    let intercept = ybar - slopes.iter().zip(&means).map(|(b, m)| b * m).sum::<f64>();
    let mut out = vec![intercept];
    out.extend(slopes.iter());
    Ok(out)
}
