//! Synthetic designs and responses.
//!
//! * multivariate normal predictors with AR1, compound-symmetry or dense
//!   covariance;
//! * Bernoulli responses from a true binary regression;
//! * the sequential correlated `Bin(2, q)` generator, where each column is
//!   drawn from a conditional pmf given its left neighbour.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::links::LinkFamily;
use crate::rng::{derive, rng_from_seed};

/// Covariance of a zero-mean normal predictor vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CovarianceSpec {
    /// `sigma_ij = rho^|i-j|`, `rho` in (-1, 1).
    Ar1 { rho: f64 },
    /// Unit diagonal, `rho` off the diagonal, `rho` in [0, 1).
    Cs { rho: f64 },
    /// An explicit symmetric positive definite matrix (rows).
    Dense { matrix: Vec<Vec<f64>> },
}

impl CovarianceSpec {
    pub fn validate(&self, p: usize) -> Result<()> {
        if p == 0 {
            return Err(Error::InvalidCovariance("dimension must be at least 1".into()));
        }
        match self {
            CovarianceSpec::Ar1 { rho } => {
                if rho.is_nan() || rho.abs() >= 1.0 {
                    return Err(Error::InvalidCovariance(format!("AR1 needs |rho| < 1, got {rho}")));
                }
            }
            CovarianceSpec::Cs { rho } => {
                if !(*rho >= 0.0 && *rho < 1.0) {
                    return Err(Error::InvalidCovariance(format!(
                        "compound symmetry needs rho in [0, 1), got {rho}"
                    )));
                }
            }
            CovarianceSpec::Dense { matrix } => {
                self.dense_cholesky(matrix, p)?;
            }
        }
        Ok(())
    }

    /// Dimension implied by the spec, if it fixes one.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            CovarianceSpec::Dense { matrix } => Some(matrix.len()),
            _ => None,
        }
    }

    /// `sigma_ij` without building the matrix (AR1 and CS only need `i`, `j`).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match self {
            CovarianceSpec::Ar1 { rho } => rho.powi(i.abs_diff(j) as i32),
            CovarianceSpec::Cs { rho } => {
                if i == j {
                    1.0
                } else {
                    *rho
                }
            }
            CovarianceSpec::Dense { matrix } => matrix[i][j],
        }
    }

    /// The `p x p` covariance matrix.
    pub fn build_sigma(&self, p: usize) -> Result<DMatrix<f64>> {
        self.validate(p)?;
        Ok(DMatrix::from_fn(p, p, |i, j| self.entry(i, j)))
    }

    fn dense_cholesky(&self, matrix: &[Vec<f64>], p: usize) -> Result<Cholesky<f64, nalgebra::Dyn>> {
        if matrix.len() != p || matrix.iter().any(|row| row.len() != p) {
            return Err(Error::InvalidCovariance(format!("dense matrix must be {p} x {p}")));
        }
        let m = DMatrix::from_fn(p, p, |i, j| matrix[i][j]);
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCovariance("dense matrix has non-finite entries".into()));
        }
        for i in 0..p {
            for j in 0..i {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::InvalidCovariance(format!(
                        "dense matrix is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Cholesky::new(m).ok_or_else(|| Error::InvalidCovariance("dense matrix is not positive definite".into()))
    }
}

/// `n` iid rows of `N(0, Sigma)`.
///
/// AR1 rows are built sequentially (`x_j = rho x_{j-1} + sqrt(1-rho^2) e_j`),
/// compound symmetry through one shared factor, dense specs through the
/// Cholesky factor.
pub fn sample_mvn(spec: &CovarianceSpec, p: usize, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    spec.validate(p)?;
    if n == 0 {
        return Err(Error::domain("sample size must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let mut x = DMatrix::<f64>::zeros(n, p);
    match spec {
        CovarianceSpec::Ar1 { rho } => {
            let innov = (1.0 - rho * rho).sqrt();
            for i in 0..n {
                let mut prev: f64 = rng.sample(StandardNormal);
                x[(i, 0)] = prev;
                for j in 1..p {
                    let e: f64 = rng.sample(StandardNormal);
                    prev = rho * prev + innov * e;
                    x[(i, j)] = prev;
                }
            }
        }
        CovarianceSpec::Cs { rho } => {
            let (shared, own) = (rho.sqrt(), (1.0 - rho).sqrt());
            for i in 0..n {
                let z0: f64 = rng.sample(StandardNormal);
                for j in 0..p {
                    let e: f64 = rng.sample(StandardNormal);
                    x[(i, j)] = shared * z0 + own * e;
                }
            }
        }
        CovarianceSpec::Dense { matrix } => {
            let l = spec.dense_cholesky(matrix, p)?.l();
            let mut e = DVector::<f64>::zeros(p);
            for i in 0..n {
                for v in e.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let row = &l * &e;
                for j in 0..p {
                    x[(i, j)] = row[j];
                }
            }
        }
    }
    Ok(x)
}

/// The data-generating binary regression `Y | X ~ Ber(H(gamma0 + X gamma))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueModel {
    pub gamma0: f64,
    pub gamma: Vec<f64>,
    pub link: LinkFamily,
    pub cov: CovarianceSpec,
}

impl TrueModel {
    pub fn new(gamma0: f64, gamma: Vec<f64>, link: LinkFamily, cov: CovarianceSpec) -> Result<Self> {
        let model = Self { gamma0, gamma, link, cov };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma.is_empty() {
            return Err(Error::domain("gamma must have at least one entry"));
        }
        if !self.gamma0.is_finite() || self.gamma.iter().any(|g| !g.is_finite()) {
            return Err(Error::domain("coefficients must be finite"));
        }
        if self.gamma.iter().all(|&g| g == 0.0) {
            return Err(Error::domain("at least one true coefficient must be nonzero"));
        }
        self.cov.validate(self.p())
    }

    pub fn p(&self) -> usize {
        self.gamma.len()
    }

    pub fn sigma(&self) -> Result<DMatrix<f64>> {
        self.cov.build_sigma(self.p())
    }

    /// `gamma' Sigma gamma`, the variance of the linear predictor.
    pub fn signal_variance(&self) -> Result<f64> {
        let sigma = self.sigma()?;
        let g = DVector::from_column_slice(&self.gamma);
        Ok(g.dot(&(&sigma * &g)))
    }

    /// Draws `n` predictor rows and responses; design and response use
    /// separate substreams of `seed`.
    pub fn simulate(&self, n: usize, seed: u64) -> Result<Dataset> {
        let x = sample_mvn(&self.cov, self.p(), n, derive(seed, 0))?;
        let y = gen_response(&x, self, derive(seed, 1))?;
        Dataset::new(x, y)
    }
}

/// Bernoulli responses from `model` for the rows of `x`.
pub fn gen_response(x: &DMatrix<f64>, model: &TrueModel, seed: u64) -> Result<Vec<f64>> {
    bernoulli_response(x, model.gamma0, &model.gamma, &model.link, seed)
}

/// `y_i ~ Ber(H(gamma0 + x_i' gamma))` for an arbitrary design, normal or not.
pub fn bernoulli_response(
    x: &DMatrix<f64>,
    gamma0: f64,
    gamma: &[f64],
    link: &LinkFamily,
    seed: u64,
) -> Result<Vec<f64>> {
    if x.ncols() != gamma.len() {
        return Err(Error::DimensionMismatch { expected: gamma.len(), found: x.ncols() });
    }
    let mut eta = vec![gamma0; x.nrows()];
    for (j, &g) in gamma.iter().enumerate() {
        if g != 0.0 {
            for (e, &v) in eta.iter_mut().zip(x.column(j).iter()) {
                *e += g * v;
            }
        }
    }
    let mut rng = rng_from_seed(seed);
    Ok(eta
        .into_iter()
        .map(|e| {
            let u: f64 = rng.random();
            if u < link.cdf_unchecked(e) {
                1.0
            } else {
                0.0
            }
        })
        .collect())
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in (0, 1), got {p}")))
    }
}

/// Correlation between consecutive correlated binomials with margins
/// `Bin(2, p1)`, `Bin(2, p2)` and association parameter `alpha`.
pub fn pair_correlation(p1: f64, p2: f64, alpha: f64) -> Result<f64> {
    check_probability("p1", p1)?;
    check_probability("p2", p2)?;
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::domain(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    Ok(alpha / (1.0 + alpha) * (p1 * (1.0 - p1) / (p2 * (1.0 - p2))).sqrt())
}

/// Whether `(p1, p2, alpha)` meets the sufficient condition for the
/// conditional pmf to be a proper distribution:
/// `a p1 <= p2 <= a p1 + 1/(1+alpha)` with `a = alpha/(1+alpha)`.
pub fn sufficient_condition(p1: f64, p2: f64, alpha: f64) -> bool {
    let a = alpha / (1.0 + alpha);
    a * p1 <= p2 && p2 <= a * p1 + 1.0 / (1.0 + alpha)
}

/// The conditional pmf of `X2` over {0, 1, 2} given `X1 = x1`.
///
/// Returns an invariant violation if the row is not a probability vector,
/// which happens exactly when the sufficient condition is ignored.
pub fn conditional_pmf(x1: u8, p1: f64, p2: f64, alpha: f64) -> Result<[f64; 3]> {
    let t1 = (p2 + alpha * (p2 - p1)) / (1.0 + alpha);
    let t2 = t1 + alpha / (1.0 + alpha);
    let binom = |q: f64| [(1.0 - q) * (1.0 - q), 2.0 * q * (1.0 - q), q * q];
    let row = match x1 {
        0 => binom(t1),
        1 => [
            (1.0 - t1) * (1.0 - t2),
            (1.0 - t1) * t2 + t1 * (1.0 - t2),
            t1 * t2,
        ],
        2 => binom(t2),
        other => return Err(Error::domain(format!("binomial value must be 0, 1 or 2, got {other}"))),
    };
    let mut row = row;
    // Rounding at the boundary of the sufficient condition.
    for v in row.iter_mut() {
        if *v < 0.0 && *v > -1e-15 {
            *v = 0.0;
        }
    }
    let total: f64 = row.iter().sum();
    if row.iter().any(|&v| v.is_nan() || v < 0.0) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvariantViolation(format!(
            "conditional pmf for x1={x1}, p1={p1}, p2={p2}, alpha={alpha} is {row:?} (sum {total})"
        )));
    }
    Ok(row)
}

/// Output of the sequential correlated-binomial generator.
#[derive(Debug, Clone)]
pub struct CorrelatedBinomial {
    /// `n x p` matrix with entries in {0, 1, 2}.
    pub x: DMatrix<f64>,
    /// Success probability of each column's `Bin(2, q_j)` margin.
    pub q: Vec<f64>,
    /// Association with the previous column; 0 for the first column and for
    /// columns whose drawn value failed the sufficient condition.
    pub alpha: Vec<f64>,
    /// Columns (0-based, j >= 1) whose drawn `alpha` was reset to 0.
    pub forced_independent: Vec<bool>,
}

impl CorrelatedBinomial {
    /// Population correlation between columns `j-1` and `j`, for `j >= 1`.
    pub fn consecutive_correlations(&self) -> Vec<f64> {
        (1..self.q.len())
            .map(|j| {
                pair_correlation(self.q[j - 1], self.q[j], self.alpha[j])
                    .expect("generated parameters are in range")
            })
            .collect()
    }
}

#[inline]
fn draw_from_pmf(u: f64, pmf: &[f64; 3]) -> f64 {
    if u < pmf[0] {
        0.0
    } else if u < pmf[0] + pmf[1] {
        1.0
    } else {
        2.0
    }
}

/// Sequentially simulated correlated `Bin(2, q_j)` columns.
///
/// `q_j ~ U(0.1, 0.5)` and `alpha_j ~ U(0.5, 1)`; `alpha_j` is reset to 0 when
/// `(q_{j-1}, q_j, alpha_j)` violates the sufficient condition, and column
/// `j` is then drawn row by row from the conditional pmf given column `j-1`.
pub fn sample_correlated_binomial(p: usize, n: usize, seed: u64) -> Result<CorrelatedBinomial> {
    if p == 0 || n == 0 {
        return Err(Error::domain("correlated binomial design needs p >= 1 and n >= 1"));
    }
    let mut rng = rng_from_seed(seed);
    let mut x = DMatrix::<f64>::zeros(n, p);
    let mut q = Vec::with_capacity(p);
    let mut alpha = Vec::with_capacity(p);
    let mut forced = Vec::with_capacity(p);

    let q1: f64 = rng.random_range(0.1..0.5);
    let first = [(1.0 - q1) * (1.0 - q1), 2.0 * q1 * (1.0 - q1), q1 * q1];
    for v in x.column_mut(0).iter_mut() {
        *v = draw_from_pmf(rng.random(), &first);
    }
    q.push(q1);
    alpha.push(0.0);
    forced.push(false);

    for j in 1..p {
        let qj: f64 = rng.random_range(0.1..0.5);
        let mut aj: f64 = rng.random_range(0.5..1.0);
        let prev_q = q[j - 1];
        let reset = !sufficient_condition(prev_q, qj, aj);
        if reset {
            aj = 0.0;
        }
        let rows = [
            conditional_pmf(0, prev_q, qj, aj)?,
            conditional_pmf(1, prev_q, qj, aj)?,
            conditional_pmf(2, prev_q, qj, aj)?,
        ];
        for i in 0..n {
            let given = x[(i, j - 1)] as usize;
            x[(i, j)] = draw_from_pmf(rng.random(), &rows[given]);
        }
        q.push(qj);
        alpha.push(aj);
        forced.push(reset);
    }
    Ok(CorrelatedBinomial { x, q, alpha, forced_independent: forced })
}
