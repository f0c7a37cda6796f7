use nalgebra::DMatrix;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// An `n x p` predictor matrix with a binary response.
///
/// Columns are stored contiguously (column-major), which is the access
/// pattern of every per-predictor statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: Vec<f64>,
    names: Vec<String>,
    response_name: String,
}

impl Dataset {
    /// Builds a dataset with default names `x1..xp` and response `y`.
    pub fn new(x: DMatrix<f64>, y: Vec<f64>) -> Result<Self> {
        let names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Self::with_names(x, y, names, "y".to_string())
    }

    pub fn with_names(
        x: DMatrix<f64>,
        y: Vec<f64>,
        names: Vec<String>,
        response_name: String,
    ) -> Result<Self> {
        let (n, p) = x.shape();
        if y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: y.len() });
        }
        if names.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: names.len() });
        }
        if n < 2 {
            return Err(Error::InvalidDataset(format!("need at least 2 observations, got {n}")));
        }
        if p == 0 {
            return Err(Error::InvalidDataset("no predictor columns".into()));
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite predictor at row {}, column {}",
                pos % n + 1,
                names[pos / n]
            )));
        }
        if let Some(i) = y.iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidDataset(format!(
                "response at row {} is {}, expected 0 or 1",
                i + 1,
                y[i]
            )));
        }
        Ok(Self { x, y, names, response_name })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Contiguous view of predictor column `j` (0-based).
    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.x.as_slice()[j * n..(j + 1) * n]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn response_name(&self) -> &str {
        &self.response_name
    }

    /// Number of responses equal to 1.
    pub fn positives(&self) -> usize {
        self.y.iter().filter(|&&v| v == 1.0).count()
    }

    /// Keeps only the listed columns (0-based), in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Dataset> {
        let p = self.p();
        if let Some(&bad) = columns.iter().find(|&&j| j >= p) {
            return Err(Error::domain(format!("column index {bad} out of range for p = {p}")));
        }
        let x = self.x.select_columns(columns);
        let names = columns.iter().map(|&j| self.names[j].clone()).collect();
        Dataset::with_names(x, self.y.clone(), names, self.response_name.clone())
    }

    /// Keeps only the listed rows (0-based).
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        let x = self.x.select_rows(rows);
        let y = rows.iter().map(|&i| self.y[i]).collect();
        Dataset::with_names(x, y, self.names.clone(), self.response_name.clone())
    }

    /// Random `(train, holdout)` split with `round(fraction * n)` held out.
    pub fn holdout_split(&self, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::domain(format!("holdout fraction must lie in (0, 1), got {fraction}")));
        }
        let n = self.n();
        let held = (fraction * n as f64).round() as usize;
        if held < 2 || n - held < 2 {
            return Err(Error::domain(format!("holdout of {held} rows from {n} leaves too few rows")));
        }
        let mut rows: Vec<usize> = (0..n).collect();
        rows.shuffle(&mut rng_from_seed(seed));
        let (test, train) = rows.split_at(held);
        let (mut train, mut test) = (train.to_vec(), test.to_vec());
        train.sort_unstable();
        test.sort_unstable();
        Ok((self.select_rows(&train)?, self.select_rows(&test)?))
    }
}
