//! Marginal screening statistics and the top-`d` selection rule.
//!
//! Each predictor is scored on its own against the response:
//!
//! * **LeSS**: the least-squares slope of `y` on `x_k` (with intercept);
//! * **SISL** / **SISP**: the slope of the two-parameter maximum-likelihood
//!   fit under a logit or probit working link.
//!
//! Predictors are ranked by the absolute statistic and the `d = floor(n / ln n)`
//! largest are kept.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::glm::{fit_columns, GlmOptions, SEPARATION_CAP};
use crate::links::LinkFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Less,
    Sisl,
    Sisp,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Sisl, Method::Sisp, Method::Less];

    /// Working link of the likelihood-based methods.
    pub fn working_link(self) -> Option<LinkFamily> {
        match self {
            Method::Less => None,
            Method::Sisl => Some(LinkFamily::logit()),
            Method::Sisp => Some(LinkFamily::probit()),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Less => "LeSS",
            Method::Sisl => "SISL",
            Method::Sisp => "SISP",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "less" => Ok(Method::Less),
            "sisl" => Ok(Method::Sisl),
            "sisp" => Ok(Method::Sisp),
            other => Err(Error::domain(format!("unknown screening method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    Ok,
    ZeroVariance,
    Separation,
    Nonconvergence,
}

impl Flag {
    /// Whether a predictor with this flag may be selected.
    pub fn selectable(self) -> bool {
        matches!(self, Flag::Ok | Flag::Separation)
    }
}

/// A per-predictor statistic and its diagnostic flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnStat {
    pub value: f64,
    pub flag: Flag,
}

impl ColumnStat {
    fn ok(value: f64) -> Self {
        Self { value, flag: Flag::Ok }
    }
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: y.len(), found: x.len() });
    }
    if x.len() < 2 {
        return Err(Error::domain("need at least 2 observations"));
    }
    Ok(())
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

/// Least-squares slope of `y` on `x`: centred cross-product over centred
/// sum of squares. A constant `x` gives 0 with a zero-variance flag.
pub fn less_stat(x: &[f64], y: &[f64]) -> Result<ColumnStat> {
    check_lengths(x, y)?;
    if is_constant(x) {
        return Ok(ColumnStat { value: 0.0, flag: Flag::ZeroVariance });
    }
    let n = x.len() as f64;
    let xbar = x.iter().sum::<f64>() / n;
    let ybar = y.iter().sum::<f64>() / n;
    let (sxy, sxx) = x.iter().zip(y).fold((0.0, 0.0), |(sxy, sxx), (&xi, &yi)| {
        let dx = xi - xbar;
        (sxy + dx * (yi - ybar), sxx + dx * dx)
    });
    Ok(ColumnStat::ok(sxy / sxx))
}

/// Slope of the marginal maximum-likelihood fit `P(Y=1) = H(b0 + b x)`.
///
/// Separation is detected exactly before fitting: with one predictor the
/// MLE fails to exist iff one class lies entirely on one side of the other
/// (ties allowed). Such a column scores `sign * SEPARATION_CAP` so that it
/// ranks first.
pub fn sis_stat(x: &[f64], y: &[f64], link: &LinkFamily) -> Result<ColumnStat> {
    sis_stat_with(x, y, link, &screening_glm_options())
}

pub(crate) fn screening_glm_options() -> GlmOptions {
    GlmOptions {
        max_iterations: 50,
        ..GlmOptions::default()
    }
}

fn sis_stat_with(x: &[f64], y: &[f64], link: &LinkFamily, opts: &GlmOptions) -> Result<ColumnStat> {
    check_lengths(x, y)?;
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::domain("response must be coded 0/1"));
    }
    let positives = y.iter().filter(|&&v| v == 1.0).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::domain("both response classes must be present"));
    }
    if is_constant(x) {
        return Ok(ColumnStat { value: 0.0, flag: Flag::ZeroVariance });
    }
    if let Some(direction) = separation_direction(x, y) {
        let ls = less_stat(x, y)?.value;
        let sign = if ls != 0.0 { ls.signum() } else { direction };
        return Ok(ColumnStat { value: sign * SEPARATION_CAP, flag: Flag::Separation });
    }
    let columns = [x];
    let fit = fit_columns(&columns, y, link, opts)?;
    let slope = fit.coefficients[1];
    let flag = if fit.separation_detected {
        Flag::Separation
    } else if !fit.converged {
        Flag::Nonconvergence
    } else {
        Flag::Ok
    };
    let value = if flag == Flag::Separation {
        slope.signum() * SEPARATION_CAP
    } else {
        slope
    };
    Ok(ColumnStat { value, flag })
}

/// `Some(+1)` if every positive has `x` at or above every negative,
/// `Some(-1)` for the mirror case, `None` if the classes overlap.
fn separation_direction(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mut min0, mut max0) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min1, mut max1) = (f64::INFINITY, f64::NEG_INFINITY);
    for (&xi, &yi) in x.iter().zip(y) {
        if yi == 1.0 {
            min1 = min1.min(xi);
            max1 = max1.max(xi);
        } else {
            min0 = min0.min(xi);
            max0 = max0.max(xi);
        }
    }
    if max0 <= min1 {
        Some(1.0)
    } else if max1 <= min0 {
        Some(-1.0)
    } else {
        None
    }
}

/// `floor(n / ln n)`.
pub fn selection_size(n: usize) -> Result<usize> {
    if n < 3 {
        return Err(Error::domain(format!("selection size needs n >= 3, got {n}")));
    }
    let nf = n as f64;
    Ok((nf / nf.ln()).floor() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScreenOptions {
    /// Overrides `floor(n / ln n)`.
    pub d: Option<usize>,
    /// Centre and scale every column to unit variance before scoring.
    pub standardize: bool,
}

/// Result of screening every predictor of a dataset.
///
/// Indices are 0-based column positions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreeningReport {
    pub method: Method,
    pub n: usize,
    pub p: usize,
    pub d: usize,
    pub standardized: bool,
    pub names: Vec<String>,
    pub stats: Vec<f64>,
    pub flags: Vec<Flag>,
    /// All columns ordered by decreasing `|stat|`, ties by column index.
    pub ranking: Vec<usize>,
    /// The selected columns, in rank order.
    pub selected: Vec<usize>,
    /// Wall time of the scoring loop, in seconds.
    pub timing: f64,
}

impl ScreeningReport {
    pub fn selected_names(&self) -> Vec<&str> {
        self.selected.iter().map(|&j| self.names[j].as_str()).collect()
    }

    /// Whether every listed column (0-based) was selected.
    pub fn contains_all(&self, columns: &[usize]) -> bool {
        columns.iter().all(|c| self.selected.contains(c))
    }
}

fn standardized_column(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    if sd > 0.0 {
        x.iter().map(|v| (v - mean) / sd).collect()
    } else {
        vec![0.0; x.len()]
    }
}

fn column_stat(x: &[f64], y: &[f64], method: Method) -> Result<ColumnStat> {
    match method.working_link() {
        None => less_stat(x, y),
        Some(link) => sis_stat(x, y, &link),
    }
}

/// Scores every column of `data`, ranks by `|stat|` and selects the top `d`.
///
/// Columns are scored in parallel; the report does not depend on the number
/// of worker threads.
pub fn screen(data: &Dataset, method: Method, opts: &ScreenOptions) -> Result<ScreeningReport> {
    let n = data.n();
    let p = data.p();
    let d = match opts.d {
        Some(0) => return Err(Error::domain("d must be at least 1")),
        Some(d) => d,
        None => selection_size(n)?,
    };
    let y = data.y();

    let start = Instant::now();
    let scored: Vec<ColumnStat> = (0..p)
        .into_par_iter()
        .map(|j| {
            if opts.standardize {
                column_stat(&standardized_column(data.column(j)), y, method)
            } else {
                column_stat(data.column(j), y, method)
            }
        })
        .collect::<Result<_>>()?;
    let timing = start.elapsed().as_secs_f64();

    let stats: Vec<f64> = scored.iter().map(|s| s.value).collect();
    let flags: Vec<Flag> = scored.iter().map(|s| s.flag).collect();
    let ranking = rank_by_magnitude(&stats);
    let selected: Vec<usize> = ranking
        .iter()
        .copied()
        .filter(|&j| flags[j].selectable())
        .take(d)
        .collect();
    if selected.is_empty() {
        return Err(Error::NoScreenablePredictors);
    }
    Ok(ScreeningReport {
        method,
        n,
        p,
        d,
        standardized: opts.standardize,
        names: data.names().to_vec(),
        stats,
        flags,
        ranking,
        selected,
        timing,
    })
}

/// Column order by decreasing `|stat|`, ties broken by ascending index.
pub fn rank_by_magnitude(stats: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..stats.len()).collect();
    order.sort_by(|&a, &b| stats[b].abs().total_cmp(&stats[a].abs()).then(a.cmp(&b)));
    order
}
