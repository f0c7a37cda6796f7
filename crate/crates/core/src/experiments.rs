//! Seeded simulation drivers for the bias table, the selection-rate table
//! and the averaged screening-statistic curves.
//!
//! Every replicate draws its data from `substream(seed, cell, replicate)`,
//! so cells and replicates run in parallel and the output does not depend on
//! scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{self, PopulationCurve};
use crate::datagen::{bernoulli_response, sample_correlated_binomial, CovarianceSpec, TrueModel};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::glm::least_squares;
use crate::links::{LinkFamily, LinkKind};
use crate::rng::{derive, substream};
use crate::screening::{screen, Method, ScreenOptions};

pub const DESK_REPLICATES: usize = 50;
pub const PAPER_REPLICATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Table1,
    Table2,
    Figure1,
}

impl Scenario {
    fn default_p(self) -> usize {
        match self {
            Scenario::Table1 => 5,
            Scenario::Table2 => 1000,
            Scenario::Figure1 => 30,
        }
    }

    fn min_p(self) -> usize {
        match self {
            Scenario::Table1 => 3,
            Scenario::Table2 | Scenario::Figure1 => 15,
        }
    }

    fn default_n_values(self) -> Vec<usize> {
        match self {
            Scenario::Table1 | Scenario::Figure1 => vec![200],
            Scenario::Table2 => vec![100, 200, 500],
        }
    }

    fn tag(self) -> u64 {
        match self {
            Scenario::Table1 => 1,
            Scenario::Table2 => 2,
            Scenario::Figure1 => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub replicates: usize,
    pub n_values: Vec<usize>,
    pub seed: u64,
    pub rho: f64,
    /// Number of predictors; the true coefficients are padded with zeros.
    pub p: usize,
}

impl ExperimentConfig {
    /// Full-size grid with the reduced desk replicate count.
    pub fn desk(scenario: Scenario, seed: u64) -> Self {
        Self {
            scenario,
            replicates: DESK_REPLICATES,
            n_values: scenario.default_n_values(),
            seed,
            rho: 0.5,
            p: scenario.default_p(),
        }
    }

    pub fn paper(scenario: Scenario, seed: u64) -> Self {
        Self {
            replicates: PAPER_REPLICATES,
            ..Self::desk(scenario, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::domain("replicates must be at least 1"));
        }
        if self.n_values.is_empty() {
            return Err(Error::domain("n_values must not be empty"));
        }
        if let Some(n) = self.n_values.iter().find(|&&n| n < 10) {
            return Err(Error::domain(format!("sample sizes must be at least 10, got {n}")));
        }
        if self.p < self.scenario.min_p() {
            return Err(Error::domain(format!(
                "{:?} needs p >= {}, got {}",
                self.scenario,
                self.scenario.min_p(),
                self.p
            )));
        }
        CovarianceSpec::Ar1 { rho: self.rho }.validate(self.p)?;
        CovarianceSpec::Cs { rho: self.rho }.validate(self.p)?;
        Ok(())
    }

    fn expect(&self, scenario: Scenario) -> Result<()> {
        if self.scenario != scenario {
            return Err(Error::domain(format!(
                "configuration is for {:?}, not {:?}",
                self.scenario, scenario
            )));
        }
        self.validate()
    }

    fn cell_seed(&self, cell: usize, replicate: usize) -> u64 {
        substream(self.seed, (self.scenario.tag() << 32) | cell as u64, replicate as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovKind {
    Ar1,
    Cs,
}

impl CovKind {
    pub fn label(self) -> &'static str {
        match self {
            CovKind::Ar1 => "AR1",
            CovKind::Cs => "CS",
        }
    }

    pub fn spec(self, rho: f64) -> CovarianceSpec {
        match self {
            CovKind::Ar1 => CovarianceSpec::Ar1 { rho },
            CovKind::Cs => CovarianceSpec::Cs { rho },
        }
    }
}

fn mean_and_se(values: impl ExactSizeIterator<Item = f64> + Clone) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.clone().sum::<f64>() / k;
    if k < 2.0 {
        return (mean, f64::NAN);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

fn csv_string(rows: &[Vec<String>]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.write_record(row).expect("writing to memory cannot fail");
    }
    String::from_utf8(writer.into_inner().expect("writing to memory cannot fail")).expect("csv output is UTF-8")
}

// ---------------------------------------------------------------------------
// Bias table

/// `gamma = (1, 1, -2, 0, ..., 0)`.
pub fn table1_gamma(p: usize) -> Vec<f64> {
    let mut gamma = vec![0.0; p];
    gamma[..3].copy_from_slice(&[1.0, 1.0, -2.0]);
    gamma
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasCell {
    pub cov: CovKind,
    pub link: LinkKind,
    pub n: usize,
    pub c1: f64,
    /// Mean of `beta_tilde_k / c1 - gamma_k` over replicates.
    pub mean_bias: Vec<f64>,
    pub se: Vec<f64>,
    /// Adjusted least-squares slopes `beta_tilde / c1`, one row per replicate.
    pub adjusted: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Result {
    pub config: ExperimentConfig,
    pub gamma: Vec<f64>,
    pub cells: Vec<BiasCell>,
}

/// Least-squares fits on all predictors, rescaled by `1 / c1`, for every
/// covariance x link cell.
pub fn run_table1(cfg: &ExperimentConfig) -> Result<Table1Result> {
    cfg.expect(Scenario::Table1)?;
    let gamma = table1_gamma(cfg.p);
    let mut layout = Vec::new();
    for cov in [CovKind::Ar1, CovKind::Cs] {
        for link in [LinkKind::Probit, LinkKind::Logit] {
            for &n in &cfg.n_values {
                layout.push((cov, link, n));
            }
        }
    }
    let cells = layout
        .iter()
        .enumerate()
        .map(|(cell, &(cov, link, n))| {
            let model = TrueModel::new(0.0, gamma.clone(), LinkFamily::new(link), cov.spec(cfg.rho))?;
            let c1 = asymptotics::c1(&model)?;
            let adjusted: Vec<Vec<f64>> = (0..cfg.replicates)
                .into_par_iter()
                .map(|r| {
                    let data = model.simulate(n, cfg.cell_seed(cell, r))?;
                    let coef = least_squares(data.x(), data.y())?;
                    Ok(coef[1..].iter().map(|b| b / c1).collect())
                })
                .collect::<Result<_>>()?;
            let (mean_bias, se) = (0..cfg.p)
                .map(|k| {
                    let (mean, se) = mean_and_se(adjusted.iter().map(|row| row[k]));
                    (mean - gamma[k], se)
                })
                .unzip();
            Ok(BiasCell { cov, link, n, c1, mean_bias, se, adjusted })
        })
        .collect::<Result<_>>()?;
    Ok(Table1Result { config: cfg.clone(), gamma, cells })
}

impl Table1Result {
    /// One `mean` and one `s.e.` row per cell; `c1` on the mean row.
    pub fn to_csv(&self) -> String {
        let p = self.gamma.len();
        let mut header = vec!["cov".to_string(), "link".into(), "n".into(), "stat".into()];
        header.extend((1..=p).map(|k| format!("beta{k}")));
        header.push("c1".into());
        let mut rows = vec![header];
        for cell in &self.cells {
            let lead = |stat: &str| {
                vec![cell.cov.label().to_string(), cell.link.to_string(), cell.n.to_string(), stat.to_string()]
            };
            let mut mean = lead("mean");
            mean.extend(cell.mean_bias.iter().map(f64::to_string));
            mean.push(cell.c1.to_string());
            let mut se = lead("s.e.");
            se.extend(cell.se.iter().map(f64::to_string));
            se.push(String::new());
            rows.push(mean);
            rows.push(se);
        }
        csv_string(&rows)
    }
}

// ---------------------------------------------------------------------------
// Selection-rate table

/// Active predictors of the screening model, 0-based: `X1, X2, X10, X15`.
pub const ACTIVE: [usize; 4] = [0, 1, 9, 14];

/// `gamma` with `1, 1, 1, -3 rho` on the active predictors.
pub fn screening_gamma(p: usize, rho: f64) -> Vec<f64> {
    let mut gamma = vec![0.0; p];
    gamma[ACTIVE[0]] = 1.0;
    gamma[ACTIVE[1]] = 1.0;
    gamma[ACTIVE[2]] = 1.0;
    gamma[ACTIVE[3]] = -3.0 * rho;
    gamma
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    NormalAr1,
    NormalCs,
    CorrelatedBinomial,
}

impl Design {
    pub const ALL: [Design; 3] = [Design::NormalAr1, Design::NormalCs, Design::CorrelatedBinomial];

    pub fn label(self) -> &'static str {
        match self {
            Design::NormalAr1 => "Normal-AR1",
            Design::NormalCs => "Normal-CS",
            Design::CorrelatedBinomial => "Correlated Binomial",
        }
    }
}

/// One replicate of the screening model under `design`.
///
/// The correlated-binomial design reuses the same probit linear predictor on
/// the raw `{0, 1, 2}` predictors.
pub fn simulate_design(design: Design, p: usize, n: usize, rho: f64, seed: u64) -> Result<Dataset> {
    let gamma = screening_gamma(p, rho);
    match design {
        Design::NormalAr1 | Design::NormalCs => {
            let cov = if design == Design::NormalAr1 { CovKind::Ar1 } else { CovKind::Cs };
            TrueModel::new(0.0, gamma, LinkFamily::probit(), cov.spec(rho))?.simulate(n, seed)
        }
        Design::CorrelatedBinomial => {
            let x = sample_correlated_binomial(p, n, derive(seed, 0))?.x;
            let y = bernoulli_response(&x, 0.0, &gamma, &LinkFamily::probit(), derive(seed, 1))?;
            Dataset::new(x, y)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateOutcome {
    pub method: Method,
    pub hit: bool,
    /// 0-based rank of each active predictor in the full ranking.
    pub active_ranks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCell {
    pub method: Method,
    pub design: Design,
    pub n: usize,
    pub d: usize,
    pub hits: usize,
    pub replicates: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReplicates {
    pub design: Design,
    pub n: usize,
    pub outcomes: Vec<Vec<ReplicateOutcome>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table2Result {
    pub config: ExperimentConfig,
    pub active: Vec<usize>,
    /// Ordered by method, then design, then `n`.
    pub cells: Vec<RateCell>,
    pub detail: Vec<DesignReplicates>,
}

impl Table2Result {
    pub fn rate(&self, method: Method, design: Design, n: usize) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.design == design && c.n == n)
            .map(|c| c.rate)
    }

    /// Methods as rows, design x n as columns.
    pub fn to_csv(&self) -> String {
        let n_values = &self.config.n_values;
        let mut header = vec!["method".to_string()];
        for design in Design::ALL {
            header.extend(n_values.iter().map(|n| format!("{} n={n}", design.label())));
        }
        let mut rows = vec![header];
        for method in Method::ALL {
            let mut row = vec![method.label().to_string()];
            for design in Design::ALL {
                for &n in n_values {
                    row.push(self.rate(method, design, n).map_or(String::new(), |r| r.to_string()));
                }
            }
            rows.push(row);
        }
        csv_string(&rows)
    }
}

/// Rate at which each method's top-`d` set contains every active predictor.
pub fn run_table2(cfg: &ExperimentConfig) -> Result<Table2Result> {
    cfg.expect(Scenario::Table2)?;
    let layout: Vec<(Design, usize)> = Design::ALL
        .iter()
        .flat_map(|&design| cfg.n_values.iter().map(move |&n| (design, n)))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..layout.len())
        .flat_map(|cell| (0..cfg.replicates).map(move |r| (cell, r)))
        .collect();
    let outcomes: Vec<Vec<ReplicateOutcome>> = jobs
        .par_iter()
        .map(|&(cell, r)| {
            let (design, n) = layout[cell];
            let data = simulate_design(design, cfg.p, n, cfg.rho, cfg.cell_seed(cell, r))?;
            Method::ALL
                .iter()
                .map(|&method| {
                    let report = screen(&data, method, &ScreenOptions::default())?;
                    let mut position = vec![0; cfg.p];
                    report.ranking.iter().enumerate().for_each(|(rank, &j)| position[j] = rank);
                    Ok(ReplicateOutcome {
                        method,
                        hit: report.contains_all(&ACTIVE),
                        active_ranks: ACTIVE.iter().map(|&j| position[j]).collect(),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let detail: Vec<DesignReplicates> = layout
        .iter()
        .enumerate()
        .map(|(cell, &(design, n))| DesignReplicates {
            design,
            n,
            outcomes: outcomes[cell * cfg.replicates..(cell + 1) * cfg.replicates].to_vec(),
        })
        .collect();
    let mut cells = Vec::new();
    for (m, &method) in Method::ALL.iter().enumerate() {
        for block in &detail {
            let hits = block.outcomes.iter().filter(|o| o[m].hit).count();
            cells.push(RateCell {
                method,
                design: block.design,
                n: block.n,
                d: crate::screening::selection_size(block.n)?,
                hits,
                replicates: cfg.replicates,
                rate: hits as f64 / cfg.replicates as f64,
            });
        }
    }
    Ok(Table2Result { config: cfg.clone(), active: ACTIVE.to_vec(), cells, detail })
}

// ---------------------------------------------------------------------------
// Averaged screening statistics

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodAverage {
    pub method: Method,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Figure1Panel {
    pub cov: CovKind,
    pub n: usize,
    pub averages: Vec<MethodAverage>,
    /// Population limits with logit and probit working links.
    pub analytic_logit: PopulationCurve,
    pub analytic_probit: PopulationCurve,
}

impl Figure1Panel {
    pub fn average(&self, method: Method) -> &MethodAverage {
        self.averages
            .iter()
            .find(|a| a.method == method)
            .expect("every method is averaged")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Figure1Result {
    pub config: ExperimentConfig,
    pub active: Vec<usize>,
    pub panels: Vec<Figure1Panel>,
}

/// Marginal statistics averaged over replicates, next to their analytic limits.
pub fn run_figure1(cfg: &ExperimentConfig) -> Result<Figure1Result> {
    cfg.expect(Scenario::Figure1)?;
    let gamma = screening_gamma(cfg.p, cfg.rho);
    let mut layout = Vec::new();
    for cov in [CovKind::Ar1, CovKind::Cs] {
        for &n in &cfg.n_values {
            layout.push((cov, n));
        }
    }
    let panels = layout
        .iter()
        .enumerate()
        .map(|(cell, &(cov, n))| {
            let model = TrueModel::new(0.0, gamma.clone(), LinkFamily::probit(), cov.spec(cfg.rho))?;
            let stats: Vec<Vec<Vec<f64>>> = (0..cfg.replicates)
                .into_par_iter()
                .map(|r| {
                    let data = model.simulate(n, cfg.cell_seed(cell, r))?;
                    let opts = ScreenOptions { d: Some(1), standardize: false };
                    Method::ALL
                        .iter()
                        .map(|&m| Ok(screen(&data, m, &opts)?.stats))
                        .collect()
                })
                .collect::<Result<_>>()?;
            let averages = Method::ALL
                .iter()
                .enumerate()
                .map(|(m, &method)| {
                    let (mean, se) = (0..cfg.p)
                        .map(|j| mean_and_se(stats.iter().map(|rep| rep[m][j])))
                        .unzip();
                    MethodAverage { method, mean, se }
                })
                .collect();
            Ok(Figure1Panel {
                cov,
                n,
                averages,
                analytic_logit: asymptotics::population_curve(&model, &LinkFamily::logit())?,
                analytic_probit: asymptotics::population_curve(&model, &LinkFamily::probit())?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Figure1Result { config: cfg.clone(), active: ACTIVE.to_vec(), panels })
}

impl Figure1Result {
    /// Long format, one row per panel and predictor.
    pub fn to_csv(&self) -> String {
        let mut header = vec!["cov".to_string(), "n".into(), "predictor".into(), "active".into()];
        for method in Method::ALL {
            header.push(format!("{}_mean", method.label()));
            header.push(format!("{}_se", method.label()));
        }
        header.extend(["LS_limit", "SISL_limit", "SISP_limit"].map(String::from));
        let mut rows = vec![header];
        for panel in &self.panels {
            for j in 0..self.config.p {
                let mut row = vec![
                    panel.cov.label().to_string(),
                    panel.n.to_string(),
                    format!("x{}", j + 1),
                    self.active.contains(&j).to_string(),
                ];
                for method in Method::ALL {
                    let avg = panel.average(method);
                    row.push(avg.mean[j].to_string());
                    row.push(avg.se[j].to_string());
                }
                row.push(panel.analytic_logit.beta_ls[j].to_string());
                row.push(panel.analytic_logit.beta_ml[j].to_string());
                row.push(panel.analytic_probit.beta_ml[j].to_string());
                rows.push(row);
            }
        }
        csv_string(&rows)
    }
}
