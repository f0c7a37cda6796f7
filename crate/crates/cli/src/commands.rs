use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use binscreen::asymptotics::{self, PopulationCurve};
use binscreen::experiments::{self, ExperimentConfig, Scenario};
use binscreen::glm::{self, GlmFit};
use binscreen::{io, screen, CovarianceSpec, Dataset, LinkFamily, LinkKind, ScreenOptions, TrueModel};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::manifest::RunManifest;
use crate::{AsymptoticsArgs, Command, ExperimentArgs, FitArgs, GenArgs, ScreenArgs};

#[derive(Debug)]
pub enum CliError {
    /// Bad input, arguments or files: exit code 1.
    User(String),
    /// A broken internal invariant: exit code 2.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::User(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::User(m) => f.write_str(m),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<binscreen::Error> for CliError {
    fn from(e: binscreen::Error) -> Self {
        if e.is_internal() {
            CliError::Internal(e.to_string())
        } else {
            CliError::User(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::User(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Model spec file: `{"gamma0", "gamma", "link", "cov": {"kind", ...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default)]
    pub gamma0: f64,
    pub gamma: Vec<f64>,
    pub link: LinkKind,
    pub cov: CovarianceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_nodes: Option<usize>,
}

impl ModelSpec {
    fn into_model(self) -> Result<TrueModel> {
        let mut link = LinkFamily::new(self.link);
        if let Some(nodes) = self.quadrature_nodes {
            if nodes == 0 {
                return Err(CliError::User("quadrature_nodes must be positive".into()));
            }
            link = link.with_nodes(nodes);
        }
        Ok(TrueModel::new(self.gamma0, self.gamma, link, self.cov)?)
    }
}

fn read_model(path: &Path) -> Result<(ModelSpec, TrueModel)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::User(format!("{}: {e}", path.display())))?;
    let spec: ModelSpec =
        serde_json::from_str(&text).map_err(|e| CliError::User(format!("{}: invalid model spec: {e}", path.display())))?;
    let model = spec.clone().into_model()?;
    Ok((spec, model))
}

fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, contents).map_err(|e| CliError::User(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(contents.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn pretty(value: &impl Serialize) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn to_value(value: &impl Serialize) -> Result<Value> {
    serde_json::to_value(value).map_err(|e| CliError::Internal(e.to_string()))
}

fn publish(manifest: &RunManifest, path: Option<&Path>) -> Result<()> {
    let line = serde_json::to_string(manifest).map_err(|e| CliError::Internal(e.to_string()))?;
    eprintln!("{line}");
    if let Some(path) = path {
        fs::write(path, pretty(manifest)?).map_err(|e| CliError::User(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

pub fn run(command: Command, manifest_path: Option<&Path>) -> Result<()> {
    let manifest = match command {
        Command::Gen(args) => gen(args)?,
        Command::Screen(args) => screen_cmd(args)?,
        Command::Fit(args) => fit(args)?,
        Command::Asymptotics(args) => asymptotics_cmd(args)?,
        Command::Table1(args) => experiment(Scenario::Table1, args)?,
        Command::Table2(args) => experiment(Scenario::Table2, args)?,
        Command::Figure1(args) => experiment(Scenario::Figure1, args)?,
    };
    publish(&manifest, manifest_path)
}

fn gen(args: GenArgs) -> Result<RunManifest> {
    let (spec, model) = read_model(&args.model)?;
    let start = Instant::now();
    let data = model.simulate(args.n, args.seed)?;
    let elapsed = start.elapsed().as_secs_f64();
    match &args.out {
        Some(path) => io::write_csv_file(&data, path)?,
        None => io::write_csv(&data, std::io::stdout().lock())?,
    }
    let config = json!({ "model": to_value(&spec)?, "n": args.n });
    Ok(RunManifest::new("gen", &config, args.seed, elapsed))
}

fn screen_cmd(args: ScreenArgs) -> Result<RunManifest> {
    let data = io::read_csv(&args.input, &args.response)?;
    let opts = ScreenOptions { d: args.d, standardize: args.standardize };
    let report = screen(&data, args.method, &opts)?;
    emit(args.out.as_deref(), &pretty(&report)?)?;
    let config = json!({
        "method": args.method,
        "input": args.input,
        "response": args.response,
        "d": args.d,
        "standardize": args.standardize,
    });
    Ok(RunManifest::new("screen", &config, 0, report.timing))
}

/// Column positions in `data` of the predictors a screening report selected.
fn selected_columns(report_path: &Path, data: &Dataset) -> Result<Vec<usize>> {
    #[derive(Deserialize)]
    struct Selection {
        names: Vec<String>,
        selected: Vec<usize>,
    }
    let text = fs::read_to_string(report_path).map_err(|e| CliError::User(format!("{}: {e}", report_path.display())))?;
    let sel: Selection = serde_json::from_str(&text)
        .map_err(|e| CliError::User(format!("{}: not a screening report: {e}", report_path.display())))?;
    sel.selected
        .iter()
        .map(|&j| {
            let name = sel
                .names
                .get(j)
                .ok_or_else(|| CliError::User(format!("report selects index {j} beyond its {} names", sel.names.len())))?;
            data.names()
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| CliError::User(format!("selected predictor {name:?} is not a column of the input")))
        })
        .collect()
}

#[derive(Serialize)]
struct FitOutput {
    predictors: Vec<String>,
    fit: GlmFit,
    /// In-sample rate on the rows used for fitting.
    misclassification_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    holdout: Option<HoldoutOutput>,
}

#[derive(Serialize)]
struct HoldoutOutput {
    fraction: f64,
    rows: usize,
    misclassification_rate: f64,
}

fn fit(args: FitArgs) -> Result<RunManifest> {
    let data = io::read_csv(&args.input, &args.response)?;
    let data = match &args.select {
        Some(report) => data.select_columns(&selected_columns(report, &data)?)?,
        None => data,
    };
    let (train, test) = match args.holdout {
        Some(fraction) => {
            let (train, test) = data.holdout_split(fraction, args.seed)?;
            (train, Some(test))
        }
        None => (data, None),
    };
    let link = LinkFamily::new(args.link);
    let start = Instant::now();
    let fit = glm::fit(train.x(), train.y(), &link)?;
    let elapsed = start.elapsed().as_secs_f64();
    let misclassification_rate = glm::misclassification_rate(&fit, train.x(), train.y())?;
    let holdout = match (&test, args.holdout) {
        (Some(test), Some(fraction)) => Some(HoldoutOutput {
            fraction,
            rows: test.n(),
            misclassification_rate: glm::misclassification_rate(&fit, test.x(), test.y())?,
        }),
        _ => None,
    };
    let out = FitOutput { predictors: train.names().to_vec(), fit, misclassification_rate, holdout };
    emit(args.out.as_deref(), &pretty(&out)?)?;
    let config = json!({
        "input": args.input,
        "response": args.response,
        "link": args.link,
        "select": args.select,
        "holdout": args.holdout,
    });
    Ok(RunManifest::new("fit", &config, args.seed, elapsed))
}

#[derive(Serialize)]
struct AsymptoticsOutput {
    model: ModelSpec,
    signal_variance: f64,
    c1: f64,
    contamination: Vec<f64>,
    working_link: LinkKind,
    working_model: asymptotics::PopulationCoefficients,
    curve_logit: PopulationCurve,
    curve_probit: PopulationCurve,
}

fn asymptotics_cmd(args: AsymptoticsArgs) -> Result<RunManifest> {
    let (spec, model) = read_model(&args.model)?;
    let subset = args.subset.clone().unwrap_or_else(|| (0..model.p()).collect());
    let start = Instant::now();
    let contamination = (0..model.p())
        .map(|j| asymptotics::contamination(&model, j))
        .collect::<binscreen::Result<Vec<_>>>()?;
    let working = LinkFamily { kind: args.working, ..model.link };
    let out = AsymptoticsOutput {
        signal_variance: model.signal_variance()?,
        c1: asymptotics::c1(&model)?,
        contamination,
        working_link: args.working,
        working_model: asymptotics::population_coefficients(&model, &working, &subset)?,
        curve_logit: asymptotics::population_curve(&model, &LinkFamily { kind: LinkKind::Logit, ..model.link })?,
        curve_probit: asymptotics::population_curve(&model, &LinkFamily { kind: LinkKind::Probit, ..model.link })?,
        model: spec.clone(),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let text = if args.csv { curves_csv(&out) } else { pretty(&out)? };
    emit(args.out.as_deref(), &text)?;
    let config = json!({ "model": to_value(&spec)?, "working": args.working, "subset": subset });
    Ok(RunManifest::new("asymptotics", &config, 0, elapsed))
}

fn curves_csv(out: &AsymptoticsOutput) -> String {
    let mut text = String::from("predictor,contamination,beta_ls,beta_ml_logit,c2_logit,beta_ml_probit,c2_probit\n");
    for j in 0..out.contamination.len() {
        text.push_str(&format!(
            "x{},{},{},{},{},{},{}\n",
            j + 1,
            out.contamination[j],
            out.curve_logit.beta_ls[j],
            out.curve_logit.beta_ml[j],
            out.curve_logit.c2[j],
            out.curve_probit.beta_ml[j],
            out.curve_probit.c2[j],
        ));
    }
    text
}

fn experiment(scenario: Scenario, args: ExperimentArgs) -> Result<RunManifest> {
    let mut cfg = if args.paper_scale {
        ExperimentConfig::paper(scenario, args.seed)
    } else {
        ExperimentConfig::desk(scenario, args.seed)
    };
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if let Some(n) = &args.n {
        cfg.n_values = n.clone();
    }
    if let Some(p) = args.p {
        cfg.p = p;
    }
    if let Some(rho) = args.rho {
        cfg.rho = rho;
    }
    cfg.validate()?;

    let start = Instant::now();
    let (csv, detail) = match scenario {
        Scenario::Table1 => {
            let res = experiments::run_table1(&cfg)?;
            (res.to_csv(), to_value(&res)?)
        }
        Scenario::Table2 => {
            let res = experiments::run_table2(&cfg)?;
            (res.to_csv(), to_value(&res)?)
        }
        Scenario::Figure1 => {
            let res = experiments::run_figure1(&cfg)?;
            (res.to_csv(), to_value(&res)?)
        }
    };
    let elapsed = start.elapsed().as_secs_f64();
    let name = match scenario {
        Scenario::Table1 => "table1",
        Scenario::Table2 => "table2",
        Scenario::Figure1 => "figure1",
    };
    let manifest = RunManifest::new(name, &to_value(&cfg)?, cfg.seed, elapsed);
    emit(args.out.as_deref(), &csv)?;
    if let Some(path) = &args.json {
        let sidecar = json!({ "manifest": to_value(&manifest)?, "result": detail });
        fs::write(path, pretty(&sidecar)?).map_err(|e| CliError::User(format!("{}: {e}", path.display())))?;
    }
    Ok(manifest)
}
