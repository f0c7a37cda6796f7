//! Acceptance criteria. Each criterion prints one `PASS` or `FAIL` line;
//! the process exits nonzero if any criterion fails.
//!
//! Run a subset with `cargo test --test acceptance -- C3 C5`.

#[path = "../common/mod.rs"]
mod common;

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use binscreen::asymptotics::{self, beta_ls_population, beta_ml_population, probit_cross_moment};
use binscreen::datagen::{conditional_pmf, sample_correlated_binomial, sufficient_condition};
use binscreen::experiments::{self, Design, ExperimentConfig, Scenario};
use binscreen::glm::{self, GlmOptions};
use binscreen::screening::{selection_size, sis_stat};
use binscreen::{screen, CovarianceSpec, LinkFamily, LinkKind, Method, ScreenOptions, TrueModel};
use common::{mean_and_se, oracle_mle, OracleLink};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Collects sub-checks of one criterion.
#[derive(Default)]
struct Checks {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.notes.push(format!("ok    {what}"));
        } else {
            self.notes.push(format!("FAIL  {what}"));
            self.failures.push(what);
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(format!("      {}", what.into()));
    }
}

type Criterion = (&'static str, &'static str, fn(&mut Checks));

const CRITERIA: [Criterion; 10] = [
    ("C1", "mixture-integral constants", c1_constants),
    ("C2", "bias table reproduction", c2_table1),
    ("C3", "selection-rate table reproduction", c3_table2),
    ("C4", "exact cancellation of X15 under CS", c4_cancellation),
    ("C5", "likelihood limit consistency", c5_ml_limit),
    ("C6", "probit cross-moment closed form", c6_cross_moment),
    ("C7", "selection size rule", c7_selection_size),
    ("C8", "GLM oracle equivalence", c8_oracle_equivalence),
    ("C9", "screening speed at 72 x 7128", c9_performance),
    ("C10", "correlated binomial generator", c10_binomial),
];

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, title, run) in CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|f| f == id || title.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let mut checks = Checks::default();
        let outcome = panic::catch_unwind(AssertUnwindSafe(|| run(&mut checks)));
        if let Err(payload) = outcome {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            checks.check(false, format!("panicked: {msg}"));
        }
        for line in &checks.notes {
            println!("    {id} {line}");
        }
        let verdict = if checks.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("[acceptance] {id} {title}: {verdict} ({:.1} s)", start.elapsed().as_secs_f64());
        if !checks.failures.is_empty() {
            failed += 1;
        }
    }
    println!("[acceptance] {} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn single_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("thread pool")
        .install(f)
}

fn table1_model(link: LinkKind, cov: CovarianceSpec) -> TrueModel {
    TrueModel::new(0.0, vec![1.0, 1.0, -2.0, 0.0, 0.0], LinkFamily::new(link), cov).unwrap()
}

fn c1_constants(c: &mut Checks) {
    let start = Instant::now();
    let ar1 = CovarianceSpec::Ar1 { rho: 0.5 };
    let cs = CovarianceSpec::Cs { rho: 0.5 };
    let cases = [
        (LinkKind::Probit, ar1.clone(), 0.178, 1e-3, "probit AR1"),
        (LinkKind::Probit, cs.clone(), 0.199, 1e-3, "probit CS"),
        (LinkKind::Logit, ar1, 0.151, 5e-3, "logit AR1"),
        (LinkKind::Logit, cs, 0.164, 5e-3, "logit CS"),
    ];
    let mut values = Vec::new();
    for (link, cov, reference, tol, label) in cases {
        let model = table1_model(link, cov);
        let v = model.signal_variance().unwrap();
        let c1 = LinkFamily::new(link).mixture_integral(0.0, v).unwrap();
        values.push(c1);
        c.check((c1 - reference).abs() <= tol, format!("{label}: c1 = {c1:.6} vs {reference} +- {tol} (v = {v})"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    let closed = [1.0 / (2.0 * std::f64::consts::PI * 5.0).sqrt(), 1.0 / (2.0 * std::f64::consts::PI * 4.0).sqrt()];
    c.check((values[0] - closed[0]).abs() < 1e-8, format!("probit AR1 equals 1/sqrt(2 pi 5) = {:.10}", closed[0]));
    c.check((values[1] - closed[1]).abs() < 1e-8, format!("probit CS equals 1/sqrt(2 pi 4) = {:.10}", closed[1]));
    c.check(elapsed < 1.0, format!("runtime {elapsed:.4} s < 1 s"));
}

fn c2_table1(c: &mut Checks) {
    let cfg = ExperimentConfig { replicates: 100, ..ExperimentConfig::paper(Scenario::Table1, 20_240_601) };
    let start = Instant::now();
    let res = experiments::run_table1(&cfg).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    for cell in &res.cells {
        let label = format!("{} {}", cell.cov.label(), cell.link);
        for k in 0..cell.mean_bias.len() {
            let (b, se) = (cell.mean_bias[k], cell.se[k]);
            c.check(
                b.abs() < 3.0 * se && se <= 0.06,
                format!("{label} beta{}: bias {b:+.4}, s.e. {se:.4} (|bias| < 3 s.e., s.e. <= 0.06)", k + 1),
            );
        }
        c.note(format!("{label}: c1 = {:.3}", cell.c1));
    }
    c.check(elapsed < 60.0, format!("runtime {elapsed:.2} s < 60 s"));
}

fn c3_table2(c: &mut Checks) {
    let cfg = ExperimentConfig::paper(Scenario::Table2, 20_240_602);
    let start = Instant::now();
    let res = experiments::run_table2(&cfg).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    for line in res.to_csv().lines() {
        c.note(line.to_string());
    }
    let ns = [100, 200, 500];
    let ar1 = [0.63, 0.97, 1.00];
    let binomial = |m: Method| match m {
        Method::Sisl => [0.16, 0.76, 1.00],
        Method::Sisp => [0.16, 0.73, 1.00],
        Method::Less => [0.08, 0.64, 1.00],
    };
    for method in Method::ALL {
        for (i, &n) in ns.iter().enumerate() {
            let r = res.rate(method, Design::NormalAr1, n).unwrap();
            c.check((r - ar1[i]).abs() <= 0.08 + 1e-12, format!("{method:?} Normal-AR1 n={n}: {r} vs {} +- 0.08", ar1[i]));
        }
        for &n in &ns {
            let r = res.rate(method, Design::NormalCs, n).unwrap();
            let cap = if n == 500 { 0.05 } else { 0.03 };
            c.check(r <= cap + 1e-12, format!("{method:?} Normal-CS n={n}: {r} <= {cap}"));
        }
        for (i, &n) in ns.iter().enumerate() {
            let r = res.rate(method, Design::CorrelatedBinomial, n).unwrap();
            let reference = binomial(method)[i];
            c.check(
                (r - reference).abs() <= 0.10 + 1e-12,
                format!("{method:?} Correlated Binomial n={n}: {r} vs {reference} +- 0.10"),
            );
        }
        let r = res.rate(method, Design::CorrelatedBinomial, 500).unwrap();
        c.check(r >= 0.97, format!("{method:?} Correlated Binomial n=500: {r} >= 0.97"));
    }
    c.check(elapsed < 600.0, format!("runtime {elapsed:.1} s < 600 s"));
}

fn figure1_gamma() -> Vec<f64> {
    experiments::screening_gamma(30, 0.5)
}

fn c4_cancellation(c: &mut Checks) {
    let model = TrueModel::new(0.0, figure1_gamma(), LinkFamily::probit(), CovarianceSpec::Cs { rho: 0.5 }).unwrap();
    let (b, c1) = beta_ls_population(&model, &[14]).unwrap();
    c.check(b[0].abs() <= 1e-12, format!("beta_LS at X15 = {:e} (c1 = {c1:.4})", b[0]));
    let e = asymptotics::contamination(&model, 14).unwrap();
    c.check((e - 1.5).abs() <= 1e-12, format!("contamination e15 = {e}"));
}

struct RandomModel {
    model: TrueModel,
    working: LinkFamily,
    subset: Vec<usize>,
}

fn random_model(rng: &mut ChaCha8Rng) -> RandomModel {
    let p = rng.random_range(3..=5);
    let gamma: Vec<f64> = loop {
        let g: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        if g.iter().any(|v: &f64| v.abs() > 0.3) {
            break g;
        }
    };
    let rho = rng.random_range(0.0..0.6);
    let cov = if rng.random_bool(0.5) { CovarianceSpec::Ar1 { rho } } else { CovarianceSpec::Cs { rho } };
    let link = |logit: bool| if logit { LinkFamily::logit() } else { LinkFamily::probit() };
    let true_link = link(rng.random_bool(0.5));
    let working = link(rng.random_bool(0.5));
    let gamma0 = rng.random_range(-0.5..0.5);
    let size = rng.random_range(1..=p);
    let mut subset: Vec<usize> = (0..p).collect();
    for i in 0..p {
        let j = rng.random_range(i..p);
        subset.swap(i, j);
    }
    subset.truncate(size);
    subset.sort_unstable();
    RandomModel { model: TrueModel::new(gamma0, gamma, true_link, cov).unwrap(), working, subset }
}

fn oracle_link(link: &LinkFamily) -> OracleLink {
    match link.kind {
        LinkKind::Logit => OracleLink::Logit,
        LinkKind::Probit => OracleLink::Probit,
    }
}

fn c5_ml_limit(c: &mut Checks) {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for m in 0..10 {
        let RandomModel { model, working, subset } = random_model(&mut rng);
        let (ls, _) = beta_ls_population(&model, &subset).unwrap();
        let ml = beta_ml_population(&model, &working, &subset).unwrap();
        let relation = ml.beta.iter().zip(&ls).map(|(b, l)| (b * ml.c2 - l).abs()).fold(0.0, f64::max);
        c.check(relation <= 1e-8, format!("model {m}: max |beta_ML c2 - beta_LS| = {relation:.2e}"));
        let dot: f64 = ml.beta.iter().zip(&ls).map(|(a, b)| a * b).sum();
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let cosine = dot / (norm(&ml.beta) * norm(&ls));
        c.check(cosine >= 1.0 - 1e-8, format!("model {m}: cosine(beta_ML, beta_LS) = {cosine:.12}"));

        let data = model.simulate(100_000, 9_000 + m).unwrap();
        let cols: Vec<Vec<f64>> = subset.iter().map(|&j| data.column(j).to_vec()).collect();
        let mle = oracle_mle(&cols, data.y(), oracle_link(&working));
        let mut expected = vec![ml.beta0];
        expected.extend(&ml.beta);
        let worst = mle.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        c.check(
            worst <= 0.05,
            format!(
                "model {m} ({} true, {} working, subset {subset:?}): max |MLE(n=1e5) - limit| = {worst:.4}",
                model.link, working
            ),
        );
    }
}

fn c6_cross_moment(c: &mut Checks) {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for m in 0..10 {
        let RandomModel { mut model, subset, .. } = random_model(&mut rng);
        model.link = LinkFamily::probit();
        let closed = probit_cross_moment(&model, &subset).unwrap();
        let data = model.simulate(1_000_000, 16_000 + m).unwrap();
        for (k, &j) in subset.iter().enumerate() {
            let products: Vec<f64> = data.column(j).iter().zip(data.y()).map(|(x, y)| x * y).collect();
            let (mean, se) = mean_and_se(&products);
            let z = (mean - closed[k]) / se;
            c.check(
                z.abs() <= 3.0,
                format!("model {m}, X{}: closed {:.5}, Monte Carlo {mean:.5} (z = {z:+.2})", j + 1, closed[k]),
            );
        }
    }
}

fn c7_selection_size(c: &mut Checks) {
    for (n, d) in [(100, 21), (200, 37), (500, 80), (72, 16)] {
        let got = selection_size(n).unwrap();
        c.check(got == d, format!("n = {n}: d = {got}, expected {d}"));
    }
}

/// A random small dataset with shifted and scaled columns and no separation.
fn small_dataset(rng: &mut ChaCha8Rng, link: OracleLink) -> (Vec<Vec<f64>>, Vec<f64>) {
    loop {
        let n = rng.random_range(40..=200);
        let q = rng.random_range(1..=3);
        let mut eta = vec![rng.random_range(-0.5..0.5); n];
        let mut cols = Vec::new();
        for _ in 0..q {
            let (mu, s): (f64, f64) = (rng.random_range(-5.0..5.0), rng.random_range(0.2..5.0));
            let b: f64 = rng.random_range(-1.0..1.0) / s;
            let col: Vec<f64> = (0..n).map(|_| mu + s * rng.sample::<f64, _>(StandardNormal)).collect();
            for (e, x) in eta.iter_mut().zip(&col) {
                *e += b * (x - mu);
            }
            cols.push(col);
        }
        let y: Vec<f64> = eta.iter().map(|&e| f64::from(rng.random::<f64>() < link.cdf(e))).collect();
        let positives = y.iter().sum::<f64>();
        if positives < 5.0 || positives > n as f64 - 5.0 {
            continue;
        }
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let kind = match link {
            OracleLink::Logit => LinkFamily::logit(),
            OracleLink::Probit => LinkFamily::probit(),
        };
        let fit = glm::fit_columns(&refs, &y, &kind, &GlmOptions::default()).unwrap();
        if fit.separation_detected {
            continue;
        }
        return (cols, y);
    }
}

fn c8_oracle_equivalence(c: &mut Checks) {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let (mut worst_fit, mut worst_sis, mut all_monotone, mut all_converged) = (0.0f64, 0.0f64, true, true);
    for case in 0..100 {
        let link = if case % 2 == 0 { OracleLink::Logit } else { OracleLink::Probit };
        let family = if link == OracleLink::Logit { LinkFamily::logit() } else { LinkFamily::probit() };
        let (cols, y) = small_dataset(&mut rng, link);
        let x = DMatrix::from_fn(y.len(), cols.len(), |i, j| cols[j][i]);
        let fit = glm::fit(&x, &y, &family).unwrap();
        let oracle = oracle_mle(&cols, &y, link);
        let err = fit
            .coefficients
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
            .fold(0.0, f64::max);
        worst_fit = worst_fit.max(err);
        all_converged &= fit.converged;
        all_monotone &= fit
            .log_likelihood_trace
            .windows(2)
            .all(|w| w[1] >= w[0] - 1e-12 * (1.0 + w[0].abs()));

        let stat = sis_stat(&cols[0], &y, &family).unwrap();
        let marginal = oracle_mle(&cols[..1], &y, link);
        worst_sis = worst_sis.max((stat.value - marginal[1]).abs() / marginal[1].abs().max(1.0));
    }
    c.check(worst_fit <= 1e-6, format!("glm fit vs oracle: worst relative error {worst_fit:.2e} <= 1e-6"));
    c.check(worst_sis <= 1e-6, format!("sis_stat vs oracle: worst relative error {worst_sis:.2e} <= 1e-6"));
    c.check(all_converged, "every fit converged");
    c.check(all_monotone, "log-likelihood non-decreasing on every run (up to rounding)");
}

fn c9_performance(c: &mut Checks) {
    let mut gamma = vec![0.0; 7128];
    gamma[..8].copy_from_slice(&[1.0, -1.0, 0.8, -0.8, 0.6, -0.6, 0.5, -0.5]);
    let model = TrueModel::new(0.0, gamma, LinkFamily::logit(), CovarianceSpec::Ar1 { rho: 0.3 }).unwrap();
    let data = model.simulate(72, 99).unwrap();
    c.note(format!("dataset {} x {}, {} positives", data.n(), data.p(), data.positives()));
    for (method, limit) in [(Method::Less, 1.0), (Method::Sisl, 60.0), (Method::Sisp, 60.0)] {
        let start = Instant::now();
        let report = single_thread(|| screen(&data, method, &ScreenOptions::default())).unwrap();
        let elapsed = start.elapsed().as_secs_f64();
        c.check(
            elapsed < limit && report.selected.len() == 16,
            format!("{method:?}: {elapsed:.3} s on one thread < {limit} s, {} selected", report.selected.len()),
        );
    }
}

fn c10_binomial(c: &mut Checks) {
    let steps = 25;
    let grid = |k: usize, lo: f64, hi: f64, m: usize| lo + (hi - lo) * k as f64 / (m - 1) as f64;
    let (mut points, mut worst, mut negative) = (0usize, 0.0f64, 0usize);
    for a in 0..steps {
        for b in 0..steps {
            for k in 0..16 {
                let (p1, p2) = (grid(a, 0.1, 0.5, steps), grid(b, 0.1, 0.5, steps));
                let drawn = grid(k, 0.0, 1.0, 16);
                let alpha = if sufficient_condition(p1, p2, drawn) { drawn } else { 0.0 };
                for x1 in 0..3u8 {
                    let row = conditional_pmf(x1, p1, p2, alpha).unwrap();
                    worst = worst.max((row.iter().sum::<f64>() - 1.0).abs());
                    negative += row.iter().filter(|&&v| v < 0.0).count();
                }
                points += 1;
            }
        }
    }
    c.check(
        points >= 10_000 && worst <= 1e-12 && negative == 0,
        format!("{points} grid points: max |sum - 1| = {worst:.1e}, {negative} negative masses"),
    );

    let gen = sample_correlated_binomial(100_000, 1, 1010).unwrap();
    let mut corr = gen.consecutive_correlations();
    let independent = gen.forced_independent.iter().filter(|&&f| f).count() as f64 / (corr.len() as f64);
    corr.sort_by(f64::total_cmp);
    let median = corr[corr.len() / 2];
    c.check((median - 0.4).abs() <= 0.05, format!("median consecutive correlation {median:.4} = 0.4 +- 0.05"));
    c.check(
        (independent - 0.10).abs() <= 0.03,
        format!("independence fraction {independent:.4} = 0.10 +- 0.03"),
    );
    let dependent: Vec<f64> = corr.iter().copied().filter(|&r| r > 0.0).collect();
    c.note(format!(
        "dependent-pair correlation range {:.3} .. {:.3}",
        dependent.first().unwrap(),
        dependent.last().unwrap()
    ));
}
