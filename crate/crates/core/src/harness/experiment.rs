use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::dataset::Dataset;
use super::linear::{error_rate, train_linear, LinearSvmConfig};
use super::sampling::sample_labeled;
use crate::error::{Error, Result};
use crate::kernel::{bandwidth_heuristic, DataMatrix, KernelParams, LabelVector};
use crate::landmarks::{self, LandmarkMethod, LandmarkSet};
use crate::linalg::select_rows;
use crate::nystrom::{build_core, NystromCore, DEFAULT_PINV_TOL};
use crate::prior::{factorize, fit, LearnConfig, SideInformation, SolverReport};
use crate::select::{alignment_factors, criterion_of, select_lambda, LambdaGrid, SelectionReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Mean pairwise squared distance over the whole data set.
    Heuristic,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaChoice {
    Fixed(f64),
    Grid(LambdaGrid),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// S = S0: the plain Nyström decomposition, labels used only by the classifier.
    NystromBaseline,
    Generalized,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" | "nystrom_baseline" => Ok(Method::NystromBaseline),
            "generalized" => Ok(Method::Generalized),
            other => Err(Error::input(format!(
                "unknown method '{other}' (expected baseline or generalized)"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::NystromBaseline => "baseline",
            Method::Generalized => "generalized",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// `None` picks [`default_landmark_count`].
    pub landmark_count: Option<usize>,
    pub landmark_method: LandmarkMethod,
    pub bandwidth: Bandwidth,
    pub labeled_per_run: usize,
    pub repeats: usize,
    pub seed: u64,
    pub lambda: LambdaChoice,
    pub svm: LinearSvmConfig,
    /// Pass the labeled subset to the dictionary fit. When false the fit sees
    /// no side information and the labels reach only the classifier.
    pub side_labels: bool,
    pub pinv_tol: f64,
    /// Solver settings; its `lambda` is overridden per fit.
    pub learn: LearnConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            landmark_count: None,
            landmark_method: LandmarkMethod::KMeans,
            bandwidth: Bandwidth::Heuristic,
            labeled_per_run: 20,
            repeats: 10,
            seed: 0,
            lambda: LambdaChoice::Grid(LambdaGrid::default_log()),
            svm: LinearSvmConfig::default(),
            side_labels: true,
            pinv_tol: DEFAULT_PINV_TOL,
            learn: LearnConfig::new(1.0),
        }
    }
}

/// max(10, round(0.1·n)), capped at 500 and at n.
pub fn default_landmark_count(n: usize) -> usize {
    ((n as f64 * 0.1).round() as usize).clamp(10, 500).min(n)
}

impl ExperimentConfig {
    pub fn landmarks_for(&self, n: usize) -> usize {
        self.landmark_count.unwrap_or_else(|| default_landmark_count(n))
    }

    pub fn validate(&self, ds: &Dataset) -> Result<()> {
        let n = ds.len();
        let m = self.landmarks_for(n);
        if m == 0 || m > n {
            return Err(Error::input(format!("landmark count {m} must lie in [1, {n}]")));
        }
        if self.repeats == 0 {
            return Err(Error::input("repeats must be at least 1"));
        }
        let classes = ds.classes().len();
        if classes < 2 {
            return Err(Error::input("classification needs at least two classes"));
        }
        if self.labeled_per_run < classes {
            return Err(Error::input(format!(
                "labeled_per_run = {} is below the number of classes ({classes})",
                self.labeled_per_run
            )));
        }
        if self.labeled_per_run >= n {
            return Err(Error::input("labeled_per_run leaves no unlabeled samples to score"));
        }
        if let Bandwidth::Fixed(b) = self.bandwidth {
            KernelParams::rbf(b)?;
        }
        if let LambdaChoice::Fixed(l) = self.lambda {
            self.learn.with_lambda(l).validate()?;
        }
        self.learn.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseTimes {
    pub landmarks: f64,
    pub core: f64,
    pub fit: f64,
    pub classify: f64,
}

impl PhaseTimes {
    pub fn total(&self) -> f64 {
        self.landmarks + self.core + self.fit + self.classify
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepeatResult {
    /// Error on the unlabeled samples, in [0, 1].
    pub error: f64,
    pub labeled: usize,
    /// λ used by the fit; `None` for the baseline.
    pub lambda: Option<f64>,
    pub rho_prior: Option<f64>,
    pub rho_align: Option<f64>,
    pub iterations: usize,
    /// Wall-clock seconds; excluded from equality checks in tests.
    pub times: PhaseTimes,
}

impl RepeatResult {
    pub fn criterion(&self) -> f64 {
        criterion_of(self.rho_prior, self.rho_align)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub dataset: String,
    pub n: usize,
    pub d: usize,
    pub classes: usize,
    pub method: Method,
    pub repeats: Vec<RepeatResult>,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, k) = v.fold((0.0, 0usize), |(s, k), x| (s + x, k + 1));
    if k == 0 {
        0.0
    } else {
        s / k as f64
    }
}

impl RunReport {
    pub fn mean_error(&self) -> f64 {
        mean(self.repeats.iter().map(|r| r.error))
    }

    /// Sample standard deviation (zero for a single repeat).
    pub fn std_error(&self) -> f64 {
        let k = self.repeats.len();
        if k < 2 {
            return 0.0;
        }
        let mu = self.mean_error();
        let ss: f64 = self.repeats.iter().map(|r| (r.error - mu).powi(2)).sum();
        (ss / (k - 1) as f64).sqrt()
    }

    pub fn mean_times(&self) -> PhaseTimes {
        PhaseTimes {
            landmarks: mean(self.repeats.iter().map(|r| r.times.landmarks)),
            core: mean(self.repeats.iter().map(|r| r.times.core)),
            fit: mean(self.repeats.iter().map(|r| r.times.fit)),
            classify: mean(self.repeats.iter().map(|r| r.times.classify)),
        }
    }
}

/// Landmarks, kernel and Nyström core for one data set.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub landmarks: LandmarkSet,
    pub kernel: KernelParams,
    pub core: NystromCore,
}

pub fn kernel_for(x: &DataMatrix, bandwidth: Bandwidth) -> Result<KernelParams> {
    match bandwidth {
        Bandwidth::Heuristic => KernelParams::rbf(bandwidth_heuristic(x)?),
        Bandwidth::Fixed(b) => KernelParams::rbf(b),
    }
}

pub fn prepare(
    x: &DataMatrix,
    m: usize,
    method: LandmarkMethod,
    bandwidth: Bandwidth,
    seed: u64,
    pinv_tol: f64,
) -> Result<Prepared> {
    let kernel = kernel_for(x, bandwidth)?;
    let landmarks = landmarks::select(x, m, method, seed)?;
    let core = build_core(x, &landmarks, &kernel, pinv_tol)?;
    Ok(Prepared {
        landmarks,
        kernel,
        core,
    })
}

#[derive(Debug, Clone)]
pub struct Learned {
    pub s: DMatrix<f64>,
    pub lambda: f64,
    pub report: SolverReport,
    pub selection: Option<SelectionReport>,
}

/// Fit S for a fixed λ or pick λ from a grid.
pub fn learn(
    core: &NystromCore,
    side: &SideInformation,
    choice: &LambdaChoice,
    cfg: &LearnConfig,
) -> Result<Learned> {
    match choice {
        LambdaChoice::Fixed(lambda) => {
            let out = fit(core, side, &cfg.with_lambda(*lambda))?;
            Ok(Learned {
                s: out.state.s,
                lambda: *lambda,
                report: out.report,
                selection: None,
            })
        }
        LambdaChoice::Grid(grid) => {
            let sel = select_lambda(core, side, grid, cfg)?;
            Ok(Learned {
                s: sel.chosen_state.s.clone(),
                lambda: sel.chosen_lambda,
                report: sel.chosen().solver.clone(),
                selection: Some(sel),
            })
        }
    }
}

/// Seed for repeat `r`, decorrelated from neighbouring repeats.
pub fn repeat_seed(seed: u64, r: usize) -> u64 {
    seed ^ (r as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

const LANDMARK_STREAM: u64 = 0xD1B5_4A32_D192_ED03;

struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Stopwatch {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

pub fn run_experiment(ds: &Dataset, cfg: &ExperimentConfig, method: Method) -> Result<RunReport> {
    cfg.validate(ds)?;
    let kernel = kernel_for(&ds.x, cfg.bandwidth)?;
    let mut repeats = Vec::with_capacity(cfg.repeats);
    for r in 0..cfg.repeats {
        let res = run_repeat(ds, cfg, method, &kernel, repeat_seed(cfg.seed, r)).map_err(|e| {
            Error::Repeat {
                index: r,
                source: Box::new(e),
            }
        })?;
        repeats.push(res);
    }
    Ok(RunReport {
        dataset: ds.name.clone(),
        n: ds.len(),
        d: ds.x.cols(),
        classes: ds.classes().len(),
        method,
        repeats,
    })
}

fn run_repeat(
    ds: &Dataset,
    cfg: &ExperimentConfig,
    method: Method,
    kernel: &KernelParams,
    seed: u64,
) -> Result<RepeatResult> {
    let mut times = PhaseTimes::default();
    let labels = sample_labeled(ds, cfg.labeled_per_run, seed)?;

    let clock = Stopwatch::start();
    let z = landmarks::select(&ds.x, cfg.landmarks_for(ds.len()), cfg.landmark_method, seed ^ LANDMARK_STREAM)?;
    times.landmarks = clock.seconds();

    let clock = Stopwatch::start();
    let core = build_core(&ds.x, &z, kernel, cfg.pinv_tol)?;
    times.core = clock.seconds();

    let clock = Stopwatch::start();
    let label_side = SideInformation::from_labels(&labels);
    let (s, lambda, iterations) = match method {
        Method::NystromBaseline => (core.s0.clone(), None, 0),
        Method::Generalized => {
            let side = if cfg.side_labels {
                label_side.clone()
            } else {
                SideInformation::from_labels(&LabelVector::empty())
            };
            let out = learn(&core, &side, &cfg.lambda, &cfg.learn)?;
            (out.s, Some(out.lambda), out.report.iterations)
        }
    };
    let l = factorize(&s)?;
    let g = &core.e * l;
    times.fit = clock.seconds();
    let (rho_prior, rho_align) = alignment_factors(&core, &label_side, &s);

    let clock = Stopwatch::start();
    let error = classify(&g, ds, &labels, &cfg.svm)?;
    times.classify = clock.seconds();

    Ok(RepeatResult {
        error,
        labeled: labels.len(),
        lambda,
        rho_prior,
        rho_align,
        iterations,
        times,
    })
}

/// Train on the labeled rows of `g`, return the error on all other rows.
pub fn classify(g: &DMatrix<f64>, ds: &Dataset, labels: &LabelVector, svm: &LinearSvmConfig) -> Result<f64> {
    let model = train_linear(&select_rows(g, labels.indices()), labels.labels(), svm)?;
    let mut is_labeled = vec![false; ds.len()];
    for &i in labels.indices() {
        is_labeled[i] = true;
    }
    let test: Vec<usize> = (0..ds.len()).filter(|&i| !is_labeled[i]).collect();
    let pred = model.predict(&select_rows(g, &test))?;
    let truth: Vec<_> = test.iter().map(|&i| ds.y[i]).collect();
    Ok(error_rate(&pred, &truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    TextTable,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" | "text_table" => Ok(ReportFormat::TextTable),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::input(format!("unknown report format '{other}'"))),
        }
    }
}

pub const CSV_HEADER: &str =
    "repeat,error,lambda,rho_prior,rho_align,criterion,iterations,labeled,time_landmarks,time_core,time_fit,time_classify";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Text: one block per report with an error row (mean±std, percent) and a
/// time row (seconds per repeat). CSV: one row per repeat.
pub fn emit_report(report: &RunReport, format: ReportFormat) -> Result<String> {
    if report.repeats.is_empty() {
        return Err(Error::input("report has no repeats"));
    }
    let mut out = String::new();
    match format {
        ReportFormat::TextTable => {
            let t = report.mean_times();
            writeln!(
                out,
                "{} ({}/{}/{})  {}  [{} repeats]",
                report.dataset,
                report.n,
                report.d,
                report.classes,
                report.method,
                report.repeats.len()
            )
            .unwrap();
            writeln!(
                out,
                "  error (%)  {:.2}±{:.2}",
                100.0 * report.mean_error(),
                100.0 * report.std_error()
            )
            .unwrap();
            writeln!(
                out,
                "  time (s)   {:.3}  (landmarks {:.3}, core {:.3}, fit {:.3}, classify {:.3})",
                t.total(),
                t.landmarks,
                t.core,
                t.fit,
                t.classify
            )
            .unwrap();
        }
        ReportFormat::Csv => {
            writeln!(out, "{CSV_HEADER}").unwrap();
            for (i, r) in report.repeats.iter().enumerate() {
                let crit = r.criterion();
                writeln!(
                    out,
                    "{i},{},{},{},{},{},{},{},{},{},{},{}",
                    r.error,
                    opt(r.lambda),
                    opt(r.rho_prior),
                    opt(r.rho_align),
                    if crit.is_finite() { crit.to_string() } else { String::new() },
                    r.iterations,
                    r.labeled,
                    r.times.landmarks,
                    r.times.core,
                    r.times.fit,
                    r.times.classify
                )
                .unwrap();
            }
        }
    }
    Ok(out)
}
