//! Browser demo: three operations over a small 2-D data set, each taking a
//! JSON settings object and returning a JSON result for the page to draw.
//!
//! The computations live in plain functions so they can be tested natively;
//! the `#[wasm_bindgen]` wrappers only translate errors.

use gnystrom::harness::{
    classify, gaussian_blobs, prepare, sample_labeled, train_linear, two_moons, xor, Bandwidth,
    BlobSpec, Dataset, LinearSvmConfig,
};
use gnystrom::{
    alignment_factors, fit, DataMatrix, InductiveModel, LabelVector, LambdaGrid, LandmarkMethod,
    LearnConfig, ModelMetadata, SideInformation, DEFAULT_PINV_TOL,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct Settings {
    /// `moons`, `xor` or `blobs`.
    pub dataset: String,
    pub n: usize,
    pub noise: f64,
    pub seed: u64,
    pub m: usize,
    pub labeled: usize,
    pub lambda: f64,
    /// Cells per side of the rendered grid.
    pub resolution: usize,
    pub svm_c: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            dataset: "moons".into(),
            n: 300,
            noise: 0.15,
            seed: 1,
            m: 20,
            labeled: 10,
            lambda: 1.0,
            resolution: 48,
            svm_c: 10.0,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub resolution: usize,
}

#[derive(Debug, Serialize)]
pub struct Scene {
    /// `[x, y, class]` per sample.
    pub points: Vec<[f64; 3]>,
    pub labeled: Vec<usize>,
    pub landmarks: Vec<[f64; 2]>,
    pub bounds: Bounds,
}

#[derive(Debug, Serialize)]
pub struct Regions {
    /// Held-out error in [0, 1].
    pub error: f64,
    /// Predicted class per grid cell, row-major from the top-left corner.
    pub cells: Vec<i64>,
}

#[derive(Debug, Serialize)]
pub struct DecisionMap {
    pub scene: Scene,
    pub lambda: f64,
    pub iterations: usize,
    pub baseline: Regions,
    pub generalized: Regions,
}

#[derive(Debug, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub rho_prior: Option<f64>,
    pub rho_align: Option<f64>,
    /// `None` where a factor is undefined.
    pub criterion: Option<f64>,
    pub error: f64,
    pub iterations: usize,
}

#[derive(Debug, Serialize)]
pub struct Sweep {
    pub points: Vec<SweepPoint>,
    /// Candidate with the highest criterion.
    pub chosen: f64,
    pub baseline_error: f64,
}

#[derive(Debug, Serialize)]
pub struct SimilarityMap {
    pub scene: Scene,
    pub query: [f64; 2],
    /// Similarity to the query per grid cell, row-major from the top-left.
    pub baseline: Vec<f64>,
    pub generalized: Vec<f64>,
}

struct Setup {
    ds: Dataset,
    labels: LabelVector,
    baseline: InductiveModel,
    generalized: InductiveModel,
    iterations: usize,
    svm: LinearSvmConfig,
}

fn generate(s: &Settings) -> gnystrom::Result<Dataset> {
    if s.n > 5000 || !(2..=200).contains(&s.resolution) {
        return Err(gnystrom::Error::Input("demo limits: n <= 5000, 2 <= resolution <= 200".into()));
    }
    match s.dataset.as_str() {
        "moons" => two_moons(s.n, s.noise, s.seed),
        "xor" => xor(s.n, s.noise, s.seed),
        "blobs" => gaussian_blobs(&BlobSpec {
            n: s.n,
            d: 2,
            classes: 2,
            separation: 2.0,
            noise: s.noise.max(1e-3) * 4.0,
            seed: s.seed,
        }),
        other => Err(gnystrom::Error::Input(format!("unknown data set '{other}'"))),
    }
}

fn setup(s: &Settings, lambda: f64) -> gnystrom::Result<Setup> {
    let ds = generate(s)?;
    let labels = sample_labeled(&ds, s.labeled, s.seed)?;
    let prep = prepare(&ds.x, s.m, LandmarkMethod::KMeans, Bandwidth::Heuristic, s.seed, DEFAULT_PINV_TOL)?;
    let side = SideInformation::from_labels(&labels);
    let out = fit(&prep.core, &side, &LearnConfig::new(lambda))?;
    let meta = ModelMetadata {
        lambda: Some(lambda),
        ..ModelMetadata::default()
    };
    let baseline = InductiveModel::new(
        prep.landmarks.points.clone(),
        prep.kernel,
        prep.core.s0.clone(),
        ModelMetadata::default(),
    )?;
    let generalized = InductiveModel::new(prep.landmarks.points, prep.kernel, out.state.s, meta)?;
    Ok(Setup {
        ds,
        labels,
        baseline,
        generalized,
        iterations: out.report.iterations,
        svm: LinearSvmConfig {
            c: s.svm_c,
            ..LinearSvmConfig::default()
        },
    })
}

fn scene(setup: &Setup, resolution: usize) -> Scene {
    let x = &setup.ds.x;
    let (mut x_min, mut x_max, mut y_min, mut y_max) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for r in x.iter_rows() {
        x_min = x_min.min(r[0]);
        x_max = x_max.max(r[0]);
        y_min = y_min.min(r[1]);
        y_max = y_max.max(r[1]);
    }
    let pad_x = 0.1 * (x_max - x_min).max(1e-6);
    let pad_y = 0.1 * (y_max - y_min).max(1e-6);
    Scene {
        points: x
            .iter_rows()
            .zip(&setup.ds.y)
            .map(|(r, &c)| [r[0], r[1], c as f64])
            .collect(),
        labeled: setup.labels.indices().to_vec(),
        landmarks: setup.baseline.landmarks().iter_rows().map(|r| [r[0], r[1]]).collect(),
        bounds: Bounds {
            x_min: x_min - pad_x,
            x_max: x_max + pad_x,
            y_min: y_min - pad_y,
            y_max: y_max + pad_y,
            resolution,
        },
    }
}

/// Cell centres, row-major from the top-left corner.
fn grid_points(b: &Bounds) -> gnystrom::Result<DataMatrix> {
    let r = b.resolution;
    let mut values = Vec::with_capacity(2 * r * r);
    for i in 0..r {
        let y = b.y_max - (i as f64 + 0.5) / r as f64 * (b.y_max - b.y_min);
        for j in 0..r {
            let x = b.x_min + (j as f64 + 0.5) / r as f64 * (b.x_max - b.x_min);
            values.extend([x, y]);
        }
    }
    DataMatrix::new(r * r, 2, values)
}

fn check_2d(ds: &Dataset) -> gnystrom::Result<()> {
    if ds.x.cols() != 2 {
        return Err(gnystrom::Error::Input("the demo draws 2-D data only".into()));
    }
    Ok(())
}

fn regions(setup: &Setup, model: &InductiveModel, grid: &DataMatrix) -> gnystrom::Result<Regions> {
    let g = model.embed(&setup.ds.x)?;
    let error = classify(&g, &setup.ds, &setup.labels, &setup.svm)?;
    let rows: Vec<usize> = setup.labels.indices().to_vec();
    let g_lab = DMatrix::from_fn(rows.len(), g.ncols(), |i, j| g[(rows[i], j)]);
    let clf = train_linear(&g_lab, setup.labels.labels(), &setup.svm)?;
    let cells = clf.predict(&model.embed(grid)?)?;
    Ok(Regions { error, cells })
}

/// Decision regions of a linear classifier on the baseline and learned features.
pub fn decision_map(s: &Settings) -> gnystrom::Result<DecisionMap> {
    let setup = setup(s, s.lambda)?;
    check_2d(&setup.ds)?;
    let scene = scene(&setup, s.resolution);
    let grid = grid_points(&scene.bounds)?;
    Ok(DecisionMap {
        baseline: regions(&setup, &setup.baseline, &grid)?,
        generalized: regions(&setup, &setup.generalized, &grid)?,
        lambda: s.lambda,
        iterations: setup.iterations,
        scene,
    })
}

/// Selection criterion and held-out error for each λ on a log grid.
pub fn lambda_sweep(s: &Settings) -> gnystrom::Result<Sweep> {
    let ds = generate(s)?;
    let labels = sample_labeled(&ds, s.labeled, s.seed)?;
    let prep = prepare(&ds.x, s.m, LandmarkMethod::KMeans, Bandwidth::Heuristic, s.seed, DEFAULT_PINV_TOL)?;
    let side = SideInformation::from_labels(&labels);
    let svm = LinearSvmConfig {
        c: s.svm_c,
        ..LinearSvmConfig::default()
    };
    let features = |m: &DMatrix<f64>| -> gnystrom::Result<f64> {
        let g = &prep.core.e * gnystrom::factorize(m)?;
        classify(&g, &ds, &labels, &svm)
    };
    let baseline_error = features(&prep.core.s0)?;
    let mut points = Vec::new();
    for &lambda in LambdaGrid::default_log().candidates() {
        let out = fit(&prep.core, &side, &LearnConfig::new(lambda))?;
        let (rho_prior, rho_align) = alignment_factors(&prep.core, &side, &out.state.s);
        points.push(SweepPoint {
            lambda,
            rho_prior,
            rho_align,
            criterion: rho_prior.zip(rho_align).map(|(a, b)| a * b),
            error: features(&out.state.s)?,
            iterations: out.report.iterations,
        });
    }
    let mut chosen = points[0].lambda;
    let mut best = f64::NEG_INFINITY;
    for p in &points {
        let c = p.criterion.unwrap_or(f64::NEG_INFINITY);
        if c > best {
            best = c;
            chosen = p.lambda;
        }
    }
    Ok(Sweep {
        points,
        chosen,
        baseline_error,
    })
}

/// Similarity of every grid cell to a query point under both dictionaries.
pub fn similarity_map(s: &Settings, qx: f64, qy: f64) -> gnystrom::Result<SimilarityMap> {
    let setup = setup(s, s.lambda)?;
    check_2d(&setup.ds)?;
    let scene = scene(&setup, s.resolution);
    let grid = grid_points(&scene.bounds)?;
    let query = DataMatrix::new(1, 2, vec![qx, qy])?;
    let profile = |model: &InductiveModel| -> gnystrom::Result<Vec<f64>> {
        let g = model.embed(&grid)?;
        let q = model.embed(&query)?;
        Ok((&g * q.transpose()).iter().copied().collect())
    };
    Ok(SimilarityMap {
        baseline: profile(&setup.baseline)?,
        generalized: profile(&setup.generalized)?,
        query: [qx, qy],
        scene,
    })
}

fn run<T: Serialize>(settings: &str, f: impl FnOnce(&Settings) -> gnystrom::Result<T>) -> Result<String, String> {
    let s: Settings = if settings.trim().is_empty() {
        Settings::default()
    } else {
        serde_json::from_str(settings).map_err(|e| format!("bad settings: {e}"))?
    };
    let out = f(&s).map_err(|e| e.to_string())?;
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = decisionMap)]
pub fn decision_map_js(settings: &str) -> Result<String, JsValue> {
    run(settings, decision_map).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = lambdaSweep)]
pub fn lambda_sweep_js(settings: &str) -> Result<String, JsValue> {
    run(settings, lambda_sweep).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = similarityMap)]
pub fn similarity_map_js(settings: &str, x: f64, y: f64) -> Result<String, JsValue> {
    run(settings, |s| similarity_map(s, x, y)).map_err(|e| JsValue::from_str(&e))
}
