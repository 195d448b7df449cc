//! Landmark selection: uniform sampling of rows, or k-means centers.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernel::{sq_dist, DataMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LandmarkMethod {
    KMeans,
    Random,
}

impl std::str::FromStr for LandmarkMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(LandmarkMethod::KMeans),
            "random" => Ok(LandmarkMethod::Random),
            other => Err(Error::input(format!(
                "unknown landmark method '{other}' (expected kmeans or random)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LandmarkSet {
    pub points: DataMatrix,
    pub method: LandmarkMethod,
    /// Rows of the source data, for the random method.
    pub source_indices: Option<Vec<usize>>,
    pub seed: u64,
}

impl LandmarkSet {
    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KMeansInit {
    /// Distance-weighted seeding (k-means++).
    Spread,
    Uniform,
}

#[derive(Debug, Clone)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    /// Stop once no center moves more than `tol` times the data radius.
    pub tol: f64,
    pub seed: u64,
    pub init: KMeansInit,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig {
            k,
            max_iters: 100,
            tol: 1e-6,
            seed,
            init: KMeansInit::Spread,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 || self.k > n {
            return Err(Error::input(format!(
                "k-means needs 1 <= k <= n, got k = {} with n = {n}",
                self.k
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::input("k-means max_iters must be at least 1"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::input("k-means tol must be non-negative"));
        }
        Ok(())
    }
}

/// Full k-means output, including the objective after every Lloyd iteration.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub centers: DataMatrix,
    pub assignments: Vec<usize>,
    /// Sum of squared distances to the assigned center; entry 0 is the seeding.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn select_random(x: &DataMatrix, m: usize, seed: u64) -> Result<LandmarkSet> {
    let n = x.rows();
    if m == 0 || m > n {
        return Err(Error::input(format!(
            "random landmark selection needs 1 <= m <= n, got m = {m} with n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = index::sample(&mut rng, n, m).into_vec();
    Ok(LandmarkSet {
        points: x.select(&picked)?,
        method: LandmarkMethod::Random,
        source_indices: Some(picked),
        seed,
    })
}

pub fn select_kmeans(x: &DataMatrix, cfg: &KMeansConfig) -> Result<LandmarkSet> {
    let fit = kmeans(x, cfg)?;
    Ok(LandmarkSet {
        points: fit.centers,
        method: LandmarkMethod::KMeans,
        source_indices: None,
        seed: cfg.seed,
    })
}

pub fn select(x: &DataMatrix, m: usize, method: LandmarkMethod, seed: u64) -> Result<LandmarkSet> {
    match method {
        LandmarkMethod::Random => select_random(x, m, seed),
        LandmarkMethod::KMeans => select_kmeans(x, &KMeansConfig::new(m, seed)),
    }
}

/// Lloyd's algorithm.
///
/// Empty clusters are re-seeded with the point farthest from its current
/// center, so every center stays a finite point.
pub fn kmeans(x: &DataMatrix, cfg: &KMeansConfig) -> Result<KMeansFit> {
    let n = x.rows();
    let d = x.cols();
    cfg.validate(n)?;
    let k = cfg.k;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut centers: Vec<Vec<f64>> = match cfg.init {
        KMeansInit::Uniform => index::sample(&mut rng, n, k)
            .into_iter()
            .map(|i| x.row(i).to_vec())
            .collect(),
        KMeansInit::Spread => spread_seeds(x, k, &mut rng),
    };

    let radius = data_radius(x);
    let scale = if radius > 0.0 { radius } else { 1.0 };

    let mut assignments = vec![0usize; n];
    let mut dists = vec![0.0f64; n];
    let inertia = assign(x, &centers, &mut assignments, &mut dists);
    let mut inertia_trace = vec![inertia];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iters {
        iterations += 1;

        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (i, &c) in assignments.iter().enumerate() {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(x.row(i)) {
                *s += v;
            }
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let new: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            shift = shift.max(sq_dist(&new, &centers[c]).sqrt());
            centers[c] = new;
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = farthest_point(&dists);
            shift = shift.max(sq_dist(x.row(far), &centers[c]).sqrt());
            centers[c] = x.row(far).to_vec();
            // The donor point now sits on a center.
            dists[far] = 0.0;
        }

        let inertia = assign(x, &centers, &mut assignments, &mut dists);
        inertia_trace.push(inertia);
        if shift <= cfg.tol * scale {
            converged = true;
            break;
        }
    }

    let flat: Vec<f64> = centers.into_iter().flatten().collect();
    Ok(KMeansFit {
        centers: DataMatrix::new(k, d, flat)?,
        assignments,
        inertia_trace,
        iterations,
        converged,
    })
}

fn spread_seeds(x: &DataMatrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = x.rows();
    let mut centers = Vec::with_capacity(k);
    centers.push(x.row(rng.random_range(0..n)).to_vec());
    let mut nearest: Vec<f64> = x.iter_rows().map(|r| sq_dist(r, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in nearest.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc >= target {
                    chosen = Some(i);
                    break;
                }
            }
            chosen.unwrap_or_else(|| farthest_point(&nearest))
        } else {
            // Fewer distinct points than k; duplicates get repaired by Lloyd.
            rng.random_range(0..n)
        };
        let c = x.row(pick).to_vec();
        for (i, r) in x.iter_rows().enumerate() {
            nearest[i] = nearest[i].min(sq_dist(r, &c));
        }
        centers.push(c);
    }
    centers
}

fn assign(x: &DataMatrix, centers: &[Vec<f64>], out: &mut [usize], dists: &mut [f64]) -> f64 {
    let mut total = 0.0;
    for (i, r) in x.iter_rows().enumerate() {
        let mut best = (0usize, f64::INFINITY);
        for (c, center) in centers.iter().enumerate() {
            let dd = sq_dist(r, center);
            if dd < best.1 {
                best = (c, dd);
            }
        }
        out[i] = best.0;
        dists[i] = best.1;
        total += best.1;
    }
    total
}

fn farthest_point(dists: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in dists.iter().enumerate() {
        if v > dists[best] {
            best = i;
        }
    }
    best
}

fn data_radius(x: &DataMatrix) -> f64 {
    let n = x.rows() as f64;
    let mut mean = vec![0.0; x.cols()];
    for r in x.iter_rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n;
        }
    }
    x.iter_rows()
        .map(|r| sq_dist(r, &mean))
        .fold(0.0, f64::max)
        .sqrt()
}
