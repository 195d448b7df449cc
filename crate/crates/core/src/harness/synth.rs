//! Synthetic classification data for desk-scale experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernel::DataMatrix;

/// Isotropic Gaussian classes. Class c has mean `separation·e_c` in its first
/// `classes` coordinates; every coordinate gets N(0, noise²) noise. Samples
/// are assigned to classes round-robin.
#[derive(Debug, Clone)]
pub struct BlobSpec {
    pub n: usize,
    pub d: usize,
    pub classes: usize,
    pub separation: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        BlobSpec {
            n: 600,
            d: 10,
            classes: 2,
            separation: 1.0,
            noise: 1.0,
            seed: 7,
        }
    }
}

pub fn gaussian_blobs(spec: &BlobSpec) -> Result<Dataset> {
    if spec.classes < 2 || spec.classes > spec.d || spec.n < spec.classes {
        return Err(Error::input(
            "blobs need 2 <= classes <= d and at least one sample per class",
        ));
    }
    let noise = Normal::new(0.0, spec.noise)
        .map_err(|e| Error::input(format!("bad noise level: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut values = Vec::with_capacity(spec.n * spec.d);
    let mut y = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let c = i % spec.classes;
        for j in 0..spec.d {
            let mean = if j == c { spec.separation } else { 0.0 };
            values.push(mean + noise.sample(&mut rng));
        }
        y.push(c as i64);
    }
    Dataset::new(DataMatrix::new(spec.n, spec.d, values)?, y, "blobs")
}

/// Two interleaved half circles in the plane with Gaussian noise.
pub fn two_moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::input("two moons need at least two samples"));
    }
    let jitter = Normal::new(0.0, noise).map_err(|e| Error::input(format!("bad noise: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % 2;
        let t: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let (px, py) = if c == 0 {
            (t.cos(), t.sin())
        } else {
            (1.0 - t.cos(), 0.5 - t.sin())
        };
        values.push(px + jitter.sample(&mut rng));
        values.push(py + jitter.sample(&mut rng));
        y.push(c as i64);
    }
    Dataset::new(DataMatrix::new(n, 2, values)?, y, "moons")
}

/// The 2-D XOR pattern: four Gaussian clusters at (±1, ±1), class = sign(x·y).
pub fn xor(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    let jitter = Normal::new(0.0, noise).map_err(|e| Error::input(format!("bad noise: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corners = [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)];
    let mut values = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let (cx, cy) = corners[i % 4];
        values.push(cx + jitter.sample(&mut rng));
        values.push(cy + jitter.sample(&mut rng));
        y.push(if i % 4 < 2 { 0 } else { 1 });
    }
    Dataset::new(DataMatrix::new(n, 2, values)?, y, "xor")
}

/// A synthetic data source described in a config file.
#[derive(Debug, Clone)]
pub enum Generator {
    Blobs(BlobSpec),
    Moons { n: usize, noise: f64, seed: u64 },
    Xor { n: usize, noise: f64, seed: u64 },
}

impl Generator {
    pub fn generate(&self) -> Result<Dataset> {
        match self {
            Generator::Blobs(spec) => gaussian_blobs(spec),
            Generator::Moons { n, noise, seed } => two_moons(*n, *noise, *seed),
            Generator::Xor { n, noise, seed } => xor(*n, *noise, *seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_shape_and_determinism() {
        let spec = BlobSpec::default();
        let a = gaussian_blobs(&spec).unwrap();
        let b = gaussian_blobs(&spec).unwrap();
        assert_eq!((a.x.rows(), a.x.cols()), (600, 10));
        assert_eq!(a.classes(), vec![0, 1]);
        assert_eq!(a.x, b.x);
        assert!(gaussian_blobs(&BlobSpec { classes: 1, ..spec }).is_err());
    }

    #[test]
    fn moons_and_xor() {
        let m = two_moons(100, 0.1, 1).unwrap();
        assert_eq!(m.x.cols(), 2);
        assert_eq!(m.classes(), vec![0, 1]);
        let x = xor(40, 0.1, 1).unwrap();
        for (r, &c) in x.x.iter_rows().zip(&x.y) {
            assert_eq!(c == 1, r[0] * r[1] < 0.0);
        }
    }
}
