//! Deployable model: landmarks, kernel, learned dictionary S and its factor L.
//!
//! New samples are embedded through their kernel row against the landmarks,
//! g(x) = k(x, Z)·L, so the learned similarity of any two samples is
//! g(x)·g(y)ᵀ = k(x, Z) S k(y, Z)ᵀ.
//!
//! # File format
//!
//! All integers and floats are little-endian; matrices are row-major `f64`.
//!
//! | offset | size      | field                                  |
//! |--------|-----------|----------------------------------------|
//! | 0      | 8         | magic `b"GNYSMODL"`                    |
//! | 8      | 4         | format version (`u32`, currently 1)    |
//! | 12     | 4         | kernel family (`u32`, 0 = RBF)         |
//! | 16     | 8         | m, landmark count (`u64`)              |
//! | 24     | 8         | d, feature dimension (`u64`)           |
//! | 32     | 8         | r, factor rank (`u64`)                 |
//! | 40     | 8         | kernel bandwidth (`f64`)               |
//! | 48     | 8·m·d     | landmarks Z                            |
//! |        | 8·m·m     | dictionary S                           |
//! |        | 8·m·r     | factor L                               |
//! |        | 8         | metadata length in bytes (`u64`)       |
//! |        | len       | metadata, UTF-8 `key = value` lines    |
//!
//! Nothing may follow the metadata block.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel::{kernel_matrix, kernel_row, DataMatrix, KernelFamily, KernelParams};
use crate::linalg::{eig_extremes, frob_norm};
use crate::prior::factorize;

pub const MAGIC: &[u8; 8] = b"GNYSMODL";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelMetadata {
    pub lambda: Option<f64>,
    pub solver_summary: String,
    /// Seconds since the Unix epoch.
    pub created_unix: u64,
}

impl ModelMetadata {
    fn to_text(&self) -> String {
        let mut out = String::new();
        match self.lambda {
            Some(l) => writeln!(out, "lambda = {l:e}").unwrap(),
            None => writeln!(out, "lambda = none").unwrap(),
        }
        writeln!(out, "solver = {}", self.solver_summary.replace('\n', " ")).unwrap();
        writeln!(out, "created_unix = {}", self.created_unix).unwrap();
        out
    }

    fn from_text(text: &str) -> Result<Self> {
        let mut meta = ModelMetadata::default();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Deserialize(format!("bad metadata line '{line}'")))?;
            let value = value.trim();
            match key.trim() {
                "lambda" if value == "none" => meta.lambda = None,
                "lambda" => {
                    meta.lambda = Some(value.parse().map_err(|_| {
                        Error::Deserialize(format!("bad lambda '{value}' in metadata"))
                    })?)
                }
                "solver" => meta.solver_summary = value.to_string(),
                "created_unix" => {
                    meta.created_unix = value.parse().map_err(|_| {
                        Error::Deserialize(format!("bad timestamp '{value}' in metadata"))
                    })?
                }
                _ => {}
            }
        }
        Ok(meta)
    }
}

/// Current time in seconds since the Unix epoch (0 where no clock exists).
pub fn unix_now() -> u64 {
    #[cfg(not(target_arch = "wasm32"))]
    {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    }
    #[cfg(target_arch = "wasm32")]
    {
        0
    }
}

/// Immutable after construction; `embed` and `similarity` are pure.
#[derive(Debug, Clone, PartialEq)]
pub struct InductiveModel {
    landmarks: DataMatrix,
    kernel: KernelParams,
    s: DMatrix<f64>,
    l: DMatrix<f64>,
    metadata: ModelMetadata,
}

impl InductiveModel {
    /// Build a model from a PSD dictionary, factorizing it.
    pub fn new(
        landmarks: DataMatrix,
        kernel: KernelParams,
        s: DMatrix<f64>,
        metadata: ModelMetadata,
    ) -> Result<Self> {
        let l = factorize(&s)?;
        InductiveModel::from_parts(landmarks, kernel, s, l, metadata)
    }

    /// Assemble a model from a precomputed factor, checking every invariant.
    pub fn from_parts(
        landmarks: DataMatrix,
        kernel: KernelParams,
        s: DMatrix<f64>,
        l: DMatrix<f64>,
        metadata: ModelMetadata,
    ) -> Result<Self> {
        let m = landmarks.rows();
        if s.shape() != (m, m) {
            return Err(Error::Invariant(format!(
                "dictionary is {}x{} for {m} landmarks",
                s.nrows(),
                s.ncols()
            )));
        }
        if l.nrows() != m || l.ncols() > m {
            return Err(Error::Invariant(format!(
                "factor is {}x{} for {m} landmarks",
                l.nrows(),
                l.ncols()
            )));
        }
        if s.iter().chain(l.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Invariant("dictionary or factor has non-finite entries".into()));
        }
        let s_norm = frob_norm(&s);
        if frob_norm(&(&s - s.transpose())) > 1e-10 * s_norm {
            return Err(Error::Invariant("dictionary is not symmetric".into()));
        }
        let (lo, hi) = eig_extremes(&s)?;
        if lo < -1e-8 * hi.max(0.0) {
            return Err(Error::Invariant(format!(
                "dictionary is not PSD (min eigenvalue {lo:e}, max {hi:e})"
            )));
        }
        if frob_norm(&(&l * l.transpose() - &s)) > 1e-8 * s_norm {
            return Err(Error::Invariant("factor does not reproduce the dictionary".into()));
        }
        Ok(InductiveModel {
            landmarks,
            kernel,
            s,
            l,
            metadata,
        })
    }

    pub fn landmarks(&self) -> &DataMatrix {
        &self.landmarks
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    pub fn dictionary(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn metadata(&self) -> &ModelMetadata {
        &self.metadata
    }

    pub fn rank(&self) -> usize {
        self.l.ncols()
    }

    /// Low-rank features G = k(X, Z)·L, one row per sample.
    pub fn embed(&self, x: &DataMatrix) -> Result<DMatrix<f64>> {
        if x.cols() != self.landmarks.cols() {
            return Err(Error::input(format!(
                "samples have {} features, model expects {}",
                x.cols(),
                self.landmarks.cols()
            )));
        }
        Ok(kernel_matrix(x, &self.landmarks, &self.kernel)? * &self.l)
    }

    /// Learned similarity g(x)·g(y)ᵀ. Exactly symmetric, non-negative on the diagonal.
    pub fn similarity(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let gx = kernel_row(x, &self.landmarks, &self.kernel)? * &self.l;
        let gy = kernel_row(y, &self.landmarks, &self.kernel)? * &self.l;
        Ok(gx.iter().zip(gy.iter()).map(|(a, b)| a * b).sum())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let (m, d, r) = (self.landmarks.rows(), self.landmarks.cols(), self.l.ncols());
        let meta = self.metadata.to_text();
        let mut buf = Vec::with_capacity(56 + 8 * (m * d + m * m + m * r) + meta.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        let family: u32 = match self.kernel.family() {
            KernelFamily::Rbf => 0,
        };
        buf.extend_from_slice(&family.to_le_bytes());
        for v in [m, d, r] {
            buf.extend_from_slice(&(v as u64).to_le_bytes());
        }
        buf.extend_from_slice(&self.kernel.bandwidth().to_le_bytes());
        for v in self.landmarks.as_slice() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for mat in [&self.s, &self.l] {
            for i in 0..mat.nrows() {
                for j in 0..mat.ncols() {
                    buf.extend_from_slice(&mat[(i, j)].to_le_bytes());
                }
            }
        }
        buf.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        buf.extend_from_slice(meta.as_bytes());
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rd = Reader { bytes, pos: 0 };
        if rd.take(8)? != MAGIC {
            return Err(Error::Deserialize("not a model file (bad magic)".into()));
        }
        let version = rd.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Deserialize(format!(
                "unsupported model format version {version}"
            )));
        }
        let family = rd.u32()?;
        if family != 0 {
            return Err(Error::Deserialize(format!("unknown kernel family {family}")));
        }
        let m = rd.dim()?;
        let d = rd.dim()?;
        let r = rd.dim()?;
        let bandwidth = rd.f64()?;
        let kernel = KernelParams::rbf(bandwidth)
            .map_err(|_| Error::Invariant(format!("bad kernel bandwidth {bandwidth}")))?;
        let z = rd.f64s(m, d)?;
        let landmarks = DataMatrix::new(m, d, z)
            .map_err(|e| Error::Invariant(format!("landmarks: {e}")))?;
        let s = DMatrix::from_row_slice(m, m, &rd.f64s(m, m)?);
        let l = DMatrix::from_row_slice(m, r, &rd.f64s(m, r)?);
        let meta_len = rd.dim()?;
        let meta = std::str::from_utf8(rd.take(meta_len)?)
            .map_err(|_| Error::Deserialize("metadata is not UTF-8".into()))?;
        let metadata = ModelMetadata::from_text(meta)?;
        if rd.pos != bytes.len() {
            return Err(Error::Deserialize(format!(
                "{} trailing bytes after metadata",
                bytes.len() - rd.pos
            )));
        }
        InductiveModel::from_parts(landmarks, kernel, s, l, metadata)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        InductiveModel::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::Deserialize(format!(
                    "file truncated: needed {n} bytes at offset {}, {} available",
                    self.pos,
                    self.bytes.len() - self.pos
                ))
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn dim(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| Error::Deserialize(format!("dimension {v} too large")))
    }

    fn f64s(&mut self, rows: usize, cols: usize) -> Result<Vec<f64>> {
        let count = rows
            .checked_mul(cols)
            .and_then(|c| c.checked_mul(8))
            .ok_or_else(|| Error::Deserialize("matrix size overflows".into()))?;
        Ok(self
            .take(count)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landmarks::{LandmarkMethod, LandmarkSet};
    use crate::nystrom::{build_core, DEFAULT_PINV_TOL};
    use approx::assert_abs_diff_eq;

    fn model() -> (InductiveModel, DMatrix<f64>) {
        let z = DataMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.2], [0.3, 1.4]]).unwrap();
        let p = KernelParams::rbf(0.8).unwrap();
        let set = LandmarkSet {
            points: z.clone(),
            method: LandmarkMethod::Random,
            source_indices: None,
            seed: 0,
        };
        let core = build_core(&z, &set, &p, DEFAULT_PINV_TOL).unwrap();
        let meta = ModelMetadata {
            lambda: Some(0.5),
            solver_summary: "test".into(),
            created_unix: 1234,
        };
        (InductiveModel::new(z, p, core.s0.clone(), meta).unwrap(), core.w)
    }

    #[test]
    fn dictionary_reproduced_on_landmarks() {
        let (m, w) = model();
        let g = m.embed(m.landmarks()).unwrap();
        assert_abs_diff_eq!(&g * g.transpose(), w, epsilon = 1e-6);
        for p in 0..3 {
            for q in 0..3 {
                let s = m.similarity(m.landmarks().row(p), m.landmarks().row(q)).unwrap();
                assert_abs_diff_eq!(s, w[(p, q)], epsilon = 1e-8);
            }
        }
        let single = m.landmarks().select(&[1]).unwrap();
        let g = m.embed(&single).unwrap();
        assert_abs_diff_eq!(g.row(0).dot(&g.row(0)), w[(1, 1)], epsilon = 1e-8);
    }

    #[test]
    fn similarity_symmetric_and_dimension_checked() {
        let (m, _) = model();
        let (x, y) = ([0.7, -0.3], [2.0, 1.1]);
        assert_eq!(m.similarity(&x, &y).unwrap(), m.similarity(&y, &x).unwrap());
        assert!(m.similarity(&x, &x).unwrap() >= 0.0);
        assert!(m.similarity(&x, &[1.0]).is_err());
        assert!(m.embed(&DataMatrix::from_rows(&[[1.0]]).unwrap()).is_err());
    }

    #[test]
    fn bytes_round_trip() {
        let (m, _) = model();
        let back = InductiveModel::from_bytes(&m.to_bytes()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.metadata().created_unix, 1234);
    }

    #[test]
    fn truncated_and_garbage_files_fail_cleanly() {
        let (m, _) = model();
        let bytes = m.to_bytes();
        for cut in [0, 4, 8, 20, 47, 100, bytes.len() - 1] {
            assert!(matches!(InductiveModel::from_bytes(&bytes[..cut]), Err(Error::Deserialize(_))));
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(InductiveModel::from_bytes(&extra), Err(Error::Deserialize(_))));
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(InductiveModel::from_bytes(&bad_magic).is_err());
        let mut huge = bytes;
        huge[16..24].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(InductiveModel::from_bytes(&huge), Err(Error::Deserialize(_))));
    }

    #[test]
    fn rejects_non_psd_dictionary() {
        let z = DataMatrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let p = KernelParams::rbf(1.0).unwrap();
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let l = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let err = InductiveModel::from_parts(z, p, s, l, ModelMetadata::default()).unwrap_err();
        assert!(matches!(err, Error::Invariant(_)));
    }
}
