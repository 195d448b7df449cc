//! Kernel functions and the matrices built from them.
//!
//! The only family is the Gaussian (RBF) kernel `exp(-‖x - y‖² / b)`, with
//! the bandwidth `b` expressed in squared-distance units. This module also
//! holds the ideal (same-class) kernel and the normalized kernel alignment
//! score used for model selection.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{frob_inner, frob_norm};

/// Class identifier as read from a data file.
pub type ClassId = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    family: KernelFamily,
    bandwidth: f64,
}

impl KernelParams {
    pub fn rbf(bandwidth: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::input(format!(
                "kernel bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        Ok(KernelParams {
            family: KernelFamily::Rbf,
            bandwidth,
        })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Largest value the kernel can take.
    pub fn max_value(&self) -> f64 {
        match self.family {
            KernelFamily::Rbf => 1.0,
        }
    }

    #[inline]
    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.family {
            KernelFamily::Rbf => (-sq_dist(x, y) / self.bandwidth).exp(),
        }
    }
}

/// Dense n×d sample matrix stored row-major. All values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::input(format!(
                "data matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::input(format!(
                "expected {} values for a {rows}x{cols} matrix, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite value at row {}, column {}",
                pos / cols,
                pos % cols
            )));
        }
        Ok(DataMatrix { rows, cols, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::input(format!(
                    "row {i} has {} features, expected {cols}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        DataMatrix::new(rows.len(), cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.cols)
    }

    /// Row-major values.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// New matrix made of the given rows, in order.
    pub fn select(&self, indices: &[usize]) -> Result<DataMatrix> {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::input(format!(
                    "row index {i} out of range for {} rows",
                    self.rows
                )));
            }
            values.extend_from_slice(self.row(i));
        }
        DataMatrix::new(indices.len(), self.cols, values)
    }
}

/// Labeled subset of a sample set: `labels[k]` is the class of sample `indices[k]`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelVector {
    indices: Vec<usize>,
    labels: Vec<ClassId>,
}

impl LabelVector {
    pub fn new(indices: Vec<usize>, labels: Vec<ClassId>) -> Result<Self> {
        if indices.len() != labels.len() {
            return Err(Error::input(format!(
                "{} indices but {} labels",
                indices.len(),
                labels.len()
            )));
        }
        let mut seen = indices.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::input("labeled indices must be distinct"));
        }
        Ok(LabelVector { indices, labels })
    }

    pub fn empty() -> Self {
        LabelVector::default()
    }

    /// Check that every index is below `n`.
    pub fn check_bounds(&self, n: usize) -> Result<()> {
        match self.indices.iter().find(|&&i| i >= n) {
            Some(i) => Err(Error::input(format!(
                "labeled index {i} out of range for {n} samples"
            ))),
            None => Ok(()),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// 0/1 same-class matrix over a labeled subset.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealKernel(DMatrix<f64>);

impl IdealKernel {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

#[inline]
pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn rbf_kernel(x: &[f64], y: &[f64], p: &KernelParams) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::input(format!(
            "kernel arguments have dimensions {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok(p.eval_unchecked(x, y))
}

/// Entry (i, j) is k(a_i, b_j).
pub fn kernel_matrix(a: &DataMatrix, b: &DataMatrix, p: &KernelParams) -> Result<DMatrix<f64>> {
    if a.cols() != b.cols() {
        return Err(Error::input(format!(
            "kernel matrix operands have {} and {} features",
            a.cols(),
            b.cols()
        )));
    }
    Ok(DMatrix::from_fn(a.rows(), b.rows(), |i, j| {
        p.eval_unchecked(a.row(i), b.row(j))
    }))
}

/// Kernel values of one point against every row of `b`, as a 1×n_b row.
pub fn kernel_row(x: &[f64], b: &DataMatrix, p: &KernelParams) -> Result<DMatrix<f64>> {
    if x.len() != b.cols() {
        return Err(Error::input(format!(
            "point has {} features, landmarks have {}",
            x.len(),
            b.cols()
        )));
    }
    Ok(DMatrix::from_fn(1, b.rows(), |_, j| p.eval_unchecked(x, b.row(j))))
}

/// Mean of ‖x_i − x_j‖² over unordered pairs i < j.
///
/// Uses the identity Σ_{i<j} ‖x_i − x_j‖² = n·Σ_i ‖x_i − x̄‖², so the cost is O(nd)
/// and the result is exact up to rounding.
pub fn bandwidth_heuristic(x: &DataMatrix) -> Result<f64> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::input("bandwidth heuristic needs at least two samples"));
    }
    let first = x.row(0);
    if x.iter_rows().all(|r| r == first) {
        return Err(Error::DegenerateBandwidth);
    }
    let d = x.cols();
    let mut mean = vec![0.0; d];
    for r in x.iter_rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let scatter: f64 = x.iter_rows().map(|r| sq_dist(r, &mean)).sum();
    let avg = 2.0 * scatter / (n as f64 - 1.0);
    if !(avg > 0.0) || !avg.is_finite() {
        return Err(Error::DegenerateBandwidth);
    }
    Ok(avg)
}

pub fn ideal_kernel(labels: &LabelVector) -> Result<IdealKernel> {
    if labels.is_empty() {
        return Err(Error::input("ideal kernel needs at least one label"));
    }
    Ok(ideal_kernel_of(labels.labels()))
}

pub(crate) fn ideal_kernel_of(labels: &[ClassId]) -> IdealKernel {
    let l = labels.len();
    IdealKernel(DMatrix::from_fn(l, l, |i, j| {
        if labels[i] == labels[j] {
            1.0
        } else {
            0.0
        }
    }))
}

/// H K H with H = I − (1/q)·11ᵀ.
pub fn double_center(k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !k.is_square() {
        return Err(Error::input(format!(
            "double-centering needs a square matrix, got {}x{}",
            k.nrows(),
            k.ncols()
        )));
    }
    let q = k.nrows();
    if q == 0 {
        return Ok(k.clone());
    }
    let qf = q as f64;
    let row_means: Vec<f64> = (0..q).map(|i| k.row(i).sum() / qf).collect();
    let col_means: Vec<f64> = (0..q).map(|j| k.column(j).sum() / qf).collect();
    let grand = row_means.iter().sum::<f64>() / qf;
    Ok(DMatrix::from_fn(q, q, |i, j| {
        k[(i, j)] - row_means[i] - col_means[j] + grand
    }))
}

/// Normalized kernel alignment ⟨K_c, K′_c⟩_F / (‖K_c‖_F ‖K′_c‖_F).
///
/// An operand that centers to (numerically) zero makes the score undefined;
/// this is reported as [`Error::UndefinedAlignment`] rather than a made-up value.
pub fn nka_score(k: &DMatrix<f64>, kp: &DMatrix<f64>) -> Result<f64> {
    if k.shape() != kp.shape() {
        return Err(Error::input(format!(
            "alignment operands differ in shape: {:?} vs {:?}",
            k.shape(),
            kp.shape()
        )));
    }
    let kc = double_center(k)?;
    let kpc = double_center(kp)?;
    let (na, nb) = (frob_norm(&kc), frob_norm(&kpc));
    // Centering a constant matrix leaves only rounding noise behind.
    let floor = |c: f64, raw: &DMatrix<f64>| c <= 1e-12 * frob_norm(raw) || c == 0.0;
    if floor(na, k) || floor(nb, kp) || !na.is_finite() || !nb.is_finite() {
        return Err(Error::UndefinedAlignment);
    }
    Ok((frob_inner(&kc, &kpc) / (na * nb)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn dm(rows: &[&[f64]]) -> DataMatrix {
        DataMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn rbf_examples() {
        let p1 = KernelParams::rbf(1.0).unwrap();
        assert_eq!(rbf_kernel(&[0.3, -2.0], &[0.3, -2.0], &p1).unwrap(), 1.0);
        let p4 = KernelParams::rbf(4.0).unwrap();
        assert_abs_diff_eq!(rbf_kernel(&[0.0], &[2.0], &p4).unwrap(), (-1.0f64).exp());
        let p25 = KernelParams::rbf(25.0).unwrap();
        assert_abs_diff_eq!(
            rbf_kernel(&[0.0, 0.0], &[3.0, 4.0], &p25).unwrap(),
            0.367879441171442,
            epsilon = 1e-15
        );
        assert!(rbf_kernel(&[0.0], &[0.0, 1.0], &p1).is_err());
        assert!(KernelParams::rbf(0.0).is_err());
        assert!(KernelParams::rbf(f64::NAN).is_err());
    }

    #[test]
    fn kernel_matrix_examples() {
        let p1 = KernelParams::rbf(1.0).unwrap();
        let one = dm(&[&[1.5]]);
        assert_eq!(kernel_matrix(&one, &one, &p1).unwrap()[(0, 0)], 1.0);

        let p4 = KernelParams::rbf(4.0).unwrap();
        let ab = dm(&[&[0.0], &[2.0]]);
        let k = kernel_matrix(&ab, &ab, &p4).unwrap();
        let e = (-1.0f64).exp();
        assert_abs_diff_eq!(k, DMatrix::from_row_slice(2, 2, &[1.0, e, e, 1.0]), epsilon = 1e-15);

        let a = dm(&[&[0.0]]);
        let b = dm(&[&[0.0], &[1.0]]);
        let k = kernel_matrix(&a, &b, &p1).unwrap();
        assert_abs_diff_eq!(k, DMatrix::from_row_slice(1, 2, &[1.0, e]), epsilon = 1e-15);

        let c = dm(&[&[0.0, 1.0]]);
        assert!(kernel_matrix(&a, &c, &p1).is_err());
    }

    #[test]
    fn bandwidth_examples() {
        assert_eq!(bandwidth_heuristic(&dm(&[&[0.0], &[2.0]])).unwrap(), 4.0);
        assert_abs_diff_eq!(
            bandwidth_heuristic(&dm(&[&[0.0], &[1.0], &[2.0]])).unwrap(),
            2.0,
            epsilon = 1e-15
        );
        assert!(matches!(
            bandwidth_heuristic(&dm(&[&[5.0], &[5.0]])),
            Err(Error::DegenerateBandwidth)
        ));
        assert!(matches!(bandwidth_heuristic(&dm(&[&[5.0]])), Err(Error::Input(_))));
    }

    #[test]
    fn ideal_kernel_examples() {
        let lv = LabelVector::new(vec![4, 7, 9], vec![1, 1, 2]).unwrap();
        let k = ideal_kernel(&lv).unwrap();
        assert_eq!(
            k.matrix(),
            &DMatrix::from_row_slice(3, 3, &[1., 1., 0., 1., 1., 0., 0., 0., 1.])
        );
        let single = LabelVector::new(vec![0], vec![3]).unwrap();
        assert_eq!(ideal_kernel(&single).unwrap().matrix(), &DMatrix::from_element(1, 1, 1.0));
        let distinct = LabelVector::new(vec![0, 1, 2], vec![1, 2, 3]).unwrap();
        assert_eq!(ideal_kernel(&distinct).unwrap().into_matrix(), DMatrix::identity(3, 3));
        assert!(ideal_kernel(&LabelVector::empty()).is_err());
    }

    #[test]
    fn label_vector_rejects_duplicates() {
        assert!(LabelVector::new(vec![1, 1], vec![0, 0]).is_err());
        assert!(LabelVector::new(vec![1], vec![0, 0]).is_err());
    }

    #[test]
    fn double_center_examples() {
        let ones = DMatrix::from_element(4, 4, 1.0);
        assert_eq!(double_center(&ones).unwrap(), DMatrix::zeros(4, 4));
        let c = double_center(&DMatrix::identity(2, 2)).unwrap();
        assert_abs_diff_eq!(
            c,
            DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]),
            epsilon = 1e-15
        );
        assert!(double_center(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn nka_examples() {
        let k = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.1, 0.5, 1.0, 0.3, 0.1, 0.3, 1.5]);
        assert_abs_diff_eq!(nka_score(&k, &k).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(nka_score(&(&k * 7.5), &k).unwrap(), 1.0, epsilon = 1e-12);
        assert!(matches!(
            nka_score(&DMatrix::from_element(3, 3, 2.0), &k),
            Err(Error::UndefinedAlignment)
        ));
        assert!(nka_score(&k, &DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn nka_two_by_two_by_hand() {
        // Every centered 2×2 matrix is c·[[1,-1],[-1,1]] with
        // c = (k11 - k12 - k21 + k22)/4, so the score is sign(c·c′).
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.5]);
        let b = DMatrix::from_row_slice(2, 2, &[0.1, 0.9, 0.9, 0.3]);
        let ca: f64 = (1.0 - 0.2 - 0.2 + 0.5) / 4.0;
        let cb: f64 = (0.1 - 0.9 - 0.9 + 0.3) / 4.0;
        let expected = (4.0 * ca * cb) / ((4.0 * ca * ca).sqrt() * (4.0 * cb * cb).sqrt());
        assert_abs_diff_eq!(expected, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(nka_score(&a, &b).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(nka_score(&a, &a).unwrap(), 1.0, epsilon = 1e-12);
    }

    fn points(max_n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), 2..max_n)
    }

    proptest! {
        #[test]
        fn rbf_is_symmetric(x in prop::collection::vec(-3.0f64..3.0, 3),
                            y in prop::collection::vec(-3.0f64..3.0, 3),
                            b in 0.1f64..10.0) {
            let p = KernelParams::rbf(b).unwrap();
            prop_assert_eq!(rbf_kernel(&x, &y, &p).unwrap(), rbf_kernel(&y, &x, &p).unwrap());
        }

        #[test]
        fn gram_is_symmetric_psd(rows in points(12, 2), b in 0.5f64..5.0) {
            let x = DataMatrix::from_rows(&rows).unwrap();
            let p = KernelParams::rbf(b).unwrap();
            let k = kernel_matrix(&x, &x, &p).unwrap();
            prop_assert_eq!(&k, &k.transpose());
            for i in 0..k.nrows() { prop_assert_eq!(k[(i, i)], 1.0); }
            let (lo, hi) = crate::linalg::eig_extremes(&k).unwrap();
            prop_assert!(lo >= -1e-8 * hi.abs().max(frob_norm(&k)));
        }

        #[test]
        fn nka_scale_invariant(rows in points(8, 2), a_exp in -3i32..=3) {
            let x = DataMatrix::from_rows(&rows).unwrap();
            let k = kernel_matrix(&x, &x, &KernelParams::rbf(1.0).unwrap()).unwrap();
            let kp = DMatrix::from_fn(k.nrows(), k.ncols(), |i, j| ((i * 3 + j * 5) % 4) as f64);
            let kp = &kp + kp.transpose();
            let a = 10f64.powi(a_exp);
            if let (Ok(base), Ok(scaled)) = (nka_score(&k, &kp), nka_score(&(&k * a), &kp)) {
                prop_assert!((base - scaled).abs() < 1e-10);
                prop_assert!(base.abs() <= 1.0);
            }
        }

        #[test]
        fn double_center_idempotent_and_zero_sum(vals in prop::collection::vec(-4.0f64..4.0, 25)) {
            let k = DMatrix::from_row_slice(5, 5, &vals);
            let c = double_center(&k).unwrap();
            let cc = double_center(&c).unwrap();
            prop_assert!(frob_norm(&(&cc - &c)) < 1e-10);
            for i in 0..5 {
                prop_assert!(c.row(i).sum().abs() < 1e-10);
                prop_assert!(c.column(i).sum().abs() < 1e-10);
            }
        }

        #[test]
        fn bandwidth_matches_all_pairs_and_is_translation_invariant(
            rows in points(15, 3),
            shift in prop::collection::vec(-100.0f64..100.0, 3),
        ) {
            let x = DataMatrix::from_rows(&rows).unwrap();
            let Ok(b) = bandwidth_heuristic(&x) else { return Ok(()); };
            let n = rows.len();
            let mut total = 0.0;
            let mut pairs = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    total += sq_dist(&rows[i], &rows[j]);
                    pairs += 1.0;
                }
            }
            prop_assert!((b - total / pairs).abs() <= 1e-10 * b.max(1.0));
            let moved: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| r.iter().zip(&shift).map(|(a, s)| a + s).collect())
                .collect();
            let bm = bandwidth_heuristic(&DataMatrix::from_rows(&moved).unwrap()).unwrap();
            prop_assert!((bm - b).abs() < 1e-9 * b);
        }
    }
}
