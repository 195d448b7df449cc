//! Standard Nyström machinery.
//!
//! Given samples X and landmarks Z, the sample-to-landmark kernel E (n×m) and
//! the landmark kernel W (m×m) give the low-rank reconstruction K ≈ E W† Eᵀ.
//! Entry (i, j) of the reconstruction is E_i W† E_jᵀ: both samples are
//! compared to the landmarks, and W† modulates the two similarity profiles.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{kernel_matrix, sq_dist, DataMatrix, KernelParams};
use crate::landmarks::LandmarkSet;
use crate::linalg::{compose, frob_norm, sym_eigen, symmetrize};

/// Default relative eigenvalue cutoff for the pseudo-inverse of W.
pub const DEFAULT_PINV_TOL: f64 = 1e-10;

/// Retained eigenpairs of W, eigenvalues descending and strictly positive.
#[derive(Debug, Clone)]
pub struct LandmarkEigensystem {
    pub eigvecs: DMatrix<f64>,
    pub eigvals: DVector<f64>,
}

impl LandmarkEigensystem {
    pub fn rank(&self) -> usize {
        self.eigvals.len()
    }
}

#[derive(Debug, Clone)]
pub struct NystromCore {
    /// Sample-to-landmark kernel, n×m.
    pub e: DMatrix<f64>,
    /// Landmark kernel, m×m.
    pub w: DMatrix<f64>,
    /// Pseudo-inverse of W, m×m.
    pub s0: DMatrix<f64>,
    pub pinv_rank: usize,
    pub pinv_tol: f64,
    eigensystem: LandmarkEigensystem,
}

impl NystromCore {
    pub fn n(&self) -> usize {
        self.e.nrows()
    }

    pub fn m(&self) -> usize {
        self.e.ncols()
    }

    pub fn eigensystem(&self) -> &LandmarkEigensystem {
        &self.eigensystem
    }

    /// E_i S E_jᵀ for an arbitrary inverse dictionary S.
    pub fn reconstruct_entry_with(&self, s: &DMatrix<f64>, i: usize, j: usize) -> Result<f64> {
        let n = self.n();
        if i >= n || j >= n {
            return Err(Error::input(format!(
                "entry ({i}, {j}) out of range for {n} samples"
            )));
        }
        if s.shape() != (self.m(), self.m()) {
            return Err(Error::input("dictionary shape does not match landmark count"));
        }
        Ok((self.e.row(i) * s * self.e.row(j).transpose())[(0, 0)])
    }

    /// Dense E S Eᵀ. Quadratic in n, so only for small problems and diagnostics.
    pub fn reconstruct_with(&self, s: &DMatrix<f64>) -> DMatrix<f64> {
        symmetrize(&(&self.e * s * self.e.transpose()))
    }
}

/// Build E, W and S0 = W† (eigenvalues at or below `pinv_tol·λ_max` dropped).
pub fn build_core(
    x: &DataMatrix,
    z: &LandmarkSet,
    p: &KernelParams,
    pinv_tol: f64,
) -> Result<NystromCore> {
    if !(0.0..1.0).contains(&pinv_tol) {
        return Err(Error::input(format!("pinv_tol must lie in [0, 1), got {pinv_tol}")));
    }
    if x.cols() != z.points.cols() {
        return Err(Error::input(format!(
            "samples have {} features but landmarks have {}",
            x.cols(),
            z.points.cols()
        )));
    }
    let e = kernel_matrix(x, &z.points, p)?;
    let w = kernel_matrix(&z.points, &z.points, p)?;
    let eig = sym_eigen(&w)?;
    let lmax = eig.values[0];
    if !(lmax > 0.0) {
        return Err(Error::Numerical("landmark kernel has no positive eigenvalue".into()));
    }
    let keep = eig.values.iter().take_while(|&&v| v > pinv_tol * lmax).count();
    let eigvecs = eig.vectors.columns(0, keep).into_owned();
    let eigvals = eig.values.rows(0, keep).into_owned();
    let inv: Vec<f64> = eigvals.iter().map(|v| 1.0 / v).collect();
    let s0 = compose(&eigvecs, &inv);
    Ok(NystromCore {
        e,
        w,
        s0,
        pinv_rank: keep,
        pinv_tol,
        eigensystem: LandmarkEigensystem { eigvecs, eigvals },
    })
}

/// E_i S0 E_jᵀ.
pub fn reconstruct_entry(core: &NystromCore, i: usize, j: usize) -> Result<f64> {
    core.reconstruct_entry_with(&core.s0, i, j)
}

/// φ_i(x) = (1 / (m λ_i)) Σ_j k(x, z_j) φ_i(z_j) for every row x of X.
///
/// λ_i are the eigenvalues of W itself, so at the landmarks the output is Φ / m.
pub fn extrapolate_eigenvectors(
    core: &NystromCore,
    eig: &LandmarkEigensystem,
    x: &DataMatrix,
    z: &LandmarkSet,
    p: &KernelParams,
) -> Result<DMatrix<f64>> {
    let m = core.m();
    if eig.eigvecs.nrows() != m || eig.eigvecs.ncols() != eig.eigvals.len() {
        return Err(Error::input("eigensystem shape does not match the landmark count"));
    }
    if let Some(v) = eig.eigvals.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::input(format!(
            "cannot extrapolate through a non-positive eigenvalue ({v})"
        )));
    }
    let kx = kernel_matrix(x, &z.points, p)?;
    let mut out = kx * &eig.eigvecs;
    for (c, &lam) in eig.eigvals.iter().enumerate() {
        out.column_mut(c).scale_mut(1.0 / (m as f64 * lam));
    }
    Ok(out)
}

/// Both sides of the landmark-proximity bound for one reconstructed entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProximityBound {
    pub lhs: f64,
    pub rhs: f64,
    /// Nearest landmarks to x_i and x_j.
    pub p: usize,
    pub q: usize,
}

/// Compare the reconstructed entry (i, j) with W_pq, where z_p and z_q are the
/// landmarks nearest to x_i and x_j, against the bound
/// √m·η·(c·d_p + c·d_q + √m·η·d_p·d_q)·‖W†‖_F with c = m·max k.
pub fn proximity_bound(
    core: &NystromCore,
    x: &DataMatrix,
    z: &LandmarkSet,
    p: &KernelParams,
    eta_lip: f64,
    i: usize,
    j: usize,
) -> Result<ProximityBound> {
    if x.rows() != core.n() || z.len() != core.m() {
        return Err(Error::input("data or landmarks do not match the Nyström core"));
    }
    if !(eta_lip >= 0.0) {
        return Err(Error::input("Lipschitz constant must be non-negative"));
    }
    let k_ij = reconstruct_entry(core, i, j)?;
    let (pi, dp) = nearest(z, x.row(i));
    let (qi, dq) = nearest(z, x.row(j));
    let m = core.m() as f64;
    let c = m * p.max_value();
    let sm_eta = m.sqrt() * eta_lip;
    let rhs = sm_eta * (c * dp + c * dq + sm_eta * dp * dq) * frob_norm(&core.s0);
    Ok(ProximityBound {
        lhs: (k_ij - core.w[(pi, qi)]).abs(),
        rhs,
        p: pi,
        q: qi,
    })
}

/// Lipschitz constant of the RBF kernel in its second argument over a set of
/// points: (2/b)·D_max·max k, with D_max the diameter of the set.
pub fn rbf_lipschitz_bound(points: &[&DataMatrix], p: &KernelParams) -> f64 {
    let rows: Vec<&[f64]> = points.iter().flat_map(|m| m.iter_rows()).collect();
    let mut diam2 = 0.0f64;
    for a in 0..rows.len() {
        for b in (a + 1)..rows.len() {
            diam2 = diam2.max(sq_dist(rows[a], rows[b]));
        }
    }
    2.0 / p.bandwidth() * diam2.sqrt() * p.max_value()
}

fn nearest(z: &LandmarkSet, x: &[f64]) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (c, row) in z.points.iter_rows().enumerate() {
        let d = sq_dist(x, row);
        if d < best.1 {
            best = (c, d);
        }
    }
    (best.0, best.1.sqrt())
}
