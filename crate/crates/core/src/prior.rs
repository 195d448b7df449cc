//! Learning the inverse dictionary kernel S from side information.
//!
//! The problem is
//!
//! ```text
//! min_{S ⪰ 0}  λ‖S − S0‖²_F + ‖T ⊙ (E_l S E_lᵀ) − K*‖²_F
//! ```
//!
//! where S0 = W† is the standard Nyström prior, E_l holds the rows of E for
//! the constrained samples, K* is the 0/1 target and T the constraint mask
//! (all ones for label side information). It is solved by projected gradient
//! steps whose length comes from an Armijo-Goldstein search, started from the
//! closed-form minimizer of the unconstrained problem.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel::{ideal_kernel_of, LabelVector};
use crate::linalg::{compose, frob_inner, frob_norm, select_rows, sym_eigen, symmetrize};
use crate::nystrom::NystromCore;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Must,
    Cannot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideKind {
    Labels,
    Grouping,
}

#[derive(Debug, Clone)]
pub enum SideInformation {
    /// Labeled samples; the target is the ideal kernel of their labels.
    Labels {
        indices: Vec<usize>,
        target: DMatrix<f64>,
    },
    /// Pairwise constraints over the sample subset `indices`.
    Grouping {
        indices: Vec<usize>,
        mask: DMatrix<f64>,
        target: DMatrix<f64>,
    },
}

impl SideInformation {
    pub fn from_labels(labels: &LabelVector) -> Self {
        SideInformation::Labels {
            indices: labels.indices().to_vec(),
            target: ideal_kernel_of(labels.labels()).into_matrix(),
        }
    }

    /// Build the mask and target from must-link / cannot-link pairs.
    ///
    /// The constrained subset is the sorted set of indices mentioned in any pair.
    /// Only listed pairs (in both orientations) are unmasked.
    pub fn from_constraints(pairs: &[(usize, usize, Link)]) -> Result<Self> {
        let mut indices: Vec<usize> = pairs.iter().flat_map(|&(a, b, _)| [a, b]).collect();
        indices.sort_unstable();
        indices.dedup();
        let q = indices.len();
        let pos = |v: usize| indices.binary_search(&v).expect("index collected above");
        let mut mask = DMatrix::zeros(q, q);
        let mut target = DMatrix::zeros(q, q);
        for &(a, b, link) in pairs {
            let (i, j) = (pos(a), pos(b));
            let t = match link {
                Link::Must => 1.0,
                Link::Cannot => 0.0,
            };
            if mask[(i, j)] == 1.0 && target[(i, j)] != t {
                return Err(Error::input(format!(
                    "conflicting must-link and cannot-link constraints on ({a}, {b})"
                )));
            }
            for (r, c) in [(i, j), (j, i)] {
                mask[(r, c)] = 1.0;
                target[(r, c)] = t;
            }
        }
        Ok(SideInformation::Grouping {
            indices,
            mask,
            target,
        })
    }

    pub fn kind(&self) -> SideKind {
        match self {
            SideInformation::Labels { .. } => SideKind::Labels,
            SideInformation::Grouping { .. } => SideKind::Grouping,
        }
    }

    pub fn indices(&self) -> &[usize] {
        match self {
            SideInformation::Labels { indices, .. } | SideInformation::Grouping { indices, .. } => {
                indices
            }
        }
    }

    pub fn target(&self) -> &DMatrix<f64> {
        match self {
            SideInformation::Labels { target, .. } | SideInformation::Grouping { target, .. } => {
                target
            }
        }
    }

    pub fn mask(&self) -> Option<&DMatrix<f64>> {
        match self {
            SideInformation::Labels { .. } => None,
            SideInformation::Grouping { mask, .. } => Some(mask),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.indices().is_empty()
    }

    fn check(&self, n: usize) -> Result<()> {
        let q = self.indices().len();
        if self.target().shape() != (q, q) {
            return Err(Error::input("side-information target does not match its index set"));
        }
        if let Some(i) = self.indices().iter().find(|&&i| i >= n) {
            return Err(Error::input(format!(
                "side-information index {i} out of range for {n} samples"
            )));
        }
        if let Some(mask) = self.mask() {
            if mask.shape() != (q, q) {
                return Err(Error::input("grouping mask does not match its index set"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarmStart {
    /// Closed form for labels, the projected prior for grouping constraints.
    Auto,
    Prior,
    /// Closed form with the grouping mask ignored.
    UnmaskedClosedForm,
}

#[derive(Debug, Clone)]
pub struct LearnConfig {
    pub lambda: f64,
    pub max_iters: usize,
    /// `None` uses 1e-6·(1 + ‖S0‖_F).
    pub grad_norm_tol: Option<f64>,
    pub obj_rel_tol: f64,
    /// `None` uses 1e-3·(1 + ‖∇‖_F), re-evaluated at every iteration.
    pub armijo_a0: Option<f64>,
    pub armijo_growth: f64,
    pub max_backtracks: usize,
    pub symmetrize_each_iter: bool,
    pub warm_start: WarmStart,
}

impl LearnConfig {
    pub fn new(lambda: f64) -> Self {
        LearnConfig {
            lambda,
            max_iters: 200,
            grad_norm_tol: None,
            obj_rel_tol: 1e-9,
            armijo_a0: None,
            armijo_growth: 2.0,
            max_backtracks: 60,
            symmetrize_each_iter: true,
            warm_start: WarmStart::Auto,
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        LearnConfig {
            lambda,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::input(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if !(self.armijo_growth > 1.0) {
            return Err(Error::input("armijo_growth must exceed 1"));
        }
        if let Some(a0) = self.armijo_a0 {
            if !(a0 > 0.0 && a0.is_finite()) {
                return Err(Error::input("armijo_a0 must be positive"));
            }
        }
        if !(self.obj_rel_tol >= 0.0) || self.grad_norm_tol.is_some_and(|t| !(t >= 0.0)) {
            return Err(Error::input("tolerances must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DictionaryState {
    pub s: DMatrix<f64>,
    pub s0: DMatrix<f64>,
}

impl DictionaryState {
    pub fn factor(&self) -> Result<DMatrix<f64>> {
        factorize(&self.s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergedBy {
    GradNorm,
    ObjRel,
    MaxIters,
}

impl std::fmt::Display for ConvergedBy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConvergedBy::GradNorm => "grad_norm",
            ConvergedBy::ObjRel => "obj_rel",
            ConvergedBy::MaxIters => "max_iters",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub iterations: usize,
    /// Objective at the warm start followed by one entry per accepted step.
    pub objective_trace: Vec<f64>,
    /// Norm of the gradient mapping A·‖S_next − S‖_F at the last step, or of
    /// the plain gradient when the loop stopped before taking one.
    pub final_grad_norm: f64,
    pub armijo_backtracks_total: usize,
    pub converged_by: ConvergedBy,
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub state: DictionaryState,
    pub report: SolverReport,
}

#[derive(Debug, Clone)]
pub struct ArmijoStep {
    pub s_next: DMatrix<f64>,
    pub a_used: f64,
    pub backtracks: usize,
}

/// The objective restricted to one (core, side information, λ) triple, with
/// the constrained rows of E extracted once.
struct Problem<'a> {
    s0: &'a DMatrix<f64>,
    el: DMatrix<f64>,
    target: &'a DMatrix<f64>,
    mask: Option<&'a DMatrix<f64>>,
    lambda: f64,
}

impl<'a> Problem<'a> {
    fn new(core: &'a NystromCore, side: &'a SideInformation, lambda: f64) -> Result<Self> {
        side.check(core.n())?;
        Ok(Problem {
            s0: &core.s0,
            el: select_rows(&core.e, side.indices()),
            target: side.target(),
            mask: side.mask(),
            lambda,
        })
    }

    fn check_shape(&self, s: &DMatrix<f64>) -> Result<()> {
        if s.shape() != self.s0.shape() {
            return Err(Error::input(format!(
                "dictionary is {}x{} but the core has {} landmarks",
                s.nrows(),
                s.ncols(),
                self.s0.nrows()
            )));
        }
        Ok(())
    }

    fn residual(&self, s: &DMatrix<f64>) -> DMatrix<f64> {
        let mut recon = &self.el * s * self.el.transpose();
        if let Some(mask) = self.mask {
            recon.component_mul_assign(mask);
        }
        recon - self.target
    }

    fn value(&self, s: &DMatrix<f64>) -> f64 {
        let prior = frob_norm(&(s - self.s0));
        let fit = frob_norm(&self.residual(s));
        self.lambda * prior * prior + fit * fit
    }

    fn gradient(&self, s: &DMatrix<f64>) -> DMatrix<f64> {
        let mut r = self.residual(s);
        if let Some(mask) = self.mask {
            r.component_mul_assign(mask);
        }
        let g = (s - self.s0) * (2.0 * self.lambda) + self.el.transpose() * r * &self.el * 2.0;
        symmetrize(&g)
    }
}

pub fn objective(
    s: &DMatrix<f64>,
    core: &NystromCore,
    side: &SideInformation,
    lambda: f64,
) -> Result<f64> {
    let prob = Problem::new(core, side, lambda)?;
    prob.check_shape(s)?;
    Ok(prob.value(s))
}

pub fn gradient(
    s: &DMatrix<f64>,
    core: &NystromCore,
    side: &SideInformation,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    let prob = Problem::new(core, side, lambda)?;
    prob.check_shape(s)?;
    Ok(prob.gradient(s))
}

/// Frobenius-nearest PSD matrix: symmetrize, then clamp negative eigenvalues to zero.
/// A matrix with no negative eigenvalue comes back as its symmetrization, untouched.
pub fn psd_project(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("cannot project a matrix with non-finite entries"));
    }
    let sym = symmetrize(m);
    let eig = sym_eigen(&sym)?;
    if eig.values.iter().all(|&v| v >= 0.0) {
        return Ok(sym);
    }
    let clamped: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
    Ok(compose(&eig.vectors, &clamped))
}

/// One Armijo-Goldstein step from `s` along `grad`.
///
/// Starting from `a0` (or the default when unset), B_A is the PSD projection of
/// S − ∇/A; A grows by `armijo_growth` until
/// J(B_A) ≤ J(S) + tr(∇(B_A − S)) + (A/2)‖B_A − S‖²_F.
pub fn armijo_step<F>(
    s: &DMatrix<f64>,
    grad: &DMatrix<f64>,
    cfg: &LearnConfig,
    obj_at: F,
) -> Result<ArmijoStep>
where
    F: Fn(&DMatrix<f64>) -> Result<f64>,
{
    cfg.validate()?;
    if s.shape() != grad.shape() || !s.is_square() {
        return Err(Error::input("iterate and gradient must be square and of equal shape"));
    }
    let j_s = obj_at(s)?;
    armijo_from(s, j_s, grad, cfg, &obj_at)
}

fn armijo_from<F>(
    s: &DMatrix<f64>,
    j_s: f64,
    grad: &DMatrix<f64>,
    cfg: &LearnConfig,
    obj_at: &F,
) -> Result<ArmijoStep>
where
    F: Fn(&DMatrix<f64>) -> Result<f64>,
{
    let mut a = cfg
        .armijo_a0
        .unwrap_or_else(|| 1e-3 * (1.0 + frob_norm(grad)));
    // Rounding noise in J once B_A is within a few ulps of S.
    let slack = 1e-13 * j_s.abs().max(f64::MIN_POSITIVE);
    for backtracks in 0..=cfg.max_backtracks {
        let mut b = psd_project(&(s - grad / a))?;
        if cfg.symmetrize_each_iter {
            b = symmetrize(&b);
        }
        let diff = &b - s;
        let model = j_s + frob_inner(grad, &diff) + 0.5 * a * frob_norm(&diff).powi(2);
        let j_b = obj_at(&b)?;
        if !j_b.is_finite() {
            return Err(Error::Numerical("objective became non-finite".into()));
        }
        if j_b <= model + slack {
            return Ok(ArmijoStep {
                s_next: b,
                a_used: a,
                backtracks,
            });
        }
        a *= cfg.armijo_growth;
    }
    Err(Error::StepFailure {
        backtracks: cfg.max_backtracks,
        last_a: a / cfg.armijo_growth,
    })
}

/// Unconstrained minimizer before PSD projection: the solution of
/// S + P S P = Q with P = E_lᵀE_l / √λ and Q = S0 + E_lᵀ K* E_l / λ.
///
/// For grouping constraints the mask is ignored, which makes this a heuristic
/// warm start only.
pub fn closed_form_unprojected(
    core: &NystromCore,
    side: &SideInformation,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::input(format!(
            "closed-form initialization needs lambda > 0, got {lambda}"
        )));
    }
    side.check(core.n())?;
    if side.is_empty() {
        return Ok(core.s0.clone());
    }
    let el = select_rows(&core.e, side.indices());
    let gram = el.transpose() * &el;
    let p = symmetrize(&(&gram / lambda.sqrt()));
    let q = symmetrize(&(&core.s0 + el.transpose() * side.target() * &el / lambda));
    let eig = sym_eigen(&p)?;
    let u = &eig.vectors;
    let qt = u.transpose() * q * u;
    let lam = &eig.values;
    let st = DMatrix::from_fn(qt.nrows(), qt.ncols(), |i, j| {
        qt[(i, j)] / (1.0 + lam[i] * lam[j])
    });
    Ok(symmetrize(&(u * st * u.transpose())))
}

/// Closed-form warm start projected onto the PSD cone.
///
/// Grouping constraints fall back to the projected prior, since the closed
/// form has no room for the mask.
pub fn init_closed_form(
    core: &NystromCore,
    side: &SideInformation,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::input(format!(
            "closed-form initialization needs lambda > 0, got {lambda}"
        )));
    }
    match side.kind() {
        SideKind::Labels => psd_project(&closed_form_unprojected(core, side, lambda)?),
        SideKind::Grouping => {
            side.check(core.n())?;
            psd_project(&core.s0)
        }
    }
}

fn warm_start(core: &NystromCore, side: &SideInformation, cfg: &LearnConfig) -> Result<DMatrix<f64>> {
    if side.is_empty() {
        return Ok(core.s0.clone());
    }
    if cfg.lambda == 0.0 {
        return psd_project(&core.s0);
    }
    match (cfg.warm_start, side.kind()) {
        (WarmStart::Prior, _) => psd_project(&core.s0),
        (WarmStart::UnmaskedClosedForm, _) => {
            psd_project(&closed_form_unprojected(core, side, cfg.lambda)?)
        }
        (WarmStart::Auto, _) => init_closed_form(core, side, cfg.lambda),
    }
}

pub fn fit(core: &NystromCore, side: &SideInformation, cfg: &LearnConfig) -> Result<FitOutcome> {
    fit_with_observer(core, side, cfg, |_, _| {})
}

/// [`fit`], calling `observe(t, S)` on the warm start (t = 0) and on every accepted iterate.
pub fn fit_with_observer<O>(
    core: &NystromCore,
    side: &SideInformation,
    cfg: &LearnConfig,
    mut observe: O,
) -> Result<FitOutcome>
where
    O: FnMut(usize, &DMatrix<f64>),
{
    cfg.validate()?;
    let prob = Problem::new(core, side, cfg.lambda)?;
    let tol = cfg
        .grad_norm_tol
        .unwrap_or_else(|| 1e-6 * (1.0 + frob_norm(&core.s0)));

    let mut s = warm_start(core, side, cfg)?;
    let mut j = prob.value(&s);
    observe(0, &s);
    let mut trace = vec![j];
    let mut backtracks_total = 0;
    let mut iterations = 0;
    let mut final_grad_norm;
    let converged_by;

    loop {
        let grad = prob.gradient(&s);
        let gnorm = frob_norm(&grad);
        final_grad_norm = gnorm;
        if gnorm <= tol {
            converged_by = ConvergedBy::GradNorm;
            break;
        }
        if iterations >= cfg.max_iters {
            converged_by = ConvergedBy::MaxIters;
            break;
        }
        let step = armijo_from(&s, j, &grad, cfg, &|b: &DMatrix<f64>| Ok(prob.value(b)))?;
        backtracks_total += step.backtracks;
        let j_next = prob.value(&step.s_next);
        if j_next > j {
            // Accepted only through the rounding slack: no further progress is possible.
            converged_by = ConvergedBy::ObjRel;
            break;
        }
        let mapping = step.a_used * frob_norm(&(&step.s_next - &s));
        final_grad_norm = mapping;
        let decrease = j - j_next;
        s = step.s_next;
        j = j_next;
        iterations += 1;
        trace.push(j);
        observe(iterations, &s);
        if mapping <= tol {
            converged_by = ConvergedBy::GradNorm;
            break;
        }
        if decrease <= cfg.obj_rel_tol * j.abs().max(f64::MIN_POSITIVE) {
            converged_by = ConvergedBy::ObjRel;
            break;
        }
    }

    // Every iterate already comes out of the projection; this only catches a broken eigensolver.
    let (lo, hi) = crate::linalg::eig_extremes(&s)?;
    if lo < -1e-8 * hi.max(0.0) {
        return Err(Error::Numerical(format!(
            "fitted dictionary left the PSD cone (min eigenvalue {lo:e})"
        )));
    }

    Ok(FitOutcome {
        state: DictionaryState {
            s,
            s0: core.s0.clone(),
        },
        report: SolverReport {
            iterations,
            objective_trace: trace,
            final_grad_norm,
            armijo_backtracks_total: backtracks_total,
            converged_by,
        },
    })
}

/// L = U Σ^{1/2} over the eigenvalues of S above 1e-12·λ_max, so S ≈ L Lᵀ.
pub fn factorize(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(s)?;
    let m = s.nrows();
    let lmax = eig.values.iter().copied().fold(0.0, f64::max);
    let keep = if lmax > 0.0 {
        eig.values.iter().take_while(|&&v| v > 1e-12 * lmax).count()
    } else {
        0
    };
    let mut l = DMatrix::zeros(m, keep);
    for c in 0..keep {
        let scale = eig.values[c].sqrt();
        l.set_column(c, &(eig.vectors.column(c) * scale));
    }
    Ok(l)
}
