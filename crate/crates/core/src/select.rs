//! Choosing λ without a validation set.
//!
//! Each candidate is scored by the product of two normalized alignments:
//! the learned dictionary against the prior, ρ[S(λ), S0], and the learned
//! reconstruction on the constrained samples against the target,
//! ρ[E_l S(λ) E_lᵀ, K*]. The first rewards staying close to the unsupervised
//! kernel, the second rewards agreeing with the side information.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel::nka_score;
use crate::linalg::select_rows;
use crate::nystrom::NystromCore;
use crate::prior::{fit, DictionaryState, LearnConfig, SideInformation, SolverReport};

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid(Vec<f64>);

impl LambdaGrid {
    pub fn new(candidates: Vec<f64>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::input("lambda grid is empty"));
        }
        if let Some(v) = candidates.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::input(format!("lambda candidates must be positive, got {v}")));
        }
        if candidates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input("lambda grid must be strictly increasing"));
        }
        Ok(LambdaGrid(candidates))
    }

    /// 1e-4, 1e-3, …, 1e3.
    pub fn default_log() -> Self {
        LambdaGrid((-4..=3).map(|e| 10f64.powi(e)).collect())
    }

    pub fn candidates(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub struct LambdaRecord {
    pub lambda: f64,
    /// ρ[S(λ), S0], or `None` when undefined.
    pub rho_prior: Option<f64>,
    /// ρ[E_l S(λ) E_lᵀ, K*] (masked for grouping constraints), or `None` when undefined.
    pub rho_align: Option<f64>,
    /// rho_prior · rho_align; −∞ when either factor is undefined.
    pub criterion: f64,
    pub solver: SolverReport,
}

#[derive(Debug, Clone)]
pub struct SelectionReport {
    pub records: Vec<LambdaRecord>,
    pub chosen_lambda: f64,
    /// Fitted dictionary for the chosen λ.
    pub chosen_state: DictionaryState,
}

impl SelectionReport {
    pub fn chosen(&self) -> &LambdaRecord {
        self.records
            .iter()
            .find(|r| r.lambda == self.chosen_lambda)
            .expect("chosen lambda comes from the records")
    }
}

/// The two alignment factors for a fitted dictionary.
pub fn alignment_factors(
    core: &NystromCore,
    side: &SideInformation,
    s: &DMatrix<f64>,
) -> (Option<f64>, Option<f64>) {
    let rho_prior = nka_score(s, &core.s0).ok();
    let el = select_rows(&core.e, side.indices());
    let mut recon = &el * s * el.transpose();
    if let Some(mask) = side.mask() {
        recon.component_mul_assign(mask);
    }
    let rho_align = nka_score(&recon, side.target()).ok();
    (rho_prior, rho_align)
}

pub fn criterion_of(rho_prior: Option<f64>, rho_align: Option<f64>) -> f64 {
    match (rho_prior, rho_align) {
        (Some(a), Some(b)) if (a * b).is_finite() => a * b,
        _ => f64::NEG_INFINITY,
    }
}

/// Fit every candidate and keep the one with the largest criterion. Ties go
/// to the smaller λ; candidates with an undefined alignment score −∞.
pub fn select_lambda(
    core: &NystromCore,
    side: &SideInformation,
    grid: &LambdaGrid,
    cfg: &LearnConfig,
) -> Result<SelectionReport> {
    let mut records = Vec::with_capacity(grid.candidates().len());
    let mut best: Option<(f64, f64, DictionaryState)> = None;
    for &lambda in grid.candidates() {
        let out = fit(core, side, &cfg.with_lambda(lambda))?;
        let (rho_prior, rho_align) = alignment_factors(core, side, &out.state.s);
        let criterion = criterion_of(rho_prior, rho_align);
        let better = match &best {
            None => true,
            Some((_, c, _)) => criterion > *c,
        };
        if better {
            best = Some((lambda, criterion, out.state));
        }
        records.push(LambdaRecord {
            lambda,
            rho_prior,
            rho_align,
            criterion,
            solver: out.report,
        });
    }
    let (chosen_lambda, _, chosen_state) = best.expect("grid is non-empty");
    Ok(SelectionReport {
        records,
        chosen_lambda,
        chosen_state,
    })
}
