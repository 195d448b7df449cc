//! Generalized Nyström low-rank kernel decomposition.
//!
//! The standard Nyström method approximates an n×n kernel matrix as
//! E·W†·Eᵀ from m landmark points. This crate replaces W† by a learned PSD
//! matrix S that also agrees with side information (partial labels or
//! must-link/cannot-link pairs), and packages the result as an inductive
//! model that embeds unseen samples.
//!
//! ```
//! use gnystrom::{bandwidth_heuristic, build_core, fit, select, DataMatrix, KernelParams,
//!     LabelVector, LandmarkMethod, LearnConfig, SideInformation, DEFAULT_PINV_TOL};
//!
//! let x = DataMatrix::from_rows(&[[0.0, 0.0], [0.1, 0.2], [2.0, 2.1], [2.2, 1.9], [0.2, 0.1]])?;
//! let p = KernelParams::rbf(bandwidth_heuristic(&x)?)?;
//! let z = select(&x, 3, LandmarkMethod::Random, 1)?;
//! let core = build_core(&x, &z, &p, DEFAULT_PINV_TOL)?;
//! let side = SideInformation::from_labels(&LabelVector::new(vec![0, 2], vec![0, 1])?);
//! let out = fit(&core, &side, &LearnConfig::new(1.0))?;
//! assert_eq!(out.state.s.nrows(), 3);
//! # Ok::<(), gnystrom::Error>(())
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod kernel;
pub mod landmarks;
pub mod linalg;
pub mod model;
pub mod nystrom;
pub mod prior;
pub mod select;

pub use error::{Error, Result};
pub use kernel::{
    bandwidth_heuristic, double_center, ideal_kernel, kernel_matrix, kernel_row, nka_score,
    rbf_kernel, ClassId, DataMatrix, IdealKernel, KernelFamily, KernelParams, LabelVector,
};
pub use landmarks::{kmeans, select, KMeansConfig, KMeansFit, LandmarkMethod, LandmarkSet};
pub use model::{InductiveModel, ModelMetadata};
pub use nystrom::{
    build_core, extrapolate_eigenvectors, proximity_bound, rbf_lipschitz_bound, reconstruct_entry,
    LandmarkEigensystem, NystromCore, ProximityBound, DEFAULT_PINV_TOL,
};
pub use prior::{
    armijo_step, factorize, fit, fit_with_observer, gradient, init_closed_form, objective,
    psd_project, ConvergedBy, DictionaryState, FitOutcome, LearnConfig, Link, SideInformation,
    SolverReport, WarmStart,
};
pub use select::{alignment_factors, select_lambda, LambdaGrid, LambdaRecord, SelectionReport};
