//! One-vs-rest linear SVM trained by full-batch Pegasos subgradient steps.
//!
//! Each binary problem minimizes (μ/2)‖w‖² + (1/n)Σ max(0, 1 − y_i⟨w, x̂_i⟩)
//! with μ = 1/(C·n) and x̂ = [x, 1], so C plays the same role as in the usual
//! C-SVM. Step t uses rate 1/(μt) followed by projection onto the ball of
//! radius 1/√μ; the returned weights average the second half of the iterates.
//! No randomness is involved, so training is deterministic.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::ClassId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSvmConfig {
    pub c: f64,
    pub iterations: usize,
}

impl Default for LinearSvmConfig {
    fn default() -> Self {
        LinearSvmConfig {
            c: 1.0,
            iterations: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    classes: Vec<ClassId>,
    /// One row per class: feature weights followed by the bias.
    weights: DMatrix<f64>,
}

impl LinearModel {
    pub fn classes(&self) -> &[ClassId] {
        &self.classes
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Per-class decision values, n × classes.
    pub fn decision(&self, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let r = self.weights.ncols() - 1;
        if g.ncols() != r {
            return Err(Error::input(format!(
                "features have {} columns, model expects {r}",
                g.ncols()
            )));
        }
        let w = self.weights.columns(0, r);
        let mut out = g * w.transpose();
        for mut row in out.row_iter_mut() {
            for (k, v) in row.iter_mut().enumerate() {
                *v += self.weights[(k, r)];
            }
        }
        Ok(out)
    }

    /// Arg-max class per row; ties go to the lowest class id.
    pub fn predict(&self, g: &DMatrix<f64>) -> Result<Vec<ClassId>> {
        let scores = self.decision(g)?;
        Ok(scores
            .row_iter()
            .map(|row| {
                let mut best = 0;
                for k in 1..row.len() {
                    if row[k] > row[best] {
                        best = k;
                    }
                }
                self.classes[best]
            })
            .collect())
    }
}

pub fn train_linear(g: &DMatrix<f64>, labels: &[ClassId], cfg: &LinearSvmConfig) -> Result<LinearModel> {
    let n = g.nrows();
    if labels.len() != n {
        return Err(Error::input(format!("{} labels for {n} feature rows", labels.len())));
    }
    if !(cfg.c > 0.0 && cfg.c.is_finite()) {
        return Err(Error::input(format!("C must be positive, got {}", cfg.c)));
    }
    if cfg.iterations == 0 {
        return Err(Error::input("classifier needs at least one iteration"));
    }
    let classes: Vec<ClassId> = labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if classes.len() < 2 {
        return Err(Error::input("classifier needs at least two classes"));
    }
    let r = g.ncols();
    let mut xh = DMatrix::from_element(n, r + 1, 1.0);
    xh.columns_mut(0, r).copy_from(g);

    let mut weights = DMatrix::zeros(classes.len(), r + 1);
    for (k, &c) in classes.iter().enumerate() {
        let y = DVector::from_iterator(n, labels.iter().map(|&l| if l == c { 1.0 } else { -1.0 }));
        let w = pegasos(&xh, &y, cfg);
        weights.row_mut(k).copy_from(&w.transpose());
    }
    Ok(LinearModel { classes, weights })
}

fn pegasos(xh: &DMatrix<f64>, y: &DVector<f64>, cfg: &LinearSvmConfig) -> DVector<f64> {
    let n = xh.nrows();
    let mu = 1.0 / (cfg.c * n as f64);
    let radius = 1.0 / mu.sqrt();
    let mut w = DVector::zeros(xh.ncols());
    let mut avg = DVector::zeros(xh.ncols());
    let burn_in = cfg.iterations / 2;
    for t in 1..=cfg.iterations {
        let margins = xh * &w;
        let mut push = DVector::zeros(xh.ncols());
        for i in 0..n {
            if y[i] * margins[i] < 1.0 {
                push.axpy(y[i], &xh.row(i).transpose(), 1.0);
            }
        }
        let eta = 1.0 / (mu * t as f64);
        w *= 1.0 - eta * mu;
        w.axpy(eta / n as f64, &push, 1.0);
        let norm = w.norm();
        if norm > radius {
            w *= radius / norm;
        }
        if t > burn_in {
            avg += &w;
        }
    }
    avg / (cfg.iterations - burn_in) as f64
}

/// Fraction of mismatches.
pub fn error_rate(pred: &[ClassId], truth: &[ClassId]) -> f64 {
    assert_eq!(pred.len(), truth.len());
    if pred.is_empty() {
        return 0.0;
    }
    pred.iter().zip(truth).filter(|(a, b)| a != b).count() as f64 / pred.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_points() {
        let g = DMatrix::from_row_slice(2, 1, &[-1.0, 1.0]);
        let m = train_linear(&g, &[0, 1], &LinearSvmConfig::default()).unwrap();
        assert_eq!(m.predict(&g).unwrap(), vec![0, 1]);
    }

    #[test]
    fn identical_features_do_not_crash() {
        let g = DMatrix::from_row_slice(2, 1, &[0.3, 0.3]);
        let m = train_linear(&g, &[4, 9], &LinearSvmConfig::default()).unwrap();
        let pred = m.predict(&g).unwrap();
        assert_eq!(pred, vec![4, 4]);
        assert_eq!(error_rate(&pred, &[4, 9]), 0.5);
    }

    #[test]
    fn single_class_rejected() {
        let g = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        assert!(train_linear(&g, &[1, 1], &LinearSvmConfig::default()).is_err());
        assert!(train_linear(&g, &[1], &LinearSvmConfig::default()).is_err());
    }

    #[test]
    fn three_classes_on_a_line() {
        let xs = [-3.0, -2.5, 0.0, 0.4, 3.0, 2.6];
        let g = DMatrix::from_fn(6, 2, |i, j| if j == 0 { xs[i] } else { xs[i] * xs[i] });
        let y = [0, 0, 1, 1, 2, 2];
        let m = train_linear(&g, &y, &LinearSvmConfig { c: 10.0, iterations: 3000 }).unwrap();
        assert_eq!(error_rate(&m.predict(&g).unwrap(), &y), 0.0);
    }

    #[test]
    fn deterministic() {
        let g = DMatrix::from_fn(10, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let y: Vec<ClassId> = (0..10).map(|i| (i % 2) as ClassId).collect();
        let a = train_linear(&g, &y, &LinearSvmConfig::default()).unwrap();
        let b = train_linear(&g, &y, &LinearSvmConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
