//! Least squares, Ridge and Lasso regression.
//!
//! The losses are the plain sums of squared residuals plus the penalty,
//! without any `1/n` scaling:
//!
//! ```text
//! ridge: Σ (y − (w·x + b))² + α Σ w_j²
//! lasso: Σ (y − (w·x + b))² + α Σ |w_j|
//! ```
//!
//! The intercept is never penalized. Every fit works on column-centered data
//! and recovers the intercept from the means. Output columns are fitted
//! independently against the shared design matrix.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearKind {
    Ols,
    Ridge,
    Lasso,
}

impl LinearKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LinearKind::Ols => "ols",
            LinearKind::Ridge => "ridge",
            LinearKind::Lasso => "lasso",
        }
    }
}

/// Diagnostics from a linear fit.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct FitInfo {
    /// The design was rank deficient; the solution is minimum-norm or damped.
    pub rank_deficient: bool,
    /// Coordinate-descent sweeps (Lasso only).
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    /// `n_inputs × n_outputs`.
    pub weights: DMatrix<f64>,
    pub intercepts: DVector<f64>,
    pub kind: LinearKind,
    pub alpha: f64,
    pub info: FitInfo,
}

impl LinearModel {
    pub fn n_inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_outputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.n_inputs() {
            return Err(Error::Schema(format!(
                "model expects {} inputs, got {}",
                self.n_inputs(),
                x.ncols()
            )));
        }
        let mut out = x * &self.weights;
        for mut row in out.row_iter_mut() {
            row += self.intercepts.transpose();
        }
        Ok(out)
    }
}

struct Centered {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    x_mean: DVector<f64>,
    y_mean: DVector<f64>,
}

fn center(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<Centered> {
    if x.nrows() == 0 {
        return Err(Error::Empty("cannot fit on zero rows".into()));
    }
    if x.nrows() != y.nrows() {
        return Err(Error::Schema(format!(
            "X has {} rows but Y has {}",
            x.nrows(),
            y.nrows()
        )));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("training data is not finite".into()));
    }
    let x_mean = x.row_mean().transpose();
    let y_mean = y.row_mean().transpose();
    let mut xc = x.clone();
    for mut row in xc.row_iter_mut() {
        row -= x_mean.transpose();
    }
    let mut yc = y.clone();
    for mut row in yc.row_iter_mut() {
        row -= y_mean.transpose();
    }
    Ok(Centered {
        x: xc,
        y: yc,
        x_mean,
        y_mean,
    })
}

fn assemble(
    c: &Centered,
    weights: DMatrix<f64>,
    kind: LinearKind,
    alpha: f64,
    info: FitInfo,
) -> Result<LinearModel> {
    if weights.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "{} fit produced non-finite weights",
            kind.as_str()
        )));
    }
    let intercepts = &c.y_mean - weights.transpose() * &c.x_mean;
    Ok(LinearModel {
        weights,
        intercepts,
        kind,
        alpha,
        info,
    })
}

/// Ordinary least squares through an SVD of the centered design.
///
/// Singular values below `max(n, p) · ε · σ_max` are discarded, which gives
/// the minimum-norm solution on rank-deficient designs.
pub fn fit_ols(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<LinearModel> {
    let c = center(x, y)?;
    let p = c.x.ncols();
    if p == 0 {
        return assemble(&c, DMatrix::zeros(0, y.ncols()), LinearKind::Ols, 0.0, FitInfo::default());
    }
    let svd = c.x.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let s = &svd.singular_values;
    let s_max = s.max();
    let cutoff = (c.x.nrows().max(p) as f64) * f64::EPSILON * s_max;
    let rank = s.iter().filter(|v| **v > cutoff).count();
    let inv = s.map(|v| if v > cutoff { 1.0 / v } else { 0.0 });
    let uty = u.transpose() * &c.y;
    let scaled = DMatrix::from_fn(uty.nrows(), uty.ncols(), |r, col| uty[(r, col)] * inv[r]);
    let weights = v_t.transpose() * scaled;
    let rank_deficient = rank < p;
    if rank_deficient {
        log::warn!("least-squares design is rank deficient (rank {rank} of {p}); using minimum-norm solution");
    }
    assemble(
        &c,
        weights,
        LinearKind::Ols,
        0.0,
        FitInfo {
            rank_deficient,
            iterations: 0,
            converged: true,
        },
    )
}

/// Ridge regression via the regularized normal equations
/// `(XᵀX + αI) w = Xᵀy`, solved by Cholesky.
///
/// If the system is singular (only possible for α = 0) a damping of
/// `1e-10 · trace(XᵀX)/p` is added and the fit is flagged.
pub fn fit_ridge(x: &DMatrix<f64>, y: &DMatrix<f64>, alpha: f64) -> Result<LinearModel> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "ridge alpha must be a finite value >= 0, got {alpha}"
        )));
    }
    let c = center(x, y)?;
    let p = c.x.ncols();
    let gram = c.x.transpose() * &c.x;
    let rhs = c.x.transpose() * &c.y;
    let mut system = gram.clone();
    for j in 0..p {
        system[(j, j)] += alpha;
    }
    let mut rank_deficient = false;
    let weights = match system.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => {
            rank_deficient = true;
            let damping = 1e-10 * (gram.trace() / p.max(1) as f64).max(f64::MIN_POSITIVE);
            for j in 0..p {
                system[(j, j)] += damping;
            }
            log::warn!("ridge system is singular; damping by {damping:e}");
            system
                .cholesky()
                .ok_or_else(|| Error::Numerical("ridge system is not positive definite".into()))?
                .solve(&rhs)
        }
    };
    assemble(
        &c,
        weights,
        LinearKind::Ridge,
        alpha,
        FitInfo {
            rank_deficient,
            iterations: 0,
            converged: true,
        },
    )
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Lasso regression by cyclic coordinate descent with soft-thresholding.
///
/// Each output column is iterated until the largest coefficient change in a
/// sweep falls below `tol`, or `max_iter` sweeps have run. A fit that hits
/// the sweep limit is returned with `info.converged == false`.
pub fn fit_lasso(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LinearModel> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "lasso alpha must be a finite value >= 0, got {alpha}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("lasso tol must be > 0, got {tol}")));
    }
    let c = center(x, y)?;
    let p = c.x.ncols();
    let norms: Vec<f64> = c.x.column_iter().map(|col| col.norm_squared()).collect();
    let threshold = alpha / 2.0;
    let mut weights = DMatrix::zeros(p, c.y.ncols());
    let mut sweeps_max = 0;
    let mut all_converged = true;
    for out in 0..c.y.ncols() {
        let mut residual: DVector<f64> = c.y.column(out).into_owned();
        let mut w = vec![0.0; p];
        let mut converged = false;
        let mut sweeps = 0;
        while sweeps < max_iter {
            sweeps += 1;
            let mut max_change: f64 = 0.0;
            for j in 0..p {
                if norms[j] == 0.0 {
                    continue;
                }
                let col = c.x.column(j);
                let rho = col.dot(&residual) + norms[j] * w[j];
                let updated = soft_threshold(rho, threshold) / norms[j];
                let delta = updated - w[j];
                if delta != 0.0 {
                    residual.axpy(-delta, &col, 1.0);
                    w[j] = updated;
                    max_change = max_change.max(delta.abs());
                }
            }
            if max_change < tol {
                converged = true;
                break;
            }
        }
        sweeps_max = sweeps_max.max(sweeps);
        all_converged &= converged;
        for j in 0..p {
            weights[(j, out)] = w[j];
        }
    }
    if !all_converged {
        log::warn!("lasso did not converge within {max_iter} sweeps (tol {tol:e})");
    }
    assemble(
        &c,
        weights,
        LinearKind::Lasso,
        alpha,
        FitInfo {
            rank_deficient: false,
            iterations: sweeps_max,
            converged: all_converged,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    fn random(n: usize, p: usize, m: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
        let w = DMatrix::from_fn(p, m, |_, _| rng.random_range(-2.0..2.0));
        let noise = DMatrix::from_fn(n, m, |_, _| rng.random_range(-0.1..0.1));
        let y = &x * w + noise;
        (x, y)
    }

    #[test]
    fn ols_hand_examples() {
        let x = col(&[1.0, 2.0, 3.0]);
        let m = fit_ols(&x, &col(&[2.0, 4.0, 6.0])).unwrap();
        assert!((m.weights[(0, 0)] - 2.0).abs() < 1e-12);
        assert!(m.intercepts[0].abs() < 1e-12);
        let m = fit_ols(&x, &col(&[5.0, 5.0, 5.0])).unwrap();
        assert!(m.weights[(0, 0)].abs() < 1e-12);
        assert!((m.intercepts[0] - 5.0).abs() < 1e-12);
        assert!(fit_ols(&DMatrix::zeros(0, 1), &DMatrix::zeros(0, 1)).is_err());
    }

    #[test]
    fn ols_columns_are_separable() {
        let (x, y) = random(40, 3, 2, 7);
        let joint = fit_ols(&x, &y).unwrap();
        for c in 0..2 {
            let single = fit_ols(&x, &y.columns(c, 1).into_owned()).unwrap();
            assert!((joint.weights.column(c) - single.weights.column(0)).abs().max() < 1e-12);
            assert!((joint.intercepts[c] - single.intercepts[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn ols_flags_rank_deficiency() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0, 4.0, 8.0]);
        let y = col(&[1.0, 2.0, 3.0, 4.0]);
        let m = fit_ols(&x, &y).unwrap();
        assert!(m.info.rank_deficient);
        let pred = m.predict(&x).unwrap();
        assert!((pred - y).abs().max() < 1e-10);
        // minimum norm: weights proportional to (1, 2)
        assert!((m.weights[(1, 0)] - 2.0 * m.weights[(0, 0)]).abs() < 1e-10);
    }

    #[test]
    fn ols_residuals_orthogonal() {
        let (x, y) = random(60, 5, 3, 11);
        let m = fit_ols(&x, &y).unwrap();
        let r = &y - m.predict(&x).unwrap();
        assert!((x.transpose() * r).abs().max() < 1e-8 * y.abs().max());
    }

    #[test]
    fn ridge_closed_form_and_limits() {
        let x = col(&[-1.0, 0.0, 1.0]);
        let y = col(&[-1.0, 0.0, 1.0]);
        let m = fit_ridge(&x, &y, 2.0).unwrap();
        assert!((m.weights[(0, 0)] - 0.5).abs() < 1e-12);
        assert!(m.intercepts[0].abs() < 1e-12);
        let y2 = col(&[3.0, 4.0, 8.0]);
        let big = fit_ridge(&x, &y2, 1e9).unwrap();
        assert!(big.weights[(0, 0)].abs() < 1e-8);
        assert!((big.intercepts[0] - 5.0).abs() < 1e-8);
        assert!(fit_ridge(&x, &y, -1.0).is_err());
    }

    #[test]
    fn ridge_zero_alpha_matches_ols() {
        let (x, y) = random(50, 4, 2, 3);
        let a = fit_ols(&x, &y).unwrap();
        let b = fit_ridge(&x, &y, 0.0).unwrap();
        let scale = a.weights.abs().max();
        assert!((a.weights - b.weights).abs().max() <= 1e-8 * scale);
    }

    #[test]
    fn lasso_hand_examples() {
        let x = col(&[-1.0, 0.0, 1.0]);
        let y = col(&[-1.0, 0.0, 1.0]);
        let m = fit_lasso(&x, &y, 2.0, 1e-10, 100).unwrap();
        assert!((m.weights[(0, 0)] - 0.5).abs() < 1e-12);
        assert!(m.info.converged);
        for alpha in [4.0, 5.0, 100.0] {
            assert_eq!(fit_lasso(&x, &y, alpha, 1e-10, 100).unwrap().weights[(0, 0)], 0.0);
        }
        assert!(fit_lasso(&x, &y, 1.0, 0.0, 100).is_err());
    }

    #[test]
    fn lasso_zero_alpha_matches_ols() {
        let (x, y) = random(80, 4, 1, 5);
        let a = fit_ols(&x, &y).unwrap();
        let b = fit_lasso(&x, &y, 0.0, 1e-10, 10_000).unwrap();
        assert!((a.weights - b.weights).abs().max() < 1e-6);
    }

    #[test]
    fn lasso_reports_non_convergence() {
        let (x, y) = random(30, 6, 1, 9);
        let m = fit_lasso(&x, &y, 0.01, 1e-14, 1).unwrap();
        assert!(!m.info.converged);
        assert_eq!(m.info.iterations, 1);
    }

    #[test]
    fn predict_checks_shape() {
        let m = fit_ols(&col(&[1.0, 2.0, 3.0]), &col(&[2.0, 4.0, 6.0])).unwrap();
        assert!((m.predict(&col(&[3.0])).unwrap()[(0, 0)] - 6.0).abs() < 1e-12);
        assert!(m.predict(&DMatrix::zeros(1, 2)).is_err());
        let zero = LinearModel {
            weights: DMatrix::zeros(2, 2),
            intercepts: DVector::from_vec(vec![1.5, -2.0]),
            kind: LinearKind::Ols,
            alpha: 0.0,
            info: FitInfo::default(),
        };
        let out = zero.predict(&DMatrix::from_element(3, 2, 7.0)).unwrap();
        assert!(out.row_iter().all(|r| r[0] == 1.5 && r[1] == -2.0));
    }
}
