//! Estimator families and the trained-model bundle used for forecasting.

pub mod linear;
pub mod mlp;
mod persist;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::FieldDataset;
use crate::error::{Error, Result};
use crate::windowing::{
    build_supervised, chronological_split, fit_normalizer, normalize, Normalizer, SplitSpec,
    WindowConfig,
};

pub use linear::{fit_lasso, fit_ols, fit_ridge, FitInfo, LinearKind, LinearModel};
pub use mlp::{fit_mlp, mlp_loss_and_grad, Activation, MlpGradients, MlpModel, MlpTrainConfig};

pub const DEFAULT_LASSO_TOL: f64 = 1e-6;
pub const DEFAULT_LASSO_MAX_ITER: usize = 10_000;

/// Which estimator to fit, with its hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorSpec {
    Ols,
    Ridge {
        alpha: f64,
    },
    Lasso {
        alpha: f64,
        tol: f64,
        max_iter: usize,
    },
    Mlp {
        hidden_size: usize,
        activation: Activation,
        train: MlpTrainConfig,
    },
}

impl EstimatorSpec {
    pub fn lasso(alpha: f64) -> Self {
        EstimatorSpec::Lasso {
            alpha,
            tol: DEFAULT_LASSO_TOL,
            max_iter: DEFAULT_LASSO_MAX_ITER,
        }
    }

    pub fn kind_str(&self) -> &'static str {
        match self {
            EstimatorSpec::Ols => "ols",
            EstimatorSpec::Ridge { .. } => "ridge",
            EstimatorSpec::Lasso { .. } => "lasso",
            EstimatorSpec::Mlp { .. } => "mlp",
        }
    }

    /// Short human-readable label, e.g. `ridge(alpha=0.2)`.
    pub fn descriptor(&self) -> String {
        match self {
            EstimatorSpec::Ols => "ols".into(),
            EstimatorSpec::Ridge { alpha } => format!("ridge(alpha={alpha})"),
            EstimatorSpec::Lasso { alpha, .. } => format!("lasso(alpha={alpha})"),
            EstimatorSpec::Mlp {
                hidden_size,
                activation,
                ..
            } => format!("mlp(hidden={hidden_size},activation={})", activation.as_str()),
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            EstimatorSpec::Mlp {
                hidden_size,
                activation,
                train,
            } => EstimatorSpec::Mlp {
                hidden_size: *hidden_size,
                activation: *activation,
                train: MlpTrainConfig {
                    seed,
                    ..train.clone()
                },
            },
            other => other.clone(),
        }
    }

    /// Fits on already-normalized matrices. The validation pair is used
    /// only for MLP early stopping.
    pub fn fit(
        &self,
        x: &DMatrix<f64>,
        y: &DMatrix<f64>,
        val: Option<(&DMatrix<f64>, &DMatrix<f64>)>,
    ) -> Result<Estimator> {
        Ok(match self {
            EstimatorSpec::Ols => Estimator::Linear(fit_ols(x, y)?),
            EstimatorSpec::Ridge { alpha } => Estimator::Linear(fit_ridge(x, y, *alpha)?),
            EstimatorSpec::Lasso {
                alpha,
                tol,
                max_iter,
            } => Estimator::Linear(fit_lasso(x, y, *alpha, *tol, *max_iter)?),
            EstimatorSpec::Mlp {
                hidden_size,
                activation,
                train,
            } => Estimator::Mlp(fit_mlp(x, y, val, *hidden_size, *activation, train)?.model),
        })
    }
}

/// A fitted estimator.
#[derive(Clone, Debug, PartialEq)]
pub enum Estimator {
    Linear(LinearModel),
    Mlp(MlpModel),
}

impl Estimator {
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            Estimator::Linear(m) => m.predict(x),
            Estimator::Mlp(m) => m.predict(x),
        }
    }

    pub fn n_inputs(&self) -> usize {
        match self {
            Estimator::Linear(m) => m.n_inputs(),
            Estimator::Mlp(m) => m.n_inputs(),
        }
    }

    pub fn n_outputs(&self) -> usize {
        match self {
            Estimator::Linear(m) => m.n_outputs(),
            Estimator::Mlp(m) => m.n_outputs(),
        }
    }
}

/// An estimator together with the window layout and scaling it was
/// trained with; everything needed to forecast from raw rates.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub window: WindowConfig,
    pub normalizer: Normalizer,
    pub estimator: Estimator,
    pub descriptor: String,
    pub train_rows: usize,
}

impl TrainedModel {
    /// Predicts raw-unit outputs for raw-unit inputs.
    pub fn predict_raw(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let xn = self.normalizer.normalize_x(x);
        let yn = self.estimator.predict(&xn)?;
        Ok(self.normalizer.denormalize_y(&yn))
    }

    pub fn to_text(&self) -> String {
        persist::to_text(self)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        persist::from_text(text)
    }
}

/// Reshapes `ds`, holds out the last `val_fraction` of rows for
/// validation, fits the normalizer on the remaining rows and trains.
pub fn train_on_dataset(
    ds: &FieldDataset,
    window: &WindowConfig,
    spec: &EstimatorSpec,
    val_fraction: f64,
) -> Result<TrainedModel> {
    let ss = build_supervised(ds, window)?;
    let val_fraction = if matches!(spec, EstimatorSpec::Mlp { .. }) {
        val_fraction
    } else {
        0.0
    };
    let (train, val, _) = chronological_split(
        &ss,
        &SplitSpec::Fractions {
            train: 1.0 - val_fraction,
            val: val_fraction,
            test: 0.0,
        },
    )?;
    let normalizer = fit_normalizer(&train)?;
    let train_n = normalize(&train, &normalizer)?;
    let val_n = normalize(&val, &normalizer)?;
    let estimator = spec.fit(
        &train_n.x,
        &train_n.y,
        (!val_n.is_empty()).then_some((&val_n.x, &val_n.y)),
    )?;
    if estimator.n_inputs() != ss.n_inputs() {
        return Err(Error::Schema("fitted estimator has the wrong input width".into()));
    }
    Ok(TrainedModel {
        window: *window,
        normalizer,
        estimator,
        descriptor: spec.descriptor(),
        train_rows: train.n_rows(),
    })
}
