use std::io::Write;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{backtest, ForecastResult};
use crate::dataset::FieldDataset;
use crate::error::{Error, Result};
use crate::estimators::{train_on_dataset, EstimatorSpec};
use crate::metrics::{Metric, MetricsReport};
use crate::windowing::WindowConfig;

/// Which history each round trains on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum TrainingPolicy {
    /// Everything before the origin.
    #[default]
    Incremental,
    /// The last `window_steps` steps before the origin.
    Fixed { window_steps: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RollingConfig {
    pub window: WindowConfig,
    pub min_train_steps: usize,
    pub cadence_steps: usize,
    pub horizon_steps: usize,
    pub policy: TrainingPolicy,
    /// Held-out tail of each round's training rows for MLP early stopping.
    pub val_fraction: f64,
}

impl RollingConfig {
    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        let need = self.window.look_back + self.window.look_forward;
        if self.cadence_steps == 0 || self.horizon_steps == 0 {
            return Err(Error::InvalidArgument("cadence and horizon must be >= 1".into()));
        }
        if self.min_train_steps < need {
            return Err(Error::InvalidArgument(format!(
                "min_train of {} steps leaves no training rows for a window of {need}",
                self.min_train_steps
            )));
        }
        if let TrainingPolicy::Fixed { window_steps } = self.policy {
            if window_steps < need {
                return Err(Error::InvalidArgument(format!(
                    "fixed training window of {window_steps} steps is shorter than {need}"
                )));
            }
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::InvalidArgument(format!(
                "val_fraction must be in [0, 1), got {}",
                self.val_fraction
            )));
        }
        Ok(())
    }
}

/// Forecast origins `min_train + r·cadence` whose horizon fits in the data.
pub fn rolling_origins(n_steps: usize, min_train: usize, cadence: usize, horizon: usize) -> Vec<usize> {
    if cadence == 0 {
        return Vec::new();
    }
    (min_train..)
        .step_by(cadence)
        .take_while(|o| o + horizon <= n_steps)
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RollingRound {
    pub round: usize,
    pub origin: usize,
    pub origin_date: NaiveDate,
    pub train_start: usize,
    pub train_rows: usize,
    pub metrics: MetricsReport,
    pub forecast: ForecastResult,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RollingReport {
    pub descriptor: String,
    pub rounds: Vec<RollingRound>,
}

impl RollingReport {
    /// Mean of `metric` over rounds, skipping NaN rounds.
    pub fn mean(&self, metric: Metric) -> f64 {
        let vals: Vec<f64> = self
            .rounds
            .iter()
            .map(|r| metric.of(&r.metrics))
            .filter(|v| !v.is_nan())
            .collect();
        if vals.is_empty() {
            f64::NAN
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        }
    }

    pub fn mean_metrics(&self) -> MetricsReport {
        MetricsReport {
            smape: self.mean(Metric::Smape),
            mape: self.mean(Metric::Mape),
            rmse: self.mean(Metric::Rmse),
            r2: self.mean(Metric::R2),
            mae: self.mean(Metric::Mae),
            mse: self.mean(Metric::Mse),
            n_points: self.rounds.iter().map(|r| r.metrics.n_points).sum(),
            n_skipped_zero_actuals: self.rounds.iter().map(|r| r.metrics.n_skipped_zero_actuals).sum(),
        }
    }

    /// One row per round.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["round", "origin_date", "origin_step", "train_start_step", "train_rows"];
        header.extend(Metric::ALL.iter().map(|m| m.as_str()));
        w.write_record(&header)?;
        for r in &self.rounds {
            let mut row = vec![
                r.round.to_string(),
                r.origin_date.format("%Y-%m-%d").to_string(),
                r.origin.to_string(),
                r.train_start.to_string(),
                r.train_rows.to_string(),
            ];
            row.extend(Metric::ALL.iter().map(|m| m.of(&r.metrics).to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("rolling csv", e))
    }
}

/// Walk-forward evaluation: at each origin, train on past data only,
/// forecast the horizon recursively with the recorded injection, and score
/// against the recorded production. Rounds run in parallel.
pub fn run_rolling_evaluation(ds: &FieldDataset, cfg: &RollingConfig, spec: &EstimatorSpec) -> Result<RollingReport> {
    cfg.validate()?;
    let origins = rolling_origins(ds.n_steps(), cfg.min_train_steps, cfg.cadence_steps, cfg.horizon_steps);
    if origins.is_empty() {
        return Err(Error::InsufficientHistory {
            required: cfg.min_train_steps + cfg.horizon_steps,
            available: ds.n_steps(),
        });
    }
    let rounds = origins
        .par_iter()
        .enumerate()
        .map(|(round, &origin)| {
            let train_start = match cfg.policy {
                TrainingPolicy::Incremental => 0,
                TrainingPolicy::Fixed { window_steps } => origin.saturating_sub(window_steps),
            };
            let train = ds.slice(train_start, origin)?;
            let model = train_on_dataset(&train, &cfg.window, spec, cfg.val_fraction)?;
            let forecast = backtest(&model, ds, origin, cfg.horizon_steps)?;
            log::debug!("round {round}: origin {} trained on {} rows", ds.date_at(origin), model.train_rows);
            Ok(RollingRound {
                round,
                origin,
                origin_date: ds.date_at(origin),
                train_start,
                train_rows: model.train_rows,
                metrics: forecast.metrics()?,
                forecast,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RollingReport {
        descriptor: spec.descriptor(),
        rounds,
    })
}
