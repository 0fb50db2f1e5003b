//! Recursive multi-step forecasting and walk-forward evaluation.
//!
//! A one-step model is rolled forward: each prediction is clamped at zero
//! and pushed into the lag window together with the scheduled injection at
//! the same time, and the next step is predicted from the shifted window.

mod rolling;
mod schedule;

use std::io::Write;

use chrono::NaiveDate;
use nalgebra::DMatrix;

use crate::dataset::{FieldDataset, Phase};
use crate::error::{Error, Result};
use crate::estimators::TrainedModel;
use crate::metrics::{compute_metrics, MetricsReport};
use crate::windowing::{column_keys, tracked_series, Scope, FIELD_ID};

pub use rolling::{rolling_origins, run_rolling_evaluation, RollingConfig, RollingReport, RollingRound, TrainingPolicy};
pub use schedule::InjectionSchedule;

/// Predicted (and optionally actual) rates of one produced series.
#[derive(Clone, Debug, PartialEq)]
pub struct ForecastSeries {
    pub well_id: String,
    pub phase: Phase,
    pub predicted: Vec<f64>,
    pub actual: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForecastResult {
    pub descriptor: String,
    pub dates: Vec<NaiveDate>,
    pub series: Vec<ForecastSeries>,
}

fn observed(ds: &FieldDataset, well_id: &str, phase: Phase) -> Option<Vec<f64>> {
    if well_id == FIELD_ID {
        ds.field_totals().remove(&phase)
    } else {
        ds.well(well_id)?.series(phase).map(|s| s.values().to_vec())
    }
}

impl ForecastResult {
    pub fn horizon(&self) -> usize {
        self.dates.len()
    }

    /// Fills `actual` from `ds` starting at step `from`.
    pub fn attach_actuals(&mut self, ds: &FieldDataset, from: usize) -> Result<()> {
        let h = self.horizon();
        if from + h > ds.n_steps() {
            return Err(Error::InsufficientHistory {
                required: from + h,
                available: ds.n_steps(),
            });
        }
        for s in &mut self.series {
            let v = observed(ds, &s.well_id, s.phase).ok_or_else(|| {
                Error::Schema(format!("no observed {}/{} to compare against", s.well_id, s.phase))
            })?;
            s.actual = Some(v[from..from + h].to_vec());
        }
        Ok(())
    }

    /// Metrics pooled over every series and step with actuals.
    pub fn metrics(&self) -> Result<MetricsReport> {
        let mut a = Vec::new();
        let mut p = Vec::new();
        for s in &self.series {
            if let Some(act) = &s.actual {
                a.extend_from_slice(act);
                p.extend_from_slice(&s.predicted);
            }
        }
        compute_metrics(&a, &p)
    }

    /// Long-format CSV: `date,well_id,phase,predicted_rate,actual_rate`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["date", "well_id", "phase", "predicted_rate", "actual_rate"])?;
        for s in &self.series {
            for (k, d) in self.dates.iter().enumerate() {
                let actual = s
                    .actual
                    .as_ref()
                    .map(|a| a[k].to_string())
                    .unwrap_or_default();
                w.write_record([
                    d.format("%Y-%m-%d").to_string(),
                    s.well_id.clone(),
                    s.phase.to_string(),
                    s.predicted[k].to_string(),
                    actual,
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("forecast csv", e))
    }
}

/// Forecasts `horizon` steps past the end of `history`.
///
/// Step 1 of the schedule is the injection at the first forecast time. A
/// schedule shorter than `horizon` is an error unless `hold_last` is set.
/// Only the offset-0 outputs of the model are used.
pub fn forecast_recursive(
    model: &TrainedModel,
    history: &FieldDataset,
    schedule: &InjectionSchedule,
    horizon: usize,
    hold_last: bool,
) -> Result<ForecastResult> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be >= 1".into()));
    }
    let i = model.window.look_back;
    if history.n_steps() < i {
        return Err(Error::InsufficientHistory {
            required: i,
            available: history.n_steps(),
        });
    }
    let series = tracked_series(history, model.window.scope);
    let (x_keys, _) = column_keys(&series, &model.window);
    if x_keys != model.normalizer.x_keys {
        return Err(Error::Schema(
            "history does not match the wells and phases the model was trained on".into(),
        ));
    }

    let mut out_col = Vec::new();
    let mut inj_rates = Vec::new();
    for (k, s) in series.iter().enumerate() {
        if s.produced {
            let col = model
                .normalizer
                .y_keys
                .iter()
                .position(|key| key.well_id == s.well_id && key.phase == s.phase && key.offset == 0)
                .ok_or_else(|| {
                    Error::Schema(format!("model has no one-step output for {}/{}", s.well_id, s.phase))
                })?;
            out_col.push((k, col));
        } else {
            let rates = (1..=horizon)
                .map(|step| match model.window.scope {
                    Scope::FullField => schedule.field_rate_at(history, s.phase, step, hold_last),
                    Scope::PerWell => schedule.rate_at(&s.well_id, s.phase, step, hold_last),
                })
                .collect::<Result<Vec<_>>>()?;
            inj_rates.push((k, rates));
        }
    }

    let t0 = history.n_steps();
    let mut windows: Vec<Vec<f64>> = series.iter().map(|s| s.values[t0 - i..].to_vec()).collect();
    let mut predicted = vec![Vec::with_capacity(horizon); out_col.len()];
    let mut row = DMatrix::zeros(1, x_keys.len());
    for step in 0..horizon {
        for (c, v) in windows.iter().flat_map(|w| w[w.len() - i..].iter()).enumerate() {
            row[(0, c)] = *v;
        }
        let y = model.predict_raw(&row)?;
        for (n, (k, col)) in out_col.iter().enumerate() {
            let v = y[(0, *col)];
            if !v.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite prediction at forecast step {}",
                    step + 1
                )));
            }
            let v = v.max(0.0);
            predicted[n].push(v);
            windows[*k].push(v);
        }
        for (k, rates) in &inj_rates {
            windows[*k].push(rates[step]);
        }
    }

    Ok(ForecastResult {
        descriptor: model.descriptor.clone(),
        dates: (0..horizon).map(|s| history.date_at(t0 + s)).collect(),
        series: out_col
            .iter()
            .zip(predicted)
            .map(|((k, _), p)| ForecastSeries {
                well_id: series[*k].well_id.clone(),
                phase: series[*k].phase,
                predicted: p,
                actual: None,
            })
            .collect(),
    })
}

/// Forecasts from step `origin` of `ds` using the recorded injection as the
/// schedule, and attaches the recorded production as actuals.
pub fn backtest(model: &TrainedModel, ds: &FieldDataset, origin: usize, horizon: usize) -> Result<ForecastResult> {
    if origin + horizon > ds.n_steps() {
        return Err(Error::InsufficientHistory {
            required: origin + horizon,
            available: ds.n_steps(),
        });
    }
    let i = model.window.look_back;
    if origin < i || i == 0 {
        return Err(Error::InsufficientHistory {
            required: i.max(1),
            available: origin,
        });
    }
    let history = ds.slice(origin - i, origin)?;
    let schedule = InjectionSchedule::from_dataset(ds, origin, horizon);
    let mut f = forecast_recursive(model, &history, &schedule, horizon, false)?;
    f.attach_actuals(ds, origin)?;
    Ok(f)
}
