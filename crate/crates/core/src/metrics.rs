//! Forecast accuracy metrics and radar normalization.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accuracy of a forecast against actuals.
///
/// `mape` averages only over points with a non-zero actual; the skipped
/// points are counted in `n_skipped_zero_actuals`. It is NaN when every
/// actual is zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub smape: f64,
    pub mape: f64,
    pub rmse: f64,
    pub r2: f64,
    pub mae: f64,
    pub mse: f64,
    pub n_points: usize,
    pub n_skipped_zero_actuals: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Smape,
    Mape,
    Rmse,
    R2,
    Mae,
    Mse,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Smape,
        Metric::Mape,
        Metric::Rmse,
        Metric::R2,
        Metric::Mae,
        Metric::Mse,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Smape => "smape",
            Metric::Mape => "mape",
            Metric::Rmse => "rmse",
            Metric::R2 => "r2",
            Metric::Mae => "mae",
            Metric::Mse => "mse",
        }
    }

    pub fn parse(s: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.as_str() == s)
    }

    /// R² is a score; the rest are errors.
    pub fn higher_is_better(self) -> bool {
        self == Metric::R2
    }

    pub fn of(self, r: &MetricsReport) -> f64 {
        match self {
            Metric::Smape => r.smape,
            Metric::Mape => r.mape,
            Metric::Rmse => r.rmse,
            Metric::R2 => r.r2,
            Metric::Mae => r.mae,
            Metric::Mse => r.mse,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn compute_metrics(actual: &[f64], predicted: &[f64]) -> Result<MetricsReport> {
    if actual.len() != predicted.len() {
        return Err(Error::InvalidArgument(format!(
            "{} actual values but {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::Empty("no points to score".into()));
    }
    let n = actual.len() as f64;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut smape_sum = 0.0;
    let mut mape_sum = 0.0;
    let mut skipped = 0;
    for (&a, &p) in actual.iter().zip(predicted) {
        let err = p - a;
        abs_sum += err.abs();
        sq_sum += err * err;
        let denom = (a + p) / 2.0;
        if denom != 0.0 {
            smape_sum += err.abs() / denom;
        }
        if a != 0.0 {
            mape_sum += (err / a).abs();
        } else {
            skipped += 1;
        }
    }
    let mean_actual = actual.iter().sum::<f64>() / n;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean_actual).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - sq_sum / ss_tot
    } else if sq_sum == 0.0 {
        1.0
    } else {
        0.0
    };
    let counted = actual.len() - skipped;
    let mse = sq_sum / n;
    Ok(MetricsReport {
        smape: smape_sum / n,
        mape: if counted > 0 {
            mape_sum / counted as f64
        } else {
            f64::NAN
        },
        rmse: mse.sqrt(),
        r2,
        mae: abs_sum / n,
        mse,
        n_points: actual.len(),
        n_skipped_zero_actuals: skipped,
    })
}

/// Scales each selected metric by its maximum across estimators, so the
/// worst estimator on a metric sits at 1. A metric that is zero for every
/// estimator stays zero.
pub fn radar_normalize(
    reports: &BTreeMap<String, MetricsReport>,
    metrics: &[Metric],
) -> Result<BTreeMap<String, Vec<f64>>> {
    if reports.is_empty() {
        return Err(Error::Empty("no estimators to compare".into()));
    }
    let mut max = vec![0.0f64; metrics.len()];
    for (name, r) in reports {
        for (k, m) in metrics.iter().enumerate() {
            let v = m.of(r);
            if !(v >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{m} of {name} is {v}; radar values must be non-negative"
                )));
            }
            max[k] = max[k].max(v);
        }
    }
    Ok(reports
        .iter()
        .map(|(name, r)| {
            let vals = metrics
                .iter()
                .zip(&max)
                .map(|(m, mx)| if *mx > 0.0 { m.of(r) / mx } else { 0.0 })
                .collect();
            (name.clone(), vals)
        })
        .collect())
}
