use chrono::NaiveDate;

use super::{FieldDataset, Phase, ProductionTest, RateSeries, WellRole};
use crate::error::{Error, Result};

/// Averages consecutive blocks of `period_days` samples.
///
/// A trailing partial block is dropped; the output step is the input step
/// times `period_days`.
pub fn resample_mean(ds: &FieldDataset, period_days: usize) -> Result<FieldDataset> {
    if period_days == 0 {
        return Err(Error::InvalidArgument("period_days must be >= 1".into()));
    }
    if period_days > ds.n_steps() {
        return Err(Error::Empty(format!(
            "resampling period {period_days} exceeds the {} available steps",
            ds.n_steps()
        )));
    }
    if period_days == 1 {
        return Ok(ds.clone());
    }
    let step = ds.step_days() * period_days as u32;
    let wells = ds
        .wells()
        .iter()
        .map(|w| {
            w.map_series(|_, s| {
                let values = s
                    .values()
                    .chunks_exact(period_days)
                    .map(|block| block.iter().sum::<f64>() / period_days as f64)
                    .collect();
                RateSeries::new(s.start_date(), step, values)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FieldDataset::new(wells)
}

/// Drops the ramp-up period.
///
/// With `override_start` the dataset is truncated to dates on or after it.
/// Otherwise it starts at the first date on which every well is in
/// operation (some phase non-zero).
pub fn trim_rampup(ds: &FieldDataset, override_start: Option<NaiveDate>) -> Result<FieldDataset> {
    let start = match override_start {
        Some(date) => {
            let idx = ds.index_on_or_after(date);
            if idx >= ds.n_steps() {
                return Err(Error::Empty(format!(
                    "ramp-up override {date} is past the last date {}",
                    ds.date_at(ds.n_steps() - 1)
                )));
            }
            idx
        }
        None => {
            let inert: Vec<String> = ds
                .wells()
                .iter()
                .filter(|w| !(0..ds.n_steps()).any(|t| w.is_active_at(t)))
                .map(|w| w.well_id().to_string())
                .collect();
            if !inert.is_empty() {
                return Err(Error::InertWells(inert));
            }
            (0..ds.n_steps())
                .find(|&t| ds.wells().iter().all(|w| w.is_active_at(t)))
                .ok_or_else(|| {
                    Error::Empty("no date on which all wells are simultaneously in operation".into())
                })?
        }
    };
    if start == 0 {
        return Ok(ds.clone());
    }
    ds.slice(start, ds.n_steps())
}

/// Reconstructs a well's production potential from its tests.
///
/// Test rates anchor the curve; between anchors the potential is linearly
/// interpolated, before the first test it is back-filled and after the last
/// test the last rate is held.
pub fn estimate_potential(
    daily: &RateSeries,
    tests: &[ProductionTest],
    phase: Phase,
) -> Result<RateSeries> {
    if tests.is_empty() {
        return Err(Error::NoTests("series".into()));
    }
    let mut anchors: Vec<(f64, f64)> = Vec::with_capacity(tests.len());
    let mut sorted: Vec<&ProductionTest> = tests.iter().collect();
    sorted.sort_by_key(|t| t.date);
    for t in sorted {
        let rate = t.rate(phase).ok_or_else(|| {
            Error::InvalidArgument(format!("production tests do not measure phase {phase}"))
        })?;
        if !rate.is_finite() || rate < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "test rate {rate} on {} is not a valid rate",
                t.date
            )));
        }
        let pos = (t.date - daily.start_date()).num_days() as f64 / daily.step_days() as f64;
        match anchors.last_mut() {
            Some(last) if last.0 == pos => last.1 = rate,
            _ => anchors.push((pos, rate)),
        }
    }
    let values = (0..daily.len())
        .map(|i| interpolate_anchors(&anchors, i as f64))
        .collect();
    RateSeries::new(daily.start_date(), daily.step_days(), values)
}

fn interpolate_anchors(anchors: &[(f64, f64)], x: f64) -> f64 {
    let first = anchors[0];
    let last = anchors[anchors.len() - 1];
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    let k = anchors.partition_point(|a| a.0 <= x);
    let (x0, y0) = anchors[k - 1];
    let (x1, y1) = anchors[k];
    if x == x0 {
        return y0;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Trailing moving average over `window_steps` samples.
///
/// The window shrinks at the start of the series, so the output has the
/// input's length and `output[t]` depends only on `input[..=t]`.
pub fn smooth_injection(s: &RateSeries, window_steps: usize) -> Result<RateSeries> {
    if window_steps == 0 {
        return Err(Error::InvalidArgument("window_steps must be >= 1".into()));
    }
    let v = s.values();
    let out = (0..v.len())
        .map(|t| {
            let n = (t + 1).min(window_steps);
            v[t + 1 - n..=t].iter().sum::<f64>() / n as f64
        })
        .collect();
    RateSeries::new(s.start_date(), s.step_days(), out)
}

/// Applies [`smooth_injection`] to every injection series of the field.
pub fn smooth_injectors(ds: &FieldDataset, window_steps: usize) -> Result<FieldDataset> {
    let wells = ds
        .wells()
        .iter()
        .map(|w| match w.role() {
            WellRole::Injector => w.map_series(|_, s| smooth_injection(s, window_steps)),
            WellRole::Producer => Ok(w.clone()),
        })
        .collect::<Result<Vec<_>>>()?;
    FieldDataset::new(wells)
}

/// Replaces every tested producer's rates with the potential estimated from
/// its tests. Producers without tests are left unchanged.
pub fn with_potential(ds: &FieldDataset, tests: &[ProductionTest]) -> Result<FieldDataset> {
    let wells = ds
        .wells()
        .iter()
        .map(|w| {
            let own: Vec<ProductionTest> = tests
                .iter()
                .filter(|t| t.well_id == w.well_id())
                .cloned()
                .collect();
            if w.role() != WellRole::Producer || own.is_empty() {
                return Ok(w.clone());
            }
            w.map_series(|p, s| estimate_potential(s, &own, p))
        })
        .collect::<Result<Vec<_>>>()?;
    FieldDataset::new(wells)
}
