//! Per-well rate series and the aligned field dataset.
//!
//! A [`FieldDataset`] holds every well on one uniform date grid. Rates are
//! surface volumes in m³/d and are never negative; a missing observation is
//! a shut-in and is stored as zero.

mod condition;
mod csv_io;

use std::collections::BTreeMap;
use std::fmt;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use condition::{
    estimate_potential, resample_mean, smooth_injection, smooth_injectors, trim_rampup,
    with_potential,
};
pub use csv_io::{
    load_field_table, load_production_tests, read_field_table, read_production_tests,
    write_field_table,
};

/// A produced or injected fluid stream.
///
/// The declaration order is the canonical column order used everywhere a
/// dataset is flattened.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Oil,
    Gas,
    Water,
    WaterInj,
    GasInj,
}

impl Phase {
    pub const ALL: [Phase; 5] = [
        Phase::Oil,
        Phase::Gas,
        Phase::Water,
        Phase::WaterInj,
        Phase::GasInj,
    ];
    pub const PRODUCED: [Phase; 3] = [Phase::Oil, Phase::Gas, Phase::Water];
    pub const INJECTED: [Phase; 2] = [Phase::WaterInj, Phase::GasInj];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Oil => "oil",
            Phase::Gas => "gas",
            Phase::Water => "water",
            Phase::WaterInj => "water_inj",
            Phase::GasInj => "gas_inj",
        }
    }

    pub fn is_injection(self) -> bool {
        matches!(self, Phase::WaterInj | Phase::GasInj)
    }

    pub fn parse(s: &str) -> Option<Phase> {
        match s.trim().to_ascii_lowercase().as_str() {
            "oil" | "q_o" => Some(Phase::Oil),
            "gas" | "q_g" => Some(Phase::Gas),
            "water" | "q_w" => Some(Phase::Water),
            "water_inj" | "q_wi" => Some(Phase::WaterInj),
            "gas_inj" | "q_gi" => Some(Phase::GasInj),
            _ => None,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WellRole {
    Producer,
    Injector,
}

impl WellRole {
    pub fn as_str(self) -> &'static str {
        match self {
            WellRole::Producer => "producer",
            WellRole::Injector => "injector",
        }
    }

    pub fn parse(s: &str) -> Option<WellRole> {
        match s.trim().to_ascii_lowercase().as_str() {
            "producer" | "prod" | "p" => Some(WellRole::Producer),
            "injector" | "inj" | "i" => Some(WellRole::Injector),
            _ => None,
        }
    }

    fn allows(self, phase: Phase) -> bool {
        match self {
            WellRole::Producer => !phase.is_injection(),
            WellRole::Injector => phase.is_injection(),
        }
    }
}

/// A uniformly sampled rate series.
#[derive(Clone, Debug, PartialEq)]
pub struct RateSeries {
    start_date: NaiveDate,
    step_days: u32,
    values: Vec<f64>,
}

impl RateSeries {
    pub fn new(start_date: NaiveDate, step_days: u32, values: Vec<f64>) -> Result<Self> {
        if step_days == 0 {
            return Err(Error::InvalidArgument("step_days must be >= 1".into()));
        }
        if values.is_empty() {
            return Err(Error::Empty("rate series has no values".into()));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidArgument(format!(
                "rate at index {i} is {v}; rates must be finite and non-negative"
            )));
        }
        Ok(Self {
            start_date,
            step_days,
            values,
        })
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn step_days(&self) -> u32 {
        self.step_days
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        grid_date(self.start_date, self.step_days, index)
    }
}

pub(crate) fn grid_date(start: NaiveDate, step_days: u32, index: usize) -> NaiveDate {
    start + Duration::days(step_days as i64 * index as i64)
}

/// A single well and its rate series, one per carried phase.
#[derive(Clone, Debug, PartialEq)]
pub struct WellRecord {
    well_id: String,
    role: WellRole,
    series: BTreeMap<Phase, RateSeries>,
}

impl WellRecord {
    pub fn new(
        well_id: impl Into<String>,
        role: WellRole,
        series: BTreeMap<Phase, RateSeries>,
    ) -> Result<Self> {
        let well_id = well_id.into();
        if series.is_empty() {
            return Err(Error::Schema(format!("well {well_id} carries no series")));
        }
        if let Some(p) = series.keys().find(|p| !role.allows(**p)) {
            return Err(Error::Schema(format!(
                "{} well {well_id} cannot carry phase {p}",
                role.as_str()
            )));
        }
        let first = series.values().next().expect("non-empty");
        for (p, s) in &series {
            if s.start_date != first.start_date
                || s.step_days != first.step_days
                || s.len() != first.len()
            {
                return Err(Error::Misaligned(format!(
                    "well {well_id}: series {p} does not share the well's date grid"
                )));
            }
        }
        Ok(Self {
            well_id,
            role,
            series,
        })
    }

    /// Builds a producer carrying oil, gas and water.
    pub fn producer(
        well_id: impl Into<String>,
        start_date: NaiveDate,
        step_days: u32,
        oil: Vec<f64>,
        gas: Vec<f64>,
        water: Vec<f64>,
    ) -> Result<Self> {
        let mut series = BTreeMap::new();
        series.insert(Phase::Oil, RateSeries::new(start_date, step_days, oil)?);
        series.insert(Phase::Gas, RateSeries::new(start_date, step_days, gas)?);
        series.insert(Phase::Water, RateSeries::new(start_date, step_days, water)?);
        Self::new(well_id, WellRole::Producer, series)
    }

    /// Builds an injector from the given injection phases.
    pub fn injector(
        well_id: impl Into<String>,
        start_date: NaiveDate,
        step_days: u32,
        phases: Vec<(Phase, Vec<f64>)>,
    ) -> Result<Self> {
        let mut series = BTreeMap::new();
        for (p, v) in phases {
            series.insert(p, RateSeries::new(start_date, step_days, v)?);
        }
        Self::new(well_id, WellRole::Injector, series)
    }

    pub fn well_id(&self) -> &str {
        &self.well_id
    }

    pub fn role(&self) -> WellRole {
        self.role
    }

    pub fn series(&self, phase: Phase) -> Option<&RateSeries> {
        self.series.get(&phase)
    }

    /// Carried phases in canonical order.
    pub fn phases(&self) -> impl Iterator<Item = Phase> + '_ {
        self.series.keys().copied()
    }

    pub fn all_series(&self) -> impl Iterator<Item = (Phase, &RateSeries)> + '_ {
        self.series.iter().map(|(p, s)| (*p, s))
    }

    pub fn len(&self) -> usize {
        self.series.values().next().map_or(0, |s| s.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether any carried phase is non-zero at `index`.
    pub fn is_active_at(&self, index: usize) -> bool {
        self.series.values().any(|s| s.values[index] > 0.0)
    }

    pub(crate) fn map_series<F>(&self, mut f: F) -> Result<WellRecord>
    where
        F: FnMut(Phase, &RateSeries) -> Result<RateSeries>,
    {
        let mut out = BTreeMap::new();
        for (p, s) in &self.series {
            out.insert(*p, f(*p, s)?);
        }
        WellRecord::new(self.well_id.clone(), self.role, out)
    }
}

/// Every well of a field on one shared date grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldDataset {
    wells: Vec<WellRecord>,
    start_date: NaiveDate,
    step_days: u32,
    n_steps: usize,
}

impl FieldDataset {
    pub fn new(wells: Vec<WellRecord>) -> Result<Self> {
        let first = wells
            .first()
            .ok_or_else(|| Error::Empty("dataset has no wells".into()))?;
        let s0 = first.series.values().next().expect("well has series");
        let (start_date, step_days, n_steps) = (s0.start_date, s0.step_days, s0.len());
        let mut seen = std::collections::HashSet::new();
        for w in &wells {
            if !seen.insert(w.well_id.as_str()) {
                return Err(Error::Schema(format!("duplicate well id {}", w.well_id)));
            }
            let s = w.series.values().next().expect("well has series");
            if s.start_date != start_date || s.step_days != step_days || s.len() != n_steps {
                return Err(Error::Misaligned(format!(
                    "well {} is on grid ({}, {} d, {} steps), expected ({}, {} d, {} steps)",
                    w.well_id,
                    s.start_date,
                    s.step_days,
                    s.len(),
                    start_date,
                    step_days,
                    n_steps
                )));
            }
        }
        if !wells.iter().any(|w| w.role == WellRole::Producer) {
            return Err(Error::Schema("dataset has no producer".into()));
        }
        Ok(Self {
            wells,
            start_date,
            step_days,
            n_steps,
        })
    }

    pub fn wells(&self) -> &[WellRecord] {
        &self.wells
    }

    pub fn well(&self, well_id: &str) -> Option<&WellRecord> {
        self.wells.iter().find(|w| w.well_id == well_id)
    }

    pub fn producers(&self) -> impl Iterator<Item = &WellRecord> + '_ {
        self.wells.iter().filter(|w| w.role == WellRole::Producer)
    }

    pub fn injectors(&self) -> impl Iterator<Item = &WellRecord> + '_ {
        self.wells.iter().filter(|w| w.role == WellRole::Injector)
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn step_days(&self) -> u32 {
        self.step_days
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        grid_date(self.start_date, self.step_days, index)
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        (0..self.n_steps).map(|i| self.date_at(i)).collect()
    }

    /// Index of the first grid date on or after `date`.
    pub fn index_on_or_after(&self, date: NaiveDate) -> usize {
        let days = (date - self.start_date).num_days();
        if days <= 0 {
            return 0;
        }
        let step = self.step_days as i64;
        ((days + step - 1) / step) as usize
    }

    /// Sub-range `[from, to)` of the grid as a new dataset.
    pub fn slice(&self, from: usize, to: usize) -> Result<FieldDataset> {
        if from >= to || to > self.n_steps {
            return Err(Error::Empty(format!(
                "slice [{from}, {to}) of a {}-step dataset",
                self.n_steps
            )));
        }
        let start = self.date_at(from);
        let wells = self
            .wells
            .iter()
            .map(|w| {
                w.map_series(|_, s| {
                    RateSeries::new(start, s.step_days, s.values[from..to].to_vec())
                })
            })
            .collect::<Result<Vec<_>>>()?;
        FieldDataset::new(wells)
    }

    /// Per-phase sums across all wells; phases no well carries are all zero.
    pub fn field_totals(&self) -> BTreeMap<Phase, Vec<f64>> {
        let mut totals: BTreeMap<Phase, Vec<f64>> = Phase::ALL
            .iter()
            .map(|p| (*p, vec![0.0; self.n_steps]))
            .collect();
        for w in &self.wells {
            for (p, s) in &w.series {
                let acc = totals.get_mut(p).expect("all phases present");
                for (a, v) in acc.iter_mut().zip(&s.values) {
                    *a += v;
                }
            }
        }
        totals
    }
}

/// A controlled well measurement used to reconstruct production potential.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductionTest {
    pub well_id: String,
    pub date: NaiveDate,
    pub oil: f64,
    pub gas: f64,
    pub water: f64,
}

impl ProductionTest {
    pub fn rate(&self, phase: Phase) -> Option<f64> {
        match phase {
            Phase::Oil => Some(self.oil),
            Phase::Gas => Some(self.gas),
            Phase::Water => Some(self.water),
            _ => None,
        }
    }
}
