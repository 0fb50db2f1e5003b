//! Lag-window reshaping of a field dataset into supervised matrices.
//!
//! A row with origin `t` holds every tracked series at `t-i..t-1` as inputs
//! and the producer phases at `t..t+k-1` as outputs. Columns are ordered
//! well-major (dataset order), then phase (canonical order), then offset
//! ascending.

use std::fmt;
use std::io::Write;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::{FieldDataset, Phase, WellRole};
use crate::error::{Error, Result};

/// Well id used for field-aggregate columns.
pub const FIELD_ID: &str = "FIELD";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    #[default]
    FullField,
    PerWell,
}

impl Scope {
    pub fn as_str(self) -> &'static str {
        match self {
            Scope::FullField => "full_field",
            Scope::PerWell => "per_well",
        }
    }

    pub fn parse(s: &str) -> Option<Scope> {
        match s {
            "full_field" => Some(Scope::FullField),
            "per_well" => Some(Scope::PerWell),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub look_back: usize,
    pub look_forward: usize,
    pub scope: Scope,
}

impl WindowConfig {
    pub fn new(look_back: usize, look_forward: usize, scope: Scope) -> Result<Self> {
        let cfg = Self {
            look_back,
            look_forward,
            scope,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.look_back == 0 || self.look_forward == 0 {
            return Err(Error::InvalidArgument(
                "look_back and look_forward must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Addresses one column of a supervised set.
///
/// `offset` is negative for inputs (`-i..=-1`) and non-negative for outputs.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColumnKey {
    pub well_id: String,
    pub phase: Phase,
    pub offset: i32,
}

impl fmt::Display for ColumnKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.offset {
            0 => write!(f, "{}_{}_t", self.well_id, self.phase),
            o if o < 0 => write!(f, "{}_{}_t{}", self.well_id, self.phase, o),
            o => write!(f, "{}_{}_t+{}", self.well_id, self.phase, o),
        }
    }
}

impl ColumnKey {
    /// Parses the `WELL_phase_t-3` form produced by `Display`.
    pub fn parse(s: &str) -> Option<ColumnKey> {
        let (head, tail) = s.rsplit_once("_t")?;
        let offset = if tail.is_empty() {
            0
        } else {
            tail.parse::<i32>().ok()?
        };
        // longest names first so "water_inj" is not read as "..._inj"
        const BY_LENGTH: [Phase; 5] = [
            Phase::WaterInj,
            Phase::GasInj,
            Phase::Water,
            Phase::Oil,
            Phase::Gas,
        ];
        BY_LENGTH.iter().find_map(|p| {
            let well_id = head.strip_suffix(&format!("_{}", p.as_str()))?;
            Some(ColumnKey {
                well_id: well_id.to_string(),
                phase: *p,
                offset,
            })
        })
    }
}

/// One series tracked by the window: a well's phase, or a field total.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackedSeries {
    pub well_id: String,
    pub phase: Phase,
    pub produced: bool,
    pub values: Vec<f64>,
}

/// Lists the series a window tracks, in column order.
///
/// Full-field scope tracks the five field totals; per-well scope tracks
/// every carried phase of every well.
pub fn tracked_series(ds: &FieldDataset, scope: Scope) -> Vec<TrackedSeries> {
    match scope {
        Scope::FullField => ds
            .field_totals()
            .into_iter()
            .map(|(phase, values)| TrackedSeries {
                well_id: FIELD_ID.to_string(),
                phase,
                produced: !phase.is_injection(),
                values,
            })
            .collect(),
        Scope::PerWell => ds
            .wells()
            .iter()
            .flat_map(|w| {
                w.all_series().map(move |(phase, s)| TrackedSeries {
                    well_id: w.well_id().to_string(),
                    phase,
                    produced: w.role() == WellRole::Producer,
                    values: s.values().to_vec(),
                })
            })
            .collect(),
    }
}

/// Input and output column keys for the given tracked series.
pub fn column_keys(series: &[TrackedSeries], cfg: &WindowConfig) -> (Vec<ColumnKey>, Vec<ColumnKey>) {
    let i = cfg.look_back as i32;
    let k = cfg.look_forward as i32;
    let x_keys = series
        .iter()
        .flat_map(|s| {
            (-i..0).map(move |offset| ColumnKey {
                well_id: s.well_id.clone(),
                phase: s.phase,
                offset,
            })
        })
        .collect();
    let y_keys = series
        .iter()
        .filter(|s| s.produced)
        .flat_map(|s| {
            (0..k).map(move |offset| ColumnKey {
                well_id: s.well_id.clone(),
                phase: s.phase,
                offset,
            })
        })
        .collect();
    (x_keys, y_keys)
}

/// Lag-window design matrix and targets.
#[derive(Clone, Debug, PartialEq)]
pub struct SupervisedSet {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub x_keys: Vec<ColumnKey>,
    pub y_keys: Vec<ColumnKey>,
    pub origins: Vec<NaiveDate>,
}

impl SupervisedSet {
    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows() == 0
    }

    pub fn n_inputs(&self) -> usize {
        self.x_keys.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.y_keys.len()
    }

    /// Rows `[from, to)` as a new set.
    pub fn rows(&self, from: usize, to: usize) -> SupervisedSet {
        SupervisedSet {
            x: self.x.rows(from, to - from).into_owned(),
            y: self.y.rows(from, to - from).into_owned(),
            x_keys: self.x_keys.clone(),
            y_keys: self.y_keys.clone(),
            origins: self.origins[from..to].to_vec(),
        }
    }

    /// Writes the set as CSV with `origin_date` and one column per key.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["origin_date".to_string()];
        header.extend(self.x_keys.iter().map(|k| k.to_string()));
        header.extend(self.y_keys.iter().map(|k| k.to_string()));
        w.write_record(&header)?;
        for r in 0..self.n_rows() {
            let mut row = vec![self.origins[r].format("%Y-%m-%d").to_string()];
            row.extend(self.x.row(r).iter().map(|v| v.to_string()));
            row.extend(self.y.row(r).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "supervised csv".into(),
            source: e,
        })?;
        Ok(())
    }
}

/// Reshapes the dataset into a supervised set; only complete rows are emitted.
pub fn build_supervised(ds: &FieldDataset, cfg: &WindowConfig) -> Result<SupervisedSet> {
    cfg.validate()?;
    let (i, k) = (cfg.look_back, cfg.look_forward);
    let t_len = ds.n_steps();
    if t_len < i + k {
        return Err(Error::InsufficientHistory {
            required: i + k,
            available: t_len,
        });
    }
    let series = tracked_series(ds, cfg.scope);
    let (x_keys, y_keys) = column_keys(&series, cfg);
    let n_rows = t_len - i - k + 1;
    let mut x = DMatrix::zeros(n_rows, x_keys.len());
    let mut y = DMatrix::zeros(n_rows, y_keys.len());
    let mut origins = Vec::with_capacity(n_rows);
    for r in 0..n_rows {
        let t = r + i;
        origins.push(ds.date_at(t));
        let mut c = 0;
        for s in &series {
            for v in &s.values[t - i..t] {
                x[(r, c)] = *v;
                c += 1;
            }
        }
        let mut c = 0;
        for s in series.iter().filter(|s| s.produced) {
            for v in &s.values[t..t + k] {
                y[(r, c)] = *v;
                c += 1;
            }
        }
    }
    Ok(SupervisedSet {
        x,
        y,
        x_keys,
        y_keys,
        origins,
    })
}

/// How to cut a supervised set into train/validation/test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SplitSpec {
    Fractions { train: f64, val: f64, test: f64 },
    /// Rows with origin before `val_start` train, before `test_start`
    /// validate, the rest test.
    Dates {
        val_start: NaiveDate,
        test_start: NaiveDate,
    },
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SplitSpec::Fractions { train, val, test } => {
                let ok = [train, val, test].iter().all(|f| (0.0..=1.0).contains(f))
                    && ((train + val + test) - 1.0).abs() < 1e-9;
                if !ok {
                    return Err(Error::InvalidArgument(format!(
                        "split fractions {train}/{val}/{test} must lie in [0,1] and sum to 1"
                    )));
                }
            }
            SplitSpec::Dates {
                val_start,
                test_start,
            } => {
                if test_start < val_start {
                    return Err(Error::InvalidArgument(format!(
                        "test start {test_start} precedes validation start {val_start}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Splits rows in origin order. Fractional sizes are floored for validation
/// and test; the remainder goes to training.
pub fn chronological_split(
    ss: &SupervisedSet,
    spec: &SplitSpec,
) -> Result<(SupervisedSet, SupervisedSet, SupervisedSet)> {
    spec.validate()?;
    let n = ss.n_rows();
    let (n_train, n_val) = match *spec {
        SplitSpec::Fractions { val, test, .. } => {
            let n_val = (n as f64 * val + 1e-9).floor() as usize;
            let n_test = (n as f64 * test + 1e-9).floor() as usize;
            (n - n_val - n_test, n_val)
        }
        SplitSpec::Dates {
            val_start,
            test_start,
        } => {
            let n_train = ss.origins.partition_point(|d| *d < val_start);
            let n_pre_test = ss.origins.partition_point(|d| *d < test_start);
            (n_train, n_pre_test - n_train)
        }
    };
    if n_train == 0 {
        return Err(Error::Empty("training subset is empty".into()));
    }
    Ok((
        ss.rows(0, n_train),
        ss.rows(n_train, n_train + n_val),
        ss.rows(n_train + n_val, n),
    ))
}

/// Per-column Gaussian scaling fitted on training rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalizer {
    pub x_keys: Vec<ColumnKey>,
    pub y_keys: Vec<ColumnKey>,
    pub x_mean: Vec<f64>,
    pub x_std: Vec<f64>,
    pub y_mean: Vec<f64>,
    pub y_std: Vec<f64>,
}

const MIN_STD: f64 = 1e-12;

fn column_stats(m: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = m.nrows() as f64;
    m.column_iter()
        .map(|c| {
            let mean = c.iter().sum::<f64>() / n;
            let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            (mean, if std < MIN_STD { 1.0 } else { std })
        })
        .unzip()
}

/// Mean and population standard deviation of every column; a column with
/// zero spread gets a unit standard deviation.
pub fn fit_normalizer(train: &SupervisedSet) -> Result<Normalizer> {
    if train.is_empty() {
        return Err(Error::Empty("cannot fit a normalizer on zero rows".into()));
    }
    let (x_mean, x_std) = column_stats(&train.x);
    let (y_mean, y_std) = column_stats(&train.y);
    Ok(Normalizer {
        x_keys: train.x_keys.clone(),
        y_keys: train.y_keys.clone(),
        x_mean,
        x_std,
        y_mean,
        y_std,
    })
}

impl Normalizer {
    /// A normalizer that leaves values unchanged.
    pub fn identity(x_keys: Vec<ColumnKey>, y_keys: Vec<ColumnKey>) -> Self {
        Self {
            x_mean: vec![0.0; x_keys.len()],
            x_std: vec![1.0; x_keys.len()],
            y_mean: vec![0.0; y_keys.len()],
            y_std: vec![1.0; y_keys.len()],
            x_keys,
            y_keys,
        }
    }

    fn check(&self, ss: &SupervisedSet) -> Result<()> {
        if ss.x_keys != self.x_keys || ss.y_keys != self.y_keys {
            return Err(Error::Schema(
                "supervised set columns do not match the normalizer".into(),
            ));
        }
        Ok(())
    }

    pub fn normalize_x(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        scale(x, &self.x_mean, &self.x_std, true)
    }

    pub fn normalize_y(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        scale(y, &self.y_mean, &self.y_std, true)
    }

    pub fn denormalize_y(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        scale(y, &self.y_mean, &self.y_std, false)
    }

    pub fn denormalize_x(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        scale(x, &self.x_mean, &self.x_std, false)
    }
}

fn scale(m: &DMatrix<f64>, mean: &[f64], std: &[f64], forward: bool) -> DMatrix<f64> {
    let mut out = m.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        for v in col.iter_mut() {
            *v = if forward {
                (*v - mean[j]) / std[j]
            } else {
                *v * std[j] + mean[j]
            };
        }
    }
    out
}

pub fn normalize(ss: &SupervisedSet, nz: &Normalizer) -> Result<SupervisedSet> {
    nz.check(ss)?;
    Ok(SupervisedSet {
        x: nz.normalize_x(&ss.x),
        y: nz.normalize_y(&ss.y),
        ..ss.clone()
    })
}

pub fn denormalize(ss: &SupervisedSet, nz: &Normalizer) -> Result<SupervisedSet> {
    nz.check(ss)?;
    Ok(SupervisedSet {
        x: nz.denormalize_x(&ss.x),
        y: nz.denormalize_y(&ss.y),
        ..ss.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::WellRecord;
    use proptest::prelude::*;

    fn d0() -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 1, 1).unwrap()
    }

    fn toy(rows: usize) -> SupervisedSet {
        let x = DMatrix::from_fn(rows, 2, |r, c| (r * 2 + c) as f64);
        let y = DMatrix::from_fn(rows, 1, |r, _| r as f64);
        SupervisedSet {
            x,
            y,
            x_keys: vec![
                ColumnKey { well_id: "A".into(), phase: Phase::Oil, offset: -2 },
                ColumnKey { well_id: "A".into(), phase: Phase::Oil, offset: -1 },
            ],
            y_keys: vec![ColumnKey { well_id: "A".into(), phase: Phase::Oil, offset: 0 }],
            origins: (0..rows).map(|r| d0() + chrono::Duration::days(r as i64)).collect(),
        }
    }

    #[test]
    fn fractional_split_floors_and_orders() {
        let ss = toy(10);
        let (tr, va, te) = chronological_split(
            &ss,
            &SplitSpec::Fractions { train: 0.6, val: 0.2, test: 0.2 },
        )
        .unwrap();
        assert_eq!((tr.n_rows(), va.n_rows(), te.n_rows()), (6, 2, 2));
        assert_eq!(va.origins[0], ss.origins[6]);
        assert_eq!(te.origins[0], ss.origins[8]);

        let (tr, va, te) = chronological_split(
            &ss,
            &SplitSpec::Fractions { train: 1.0, val: 0.0, test: 0.0 },
        )
        .unwrap();
        assert_eq!((tr.n_rows(), va.n_rows(), te.n_rows()), (10, 0, 0));
        assert!(chronological_split(
            &ss,
            &SplitSpec::Fractions { train: 0.0, val: 0.5, test: 0.5 }
        )
        .is_err());
    }

    #[test]
    fn date_split_buckets_by_origin() {
        let ss = toy(10);
        let spec = SplitSpec::Dates {
            val_start: d0() + chrono::Duration::days(3),
            test_start: d0() + chrono::Duration::days(7),
        };
        let (tr, va, te) = chronological_split(&ss, &spec).unwrap();
        assert_eq!((tr.n_rows(), va.n_rows(), te.n_rows()), (3, 4, 3));
    }

    #[test]
    fn normalizer_stats() {
        let mut ss = toy(3);
        ss.x = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let nz = fit_normalizer(&ss).unwrap();
        assert_eq!(nz.x_mean[0], 2.0);
        assert!((nz.x_std[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(nz.x_std[1], 1.0);
        let n = normalize(&ss, &nz).unwrap();
        assert!(n.x.column(1).iter().all(|v| *v == 0.0));
        assert_eq!(n.x[(1, 0)], 0.0);
        assert!((n.x[(2, 0)] - 1.224744871391589).abs() < 1e-12);
        let back = denormalize(&n, &nz).unwrap();
        assert!((back.x.clone() - ss.x.clone()).abs().max() < 1e-12);
    }

    #[test]
    fn normalize_rejects_other_schema() {
        let ss = toy(3);
        let nz = fit_normalizer(&ss).unwrap();
        let mut other = ss.clone();
        other.x_keys[0].offset = -3;
        assert!(matches!(normalize(&other, &nz), Err(Error::Schema(_))));
    }

    #[test]
    fn column_key_display_roundtrip() {
        for (k, s) in [
            (ColumnKey { well_id: "P1".into(), phase: Phase::Oil, offset: -3 }, "P1_oil_t-3"),
            (ColumnKey { well_id: "I_7".into(), phase: Phase::WaterInj, offset: -1 }, "I_7_water_inj_t-1"),
            (ColumnKey { well_id: "FIELD".into(), phase: Phase::Water, offset: 0 }, "FIELD_water_t"),
            (ColumnKey { well_id: "P1".into(), phase: Phase::GasInj, offset: 2 }, "P1_gas_inj_t+2"),
        ] {
            assert_eq!(k.to_string(), s);
            assert_eq!(ColumnKey::parse(s).unwrap(), k);
        }
    }

    #[test]
    fn insufficient_history() {
        let p = WellRecord::producer("P", d0(), 1, vec![1.0; 4], vec![1.0; 4], vec![1.0; 4]).unwrap();
        let ds = FieldDataset::new(vec![p]).unwrap();
        let cfg = WindowConfig::new(3, 2, Scope::PerWell).unwrap();
        assert!(matches!(
            build_supervised(&ds, &cfg),
            Err(Error::InsufficientHistory { required: 5, available: 4 })
        ));
    }

    fn arb_field() -> impl Strategy<Value = (FieldDataset, usize, usize)> {
        (1usize..4, 0usize..3, 1usize..5, 1usize..4, 0usize..6).prop_flat_map(
            |(np, ni, i, k, extra)| {
                let t = i + k + extra;
                prop::collection::vec(0.0f64..100.0, t * (3 * np + ni)).prop_map(move |v| {
                    let mut it = v.into_iter();
                    let mut take = |n| (0..n).map(|_| it.next().unwrap()).collect::<Vec<f64>>();
                    let mut wells = Vec::new();
                    for p in 0..np {
                        let (o, g, w) = (take(t), take(t), take(t));
                        wells.push(WellRecord::producer(format!("P{p}"), d0(), 1, o, g, w).unwrap());
                    }
                    for j in 0..ni {
                        let phase = if j % 2 == 0 { Phase::WaterInj } else { Phase::GasInj };
                        wells.push(WellRecord::injector(format!("I{j}"), d0(), 1, vec![(phase, take(t))]).unwrap());
                    }
                    (FieldDataset::new(wells).unwrap(), i, k)
                })
            },
        )
    }

    proptest! {
        #[test]
        fn cells_match_addressed_series((ds, i, k) in arb_field()) {
            let cfg = WindowConfig::new(i, k, Scope::PerWell).unwrap();
            let ss = build_supervised(&ds, &cfg).unwrap();
            prop_assert_eq!(ss.n_rows(), ds.n_steps() - i - k + 1);
            let lookup = |key: &ColumnKey, t: usize| {
                let s = ds.well(&key.well_id).unwrap().series(key.phase).unwrap();
                s.values()[(t as i64 + key.offset as i64) as usize]
            };
            for r in 0..ss.n_rows() {
                let t = r + i;
                prop_assert_eq!(ss.origins[r], ds.date_at(t));
                for (c, key) in ss.x_keys.iter().enumerate() {
                    prop_assert!(key.offset < 0);
                    prop_assert_eq!(ss.x[(r, c)], lookup(key, t));
                }
                for (c, key) in ss.y_keys.iter().enumerate() {
                    prop_assert!(!key.phase.is_injection());
                    prop_assert_eq!(ss.y[(r, c)], lookup(key, t));
                }
            }
        }

        #[test]
        fn full_field_cells_are_totals((ds, i, k) in arb_field()) {
            let cfg = WindowConfig::new(i, k, Scope::FullField).unwrap();
            let ss = build_supervised(&ds, &cfg).unwrap();
            prop_assert_eq!(ss.n_inputs(), 5 * i);
            prop_assert_eq!(ss.n_outputs(), 3 * k);
            let totals = ds.field_totals();
            for r in 0..ss.n_rows() {
                let t = r + i;
                for (c, key) in ss.x_keys.iter().enumerate() {
                    prop_assert_eq!(ss.x[(r, c)], totals[&key.phase][(t as i64 + key.offset as i64) as usize]);
                }
            }
        }

        #[test]
        fn train_stats_ignore_later_rows(rows in 4usize..30, bump in 1.0f64..1e3) {
            let ss = toy(rows);
            let spec = SplitSpec::Fractions { train: 0.5, val: 0.25, test: 0.25 };
            let (tr, _, _) = chronological_split(&ss, &spec).unwrap();
            let mut perturbed = ss.clone();
            let n_tr = tr.n_rows();
            for r in n_tr..rows { perturbed.x[(r, 0)] += bump; perturbed.y[(r, 0)] -= bump; }
            let (tr2, va2, te2) = chronological_split(&perturbed, &spec).unwrap();
            prop_assert_eq!(fit_normalizer(&tr).unwrap(), fit_normalizer(&tr2).unwrap());
            if let (Some(a), Some(b)) = (tr2.origins.last(), va2.origins.first()) { prop_assert!(a < b); }
            if let (Some(a), Some(b)) = (va2.origins.last(), te2.origins.first()) { prop_assert!(a < b); }
        }
    }
}
