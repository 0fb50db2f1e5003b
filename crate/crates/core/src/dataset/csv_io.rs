//! Long-format CSV tables: one row per (date, well).
//!
//! Header: `date,well_id,role,q_o,q_g,q_w,q_wi,q_gi`. The `role` column is
//! optional. Empty rate cells are shut-ins and load as zero.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Duration, NaiveDate};

use super::{FieldDataset, Phase, ProductionTest, RateSeries, WellRecord, WellRole};
use crate::error::{Error, Result};

const RATE_COLUMNS: [(&str, Phase); 5] = [
    ("q_o", Phase::Oil),
    ("q_g", Phase::Gas),
    ("q_w", Phase::Water),
    ("q_wi", Phase::WaterInj),
    ("q_gi", Phase::GasInj),
];

struct RawWell {
    id: String,
    role: Option<WellRole>,
    rows: BTreeMap<NaiveDate, [f64; 5]>,
}

pub fn load_field_table(path: impl AsRef<Path>) -> Result<FieldDataset> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    read_field_table(f)
}

pub fn read_field_table<R: Read>(reader: R) -> Result<FieldDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let date_col = col("date").ok_or_else(|| missing_column("date"))?;
    let well_col = col("well_id").ok_or_else(|| missing_column("well_id"))?;
    let role_col = col("role");
    let rate_cols: Vec<(usize, usize)> = RATE_COLUMNS
        .iter()
        .enumerate()
        .filter_map(|(k, (name, _))| col(name).map(|c| (k, c)))
        .collect();

    let mut order: Vec<RawWell> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let date = parse_date(&record[date_col], line)?;
        let id = record[well_col].to_string();
        if id.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty well_id".into(),
            });
        }
        let mut rates = [0.0; 5];
        for &(k, c) in &rate_cols {
            rates[k] = parse_rate(&record[c], RATE_COLUMNS[k].0, line)?;
        }
        let slot = *index.entry(id.clone()).or_insert_with(|| {
            order.push(RawWell {
                id: id.clone(),
                role: None,
                rows: BTreeMap::new(),
            });
            order.len() - 1
        });
        let well = &mut order[slot];
        if let Some(c) = role_col {
            let cell = &record[c];
            if !cell.is_empty() {
                let role = WellRole::parse(cell).ok_or_else(|| Error::Parse {
                    line,
                    message: format!("unknown role {cell:?}"),
                })?;
                match well.role {
                    Some(r) if r != role => {
                        return Err(Error::Parse {
                            line,
                            message: format!("well {id} changes role to {}", role.as_str()),
                        })
                    }
                    _ => well.role = Some(role),
                }
            }
        }
        if well.rows.insert(date, rates).is_some() {
            return Err(Error::Conflict { well_id: id, date });
        }
    }
    assemble(order)
}

fn assemble(raw: Vec<RawWell>) -> Result<FieldDataset> {
    if raw.is_empty() {
        return Err(Error::Empty("table has no data rows".into()));
    }
    // grid step: the first spacing seen on any multi-row well
    let step = raw
        .iter()
        .find_map(|w| {
            let mut it = w.rows.keys();
            let a = it.next()?;
            let b = it.next()?;
            Some((*b - *a).num_days())
        })
        .unwrap_or(1);
    for w in &raw {
        let mut prev: Option<NaiveDate> = None;
        for &date in w.rows.keys() {
            if let Some(p) = prev {
                if (date - p).num_days() != step {
                    return Err(Error::Grid {
                        well_id: w.id.clone(),
                        missing: p + Duration::days(step),
                    });
                }
            }
            prev = Some(date);
        }
    }
    let start = raw.iter().map(|w| *w.rows.keys().next().unwrap()).min().unwrap();
    let end = raw
        .iter()
        .map(|w| *w.rows.keys().next_back().unwrap())
        .max()
        .unwrap();
    for w in &raw {
        let first = *w.rows.keys().next().unwrap();
        if (first - start).num_days() % step != 0 {
            return Err(Error::Misaligned(format!(
                "well {} starts on {first}, off the {step}-day grid starting {start}",
                w.id
            )));
        }
    }
    let n_steps = ((end - start).num_days() / step + 1) as usize;
    let step_u = u32::try_from(step).map_err(|_| Error::Misaligned("bad grid step".into()))?;

    let mut wells = Vec::with_capacity(raw.len());
    for w in raw {
        let mut columns = vec![vec![0.0; n_steps]; 5];
        for (date, rates) in &w.rows {
            let t = ((*date - start).num_days() / step) as usize;
            for k in 0..5 {
                columns[k][t] = rates[k];
            }
        }
        let nonzero = |k: usize| columns[k].iter().any(|v| *v > 0.0);
        let produces = (0..3).any(nonzero);
        let injects = (3..5).any(nonzero);
        let role = match w.role {
            Some(r) => r,
            None if injects && !produces => WellRole::Injector,
            None if injects && produces => {
                return Err(Error::Schema(format!(
                    "well {} both produces and injects; add a role column",
                    w.id
                )))
            }
            None => WellRole::Producer,
        };
        let mut series = BTreeMap::new();
        match role {
            WellRole::Producer => {
                if injects {
                    return Err(Error::Schema(format!(
                        "producer {} has injection rates",
                        w.id
                    )));
                }
                for k in 0..3 {
                    series.insert(
                        RATE_COLUMNS[k].1,
                        RateSeries::new(start, step_u, std::mem::take(&mut columns[k]))?,
                    );
                }
            }
            WellRole::Injector => {
                if produces {
                    return Err(Error::Schema(format!(
                        "injector {} has production rates",
                        w.id
                    )));
                }
                for k in 3..5 {
                    if nonzero(k) || (k == 3 && !injects) {
                        series.insert(
                            RATE_COLUMNS[k].1,
                            RateSeries::new(start, step_u, columns[k].clone())?,
                        );
                    }
                }
            }
        }
        wells.push(WellRecord::new(w.id, role, series)?);
    }
    FieldDataset::new(wells)
}

fn missing_column(name: &str) -> Error {
    Error::Parse {
        line: 1,
        message: format!("missing column {name}"),
    }
}

fn parse_date(cell: &str, line: usize) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(cell, "%Y-%m-%d").map_err(|e| Error::Parse {
        line,
        message: format!("bad date {cell:?}: {e}"),
    })
}

fn parse_rate(cell: &str, column: &str, line: usize) -> Result<f64> {
    if cell.is_empty() {
        return Ok(0.0);
    }
    let v: f64 = cell.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad {column} value {cell:?}"),
    })?;
    if !v.is_finite() || v < 0.0 {
        return Err(Error::Parse {
            line,
            message: format!("{column} must be a non-negative rate, got {cell}"),
        });
    }
    Ok(v)
}

/// Writes the dataset in the long format it is loaded from.
pub fn write_field_table<W: Write>(ds: &FieldDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "well_id", "role", "q_o", "q_g", "q_w", "q_wi", "q_gi"])?;
    for t in 0..ds.n_steps() {
        let date = ds.date_at(t).format("%Y-%m-%d").to_string();
        for well in ds.wells() {
            let mut row = vec![
                date.clone(),
                well.well_id().to_string(),
                well.role().as_str().to_string(),
            ];
            for (_, phase) in RATE_COLUMNS {
                row.push(
                    well.series(phase)
                        .map(|s| s.values()[t].to_string())
                        .unwrap_or_default(),
                );
            }
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io("csv output", e))?;
    Ok(())
}

pub fn load_production_tests(path: impl AsRef<Path>) -> Result<Vec<ProductionTest>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    read_production_tests(f)
}

/// Reads `date,well_id,q_o,q_g,q_w` production tests, sorted by date.
pub fn read_production_tests<R: Read>(reader: R) -> Result<Vec<ProductionTest>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| missing_column(name))
    };
    let (dc, wc, oc, gc, qc) = (
        col("date")?,
        col("well_id")?,
        col("q_o")?,
        col("q_g")?,
        col("q_w")?,
    );
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        out.push(ProductionTest {
            well_id: record[wc].to_string(),
            date: parse_date(&record[dc], line)?,
            oil: parse_rate(&record[oc], "q_o", line)?,
            gas: parse_rate(&record[gc], "q_g", line)?,
            water: parse_rate(&record[qc], "q_w", line)?,
        });
    }
    out.sort_by_key(|t| t.date);
    Ok(out)
}
