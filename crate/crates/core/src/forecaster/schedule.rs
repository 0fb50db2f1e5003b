use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::dataset::{FieldDataset, Phase};
use crate::error::{Error, Result};
use crate::windowing::FIELD_ID;

/// Future injection rates per `(well, phase)`; entry `s - 1` is the rate at
/// forecast step `s`, step 1 being the first forecast time.
///
/// The well id `FIELD` may carry field-total rates for full-field models.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InjectionSchedule {
    rates: BTreeMap<(String, Phase), Vec<f64>>,
}

impl InjectionSchedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, well_id: &str, phase: Phase, rates: Vec<f64>) -> Result<()> {
        if !phase.is_injection() {
            return Err(Error::Schema(format!(
                "schedule phase for {well_id} must be an injection phase, got {phase}"
            )));
        }
        if let Some(v) = rates.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "schedule rate {v} for {well_id}/{phase} is not a finite non-negative number"
            )));
        }
        self.rates.insert((well_id.to_string(), phase), rates);
        Ok(())
    }

    pub fn get(&self, well_id: &str, phase: Phase) -> Option<&[f64]> {
        self.rates
            .get(&(well_id.to_string(), phase))
            .map(|v| v.as_slice())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, Phase, &[f64])> + '_ {
        self.rates
            .iter()
            .map(|((w, p), v)| (w.as_str(), *p, v.as_slice()))
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Takes the recorded injection of `ds` over steps `[from, from + len)`,
    /// truncated at the end of the data.
    pub fn from_dataset(ds: &FieldDataset, from: usize, len: usize) -> Self {
        let to = (from + len).min(ds.n_steps());
        let from = from.min(to);
        let mut rates = BTreeMap::new();
        for w in ds.injectors() {
            for (phase, s) in w.all_series() {
                rates.insert(
                    (w.well_id().to_string(), phase),
                    s.values()[from..to].to_vec(),
                );
            }
        }
        Self { rates }
    }

    /// Rate at 1-based forecast step `step`; past the end the last rate is
    /// held when `hold_last` is set.
    pub fn rate_at(&self, well_id: &str, phase: Phase, step: usize, hold_last: bool) -> Result<f64> {
        let v = self.get(well_id, phase).ok_or_else(|| {
            Error::Schema(format!("schedule has no rates for {well_id}/{phase}"))
        })?;
        let exhausted = || Error::ScheduleExhausted {
            well_id: well_id.to_string(),
            phase: phase.as_str().to_string(),
            step,
            len: v.len(),
        };
        match v.get(step - 1) {
            Some(r) => Ok(*r),
            None if hold_last => v.last().copied().ok_or_else(exhausted),
            None => Err(exhausted()),
        }
    }

    /// Field-total rate at `step`, summing the wells of `ds` that carry
    /// `phase` unless the schedule has a `FIELD` entry.
    pub(crate) fn field_rate_at(
        &self,
        ds: &FieldDataset,
        phase: Phase,
        step: usize,
        hold_last: bool,
    ) -> Result<f64> {
        if self.get(FIELD_ID, phase).is_some() {
            return self.rate_at(FIELD_ID, phase, step, hold_last);
        }
        let mut total = 0.0;
        for w in ds.wells().iter().filter(|w| w.series(phase).is_some()) {
            total += self.rate_at(w.well_id(), phase, step, hold_last)?;
        }
        Ok(total)
    }

    /// CSV with columns `step,well_id,phase,rate`; steps start at 1 and must
    /// be contiguous for each well and phase.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::read_csv(f)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("schedule is missing column `{name}`"),
            })
        };
        let (c_step, c_well, c_phase, c_rate) = (col("step")?, col("well_id")?, col("phase")?, col("rate")?);
        let mut raw: BTreeMap<(String, Phase), BTreeMap<usize, f64>> = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            let bad = |message: String| Error::Parse { line, message };
            let step: usize = rec[c_step]
                .parse()
                .ok()
                .filter(|s| *s >= 1)
                .ok_or_else(|| bad(format!("bad step {:?}", &rec[c_step])))?;
            let phase = Phase::parse(&rec[c_phase])
                .filter(|p| p.is_injection())
                .ok_or_else(|| bad(format!("bad injection phase {:?}", &rec[c_phase])))?;
            let rate: f64 = rec[c_rate]
                .parse()
                .ok()
                .filter(|r: &f64| *r >= 0.0 && r.is_finite())
                .ok_or_else(|| bad(format!("bad rate {:?}", &rec[c_rate])))?;
            let slot = raw.entry((rec[c_well].to_string(), phase)).or_default();
            if slot.insert(step, rate).is_some() {
                return Err(bad(format!("duplicate step {step} for {}/{phase}", &rec[c_well])));
            }
        }
        let mut rates = BTreeMap::new();
        for (key, steps) in raw {
            if steps.keys().copied().ne(1..=steps.len()) {
                return Err(Error::Schema(format!(
                    "schedule steps for {}/{} are not contiguous from 1",
                    key.0, key.1
                )));
            }
            rates.insert(key, steps.into_values().collect());
        }
        Ok(Self { rates })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["step", "well_id", "phase", "rate"])?;
        for ((well, phase), v) in &self.rates {
            for (s, r) in v.iter().enumerate() {
                w.write_record([(s + 1).to_string(), well.clone(), phase.to_string(), r.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("schedule csv", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_and_lookup() {
        let text = "step,well_id,phase,rate\n1,I1,water_inj,100\n2,I1,water_inj,150\n1,I2,gas_inj,7\n";
        let s = InjectionSchedule::read_csv(text.as_bytes()).unwrap();
        assert_eq!(s.get("I1", Phase::WaterInj), Some(&[100.0, 150.0][..]));
        assert_eq!(s.rate_at("I1", Phase::WaterInj, 2, false).unwrap(), 150.0);
        assert_eq!(s.rate_at("I1", Phase::WaterInj, 5, true).unwrap(), 150.0);
        assert!(matches!(
            s.rate_at("I1", Phase::WaterInj, 3, false),
            Err(Error::ScheduleExhausted { step: 3, len: 2, .. })
        ));
        let mut out = Vec::new();
        s.write_csv(&mut out).unwrap();
        assert_eq!(InjectionSchedule::read_csv(&out[..]).unwrap(), s);
    }

    #[test]
    fn rejects_bad_rows() {
        for text in [
            "step,well_id,phase,rate\n0,I1,water_inj,1\n",
            "step,well_id,phase,rate\n1,I1,oil,1\n",
            "step,well_id,phase,rate\n1,I1,water_inj,-1\n",
            "step,well_id,phase,rate\n1,I1,water_inj,1\n1,I1,water_inj,2\n",
            "step,well_id,phase,rate\n1,I1,water_inj,1\n3,I1,water_inj,2\n",
            "step,well,phase,rate\n1,I1,water_inj,1\n",
        ] {
            assert!(InjectionSchedule::read_csv(text.as_bytes()).is_err(), "{text}");
        }
    }
}
