//! Synthetic injection-driven fields.
//!
//! Producer oil is an Arps base decline plus a linear response to lagged
//! injection:
//!
//! ```text
//! q_o,p(t) = Arps_p(t) + Σ_j g[p,j] · inj_j(t − lag[p,j])
//! inj_j    = q_wi,j + gas_voidage · q_gi,j
//! ```
//!
//! Gas is `GOR_p · q_o,p` plus a breakthrough share of the same lagged gas
//! injection, and water follows a logistic water cut of the liquid rate.
//! An optional saturation `s·tanh(c/s)` bends the coupling term `c`, and
//! multiplicative Gaussian noise is applied last. Rates are clamped at zero.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{FieldDataset, Phase, WellRecord};
use crate::decline::{arps_rate, ArpsParams};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthProducer {
    pub id: String,
    /// Arps initial rate, per day.
    pub q_i: f64,
    /// Arps initial decline, per day.
    pub d_i: f64,
    pub b: f64,
    /// Step at which the well opens; it produces nothing before.
    #[serde(default)]
    pub open_step: usize,
    pub gor: f64,
    /// Logistic water cut `wc_max / (1 + exp(−rate·(t − mid)))`, with `t`
    /// in days since opening. A zero rate gives a constant `wc_max / 2`.
    pub water_cut_max: f64,
    #[serde(default)]
    pub water_cut_rate: f64,
    #[serde(default)]
    pub water_cut_mid: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectorKind {
    Water,
    Gas,
    /// Water-alternating-gas; carries both injection phases.
    Wag,
}

/// From `step` on, the injector runs at these rates until the next change.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionChange {
    pub step: usize,
    #[serde(default)]
    pub water: f64,
    #[serde(default)]
    pub gas: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthInjector {
    pub id: String,
    pub kind: InjectorKind,
    /// Piecewise-constant program; rates are zero before the first change.
    pub program: Vec<InjectionChange>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    pub start_date: NaiveDate,
    pub step_days: u32,
    pub n_steps: usize,
    pub producers: Vec<SynthProducer>,
    pub injectors: Vec<SynthInjector>,
    /// `gains[p][j]`, oil response of producer `p` to injector `j`.
    pub gains: Vec<Vec<f64>>,
    /// `lags[p][j]` in steps.
    pub lags: Vec<Vec<usize>>,
    #[serde(default = "default_gas_voidage")]
    pub gas_voidage: f64,
    #[serde(default)]
    pub gas_breakthrough: f64,
    /// Relative standard deviation of multiplicative noise.
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub saturation: Option<f64>,
}

fn default_gas_voidage() -> f64 {
    0.005
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.step_days == 0 || self.n_steps == 0 {
            return bad("step_days and n_steps must be >= 1".into());
        }
        if self.producers.is_empty() {
            return bad("at least one producer is required".into());
        }
        let (np, nj) = (self.producers.len(), self.injectors.len());
        if self.gains.len() != np || self.gains.iter().any(|r| r.len() != nj) {
            return bad(format!("gains must be {np} x {nj}"));
        }
        if self.lags.len() != np || self.lags.iter().any(|r| r.len() != nj) {
            return bad(format!("lags must be {np} x {nj}"));
        }
        if self.gains.iter().flatten().any(|g| !g.is_finite()) {
            return bad("gains must be finite".into());
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return bad(format!("noise must be >= 0, got {}", self.noise));
        }
        if !(self.gas_voidage >= 0.0) || !(self.gas_breakthrough >= 0.0) {
            return bad("gas_voidage and gas_breakthrough must be >= 0".into());
        }
        if let Some(s) = self.saturation {
            if !(s > 0.0) {
                return bad(format!("saturation must be > 0, got {s}"));
            }
        }
        let mut ids = BTreeSet::new();
        for p in &self.producers {
            ArpsParams::new(p.q_i, p.d_i, p.b)?;
            if !(p.gor >= 0.0) || !(0.0..1.0).contains(&p.water_cut_max) || !p.water_cut_rate.is_finite() {
                return bad(format!("producer {} needs gor >= 0 and 0 <= water_cut_max < 1", p.id));
            }
            if !ids.insert(p.id.as_str()) {
                return bad(format!("duplicate well id {}", p.id));
            }
        }
        for inj in &self.injectors {
            if !ids.insert(inj.id.as_str()) {
                return bad(format!("duplicate well id {}", inj.id));
            }
            let mut steps = BTreeSet::new();
            for c in &inj.program {
                if !steps.insert(c.step) {
                    return bad(format!("injector {} changes twice at step {}", inj.id, c.step));
                }
                if !(c.water >= 0.0) || !(c.gas >= 0.0) {
                    return bad(format!("injector {} has a negative rate", inj.id));
                }
                if (c.water > 0.0 && inj.kind == InjectorKind::Gas) || (c.gas > 0.0 && inj.kind == InjectorKind::Water) {
                    return bad(format!("injector {} injects a phase it does not carry", inj.id));
                }
            }
        }
        Ok(())
    }

    /// Six producers and seven injectors (four water, two gas, one WAG)
    /// over ten years of daily data with several injection strategy
    /// changes, mild coupling saturation and 2 % noise.
    pub fn desk_scale(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f1e1d);
        let n_steps = 3650;
        let producers = (0..6)
            .map(|p| SynthProducer {
                id: format!("P{}", p + 1),
                q_i: rng.random_range(800.0..1500.0),
                d_i: rng.random_range(0.0006..0.0012),
                b: rng.random_range(0.2..0.8),
                open_step: rng.random_range(0..60),
                gor: rng.random_range(150.0..250.0),
                water_cut_max: rng.random_range(0.6..0.85),
                water_cut_rate: 0.004,
                water_cut_mid: rng.random_range(1500.0..2500.0),
            })
            .collect();
        let kinds = [
            InjectorKind::Water,
            InjectorKind::Water,
            InjectorKind::Water,
            InjectorKind::Water,
            InjectorKind::Gas,
            InjectorKind::Gas,
            InjectorKind::Wag,
        ];
        let injectors = kinds
            .iter()
            .enumerate()
            .map(|(j, kind)| {
                let mut step = rng.random_range(60..120);
                let mut program = Vec::new();
                let mut k = 0;
                while step < n_steps {
                    let water_on = match kind {
                        InjectorKind::Water => true,
                        InjectorKind::Gas => false,
                        InjectorKind::Wag => k % 2 == 0,
                    };
                    let level = rng.random_range(0.5..1.0);
                    program.push(InjectionChange {
                        step,
                        water: if water_on { 3000.0 * level } else { 0.0 },
                        gas: if water_on { 0.0 } else { 5e5 * level },
                    });
                    step += rng.random_range(300..800);
                    k += 1;
                }
                SynthInjector {
                    id: format!("I{}", j + 1),
                    kind: *kind,
                    program,
                }
            })
            .collect();
        let gains = (0..6)
            .map(|_| (0..7).map(|_| rng.random_range(0.01..0.05)).collect())
            .collect();
        let lags = (0..6)
            .map(|_| (0..7).map(|_| rng.random_range(5..40)).collect())
            .collect();
        SynthSpec {
            seed,
            start_date: NaiveDate::from_ymd_opt(2010, 1, 1).expect("valid date"),
            step_days: 1,
            n_steps,
            producers,
            injectors,
            gains,
            lags,
            gas_voidage: default_gas_voidage(),
            gas_breakthrough: 0.05,
            noise: 0.02,
            saturation: Some(800.0),
        }
    }
}

fn program_rates(inj: &SynthInjector, n_steps: usize) -> (Vec<f64>, Vec<f64>) {
    let mut changes = inj.program.clone();
    changes.sort_by_key(|c| c.step);
    let mut water = vec![0.0; n_steps];
    let mut gas = vec![0.0; n_steps];
    for (k, c) in changes.iter().enumerate() {
        let end = changes.get(k + 1).map_or(n_steps, |n| n.step.min(n_steps));
        for t in c.step.min(n_steps)..end {
            water[t] = c.water;
            gas[t] = c.gas;
        }
    }
    (water, gas)
}

/// Deterministic for a given spec, seed included.
pub fn generate_field(spec: &SynthSpec) -> Result<FieldDataset> {
    spec.validate()?;
    let n = spec.n_steps;
    let dt = spec.step_days as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let programs: Vec<(Vec<f64>, Vec<f64>)> = spec.injectors.iter().map(|i| program_rates(i, n)).collect();
    let drive: Vec<Vec<f64>> = programs
        .iter()
        .map(|(w, g)| w.iter().zip(g).map(|(w, g)| w + spec.gas_voidage * g).collect())
        .collect();

    let mut wells = Vec::with_capacity(spec.producers.len() + spec.injectors.len());
    let noisy = |v: f64, rng: &mut ChaCha8Rng| {
        let e: f64 = StandardNormal.sample(rng);
        (v * (1.0 + spec.noise * e)).max(0.0)
    };
    let mut oils = vec![vec![0.0; n]; spec.producers.len()];
    let mut gases = vec![vec![0.0; n]; spec.producers.len()];
    let mut waters = vec![vec![0.0; n]; spec.producers.len()];
    for t in 0..n {
        for (p, prod) in spec.producers.iter().enumerate() {
            let (mut oil, mut gas, mut water) = (0.0, 0.0, 0.0);
            if t >= prod.open_step {
                let days = (t - prod.open_step) as f64 * dt;
                let base = arps_rate(
                    &ArpsParams {
                        q_i: prod.q_i,
                        d_i: prod.d_i,
                        b: prod.b,
                    },
                    days,
                );
                let mut coupling = 0.0;
                let mut gas_in = 0.0;
                for j in 0..spec.injectors.len() {
                    let lag = spec.lags[p][j];
                    if t >= lag {
                        coupling += spec.gains[p][j] * drive[j][t - lag];
                        gas_in += spec.gains[p][j] * programs[j].1[t - lag];
                    }
                }
                if let Some(s) = spec.saturation {
                    coupling = s * (coupling / s).tanh();
                }
                oil = (base + coupling).max(0.0);
                gas = prod.gor * oil + spec.gas_breakthrough * gas_in;
                let wc = prod.water_cut_max / (1.0 + (-prod.water_cut_rate * (days - prod.water_cut_mid)).exp());
                water = oil * wc / (1.0 - wc);
            }
            oils[p][t] = noisy(oil, &mut rng);
            gases[p][t] = noisy(gas, &mut rng);
            waters[p][t] = noisy(water, &mut rng);
        }
    }
    for (p, prod) in spec.producers.iter().enumerate() {
        wells.push(WellRecord::producer(
            &prod.id,
            spec.start_date,
            spec.step_days,
            std::mem::take(&mut oils[p]),
            std::mem::take(&mut gases[p]),
            std::mem::take(&mut waters[p]),
        )?);
    }
    for (inj, (water, gas)) in spec.injectors.iter().zip(programs) {
        let phases = match inj.kind {
            InjectorKind::Water => vec![(Phase::WaterInj, water)],
            InjectorKind::Gas => vec![(Phase::GasInj, gas)],
            InjectorKind::Wag => vec![(Phase::WaterInj, water), (Phase::GasInj, gas)],
        };
        wells.push(WellRecord::injector(&inj.id, spec.start_date, spec.step_days, phases)?);
    }
    FieldDataset::new(wells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decline::fit_arps;
    use proptest::prelude::*;

    fn single(gain: f64, lag: usize) -> SynthSpec {
        SynthSpec {
            seed: 7,
            start_date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            step_days: 1,
            n_steps: 100,
            producers: vec![SynthProducer {
                id: "P1".into(),
                q_i: 500.0,
                d_i: 0.01,
                b: 0.5,
                open_step: 0,
                gor: 100.0,
                water_cut_max: 0.5,
                water_cut_rate: 0.05,
                water_cut_mid: 50.0,
            }],
            injectors: vec![SynthInjector {
                id: "I1".into(),
                kind: InjectorKind::Water,
                program: vec![InjectionChange {
                    step: 50,
                    water: 1000.0,
                    gas: 0.0,
                }],
            }],
            gains: vec![vec![gain]],
            lags: vec![vec![lag]],
            gas_voidage: 0.005,
            gas_breakthrough: 0.0,
            noise: 0.0,
            saturation: None,
        }
    }

    fn oil(ds: &FieldDataset) -> Vec<f64> {
        ds.well("P1").unwrap().series(Phase::Oil).unwrap().values().to_vec()
    }

    #[test]
    fn injection_step_response() {
        let coupled = oil(&generate_field(&single(0.1, 2)).unwrap());
        let decline = oil(&generate_field(&single(0.0, 2)).unwrap());
        assert_eq!(coupled[51], decline[51]);
        assert!((coupled[52] - decline[52] - 100.0).abs() < 1e-9);
        let inj = generate_field(&single(0.1, 2)).unwrap();
        let wi = inj.well("I1").unwrap().series(Phase::WaterInj).unwrap().values().to_vec();
        assert_eq!((wi[49], wi[50], wi[99]), (0.0, 1000.0, 1000.0));
    }

    #[test]
    fn uncoupled_producer_is_a_pure_decline() {
        let ds = generate_field(&single(0.0, 0)).unwrap();
        let fit = fit_arps(ds.well("P1").unwrap().series(Phase::Oil).unwrap()).unwrap();
        assert!((fit.params.q_i / 500.0 - 1.0).abs() < 1e-3);
        assert!((fit.params.d_i / 0.01 - 1.0).abs() < 1e-3);
        assert!((fit.params.b / 0.5 - 1.0).abs() < 1e-2);
    }

    #[test]
    fn gas_and_water_follow_oil() {
        let ds = generate_field(&single(0.1, 2)).unwrap();
        let w = ds.well("P1").unwrap();
        let o = w.series(Phase::Oil).unwrap().values();
        let g = w.series(Phase::Gas).unwrap().values();
        let wa = w.series(Phase::Water).unwrap().values();
        assert!((g[10] - 100.0 * o[10]).abs() < 1e-9);
        assert!((wa[50] - o[50] * 0.25 / 0.75).abs() < 1e-9);
    }

    #[test]
    fn desk_scale_shape() {
        let spec = SynthSpec::desk_scale(3);
        spec.validate().unwrap();
        let ds = generate_field(&spec).unwrap();
        assert_eq!(ds.producers().count(), 6);
        assert_eq!(ds.injectors().count(), 7);
        assert_eq!(ds.n_steps(), 3650);
        assert_eq!(ds, generate_field(&spec).unwrap());
        assert_ne!(ds, generate_field(&SynthSpec::desk_scale(4)).unwrap());
    }

    #[test]
    fn rejects_invalid_specs() {
        let mut s = single(0.1, 2);
        s.noise = -0.1;
        assert!(generate_field(&s).is_err());
        let mut s = single(f64::NAN, 2);
        s.noise = 0.0;
        assert!(generate_field(&s).is_err());
        let mut s = single(0.1, 2);
        s.gains = vec![vec![0.1, 0.2]];
        assert!(generate_field(&s).is_err());
        let mut s = single(0.1, 2);
        s.injectors[0].program[0].gas = 5.0;
        assert!(generate_field(&s).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn coupling_is_causal(change in 10usize..90, lag in 0usize..8, bump in 1.0f64..500.0, noise in 0.0f64..0.1) {
            prop_assume!(change != 50);
            let mut base = single(0.1, lag);
            base.noise = noise;
            let mut moved = base.clone();
            moved.injectors[0].program.push(InjectionChange { step: change, water: bump, gas: 0.0 });
            let a = generate_field(&base).unwrap();
            let b = generate_field(&moved).unwrap();
            let first = change + lag;
            for phase in Phase::PRODUCED {
                let x = a.well("P1").unwrap().series(phase).unwrap().values();
                let y = b.well("P1").unwrap().series(phase).unwrap().values();
                prop_assert_eq!(&x[..first.min(100)], &y[..first.min(100)]);
            }
        }
    }
}
