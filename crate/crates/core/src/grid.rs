//! Grid search over conditioning, window and estimator settings.
//!
//! Every point of the Cartesian product of the axes becomes a trial:
//! resample, trim, then walk-forward evaluation. Axes that do not apply to
//! an estimator (alpha for OLS, hidden size for the linear family, ...)
//! still multiply the trial count; such trials share one computation.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{resample_mean, trim_rampup, FieldDataset};
use crate::error::{Error, Result};
use crate::estimators::{Activation, EstimatorSpec, MlpTrainConfig, DEFAULT_LASSO_MAX_ITER, DEFAULT_LASSO_TOL};
use crate::forecaster::{run_rolling_evaluation, RollingConfig, TrainingPolicy};
use crate::metrics::{Metric, MetricsReport};
use crate::windowing::{Scope, WindowConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorFamily {
    Ols,
    Ridge,
    Lasso,
    Mlp,
}

impl EstimatorFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorFamily::Ols => "ols",
            EstimatorFamily::Ridge => "ridge",
            EstimatorFamily::Lasso => "lasso",
            EstimatorFamily::Mlp => "mlp",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Incremental,
    /// Slides a training window as long as the minimum training window.
    Fixed,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Incremental => "incremental",
            PolicyKind::Fixed => "fixed",
        }
    }
}

/// Axis values to sweep. Durations are in days and are converted to steps
/// of each trial's sampling period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub sampling_days: Vec<usize>,
    pub look_back: Vec<usize>,
    pub estimator: Vec<EstimatorFamily>,
    pub alpha: Vec<f64>,
    pub hidden_size: Vec<usize>,
    pub activation: Vec<Activation>,
    pub min_train_days: Vec<usize>,
    pub policy: Vec<PolicyKind>,
    pub cadence_days: Vec<usize>,
    pub horizon_days: usize,
    pub scope: Scope,
    pub val_fraction: f64,
    pub mlp: MlpTrainConfig,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            sampling_days: vec![5, 10, 20],
            look_back: vec![10, 15, 25],
            estimator: vec![EstimatorFamily::Ols, EstimatorFamily::Ridge, EstimatorFamily::Lasso],
            alpha: vec![0.0, 0.05, 0.2, 0.4, 0.6],
            hidden_size: vec![10, 20, 40, 70],
            activation: vec![Activation::Relu],
            min_train_days: vec![1095],
            policy: vec![PolicyKind::Incremental],
            cadence_days: vec![365],
            horizon_days: 180,
            scope: Scope::FullField,
            val_fraction: 0.1,
            mlp: MlpTrainConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridAxis {
    SamplingDays,
    LookBack,
    Estimator,
    Alpha,
    HiddenSize,
    Activation,
    MinTrainDays,
    Policy,
    CadenceDays,
}

impl GridAxis {
    pub const ALL: [GridAxis; 9] = [
        GridAxis::SamplingDays,
        GridAxis::LookBack,
        GridAxis::Estimator,
        GridAxis::Alpha,
        GridAxis::HiddenSize,
        GridAxis::Activation,
        GridAxis::MinTrainDays,
        GridAxis::Policy,
        GridAxis::CadenceDays,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GridAxis::SamplingDays => "sampling_days",
            GridAxis::LookBack => "look_back",
            GridAxis::Estimator => "estimator",
            GridAxis::Alpha => "alpha",
            GridAxis::HiddenSize => "hidden_size",
            GridAxis::Activation => "activation",
            GridAxis::MinTrainDays => "min_train_days",
            GridAxis::Policy => "policy",
            GridAxis::CadenceDays => "cadence_days",
        }
    }
}

impl fmt::Display for GridAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One point of the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub sampling_days: usize,
    pub look_back: usize,
    pub estimator: EstimatorFamily,
    pub alpha: f64,
    pub hidden_size: usize,
    pub activation: Activation,
    pub min_train_days: usize,
    pub policy: PolicyKind,
    pub cadence_days: usize,
}

impl TrialConfig {
    pub fn axis_value(&self, axis: GridAxis) -> String {
        match axis {
            GridAxis::SamplingDays => self.sampling_days.to_string(),
            GridAxis::LookBack => self.look_back.to_string(),
            GridAxis::Estimator => self.estimator.as_str().to_string(),
            GridAxis::Alpha => self.alpha.to_string(),
            GridAxis::HiddenSize => self.hidden_size.to_string(),
            GridAxis::Activation => self.activation.as_str().to_string(),
            GridAxis::MinTrainDays => self.min_train_days.to_string(),
            GridAxis::Policy => self.policy.as_str().to_string(),
            GridAxis::CadenceDays => self.cadence_days.to_string(),
        }
    }

    fn estimator_spec(&self, grid: &GridSpec, seed: u64) -> EstimatorSpec {
        match self.estimator {
            EstimatorFamily::Ols => EstimatorSpec::Ols,
            EstimatorFamily::Ridge => EstimatorSpec::Ridge { alpha: self.alpha },
            EstimatorFamily::Lasso => EstimatorSpec::Lasso {
                alpha: self.alpha,
                tol: DEFAULT_LASSO_TOL,
                max_iter: DEFAULT_LASSO_MAX_ITER,
            },
            EstimatorFamily::Mlp => EstimatorSpec::Mlp {
                hidden_size: self.hidden_size,
                activation: self.activation,
                train: MlpTrainConfig {
                    seed,
                    ..grid.mlp.clone()
                },
            },
        }
    }

    /// Identifies the computation a trial actually performs.
    pub fn effective_key(&self) -> String {
        let est = match self.estimator {
            EstimatorFamily::Ols => "ols".to_string(),
            EstimatorFamily::Ridge | EstimatorFamily::Lasso => {
                format!("{}(alpha={})", self.estimator.as_str(), self.alpha)
            }
            EstimatorFamily::Mlp => format!("mlp(hidden={},activation={})", self.hidden_size, self.activation.as_str()),
        };
        format!(
            "sampling={} look_back={} {est} min_train={} policy={} cadence={}",
            self.sampling_days,
            self.look_back,
            self.min_train_days,
            self.policy.as_str(),
            self.cadence_days
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialOutcome {
    /// Round-averaged metrics.
    Completed { metrics: MetricsReport, rounds: usize },
    Failed { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub index: usize,
    pub config: TrialConfig,
    pub outcome: TrialOutcome,
}

impl TrialResult {
    pub fn metrics(&self) -> Option<&MetricsReport> {
        match &self.outcome {
            TrialOutcome::Completed { metrics, .. } => Some(metrics),
            TrialOutcome::Failed { .. } => None,
        }
    }
}

/// Mean metrics of the completed trials sharing one axis value.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalMean {
    pub value: String,
    pub completed: usize,
    pub means: BTreeMap<Metric, f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridReport {
    pub trials: Vec<TrialResult>,
}

impl GridReport {
    pub fn completed(&self) -> impl Iterator<Item = &TrialResult> + '_ {
        self.trials.iter().filter(|t| t.metrics().is_some())
    }

    /// Argmin over completed trials, argmax for R²; NaN scores are skipped
    /// and ties go to the lower trial index.
    pub fn best_by(&self, metric: Metric) -> Option<&TrialResult> {
        let score = |t: &TrialResult| {
            let v = metric.of(t.metrics().expect("completed"));
            if metric.higher_is_better() {
                -v
            } else {
                v
            }
        };
        self.completed()
            .filter(|t| !score(t).is_nan())
            .fold(None, |best: Option<&TrialResult>, t| match best {
                Some(b) if score(b) <= score(t) => Some(b),
                _ => Some(t),
            })
    }

    /// Per-value means along `axis`, in order of first appearance.
    pub fn marginal_means(&self, axis: GridAxis) -> Vec<MarginalMean> {
        let mut order: Vec<String> = Vec::new();
        let mut groups: BTreeMap<String, Vec<&MetricsReport>> = BTreeMap::new();
        for t in &self.trials {
            let v = t.config.axis_value(axis);
            if !order.contains(&v) {
                order.push(v.clone());
            }
            let g = groups.entry(v).or_default();
            if let Some(m) = t.metrics() {
                g.push(m);
            }
        }
        order
            .into_iter()
            .map(|value| {
                let g = &groups[&value];
                let means = Metric::ALL
                    .iter()
                    .map(|m| {
                        let vals: Vec<f64> = g.iter().map(|r| m.of(r)).filter(|v| !v.is_nan()).collect();
                        let mean = if vals.is_empty() {
                            f64::NAN
                        } else {
                            vals.iter().sum::<f64>() / vals.len() as f64
                        };
                        (*m, mean)
                    })
                    .collect();
                MarginalMean {
                    value,
                    completed: g.len(),
                    means,
                }
            })
            .collect()
    }

    /// One row per trial: axis values, status, round count, metrics, reason.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["trial"];
        header.extend(GridAxis::ALL.iter().map(|a| a.as_str()));
        header.extend(["status", "rounds"]);
        header.extend(Metric::ALL.iter().map(|m| m.as_str()));
        header.push("reason");
        w.write_record(&header)?;
        for t in &self.trials {
            let mut row = vec![t.index.to_string()];
            row.extend(GridAxis::ALL.iter().map(|a| t.config.axis_value(*a)));
            match &t.outcome {
                TrialOutcome::Completed { metrics, rounds } => {
                    row.extend(["ok".to_string(), rounds.to_string()]);
                    row.extend(Metric::ALL.iter().map(|m| m.of(metrics).to_string()));
                    row.push(String::new());
                }
                TrialOutcome::Failed { reason } => {
                    row.extend(["failed".to_string(), String::new()]);
                    row.extend(Metric::ALL.iter().map(|_| String::new()));
                    row.push(reason.clone());
                }
            }
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("grid csv", e))
    }

    pub fn write_marginals_csv<W: Write>(&self, axis: GridAxis, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![axis.as_str(), "completed"];
        header.extend(Metric::ALL.iter().map(|m| m.as_str()));
        w.write_record(&header)?;
        for m in self.marginal_means(axis) {
            let mut row = vec![m.value.clone(), m.completed.to_string()];
            row.extend(Metric::ALL.iter().map(|k| m.means[k].to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("marginal csv", e))
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("sampling_days", self.sampling_days.is_empty()),
            ("look_back", self.look_back.is_empty()),
            ("estimator", self.estimator.is_empty()),
            ("alpha", self.alpha.is_empty()),
            ("hidden_size", self.hidden_size.is_empty()),
            ("activation", self.activation.is_empty()),
            ("min_train_days", self.min_train_days.is_empty()),
            ("policy", self.policy.is_empty()),
            ("cadence_days", self.cadence_days.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::InvalidArgument(format!("grid axis `{name}` is empty")));
        }
        if self.horizon_days == 0 {
            return Err(Error::InvalidArgument("horizon_days must be >= 1".into()));
        }
        Ok(())
    }

    pub fn n_trials(&self) -> usize {
        self.sampling_days.len()
            * self.look_back.len()
            * self.estimator.len()
            * self.alpha.len()
            * self.hidden_size.len()
            * self.activation.len()
            * self.min_train_days.len()
            * self.policy.len()
            * self.cadence_days.len()
    }

    /// All trial configs, last axis varying fastest.
    pub fn trials(&self) -> Vec<TrialConfig> {
        let mut out = Vec::with_capacity(self.n_trials());
        for &sampling_days in &self.sampling_days {
            for &look_back in &self.look_back {
                for &estimator in &self.estimator {
                    for &alpha in &self.alpha {
                        for &hidden_size in &self.hidden_size {
                            for &activation in &self.activation {
                                for &min_train_days in &self.min_train_days {
                                    for &policy in &self.policy {
                                        for &cadence_days in &self.cadence_days {
                                            out.push(TrialConfig {
                                                sampling_days,
                                                look_back,
                                                estimator,
                                                alpha,
                                                hidden_size,
                                                activation,
                                                min_train_days,
                                                policy,
                                                cadence_days,
                                            });
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn days_to_steps(days: usize, sampling: usize, what: &str) -> Result<usize> {
    let steps = days / sampling;
    if steps == 0 {
        return Err(Error::InvalidArgument(format!(
            "{what} of {days} days is shorter than the {sampling}-day sampling period"
        )));
    }
    Ok(steps)
}

fn run_trial(ds: &FieldDataset, grid: &GridSpec, cfg: &TrialConfig, seed: u64) -> Result<TrialOutcome> {
    let min_train = days_to_steps(cfg.min_train_days, cfg.sampling_days, "min_train")?;
    let rolling = RollingConfig {
        window: WindowConfig::new(cfg.look_back, 1, grid.scope)?,
        min_train_steps: min_train,
        cadence_steps: days_to_steps(cfg.cadence_days, cfg.sampling_days, "cadence")?,
        horizon_steps: days_to_steps(grid.horizon_days, cfg.sampling_days, "horizon")?,
        policy: match cfg.policy {
            PolicyKind::Incremental => TrainingPolicy::Incremental,
            PolicyKind::Fixed => TrainingPolicy::Fixed { window_steps: min_train },
        },
        val_fraction: grid.val_fraction,
    };
    let report = run_rolling_evaluation(ds, &rolling, &cfg.estimator_spec(grid, seed))?;
    Ok(TrialOutcome::Completed {
        metrics: report.mean_metrics(),
        rounds: report.rounds.len(),
    })
}

/// Runs every trial of `grid` on `ds` in parallel. Infeasible trials are
/// recorded as failed; the sweep itself fails only if the grid is invalid.
pub fn grid_search(ds: &FieldDataset, grid: &GridSpec) -> Result<GridReport> {
    grid.validate()?;
    let configs = grid.trials();

    let mut conditioned: BTreeMap<usize, std::result::Result<FieldDataset, String>> = BTreeMap::new();
    for &s in &grid.sampling_days {
        conditioned.entry(s).or_insert_with(|| {
            if s == 0 {
                return Err("sampling period must be >= 1 day".to_string());
            }
            let step = ds.step_days() as usize;
            if s % step != 0 {
                return Err(format!("sampling of {s} days is not a multiple of the {step}-day data step"));
            }
            resample_mean(ds, s / step)
                .and_then(|r| trim_rampup(&r, None))
                .map_err(|e| e.to_string())
        });
    }

    let mut unique: BTreeMap<String, &TrialConfig> = BTreeMap::new();
    for c in &configs {
        unique.entry(c.effective_key()).or_insert(c);
    }
    let outcomes: BTreeMap<String, TrialOutcome> = unique
        .par_iter()
        .map(|(key, cfg)| {
            let seed = grid.seed ^ fnv1a(key);
            let outcome = match &conditioned[&cfg.sampling_days] {
                Err(reason) => TrialOutcome::Failed { reason: reason.clone() },
                Ok(d) => run_trial(d, grid, cfg, seed).unwrap_or_else(|e| TrialOutcome::Failed {
                    reason: e.to_string(),
                }),
            };
            if let TrialOutcome::Failed { reason } = &outcome {
                log::warn!("trial {key} failed: {reason}");
            }
            (key.clone(), outcome)
        })
        .collect();

    Ok(GridReport {
        trials: configs
            .into_iter()
            .enumerate()
            .map(|(index, config)| TrialResult {
                index,
                outcome: outcomes[&config.effective_key()].clone(),
                config,
            })
            .collect(),
    })
}
