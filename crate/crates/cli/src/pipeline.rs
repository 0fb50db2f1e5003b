//! Runs the selected stages against one output directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use wellcast_core::dataset::{
    load_field_table, load_production_tests, resample_mean, smooth_injectors, trim_rampup, with_potential,
    write_field_table, FieldDataset, Phase, RateSeries,
};
use wellcast_core::decline::{fit_arps, forecast_arps};
use wellcast_core::estimators::{train_on_dataset, TrainedModel};
use wellcast_core::forecaster::{
    backtest, forecast_recursive, run_rolling_evaluation, InjectionSchedule, RollingConfig, RollingReport,
    TrainingPolicy,
};
use wellcast_core::grid::{grid_search, EstimatorFamily, GridAxis, GridReport, PolicyKind};
use wellcast_core::metrics::{radar_normalize, Metric, MetricsReport};
use wellcast_core::synth::generate_field;
use wellcast_core::windowing::{build_supervised, chronological_split, SplitSpec, FIELD_ID};

use crate::artifacts::{Artifacts, Manifest};
use crate::config::{RunConfig, Source, Stage};
use crate::error::CliError;
use crate::plots::{bar_chart, color, line_chart, radar_chart, LineSeries, Marker};

/// Metrics shown on the radar chart; R² is left out because it is not a
/// non-negative error.
pub const RADAR_METRICS: [Metric; 5] = [Metric::Smape, Metric::Mape, Metric::Rmse, Metric::Mae, Metric::Mse];

pub struct Run {
    cfg: RunConfig,
    arts: Artifacts,
    raw: Option<FieldDataset>,
    prepared: Option<FieldDataset>,
    conditioned: Option<FieldDataset>,
    model: Option<TrainedModel>,
    warnings: Vec<String>,
}

fn metrics_header() -> Vec<&'static str> {
    Metric::ALL.iter().map(|m| m.as_str()).collect()
}

fn metrics_cells(m: &MetricsReport) -> Vec<String> {
    Metric::ALL.iter().map(|k| k.of(m).to_string()).collect()
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn days_to_steps(days: usize, sampling: usize, what: &str) -> Result<usize, CliError> {
    let steps = days / sampling;
    if steps == 0 {
        return Err(CliError::Config(format!(
            "{what} of {days} days is shorter than the {sampling}-day sampling period"
        )));
    }
    Ok(steps)
}

/// Executes `cfg.stages` in order. On failure the manifest records the
/// failing stage and every artifact written up to that point.
pub fn execute(cfg: RunConfig, command: &str) -> Result<(), CliError> {
    let arts = Artifacts::new(&cfg.output_dir)?;
    let mut run = Run {
        cfg,
        arts,
        raw: None,
        prepared: None,
        conditioned: None,
        model: None,
        warnings: Vec::new(),
    };
    for w in &run.cfg.warnings {
        log::warn!("{w}");
    }
    let stages = run.cfg.stages.clone();
    let mut done = Vec::new();
    let mut failure = None;
    for stage in stages {
        log::info!("stage {}", stage.as_str());
        match run.stage(stage) {
            Ok(()) => done.push(stage.as_str().to_string()),
            Err(e) => {
                failure = Some((stage, e));
                break;
            }
        }
    }
    run.write_log(command, failure.as_ref())?;
    let manifest = Manifest {
        command: command.to_string(),
        seed: run.cfg.seed,
        status: if failure.is_some() { "failed" } else { "ok" }.into(),
        exit_code: failure.as_ref().map_or(0, |f| f.1.exit_code()),
        stages_completed: done,
        failed_stage: failure.as_ref().map(|f| f.0.as_str().to_string()),
        error: failure.as_ref().map(|f| f.1.to_string()),
        files: Vec::new(),
    };
    run.arts.write_manifest(manifest)?;
    match failure {
        Some((_, e)) => Err(e),
        None => Ok(()),
    }
}

impl Run {
    fn write_log(&mut self, command: &str, failure: Option<&(Stage, CliError)>) -> Result<(), CliError> {
        let mut s = String::new();
        let _ = writeln!(s, "command: {command}");
        let _ = writeln!(s, "seed: {}", self.cfg.seed);
        let stages: Vec<&str> = self.cfg.stages.iter().map(|s| s.as_str()).collect();
        let _ = writeln!(s, "stages: {}", stages.join(","));
        let _ = writeln!(s, "estimator: {}", self.cfg.estimator.descriptor());
        for d in &self.cfg.defaults_applied {
            let _ = writeln!(s, "default: {d}");
        }
        for w in self.cfg.warnings.iter().chain(&self.warnings) {
            let _ = writeln!(s, "warning: {w}");
        }
        if let Some((stage, e)) = failure {
            let _ = writeln!(s, "failed: {} ({e})", stage.as_str());
        }
        self.arts.write("run.log", s.as_bytes())
    }

    fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }

    fn stage(&mut self, stage: Stage) -> Result<(), CliError> {
        match stage {
            Stage::Synth => self.synth(),
            Stage::Condition => {
                let ds = self.conditioned()?.clone();
                self.arts.write_with("conditioned.csv", |b| write_field_table(&ds, b))
            }
            Stage::Reshape => self.reshape(),
            Stage::Train => self.train(),
            Stage::Forecast => self.forecast(),
            Stage::Evaluate => self.evaluate(),
            Stage::GridSearch => self.gridsearch(),
            Stage::Decline => self.decline(),
            Stage::Plot => self.plot(),
        }
    }

    fn raw(&mut self) -> Result<&FieldDataset, CliError> {
        if self.raw.is_none() {
            let ds = match &self.cfg.input.source {
                Some(Source::File(p)) => {
                    load_field_table(p).map_err(|e| CliError::context(e, format!("dataset {}", p.display())))?
                }
                Some(Source::Synth) => generate_field(&self.cfg.synth).map_err(|e| CliError::context(e, "synth"))?,
                None => return Err(CliError::Config("missing required key `input.dataset`".into())),
            };
            self.raw = Some(ds);
        }
        Ok(self.raw.as_ref().expect("set above"))
    }

    /// Raw data with potentials and injection smoothing, before resampling.
    fn prepared(&mut self) -> Result<&FieldDataset, CliError> {
        if self.prepared.is_none() {
            let mut ds = self.raw()?.clone();
            if let Some(p) = self.cfg.input.tests.clone() {
                let tests =
                    load_production_tests(&p).map_err(|e| CliError::context(e, format!("tests {}", p.display())))?;
                ds = with_potential(&ds, &tests)?;
            }
            let days = self.cfg.conditioning.smooth_injection_days;
            let window = days / ds.step_days() as usize;
            if window > 1 {
                ds = smooth_injectors(&ds, window)?;
            }
            self.prepared = Some(ds);
        }
        Ok(self.prepared.as_ref().expect("set above"))
    }

    fn conditioned(&mut self) -> Result<&FieldDataset, CliError> {
        if self.conditioned.is_none() {
            let c = self.cfg.conditioning.clone();
            let ds = self.prepared()?;
            let step = ds.step_days() as usize;
            if !c.sampling_days.is_multiple_of(step) {
                return Err(CliError::Data(format!(
                    "sampling of {} days is not a multiple of the {step}-day data step",
                    c.sampling_days
                )));
            }
            let mut out = resample_mean(ds, c.sampling_days / step)?;
            if c.trim {
                out = trim_rampup(&out, c.trim_start)?;
            }
            self.conditioned = Some(out);
        }
        Ok(self.conditioned.as_ref().expect("set above"))
    }

    fn load_model(&self) -> Result<Option<TrainedModel>, CliError> {
        match &self.cfg.input.model {
            None => Ok(None),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Data(format!("cannot read model {}: {e}", p.display())))?;
                TrainedModel::from_text(&text)
                    .map(Some)
                    .map_err(|e| CliError::context(e, format!("model {}", p.display())))
            }
        }
    }

    fn model(&mut self) -> Result<&TrainedModel, CliError> {
        if self.model.is_none() {
            let m = match self.load_model()? {
                Some(m) => m,
                None => {
                    let ds = self.conditioned()?.clone();
                    train_on_dataset(&ds, &self.cfg.window, &self.cfg.estimator, self.cfg.val_fraction)?
                }
            };
            self.model = Some(m);
        }
        Ok(self.model.as_ref().expect("set above"))
    }

    fn synth(&mut self) -> Result<(), CliError> {
        let ds = generate_field(&self.cfg.synth).map_err(|e| CliError::context(e, "synth"))?;
        self.arts.write_with("synthetic.csv", |b| write_field_table(&ds, b))?;
        let spec = toml::to_string(&self.cfg.synth)
            .map_err(|e| CliError::Data(format!("cannot render synth spec: {e}")))?;
        self.arts.write("synth_spec.toml", spec.as_bytes())?;
        if self.cfg.input.source == Some(Source::Synth) {
            self.raw = Some(ds);
        }
        Ok(())
    }

    fn reshape(&mut self) -> Result<(), CliError> {
        let ds = self.conditioned()?.clone();
        let ss = build_supervised(&ds, &self.cfg.window)?;
        let (tr, va, te) = self.cfg.split;
        let (a, b, c) = chronological_split(&ss, &SplitSpec::Fractions { train: tr, val: va, test: te })?;
        self.arts.write_with("supervised_train.csv", |w| a.write_csv(w))?;
        self.arts.write_with("supervised_val.csv", |w| b.write_csv(w))?;
        self.arts.write_with("supervised_test.csv", |w| c.write_csv(w))
    }

    fn train(&mut self) -> Result<(), CliError> {
        let ds = self.conditioned()?.clone();
        let model = self.model()?.clone();
        let ss = build_supervised(&ds, &model.window)?;
        let pred = model.predict_raw(&ss.x)?;
        let fit = wellcast_core::metrics::compute_metrics(ss.y.as_slice(), pred.as_slice())?;
        self.arts.write("model.txt", model.to_text().as_bytes())?;
        let mut header = vec!["descriptor", "scope", "look_back", "train_rows", "inputs", "outputs"];
        header.extend(metrics_header());
        let mut row = vec![
            model.descriptor.clone(),
            model.window.scope.as_str().to_string(),
            model.window.look_back.to_string(),
            model.train_rows.to_string(),
            ss.n_inputs().to_string(),
            ss.n_outputs().to_string(),
        ];
        row.extend(metrics_cells(&fit));
        self.arts.write("train_summary.csv", &csv_bytes(&header, &[row]))
    }

    fn forecast(&mut self) -> Result<(), CliError> {
        let h = self.cfg.forecast.horizon;
        let result = match self.cfg.input.schedule.clone() {
            Some(path) => {
                let what = format!("schedule {}", path.display());
                let schedule = InjectionSchedule::load_csv(&path).map_err(|e| CliError::context(e, &what))?;
                let ds = self.conditioned()?.clone();
                let model = self.model()?.clone();
                forecast_recursive(&model, &ds, &schedule, h, self.cfg.forecast.hold_last)
                    .map_err(|e| CliError::context(e, &what))?
            }
            None => {
                let ds = self.conditioned()?.clone();
                let n = ds.n_steps();
                if n <= h {
                    return Err(CliError::Data(format!(
                        "holdout forecast of {h} steps needs more than {n} conditioned steps"
                    )));
                }
                let origin = n - h;
                let model = match self.load_model()? {
                    Some(m) => m,
                    None => train_on_dataset(
                        &ds.slice(0, origin)?,
                        &self.cfg.window,
                        &self.cfg.estimator,
                        self.cfg.val_fraction,
                    )?,
                };
                backtest(&model, &ds, origin, h)?
            }
        };
        self.arts.write_with("forecast.csv", |b| result.write_csv(b))?;
        if result.series.iter().all(|s| s.actual.is_some()) {
            let m = result.metrics()?;
            let mut header = vec!["descriptor"];
            header.extend(metrics_header());
            let mut row = vec![result.descriptor.clone()];
            row.extend(metrics_cells(&m));
            self.arts.write("forecast_metrics.csv", &csv_bytes(&header, &[row]))?;
        }
        Ok(())
    }

    fn rolling_config(&self) -> Result<RollingConfig, CliError> {
        let s = self.cfg.conditioning.sampling_days;
        let r = &self.cfg.rolling;
        let min_train = days_to_steps(r.min_train_days, s, "rolling.min_train_days")?;
        let policy = match r.policy {
            PolicyKind::Incremental => TrainingPolicy::Incremental,
            PolicyKind::Fixed => TrainingPolicy::Fixed {
                window_steps: days_to_steps(r.window_days.unwrap_or(r.min_train_days), s, "rolling.window_days")?,
            },
        };
        let cfg = RollingConfig {
            window: self.cfg.window,
            min_train_steps: min_train,
            cadence_steps: days_to_steps(r.cadence_days, s, "rolling.cadence_days")?,
            horizon_steps: self.cfg.forecast.horizon,
            policy,
            val_fraction: self.cfg.val_fraction,
        };
        cfg.validate().map_err(|e| CliError::Config(format!("`rolling`: {e}")))?;
        Ok(cfg)
    }

    fn evaluate(&mut self) -> Result<(), CliError> {
        let rc = self.rolling_config()?;
        let ds = self.conditioned()?.clone();
        let report = run_rolling_evaluation(&ds, &rc, &self.cfg.estimator)?;
        if report.rounds.is_empty() {
            self.warn(format!(
                "rolling evaluation has no rounds: {} steps cannot fit {} training steps plus a {}-step horizon",
                ds.n_steps(),
                rc.min_train_steps,
                rc.horizon_steps
            ));
        }
        self.arts.write_with("rolling.csv", |b| report.write_csv(b))?;
        self.arts.write("rolling_forecasts.csv", &rolling_forecasts_csv(&report))?;
        let mut header = vec!["descriptor", "rounds"];
        header.extend(metrics_header());
        let mut row = vec![report.descriptor.clone(), report.rounds.len().to_string()];
        row.extend(metrics_cells(&report.mean_metrics()));
        self.arts.write("rolling_summary.csv", &csv_bytes(&header, &[row]))
    }

    fn gridsearch(&mut self) -> Result<(), CliError> {
        let ds = self.prepared()?.clone();
        let report = grid_search(&ds, &self.cfg.grid).map_err(|e| CliError::context(e, "grid"))?;
        self.arts.write_with("grid.csv", |b| report.write_csv(b))?;
        for axis in GridAxis::ALL {
            let name = format!("grid_marginal_{}.csv", axis.as_str());
            self.arts.write_with(&name, |b| report.write_marginals_csv(axis, b))?;
        }
        let mut best_rows = Vec::new();
        for m in Metric::ALL {
            if let Some(t) = report.best_by(m) {
                best_rows.push(vec![
                    m.as_str().to_string(),
                    t.index.to_string(),
                    t.config.effective_key(),
                    m.of(t.metrics().expect("completed")).to_string(),
                ]);
            }
        }
        self.arts
            .write("grid_best.csv", &csv_bytes(&["metric", "trial", "config", "value"], &best_rows))?;
        match radar_rows(&report) {
            Some(rows) => {
                let mut header = vec!["estimator", "trial"];
                header.extend(RADAR_METRICS.iter().map(|m| m.as_str()));
                self.arts.write("radar.csv", &csv_bytes(&header, &rows?))?;
            }
            None => self.warn("grid search completed no trials; no radar data written".into()),
        }
        Ok(())
    }

    fn decline(&mut self) -> Result<(), CliError> {
        let ds = self.conditioned()?.clone();
        let h = self.cfg.decline.horizon;
        let phases = self.cfg.decline.phases.clone();
        let n = ds.n_steps();
        let mut rows = Vec::new();
        let mut frows = Vec::new();
        for w in ds.producers() {
            for &phase in &phases {
                let Some(s) = w.series(phase) else { continue };
                let v = s.values();
                let peak = (0..v.len()).fold(0, |best, i| if v[i] > v[best] { i } else { best });
                let end = (peak..v.len()).find(|&i| v[i] <= 0.0).unwrap_or(v.len());
                let segment = v[peak..end].to_vec();
                let mut row = vec![
                    w.well_id().to_string(),
                    phase.to_string(),
                    ds.date_at(peak).format("%Y-%m-%d").to_string(),
                    segment.len().to_string(),
                ];
                let fit = RateSeries::new(ds.date_at(peak), ds.step_days(), segment).and_then(|r| fit_arps(&r));
                match fit {
                    Ok(f) => {
                        let p = f.params;
                        row.extend([
                            p.q_i.to_string(),
                            p.d_i.to_string(),
                            p.b.to_string(),
                            f.residual_norm.to_string(),
                            f.non_decaying.to_string(),
                            "ok".to_string(),
                        ]);
                        let q = forecast_arps(&p, n - peak, h)?;
                        for (k, rate) in q.iter().enumerate() {
                            frows.push(vec![
                                ds.date_at(n + k).format("%Y-%m-%d").to_string(),
                                w.well_id().to_string(),
                                phase.to_string(),
                                rate.to_string(),
                            ]);
                        }
                    }
                    Err(e) => {
                        self.warn(format!("decline fit of {}/{phase} failed: {e}", w.well_id()));
                        row.extend(["", "", "", "", "", ""].map(String::from));
                        let last = row.len() - 1;
                        row[last] = format!("failed: {e}");
                    }
                }
                rows.push(row);
            }
        }
        let header = [
            "well_id",
            "phase",
            "fit_start",
            "fit_points",
            "q_i",
            "d_i_per_step",
            "b",
            "residual_norm",
            "non_decaying",
            "status",
        ];
        self.arts.write("decline.csv", &csv_bytes(&header, &rows))?;
        self.arts
            .write("decline_forecast.csv", &csv_bytes(&["date", "well_id", "phase", "rate"], &frows))
    }

    fn history(&self) -> Option<FieldDataset> {
        if let Some(c) = &self.conditioned {
            return Some(c.clone());
        }
        let path = self.arts.path("conditioned.csv");
        path.exists().then(|| load_field_table(&path).ok()).flatten()
    }

    fn plot(&mut self) -> Result<(), CliError> {
        let mut drew = 0;
        match read_csv(&self.arts.path("forecast.csv"))? {
            None => self.warn("no forecast.csv in the output directory; forecast plots skipped".into()),
            Some(rows) => drew += self.plot_forecast(&rows)?,
        }
        match read_csv(&self.arts.path("radar.csv"))? {
            None => self.warn("no radar.csv in the output directory; radar plot skipped".into()),
            Some(rows) if rows.len() < 2 => self.warn("radar.csv has no estimators; radar plot skipped".into()),
            Some(rows) => {
                let axes: Vec<String> = rows[0][2..].to_vec();
                let polys: Vec<(String, Vec<f64>)> = rows[1..]
                    .iter()
                    .map(|r| (r[0].clone(), r[2..].iter().map(|v| v.parse().unwrap_or(0.0)).collect()))
                    .collect();
                self.arts
                    .write("radar.svg", radar_chart("Normalized error by estimator", &axes, &polys).as_bytes())?;
                drew += 1;
            }
        }
        for axis in GridAxis::ALL {
            let name = format!("grid_marginal_{}.csv", axis.as_str());
            let Some(rows) = read_csv(&self.arts.path(&name))? else { continue };
            let Some(col) = rows.first().and_then(|h| h.iter().position(|c| c == "smape")) else { continue };
            let bars: Vec<(String, f64)> = rows[1..]
                .iter()
                .map(|r| (r[0].clone(), r[col].parse().unwrap_or(f64::NAN)))
                .collect();
            let finite: Vec<f64> = bars.iter().map(|b| b.1).filter(|v| v.is_finite()).collect();
            if bars.len() < 2 || finite.windows(2).all(|w| w[0] == w[1]) {
                continue;
            }
            let svg = bar_chart(&format!("Mean SMAPE by {}", axis.as_str()), "SMAPE", &bars);
            self.arts.write(&format!("marginal_{}.svg", axis.as_str()), svg.as_bytes())?;
            drew += 1;
        }
        if let Some(rows) = read_csv(&self.arts.path("rolling.csv"))? {
            if rows.len() > 1 {
                drew += self.plot_rolling(&rows)?;
            }
        }
        if drew == 0 {
            self.warn("nothing to plot".into());
        }
        Ok(())
    }

    fn plot_rolling(&mut self, rows: &[Vec<String>]) -> Result<usize, CliError> {
        let col = |name: &str| rows[0].iter().position(|c| c == name);
        let (Some(d), Some(s)) = (col("origin_date"), col("smape")) else { return Ok(0) };
        let base = parse_date(&rows[1][d])?;
        let pts = rows[1..]
            .iter()
            .map(|r| Ok(((parse_date(&r[d])? - base).num_days() as f64, r[s].parse().unwrap_or(f64::NAN))))
            .collect::<Result<Vec<_>, CliError>>()?;
        let series = [LineSeries {
            label: "SMAPE".into(),
            color: color(0),
            marker: Marker::Circle,
            dashed: false,
            points: pts,
        }];
        let svg = line_chart("Rolling evaluation", "SMAPE", &series, &date_label(base));
        self.arts.write("rolling_smape.svg", svg.as_bytes())?;
        Ok(1)
    }

    fn plot_forecast(&mut self, rows: &[Vec<String>]) -> Result<usize, CliError> {
        if rows.len() < 2 {
            self.warn("forecast.csv is empty; forecast plots skipped".into());
            return Ok(0);
        }
        let mut fc: BTreeMap<(String, Phase), Vec<ForecastPoint>> = BTreeMap::new();
        for r in &rows[1..] {
            let phase =
                Phase::parse(&r[2]).ok_or_else(|| CliError::Data(format!("forecast.csv: bad phase {:?}", r[2])))?;
            fc.entry((r[1].clone(), phase))
                .or_default()
                .push((parse_date(&r[0])?, r[3].parse().unwrap_or(f64::NAN), r[4].parse().ok()));
        }
        let history = self.history();
        if history.is_none() {
            self.warn("no conditioned history available; forecast plots show forecasts only".into());
        }
        let horizon = fc.values().map(|v| v.len()).max().unwrap_or(0);
        let first = fc.values().filter_map(|v| v.first()).map(|p| p.0).min().expect("non-empty");
        // History shown: up to five horizons before the first forecast date.
        let window = history.as_ref().map(|h| {
            let end = h.dates().iter().filter(|d| **d < first).count();
            (end.saturating_sub(5 * horizon), end)
        });
        let base = match (&history, window) {
            (Some(h), Some((from, end))) if from < end => h.date_at(from),
            _ => first,
        };
        let x = |d: NaiveDate| (d - base).num_days() as f64;
        let mut drew = 0;
        for phase in [Phase::Oil, Phase::Gas, Phase::Water] {
            let keys: Vec<&(String, Phase)> = fc.keys().filter(|k| k.1 == phase).collect();
            if keys.is_empty() {
                continue;
            }
            let mut series = Vec::new();
            let mut data = Vec::new();
            for (i, key) in keys.iter().enumerate() {
                let (c, well) = (color(i), &key.0);
                if let (Some(h), Some((from, end))) = (&history, window) {
                    let values = if well == FIELD_ID {
                        h.field_totals().remove(&phase)
                    } else {
                        h.well(well).and_then(|w| w.series(phase)).map(|s| s.values().to_vec())
                    };
                    if let Some(v) = values {
                        for (t, rate) in v.iter().enumerate().take(end).skip(from) {
                            data.push(vec![fmt_date(h.date_at(t)), well.clone(), "history".into(), rate.to_string()]);
                        }
                        series.push(LineSeries {
                            label: format!("{well} history"),
                            color: c,
                            marker: Marker::Circle,
                            dashed: false,
                            points: (from..end).map(|t| (x(h.date_at(t)), v[t])).collect(),
                        });
                    }
                }
                let f = &fc[*key];
                series.push(LineSeries {
                    label: format!("{well} forecast"),
                    color: c,
                    marker: Marker::Cross,
                    dashed: true,
                    points: f.iter().map(|p| (x(p.0), p.1)).collect(),
                });
                data.extend(f.iter().map(|p| vec![fmt_date(p.0), well.clone(), "forecast".into(), p.1.to_string()]));
                if f.iter().all(|p| p.2.is_some()) {
                    let actual: Vec<(NaiveDate, f64)> = f.iter().map(|p| (p.0, p.2.unwrap_or(f64::NAN))).collect();
                    series.push(LineSeries {
                        label: format!("{well} actual"),
                        color: c,
                        marker: Marker::Circle,
                        dashed: false,
                        points: actual.iter().map(|p| (x(p.0), p.1)).collect(),
                    });
                    data.extend(actual.iter().map(|p| vec![fmt_date(p.0), well.clone(), "actual".into(), p.1.to_string()]));
                }
            }
            let svg = line_chart(&format!("{phase} rate forecast"), &format!("{phase} rate per day"), &series, &date_label(base));
            self.arts.write(&format!("forecast_{phase}.svg"), svg.as_bytes())?;
            self.arts.write(
                &format!("plot_forecast_{phase}.csv"),
                &csv_bytes(&["date", "well_id", "kind", "rate"], &data),
            )?;
            drew += 1;
        }
        Ok(drew)
    }
}

/// Date, predicted rate and actual rate of one forecast.csv row.
type ForecastPoint = (NaiveDate, f64, Option<f64>);

fn fmt_date(d: NaiveDate) -> String {
    d.format("%Y-%m-%d").to_string()
}

fn parse_date(s: &str) -> Result<NaiveDate, CliError> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| CliError::Data(format!("bad date {s:?}: {e}")))
}

fn date_label(base: NaiveDate) -> impl Fn(f64) -> String {
    move |x| fmt_date(base + chrono::Duration::days(x.round() as i64))
}

/// Reads a CSV including its header row; `None` when the file is absent.
fn read_csv(path: &Path) -> Result<Option<Vec<Vec<String>>>, CliError> {
    if !path.exists() {
        return Ok(None);
    }
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
        .collect::<Result<Vec<Vec<String>>, _>>()
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(Some(rows))
}

fn rolling_forecasts_csv(report: &RollingReport) -> Vec<u8> {
    let mut rows = Vec::new();
    for r in &report.rounds {
        for s in &r.forecast.series {
            for (k, d) in r.forecast.dates.iter().enumerate() {
                rows.push(vec![
                    r.round.to_string(),
                    fmt_date(r.origin_date),
                    fmt_date(*d),
                    s.well_id.clone(),
                    s.phase.to_string(),
                    s.predicted[k].to_string(),
                    s.actual.as_ref().map(|a| a[k].to_string()).unwrap_or_default(),
                ]);
            }
        }
    }
    csv_bytes(
        &["round", "origin_date", "date", "well_id", "phase", "predicted_rate", "actual_rate"],
        &rows,
    )
}

/// Best trial (by SMAPE) of each estimator family, normalized for the
/// radar chart. `None` when no trial completed.
pub fn radar_rows(report: &GridReport) -> Option<Result<Vec<Vec<String>>, CliError>> {
    let mut best: BTreeMap<String, (usize, MetricsReport)> = BTreeMap::new();
    for fam in [EstimatorFamily::Ols, EstimatorFamily::Ridge, EstimatorFamily::Lasso, EstimatorFamily::Mlp] {
        let pick = report
            .completed()
            .filter(|t| t.config.estimator == fam)
            .filter(|t| t.metrics().is_some_and(|m| m.smape.is_finite()))
            .min_by(|a, b| {
                let (x, y) = (a.metrics().expect("completed").smape, b.metrics().expect("completed").smape);
                x.total_cmp(&y)
            });
        if let Some(t) = pick {
            best.insert(fam.as_str().to_string(), (t.index, *t.metrics().expect("completed")));
        }
    }
    if best.is_empty() {
        return None;
    }
    let reports: BTreeMap<String, MetricsReport> = best.iter().map(|(k, v)| (k.clone(), v.1)).collect();
    Some(radar_normalize(&reports, &RADAR_METRICS).map_err(CliError::from).map(|norm| {
        norm.into_iter()
            .map(|(name, vals)| {
                let mut row = vec![name.clone(), best[&name].0.to_string()];
                row.extend(vals.iter().map(|v| v.to_string()));
                row
            })
            .collect()
    }))
}
