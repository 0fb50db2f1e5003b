//! TOML run configuration.
//!
//! Sections: `input`, `output`, `pipeline`, `dataset`, `window`,
//! `estimator`, `split`, `forecast`, `rolling`, `grid`, `synth`, `decline`.
//! Missing optional keys take defaults, each of which is recorded in
//! `RunConfig::defaults_applied`; unknown keys produce warnings.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use toml::{Table, Value};
use wellcast_core::dataset::Phase;
use wellcast_core::estimators::{Activation, EstimatorSpec, MlpTrainConfig, DEFAULT_LASSO_MAX_ITER, DEFAULT_LASSO_TOL};
use wellcast_core::grid::{GridSpec, PolicyKind};
use wellcast_core::synth::SynthSpec;
use wellcast_core::windowing::{Scope, WindowConfig};

use crate::error::CliError;

/// Pipeline stages in workflow order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Synth,
    Condition,
    Reshape,
    Train,
    Forecast,
    Evaluate,
    GridSearch,
    Decline,
    Plot,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Synth,
        Stage::Condition,
        Stage::Reshape,
        Stage::Train,
        Stage::Forecast,
        Stage::Evaluate,
        Stage::GridSearch,
        Stage::Decline,
        Stage::Plot,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Condition => "condition",
            Stage::Reshape => "reshape",
            Stage::Train => "train",
            Stage::Forecast => "forecast",
            Stage::Evaluate => "evaluate",
            Stage::GridSearch => "gridsearch",
            Stage::Decline => "decline",
            Stage::Plot => "plot",
        }
    }

    pub fn parse(s: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|st| st.as_str() == s)
    }

    /// Stages that read a dataset and therefore need an input source.
    pub fn needs_dataset(self) -> bool {
        !matches!(self, Stage::Synth | Stage::Plot)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    File(PathBuf),
    Synth,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InputConfig {
    pub source: Option<Source>,
    pub tests: Option<PathBuf>,
    pub schedule: Option<PathBuf>,
    pub model: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionConfig {
    pub sampling_days: usize,
    pub trim: bool,
    pub trim_start: Option<NaiveDate>,
    pub smooth_injection_days: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForecastConfig {
    pub horizon: usize,
    pub hold_last: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RollingSettings {
    pub min_train_days: usize,
    pub cadence_days: usize,
    pub policy: PolicyKind,
    /// Training window length for the fixed policy; defaults to `min_train_days`.
    pub window_days: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeclineConfig {
    pub phases: Vec<Phase>,
    pub horizon: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub input: InputConfig,
    pub output_dir: PathBuf,
    pub stages: Vec<Stage>,
    pub conditioning: ConditionConfig,
    pub window: WindowConfig,
    pub estimator: EstimatorSpec,
    pub val_fraction: f64,
    pub split: (f64, f64, f64),
    pub forecast: ForecastConfig,
    pub rolling: RollingSettings,
    pub grid: GridSpec,
    pub synth: SynthSpec,
    pub decline: DeclineConfig,
    pub defaults_applied: Vec<String>,
    pub warnings: Vec<String>,
}

/// Overrides given on the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

struct Ctx {
    defaults: Vec<String>,
    warnings: Vec<String>,
}

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

struct Sec<'a> {
    name: &'static str,
    table: Option<&'a Table>,
}

impl<'a> Sec<'a> {
    fn open(root: &'a Table, name: &'static str, known: &[&str], ctx: &mut Ctx) -> Result<Self, CliError> {
        let table = match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(other) => {
                return Err(cfg_err(format!("`{name}` must be a table, found {}", other.type_str())));
            }
        };
        if let Some(t) = table {
            for k in t.keys().filter(|k| !known.contains(&k.as_str())) {
                ctx.warnings.push(format!("unknown key `{name}.{k}` ignored"));
            }
        }
        Ok(Self { name, table })
    }

    fn path(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn raw(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn type_err(&self, key: &str, want: &str, got: &Value) -> CliError {
        cfg_err(format!("`{}` must be {want}, found {}", self.path(key), got.type_str()))
    }

    fn default<T: std::fmt::Debug>(&self, key: &str, value: T, ctx: &mut Ctx) -> T {
        ctx.defaults.push(format!("{} = {value:?}", self.path(key)));
        value
    }

    fn int(&self, key: &str) -> Result<Option<i64>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Integer(i)) => Ok(Some(*i)),
            Some(v) => Err(self.type_err(key, "an integer", v)),
        }
    }

    fn count(&self, key: &str, min: usize, default: usize, ctx: &mut Ctx) -> Result<usize, CliError> {
        match self.int(key)? {
            None => Ok(self.default(key, default, ctx)),
            Some(i) if i < min as i64 => Err(cfg_err(format!(
                "`{}` must be >= {min}, got {i}",
                self.path(key)
            ))),
            Some(i) => Ok(i as usize),
        }
    }

    fn float(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Float(f)) => Ok(Some(*f)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(self.type_err(key, "a number", v)),
        }
    }

    fn float_in(&self, key: &str, lo: f64, hi: f64, default: f64, ctx: &mut Ctx) -> Result<f64, CliError> {
        match self.float(key)? {
            None => Ok(self.default(key, default, ctx)),
            Some(f) if !(lo..=hi).contains(&f) => Err(cfg_err(format!(
                "`{}` must be in [{lo}, {hi}], got {f}",
                self.path(key)
            ))),
            Some(f) => Ok(f),
        }
    }

    fn boolean(&self, key: &str, default: bool, ctx: &mut Ctx) -> Result<bool, CliError> {
        match self.raw(key) {
            None => Ok(self.default(key, default, ctx)),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(v) => Err(self.type_err(key, "a boolean", v)),
        }
    }

    fn string(&self, key: &str) -> Result<Option<&'a str>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(v) => Err(self.type_err(key, "a string", v)),
        }
    }

    fn strings(&self, key: &str) -> Result<Option<Vec<&'a str>>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| v.as_str().ok_or_else(|| self.type_err(key, "an array of strings", v)))
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(v) => Err(self.type_err(key, "an array of strings", v)),
        }
    }

    fn date(&self, key: &str) -> Result<Option<NaiveDate>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::String(s)) => NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .map(Some)
                .map_err(|_| cfg_err(format!("`{}` must be a YYYY-MM-DD date, got {s:?}", self.path(key)))),
            Some(Value::Datetime(d)) => match d.date {
                Some(dt) => Ok(NaiveDate::from_ymd_opt(dt.year as i32, dt.month as u32, dt.day as u32)),
                None => Err(self.type_err(key, "a date", &Value::Datetime(*d))),
            },
            Some(v) => Err(self.type_err(key, "a date", v)),
        }
    }

    fn path_value(&self, key: &str, base: &Path) -> Result<Option<PathBuf>, CliError> {
        Ok(self.string(key)?.map(|s| base.join(s)))
    }
}

const GRID_KEYS: [&str; 14] = [
    "sampling_days", "look_back", "estimator", "alpha", "hidden_size", "activation", "min_train_days", "policy",
    "cadence_days", "horizon_days", "scope", "val_fraction", "mlp", "seed",
];
const MLP_KEYS: [&str; 9] = [
    "learning_rate", "beta1", "beta2", "epsilon", "max_epochs", "batch_size", "patience", "target_loss", "seed",
];

/// Deserializes `parent[key]` with serde after stripping unknown keys (with
/// a warning) and recording defaulted ones. `label` is the full key path.
fn serde_section<T: serde::de::DeserializeOwned>(
    parent: Option<&Table>,
    key: &str,
    label: &str,
    known: &[&str],
    ctx: &mut Ctx,
) -> Result<T, CliError> {
    let mut table = match parent.and_then(|p| p.get(key)) {
        None => Table::new(),
        Some(Value::Table(t)) => t.clone(),
        Some(other) => return Err(cfg_err(format!("`{label}` must be a table, found {}", other.type_str()))),
    };
    let unknown: Vec<String> = table.keys().filter(|k| !known.contains(&k.as_str())).cloned().collect();
    for k in unknown {
        ctx.warnings.push(format!("unknown key `{label}.{k}` ignored"));
        table.remove(&k);
    }
    for k in known.iter().filter(|k| !table.contains_key(**k)) {
        ctx.defaults.push(format!("{label}.{k} (default)"));
    }
    Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| cfg_err(format!("`{label}`: {}", e.message())))
}

pub fn load_config(path: &Path, stages: &[Stage], ov: &Overrides) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| cfg_err(format!("cannot read config {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base, stages, ov)
}

/// Parses and validates a config. `stages` are the stages about to run;
/// an input source is required only when one of them reads a dataset. An
/// empty `stages` means the `[pipeline]` selection is used.
pub fn parse_config(text: &str, base: &Path, stages: &[Stage], ov: &Overrides) -> Result<RunConfig, CliError> {
    let root: Table = toml::from_str(text)
        .map_err(|e: toml::de::Error| cfg_err(format!("malformed config: {}", e.message())))?;
    let mut ctx = Ctx {
        defaults: Vec::new(),
        warnings: Vec::new(),
    };
    const TOP: [&str; 13] = [
        "seed", "input", "output", "pipeline", "dataset", "window", "estimator", "split", "forecast", "rolling",
        "grid", "synth", "decline",
    ];
    for k in root.keys().filter(|k| !TOP.contains(&k.as_str())) {
        ctx.warnings.push(format!("unknown key `{k}` ignored"));
    }

    let seed = match (ov.seed, root.get("seed")) {
        (Some(s), _) => s,
        (None, None) => {
            ctx.defaults.push("seed = 0".into());
            0
        }
        (None, Some(Value::Integer(i))) if *i >= 0 => *i as u64,
        (None, Some(v)) => return Err(cfg_err(format!("`seed` must be a non-negative integer, found {v}"))),
    };

    let input = Sec::open(&root, "input", &["dataset", "synth", "tests", "schedule", "model"], &mut ctx)?;
    let dataset = input.path_value("dataset", base)?;
    let synth_flag = match input.raw("synth") {
        None => false,
        Some(Value::Boolean(b)) => *b,
        Some(v) => return Err(input.type_err("synth", "a boolean", v)),
    };
    let source = match (dataset, synth_flag) {
        (Some(_), true) => {
            return Err(cfg_err("`input.dataset` and `input.synth` are mutually exclusive; choose one source"));
        }
        (Some(p), false) => Some(Source::File(p)),
        (None, true) => Some(Source::Synth),
        (None, false) => None,
    };
    let input_cfg = InputConfig {
        source,
        tests: input.path_value("tests", base)?,
        schedule: input.path_value("schedule", base)?,
        model: input.path_value("model", base)?,
    };

    let output = Sec::open(&root, "output", &["dir"], &mut ctx)?;
    let output_dir = match (&ov.out, output.path_value("dir", base)?) {
        (Some(o), _) => o.clone(),
        (None, Some(d)) => d,
        (None, None) => output.default("dir", base.join("wellcast-out"), &mut ctx),
    };

    let pipeline = Sec::open(&root, "pipeline", &["stages"], &mut ctx)?;
    let mut selected: Vec<Stage> = if stages.is_empty() {
        match pipeline.strings("stages")? {
            Some(list) => list
                .iter()
                .map(|s| {
                    Stage::parse(s).ok_or_else(|| cfg_err(format!("`pipeline.stages` has unknown stage {s:?}")))
                })
                .collect::<Result<_, _>>()?,
            None => {
                let mut d = vec![
                    Stage::Condition,
                    Stage::Reshape,
                    Stage::Train,
                    Stage::Forecast,
                    Stage::Evaluate,
                    Stage::Decline,
                    Stage::Plot,
                ];
                if input_cfg.source == Some(Source::Synth) {
                    d.insert(0, Stage::Synth);
                }
                pipeline.default("stages", d, &mut ctx)
            }
        }
    } else {
        stages.to_vec()
    };
    selected.sort();
    selected.dedup();
    if selected.iter().any(|s| s.needs_dataset()) && input_cfg.source.is_none() {
        return Err(cfg_err("missing required key `input.dataset` (or set `input.synth = true`)"));
    }

    let ds = Sec::open(
        &root,
        "dataset",
        &["sampling_days", "trim", "trim_start", "smooth_injection_days"],
        &mut ctx,
    )?;
    let conditioning = ConditionConfig {
        sampling_days: ds.count("sampling_days", 1, 10, &mut ctx)?,
        trim: ds.boolean("trim", true, &mut ctx)?,
        trim_start: ds.date("trim_start")?,
        smooth_injection_days: ds.count("smooth_injection_days", 0, 30, &mut ctx)?,
    };

    let win = Sec::open(&root, "window", &["look_back", "look_forward", "scope"], &mut ctx)?;
    let scope = match win.string("scope")? {
        None => win.default("scope", Scope::FullField, &mut ctx),
        Some(s) => Scope::parse(s)
            .ok_or_else(|| cfg_err(format!("`window.scope` must be \"full_field\" or \"per_well\", got {s:?}")))?,
    };
    let window = WindowConfig {
        look_back: win.count("look_back", 1, 15, &mut ctx)?,
        look_forward: win.count("look_forward", 1, 1, &mut ctx)?,
        scope,
    };

    let est = Sec::open(
        &root,
        "estimator",
        &["kind", "alpha", "tol", "max_iter", "hidden_size", "activation", "val_fraction", "mlp"],
        &mut ctx,
    )?;
    let kind = match est.string("kind")? {
        Some(k) => k,
        None => est.default("kind", "ols", &mut ctx),
    };
    let estimator = match kind {
        "ols" => EstimatorSpec::Ols,
        "ridge" => EstimatorSpec::Ridge {
            alpha: est.float_in("alpha", 0.0, f64::MAX, 0.2, &mut ctx)?,
        },
        "lasso" => EstimatorSpec::Lasso {
            alpha: est.float_in("alpha", 0.0, f64::MAX, 0.2, &mut ctx)?,
            tol: est.float_in("tol", f64::MIN_POSITIVE, f64::MAX, DEFAULT_LASSO_TOL, &mut ctx)?,
            max_iter: est.count("max_iter", 1, DEFAULT_LASSO_MAX_ITER, &mut ctx)?,
        },
        "mlp" => {
            let activation = match est.string("activation")? {
                None => est.default("activation", Activation::Relu, &mut ctx),
                Some(a) => Activation::parse(a).ok_or_else(|| {
                    cfg_err(format!("`estimator.activation` must be identity, relu or tanh, got {a:?}"))
                })?,
            };
            let mut train: MlpTrainConfig = serde_section(est.table, "mlp", "estimator.mlp", &MLP_KEYS, &mut ctx)?;
            if est.raw("mlp").and_then(|m| m.get("seed")).is_none() {
                train.seed = seed;
            }
            train
                .validate()
                .map_err(|e| cfg_err(format!("`estimator.mlp`: {e}")))?;
            EstimatorSpec::Mlp {
                hidden_size: est.count("hidden_size", 1, 20, &mut ctx)?,
                activation,
                train,
            }
        }
        other => {
            return Err(cfg_err(format!(
                "`estimator.kind` must be one of ols, ridge, lasso, mlp; got {other:?}"
            )))
        }
    };
    let val_fraction = est.float_in("val_fraction", 0.0, 0.9, 0.1, &mut ctx)?;

    let split = Sec::open(&root, "split", &["train", "val", "test"], &mut ctx)?;
    let split = (
        split.float_in("train", 0.0, 1.0, 0.7, &mut ctx)?,
        split.float_in("val", 0.0, 1.0, 0.15, &mut ctx)?,
        split.float_in("test", 0.0, 1.0, 0.15, &mut ctx)?,
    );
    if (split.0 + split.1 + split.2 - 1.0).abs() > 1e-9 {
        return Err(cfg_err("`split.train`, `split.val` and `split.test` must sum to 1"));
    }

    let fc = Sec::open(&root, "forecast", &["horizon", "hold_last"], &mut ctx)?;
    let forecast = ForecastConfig {
        horizon: fc.count("horizon", 1, 18, &mut ctx)?,
        hold_last: fc.boolean("hold_last", false, &mut ctx)?,
    };

    let rl = Sec::open(&root, "rolling", &["min_train_days", "cadence_days", "policy", "window_days"], &mut ctx)?;
    let policy = match rl.string("policy")? {
        None => rl.default("policy", PolicyKind::Incremental, &mut ctx),
        Some("incremental") => PolicyKind::Incremental,
        Some("fixed") => PolicyKind::Fixed,
        Some(p) => return Err(cfg_err(format!("`rolling.policy` must be incremental or fixed, got {p:?}"))),
    };
    let rolling = RollingSettings {
        min_train_days: rl.count("min_train_days", 1, 1095, &mut ctx)?,
        cadence_days: rl.count("cadence_days", 1, 365, &mut ctx)?,
        policy,
        window_days: rl.int("window_days")?.map(|w| w.max(0) as usize),
    };

    let mut grid: GridSpec = serde_section(Some(&root), "grid", "grid", &GRID_KEYS, &mut ctx)?;
    if root.get("grid").and_then(|g| g.get("seed")).is_none() {
        grid.seed = seed;
    }
    grid.validate().map_err(|e| cfg_err(format!("`grid`: {e}")))?;

    let sy = Sec::open(&root, "synth", &["preset", "spec_file", "noise", "n_steps"], &mut ctx)?;
    let mut synth = match (sy.path_value("spec_file", base)?, sy.string("preset")?) {
        (Some(_), Some(_)) => return Err(cfg_err("`synth.spec_file` and `synth.preset` are mutually exclusive")),
        (Some(p), None) => {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| cfg_err(format!("cannot read `synth.spec_file` {}: {e}", p.display())))?;
            toml::from_str::<SynthSpec>(&text)
                .map_err(|e| cfg_err(format!("`synth.spec_file` {}: {}", p.display(), e.message())))?
        }
        (None, None) | (None, Some("desk_scale")) => {
            if sy.raw("preset").is_none() {
                sy.default("preset", "desk_scale", &mut ctx);
            }
            SynthSpec::desk_scale(seed)
        }
        (None, Some(other)) => return Err(cfg_err(format!("`synth.preset` must be \"desk_scale\", got {other:?}"))),
    };
    synth.seed = seed;
    if let Some(n) = sy.float("noise")? {
        if n < 0.0 {
            return Err(cfg_err(format!("`synth.noise` must be >= 0, got {n}")));
        }
        synth.noise = n;
    }
    if let Some(n) = sy.int("n_steps")? {
        if n < 1 {
            return Err(cfg_err(format!("`synth.n_steps` must be >= 1, got {n}")));
        }
        synth.n_steps = n as usize;
    }
    synth.validate().map_err(|e| cfg_err(format!("`synth`: {e}")))?;

    let dc = Sec::open(&root, "decline", &["phases", "horizon"], &mut ctx)?;
    let phases = match dc.strings("phases")? {
        None => dc.default("phases", vec![Phase::Oil], &mut ctx),
        Some(list) => list
            .iter()
            .map(|s| {
                Phase::parse(s)
                    .filter(|p| !p.is_injection())
                    .ok_or_else(|| cfg_err(format!("`decline.phases` has invalid phase {s:?}")))
            })
            .collect::<Result<_, _>>()?,
    };
    let decline = DeclineConfig {
        phases,
        horizon: dc.count("horizon", 1, forecast.horizon, &mut ctx)?,
    };

    Ok(RunConfig {
        seed,
        input: input_cfg,
        output_dir,
        stages: selected,
        conditioning,
        window,
        estimator,
        val_fraction,
        split,
        forecast,
        rolling,
        grid,
        synth,
        decline,
        defaults_applied: ctx.defaults,
        warnings: ctx.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, CliError> {
        parse_config(text, Path::new("/cfg"), &[Stage::Train], &Overrides::default())
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse("[input]\ndataset = \"field.csv\"\n[estimator]\nkind = \"ols\"\n").unwrap();
        assert_eq!(c.conditioning.sampling_days, 10);
        assert_eq!(c.window.look_back, 15);
        assert_eq!(c.window.look_forward, 1);
        assert_eq!(c.estimator, EstimatorSpec::Ols);
        assert_eq!(c.input.source, Some(Source::File(PathBuf::from("/cfg/field.csv"))));
        assert!(c.defaults_applied.iter().any(|d| d.starts_with("dataset.sampling_days = 10")));
        assert!(c.defaults_applied.iter().any(|d| d.starts_with("window.look_back = 15")));
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn missing_source_names_the_key() {
        let e = parse("[estimator]\nkind = \"ols\"\n").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("input.dataset"));
        assert!(parse_config("", Path::new("."), &[Stage::Synth], &Overrides::default()).is_ok());
    }

    #[test]
    fn range_and_type_errors() {
        let e = parse("[input]\ndataset = \"a.csv\"\n[window]\nlook_back = -1\n").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("window.look_back"));
        let e = parse("[input]\ndataset = \"a.csv\"\n[window]\nlook_back = \"ten\"\n").unwrap_err();
        assert!(e.to_string().contains("window.look_back") && e.to_string().contains("integer"));
        let e = parse("[input]\ndataset = \"a.csv\"\nsynth = true\n").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(parse("[input\n").is_err());
        assert!(parse("[input]\ndataset = \"a.csv\"\n[estimator]\nkind = \"svm\"\n").is_err());
        assert!(parse("[input]\ndataset = \"a.csv\"\n[grid]\nlook_back = []\n").is_err());
    }

    #[test]
    fn unknown_keys_warn() {
        let c = parse("colour = 1\n[input]\ndataset = \"a.csv\"\nextra = 2\n[grid]\nfoo = 1\n").unwrap();
        assert_eq!(c.warnings.len(), 3);
        assert!(c.warnings.iter().any(|w| w.contains("input.extra")));
        assert!(c.warnings.iter().any(|w| w.contains("grid.foo")));
    }

    #[test]
    fn mlp_and_overrides() {
        let text = "seed = 5\n[input]\nsynth = true\n[estimator]\nkind = \"mlp\"\nhidden_size = 8\nactivation = \"tanh\"\n[estimator.mlp]\nmax_epochs = 10\n";
        let ov = Overrides {
            out: Some(PathBuf::from("/tmp/x")),
            seed: Some(9),
        };
        let c = parse_config(text, Path::new("."), &[], &ov).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.output_dir, PathBuf::from("/tmp/x"));
        assert_eq!(c.synth.seed, 9);
        assert_eq!(c.stages[0], Stage::Synth);
        match c.estimator {
            EstimatorSpec::Mlp {
                hidden_size,
                activation,
                train,
            } => {
                assert_eq!((hidden_size, activation, train.max_epochs, train.seed), (8, Activation::Tanh, 10, 9));
            }
            other => panic!("{other:?}"),
        }
    }
}
