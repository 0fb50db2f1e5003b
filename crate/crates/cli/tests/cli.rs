use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn wellcast(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wellcast"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn manifest(out: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap()
}

/// A five-year synthetic field written to `dir/synthetic.csv`.
fn synthetic_dataset(dir: &Path) -> PathBuf {
    let cfg = write(dir, "synth.toml", "seed = 4\n[input]\nsynth = true\n[synth]\nn_steps = 1825\n");
    let out = dir.join("synth-out");
    assert!(wellcast(&["synth"], &cfg, &out).status.success());
    out.join("synthetic.csv")
}

fn schedule(dir: &Path, steps: usize) -> PathBuf {
    let mut s = String::from("step,well_id,phase,rate\n");
    for t in 1..=steps {
        s += &format!("{t},FIELD,water_inj,9000\n{t},FIELD,gas_inj,1200000\n");
    }
    write(dir, "schedule.csv", &s)
}

#[test]
fn missing_source_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "seed = 1\n");
    let out = wellcast(&["train"], &cfg, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("input.dataset"));
}

#[test]
fn malformed_toml_and_bad_values_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[input\nsynth = true\n");
    assert_eq!(wellcast(&["synth"], &cfg, &dir.path().join("o")).status.code(), Some(2));
    let cfg = write(dir.path(), "d.toml", "[input]\nsynth = true\n[window]\nlook_back = 0\n");
    let out = wellcast(&["train"], &cfg, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("window.look_back"));
}

#[test]
fn unreadable_dataset_exits_with_data_code() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.csv", "date,well_id,q_o\n2020-01-01,P1,abc\n");
    let cfg = write(dir.path(), "c.toml", "[input]\ndataset = \"bad.csv\"\n");
    let out_dir = dir.path().join("o");
    let out = wellcast(&["condition"], &cfg, &out_dir);
    assert_eq!(out.status.code(), Some(3));
    let m = manifest(&out_dir);
    assert_eq!(m["status"], "failed");
    assert_eq!(m["failed_stage"], "condition");
}

#[test]
fn scheduled_forecast_and_exhausted_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_dataset(dir.path());
    let sched = schedule(dir.path(), 18);
    let cfg = write(
        dir.path(),
        "c.toml",
        &format!(
            "[input]\ndataset = {:?}\nschedule = {:?}\n[forecast]\nhorizon = 18\n",
            data.display().to_string(),
            sched.display().to_string()
        ),
    );
    let out_dir = dir.path().join("o");
    let out = wellcast(&["forecast"], &cfg, &out_dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_dir.join("forecast.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 18 * 3);
    assert!(text.lines().skip(1).all(|l| l.ends_with(',')), "future forecasts carry no actuals");

    schedule(dir.path(), 5);
    let out = wellcast(&["forecast"], &cfg, &dir.path().join("o2"));
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("schedule.csv"), "{err}");
}

#[test]
fn trained_model_is_reused_for_forecasting() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_dataset(dir.path());
    let train_cfg = write(
        dir.path(),
        "t.toml",
        &format!("[input]\ndataset = {:?}\n[estimator]\nkind = \"ridge\"\nalpha = 0.4\n", data.display().to_string()),
    );
    let o = dir.path().join("o");
    assert!(wellcast(&["train"], &train_cfg, &o).status.success());
    let summary = std::fs::read_to_string(o.join("train_summary.csv")).unwrap();
    assert!(summary.contains("ridge(alpha=0.4)"));

    let sched = schedule(dir.path(), 18);
    let fc_cfg = write(
        dir.path(),
        "f.toml",
        &format!(
            "[input]\ndataset = {:?}\nschedule = {:?}\nmodel = {:?}\n",
            data.display().to_string(),
            sched.display().to_string(),
            o.join("model.txt").display().to_string()
        ),
    );
    let o2 = dir.path().join("o2");
    assert!(wellcast(&["forecast"], &fc_cfg, &o2).status.success());
    let m = manifest(&o2);
    assert!(m["files"].as_array().unwrap().iter().any(|f| f["path"] == "forecast.csv"));
}

#[test]
fn manifest_lists_every_artifact_with_its_hash() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_dataset(dir.path());
    let cfg = write(
        dir.path(),
        "c.toml",
        &format!(
            "[input]\ndataset = {:?}\n[rolling]\nmin_train_days = 730\ncadence_days = 365\n",
            data.display().to_string()
        ),
    );
    let o = dir.path().join("o");
    let out = wellcast(&["pipeline"], &cfg, &o);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&o);
    assert_eq!(m["status"], "ok");
    let files = m["files"].as_array().unwrap();
    let on_disk: Vec<String> = std::fs::read_dir(&o)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != "manifest.json")
        .collect();
    assert_eq!(files.len(), on_disk.len());
    for f in files {
        let bytes = std::fs::read(o.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
    }
    for name in ["conditioned.csv", "model.txt", "forecast.csv", "rolling.csv", "decline.csv", "forecast_oil.svg"] {
        assert!(o.join(name).exists(), "{name} missing");
    }
}

#[test]
fn plot_without_artifacts_warns_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "seed = 1\n");
    let o = dir.path().join("o");
    let out = wellcast(&["plot"], &cfg, &o);
    assert!(out.status.success());
    let log = std::fs::read_to_string(o.join("run.log")).unwrap();
    assert!(log.contains("warning: nothing to plot"));
}

#[test]
fn gridsearch_writes_report_marginals_and_radar() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_dataset(dir.path());
    let cfg = write(
        dir.path(),
        "c.toml",
        &format!(
            "[input]\ndataset = {:?}\n[grid]\nsampling_days = [10]\nlook_back = [10, 15]\nestimator = [\"ols\", \"lasso\"]\nalpha = [0.2]\nmin_train_days = [730]\ncadence_days = [365]\n",
            data.display().to_string()
        ),
    );
    let o = dir.path().join("o");
    let out = wellcast(&["gridsearch"], &cfg, &o);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let grid = std::fs::read_to_string(o.join("grid.csv")).unwrap();
    assert!(grid.lines().count() > 4);
    let radar = std::fs::read_to_string(o.join("radar.csv")).unwrap();
    assert_eq!(radar.lines().count(), 3);
    assert!(o.join("grid_marginal_look_back.csv").exists());
}
