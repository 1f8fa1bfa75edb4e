use std::path::Path;
use std::process::{Command, Output};

fn air_sim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_air-sim"))
        .args(args)
        .current_dir(dir)
        .env_remove("AIR_SIM_THREADS")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_config(dir: &Path, extra: &str) -> String {
    let text = format!(
        r#"{{
  "benchmark": {{
    "width_px": 320, "height_px": 180,
    "pattern": {{ "rows": 5, "cols": 7, "square_px": 20 }}
  }}{extra}
}}"#
    );
    std::fs::write(dir.join("small.json"), text).unwrap();
    "small.json".into()
}

#[test]
fn errors_are_one_line_with_a_code() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{ \"seed\": 1, ").unwrap();
    let o = air_sim(&["evaluate", "--config", "bad.json"], dir.path());
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.starts_with("error[E_SCHEMA]: "), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);

    std::fs::write(dir.path().join("unknown.json"), r#"{ "sede": 1 }"#).unwrap();
    let o = air_sim(&["correct", "--config", "unknown.json"], dir.path());
    assert!(stderr(&o).starts_with("error[E_SCHEMA]: "), "{}", stderr(&o));
}

#[test]
fn missing_scene_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), r#", "scene": { "file": "rooms/nowhere.json" }"#);
    let o = air_sim(&["correct", "--config", &cfg, "--out", "o"], dir.path());
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.starts_with("error[E_IO]: "), "{err}");
    assert!(err.contains("nowhere.json"), "{err}");
}

#[test]
fn calibrate_without_a_session_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = air_sim(&["calibrate", "--out", "o"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error[E_INVALID_ARGUMENT]: "), "{}", stderr(&o));
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_air-sim"))
        .args(["simulate-calib", "--out", "o"])
        .current_dir(dir.path())
        .env("AIR_SIM_THREADS", "zero")
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error[E_INVALID_ARGUMENT]: "));
}

#[test]
fn noiseless_session_calibrates_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), r#", "simulation": { "corner_noise_m": 0.0, "depth_noise_m": 0.0 }"#);
    let o = air_sim(&["simulate-calib", "--config", &cfg, "--out", "sim"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let session: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sim/session.json")).unwrap()).unwrap();
    assert_eq!(session["pan"]["records"].as_array().map(Vec::len), Some(7));
    assert_eq!(session["tilt"]["records"].as_array().map(Vec::len), Some(7));

    let o = air_sim(&["calibrate", "--session", "sim/session.json", "--out", "cal"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("cal/residuals.txt")).unwrap();
    let mut rows = 0;
    for line in text.lines().filter(|l| l.contains("rms")) {
        let v: f64 = line.split_whitespace().last().unwrap().parse().unwrap();
        assert!(v < 1e-6, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 6);
    assert!(text.contains("parameter error"));
    assert!(dir.path().join("cal/calibration.json").exists());
}

#[test]
fn empty_scene_gives_a_black_framebuffer() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.json"), r#"{ "version": 1, "surfaces": [] }"#).unwrap();
    let cfg = small_config(dir.path(), r#", "scene": { "file": "empty.json" }"#);
    let o = air_sim(&["correct", "--config", &cfg, "--out", "o"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let ppm = std::fs::read(dir.path().join("o/framebuffer.ppm")).unwrap();
    let img = air_core::warp::RasterImage::from_ppm(&ppm).unwrap();
    assert!(img.width() > 0);
    assert!(img.data().iter().all(|&b| b == 0));
}

#[test]
fn evaluate_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), r#", "overlays": false"#);
    let o = air_sim(&["evaluate", "--config", &cfg, "--out", "ev"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ev/report.json")).unwrap()).unwrap();
    let cases = report["cases"].as_array().unwrap();
    assert!(cases.len() >= 7);
    for c in cases {
        assert!(c["error"].is_null(), "{c}");
    }
    assert!(dir.path().join("ev/report.txt").exists());
    assert!(dir.path().join("ev/config.json").exists());
    assert!(!dir.path().join("ev/overlays").exists());
}
