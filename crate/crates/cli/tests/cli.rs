use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ddfmcw"))
}

fn write_config(dir: &std::path::Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("cfg.json");
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn compression_run_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let st = bin()
        .args([
            "chirp-compression",
            "--seed",
            "5",
            "--threads",
            "1",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let csv = std::fs::read_to_string(out.join("compression_cut.csv")).unwrap();
    assert!(csv.starts_with("x_name,x_units,x,"));
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"kind\": \"chirp-compression\""));
    assert!(manifest.contains("\"seed\": 5"));
}

#[test]
fn bad_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"trials": 0}"#,
        "{not json",
        r#"{"kind": "psd"}"#,
        r#"{"bogus": 1}"#,
    ];
    for body in cases {
        let cfg = write_config(dir.path(), body);
        let st = bin()
            .args(["crb", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path())
            .status()
            .unwrap();
        assert_eq!(st.code(), Some(2), "{body}");
    }
    let st = bin()
        .args(["crb", "--config", "/nonexistent/cfg.json"])
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
    let st = bin().args(["crb", "--scale", "huge"]).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn thread_env_fallback_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["chirp-compression", "--out"])
        .arg(dir.path())
        .env("DDFMCW_THREADS", "0")
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
    let st = bin()
        .args(["chirp-compression", "--out"])
        .arg(dir.path())
        .env("DDFMCW_THREADS", "1")
        .status()
        .unwrap();
    assert!(st.success());
}

#[test]
fn unwritable_output_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let st = bin()
        .args(["chirp-compression", "--out"])
        .arg(blocker.join("sub"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(3));
}

#[test]
fn print_config_applies_overlay_and_scale() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"trials": 11, "esn0_db": [3.0]}"#);
    let out = bin()
        .args([
            "nmse-vs-esn0",
            "--print-config",
            "--scale",
            "paper",
            "--config",
        ])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["trials"], 11);
    assert_eq!(v["scale"], "paper");
    assert_eq!(v["params"]["M"], 256);
}
