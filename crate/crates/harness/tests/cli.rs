use std::path::Path;
use std::process::Command;

fn dmala(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dmala")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn success_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"n_realizations": 3, "snr_db_list": [4, 10]}"#);
    let out = dir.path().join("out");
    let (code, err) = dmala(&["rate-boxplot", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "9"]);
    assert_eq!(code, 0, "{err}");
    for f in ["rates.csv", "rate_summary.csv", "record.json", "config.json", "plot_results.py"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let config = std::fs::read_to_string(out.join("config.json")).unwrap();
    assert!(config.contains("\"seed\": 9"));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    for text in [r#"{"bogus": 1}"#, "{", r#"{"snr_db_list": []}"#, r#"{"experiment": "tv_curve"}"#] {
        let cfg = write_config(dir.path(), text);
        assert_eq!(dmala(&["rate-boxplot", "--config", &cfg, "--out", out]).0, 2, "{text}");
    }
    let missing = dir.path().join("missing.json");
    assert_eq!(dmala(&["tv-curve", "--config", missing.to_str().unwrap(), "--out", out]).0, 2);
    assert_eq!(dmala(&["tv-curve", "--threads", "0", "--out", out]).0, 2);
    assert_eq!(dmala(&["no-such-experiment"]).0, 2);
}

#[test]
fn oracle_cap_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"channel": {"kind": "rayleigh", "nt": 9, "nr": 9, "rho": 0.0}}"#);
    let out = dir.path().join("out");
    let (code, err) = dmala(&["llr-fidelity", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("oracle cap"), "{err}");
}
