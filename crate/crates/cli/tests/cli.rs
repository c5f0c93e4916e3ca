use std::path::Path;
use std::process::{Command, Output};

fn nclab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nclab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("NCLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn malformed_config_exits_2_with_position() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config(tmp.path(), "{\n  \"n\": 2,\n  \"horizon\": ,\n}");
    let out = nclab(&["density", "--config", &c], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn schema_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    for text in [
        r#"{"n": 3}"#,
        r#"{"times": [0.7, 0.3, 1.0]}"#,
        r#"{"nodes": 4}"#,
        r#"{"mode": "verify"}"#,
    ] {
        let c = config(tmp.path(), text);
        let out = nclab(&["density", "--config", &c], tmp.path());
        assert_eq!(out.status.code(), Some(2), "{text}");
    }
    let c = config(tmp.path(), r#"{"n": 4, "characteristic": {"slices": [{"function": null}]}}"#);
    let out = nclab(&["characteristic", "--config", &c], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let missing = tmp.path().join("absent.json");
    let out = nclab(&["density", "--config", missing.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_thread_variable_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config(tmp.path(), "{}");
    let out = Command::new(env!("CARGO_BIN_EXE_nclab"))
        .args(["density", "--config", &c, "--out"])
        .arg(tmp.path())
        .env("NCLAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn density_table_is_self_describing() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config(tmp.path(), r#"{"times": [0.5, 1.0], "grid": {"lo": -1.0, "hi": 1.0, "points": 3}}"#);
    let out = nclab(&["density", "--config", &c, "--threads", "2"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(tmp.path().join("density.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# nclab-core "));
    assert!(lines[1].starts_with("# config_sha256 "));
    assert_eq!(lines[2], "# mode density");
    assert_eq!(lines[3], "t,x,rho1");
    assert_eq!(lines.len(), 4 + 6);
    // t = T, x = 0: 1 / sqrt(pi)
    let row: Vec<f64> = lines[8].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(&row[..2], &[1.0, 0.0]);
    assert!((row[2] - 0.5641895835477563).abs() < 1e-12);
}

#[test]
fn verify_defaults_pass() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config(tmp.path(), "{}");
    let out = nclab(&["verify", "--config", &c], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(tmp.path().join("verify.csv")).unwrap();
    assert!(text.contains("check,measured,tolerance,status"));
    assert!(!text.contains(",fail"));
}

#[test]
fn failing_check_exits_1_and_is_named() {
    // one Gauss-Legendre node cannot resolve the Fredholm pfaffian
    let tmp = tempfile::tempdir().unwrap();
    let c = config(
        tmp.path(),
        r#"{"quadrature": {"abs_tol": 1e-10, "nodes": 1},
            "verify": {"matrices_per_dim": 1, "gram_sizes": [2], "gram_ratios": [0.5],
                       "bruteforce_points": 1, "series_points": 1, "normalization_sizes": [2],
                       "rains_nodes": [4], "characteristic_cases": 1}}"#,
    );
    let out = nclab(&["verify", "--config", &c], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("characteristic one time"), "{err}");
}
