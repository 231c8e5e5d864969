use std::path::Path;
use std::process::{Command, Output};

fn winding(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_winding"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn kernel_table_for_gaussian() {
    let d = tempfile::tempdir().unwrap();
    let out = winding(
        d.path(),
        &[
            "kernel",
            "--builtin",
            "gaussian",
            "--xmax",
            "10",
            "--n",
            "2001",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(d.path().join("kernel.csv")).unwrap();
    assert!(text.starts_with("x,K,Ktilde,KtildeStar\n"));
    let r = rows(&d.path().join("kernel.csv"));
    assert_eq!(r.len(), 2001);
    assert!(r.iter().all(|row| row[2] >= 0.0));
    assert!(d.path().join("kernel_config.json").exists());
}

#[test]
fn kernel_sinc_at_one() {
    let d = tempfile::tempdir().unwrap();
    winding(
        d.path(),
        &["kernel", "--builtin", "sinc", "--xmax", "10", "--n", "2001"],
    );
    let r = rows(&d.path().join("kernel.csv"));
    let row = r.iter().find(|row| row[0] == 1.0).unwrap();
    assert!((row[1] - 0.5).abs() < 1e-12);
}

#[test]
fn kernel_flags_lattice_points() {
    let d = tempfile::tempdir().unwrap();
    let out = winding(
        d.path(),
        &[
            "kernel",
            "--builtin",
            "atomic",
            "--params",
            "1:0.5,3:0.5",
            "--xmax",
            "10",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let side = json(&d.path().join("kernel_singular.json"));
    let pts: Vec<f64> = side["singular_points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(pts.len(), 4);
    for (k, p) in pts.iter().enumerate() {
        assert!((p - k as f64 * std::f64::consts::PI).abs() < 1e-9);
    }
    assert!(side["seed"].is_u64());
}

#[test]
fn variance_routes_agree() {
    let d = tempfile::tempdir().unwrap();
    let out = winding(
        d.path(),
        &[
            "variance",
            "--builtin",
            "gaussian",
            "--tmin",
            "1",
            "--tmax",
            "200",
            "--tcount",
            "30",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let r = rows(&d.path().join("variance.csv"));
    assert_eq!(r.len(), 30);
    for row in &r {
        assert!((row[2] - row[3]).abs() < 1e-6 * row[2]);
    }
}

#[test]
fn bessel_log_column_stabilizes() {
    let d = tempfile::tempdir().unwrap();
    winding(
        d.path(),
        &[
            "variance",
            "--builtin",
            "bessel_j0",
            "--tmin",
            "100",
            "--tmax",
            "400",
            "--tcount",
            "5",
        ],
    );
    let r = rows(&d.path().join("variance.csv"));
    let col: Vec<f64> = r.iter().map(|row| row[6]).collect();
    let (lo, hi) = col
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), v| (l.min(*v), h.max(*v)));
    assert!(hi / lo < 1.1, "{col:?}");
}

#[test]
fn degenerate_measure_exits_two() {
    let d = tempfile::tempdir().unwrap();
    let out = winding(
        d.path(),
        &["variance", "--builtin", "atomic", "--params", "2:1"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_one() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        winding(d.path(), &["simulate", "--bogus"]).status.code(),
        Some(1)
    );
    assert_eq!(
        winding(d.path(), &["kernel", "--builtin", "nope"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        winding(d.path(), &["variance", "--tmin", "5", "--tmax", "1"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn single_atom_simulation_is_exact() {
    let d = tempfile::tempdir().unwrap();
    let out = winding(
        d.path(),
        &[
            "simulate",
            "--builtin",
            "atomic",
            "--params",
            "2:1",
            "--T",
            "5",
            "--paths",
            "50",
            "--paths-csv",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = rows(&d.path().join("simulate_paths.csv"));
    assert_eq!(r.len(), 50);
    assert!(r.iter().all(|row| (row[2] + 10.0).abs() < 1e-9));
}

#[test]
fn simulation_is_reproducible_across_threads() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--builtin",
        "sinc",
        "--T",
        "10",
        "--paths",
        "300",
        "--seed",
        "5",
        "--theory",
    ];
    winding(a.path(), &[&args[..], &["--threads", "1"]].concat());
    winding(b.path(), &[&args[..], &["--threads", "3"]].concat());
    let ja = std::fs::read(a.path().join("simulate.json")).unwrap();
    let jb = std::fs::read(b.path().join("simulate.json")).unwrap();
    assert_eq!(ja, jb);
    let v = json(&a.path().join("simulate.json"));
    assert_eq!(v["seed"], 5);
    assert!(v["z"].as_f64().unwrap().abs() < 3.5);
}

#[test]
fn gaussian_simulation_against_theory() {
    let d = tempfile::tempdir().unwrap();
    let out = winding(
        d.path(),
        &[
            "simulate",
            "--builtin",
            "gaussian",
            "--T",
            "50",
            "--paths",
            "2000",
            "--theory",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let v = json(&d.path().join("simulate.json"));
    assert!(v["z"].as_f64().unwrap().abs() < 3.0, "{v}");
}

#[test]
fn config_precedence() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"builtin": "sinc", "seed": 11, "n_paths": 77}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_winding"))
        .args(["simulate", "--print-config", "--config"])
        .arg(&cfg)
        .args(["--seed", "12"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["builtin"], "sinc");
    assert_eq!(v["seed"], 12);
    assert_eq!(v["n_paths"], 77);
    assert_eq!(v["x_count"], 2001);

    let out = Command::new(env!("CARGO_BIN_EXE_winding"))
        .args(["kernel", "--print-config"])
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["seed"].as_u64(), Some(gsp_winding::stats::DEFAULT_SEED));

    std::fs::write(&cfg, r#"{"sede": 1}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_winding"))
        .args(["kernel", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn measure_file_input() {
    let d = tempfile::tempdir().unwrap();
    let m = d.path().join("m.json");
    std::fs::write(
        &m,
        r#"{"atoms": [{"freq": 0.7, "mass": 0.2}], "density": {"builtin": "gaussian"}}"#,
    )
    .unwrap();
    let out = winding(
        d.path(),
        &[
            "variance",
            "--measure",
            m.to_str().unwrap(),
            "--tcount",
            "8",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = rows(&d.path().join("variance.csv"));
    // mean winding is -T ∫λ dρ
    assert!((r[0][1] + 0.14 * r[0][0]).abs() < 1e-9);
}

#[test]
fn classify_regimes() {
    for (builtin, params, regime) in [
        ("gaussian", "", "linear"),
        ("bessel_j0", "", "T log T"),
        ("power_cosine", "0.25", "power"),
        ("atomic", "1:0.5,3:0.5", "quadratic"),
    ] {
        let d = tempfile::tempdir().unwrap();
        let mut args = vec!["classify", "--builtin", builtin];
        if !params.is_empty() {
            args.extend(["--params", params]);
        }
        let out = winding(d.path(), &args);
        assert_eq!(out.status.code(), Some(0), "{builtin}");
        let v = json(&d.path().join("classify.json"));
        assert!(
            v["regime"].as_str().unwrap().starts_with(regime),
            "{builtin}: {v}"
        );
        if builtin == "power_cosine" {
            let e = v["exponent"].as_f64().unwrap();
            assert!((1.4..=1.6).contains(&e));
        }
    }
}

#[test]
fn verify_two_atom_quadratic_profile() {
    let d = tempfile::tempdir().unwrap();
    let out = winding(
        d.path(),
        &[
            "verify",
            "--builtin",
            "atomic",
            "--params",
            "1:0.5,3:0.5",
            "--paths",
            "1000",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let v = json(&d.path().join("verify.json"));
    assert_eq!(v["profile"], "quadratic");
    let clt = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "clt")
        .unwrap();
    assert!(clt["passed"].is_null());
}

#[test]
fn verify_failure_exits_five() {
    // sinc grows linearly, so the quadratic growth check must fail
    let d = tempfile::tempdir().unwrap();
    let out = winding(
        d.path(),
        &[
            "verify",
            "--builtin",
            "sinc",
            "--profile",
            "quadratic",
            "--paths",
            "200",
        ],
    );
    assert_eq!(out.status.code(), Some(5));
}
