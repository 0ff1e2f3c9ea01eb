use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_levy-bridge");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, json: &str) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, json).unwrap();
    p
}

/// Data rows of a CSV: everything but the `#` header line.
fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn exact_kernel_profile() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["kernel", "--exact", "--t", "1", "--check-mass", "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = data_rows(&d.path().join("kernel_exact_t1.csv"));
    assert_eq!(rows[0], "x,value");
    let at0 = rows.iter().find(|r| r.starts_with("0,")).unwrap();
    let v: f64 = at0[2..].parse().unwrap();
    assert!((v - 1.0 / std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn step_kernel_atom_and_mass() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["kernel", "--eps", "1", "--t", "1.5707963", "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    let j = json(&d.path().join("kernel_eps1_t1.5707963.json"));
    assert!((j["atom_weight"].as_f64().unwrap() - (-1.0f64).exp()).abs() < 1e-7);
    let o = run(d.path(), &["kernel", "--eps", "0.1", "--t", "1", "--check-mass"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("PASS"));
}

#[test]
fn bridge_free_preset_and_log() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(
        d.path(),
        r#"{"grid": {"x_min": -60, "x_max": 60, "n": 8192}, "boundary": {"preset": "free"}}"#,
    );
    let o = run(d.path(), &["bridge", "--config", cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let log = json(&d.path().join("bridge_free_exact_log.json"));
    assert!(log["residual"].as_f64().unwrap() <= 1e-8);
    assert!(log["g_relative_variation"].as_f64().unwrap() <= 1e-8);
    let doc = json(&d.path().join("bridge_free_exact.json"));
    assert_eq!(doc["f"].as_array().unwrap().len(), 8192);
    assert_eq!(data_rows(&d.path().join("bridge_free_exact_rho.csv"))[0], "t,x,rho");
}

#[test]
fn bridge_non_convergence_is_an_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), r#"{"max_iter": 2, "tolerances": {"tol_fit": 1e-14}}"#);
    let o = run(d.path(), &["bridge", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("residual"));
}

#[test]
fn simulate_modes() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        d.path(),
        &["simulate", "--free", "--eps", "0.1", "--paths", "100000", "--quiet"],
    );
    assert_eq!(o.status.code(), Some(0));
    let j = json(&d.path().join("simulate_free_eps0.1.json"));
    let (m, s) = (
        j["jump_count_mean"].as_f64().unwrap(),
        j["jump_count_stderr"].as_f64().unwrap(),
    );
    assert!((m - 2.0 / (std::f64::consts::PI * 0.1)).abs() <= 3.0 * s);
    assert_eq!(
        data_rows(&d.path().join("simulate_free_eps0.1_paths.csv"))[0],
        "path,time,state"
    );

    let o = run(
        d.path(),
        &[
            "simulate",
            "--conditioned",
            "--eps",
            "0.2",
            "--paths",
            "50000",
            "--hist",
            "-8,8,40",
            "--quiet",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let j = json(&d.path().join("simulate_conditioned_bimodal_eps0.2.json"));
    assert!(j["occupation_l1"].as_f64().unwrap() <= 0.05);

    let o = run(
        d.path(),
        &["simulate", "--maximal", "--eps", "0.01", "--paths", "20000", "--quiet"],
    );
    assert_eq!(o.status.code(), Some(0));
    let rows = data_rows(&d.path().join("simulate_maximal_eps0.01.csv"));
    assert_eq!(rows[0], "n,empirical,stderr,bound,pass");
    assert_eq!(rows.len(), 5);

    let o = run(d.path(), &["simulate", "--free", "--maximal"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn converge_report() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(
        d.path(),
        r#"{"grid": {"x_min": -30, "x_max": 30, "n": 1201}, "boundary": {"preset": "free"},
            "epsilon_list": [1.0, 0.5, 0.2]}"#,
    );
    let o = run(d.path(), &["converge", "--config", cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&d.path().join("converge_report.csv"));
    assert_eq!(rows[0], "eps,cf_sup_err,rho_l1_sup,p_max_err");
    assert_eq!(rows.len(), 4);
}

#[test]
fn feynman_kac_checks() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        d.path(),
        &[
            "fk",
            "--potential",
            "const:0.7",
            "--t",
            "1",
            "--paths",
            "20000",
            "--quiet",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let j = json(&d.path().join("fk_const_0.7_eps0.05.json"));
    assert!((j["estimate"]["total_mean"].as_f64().unwrap() - (-0.7f64).exp()).abs() < 1e-12);
    assert_eq!(
        data_rows(&d.path().join("fk_const_0.7_eps0.05.csv"))[0],
        "bin_lo,bin_hi,mean,stderr"
    );

    let o = run(
        d.path(),
        &[
            "fk",
            "--potential",
            "box:-1,1,1",
            "--lower-bound",
            "--symmetry",
            "--grid-check",
            "--paths",
            "50000",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.matches("PASS").count(), 3, "{err}");
    assert!(d.path().join("fk_box_m1_1_1_eps0.05_lower_bound.csv").exists());

    let o = run(
        d.path(),
        &[
            "fk",
            "--potential",
            "box:-1,1,1",
            "--lower-bound",
            "--window",
            "5",
            "--paths",
            "100",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("window"));
    let o = run(d.path(), &["fk"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_errors_name_their_fields() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), r#"{"horizon_T": -1, "epsilon_list": [0.1, 0]}"#);
    let o = run(d.path(), &["kernel", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("horizon_T:") && err.contains("epsilon_list[1]:"), "{err}");
    let cfg = write_config(d.path(), r#"{"mc": {"seed": "x"}}"#);
    let o = run(d.path(), &["kernel", "--config", cfg.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("mc.seed"));
}

#[test]
fn overwrites_are_announced() {
    let d = tempfile::tempdir().unwrap();
    run(d.path(), &["kernel", "--exact"]);
    let o = run(d.path(), &["kernel", "--exact"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("overwriting"));
    let o = run(d.path(), &["kernel", "--exact", "--quiet"]);
    assert!(o.stderr.is_empty());
}

/// Every CSV and JSON file of one run, keyed by name, without `#` lines.
fn snapshot(dir: &Path) -> Vec<(String, Vec<String>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv" || e == "json"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), data_rows(&p)))
        .collect()
}

#[test]
fn reruns_are_byte_identical() {
    let runs: [&[&str]; 3] = [
        &["simulate", "--free", "--eps", "0.2", "--paths", "5000", "--quiet"],
        &[
            "fk",
            "--potential",
            "box:-1,1,1",
            "--symmetry",
            "--lower-bound",
            "--paths",
            "5000",
            "--quiet",
        ],
        &[
            "simulate",
            "--conditioned",
            "--eps",
            "0.5",
            "--paths",
            "2000",
            "--quiet",
        ],
    ];
    for args in runs {
        let (a, b, c) = (
            tempfile::tempdir().unwrap(),
            tempfile::tempdir().unwrap(),
            tempfile::tempdir().unwrap(),
        );
        run(a.path(), args);
        // the thread count must not matter
        Command::new(BIN)
            .args(args)
            .arg("--out")
            .arg(b.path())
            .env("LEVY_BRIDGE_THREADS", "1")
            .output()
            .unwrap();
        let sa = snapshot(a.path());
        assert!(!sa.is_empty());
        assert_eq!(sa, snapshot(b.path()), "{args:?}");
        let mut other: Vec<&str> = args.to_vec();
        other.extend(["--seed", "7"]);
        run(c.path(), &other);
        assert_ne!(sa, snapshot(c.path()), "{args:?}");
    }
}

#[test]
fn bad_thread_count_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .args(["kernel", "--exact", "--out"])
        .arg(d.path())
        .env("LEVY_BRIDGE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
