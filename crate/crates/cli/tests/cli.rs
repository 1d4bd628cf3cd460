//! End-to-end tests of the binary: exit codes, output contracts, and
//! byte-identical reruns.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_strainforge"))
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf()
}

fn nominal_config() -> PathBuf {
    repo_root().join("configs/device_nominal.json")
}

fn spin_config() -> PathBuf {
    repo_root().join("configs/spin_nominal.json")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn bands_writes_contract_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "bands",
        "--config",
        nominal_config().to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let bands = std::fs::read_to_string(dir.path().join("bands.csv")).unwrap();
    assert!(bands.starts_with("k,branch,frequency\n"));
    assert!(!bands.contains('\r'));
    let gaps = std::fs::read_to_string(dir.path().join("gaps.csv")).unwrap();
    assert!(gaps.starts_with("low,high\n"));
    assert!(gaps.lines().count() >= 2, "nominal mirror must have a gap");
    let refl = std::fs::read_to_string(dir.path().join("reflection.csv")).unwrap();
    assert!(refl.starts_with("axis,value,sigma\n"));
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["subcommand"], "bands");
    assert_eq!(manifest["config_hashes"].as_array().unwrap().len(), 1);
}

#[test]
fn characterize_reruns_are_byte_identical() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        let out = run(&[
            "characterize",
            "--spin-config",
            spin_config().to_str().unwrap(),
            "--seed",
            "11",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_code(&out, 0);
    }
    let mut names: Vec<String> = std::fs::read_dir(dir_a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.contains(&"summary.json".to_string()));
    assert!(names.contains(&"ramsey.csv".to_string()));
    for name in &names {
        if name == "manifest.json" {
            // Identical except the wall-time metadata field.
            let mut a = read_json(&dir_a.path().join(name));
            let mut b = read_json(&dir_b.path().join(name));
            a["wall_time_s"] = 0.into();
            b["wall_time_s"] = 0.into();
            assert_eq!(a, b, "manifest differs beyond wall time");
            continue;
        }
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn characterize_seeds_differ() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for (dir, seed) in [(&dir_a, "1"), (&dir_b, "2")] {
        let out = run(&[
            "characterize",
            "--seed",
            seed,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_code(&out, 0);
    }
    let a = std::fs::read(dir_a.path().join("ramsey.csv")).unwrap();
    let b = std::fs::read(dir_b.path().join("ramsey.csv")).unwrap();
    assert_ne!(a, b, "different seeds must give different noise");
}

#[test]
fn characterize_svg_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "characterize",
        "--no-noise",
        "--format",
        "svg",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let svg = std::fs::read_to_string(dir.path().join("optical_dip.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
}

#[test]
fn unknown_config_key_exits_2_and_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    let text = std::fs::read_to_string(nominal_config()).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["geometry"]["latice_constant"] = 1.0.into();
    std::fs::write(&cfg, serde_json::to_string(&v).unwrap()).unwrap();
    let out = run(&["bands", "--config", cfg.to_str().unwrap()]);
    assert_code(&out, 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("latice_constant"), "stderr: {err}");
}

#[test]
fn invalid_value_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    let text = std::fs::read_to_string(nominal_config()).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["geometry"]["beam_width"] = (-1.0).into();
    std::fs::write(&cfg, serde_json::to_string(&v).unwrap()).unwrap();
    let out = run(&["bands", "--config", cfg.to_str().unwrap()]);
    assert_code(&out, 2);
}

#[test]
fn missing_required_flag_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["bands", "--out", dir.path().to_str().unwrap()]);
    assert_code(&out, 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--config"), "stderr: {err}");
}

#[test]
fn infeasible_optimize_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let ga = dir.path().join("ga.json");
    // A degenerate search box of uniform beams: no gap, no dip, nothing
    // feasible, so the optimizer reports a numerical failure.
    std::fs::write(
        &ga,
        r#"{
            "population": 4,
            "generations": 1,
            "tournament_size": 2,
            "elitism_count": 1,
            "bounds": [
                [2.5e-7, 2.51e-7],
                [0.999, 1.0], [0.999, 1.0], [0.999, 1.0], [0.999, 1.0],
                [0.05, 0.051],
                [0.0, 0.01]
            ]
        }"#,
    )
    .unwrap();
    let out = run(&[
        "optimize",
        "--config",
        nominal_config().to_str().unwrap(),
        "--ga-config",
        ga.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 3);
}

#[test]
fn budget_matches_reference_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "budget",
        "--g-hz",
        "1e3",
        "--t2-s",
        "1e-2",
        "--fm-hz",
        "6e9",
        "--qm",
        "1e6",
        "--temp-k",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let v = read_json(&dir.path().join("budget.json"));
    let c = v["budget"]["cooperativity"].as_f64().unwrap();
    assert!((c - 10.5).abs() / 10.5 < 0.02, "C = {c}");
    assert_eq!(v["c_gt_1"], true);
}

#[test]
fn budget_requires_g_or_design() {
    let out = run(&["budget", "--t2-s", "1e-2"]);
    assert_code(&out, 2);
}

#[test]
fn simulate_spin_pi_pulse_flips_population() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq.json");
    // Resonant pi pulse on the lower branch: 5 MHz Rabi for 100 ns.
    std::fs::write(
        &seq,
        r#"{"steps": [
            {"step": "laser_init"},
            {"step": "microwave_pulse", "frequency": 2.6801e9, "rabi_frequency": 5e6, "phase": 0.0, "duration": 1e-7},
            {"step": "readout"}
        ]}"#,
    )
    .unwrap();
    let out = run(&[
        "simulate-spin",
        "--sequence",
        seq.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let v = read_json(&dir.path().join("outcome.json"));
    let expectation = v["outcome"]["expectation"].as_f64().unwrap();
    assert!(
        expectation < 0.9,
        "pi pulse should darken the readout, got {expectation}"
    );
}

#[test]
fn fit_roundtrip_on_shipped_model() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trace.csv");
    // Noiseless decaying cosine, 2 MHz, tau 3 us.
    let mut text = String::from("axis,value,sigma\n");
    for i in 0..200 {
        let t = i as f64 * 2.0e-8;
        let y = 0.5 + 0.4 * (std::f64::consts::TAU * 2.0e6 * t).cos() * (-t / 3.0e-6).exp();
        text.push_str(&format!("{t:.12e},{y:.12e},{:.12e}\n", 0.0));
    }
    std::fs::write(&csv, text).unwrap();
    let out = run(&[
        "fit",
        "--input",
        csv.to_str().unwrap(),
        "--model",
        "decaying_cosine",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let v = read_json(&dir.path().join("fit.json"));
    let f = v["parameters"][2].as_f64().unwrap();
    assert!((f - 2.0e6).abs() / 2.0e6 < 1e-6, "frequency = {f}");
}

#[test]
fn fit_unknown_model_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trace.csv");
    std::fs::write(&csv, "axis,value,sigma\n0.0,1.0,0.0\n1.0,2.0,0.0\n").unwrap();
    let out = run(&["fit", "--input", csv.to_str().unwrap(), "--model", "gaussian"]);
    assert_code(&out, 2);
}

#[test]
fn fit_bad_header_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trace.csv");
    std::fs::write(&csv, "x,y,s\n0.0,1.0,0.0\n").unwrap();
    let out = run(&[
        "fit",
        "--input",
        csv.to_str().unwrap(),
        "--model",
        "lorentzian_dip",
    ]);
    assert_code(&out, 2);
}

#[test]
fn thread_env_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .env("STRAINFORGE_THREADS", "many")
        .args(["budget", "--g-hz", "1e3", "--t2-s", "1e-2"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_code(&out, 2);
}
