use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gabor_amalgam::io::{load_signal, save_signal, Format};
use gabor_amalgam::window::Window;
use gabor_amalgam::{GridSpec, SampledFunction};
use num_complex::Complex64;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gabor-amalgam"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn gabor-amalgam")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    assert_eq!(code(out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn gaussian_signal(dir: &Path, grid: GridSpec) -> String {
    let f = SampledFunction::from_fn(grid, |x| Complex64::new((-std::f64::consts::PI * x * x).exp(), 0.0)).unwrap();
    let path = dir.join("signal.csv");
    save_signal(&f, &path, Format::Csv).unwrap();
    path.to_str().unwrap().to_owned()
}

fn write_operator(path: &Path, grid: GridSpec, terms: &[(f64, f64)]) {
    let n = grid.len();
    let terms: Vec<Value> = terms
        .iter()
        .map(|&(shift, c)| serde_json::json!({ "shift": shift, "values": vec![[c, 0.0]; n] }))
        .collect();
    let doc = serde_json::json!({ "grid": { "L": grid.period(), "s": grid.samples_per_unit() }, "terms": terms });
    fs::write(path, serde_json::to_string(&doc).unwrap()).unwrap();
}

#[test]
fn box_window_is_a_tight_frame() {
    let v = json(&run(&["--window", "box:1", "--lattice", "1,1", "bounds"]));
    assert!((v["A"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((v["B"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn bounds_csv_has_header_and_one_row() {
    let out = run(&["--window", "box:1", "--format", "csv", "bounds"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "A,B,condition_number");
    assert_eq!(lines.len(), 2);
}

#[test]
fn undersampled_system_exits_3() {
    let out = run(&["--window", "gauss:1", "--lattice", "2,1", "bounds"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("not a frame"));
}

#[test]
fn bad_inputs_exit_2() {
    assert_eq!(code(&run(&["--window", "no-such-window.csv", "bounds"])), 2);
    assert_eq!(code(&run(&["--window", "box:1", "--grid", "8", "bounds"])), 2);
    assert_eq!(code(&run(&["--window", "box:1", "--lattice", "0.3,1", "bounds"])), 2);
    assert_eq!(code(&run(&["--window", "box:1", "--format", "xml", "bounds"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["bounds"])), 2);
}

#[test]
fn help_exits_0() {
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn box_dual_atoms_are_the_atoms_themselves() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("duals");
    let report = json(&run(&["--window", "box:1", "--out", out_dir.to_str().unwrap(), "dual"]));
    assert_eq!(report["atoms"].as_u64(), Some(8 * 64));

    let grid = GridSpec::new(8, 64).unwrap();
    let g = Window::Box { width: 1.0 }.sample(grid).unwrap();
    let dual = load_signal(&out_dir.join("atom_0_0_0.csv"), Some(grid)).unwrap();
    let err = g
        .values()
        .iter()
        .zip(dual.values())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-12, "dual differs from window by {err}");

    let manifest: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["atoms"].as_array().unwrap().len(), 512);
    assert!(out_dir.join("decay.json").is_file());
    assert!(out_dir.join("report.json").is_file());
}

#[test]
fn gaussian_dual_manifest_counts_every_lattice_point() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("g");
    let args = [
        "--grid",
        "4,16",
        "--window",
        "gauss:1",
        "--lattice",
        "1,0.5",
        "--out",
        out_dir.to_str().unwrap(),
        "dual",
    ];
    let report = json(&run(&args));
    // 4 time nodes times 32 frequency nodes.
    assert_eq!(report["atoms"].as_u64(), Some(128));
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["atoms"].as_array().unwrap().len(), 128);
    let files = fs::read_dir(&out_dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("atom_"));
    assert_eq!(files.count(), 128);
    assert!(report["neumann"]["left_residual"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn hat_dual_continuity_shrinks_with_refinement() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("hat");
    let args = [
        "--window",
        "hat:1",
        "--lattice",
        "0.5,1",
        "--refine",
        "16,32,64",
        "--out",
        out_dir.to_str().unwrap(),
        "dual",
    ];
    json(&run(&args));
    let table: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("continuity.json")).unwrap()).unwrap();
    let row = &table["rows"][0];
    assert_eq!(row["flagged"], Value::Bool(false));
    for r in row["ratios"].as_array().unwrap() {
        assert!(r.as_f64().unwrap() < 0.75);
    }
}

#[test]
fn refine_rejects_file_windows() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridSpec::new(8, 64).unwrap();
    let path = dir.path().join("g.csv");
    save_signal(&Window::Box { width: 1.0 }.sample(grid).unwrap(), &path, Format::Csv).unwrap();
    let out = run(&[
        "--window",
        path.to_str().unwrap(),
        "--refine",
        "16,32",
        "--out",
        dir.path().join("d").to_str().unwrap(),
        "dual",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn box_reconstruction_is_exact_at_full_range() {
    let dir = tempfile::tempdir().unwrap();
    let signal = gaussian_signal(dir.path(), GridSpec::new(8, 64).unwrap());
    let rows = json(&run(&["--window", "box:1", "reconstruct", "--signal", &signal]));
    let row = &rows[0];
    assert_eq!(row["N"].as_u64(), Some(4));
    assert_eq!(row["M"].as_u64(), Some(32));
    for key in ["err_l2", "err_linf", "err_amalgam"] {
        assert!(row[key].as_f64().unwrap() <= 1e-10, "{key} = {}", row[key]);
    }
    assert!(row.get("fejer_err_l2").is_none());
}

#[test]
fn reconstruction_sweep_covers_every_pair() {
    let dir = tempfile::tempdir().unwrap();
    let signal = gaussian_signal(dir.path(), GridSpec::new(8, 64).unwrap());
    let out = run(&[
        "--window",
        "box:1",
        "--fejer",
        "--format",
        "csv",
        "reconstruct",
        "--signal",
        &signal,
        "--n",
        "1,4",
        "--m",
        "2,8,32",
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("N,M,err_l2,err_linf,err_amalgam,fejer_err_l2,fejer_err_linf,fejer_err_amalgam")
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|t| t.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 6);
    // Raw error does not grow with M at fixed N.
    for n in [1.0, 4.0] {
        let errs: Vec<f64> = rows.iter().filter(|r| r[0] == n).map(|r| r[2]).collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{errs:?}");
    }
}

#[test]
fn zero_signal_reconstructs_with_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridSpec::new(8, 64).unwrap();
    let path = dir.path().join("zero.json");
    save_signal(&SampledFunction::zeros(grid), &path, Format::Json).unwrap();
    let rows = json(&run(&[
        "--window",
        "hat:1",
        "--lattice",
        "0.5,1",
        "reconstruct",
        "--signal",
        path.to_str().unwrap(),
        "--n",
        "0,2",
        "--m",
        "0,5",
    ]));
    for row in rows.as_array().unwrap() {
        for key in ["err_l2", "err_linf", "err_amalgam"] {
            assert_eq!(row[key].as_f64(), Some(0.0));
        }
    }
}

#[test]
fn signal_on_wrong_grid_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let signal = gaussian_signal(dir.path(), GridSpec::new(4, 64).unwrap());
    assert_eq!(
        code(&run(&["--window", "box:1", "reconstruct", "--signal", &signal])),
        2
    );
}

#[test]
fn norms_of_box_window() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridSpec::new(8, 64).unwrap();
    let g = Window::Box { width: 1.0 }.sample(grid).unwrap();
    let path = dir.path().join("box.csv");
    save_signal(&g, &path, Format::Csv).unwrap();
    let v = json(&run(&[
        "--p",
        "1,2",
        "--q",
        "1,2",
        "norms",
        "--signal",
        path.to_str().unwrap(),
    ]));
    let rows = v["amalgam_norm"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    let find = |p: f64, q: f64| {
        rows.iter()
            .find(|r| r["p"].as_f64() == Some(p) && r["q"].as_f64() == Some(q))
            .unwrap()["norm"]
            .as_f64()
            .unwrap()
    };
    assert!((find(1.0, 1.0) - 1.0).abs() < 1e-12);
    let l2 = (g.values().iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.step()).sqrt();
    assert!((find(2.0, 2.0) - l2).abs() < 1e-12);
    assert!(v["sequence_norm"].as_array().unwrap().is_empty());
}

#[test]
fn norms_include_sequence_norms_per_system() {
    let dir = tempfile::tempdir().unwrap();
    let signal = gaussian_signal(dir.path(), GridSpec::new(8, 64).unwrap());
    let v = json(&run(&[
        "--window",
        "box:1",
        "--window",
        "hat:1",
        "--lattice",
        "0.5,1",
        "norms",
        "--signal",
        &signal,
    ]));
    let seq = v["sequence_norm"].as_array().unwrap();
    assert_eq!(seq.len(), 2);
    assert_eq!(seq[1]["system"].as_u64(), Some(1));
}

#[test]
fn algebra_inverts_a_multiple_of_identity() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridSpec::new(8, 64).unwrap();
    let path = dir.path().join("two.json");
    write_operator(&path, grid, &[(0.0, 2.0)]);
    let v = json(&run(&[
        "algebra",
        "--operator",
        path.to_str().unwrap(),
        "--action",
        "invert",
    ]));
    assert!(v["report"]["residual"].as_f64().unwrap() <= 1e-14);
    let terms = v["operator"]["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 1);
    for z in terms[0]["values"].as_array().unwrap() {
        assert!((z[0].as_f64().unwrap() - 0.5).abs() < 1e-14);
        assert!(z[1].as_f64().unwrap().abs() < 1e-14);
    }
}

#[test]
fn algebra_rejects_singular_operator() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridSpec::new(2, 8).unwrap();
    let path = dir.path().join("sing.json");
    // I - T_1 annihilates constants.
    write_operator(&path, grid, &[(0.0, 1.0), (1.0, -1.0)]);
    let out = run(&["algebra", "--operator", path.to_str().unwrap(), "--action", "invert"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn algebra_adjoint_is_an_involution() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridSpec::new(8, 64).unwrap();
    let path = dir.path().join("op.json");
    write_operator(&path, grid, &[(0.0, 2.0), (1.0, 1.0), (-0.5, 0.25)]);
    let once = dir.path().join("once.json");
    let twice = dir.path().join("twice.json");
    json(&run(&[
        "--out",
        once.to_str().unwrap(),
        "algebra",
        "--operator",
        path.to_str().unwrap(),
        "--action",
        "adjoint",
    ]));
    json(&run(&[
        "--out",
        twice.to_str().unwrap(),
        "algebra",
        "--operator",
        once.to_str().unwrap(),
        "--action",
        "adjoint",
    ]));
    let a: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let b: Value = serde_json::from_str(&fs::read_to_string(&twice).unwrap()).unwrap();
    assert_eq!(a["terms"], b["terms"]);
}

#[test]
fn algebra_weighted_norm() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridSpec::new(8, 64).unwrap();
    let path = dir.path().join("op.json");
    write_operator(&path, grid, &[(0.0, 2.0), (1.0, 1.0)]);
    let v = json(&run(&[
        "--weight",
        "poly:1",
        "algebra",
        "--operator",
        path.to_str().unwrap(),
        "--action",
        "norm",
    ]));
    // 2·w(0) + 1·w(1) = 2 + 2.
    assert!((v["aw_norm"].as_f64().unwrap() - 4.0).abs() < 1e-12);
}

#[test]
fn algebra_compose_needs_other() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridSpec::new(2, 8).unwrap();
    let path = dir.path().join("op.json");
    write_operator(&path, grid, &[(0.0, 2.0)]);
    let p = path.to_str().unwrap();
    assert_eq!(code(&run(&["algebra", "--operator", p, "--action", "compose"])), 2);
    let v = json(&run(&["algebra", "--operator", p, "--action", "compose", "--other", p]));
    assert_eq!(v["operator"]["terms"][0]["values"][0][0].as_f64(), Some(4.0));
}

#[test]
fn repeated_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let signal = gaussian_signal(dir.path(), GridSpec::new(8, 64).unwrap());
    let outputs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("r{i}.csv"));
            let args = [
                "--window",
                "hat:1",
                "--lattice",
                "0.5,1",
                "--format",
                "csv",
                "--out",
                out.to_str().unwrap(),
                "reconstruct",
                "--signal",
                &signal,
                "--n",
                "1,3",
            ];
            assert_eq!(code(&run(&args)), 0);
            fs::read(out).unwrap()
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn thread_count_does_not_change_results() {
    let args = ["--window", "gauss:1", "--lattice", "1,0.5", "--grid", "4,16", "bounds"];
    let single = bin().env("GABOR_AMALGAM_THREADS", "1").args(args).output().unwrap();
    let many = bin().env("GABOR_AMALGAM_THREADS", "4").args(args).output().unwrap();
    assert_eq!(code(&single), 0);
    assert_eq!(single.stdout, many.stdout);
    let bad = bin().env("GABOR_AMALGAM_THREADS", "zero").args(args).output().unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn toml_config_drives_a_run_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        r#"
grid = { L = 8, s = 64 }
windows = [{ name = "box", params = [1.0] }]
lattices = [{ alpha = 1.0, beta = 1.0 }]
output = { format = "csv" }
"#,
    )
    .unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "bounds"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .starts_with("A,B,condition_number"));

    let v = json(&run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "json",
        "--lattice",
        "0.5,1",
        "bounds",
    ]));
    assert!((v["A"].as_f64().unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn json_config_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"grid": {"L": 8, "s": 64}, "windows": [{"name": "box", "params": [1.0]}], "exponents": {"p": 1, "q": [1, "inf"]}}"#,
    )
    .unwrap();
    let signal = gaussian_signal(dir.path(), GridSpec::new(8, 64).unwrap());
    let v = json(&run(&["--config", cfg.to_str().unwrap(), "norms", "--signal", &signal]));
    assert_eq!(v["amalgam_norm"].as_array().unwrap().len(), 2);
    assert_eq!(v["amalgam_norm"][1]["q"], Value::String("inf".into()));
}
