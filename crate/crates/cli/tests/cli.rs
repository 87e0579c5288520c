use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn phasespace(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasespace"))
        .args(args)
        .current_dir(dir)
        .env_remove("PHASESPACE_OUT")
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn ground_reports_sigma_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = phasespace(dir.path(), &["ground"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["sigma_gnd"].as_f64().unwrap() - 1.59577).abs() < 1e-5);
    for key in ["mean_energy_ratio", "most_probable_radius", "residual"] {
        assert!(v[key].is_number(), "{key}");
    }
    let m = read_json(&dir.path().join("out/ground.manifest.json"));
    assert_eq!(m["subcommand"], "ground");
    assert_eq!(m["params"]["tol"], 1e-12);
    assert_eq!(m["outputs"][0], "ground.json");
    assert!(m["version"].is_string());
}

#[test]
fn bracket_prints_the_cubic_term() {
    let dir = tempfile::tempdir().unwrap();
    let out = phasespace(dir.path(), &["bracket", "--f", "q1*p1^2", "--g", "q1^2*p1^4", "--order", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "48*p1^3");
    let full = phasespace(dir.path(), &["bracket", "--f", "q1^2", "--g", "p1^2", "--spec", "poisson"]);
    assert_eq!(String::from_utf8(full.stdout).unwrap().trim(), "4*q1*p1");
    let v = read_json(&dir.path().join("out/bracket.json"));
    assert_eq!(v["complete"], true);
}

#[test]
fn spectra_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = phasespace(dir.path(), &["spectra", "--family", "energy", "--n", "8", "--samples", "301"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = read_csv(&dir.path().join("out/spectra_energy.csv"));
    assert_eq!(header, ["x", "T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8"]);
    assert_eq!(rows.len(), 301);
    for row in &rows {
        let x: f64 = row[0].parse().unwrap();
        for (k, field) in row[1..].iter().enumerate() {
            let v: f64 = field.parse().unwrap();
            assert_eq!(v, phasespace::spectral::t_h_or_zero(k as u64 + 1, x));
            assert_eq!(phasespace_num(v), *field);
        }
    }

    let out = phasespace(dir.path(), &["spectra", "--family", "angular", "--samples", "11"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = read_csv(&dir.path().join("out/spectra_angular.csv"));
    assert_eq!(header, ["x", "T-3", "T-2", "T-1", "T0", "T1", "T2", "T3"]);
    assert_eq!(rows.len(), 11);

    let out = phasespace(dir.path(), &["spectra", "--family", "gh", "--samples", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = read_csv(&dir.path().join("out/spectra_gh.csv"));
    assert_eq!(header, ["abs_q", "abs_p", "g_E1", "g_E2"]);
    assert_eq!(rows.len(), 64);
}

fn phasespace_num(x: f64) -> String {
    format!("{x:.16e}")
}

#[test]
fn scaled_units_move_the_levels() {
    let dir = tempfile::tempdir().unwrap();
    let out = phasespace(dir.path(), &["spectra", "--units", "scaled", "--samples", "3"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["levels"][0], -1.0);
    assert_eq!(v["levels"][1], -0.25);
}

#[test]
fn bad_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let unknown_flag = phasespace(dir.path(), &["ground", "--nope", "3"]);
    assert_eq!(unknown_flag.status.code(), Some(1));
    let bad_expr = phasespace(dir.path(), &["bracket", "--f", "q1**", "--g", "p1"]);
    assert_eq!(bad_expr.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_expr.stderr).contains("cannot parse --f"));
    let missing = phasespace(dir.path(), &["bracket", "--g", "p1"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("missing operand"));
    let family = phasespace(dir.path(), &["spectra", "--family", "spin"]);
    assert_eq!(family.status.code(), Some(1));

    std::fs::write(dir.path().join("c.toml"), "[ground]\ntolerance = 1e-9\n").unwrap();
    let key = phasespace(dir.path(), &["--config", "c.toml", "ground"]);
    assert_eq!(key.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&key.stderr).contains("tolerance"));
    std::fs::write(dir.path().join("d.toml"), "colour = 3\n").unwrap();
    let top = phasespace(dir.path(), &["--config", "d.toml", "ground"]);
    assert_eq!(top.status.code(), Some(1));
    let absent = phasespace(dir.path(), &["--config", "absent.toml", "ground"]);
    assert_eq!(absent.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = phasespace(dir.path(), &["evolve", "--n-q", "32", "--n-p", "32", "--dt", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    let leak = phasespace(
        dir.path(),
        &["evolve", "--n-q", "64", "--n-p", "64", "--bounds=-8,8,-8,8", "--boundary-tol", "1e-12"],
    );
    assert_eq!(leak.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&leak.stderr).contains("boundary"));
}

#[test]
fn flags_beat_environment_beat_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "out_dir = \"from_config\"\nthreads = 1\n[ground]\ntol = 1e-9\n")
        .unwrap();
    let run = |args: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_phasespace"));
        cmd.args(args).current_dir(dir.path()).env_remove("PHASESPACE_OUT");
        if let Some(e) = env {
            cmd.env("PHASESPACE_OUT", e);
        }
        cmd.output().unwrap()
    };
    assert_eq!(run(&["--config", "c.toml", "ground"], None).status.code(), Some(0));
    let m = read_json(&dir.path().join("from_config/ground.manifest.json"));
    assert_eq!(m["params"]["tol"], 1e-9);
    assert_eq!(m["threads"], 1);

    assert_eq!(run(&["--config", "c.toml", "ground", "--tol", "1e-11"], Some("from_env")).status.code(), Some(0));
    let m = read_json(&dir.path().join("from_env/ground.manifest.json"));
    assert_eq!(m["params"]["tol"], 1e-11);

    let out = run(&["--config", "c.toml", "--out", "from_flag", "ground"], Some("from_env"));
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("from_flag/ground.json").exists());
}

#[test]
fn manifest_reruns_reproduce_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--out", "a", "scatter", "--n-particles", "3000", "--seed", "5", "--radius", "1e4"];
    assert_eq!(phasespace(dir.path(), &args).status.code(), Some(0));
    let again = phasespace(dir.path(), &["--config", "a/scatter.manifest.json", "--out", "b", "scatter"]);
    assert_eq!(again.status.code(), Some(0));
    for f in ["scatter.csv", "scatter.json"] {
        let x = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let y = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    let wrong = phasespace(dir.path(), &["--config", "a/scatter.manifest.json", "ground"]);
    assert_eq!(wrong.status.code(), Some(1));
}

#[test]
fn scatter_outputs_are_thread_count_independent() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["scatter", "--n-particles", "20000", "--seed", "9", "--radius", "1e4"];
    for (t, out) in [("1", "t1"), ("3", "t3")] {
        let mut args = vec!["--threads", t, "--out", out];
        args.extend(base);
        assert_eq!(phasespace(dir.path(), &args).status.code(), Some(0));
    }
    let a = std::fs::read(dir.path().join("t1/scatter.csv")).unwrap();
    let b = std::fs::read(dir.path().join("t3/scatter.csv")).unwrap();
    assert_eq!(a, b);
    let (header, rows) = read_csv(&dir.path().join("t1/scatter.csv"));
    assert_eq!(header, ["theta_mid", "estimate", "stderr", "rutherford_formula", "ratio"]);
    assert_eq!(rows.len(), 12);
    let v = read_json(&dir.path().join("t1/scatter.json"));
    for key in ["chi2", "dof", "seed"] {
        assert!(v[key].is_number(), "{key}");
    }
    assert_eq!(v["seed"], 9);
}

#[test]
fn evolve_dump_matches_its_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = phasespace(dir.path(), &["evolve", "--n-q", "64", "--n-p", "48", "--boundary-tol", "1e-3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let bytes = std::fs::read(dir.path().join("out/evolve_state.bin")).unwrap();
    assert_eq!(&bytes[..8], b"PSGRID01");
    let n_q = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let n_p = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    assert_eq!((n_q, n_p), (64, 48));
    let header = 8 + 16 + 5 * 8;
    assert_eq!(bytes.len(), header + 8 * n_q * n_p);
    let grid = phasespace::dynamics::PhaseGrid::read_dump(&bytes[..]).unwrap();
    assert!((grid.time - std::f64::consts::FRAC_PI_4).abs() < 1e-12);

    let (header, rows) = read_csv(&dir.path().join("out/evolve_moments.csv"));
    assert_eq!(header, ["t", "mean_q", "mean_p", "mean_p2", "mass"]);
    let summary = read_json(&dir.path().join("out/evolve.json"));
    assert_eq!(rows.len(), summary["steps"].as_u64().unwrap() as usize + 1);
    let last: f64 = rows.last().unwrap()[3].parse().unwrap();
    assert_eq!(last, summary["mean_p2"].as_f64().unwrap());
}

#[test]
fn scan_zeeman_and_excite_emit_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = phasespace(dir.path(), &["scan", "--sigma-q", "0.5,2.0", "--sigma-p", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = read_csv(&dir.path().join("out/scan.csv"));
    assert_eq!(header, ["sigma_q", "sigma_p", "value", "error", "sign"]);
    assert_eq!(rows[0][4], "negative");
    assert_eq!(rows[1][4], "nonnegative");

    let out = phasespace(dir.path(), &["zeeman", "--n-max", "3", "--samples", "1000"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let maxes: Vec<i64> = v["levels"].as_array().unwrap().iter().map(|l| l["max_m"].as_i64().unwrap()).collect();
    assert_eq!(maxes, [2, 3, 4]);

    let out = phasespace(dir.path(), &["excite", "--samples", "4", "--t-max", "1.5"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = read_csv(&dir.path().join("out/excite.csv"));
    assert_eq!(header, ["t", "pr_E1", "pr_E2", "pr_qt_E1", "pr_qt_E2"]);
    assert_eq!(rows.len(), 4);
    let p2: f64 = rows[0][2].parse().unwrap();
    assert!(p2.abs() < 1e-8);
}

#[test]
fn verify_runs_selected_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let out = phasespace(dir.path(), &["verify", "--only", "5,13"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("PASS [ 5]") && text.contains("PASS [13]"), "{text}");
    let bad = phasespace(dir.path(), &["verify", "--only", "99"]);
    assert_eq!(bad.status.code(), Some(1));
}
