use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ncdist_cli::problem::{ElementSpec, ProblemFile, SeminormSpec, SetSpec, Task};
use ncdist_core::{AlgebraElement, CMatrix, Combine, FiniteAlgebra, Seminorm};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn ncdist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncdist")).args(args).output().expect("cli runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn malformed_json_exits_1_with_location() {
    let out = ncdist(&["rho", "--problem", path(&fixture("malformed.json"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("malformed.json:4:"), "{err}");
    assert!(err.contains("seminorm"), "{err}");
}

#[test]
fn truncated_json_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("cut.json");
    std::fs::write(&p, "{\n  \"algebra\": [2],\n  \"seminorm\": ").unwrap();
    let out = ncdist(&["rho", "--problem", path(&p)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("cut.json:3:"));
}

#[test]
fn shape_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("shape.json");
    std::fs::write(&p, r#"{"algebra": [2], "seminorm": {"type": "commutator", "d": [[[[0, 1], [1, 0], [0, 0]]]]}}"#).unwrap();
    let out = ncdist(&["rho", "--problem", path(&p)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("seminorm.d[0]"));
}

#[test]
fn empty_moment_set_exits_3_for_hausdorff() {
    let out = ncdist(&["hausdorff", "--problem", path(&fixture("empty_moment.json"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn empty_moment_set_gives_infinite_infimum() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("i.csv");
    let out = ncdist(&["infimum", "--problem", path(&fixture("empty_moment.json")), "--csv", path(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "I[0,1],I,inf,inf,inf,exact-lp,0,0.00000000000e0");
}

#[test]
fn single_rho_pair_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.json");
    let mut problem: Value = serde_json::from_slice(&std::fs::read(fixture("metric3.json")).unwrap()).unwrap();
    problem["pairs"] = serde_json::json!([[0, 2]]);
    std::fs::write(&p, serde_json::to_vec(&problem).unwrap()).unwrap();
    let csv = dir.path().join("r.csv");
    let out = ncdist(&["rho", "--problem", path(&p), "--csv", path(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, ["instance_id,quantity,value,lower,upper,method,iterations,time_ms", lines[1]]);
    assert!(lines[1].starts_with("rho[0,2],rho,1.00000000000e0,"));
}

#[test]
fn manifest_hash_tracks_file_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let original = std::fs::read(fixture("metric3.json")).unwrap();
    let hash = |bytes: &[u8], name: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, bytes).unwrap();
        let out = ncdist(&["rho", "--problem", path(&p)]);
        assert_eq!(out.status.code(), Some(0));
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        v["manifest"]["input_sha256"].as_str().unwrap().to_string()
    };
    let a = hash(&original, "a.json");
    let b = hash(&original, "b.json");
    let mut changed = original.clone();
    changed.push(b'\n');
    let c = hash(&changed, "c.json");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn seed_and_tolerances_are_echoed() {
    let out = ncdist(&["lip", "--problem", path(&fixture("metric3.json")), "--seed", "11"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["manifest"]["seed"], 11);
    assert_eq!(v["manifest"]["tolerances"]["level_tol"], 1e-8);
    assert!(v["manifest"].get("timings_ms").is_none());
    assert_eq!(v["results"][1]["classical"]["via_levels"], 3.0);
}

#[test]
fn declared_task_must_match_the_command() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.json");
    let mut problem: Value = serde_json::from_slice(&std::fs::read(fixture("metric3.json")).unwrap()).unwrap();
    problem["task"] = "hausdorff".into();
    std::fs::write(&p, serde_json::to_vec(&problem).unwrap()).unwrap();
    assert_eq!(ncdist(&["rho", "--problem", path(&p)]).status.code(), Some(1));
    assert_eq!(ncdist(&["hausdorff", "--problem", path(&p)]).status.code(), Some(0));
}

#[test]
fn classical_suite_passes() {
    let out = ncdist(&["verify", "--suite", "classical", "--trials", "50", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let report = &v["results"][0];
    assert_eq!(report["passed"], true);
    for c in report["checks"].as_array().unwrap() {
        assert!(c["max_deviation"].as_f64().unwrap() <= c["tolerance"].as_f64().unwrap());
    }
}

#[test]
fn unknown_suite_exits_1() {
    assert_eq!(ncdist(&["verify", "--suite", "nope"]).status.code(), Some(1));
}

#[test]
fn torus_q1_writes_no_rows_for_a_single_subcircle() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let out = ncdist(&["torus", "--q", "1", "--p", "0", "--csv", path(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 1);
}

#[test]
fn seminorm_specs_round_trip() {
    let alg = FiniteAlgebra::matrix(2);
    let d = |rows: &[&[f64]]| AlgebraElement::new(&alg, vec![CMatrix::from_real_rows(rows)]).unwrap();
    let l = Seminorm::commutator(&alg, &[d(&[&[0.0, 1.0], &[1.0, 0.0]]), d(&[&[1.0, 0.0], &[0.0, -1.0]])], Combine::Sum).unwrap();
    let problem = ProblemFile {
        algebra: vec![2],
        seminorm: SeminormSpec::from_seminorm(&l),
        task: Some(Task::L1l2),
        states: vec![],
        sets: vec![SetSpec::Whole],
        elements: vec![ElementSpec::from_element(&d(&[&[0.5, 0.25], &[0.25, -1.0]]))],
        pairs: None,
        seed: Some(3),
        tolerances: Default::default(),
    };
    let text = serde_json::to_string(&problem).unwrap();
    let back = ProblemFile::parse(&text, "mem").unwrap();
    assert_eq!(back, problem);
    assert_eq!(back.seminorm.build(&alg).unwrap(), l);
}

#[test]
fn probe_violations_replay() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("poly.json");
    std::fs::write(
        &p,
        r#"{
  "algebra": [3],
  "seminorm": {"type": "polyhedral", "generators": [
    {"h": [[[1, 0, 0], [0, -1, 0], [0, 0, 0]]], "c": 1},
    {"h": [[[0, 0, 0], [0, 1, 0], [0, 0, -1]]], "c": 1},
    {"h": [[[0, 1, 0], [1, 0, 0], [0, 0, 0]]], "c": 1},
    {"h": [[[0, [0, -1], 0], [[0, 1], 0, 0], [0, 0, 0]]], "c": 1},
    {"h": [[[0, 0, 0], [0, 0, 1], [0, 1, 0]]], "c": 2},
    {"h": [[[0, 0, 0], [0, 0, [0, -1]], [0, [0, 1], 0]]], "c": 2},
    {"h": [[[0, 0, 1], [0, 0, 0], [1, 0, 0]]], "c": 3},
    {"h": [[[0, 0, [0, -1]], [0, 0, 0], [[0, 1], 0, 0]]], "c": 3}
  ]},
  "elements": [[[[1, 0, 0], [0, 0, 0], [0, 0, -1]]]]
}"#,
    )
    .unwrap();
    let export = dir.path().join("violations");
    let out = ncdist(&["l1l2", "--problem", path(&p), "--probe", "6", "--export", path(&export), "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["results"]["chain"][0]["holds"], true);
    let found = v["results"]["probe"]["violations"].as_array().unwrap().len();
    let files: Vec<_> = std::fs::read_dir(&export).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), found);
    for f in files {
        assert_eq!(ncdist(&["l1l2", "--problem", path(&f)]).status.code(), Some(0));
    }
}
