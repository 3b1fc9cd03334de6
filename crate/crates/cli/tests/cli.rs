use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn vdm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vdm"))
        .current_dir(dir)
        .env_remove("VDM_OUT_DIR")
        .args(args)
        .output()
        .expect("vdm runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = vdm(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn asymmetric_matrix_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("m.csv"), "0,1,2\n1,0,3\n2,4,0\n").unwrap();
    let out = vdm(tmp.path(), &["cluster", "m.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("symmetric") && err.contains("row"), "{err}");
}

#[test]
fn two_by_two_matrix_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("m.csv"), "0,1\n1,0\n").unwrap();
    assert_eq!(
        vdm(tmp.path(), &["cluster", "m.csv"]).status.code(),
        Some(2)
    );
}

#[test]
fn malformed_cell_names_row_and_column() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("m.csv"), "0,1,2\n1,0,x\n2,3,0\n").unwrap();
    let out = vdm(tmp.path(), &["cluster", "m.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 2") && err.contains("column 3"), "{err}");
}

#[test]
fn missing_input_is_a_runtime_failure() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(
        vdm(tmp.path(), &["cluster", "absent.csv"]).status.code(),
        Some(1)
    );
}

#[test]
fn cluster_finds_two_groups_and_writes_outputs() {
    let tmp = TempDir::new().unwrap();
    let xs = [0.0f64, 1.0, 2.0, 50.0, 51.0, 52.0];
    let rows: Vec<String> = xs
        .iter()
        .map(|a| {
            xs.iter()
                .map(|b| (a - b).abs().to_string())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    fs::write(tmp.path().join("m.csv"), rows.join("\n")).unwrap();
    ok(tmp.path(), &["cluster", "m.csv", "--out", "c"]);
    let result = json(&tmp.path().join("c/clustering.json"));
    assert_eq!(result["k"], 2);
    assert_eq!(result["medoid_ids"], serde_json::json!([1, 4]));
    assert_eq!(result["silhouette_table"].as_array().unwrap().len(), 4);
    assert_eq!(
        first_line(&tmp.path().join("c/silhouette.csv")),
        "k,silhouette,cost"
    );
    let manifest = json(&tmp.path().join("c/manifest.json"));
    assert_eq!(manifest["subcommand"], "cluster");
    assert_eq!(manifest["inputs"][0]["path"], "m.csv");
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn unknown_variant_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &["gen-scenario", "--scenario", "rc1", "--out", "g"],
    );
    let out = vdm(
        tmp.path(),
        &["solve", "--scenario", "g/scenario.json", "--variant", "xyz"],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = vdm(
        tmp.path(),
        &["simulate", "--scenario", "rc1", "--variant", "xyz"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_stock_solves_to_nothing() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &["gen-scenario", "--scenario", "rc1", "--out", "g"],
    );
    ok(
        tmp.path(),
        &[
            "solve",
            "--scenario",
            "g/scenario.json",
            "--stock",
            "0",
            "--out",
            "s",
        ],
    );
    let solution = json(&tmp.path().join("s/solution.json"));
    assert_eq!(solution["assigned_count"], 0);
    assert_eq!(
        solution["assignments"]["assignments"],
        serde_json::json!([])
    );
}

#[test]
fn auto_gains_are_resolved_in_the_manifest() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &["gen-scenario", "--scenario", "rc1", "--out", "g"],
    );
    ok(
        tmp.path(),
        &[
            "solve",
            "--scenario",
            "g/scenario.json",
            "--variant",
            "pd",
            "--gains",
            "auto",
            "--out",
            "s",
        ],
    );
    let manifest = json(&tmp.path().join("s/manifest.json"));
    let g = &manifest["config"]["resolved_gains"];
    assert_eq!(
        (g["alpha"].as_f64(), g["beta"].as_f64(), g["gamma"].as_f64()),
        (Some(50.0), Some(10.0), Some(1.0))
    );
    assert_eq!(manifest["config"]["gains"], "auto");
    let summary = fs::read_to_string(tmp.path().join("s/summary.txt")).unwrap();
    assert!(summary.contains("assigned   85"), "{summary}");
}

#[test]
fn csv_bundle_matches_scenario_json() {
    let tmp = TempDir::new().unwrap();
    let out = ok(
        tmp.path(),
        &[
            "gen-scenario",
            "--scenario",
            "rc2",
            "--seed",
            "4",
            "--out",
            "g",
        ],
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    let staff = stdout
        .split("--staff ")
        .nth(1)
        .expect("staff hint for non-default capacities")
        .trim();
    ok(
        tmp.path(),
        &["solve", "--scenario", "g/scenario.json", "--out", "a"],
    );
    ok(
        tmp.path(),
        &[
            "solve",
            "--hospitals",
            "g/hospitals.csv",
            "--persons",
            "g/persons.csv",
            "--stock",
            "85",
            "--priority-levels",
            "5",
            "--staff",
            staff,
            "--out",
            "b",
        ],
    );
    let a = json(&tmp.path().join("a/solution.json"));
    let b = json(&tmp.path().join("b/solution.json"));
    assert_eq!(a, b);
}

#[test]
fn bundle_without_stock_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &["gen-scenario", "--scenario", "rc1", "--out", "g"],
    );
    let out = vdm(
        tmp.path(),
        &[
            "solve",
            "--hospitals",
            "g/hospitals.csv",
            "--persons",
            "g/persons.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cs1_pd_uses_the_whole_stock() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &[
            "simulate",
            "--scenario",
            "cs1",
            "--variant",
            "pd",
            "--seed",
            "7",
            "--out",
            "o",
        ],
    );
    let reports = json(&tmp.path().join("o/report.json"));
    assert_eq!(reports[0]["total_vaccinated"], 1950);
    assert_eq!(reports[0]["leftover_stock"], 0);
    assert_eq!(reports[0]["frames"].as_array().unwrap().len(), 60);
}

#[test]
fn simulation_reports_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let args = [
        "simulate",
        "--scenario",
        "rc1",
        "--variant",
        "b",
        "--seed",
        "1",
    ];
    ok(tmp.path(), &[&args[..], &["--out", "x"]].concat());
    ok(tmp.path(), &[&args[..], &["--out", "y"]].concat());
    for name in [
        "report.json",
        "coverage.csv",
        "distance.csv",
        "frames.csv",
        "manifest.json",
    ] {
        assert_eq!(
            fs::read(tmp.path().join("x").join(name)).unwrap(),
            fs::read(tmp.path().join("y").join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn cs2_priority_model_covers_the_top_groups() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &[
            "simulate",
            "--scenario",
            "cs2",
            "--variant",
            "p",
            "--out",
            "o",
        ],
    );
    let reports = json(&tmp.path().join("o/report.json"));
    let coverage: Vec<f64> = reports[0]["coverage_percent"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(coverage.len(), 6);
    assert_eq!(coverage[5], 100.0);
    assert_eq!(coverage[4], 100.0);
    assert_eq!(reports[0]["total_vaccinated"], 10050);
}

#[test]
fn all_variants_share_one_scenario() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &["simulate", "--scenario", "rc2", "--seed", "2", "--out", "o"],
    );
    let reports = json(&tmp.path().join("o/report.json"));
    let names: Vec<&str> = reports
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["variant"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["b", "p", "d", "pd"]);
    let distance = fs::read_to_string(tmp.path().join("o/distance.csv")).unwrap();
    assert_eq!(distance.lines().count(), 5);
    let coverage = fs::read_to_string(tmp.path().join("o/coverage.csv")).unwrap();
    assert_eq!(coverage.lines().count(), 1 + 4 * 5);
}

#[test]
fn csv_headers_are_stable() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &["gen-scenario", "--scenario", "rc1", "--out", "g"],
    );
    ok(
        tmp.path(),
        &["solve", "--scenario", "g/scenario.json", "--out", "s"],
    );
    ok(
        tmp.path(),
        &[
            "simulate",
            "--scenario",
            "rc1",
            "--variant",
            "pd",
            "--out",
            "o",
        ],
    );
    let golden = [
        ("g/hospitals.csv", "id,name,zone,funding,size_class"),
        ("g/persons.csv", "id,priority,d_0,d_1,d_2"),
        ("g/candidates.csv", "index,x,y,selected"),
        ("g/silhouette.csv", "k,silhouette,cost"),
        (
            "s/assignments.csv",
            "person_id,priority,dc_id,staff_index,distance,weight",
        ),
        (
            "o/coverage.csv",
            "variant,priority,population,vaccinated,coverage_percent",
        ),
        (
            "o/distance.csv",
            "variant,vaccinated,total_distance,average_distance",
        ),
        (
            "o/frames.csv",
            "variant,frame,vaccinated,objective,remaining_stock",
        ),
    ];
    for (file, header) in golden {
        assert_eq!(first_line(&tmp.path().join(file)), header, "{file}");
    }
}

#[test]
fn manifest_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &[
            "simulate",
            "--scenario",
            "rc2",
            "--variant",
            "d",
            "--seed",
            "11",
            "--gains",
            "20,2,0.5",
            "--out",
            "first",
        ],
    );
    ok(
        tmp.path(),
        &[
            "simulate",
            "--config",
            "first/manifest.json",
            "--out",
            "second",
        ],
    );
    assert_eq!(
        fs::read(tmp.path().join("first/report.json")).unwrap(),
        fs::read(tmp.path().join("second/report.json")).unwrap()
    );
    let manifest = json(&tmp.path().join("second/manifest.json"));
    assert_eq!(manifest["config"]["gains"], "20,2,0.5");
    assert_eq!(manifest["seed"], 11);
}

#[test]
fn flags_take_precedence_over_config_file() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("cfg.json"),
        r#"{"variant": "p", "seed": 5, "frames": 2}"#,
    )
    .unwrap();
    ok(
        tmp.path(),
        &[
            "simulate",
            "--config",
            "cfg.json",
            "--scenario",
            "rc1",
            "--seed",
            "6",
            "--out",
            "o",
        ],
    );
    let manifest = json(&tmp.path().join("o/manifest.json"));
    assert_eq!(manifest["config"]["variant"], "p");
    assert_eq!(manifest["config"]["seed"], 6);
    assert_eq!(manifest["config"]["frames"], 2);
    assert_eq!(manifest["config"]["gains"], "auto");
    let reports = json(&tmp.path().join("o/report.json"));
    assert_eq!(reports[0]["frames"].as_array().unwrap().len(), 2);
}

#[test]
fn unknown_config_field_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("cfg.json"), r#"{"varient": "p"}"#).unwrap();
    let out = vdm(
        tmp.path(),
        &["simulate", "--config", "cfg.json", "--scenario", "rc1"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn custom_scenario_runs_from_file() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &[
            "gen-scenario",
            "--scenario",
            "rc1",
            "--seed",
            "9",
            "--out",
            "g",
        ],
    );
    ok(
        tmp.path(),
        &[
            "simulate",
            "--scenario",
            "custom",
            "--scenario-file",
            "g/scenario.json",
            "--variant",
            "b",
            "--out",
            "o",
        ],
    );
    let reports = json(&tmp.path().join("o/report.json"));
    assert_eq!(reports[0]["scenario_kind"], "custom");
    assert_eq!(reports[0]["total_vaccinated"], 85);
    let manifest = json(&tmp.path().join("o/manifest.json"));
    assert_eq!(manifest["inputs"][0]["path"], "g/scenario.json");
    assert_eq!(
        vdm(tmp.path(), &["simulate", "--scenario", "custom"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn out_dir_defaults_from_environment() {
    let tmp = TempDir::new().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_vdm"))
        .current_dir(tmp.path())
        .env("VDM_OUT_DIR", "from-env")
        .args(["gen-scenario", "--scenario", "rc1"])
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(tmp.path().join("from-env/manifest.json").exists());
}

#[test]
fn gen_scenario_rejects_custom() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(
        vdm(tmp.path(), &["gen-scenario", "--scenario", "custom"])
            .status
            .code(),
        Some(2)
    );
}
