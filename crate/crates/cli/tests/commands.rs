use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Copies a bundled fixture directory (without outputs) into a scratch dir.
fn workspace(name: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(fixtures().join(name)).unwrap() {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            std::fs::copy(entry.path(), dir.path().join(entry.file_name())).unwrap();
        }
    }
    dir
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_codeaware"))
        .arg("--config")
        .arg(dir.join("pipeline.toml"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn analyze_writes_overlap_impacts() {
    let w = workspace("overlap");
    let o = run(w.path(), &["analyze"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let imp = json(&w.path().join("out/impacts.json"));
    assert_eq!(imp["mode"], "profile");
    assert_eq!(imp["singles"][0]["parameter"], "A");
    assert_eq!(imp["singles"][0]["impact"], 0.6);
    assert_eq!(imp["pairs"][0]["impact"], 0.8);
    let sens = json(&w.path().join("out/sensitivity.json"));
    assert_eq!(sens["never_covered_fraction"], 0.2);
    let jsonl = std::fs::read_to_string(w.path().join("out/coverage.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 4);
}

#[test]
fn invalid_config_fails_before_writing() {
    let w = workspace("overlap");
    std::fs::write(
        w.path().join("pipeline.toml"),
        "output_dir = \"out\"\n[adapter]\nfixture = \"fixture.toml\"\n[impact]\nprofiles = 0\n",
    )
    .unwrap();
    for verb in ["analyze", "plan", "generate", "pipeline", "report"] {
        let o = run(w.path(), &[verb]);
        assert_eq!(code(&o), 1, "{verb}: {}", stderr(&o));
        assert!(stderr(&o).contains("impact.profiles"));
    }
    assert!(!w.path().join("out").exists());
}

#[test]
fn inverted_thresholds_are_a_validation_error() {
    let w = workspace("searching");
    let cfg = std::fs::read_to_string(w.path().join("pipeline.toml"))
        .unwrap()
        .replace("theta_low = 0.1", "theta_low = 0.95");
    std::fs::write(w.path().join("pipeline.toml"), cfg).unwrap();
    let o = run(w.path(), &["plan"]);
    assert_eq!(code(&o), 1);
    assert!(!w.path().join("out").exists());
}

#[test]
fn replay_gap_is_an_adapter_error_naming_the_assignment() {
    let w = workspace("overlap");
    std::fs::write(
        w.path().join("coverage.jsonl"),
        "{\"assignment\":{\"A\":\"on\",\"B\":\"on\"},\"total_units\":5,\"covered\":[1,2,3,4]}\n",
    )
    .unwrap();
    std::fs::write(
        w.path().join("pipeline.toml"),
        "output_dir = \"out\"\nmodel = \"model.json\"\n[adapter]\nreplay = \"coverage.jsonl\"\n",
    )
    .unwrap();
    std::fs::write(
        w.path().join("model.json"),
        r#"{"parameters":[{"name":"A","values":["on","off"]},{"name":"B","values":["on","off"]}]}"#,
    )
    .unwrap();
    let o = run(w.path(), &["analyze"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(
        stderr(&o).contains("A=on,B=off") || stderr(&o).contains("A=off"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn replay_of_an_exported_matrix_reproduces_it() {
    let w = workspace("interaction-fault");
    assert_eq!(code(&run(w.path(), &["analyze"])), 0);
    let first = std::fs::read_to_string(w.path().join("out/coverage.jsonl")).unwrap();
    std::fs::copy(w.path().join("out/coverage.jsonl"), w.path().join("recorded.jsonl")).unwrap();
    let model: String = ["X", "Y", "Z", "W1", "W2"]
        .iter()
        .map(|n| format!("[[parameters]]\nname = \"{n}\"\nvalues = [\"lo\", \"mid\", \"hi\"]\n\n"))
        .collect();
    std::fs::write(w.path().join("model.toml"), model).unwrap();
    std::fs::write(
        w.path().join("pipeline.toml"),
        "model = \"model.toml\"\noutput_dir = \"replayed\"\n[adapter]\nreplay = \"recorded.jsonl\"\n",
    )
    .unwrap();
    let o = run(w.path(), &["analyze"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        std::fs::read_to_string(w.path().join("replayed/coverage.jsonl")).unwrap(),
        first
    );
}

#[test]
fn exec_adapter_from_config() {
    let w = workspace("overlap");
    std::fs::write(
        w.path().join("adapter.py"),
        "import json, sys\na = json.load(sys.stdin)\nu = set()\nif a['A'] == 'on': u |= {1, 2, 3}\nif a['B'] == 'on': u |= {2, 3, 4}\nprint(json.dumps({'total_units': 5, 'covered': sorted(u)}))\n",
    )
    .unwrap();
    std::fs::write(
        w.path().join("pipeline.toml"),
        "model = \"model.toml\"\noutput_dir = \"out\"\n[adapter]\nexec = [\"python3\", \"adapter.py\"]\n[impact]\nworkers = 2\n",
    )
    .unwrap();
    std::fs::write(
        w.path().join("model.toml"),
        "[[parameters]]\nname = \"A\"\nvalues = [\"on\", \"off\"]\n\n[[parameters]]\nname = \"B\"\nvalues = [\"on\", \"off\"]\n",
    )
    .unwrap();
    let o = run(w.path(), &["analyze"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(&w.path().join("out/impacts.json"))["singles"][1]["impact"], 0.6);
}

#[test]
fn broken_exec_adapter_exits_with_two() {
    let w = workspace("overlap");
    std::fs::write(
        w.path().join("pipeline.toml"),
        "model = \"model.toml\"\noutput_dir = \"out\"\n[adapter]\nexec = [\"sh\", \"-c\", \"cat >/dev/null; echo nonsense\"]\n",
    )
    .unwrap();
    std::fs::write(
        w.path().join("model.toml"),
        "[[parameters]]\nname = \"A\"\nvalues = [\"on\", \"off\"]\n\n[[parameters]]\nname = \"B\"\nvalues = [\"on\", \"off\"]\n",
    )
    .unwrap();
    let o = run(w.path(), &["analyze"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("protocol"));
}

#[test]
fn plan_needs_impacts_or_an_import() {
    let w = workspace("dont-care");
    let o = run(w.path(), &["plan"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("analyze"), "{}", stderr(&o));
}

#[test]
fn imported_matrix_yields_one_four_parameter_group() {
    let w = workspace("replicated-workers");
    let o = run(
        w.path(),
        &["plan", "--import", w.path().join("correlation.csv").to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let plan = json(&w.path().join("out/plan.json"));
    assert_eq!(plan["thresholds"]["high"], 0.9);
    assert_eq!(plan["thresholds"]["low"], 0.1);
    assert_eq!(
        plan["groups"],
        serde_json::json!([{"parameters": ["num_workers", "num_items", "min", "max"], "strength": 3}])
    );
    assert!(!w.path().join("out/correlation-raw.csv").exists());
}

#[test]
fn generate_and_verify_round_trip() {
    let w = workspace("replicated-workers");
    assert_eq!(code(&run(w.path(), &["plan"])), 0);
    let o = run(w.path(), &["generate"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in [
        "suite-uniform-2way.csv",
        "suite-uniform-2way.json",
        "suite-code-aware-mixed.csv",
        "suite-code-aware-mixed.json",
        "sizes.json",
    ] {
        assert!(w.path().join("out").join(f).exists(), "{f}");
    }
    let v = json(&w.path().join("out/suite-code-aware-mixed.verify.json"));
    assert_eq!(v["uncovered"], serde_json::json!([]));

    let mixed = w.path().join("out/suite-code-aware-mixed.csv");
    let o = run(w.path(), &["verify", mixed.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // The 2-way suite cannot meet the plan's 3-way group.
    let pairwise = w.path().join("out/suite-uniform-2way.json");
    let o = run(w.path(), &["verify", pairwise.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let o = run(w.path(), &["verify", pairwise.to_str().unwrap(), "--uniform", "2"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn uniform_strength_k_is_exhaustive() {
    let w = workspace("replicated-workers");
    let o = run(w.path(), &["generate", "--uniform", "5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(w.path().join("out/suite-uniform-5way.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 243);
    let o = run(w.path(), &["generate", "--uniform", "6"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn pipeline_produces_report_and_evaluation() {
    let w = workspace("interaction-fault");
    let o = run(w.path(), &["pipeline"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let eval = json(&w.path().join("out/evaluation.json"));
    assert_eq!(eval["comparison"]["newly_killed"], serde_json::json!(["triple"]));
    let text = std::fs::read_to_string(w.path().join("out/evaluation.txt")).unwrap();
    assert!(text.contains("relative efficiency change:"));
    let report = std::fs::read_to_string(w.path().join("out/report.txt")).unwrap();
    for section in [
        "Parameter impact",
        "group {X, Y, Z} at t = 3",
        "Suite sizes",
        "Fault detection",
    ] {
        assert!(report.contains(section), "missing {section}\n{report}");
    }
}

#[test]
fn evaluate_rejects_a_suite_for_another_model() {
    let w = workspace("interaction-fault");
    assert_eq!(code(&run(w.path(), &["pipeline"])), 0);
    std::fs::write(w.path().join("other.csv"), "A,B\non,on\n").unwrap();
    let o = run(
        w.path(),
        &["evaluate", "--candidate", w.path().join("other.csv").to_str().unwrap()],
    );
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn identical_suites_compare_to_zero() {
    let w = workspace("dont-care");
    assert_eq!(code(&run(w.path(), &["pipeline"])), 0);
    let s = w.path().join("out/suite-uniform-2way.json");
    let o = run(
        w.path(),
        &[
            "evaluate",
            "--baseline",
            s.to_str().unwrap(),
            "--candidate",
            s.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&o), 0);
    let eval = json(&w.path().join("out/evaluation.json"));
    assert_eq!(eval["comparison"]["delta_killed"], 0);
    assert_eq!(eval["comparison"]["relative_efficiency_change"], 0.0);
}

#[test]
fn report_without_artifacts_says_so() {
    let w = workspace("searching");
    let o = run(w.path(), &["report"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("not produced"));
}

#[test]
fn config_accepts_json_form() {
    let w = workspace("searching");
    std::fs::write(
        w.path().join("pipeline.json"),
        r#"{"model": "model.toml", "output_dir": "out", "correlation": {"import": "correlation.csv"}}"#,
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_codeaware"))
        .args(["-c", w.path().join("pipeline.json").to_str().unwrap(), "pipeline"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(w.path().join("out/report.txt").exists());
}
