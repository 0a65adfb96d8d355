use std::path::Path;
use std::process::{Command, Output};

fn gqco(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gqco")).args(args).current_dir(dir).output().expect("spawn gqco")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn problem_generation_and_baseline_solvers() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&gqco(&["gen-problem", "--n", "4", "--seed", "9", "--out", "p.json"], d));
    let again = ok(&gqco(&["gen-problem", "--n", "4", "--seed", "9"], d));
    assert_eq!(std::fs::read_to_string(d.join("p.json")).unwrap().trim(), again.trim());
    for solver in ["brute", "sa", "qaoa"] {
        let v: serde_json::Value = serde_json::from_str(&ok(&gqco(&["solve", "--solver", solver, "--problem", "p.json", "--sweeps", "5000"], d))).unwrap();
        assert_eq!(v["solver"], solver);
        assert_eq!(v["answer"].as_str().unwrap().len(), 4);
        if solver != "qaoa" {
            assert_eq!(v["correct"], true);
        }
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&gqco(&["gen-problem", "--n", "3", "--out", "p.json"], d));
    assert_eq!(gqco(&["solve", "--solver", "gqco", "--problem", "p.json"], d).status.code(), Some(2));
    assert_eq!(gqco(&["solve", "--solver", "gqco", "--problem", "p.json", "--checkpoint", "missing.gqco"], d).status.code(), Some(2));
    assert_eq!(gqco(&["gen-problem", "--n", "1"], d).status.code(), Some(1));
    assert_eq!(gqco(&["gen-problem", "--n", "30"], d).status.code(), Some(1));
    assert_eq!(gqco(&["no-such-command"], d).status.code(), Some(2));
    assert_eq!(gqco(&["report", "--run", "."], d).status.code(), Some(2));
}

#[test]
fn train_resume_tune_bench_and_demo() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = r#"{"model": {"d_model": 8, "d_ff": 16, "encoder_layers": 1, "decoder_layers": 1, "heads": 2, "max_qubits": 20,
        "layer_norm_eps": 1e-5, "init_seed": 1}, "samples_per_n": {"3": 8}, "eval_frequency": 3, "eval_problems": 5,
        "eval_samples": 4, "max_steps": 6}"#;
    std::fs::write(d.join("train.json"), cfg).unwrap();
    ok(&gqco(&["train", "--config", "train.json", "--out", "run", "--steps", "4"], d));
    assert_eq!(gqco(&["train", "--config", "train.json", "--out", "run"], d).status.code(), Some(2));
    let out = ok(&gqco(&["train", "--resume", "run"], d));
    assert!(out.contains("step 6"), "{out}");
    let report: serde_json::Value = serde_json::from_str(&ok(&gqco(&["report", "--run", "run", "--json"], d))).unwrap();
    assert_eq!(report["kind"], "training");
    assert_eq!(report["step"], 6);
    assert_eq!(report["finished"], true);

    ok(&gqco(&["expert-tune", "--checkpoint", "run/model.gqco", "--n", "6", "--steps", "1", "--config", "train.json", "--out", "m6.gqco"], d));
    ok(&gqco(&["gen-problem", "--n", "3", "--seed", "2", "--out", "p.json"], d));
    let v: serde_json::Value = serde_json::from_str(&ok(&gqco(
        &["solve", "--solver", "gqco", "--problem", "p.json", "--checkpoint", "m6.gqco", "--samples", "5", "--dump-features", "feat"],
        d,
    )))
    .unwrap();
    assert!(v["circuit"].as_array().unwrap().len() >= 4);
    assert!(d.join("feat/nodes.csv").exists() && d.join("feat/edges.csv").exists());

    let spec = r#"{"sizes": [3], "problems_per_size": 3, "gqco_samples": [2], "sa_sweeps": [50], "qaoa_layers": [1], "timing_repeats": 1}"#;
    std::fs::write(d.join("spec.json"), spec).unwrap();
    ok(&gqco(&["bench", "--spec", "spec.json", "--checkpoint", "m6.gqco", "--out", "bench", "--resolve", "4"], d));
    for f in ["records.csv", "accuracy.csv", "time_to_90.csv", "brute_force.csv", "circuit_stats.csv", "failures.json"] {
        assert!(d.join("bench").join(f).exists(), "{f}");
    }
    assert!(ok(&gqco(&["report", "--run", "bench"], d)).contains("records consistent: true"));
    let bad_spec = r#"{"sizes": [4]}"#;
    std::fs::write(d.join("bad.json"), bad_spec).unwrap();
    assert_eq!(gqco(&["bench", "--spec", "bad.json", "--checkpoint", "run/model.gqco", "--out", "b2"], d).status.code(), Some(2));

    let demo: serde_json::Value = serde_json::from_str(&ok(&gqco(&["demo", "--checkpoint", "m6.gqco"], d))).unwrap();
    assert_eq!(demo["degeneracy"], 2);
    assert_eq!(demo["solvers"].as_array().unwrap().len(), 2);
}
