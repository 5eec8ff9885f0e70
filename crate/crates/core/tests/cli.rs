use std::path::{Path, PathBuf};
use std::process::Command;

use ot_tube::apps::{Experiment, ExperimentConfig};
use ot_tube::io::{read_atoms_csv, read_matrix_csv, validate_results, write_noise_csv};
use ot_tube::transport::TransportationCost;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ot-tube"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> i32 {
    bin()
        .args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("exit code")
}

fn results(dir: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join("results.json")).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn reach_writes_valid_deterministic_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = configs().join("fig1.json");
    for out in [&a, &b] {
        assert_eq!(
            run(&[
                "reach",
                "--config",
                s(&cfg),
                "--seed",
                "7",
                "--out",
                s(out),
                "--svg"
            ]),
            0
        );
    }
    assert_eq!(
        std::fs::read(a.join("results.json")).unwrap(),
        std::fs::read(b.join("results.json")).unwrap()
    );
    let doc = results(&a);
    validate_results(&doc).unwrap();
    assert_eq!(doc["seed"], 7);
    assert_eq!(doc["results"].as_array().unwrap().len(), 3);
    for f in ["scatter.csv", "timings.json", "plot.svg"] {
        assert!(a.join(f).exists(), "{f}");
    }
    let timings: Value =
        serde_json::from_slice(&std::fs::read(a.join("timings.json")).unwrap()).unwrap();
    assert!(timings["runtime_ms"].as_f64().unwrap() > 0.0);
}

#[test]
fn numbers_carry_seventeen_significant_digits() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&["cvar", "--epsilon", "0,0.01", "--out", s(tmp.path())]),
        0
    );
    let text = std::fs::read_to_string(tmp.path().join("results.json")).unwrap();
    assert!(text.contains("\"gamma\": 5.0000000000000003e-2"));
}

#[test]
fn cvar_at_zero_radius_equals_sample_cvar() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&[
            "cvar",
            "--config",
            s(&configs().join("fig2.json")),
            "--epsilon",
            "0,0.05",
            "--out",
            s(tmp.path())
        ]),
        0
    );
    let doc = results(tmp.path());
    let r = doc["results"].as_array().unwrap();
    assert_eq!(r[0]["worst_case_cvar"], r[0]["sample_cvar"]);
    assert!(r[1]["worst_case_cvar"].as_f64().unwrap() > r[1]["sample_cvar"].as_f64().unwrap());
}

#[test]
fn propagate_round_trips_bit_exact() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&[
            "propagate",
            "--seed",
            "3",
            "--epsilon",
            "0.1",
            "--out",
            s(tmp.path())
        ]),
        0
    );
    let mut cfg = ExperimentConfig::planar_benchmark();
    cfg.seed = 3;
    cfg.epsilons = Some(vec![0.1]);
    let exp = Experiment::prepare(&cfg, None).unwrap();
    let ball = exp.state_ball(0.1, &exp.feedforward).unwrap();
    assert_eq!(
        &read_atoms_csv(&tmp.path().join("center.csv")).unwrap(),
        ball.center()
    );
    let TransportationCost::SqEuclidComposed(m) = ball.cost() else {
        panic!("composed cost expected")
    };
    assert_eq!(
        &read_matrix_csv(&tmp.path().join("cost_matrix.csv")).unwrap(),
        m
    );
    let summary: Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["radii"][0].as_f64().unwrap(), 10.0 * 0.1);
    assert_eq!(summary["horizon"], 10);
}

#[test]
fn identity_system_propagates_the_noise_itself() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "system": { "A": [[0.0]], "B": [[1.0]], "D": [[1.0]], "K": [[0.0]], "x0": [0.0] },
        "horizon": 1, "gamma": 0.1, "training": { "count": 4 }, "test_count": 0
    }"#;
    let path = tmp.path().join("id.json");
    std::fs::write(&path, cfg).unwrap();
    let out = tmp.path().join("out");
    assert_eq!(
        run(&[
            "propagate",
            "--config",
            s(&path),
            "--epsilon",
            "0.5",
            "--out",
            s(&out)
        ]),
        0
    );
    let exp = Experiment::prepare(&serde_json::from_str(cfg).unwrap(), None).unwrap();
    let center = read_atoms_csv(&out.join("center.csv")).unwrap();
    for (x, w) in center.atoms().iter().zip(exp.training.trajectories()) {
        assert_eq!(x, w);
    }
    assert_eq!(
        read_matrix_csv(&out.join("cost_matrix.csv")).unwrap()[(0, 0)],
        1.0
    );
}

#[test]
fn training_file_with_and_without_header() {
    let tmp = tempfile::tempdir().unwrap();
    let exp = Experiment::prepare(&ExperimentConfig::planar_benchmark(), None).unwrap();
    let plain = tmp.path().join("noise.csv");
    write_noise_csv(&plain, &exp.training).unwrap();
    let text = std::fs::read_to_string(&plain).unwrap();
    let headed = tmp.path().join("noise_h.csv");
    let cols: Vec<String> = (0..20).map(|k| format!("c{k}")).collect();
    std::fs::write(&headed, format!("{}\n{text}", cols.join(","))).unwrap();
    let mut cfg: Value =
        serde_json::from_str(&std::fs::read_to_string(configs().join("fig1.json")).unwrap())
            .unwrap();
    for (name, file, flag) in [
        ("plain", "noise.csv", false),
        ("headed", "noise_h.csv", true),
    ] {
        cfg["training"] = serde_json::json!({ "file": file });
        let path = tmp.path().join(format!("{name}.json"));
        std::fs::write(&path, cfg.to_string()).unwrap();
        let out = tmp.path().join(name);
        let mut args = vec![
            "reach",
            "--config",
            s(&path),
            "--out",
            s(&out),
            "--epsilon",
            "0.1",
        ];
        if flag {
            args.push("--header");
        }
        assert_eq!(run(&args), 0, "{name}");
    }
    let a = results(&tmp.path().join("plain"));
    let b = results(&tmp.path().join("headed"));
    assert_eq!(a["results"], b["results"]);
    // and the generated batch gives the same answer as reading it back
    let out = tmp.path().join("generated");
    assert_eq!(
        run(&[
            "reach",
            "--config",
            s(&configs().join("fig1.json")),
            "--out",
            s(&out),
            "--epsilon",
            "0.1"
        ]),
        0
    );
    assert_eq!(results(&out)["results"][0]["b"], a["results"][0]["b"]);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    assert_eq!(run(&["reach", "--bogus"]), 2);
    assert_eq!(
        run(&[
            "reach",
            "--config",
            "/does/not/exist.json",
            "--out",
            s(&out)
        ]),
        2
    );
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"horizon": 3}"#).unwrap();
    assert_eq!(run(&["reach", "--config", s(&bad), "--out", s(&out)]), 2);
    assert_eq!(run(&["reach", "--mode", "sideways", "--out", s(&out)]), 2);
    assert_eq!(run(&["reach", "--epsilon", "-1", "--out", s(&out)]), 2);
    // no input certifies the target at this radius; results are still written
    assert_eq!(run(&["plan", "--epsilon", "0,0.5", "--out", s(&out)]), 3);
    let doc = results(&out);
    assert_eq!(doc["results"][0]["status"], "optimal");
    assert_eq!(doc["results"][1]["status"], "infeasible");
    assert!(doc["results"][1]["v"].is_null());
    // enumerating 5^10 products is refused
    assert_eq!(
        run(&["propagate", "--mode", "product", "--out", s(&out)]),
        2
    );
    assert_eq!(run(&["verify", "--trials", "3"]), 0);
    assert_eq!(
        run(&[
            "verify",
            "--trials",
            "2",
            "--force-failure",
            "--out",
            s(&out)
        ]),
        1
    );
    let v: Value =
        serde_json::from_slice(&std::fs::read(out.join("verify.json")).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().last().unwrap()["passed"], false);
    assert_eq!(run(&["--help"]), 0);
}

#[test]
fn product_mode_on_a_short_horizon() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("p");
    assert_eq!(
        run(&[
            "propagate",
            "--mode",
            "product",
            "--horizon",
            "2",
            "--epsilon",
            "0.1",
            "--out",
            s(&out)
        ]),
        0
    );
    let summary: Value =
        serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    // the per-step ball pools 5 trajectories x 2 steps
    assert_eq!(summary["atoms"], 10 * 10);
    assert_eq!(summary["exactness"], "exact");
}
