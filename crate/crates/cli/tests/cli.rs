use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

use irg_core::graph::connected_components;
use irg_core::rng::SplitMix64;
use irg_core::{sample_graph, KernelSpec, SampleMode, SpaceSpec};

fn irg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irg")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", stderr(o));
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

#[test]
fn gilbert_oracle_prints_half() {
    let o = irg(&["oracle", "gilbert", "--n", "2", "--p", "0.5"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 0.5);
}

#[test]
fn finite_oracle_matches_library() {
    let o = irg(&["oracle", "finite", "--space", "finite:1", "--kernel", "constant:c=2", "--n", "5"]);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 0.916_637_656_430_310_1).abs() < 1e-12);
}

#[test]
fn kernel_info_constant() {
    let v = json(&irg(&["kernel-info", "--kernel", "constant:c=2"]));
    assert_eq!(v["lambda_star"], 2.0);
    assert_eq!(v["lambda2_sup"], 2.0);
    assert_eq!(v["l2"], true);
}

#[test]
fn kernel_info_counterexample() {
    let v = json(&irg(&["kernel-info", "--kernel", "counterexample:c=2"]));
    assert_eq!(v["lambda_star"], 1.0);
    assert_eq!(v["lambda2_sup"], "inf");
    assert_eq!(v["l2"], false);
}

#[test]
fn bounds_emit_formula_inputs_value() {
    let v = json(&irg(&[
        "bounds", "--formula", "small-k", "--n", "1000", "--k", "1", "--lambda-star", "1", "--lambda2", "1",
    ]));
    assert_eq!(v["formula"], "small-k");
    assert_eq!(v["inputs"]["n"], 1000);
    assert!((v["value"].as_f64().unwrap() - 1.006_987_219_281_649e-3).abs() < 1e-15);

    let v = json(&irg(&["bounds", "--formula", "delta", "--kernel", "constant:c=2"]));
    assert!((v["value"].as_f64().unwrap() - 4.954_442_394_962_046e-3).abs() < 1e-10);

    let v = json(&irg(&["bounds", "--formula", "rate", "--t", "2"]));
    assert!((v["value"].as_f64().unwrap() - 0.386_294_361_119_890_6).abs() < 1e-15);

    let v = json(&irg(&["bounds", "--formula", "isolated-lb", "--kernel", "constant:c=0.5", "--n", "100"]));
    assert!((v["value"].as_f64().unwrap() - 9.963_780_760_477_606).abs() < 1e-9);
}

#[test]
fn usage_errors_exit_one_with_prefix() {
    for args in [
        vec!["frobnicate"],
        vec!["oracle", "gilbert", "--n", "2"],
        vec!["kernel-info", "--kernel", "constant:c=2", "--bogus-flag"],
        vec!["kernel-info", "--kernel", "wobble:c=2"],
        vec!["bounds", "--formula", "large-k", "--n", "10", "--k", "8", "--lambda-star", "1", "--lambda2", "1"],
        vec!["counterexample", "--c", "1.5", "--n", "1000", "--reps", "1", "--seed", "1"],
    ] {
        let o = irg(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(stderr(&o).contains("irg-error:"), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn guards_exit_two() {
    let o = irg(&["partition", "--kernel", "constant:c=1", "--m", "13"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("irg-error:"));

    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    fs::write(&plan, plan_json(7)).unwrap();
    let o = irg(&[
        "sweep", "--plan", plan.to_str().unwrap(), "--out", dir.path().join("r.csv").to_str().unwrap(),
        "--budget", "10",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn runs_report_their_seed() {
    let o = irg(&["window", "--n", "20", "--reps", "10"]);
    assert!(o.status.success());
    assert!(stderr(&o).lines().any(|l| l.starts_with("seed: ")));
    let o = irg(&["window", "--n", "20", "--reps", "10", "--seed", "77"]);
    assert!(stderr(&o).contains("seed: 77"));
    assert_eq!(json(&o)["seed"], 77);
}

#[test]
fn sample_then_analyze_matches_library_on_100_configurations() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.el");
    let mut rng = SplitMix64::new(42);
    for i in 0..100 {
        let (space, kernel) = match i % 4 {
            0 => ("interval", format!("constant:c={}", 0.5 + 3.0 * rng.next_f64())),
            1 => ("torus", format!("band:c={},r=0.2", 1.0 + 6.0 * rng.next_f64())),
            2 => ("interval", format!("counterexample:c={}", 1.0 + 5.0 * rng.next_f64())),
            _ => ("finite:0.5,0.5", "block:3,1;1,3".to_string()),
        };
        let n = 2 + (rng.next_u64() % 300) as usize;
        let seed = rng.next_u64();
        let o = irg(&[
            "sample", "--space", space, "--kernel", &kernel, "--n", &n.to_string(), "--seed", &seed.to_string(),
            "--out", path.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let cli = json(&irg(&["analyze", path.to_str().unwrap()]));

        let k: KernelSpec = kernel.parse().unwrap();
        let s: SpaceSpec = space.parse().unwrap();
        let g = sample_graph(&s, &k, n, seed, SampleMode::fastest_for(&k)).unwrap();
        let lib = serde_json::to_value(connected_components(&g).unwrap()).unwrap();
        assert_eq!(cli, lib, "config {i}: {kernel} n={n} seed={seed}");
    }
}

#[test]
fn analyze_region_counts() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.el");
    let o = irg(&["sample", "--kernel", "constant:c=0", "--n", "50", "--seed", "5", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let all = json(&irg(&["analyze", path.to_str().unwrap(), "--region", "x>=0"]));
    assert_eq!(all["isolated_in_region"], 50);
    let none = json(&irg(&["analyze", path.to_str().unwrap(), "--region", "x<0"]));
    assert_eq!(none["isolated_in_region"], 0);
    let bad = irg(&["analyze", path.to_str().unwrap(), "--region", "y<1"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn malformed_edge_list_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.el");
    fs::write(&path, "1 2\n").unwrap();
    let o = irg(&["analyze", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("irg-error:"));
}

#[test]
fn partition_and_probe() {
    let v = json(&irg(&["partition", "--kernel", "band:c=4,r=0.25", "--m", "4"]));
    assert_eq!(v["main_component"]["measure"], 1.0);
    assert_eq!(v["vertices"].as_array().unwrap().len(), 16);
    let v = json(&irg(&["partition", "--kernel", "counterexample:c=4", "--m", "6", "--probe"]));
    assert_eq!(v["verdict"], "irreducible-compatible");
    let v = json(&irg(&["partition", "--kernel", "constant:c=0", "--m", "4", "--probe"]));
    assert_eq!(v["verdict"], "reducible-evidence");
}

fn plan_json(seed: u64) -> String {
    format!(
        r#"{{"space":{{"type":"interval"}},"base_kernel":{{"type":"constant","c":1.0}},
           "scale_grid":[0.5,1.0,2.0],"n_grid":[50,100],"replicates":20,"master_seed":{seed}}}"#
    )
}

#[test]
fn sweep_is_independent_of_workers_and_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    fs::write(&plan, plan_json(7)).unwrap();
    let run = |workers: &str, extra: &[&str]| {
        let out = dir.path().join(format!("r{workers}.csv"));
        let svg = dir.path().join("chart.svg");
        let mut args = vec![
            "sweep", "--plan", plan.to_str().unwrap(), "--out", out.to_str().unwrap(), "--svg",
            svg.to_str().unwrap(), "--workers", workers,
        ];
        args.extend_from_slice(extra);
        let o = irg(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stderr(&o).contains("seed: "));
        assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));
        (fs::read_to_string(&out).unwrap(), json(&o))
    };
    let (csv1, summary1) = run("1", &[]);
    let (csv3, summary3) = run("3", &[]);
    assert_eq!(csv1, csv3);
    assert_eq!(summary1, summary3);
    assert_eq!(csv1.lines().next(), Some("c,n,rep,seed,connected,isolated,min_comp,max_comp"));
    assert_eq!(csv1.lines().count(), 1 + 3 * 2 * 20);

    let (csv, summary) = run("2", &["--seed", "9", "--reps", "4", "--n-grid", "30", "--scale-grid", "1,3"]);
    assert_eq!(csv.lines().count(), 1 + 2 * 4);
    assert_eq!(summary["master_seed"], 9);
    assert_ne!(csv, csv1);
}

#[test]
fn help_exits_zero() {
    assert!(irg(&["--help"]).status.success());
}
