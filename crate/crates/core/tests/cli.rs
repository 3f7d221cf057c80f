//! File-level behaviour: the experiment tables, `learn_from_file` and the
//! binary's exit codes.

use std::path::Path;
use std::process::Command;

use spectral_graph::experiment::{
    learn_from_file, read_matrix_file, run_experiment, ExperimentSpec, Method, ModelSpec,
};
use spectral_graph::metrics::relative_error;
use spectral_graph::solver::SolverConfig;
use spectral_graph::synth::{read_edge_list, GeneratorSpec};
use spectral_graph::Error;

const BIN: &str = env!("CARGO_BIN_EXE_spectral-graph");

fn small_spec(dir: &Path) -> ExperimentSpec {
    ExperimentSpec {
        generator: GeneratorSpec::Grid {
            side: 3,
            wmin: 0.1,
            wmax: 3.0,
        },
        n_over_p: vec![10.0, 40.0],
        mc_reps: 3,
        base_seed: 11,
        model: ModelSpec {
            solver: SolverConfig {
                max_iter: 500,
                ..Default::default()
            },
            ..Default::default()
        },
        output_dir: Some(dir.to_path_buf()),
        ..Default::default()
    }
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn experiment_tables_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_experiment(&small_spec(&a)).unwrap();
    let mut spec = small_spec(&b);
    spec.threads = Some(3);
    run_experiment(&spec).unwrap();
    for f in ["results.csv", "summary.csv"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f}");
    }
    let rows = String::from_utf8(read(&a.join("results.csv"))).unwrap();
    assert_eq!(rows.lines().count(), 1 + 6);
    assert!(a.join("timings.csv").exists() && a.join("spec.json").exists());
}

#[test]
fn tiny_single_rep_completes_for_every_method() {
    for algorithm in [Method::Sgl, Method::Sga, Method::Sgla, Method::Qp, Method::Naive] {
        let mut spec = small_spec(Path::new("unused"));
        spec.output_dir = None;
        spec.mc_reps = 1;
        spec.n_over_p = vec![20.0];
        spec.model.algorithm = algorithm;
        let out = run_experiment(&spec).unwrap();
        assert!(out.all_ok(), "{algorithm:?}: {}", out.cells[0].status);
        assert!(out.cells[0].relative_error.is_finite());
    }
}

#[test]
fn two_by_two_covariance_gives_one_edge() {
    let tmp = tempfile::tempdir().unwrap();
    // Pseudo-inverse of the unit-weight single-edge Laplacian. The spectral
    // penalty pulls the weight below 1 by roughly 1/(4 beta).
    let m = tmp.path().join("s.txt");
    std::fs::write(&m, "0.25 -0.25\n-0.25 0.25\n").unwrap();
    let model = ModelSpec {
        solver: SolverConfig {
            tol: 1e-12,
            max_iter: 100_000,
            beta: 1e6,
            ..Default::default()
        },
        ..Default::default()
    };
    let fit = learn_from_file(&m, &model, tmp.path(), false).unwrap();
    assert!((fit.weights.as_slice()[0] - 1.0).abs() < 1e-5, "{:?}", fit.weights);
    let edges = std::fs::read_to_string(tmp.path().join("edges.csv")).unwrap();
    let lines: Vec<&str> = edges.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("2,1,"));
}

#[test]
fn exported_graph_reloads_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = small_spec(tmp.path());
    let (_, s) = spec.dataset(0, 0).unwrap();
    let m = tmp.path().join("s.csv");
    spectral_graph::experiment::write_matrix(&s, std::fs::File::create(&m).unwrap()).unwrap();
    assert_eq!(read_matrix_file(&m).unwrap(), s);

    let fit = learn_from_file(&m, &spec.model, tmp.path(), true).unwrap();
    let edges = std::fs::File::open(tmp.path().join("edges.csv")).unwrap();
    let back = read_edge_list(edges, Some(9)).unwrap();
    assert_eq!(relative_error(&back.laplacian(), &fit.theta).unwrap(), 0.0);

    let report: serde_json::Value =
        serde_json::from_slice(&read(&tmp.path().join("fit.json"))).unwrap();
    assert_eq!(report["algorithm"], "sgl");
    let trace = report["objective_trace"].as_array().unwrap();
    assert_eq!(trace.len(), fit.objective_trace.len());
}

#[test]
fn malformed_matrix_names_line() {
    let tmp = tempfile::tempdir().unwrap();
    let m = tmp.path().join("bad.csv");
    std::fs::write(&m, "1,0,0\n0,1,0\n0,oops,1\n").unwrap();
    match learn_from_file(&m, &ModelSpec::default(), tmp.path(), false) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn binary_subcommands_and_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.toml");
    std::fs::write(
        &cfg,
        r#"
n_over_p = [20]
[generator]
kind = "grid"
side = 3
wmin = 0.1
wmax = 3.0
[model.solver]
max_iter = 200
"#,
    )
    .unwrap();
    let run = |args: &[&str]| Command::new(BIN).args(args).output().unwrap();
    let p = |s: &str| tmp.path().join(s).to_string_lossy().into_owned();
    let cfg = cfg.to_string_lossy().into_owned();

    let out = run(&["benchmark", "--config", &cfg, "--out", &p("bench"), "--seed", "4", "--algo", "qp"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("bench/results.csv").exists());

    let out = run(&["generate", "--config", &cfg, "--out", &p("gen")]);
    assert!(out.status.success());
    let out = run(&["learn", &p("gen/scm.csv"), "--out", &p("fit"), "--beta", "50", "--max-iter", "100"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("fit/edges.csv").exists());

    let out = run(&["benchmark", "--config", &cfg, "--out", &p("x"), "--set", "model.solver.tol=-1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("model.solver.tol"), "{err}");

    // A cell that errors (k larger than the graph allows) gives a non-zero exit.
    let out = run(&["benchmark", "--config", &cfg, "--out", &p("y"), "--k", "20"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["selfcheck"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
}
