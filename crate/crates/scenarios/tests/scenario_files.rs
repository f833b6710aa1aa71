//! The shipped scenario files, run end to end through the library.

use std::path::PathBuf;

use qdyn_scenarios::demos::{landau_zener_formula, photon_decay_analytic, LZ_DELTA, LZ_V};
use qdyn_scenarios::scenario::{run_scenario, write_outputs, RunOptions, ScenarioSpec, SolverKind};

fn load(name: &str) -> ScenarioSpec {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name);
    ScenarioSpec::load(&path).unwrap()
}

#[test]
fn landau_zener_file_reaches_the_formula() {
    let spec = load("landau_zener.json");
    let out = run_scenario(&spec, &RunOptions::default()).unwrap();
    let p = *out.table.real(0).last().unwrap();
    let want = landau_zener_formula(LZ_DELTA, LZ_V);
    assert!((p - want).abs() <= 0.02, "P = {p}, formula {want}");
}

#[test]
fn photon_decay_file_matches_the_analytic_curve() {
    let spec = load("photon_decay.json");
    let out = run_scenario(&spec, &RunOptions::default()).unwrap();
    let err = out
        .table
        .tlist
        .iter()
        .zip(out.table.real(0))
        .map(|(&t, n)| (n - photon_decay_analytic(t)).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-4, "max error {err:e}");

    let es = run_scenario(
        &spec,
        &RunOptions {
            solver: Some(SolverKind::Es),
            ..RunOptions::default()
        },
    )
    .unwrap();
    let gap = es
        .table
        .real(0)
        .iter()
        .zip(out.table.real(0))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap < 1e-6, "essolve vs odesolve {gap:e}");
}

#[test]
fn trajectory_run_writes_every_sidecar() {
    let spec = load("photon_decay.json");
    let opts = RunOptions {
        solver: Some(SolverKind::Mc),
        ntraj: Some(20),
        ..RunOptions::default()
    };
    let out = run_scenario(&spec, &opts).unwrap();
    let dir = std::env::temp_dir().join(format!("qdyn-sidecars-{}", std::process::id()));
    let written = write_outputs(&dir.join("decay.csv"), &spec, &out).unwrap();
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert!(names.contains(&"decay.csv".to_string()));
    assert!(names.contains(&"decay.jumps.json".to_string()));
    assert!(names.contains(&"decay.meta.json".to_string()));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("decay.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["solver"], "mc");
    assert_eq!(meta["ntraj"], 20);
    assert_eq!(meta["seed"], 3);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn jaynes_cummings_file_exchanges_the_excitation() {
    let spec = load("jaynes_cummings.json");
    let out = run_scenario(&spec, &RunOptions::default()).unwrap();
    let (nc, na) = (out.table.real(0), out.table.real(1));
    // first swap at t = pi / (2 g) = 5; the excitation decays at roughly (kappa + gamma) / 2
    let survived = (-(0.005f64 + 0.05) / 2.0 * 5.0).exp();
    assert!(
        na[20] < 0.01 && (nc[20] - survived).abs() < 0.01,
        "nc {}, na {}",
        nc[20],
        na[20]
    );
    assert!(nc.iter().zip(&na).all(|(a, b)| a + b <= 1.0 + 1e-6));
}

#[test]
fn every_shipped_file_round_trips() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let spec = ScenarioSpec::load(&path).unwrap();
        assert_eq!(
            ScenarioSpec::from_json(&spec.to_json()).unwrap(),
            spec,
            "{}",
            path.display()
        );
    }
}
