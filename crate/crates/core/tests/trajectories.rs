//! Ensemble properties of the quantum-jump solver.

use qdyn::factory::*;
use qdyn::mcsolve::{mcsolve, TrajectoryConfig};
use qdyn::mesolve::Hamiltonian;
use qdyn::{tensor, Qobj};

fn tlist(stop: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| stop * k as f64 / (count - 1) as f64)
        .collect()
}

fn cavity_problem() -> (Hamiltonian, Qobj, Vec<Qobj>, Vec<Qobj>) {
    let n = 4;
    let a = tensor(&[&destroy(n).unwrap(), &qeye(2)]).unwrap();
    let sm = tensor(&[&qeye(n), &destroy(2).unwrap()]).unwrap();
    let h = &a.dag() * &a + &sm.dag() * &sm + (&a.dag() * &sm + &a * &sm.dag()) * 0.3;
    let psi0 = tensor(&[&basis(n, 2).unwrap(), &basis(2, 1).unwrap()]).unwrap();
    let c_ops = vec![&a * 0.4, &sm * 0.2];
    let e_ops = vec![&a.dag() * &a, &sm.dag() * &sm];
    (h.into(), psi0, c_ops, e_ops)
}

#[test]
fn result_does_not_depend_on_worker_count() {
    let (h, psi0, c_ops, e_ops) = cavity_problem();
    let times = tlist(8.0, 17);
    let run = |workers| {
        let cfg = TrajectoryConfig {
            ntraj: 40,
            master_seed: 77,
            workers: Some(workers),
            ..TrajectoryConfig::default()
        };
        mcsolve(&h, &psi0, &times, &c_ops, &e_ops, &cfg).unwrap()
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.table.columns, four.table.columns);
    assert_eq!(one.jumps, four.jumps);
    assert_eq!(one.jumps_json(), four.jumps_json());
    assert!(one.jumps.iter().any(|j| !j.is_empty()));
    for jumps in &one.jumps {
        assert!(jumps.windows(2).all(|w| w[0].t < w[1].t));
        assert!(jumps
            .iter()
            .all(|j| j.t > 0.0 && j.t <= 8.0 && j.channel < 2));
    }
    let other = mcsolve(
        &h,
        &psi0,
        &times,
        &c_ops,
        &e_ops,
        &TrajectoryConfig {
            ntraj: 40,
            master_seed: 78,
            ..TrajectoryConfig::default()
        },
    )
    .unwrap();
    assert_ne!(one.table.columns, other.table.columns);
}

#[test]
fn recorded_states_have_unit_norm() {
    let (h, psi0, c_ops, _) = cavity_problem();
    let cfg = TrajectoryConfig {
        ntraj: 12,
        master_seed: 3,
        ..TrajectoryConfig::default()
    };
    let res = mcsolve(&h, &psi0, &tlist(6.0, 13), &c_ops, &[], &cfg).unwrap();
    let records = res.records.expect("states kept without observables");
    assert_eq!(records.len(), 12);
    for rec in records {
        for psi in rec.states.unwrap() {
            assert!((psi.norm().unwrap() - 1.0).abs() <= 1e-8);
        }
    }
}

#[test]
fn jump_fraction_follows_exponential_law() {
    let kappa: f64 = 0.7;
    let h = Hamiltonian::from(qeye(2) * 0.0);
    let sm = destroy(2).unwrap();
    let c = &sm * kappa.sqrt();
    let times = tlist(3.0, 7);
    let ntraj = 2000;
    let cfg = TrajectoryConfig {
        ntraj,
        master_seed: 2024,
        ..TrajectoryConfig::default()
    };
    let res = mcsolve(
        &h,
        &basis(2, 1).unwrap(),
        &times,
        &[c],
        &[sm.dag() * &sm],
        &cfg,
    )
    .unwrap();
    for &t in &times[1..] {
        let jumped = res
            .jumps
            .iter()
            .filter(|j| j.first().is_some_and(|e| e.t <= t))
            .count();
        let p = 1.0 - (-kappa * t).exp();
        let sigma = (p * (1.0 - p) / ntraj as f64).sqrt();
        let frac = jumped as f64 / ntraj as f64;
        assert!(
            (frac - p).abs() <= 3.0 * sigma,
            "t = {t}: {frac} vs {p} (σ = {sigma})"
        );
    }
    // one excitation, so no trajectory jumps twice
    assert!(res.jumps.iter().all(|j| j.len() <= 1));
    let pop = res.table.real(0);
    assert_eq!(pop[0], 1.0);
}
