use nalgebra::DMatrix;
use proptest::prelude::*;
use qdyn::analysis::{entropy_vn, expect, fidelity, tracedist};
use qdyn::dense;
use qdyn::factory::*;
use qdyn::{tensor, Dims, QType, Qobj, C64};

fn complex() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| C64::new(a, b))
}

fn square(n: usize) -> impl Strategy<Value = DMatrix<C64>> {
    prop::collection::vec(complex(), n * n).prop_map(move |v| DMatrix::from_vec(n, n, v))
}

fn operator() -> impl Strategy<Value = Qobj> {
    (2usize..5).prop_flat_map(|n| {
        square(n).prop_map(move |m| Qobj::from_dense(&m, Dims::oper(&[n])).unwrap())
    })
}

fn density(n: usize) -> impl Strategy<Value = Qobj> {
    square(n).prop_map(move |a| {
        let rho = &a * a.adjoint();
        let tr = rho.trace();
        Qobj::from_dense(&(rho / tr), Dims::oper(&[n])).unwrap()
    })
}

fn max_diff(a: &Qobj, b: &Qobj) -> f64 {
    (a.full() - b.full())
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shape_matches_dims(op in operator()) {
        let (r, c) = op.dims().shape();
        prop_assert_eq!(op.shape(), (r, c));
        prop_assert!(op.data().is_canonical());
        prop_assert_eq!(op.qtype(), QType::Oper);
    }

    #[test]
    fn dag_is_an_involution(op in operator()) {
        prop_assert_eq!(op.dag().dag(), op.clone());
        prop_assert!(op.checked_add(&op.dag()).unwrap().isherm());
    }

    #[test]
    fn hermiticity_flag_is_truthful(op in operator()) {
        let dev = max_diff(&op, &op.dag());
        prop_assert_eq!(op.isherm(), dev <= 1e-12);
    }

    #[test]
    fn products_follow_matrix_algebra(a in square(3), b in square(3)) {
        let qa = Qobj::from_dense(&a, Dims::oper(&[3])).unwrap();
        let qb = Qobj::from_dense(&b, Dims::oper(&[3])).unwrap();
        let prod = qa.checked_mul(&qb).unwrap().full();
        prop_assert!((prod - &a * &b).norm() < 1e-12);
        let sum = qa.checked_add(&qb).unwrap().full();
        prop_assert!((sum - (&a + &b)).norm() < 1e-12);
    }

    #[test]
    fn ptrace_inverts_tensor(ra in density(2), rb in density(3)) {
        let joint = tensor(&[&ra, &rb]).unwrap();
        prop_assert_eq!(joint.dims(), &Dims::oper(&[2, 3]));
        prop_assert!(max_diff(&joint.ptrace(&[0]).unwrap(), &ra) < 1e-12);
        prop_assert!(max_diff(&joint.ptrace(&[1]).unwrap(), &rb) < 1e-12);
        prop_assert!(max_diff(&joint.ptrace(&[0, 1]).unwrap(), &joint) < 1e-15);
    }

    #[test]
    fn density_measures_are_bounded(a in density(3), b in density(3)) {
        let f = fidelity(&a, &b).unwrap();
        let d = tracedist(&a, &b).unwrap();
        prop_assert!((-1e-9..=1.0).contains(&f));
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&d));
        // Fuchs–van de Graaf
        prop_assert!(1.0 - f <= d + 1e-7);
        prop_assert!(d <= (1.0 - f * f).max(0.0).sqrt() + 1e-7);
        let s = entropy_vn(&a).unwrap();
        prop_assert!(s >= 0.0 && s <= 3f64.ln() + 1e-12);
    }

    #[test]
    fn hermitian_expectations_are_real(rho in density(4), h in square(4)) {
        let h = Qobj::from_dense(&((&h + h.adjoint()) * C64::new(0.5, 0.0)), Dims::oper(&[4])).unwrap();
        prop_assert_eq!(expect(&h, &rho).unwrap().im, 0.0);
    }

    #[test]
    fn coherent_is_an_eigenstate_of_destroy(re in -1.5f64..1.5, im in -1.5f64..1.5) {
        let alpha = C64::new(re, im);
        let n = 40;
        let psi = coherent(n, alpha).unwrap();
        let apsi = destroy(n).unwrap().checked_mul(&psi).unwrap();
        let lhs = apsi.to_dvector();
        let rhs = psi.to_dvector() * alpha;
        // the truncated top level is the only place the relation breaks
        prop_assert!((lhs - rhs).rows(0, n - 1).norm() < 1e-10);
    }

    #[test]
    fn spin_commutators(twice_j in 1u32..7) {
        let s = Spin::new(twice_j as f64 / 2.0).unwrap();
        let (x, y, z) = (jmat(s, SpinComponent::X), jmat(s, SpinComponent::Y), jmat(s, SpinComponent::Z));
        let comm = &x * &y - &y * &x;
        prop_assert!(max_diff(&comm, &(&z * C64::new(0.0, 1.0))) < 1e-12);
        let j = s.j();
        let casimir = &x * &x + &y * &y + &z * &z;
        prop_assert!(max_diff(&casimir, &(qeye(s.dim()) * (j * (j + 1.0)))) < 1e-12);
    }

    #[test]
    fn trace_is_cyclic(a in square(4), b in square(4)) {
        let qa = Qobj::from_dense(&a, Dims::oper(&[4])).unwrap();
        let qb = Qobj::from_dense(&b, Dims::oper(&[4])).unwrap();
        let ab = qa.checked_mul(&qb).unwrap().tr().unwrap();
        let ba = qb.checked_mul(&qa).unwrap().tr().unwrap();
        prop_assert!((ab - ba).norm() <= 1e-10 * ab.norm().max(1.0));
    }

    #[test]
    fn expm_inverse(a in square(4), scale in 0.1f64..1.0) {
        // entries bounded by 1, so ||A||_1 <= 4·scale·√2 < 10
        let a = a * C64::new(scale * 1.7, 0.0);
        let qa = Qobj::from_dense(&a, Dims::oper(&[4])).unwrap();
        let qm = Qobj::from_dense(&(-a), Dims::oper(&[4])).unwrap();
        let prod = qa.expm().unwrap().checked_mul(&qm.expm().unwrap()).unwrap();
        prop_assert!(max_diff(&prod, &qeye(4)) < 1e-8);
    }

    #[test]
    fn hermitian_eigenstates(h in square(5)) {
        let h = Qobj::from_dense(&((&h + h.adjoint()) * C64::new(0.5, 0.0)), Dims::oper(&[5])).unwrap();
        let es = h.eigenstates().unwrap();
        let norm = es.values.iter().map(|l| l.norm()).fold(0.0, f64::max);
        for (l, k) in es.values.iter().zip(&es.kets) {
            let hv = h.checked_mul(k).unwrap().to_dvector();
            let lv = k.to_dvector() * *l;
            prop_assert!((hv - lv).norm() <= 1e-8 * norm);
        }
        for (i, a) in es.kets.iter().enumerate() {
            for (j, b) in es.kets.iter().enumerate() {
                let ip = a.to_dvector().dotc(&b.to_dvector());
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((ip - C64::new(want, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn fidelity_is_symmetric(a in density(3), b in density(3)) {
        prop_assert!((fidelity(&a, &b).unwrap() - fidelity(&b, &a).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn entropy_is_unitarily_invariant(rho in density(4), g in square(4)) {
        let g = (&g + g.adjoint()) * C64::new(0.0, 0.5);
        let u = dense::expm(&g);
        let rotated = &u * rho.full() * u.adjoint();
        let rotated = Qobj::from_dense(&rotated, Dims::oper(&[4])).unwrap();
        prop_assert!((entropy_vn(&rho).unwrap() - entropy_vn(&rotated).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn expect_is_linear(rho in density(3), a in square(3), b in square(3), x in complex(), y in complex()) {
        let qa = Qobj::from_dense(&a, Dims::oper(&[3])).unwrap();
        let qb = Qobj::from_dense(&b, Dims::oper(&[3])).unwrap();
        let comb = qa.combine(x, &qb, y).unwrap();
        let lhs = expect(&comb, &rho).unwrap();
        let rhs = x * expect(&qa, &rho).unwrap() + y * expect(&qb, &rho).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn made_states_are_physical(n in 2usize..12, k in 0usize..12, re in -1.0f64..1.0, im in -1.0f64..1.0, nbar in 0.0f64..3.0) {
        let k = k % n;
        let alpha = C64::new(re, im);
        for spec in [StateSpec::Basis { n, index: k }, StateSpec::Coherent { n, alpha }] {
            let psi = make_state(&spec).unwrap();
            prop_assert!((psi.norm().unwrap() - 1.0).abs() < 1e-12);
        }
        for spec in [
            StateSpec::FockDm { n, index: k },
            StateSpec::CoherentDm { n, alpha },
            StateSpec::ThermalDm { n, nbar },
        ] {
            let rho = make_state(&spec).unwrap();
            // thermal populations below the prune threshold are dropped
            prop_assert!((rho.tr().unwrap() - 1.0).norm() < 1e-11);
            prop_assert!(rho.isherm());
            prop_assert!(rho.eigenenergies().unwrap()[0] >= -1e-12);
        }
    }
}

#[test]
fn ladder_commutator_on_kept_levels() {
    let n = 7;
    let a = destroy(n).unwrap();
    let comm = (&a * &a.dag() - &a.dag() * &a).full();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((comm[(i, j)] - C64::new(want, 0.0)).norm() < 1e-14);
        }
    }
}

#[test]
fn pauli_identities() {
    let id = qeye(2);
    for s in [sigmax(), sigmay(), sigmaz()] {
        assert!(max_diff(&(&s * &s), &id) < 1e-15);
    }
    let plus = (sigmax() + sigmay() * C64::new(0.0, 1.0)) * 0.5;
    assert!(max_diff(&plus, &sigmap()) < 1e-15);
    let half = Spin::new(0.5).unwrap();
    for (which, s) in [
        (SpinComponent::X, sigmax()),
        (SpinComponent::Y, sigmay()),
        (SpinComponent::Z, sigmaz()),
    ] {
        assert!(max_diff(&jmat(half, which), &(s * 0.5)) < 1e-15);
    }
}

#[test]
fn tensor_reproduces_cavity_operator() {
    let a = tensor(&[&destroy(5).unwrap(), &qeye(2)]).unwrap();
    assert_eq!(a.dims(), &Dims::oper(&[5, 2]));
    assert_eq!(a.shape(), (10, 10));
    let n = (a.dag() * &a).ptrace(&[0]).unwrap() * 0.5;
    assert!(max_diff(&n, &num(5).unwrap()) < 1e-14);
}

#[test]
fn ket_times_ket_is_a_type_error() {
    let k = basis(2, 0).unwrap();
    assert!(matches!(k.checked_mul(&k), Err(qdyn::QError::Type(_))));
}
