//! Wigner maps against the displaced-parity formula
//! `W(α) = (1/π) tr[ρ D(α) Π D(α)†]`, evaluated in a much larger truncation.

use std::f64::consts::PI;

use qdyn::analysis::{wigner, PhaseSpaceGrid};
use qdyn::factory::*;
use qdyn::{Dims, Qobj, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn parity_wigner(rho: &Qobj, x: f64, p: f64, big: usize) -> f64 {
    let n = rho.shape().0;
    let alpha = C64::new(x, p) / 2f64.sqrt();
    let d = displace(big, alpha).unwrap().full();
    let parity = nalgebra::DMatrix::from_fn(big, big, |i, j| {
        if i == j {
            C64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let m = &d * parity * d.adjoint();
    let r = rho.full();
    let mut tr = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            tr += r[(i, j)] * m[(j, i)];
        }
    }
    tr.re / PI
}

#[test]
fn random_state_matches_parity_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 5;
    let a = nalgebra::DMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    let rho = Qobj::from_dense(&(rho / tr), Dims::oper(&[n])).unwrap();
    let grid =
        PhaseSpaceGrid::new(vec![-1.5, -0.4, 0.0, 0.7, 1.6], vec![-1.1, 0.0, 0.3, 1.2]).unwrap();
    let w = wigner(&rho, &grid).unwrap();
    for (i, &x) in grid.xvec().iter().enumerate() {
        for (j, &p) in grid.yvec().iter().enumerate() {
            let oracle = parity_wigner(&rho, x, p, 60);
            assert!(
                (w.values[(i, j)] - oracle).abs() < 1e-9,
                "({x}, {p}): {} vs {oracle}",
                w.values[(i, j)]
            );
        }
    }
}

#[test]
fn coherent_state_is_a_displaced_gaussian() {
    let alpha = C64::new(1.2, -0.7);
    let psi = coherent(40, alpha).unwrap();
    let grid = PhaseSpaceGrid::square(-4.0, 4.0, 41).unwrap();
    let w = wigner(&psi, &grid).unwrap();
    let (x0, p0) = (2f64.sqrt() * alpha.re, 2f64.sqrt() * alpha.im);
    for (i, &x) in grid.xvec().iter().enumerate() {
        for (j, &p) in grid.yvec().iter().enumerate() {
            let exact = (-(x - x0).powi(2) - (p - p0).powi(2)).exp() / PI;
            assert!((w.values[(i, j)] - exact).abs() < 1e-8);
        }
    }
}

#[test]
fn cat_state_has_negative_regions() {
    let n = 30;
    let cat = (coherent(n, C64::new(2.0, 0.0)).unwrap()
        + coherent(n, C64::new(-2.0, 0.0)).unwrap())
    .unit()
    .unwrap();
    let grid = PhaseSpaceGrid::square(-7.0, 7.0, 141).unwrap();
    let w = wigner(&cat, &grid).unwrap();
    assert!(w.min() < -0.1);
    assert!((w.integral() - 1.0).abs() < 1e-3);
}

#[test]
fn csv_layout() {
    let grid = PhaseSpaceGrid::new(vec![0.0, 1.0], vec![-1.0, 0.0, 1.0]).unwrap();
    let w = wigner(&basis(3, 0).unwrap(), &grid).unwrap();
    let mut buf = Vec::new();
    w.write_csv(&mut buf).unwrap();
    let s = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "x,y,W");
    assert_eq!(lines.len(), 7);
    assert!(lines[2].starts_with("0.0000000000000000e0,0.0000000000000000e0,"));
}
