//! Functions on states: expectation values, distance measures, entropy and
//! the Wigner quasi-probability distribution.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::dense;
use crate::error::{QError, Result};
use crate::qobj::{QType, Qobj};

/// Relative tolerance on the imaginary part of a Hermitian expectation value.
pub const EXPECT_IMAG_TOL: f64 = 1e-10;

/// Eigenvalues at or below this are skipped in the entropy sum.
pub const ENTROPY_FLOOR: f64 = 1e-15;

fn check_space(op: &Qobj, state: &Qobj) -> Result<()> {
    if !op.is_oper() {
        return Err(QError::Type(format!("expectation of a {}", op.qtype())));
    }
    if op.space_dims() != state.space_dims() {
        return Err(QError::Dimension(format!(
            "operator on {:?} cannot act on a state in {:?}",
            op.space_dims(),
            state.space_dims()
        )));
    }
    Ok(())
}

/// `⟨ψ|O|ψ⟩` for kets and bras, `tr(Oρ)` for density operators. Hermitian
/// operators give a real result.
pub fn expect(op: &Qobj, state: &Qobj) -> Result<C64> {
    check_space(op, state)?;
    let value = match state.qtype() {
        QType::Ket | QType::Bra => {
            let psi = state.to_vec();
            let mut acc = C64::new(0.0, 0.0);
            for (r, c, v) in op.data().iter() {
                acc += psi[r].conj() * v * psi[c];
            }
            acc
        }
        QType::Oper => {
            let rho = state.data();
            op.data().iter().map(|(i, j, v)| v * rho.get(j, i)).sum()
        }
        QType::Super => return Err(QError::Type("expectation in a superoperator".into())),
    };
    realify(op.isherm(), value)
}

pub(crate) fn realify(herm: bool, value: C64) -> Result<C64> {
    if !herm {
        return Ok(value);
    }
    if value.im.abs() > EXPECT_IMAG_TOL * (1.0 + value.re.abs()) {
        return Err(QError::Domain(format!(
            "Hermitian observable produced a complex expectation {value}; is the state Hermitian?"
        )));
    }
    Ok(C64::new(value.re, 0.0))
}

/// Elementwise [`expect`] over a list of states.
pub fn expect_list(op: &Qobj, states: &[Qobj]) -> Result<Vec<C64>> {
    states.iter().map(|s| expect(op, s)).collect()
}

/// `|ψ⟩⟨ψ|` from a ket or bra.
pub fn ket2dm(psi: &Qobj) -> Result<Qobj> {
    match psi.qtype() {
        QType::Ket | QType::Bra => psi.proj(),
        other => Err(QError::Type(format!(
            "ket2dm expects a ket or bra, got {other}"
        ))),
    }
}

fn as_density(q: &Qobj) -> Result<Qobj> {
    match q.qtype() {
        QType::Ket | QType::Bra => q.proj(),
        QType::Oper => Ok(q.clone()),
        QType::Super => Err(QError::Type("expected a state, got a superoperator".into())),
    }
}

fn paired_densities(a: &Qobj, b: &Qobj) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let (a, b) = (as_density(a)?, as_density(b)?);
    if a.dims() != b.dims() {
        return Err(QError::Dimension(format!(
            "states with dims {} and {}",
            a.dims(),
            b.dims()
        )));
    }
    Ok((a.full(), b.full()))
}

fn hermitize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Uhlmann fidelity `tr √(√ρ₁ ρ₂ √ρ₁)`; kets are promoted to density operators.
pub fn fidelity(a: &Qobj, b: &Qobj) -> Result<f64> {
    let (ra, rb) = paired_densities(a, b)?;
    let (vals, vecs) = dense::eigh(&hermitize(&ra));
    let n = ra.nrows();
    let mut sqrt_a = DMatrix::<C64>::zeros(n, n);
    for (l, v) in vals.iter().zip(vecs.iter()) {
        if *l > 0.0 {
            sqrt_a += v * v.adjoint() * C64::new(l.sqrt(), 0.0);
        }
    }
    let inner = hermitize(&(&sqrt_a * rb * &sqrt_a));
    let f: f64 = dense::eigvalsh(&inner)
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    Ok(f.min(1.0))
}

/// Half the trace norm of `ρ₁ − ρ₂`.
pub fn tracedist(a: &Qobj, b: &Qobj) -> Result<f64> {
    let (ra, rb) = paired_densities(a, b)?;
    let diff = hermitize(&(ra - rb));
    Ok(0.5 * dense::eigvalsh(&diff).iter().map(|l| l.abs()).sum::<f64>())
}

/// Von Neumann entropy with the natural logarithm.
pub fn entropy_vn(rho: &Qobj) -> Result<f64> {
    let rho = match rho.qtype() {
        QType::Oper if rho.is_square() => rho.clone(),
        QType::Ket | QType::Bra => return Ok(0.0),
        _ => {
            return Err(QError::Shape(format!(
                "entropy of a non-square {:?} object",
                rho.shape()
            )))
        }
    };
    let vals = dense::eigvalsh(&hermitize(&rho.full()));
    Ok(vals
        .into_iter()
        .filter(|&l| l > ENTROPY_FLOOR)
        .map(|l| -l * l.ln())
        .sum::<f64>()
        .max(0.0))
}

/// Sample points of phase space; both axes strictly ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceGrid {
    xvec: Vec<f64>,
    yvec: Vec<f64>,
}

impl PhaseSpaceGrid {
    pub fn new(xvec: Vec<f64>, yvec: Vec<f64>) -> Result<Self> {
        for (name, v) in [("x", &xvec), ("y", &yvec)] {
            if v.len() < 2 {
                return Err(QError::Argument(format!(
                    "{name} axis needs at least 2 samples"
                )));
            }
            if v.windows(2).any(|w| !(w[1] > w[0])) || v.iter().any(|s| !s.is_finite()) {
                return Err(QError::Argument(format!(
                    "{name} axis must be finite and strictly ascending"
                )));
            }
        }
        Ok(PhaseSpaceGrid { xvec, yvec })
    }

    /// Square grid with `n` evenly spaced samples on `[lo, hi]` per axis.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let v = linspace(lo, hi, n);
        Self::new(v.clone(), v)
    }

    pub fn xvec(&self) -> &[f64] {
        &self.xvec
    }

    pub fn yvec(&self) -> &[f64] {
        &self.yvec
    }
}

/// Evenly spaced samples with inclusive endpoints.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (count - 1) as f64;
            (0..count)
                .map(|k| {
                    if k == count - 1 {
                        stop
                    } else {
                        start + step * k as f64
                    }
                })
                .collect()
        }
    }
}

/// Wigner function sampled on a grid; `values[(i, j)] = W(x_i, y_j)`.
#[derive(Clone, Debug)]
pub struct WignerMap {
    pub grid: PhaseSpaceGrid,
    pub values: DMatrix<f64>,
}

impl WignerMap {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        let weights = |v: &[f64]| -> Vec<f64> {
            let n = v.len();
            (0..n)
                .map(|k| {
                    let left = if k > 0 { v[k] - v[k - 1] } else { 0.0 };
                    let right = if k + 1 < n { v[k + 1] - v[k] } else { 0.0 };
                    0.5 * (left + right)
                })
                .collect()
        };
        let wx = weights(&self.grid.xvec);
        let wy = weights(&self.grid.yvec);
        let mut s = 0.0;
        for (i, a) in wx.iter().enumerate() {
            for (j, b) in wy.iter().enumerate() {
                s += a * b * self.values[(i, j)];
            }
        }
        s
    }

    /// CSV with header `x,y,W`, x outer and y inner.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,y,W")?;
        for (i, x) in self.grid.xvec.iter().enumerate() {
            for (j, y) in self.grid.yvec.iter().enumerate() {
                writeln!(out, "{x:.16e},{y:.16e},{:.16e}", self.values[(i, j)])?;
            }
        }
        Ok(())
    }
}

/// Wigner function of a single-mode state in the Fock basis, normalized so
/// that `∫∫ W dx dp = 1` with `α = (x + ip)/√2`.
///
/// Evaluated as a nested sum over the diagonals of ρ, each diagonal reduced
/// with a Clenshaw recurrence over normalized associated Laguerre functions.
pub fn wigner(state: &Qobj, grid: &PhaseSpaceGrid) -> Result<WignerMap> {
    let rho = as_density(state)?;
    if rho.space_dims().len() != 1 {
        return Err(QError::Dimension(format!(
            "wigner needs a single-mode state, got factors {:?}; take a partial trace first",
            rho.space_dims()
        )));
    }
    let rho = rho.full();
    let m = rho.nrows();
    // diagonals[l][n] = (-1)^n ρ[n, n+l], doubled off the main diagonal
    let diagonals: Vec<Vec<C64>> = (0..m)
        .map(|l| {
            let w = if l == 0 { 1.0 } else { 2.0 };
            (0..m - l)
                .map(|n| {
                    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                    rho[(n, n + l)] * (sign * w)
                })
                .collect()
        })
        .collect();
    let nx = grid.xvec.len();
    let ny = grid.yvec.len();
    let rows: Vec<Vec<f64>> = grid
        .xvec
        .par_iter()
        .map(|&x| {
            grid.yvec
                .iter()
                .map(|&y| wigner_point(&diagonals, x, y))
                .collect()
        })
        .collect();
    let values = DMatrix::from_fn(nx, ny, |i, j| rows[i][j]);
    Ok(WignerMap {
        grid: grid.clone(),
        values,
    })
}

fn wigner_point(diagonals: &[Vec<C64>], x: f64, y: f64) -> f64 {
    let two_alpha = C64::new(x, y) * std::f64::consts::SQRT_2;
    let b = two_alpha.norm_sqr();
    let mut w = C64::new(0.0, 0.0);
    for (l, coeffs) in diagonals.iter().enumerate().rev() {
        let s = laguerre_series(l, b, coeffs);
        w = s + w * two_alpha / ((l + 1) as f64).sqrt();
    }
    w.re * (-0.5 * b).exp() / PI
}

/// `Σ_n c_n ψ_n(x)` with `ψ_n = √(n! l!/(n+l)!) L_n^{(l)}(x)`, by Clenshaw.
fn laguerre_series(l: usize, x: f64, c: &[C64]) -> C64 {
    let lf = l as f64;
    let a = |n: usize| {
        let nf = n as f64;
        (2.0 * nf + lf + 1.0 - x) / ((nf + 1.0) * (nf + lf + 1.0)).sqrt()
    };
    let bcoef = |n: usize| {
        let nf = n as f64;
        -(nf * (nf + lf) / ((nf + 1.0) * (nf + lf + 1.0))).sqrt()
    };
    let k = c.len();
    if k == 0 {
        return C64::new(0.0, 0.0);
    }
    if k == 1 {
        return c[0];
    }
    let mut y1 = C64::new(0.0, 0.0); // y_{k+1}
    let mut y2 = C64::new(0.0, 0.0); // y_{k+2}
    for n in (1..k).rev() {
        let yn = c[n] + y1 * a(n) + y2 * bcoef(n + 1);
        y2 = y1;
        y1 = yn;
    }
    let psi1 = (lf + 1.0 - x) / (lf + 1.0).sqrt();
    c[0] + y1 * psi1 + y2 * bcoef(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factory::*;
    use crate::qobj::tensor;

    fn cr(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn expect_examples() {
        assert_eq!(
            expect(&num(4).unwrap(), &fock(4, 1).unwrap()).unwrap(),
            cr(1.0)
        );
        let plus = (basis(2, 0).unwrap() + basis(2, 1).unwrap())
            .unit()
            .unwrap();
        assert!(expect(&sigmaz(), &plus).unwrap().norm() < 1e-15);
        let n = expect(&num(30).unwrap(), &coherent(30, cr(10f64.sqrt())).unwrap()).unwrap();
        assert!((n.re - 10.0).abs() < 1e-3);
        assert_eq!(n.im, 0.0);
        let rho = thermal_dm(6, 0.4).unwrap();
        let direct: f64 = rho
            .diag()
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p.re)
            .sum();
        assert!((expect(&num(6).unwrap(), &rho).unwrap().re - direct).abs() < 1e-14);
    }

    #[test]
    fn expect_bra_and_errors() {
        let k = fock(3, 2).unwrap();
        assert_eq!(expect(&num(3).unwrap(), &k.dag()).unwrap(), cr(2.0));
        assert!(matches!(
            expect(&num(4).unwrap(), &k),
            Err(QError::Dimension(_))
        ));
        let a = destroy(3).unwrap();
        let coh = coherent(3, C64::new(0.2, 0.1)).unwrap();
        assert!(expect(&a, &coh).unwrap().im != 0.0);
    }

    #[test]
    fn ket2dm_examples() {
        assert_eq!(
            ket2dm(&basis(2, 0).unwrap()).unwrap().diag(),
            vec![cr(1.0), cr(0.0)]
        );
        let plus = (basis(2, 0).unwrap() + basis(2, 1).unwrap())
            .unit()
            .unwrap();
        let rho = ket2dm(&plus).unwrap();
        assert!((rho.tr().unwrap() - cr(1.0)).norm() < 1e-15);
        for v in rho.full().iter() {
            assert!((v - cr(0.5)).norm() < 1e-15);
        }
        assert!(matches!(ket2dm(&qeye(2)), Err(QError::Type(_))));
    }

    #[test]
    fn fidelity_examples() {
        let rho = thermal_dm(4, 0.5).unwrap();
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-10);
        let (a, b) = (basis(3, 0).unwrap(), basis(3, 2).unwrap());
        assert!(fidelity(&a, &b).unwrap() < 1e-7);
        let psi = coherent(8, C64::new(0.4, 0.1)).unwrap();
        let phi = coherent(8, C64::new(-0.2, 0.3)).unwrap();
        let overlap = psi
            .to_vec()
            .iter()
            .zip(phi.to_vec())
            .map(|(x, y)| x.conj() * y)
            .sum::<C64>()
            .norm();
        assert!((fidelity(&psi, &phi).unwrap() - overlap).abs() < 1e-7);
        assert!(matches!(
            fidelity(&a, &basis(2, 0).unwrap()),
            Err(QError::Dimension(_))
        ));
    }

    #[test]
    fn tracedist_examples() {
        let rho = thermal_dm(4, 0.5).unwrap();
        assert!(tracedist(&rho, &rho).unwrap().abs() < 1e-14);
        assert!(
            (tracedist(&basis(2, 0).unwrap(), &basis(2, 1).unwrap()).unwrap() - 1.0).abs() < 1e-14
        );
        let mixed = qeye(2) * 0.5;
        assert!((tracedist(&basis(2, 0).unwrap(), &mixed).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn entropy_examples() {
        assert!(entropy_vn(&fock_dm(3, 1).unwrap()).unwrap().abs() < 1e-12);
        assert!((entropy_vn(&(qeye(2) * 0.5)).unwrap() - 2f64.ln()).abs() < 1e-14);
        let nbar: f64 = 1.0;
        let exact = (1.0 + nbar) * (1.0 + nbar).ln() - nbar * nbar.ln();
        assert!((entropy_vn(&thermal_dm(60, nbar).unwrap()).unwrap() - exact).abs() < 1e-4);
        assert!(matches!(
            entropy_vn(
                &basis(2, 0)
                    .unwrap()
                    .dag()
                    .proj()
                    .unwrap()
                    .dag()
                    .ptrace(&[0])
                    .unwrap()
                    .checked_mul(&qeye(2))
                    .map(|q| q)
                    .unwrap()
                    .dag()
            ),
            Ok(_)
        ));
    }

    #[test]
    fn grid_validation() {
        assert!(PhaseSpaceGrid::new(vec![0.0], vec![0.0, 1.0]).is_err());
        assert!(PhaseSpaceGrid::new(vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(PhaseSpaceGrid::new(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn wigner_vacuum_peak() {
        let grid = PhaseSpaceGrid::new(vec![-1.0, 0.0, 1.0], vec![-0.5, 0.0, 0.5]).unwrap();
        let w = wigner(&basis(5, 0).unwrap(), &grid).unwrap();
        assert!((w.values[(1, 1)] - 1.0 / PI).abs() < 1e-12);
        assert!((w.values[(0, 2)] - (-1.25f64).exp() / PI).abs() < 1e-12);
    }

    #[test]
    fn wigner_fock_one_closed_form() {
        let grid = PhaseSpaceGrid::square(-3.0, 3.0, 13).unwrap();
        let w = wigner(&fock(4, 1).unwrap(), &grid).unwrap();
        for (i, x) in grid.xvec().iter().enumerate() {
            for (j, y) in grid.yvec().iter().enumerate() {
                let r2 = x * x + y * y;
                let exact = (2.0 * r2 - 1.0) * (-r2).exp() / PI;
                assert!((w.values[(i, j)] - exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wigner_normalizes() {
        let grid = PhaseSpaceGrid::square(-8.0, 8.0, 161).unwrap();
        let w = wigner(&thermal_dm(20, 0.7).unwrap(), &grid).unwrap();
        assert!((w.integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn wigner_rejects_composite() {
        let grid = PhaseSpaceGrid::square(-1.0, 1.0, 3).unwrap();
        let k = tensor(&[&basis(3, 0).unwrap(), &basis(2, 0).unwrap()]).unwrap();
        assert!(matches!(wigner(&k, &grid), Err(QError::Dimension(_))));
    }
}
