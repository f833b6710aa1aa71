//! Dense complex linear algebra used where densification is unavoidable:
//! matrix exponential, Hermitian and general eigendecomposition, square root.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{QError, Result};

/// Scaling-and-squaring matrix exponential with a degree-13 Padé approximant.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    const THETA13: f64 = 5.371920351148152;
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let n = a.nrows();
    if n == 0 {
        return a.clone();
    }
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a.scale(0.5f64.powi(s));
    let id = DMatrix::<C64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| C64::new(B[k], 0.0);
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9))
        + &a6 * b(7)
        + &a4 * b(5)
        + &a2 * b(3)
        + &id * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8))
        + &a6 * b(6)
        + &a4 * b(4)
        + &a2 * b(2)
        + &id * b(0);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular for a scaled argument");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Hermitian eigendecomposition with ascending real eigenvalues and the
/// phase convention applied to every eigenvector.
pub fn eigh(h: &DMatrix<C64>) -> (Vec<f64>, Vec<DVector<C64>>) {
    let sym = nalgebra::linalg::SymmetricEigen::new(h.clone());
    let mut pairs: Vec<(f64, DVector<C64>)> = sym
        .eigenvalues
        .iter()
        .zip(sym.eigenvectors.column_iter())
        .map(|(&l, v)| (l, fix_phase(v.into_owned())))
        .collect();
    sort_pairs(&mut pairs, |l| (*l, 0.0));
    pairs.into_iter().unzip()
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(h: &DMatrix<C64>) -> Vec<f64> {
    let mut vals: Vec<f64> = nalgebra::linalg::SymmetricEigen::new(h.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// General complex eigendecomposition from the Schur form, eigenvectors by
/// triangular back-substitution. Eigenvalues sorted by real then imaginary
/// part; vectors unit-normalized with the phase convention applied.
pub fn eig(a: &DMatrix<C64>) -> (Vec<C64>, Vec<DVector<C64>>) {
    let n = a.nrows();
    let (q, t) = schur(a);
    let tnorm = t
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    // complex division squares the denominator, so keep it above sqrt(MIN_POSITIVE)
    let smin = (f64::EPSILON * tnorm).max(f64::MIN_POSITIVE.sqrt());
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut x = DVector::<C64>::zeros(n);
        x[k] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = C64::new(0.0, 0.0);
            for j in (i + 1)..=k {
                s += t[(i, j)] * x[j];
            }
            if s == C64::new(0.0, 0.0) {
                continue;
            }
            let mut d = t[(i, i)] - lambda;
            if d.norm() < smin {
                d = C64::new(smin, 0.0);
            }
            x[i] = -s / d;
        }
        let v = &q * x;
        let nv = v.norm();
        pairs.push((lambda, fix_phase(v / C64::new(nv, 0.0))));
    }
    sort_pairs(&mut pairs, |l| (l.re, l.im));
    pairs.into_iter().unzip()
}

/// Complex Schur form `A = Q T Q†`; upper-triangular input is returned as is
/// (the iteration does not terminate on an all-zero matrix).
fn schur(a: &DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
    let n = a.nrows();
    let triangular = (0..n).all(|j| ((j + 1)..n).all(|i| a[(i, j)] == C64::new(0.0, 0.0)));
    if triangular {
        return (DMatrix::identity(n, n), a.clone());
    }
    nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 1000 * n.max(10))
        .expect("Schur iteration did not converge")
        .unpack()
}

fn sort_pairs<T>(pairs: &mut [(T, DVector<C64>)], key: impl Fn(&T) -> (f64, f64)) {
    let scale = pairs
        .iter()
        .map(|(l, _)| {
            let (a, b) = key(l);
            a.abs().max(b.abs())
        })
        .fold(1.0, f64::max);
    let tol = 1e-12 * scale;
    pairs.sort_by(|(la, va), (lb, vb)| {
        let (ka, kb) = (key(la), key(lb));
        if (ka.0 - kb.0).abs() <= tol && (ka.1 - kb.1).abs() <= tol {
            lexicographic(va, vb)
        } else {
            ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
        }
    });
}

fn lexicographic(a: &DVector<C64>, b: &DVector<C64>) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != std::cmp::Ordering::Equal {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

/// Rotates a vector so its first non-negligible component is real positive.
pub fn fix_phase(mut v: DVector<C64>) -> DVector<C64> {
    let scale = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return v;
    }
    if let Some(first) = v.iter().find(|c| c.norm() > 1e-10 * scale).copied() {
        let phase = first.conj() / first.norm();
        v.iter_mut().for_each(|c| *c *= phase);
    }
    v
}

/// Square root of a Hermitian positive-semidefinite matrix.
pub fn sqrtm_psd(h: &DMatrix<C64>, tol: f64) -> Result<DMatrix<C64>> {
    let sym = nalgebra::linalg::SymmetricEigen::new(h.clone());
    if let Some(&min) = sym.eigenvalues.iter().min_by(|a, b| a.total_cmp(b)) {
        if min < -tol {
            return Err(QError::Domain(format!(
                "matrix square root needs a positive-semidefinite input, found eigenvalue {min:e}"
            )));
        }
    }
    let roots = sym.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0));
    let v = &sym.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.adjoint())
}

/// Singular values in no particular order, by one-sided Jacobi rotations.
///
/// Used instead of the bidiagonal SVD, which returns non-finite values on
/// some exactly sparse complex inputs (permutation-like matrices).
pub fn singular_values(a: &DMatrix<C64>) -> Vec<f64> {
    let mut m = if a.nrows() >= a.ncols() {
        a.clone()
    } else {
        a.adjoint()
    };
    let n = m.ncols();
    let tol = f64::EPSILON * (m.nrows() as f64).max(1.0);
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let alpha: f64 = m.column(i).norm_squared();
                let beta: f64 = m.column(j).norm_squared();
                let gamma: C64 = m.column(i).dotc(&m.column(j));
                let g = gamma.norm();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // phase-align column j, then a real rotation zeroes the overlap
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m.nrows() {
                    let x = m[(r, i)];
                    let y = m[(r, j)] * phase;
                    m[(r, i)] = x * c - y * s;
                    m[(r, j)] = x * s + y * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (0..n).map(|k| m.column(k).norm()).collect()
}

/// Sum of singular values.
pub fn trace_norm(a: &DMatrix<C64>) -> f64 {
    singular_values(a).iter().sum()
}

/// 2-norm condition number.
pub fn condition_number(a: &DMatrix<C64>) -> f64 {
    let sv = singular_values(a);
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
