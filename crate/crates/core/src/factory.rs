//! Standard states and operators.
//!
//! Basis index 0 is the first basis vector. `destroy(2)` maps index 1 to 0,
//! `sigmap()` is `[[0, 1], [0, 0]]` and `sigmaz()` is `diag(1, -1)`.

use log::warn;
use num_complex::Complex64 as C64;

use crate::error::{QError, Result};
use crate::qobj::{Dims, Qobj};

/// Pre-normalization tail mass above which a truncated coherent state is
/// reported.
pub const COHERENT_TAIL_WARN: f64 = 1e-6;

fn cr(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        return Err(QError::Argument(
            "Hilbert-space dimension must be at least 1".into(),
        ));
    }
    Ok(())
}

/// Fock/basis ket `|index⟩` in an `n`-dimensional space.
pub fn basis(n: usize, index: usize) -> Result<Qobj> {
    check_dim(n)?;
    if index >= n {
        return Err(QError::Argument(format!(
            "basis index {index} out of range for dimension {n}"
        )));
    }
    Qobj::from_triplets([(index, 0, cr(1.0))], Dims::ket(&[n]))
}

pub fn fock(n: usize, index: usize) -> Result<Qobj> {
    basis(n, index)
}

pub fn fock_dm(n: usize, index: usize) -> Result<Qobj> {
    basis(n, index)?.proj()
}

/// Probability mass of the coherent-state amplitudes that falls outside an
/// `n`-level truncation.
pub fn coherent_tail_mass(n: usize, alpha: C64) -> f64 {
    let amps = coherent_amplitudes(n, alpha);
    (1.0 - amps.iter().map(|a| a.norm_sqr()).sum::<f64>()).max(0.0)
}

fn coherent_amplitudes(n: usize, alpha: C64) -> Vec<C64> {
    let mut amps = Vec::with_capacity(n);
    let mut cur = cr((-alpha.norm_sqr() / 2.0).exp());
    for k in 0..n {
        if k > 0 {
            cur = cur * alpha / (k as f64).sqrt();
        }
        amps.push(cur);
    }
    amps
}

/// Coherent state from the analytic amplitudes, renormalized over the
/// truncated space.
pub fn coherent(n: usize, alpha: C64) -> Result<Qobj> {
    check_dim(n)?;
    let amps = coherent_amplitudes(n, alpha);
    let mass: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if 1.0 - mass > COHERENT_TAIL_WARN {
        warn!(
            "coherent state with |alpha|^2 = {:.4} truncated to {n} levels loses {:.3e} of its norm",
            alpha.norm_sqr(),
            1.0 - mass
        );
    }
    if mass == 0.0 {
        return Err(QError::Normalization);
    }
    let scale = mass.sqrt();
    let amps: Vec<C64> = amps.into_iter().map(|a| a / scale).collect();
    Qobj::ket(&amps, &[n])
}

pub fn coherent_dm(n: usize, alpha: C64) -> Result<Qobj> {
    coherent(n, alpha)?.proj()
}

/// Thermal state with mean occupation `nbar`, normalized over the truncation.
pub fn thermal_dm(n: usize, nbar: f64) -> Result<Qobj> {
    check_dim(n)?;
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(QError::Argument(format!(
            "mean occupation must be finite and >= 0, got {nbar}"
        )));
    }
    if nbar == 0.0 {
        return fock_dm(n, 0);
    }
    let ratio = nbar / (1.0 + nbar);
    let weights: Vec<f64> = (0..n).map(|k| ratio.powi(k as i32)).collect();
    let z: f64 = weights.iter().sum();
    let diag: Vec<C64> = weights.iter().map(|w| cr(w / z)).collect();
    Qobj::from_triplets(
        diag.into_iter().enumerate().map(|(k, v)| (k, k, v)),
        Dims::oper(&[n]),
    )
}

/// Identity on an `n`-level space.
///
/// # Panics
/// If `n == 0`.
pub fn qeye(n: usize) -> Qobj {
    assert!(n > 0, "qeye needs a positive dimension");
    Qobj::from_triplets((0..n).map(|k| (k, k, cr(1.0))), Dims::oper(&[n]))
        .expect("identity is valid")
}

/// Bosonic annihilation operator, `a|k⟩ = √k |k-1⟩`.
pub fn destroy(n: usize) -> Result<Qobj> {
    check_dim(n)?;
    Qobj::from_triplets(
        (1..n).map(|k| (k - 1, k, cr((k as f64).sqrt()))),
        Dims::oper(&[n]),
    )
}

pub fn create(n: usize) -> Result<Qobj> {
    Ok(destroy(n)?.dag())
}

pub fn num(n: usize) -> Result<Qobj> {
    check_dim(n)?;
    Qobj::from_triplets((0..n).map(|k| (k, k, cr(k as f64))), Dims::oper(&[n]))
}

/// `exp(α a† − α* a)`.
pub fn displace(n: usize, alpha: C64) -> Result<Qobj> {
    let a = destroy(n)?;
    a.dag().combine(alpha, &a, -alpha.conj())?.expm()
}

/// `exp(½(z* a² − z a†²))`.
pub fn squeeze(n: usize, z: C64) -> Result<Qobj> {
    let a = destroy(n)?;
    let a2 = a.checked_mul(&a)?;
    let ad2 = a2.dag();
    a2.combine(z.conj() * 0.5, &ad2, -z * 0.5)?.expm()
}

fn pauli(entries: [(usize, usize, C64); 2]) -> Qobj {
    Qobj::from_triplets(entries, Dims::oper(&[2])).expect("Pauli matrices are valid")
}

pub fn sigmax() -> Qobj {
    pauli([(0, 1, cr(1.0)), (1, 0, cr(1.0))])
}

pub fn sigmay() -> Qobj {
    pauli([(0, 1, C64::new(0.0, -1.0)), (1, 0, C64::new(0.0, 1.0))])
}

pub fn sigmaz() -> Qobj {
    pauli([(0, 0, cr(1.0)), (1, 1, cr(-1.0))])
}

/// `[[0, 1], [0, 0]]`.
pub fn sigmap() -> Qobj {
    Qobj::from_triplets([(0, 1, cr(1.0))], Dims::oper(&[2])).expect("valid")
}

/// `[[0, 0], [1, 0]]`.
pub fn sigmam() -> Qobj {
    Qobj::from_triplets([(1, 0, cr(1.0))], Dims::oper(&[2])).expect("valid")
}

/// Spin quantum number stored as `2j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Spin(u32);

impl Spin {
    /// Validates that `j` is a non-negative integer or half-integer.
    pub fn new(j: f64) -> Result<Self> {
        let twice = 2.0 * j;
        if !(twice >= 0.0) || (twice - twice.round()).abs() > 1e-12 || twice > u32::MAX as f64 {
            return Err(QError::Argument(format!(
                "spin must be a non-negative multiple of 1/2, got {j}"
            )));
        }
        Ok(Spin(twice.round() as u32))
    }

    pub fn j(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn dim(self) -> usize {
        self.0 as usize + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpinComponent {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

/// Spin-`j` angular momentum operator in the basis `m = j, j-1, …, -j`.
pub fn jmat(spin: Spin, which: SpinComponent) -> Qobj {
    let j = spin.j();
    let n = spin.dim();
    let m = |k: usize| j - k as f64;
    let plus: Vec<(usize, usize, C64)> = (0..n.saturating_sub(1))
        .map(|k| {
            let mk = m(k + 1);
            (k, k + 1, cr((j * (j + 1.0) - mk * (mk + 1.0)).sqrt()))
        })
        .collect();
    let jp = Qobj::from_triplets(plus, Dims::oper(&[n])).expect("valid");
    match which {
        SpinComponent::Plus => jp,
        SpinComponent::Minus => jp.dag(),
        SpinComponent::X => jp.combine(cr(0.5), &jp.dag(), cr(0.5)).expect("same dims"),
        SpinComponent::Y => jp
            .combine(C64::new(0.0, -0.5), &jp.dag(), C64::new(0.0, 0.5))
            .expect("same dims"),
        SpinComponent::Z => {
            Qobj::from_triplets((0..n).map(|k| (k, k, cr(m(k)))), Dims::oper(&[n])).expect("valid")
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateSpec {
    Basis { n: usize, index: usize },
    FockDm { n: usize, index: usize },
    Coherent { n: usize, alpha: C64 },
    CoherentDm { n: usize, alpha: C64 },
    ThermalDm { n: usize, nbar: f64 },
}

pub fn make_state(spec: &StateSpec) -> Result<Qobj> {
    match *spec {
        StateSpec::Basis { n, index } => basis(n, index),
        StateSpec::FockDm { n, index } => fock_dm(n, index),
        StateSpec::Coherent { n, alpha } => coherent(n, alpha),
        StateSpec::CoherentDm { n, alpha } => coherent_dm(n, alpha),
        StateSpec::ThermalDm { n, nbar } => thermal_dm(n, nbar),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OperatorSpec {
    Identity { n: usize },
    Destroy { n: usize },
    Create { n: usize },
    Num { n: usize },
    Displace { n: usize, alpha: C64 },
    Squeeze { n: usize, z: C64 },
    SigmaX,
    SigmaY,
    SigmaZ,
    SigmaP,
    SigmaM,
    Jmat { j: f64, which: SpinComponent },
}

pub fn make_operator(spec: &OperatorSpec) -> Result<Qobj> {
    match *spec {
        OperatorSpec::Identity { n } => {
            check_dim(n)?;
            Ok(qeye(n))
        }
        OperatorSpec::Destroy { n } => destroy(n),
        OperatorSpec::Create { n } => create(n),
        OperatorSpec::Num { n } => num(n),
        OperatorSpec::Displace { n, alpha } => displace(n, alpha),
        OperatorSpec::Squeeze { n, z } => squeeze(n, z),
        OperatorSpec::SigmaX => Ok(sigmax()),
        OperatorSpec::SigmaY => Ok(sigmay()),
        OperatorSpec::SigmaZ => Ok(sigmaz()),
        OperatorSpec::SigmaP => Ok(sigmap()),
        OperatorSpec::SigmaM => Ok(sigmam()),
        OperatorSpec::Jmat { j, which } => Ok(jmat(Spin::new(j)?, which)),
    }
}
