//! The quantum object: a sparse complex matrix tagged with the tensor
//! structure of the space it lives in.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dense;
use crate::error::{QError, Result};
use crate::sparse::{CsrMatrix, DenseDump, PRUNE_TOL};

/// Maximum entrywise `|A - A†|` for an object to be flagged Hermitian.
pub const HERM_TOL: f64 = 1e-12;

/// Largest matrix side that `expm`, `sqrtm`, `eigenstates` and `norm` of an
/// operator will densify.
pub const DENSE_CAP: usize = 4096;

/// Ordered subsystem dimensions of a (possibly composite) space.
pub type DimSpec = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dims {
    /// Row-space and column-space factor lists of a Hilbert-space object.
    Hilbert { rows: DimSpec, cols: DimSpec },
    /// Superoperator acting on operators whose factor lists are `rows`/`cols`.
    Super { rows: DimSpec, cols: DimSpec },
}

impl Dims {
    pub fn oper(dims: &[usize]) -> Self {
        Dims::Hilbert {
            rows: dims.to_vec(),
            cols: dims.to_vec(),
        }
    }

    pub fn ket(dims: &[usize]) -> Self {
        Dims::Hilbert {
            rows: dims.to_vec(),
            cols: vec![1; dims.len()],
        }
    }

    pub fn bra(dims: &[usize]) -> Self {
        Dims::Hilbert {
            rows: vec![1; dims.len()],
            cols: dims.to_vec(),
        }
    }

    pub fn superop(dims: &[usize]) -> Self {
        Dims::Super {
            rows: dims.to_vec(),
            cols: dims.to_vec(),
        }
    }

    /// Matrix shape implied by the factor lists.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Dims::Hilbert { rows, cols } => (rows.iter().product(), cols.iter().product()),
            Dims::Super { rows, cols } => {
                let n = rows.iter().product::<usize>() * cols.iter().product::<usize>();
                (n, n)
            }
        }
    }

    pub fn rows(&self) -> &[usize] {
        match self {
            Dims::Hilbert { rows, .. } | Dims::Super { rows, .. } => rows,
        }
    }

    pub fn cols(&self) -> &[usize] {
        match self {
            Dims::Hilbert { cols, .. } | Dims::Super { cols, .. } => cols,
        }
    }

    fn validate(&self) -> Result<()> {
        let all = self.rows().iter().chain(self.cols().iter());
        if self.rows().is_empty() || self.cols().is_empty() {
            return Err(QError::Dimension("factor lists must not be empty".into()));
        }
        if all.clone().any(|&d| d == 0) {
            return Err(QError::Dimension(format!("zero-sized factor in {self}")));
        }
        Ok(())
    }

    fn swapped(&self) -> Self {
        match self {
            Dims::Hilbert { rows, cols } => Dims::Hilbert {
                rows: cols.clone(),
                cols: rows.clone(),
            },
            Dims::Super { rows, cols } => Dims::Super {
                rows: cols.clone(),
                cols: rows.clone(),
            },
        }
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dims::Hilbert { rows, cols } => write!(f, "[{rows:?}, {cols:?}]"),
            Dims::Super { rows, cols } => {
                write!(f, "[[{rows:?}, {cols:?}], [{rows:?}, {cols:?}]]")
            }
        }
    }
}

fn same_factors(a: &[usize], b: &[usize]) -> bool {
    a == b || (a.iter().product::<usize>() == 1 && b.iter().product::<usize>() == 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QType {
    Ket,
    Bra,
    Oper,
    Super,
}

impl fmt::Display for QType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            QType::Ket => "ket",
            QType::Bra => "bra",
            QType::Oper => "oper",
            QType::Super => "super",
        };
        f.write_str(s)
    }
}

/// Immutable quantum object: state vector, operator or superoperator.
#[derive(Clone, Debug, PartialEq)]
pub struct Qobj {
    data: CsrMatrix,
    dims: Dims,
    qtype: QType,
    isherm: bool,
}

/// Eigenvalues (ascending) and matching eigenkets.
#[derive(Clone, Debug)]
pub struct Eigenstates {
    pub values: Vec<C64>,
    pub kets: Vec<Qobj>,
}

impl Qobj {
    /// Wraps sparse data, validating it against `dims` and inferring type and
    /// Hermiticity. Entries below the prune threshold are dropped.
    pub fn new(data: CsrMatrix, dims: Dims) -> Result<Self> {
        dims.validate()?;
        if dims.shape() != data.shape() {
            return Err(QError::Dimension(format!(
                "dims {dims} imply shape {:?} but data is {:?}",
                dims.shape(),
                data.shape()
            )));
        }
        let (r, c) = data.shape();
        let qtype = match &dims {
            Dims::Super { .. } => QType::Super,
            Dims::Hilbert { .. } if c == 1 && r > 1 => QType::Ket,
            Dims::Hilbert { .. } if r == 1 && c > 1 => QType::Bra,
            Dims::Hilbert { .. } if r == c => QType::Oper,
            _ => {
                return Err(QError::Shape(format!(
                    "a {r}x{c} matrix is neither a ket, a bra nor a square operator"
                )))
            }
        };
        let data = data.prune(PRUNE_TOL);
        let isherm = matches!(qtype, QType::Oper | QType::Super)
            && data.hermitian_deviation().is_some_and(|d| d <= HERM_TOL);
        Ok(Qobj {
            data,
            dims,
            qtype,
            isherm,
        })
    }

    /// Builds an object from dense row-major entries.
    pub fn from_rows(rows: &[Vec<C64>], dims: Dims) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(QError::Shape("ragged rows".into()));
        }
        let triplets = rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &v)| (i, j, v)));
        let data = CsrMatrix::from_triplets(nrows, ncols, triplets, PRUNE_TOL)?;
        Self::new(data, dims)
    }

    pub fn from_real_rows(rows: &[Vec<f64>], dims: Dims) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows, dims)
    }

    pub fn from_dense(m: &DMatrix<C64>, dims: Dims) -> Result<Self> {
        Self::new(CsrMatrix::from_dense(m, PRUNE_TOL), dims)
    }

    pub fn from_triplets(
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
        dims: Dims,
    ) -> Result<Self> {
        let (r, c) = dims.shape();
        Self::new(CsrMatrix::from_triplets(r, c, triplets, PRUNE_TOL)?, dims)
    }

    /// Ket from amplitudes, with factor dimensions `dims`.
    pub fn ket(amps: &[C64], dims: &[usize]) -> Result<Self> {
        Self::new(CsrMatrix::from_column(amps, PRUNE_TOL), Dims::ket(dims))
    }

    pub fn data(&self) -> &CsrMatrix {
        &self.data
    }

    pub fn dims(&self) -> &Dims {
        &self.dims
    }

    pub fn shape(&self) -> (usize, usize) {
        self.data.shape()
    }

    pub fn qtype(&self) -> QType {
        self.qtype
    }

    pub fn isherm(&self) -> bool {
        self.isherm
    }

    pub fn is_ket(&self) -> bool {
        self.qtype == QType::Ket
    }

    pub fn is_bra(&self) -> bool {
        self.qtype == QType::Bra
    }

    pub fn is_oper(&self) -> bool {
        self.qtype == QType::Oper
    }

    pub fn is_super(&self) -> bool {
        self.qtype == QType::Super
    }

    pub fn is_square(&self) -> bool {
        self.shape().0 == self.shape().1
    }

    /// Factor dimensions of the Hilbert space an operator or state lives in.
    pub fn space_dims(&self) -> &[usize] {
        match self.qtype {
            QType::Bra => self.dims.cols(),
            _ => self.dims.rows(),
        }
    }

    /// Dense amplitudes of a ket or bra.
    pub fn to_vec(&self) -> Vec<C64> {
        match self.qtype {
            QType::Bra => (0..self.shape().1).map(|j| self.data.get(0, j)).collect(),
            _ => (0..self.shape().0).map(|i| self.data.get(i, 0)).collect(),
        }
    }

    pub fn to_dvector(&self) -> DVector<C64> {
        DVector::from_vec(self.to_vec())
    }

    /// Dense representation, zeros included.
    pub fn full(&self) -> DMatrix<C64> {
        self.data.to_dense()
    }

    /// Main diagonal.
    pub fn diag(&self) -> Vec<C64> {
        self.data.diagonal()
    }

    pub fn dump(&self) -> DenseDump {
        DenseDump::from(&self.data)
    }

    /// Conjugate transpose.
    pub fn dag(&self) -> Qobj {
        Qobj::new(self.data.adjoint(), self.dims.swapped()).expect("adjoint keeps valid dims")
    }

    pub fn conj(&self) -> Qobj {
        Qobj::new(self.data.conj(), self.dims.clone()).expect("conjugate keeps valid dims")
    }

    pub fn trans(&self) -> Qobj {
        Qobj::new(self.data.transpose(), self.dims.swapped()).expect("transpose keeps valid dims")
    }

    pub fn tr(&self) -> Result<C64> {
        if !self.is_square() {
            return Err(QError::Shape(format!(
                "trace of a non-square {:?} object",
                self.shape()
            )));
        }
        Ok(self.data.trace())
    }

    /// Euclidean norm for kets and bras, trace norm for operators.
    pub fn norm(&self) -> Result<f64> {
        match self.qtype {
            QType::Ket | QType::Bra => Ok(self
                .data
                .values()
                .iter()
                .map(|v| v.norm_sqr())
                .sum::<f64>()
                .sqrt()),
            _ => {
                self.check_cap("norm")?;
                if self.isherm {
                    Ok(dense::eigvalsh(&self.full()).iter().map(|l| l.abs()).sum())
                } else {
                    Ok(dense::trace_norm(&self.full()))
                }
            }
        }
    }

    /// Normalized copy under the rule of [`Qobj::norm`].
    pub fn unit(&self) -> Result<Qobj> {
        let n = self.norm()?;
        if n == 0.0 || !n.is_finite() {
            return Err(QError::Normalization);
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Qobj {
        Qobj::new(self.data.scale(s), self.dims.clone()).expect("scaling keeps valid dims")
    }

    pub fn checked_div(&self, s: C64) -> Result<Qobj> {
        if s == C64::new(0.0, 0.0) {
            return Err(QError::Argument("division by zero".into()));
        }
        Ok(self.scale(1.0 / s))
    }

    pub fn checked_add(&self, rhs: &Qobj) -> Result<Qobj> {
        self.combine(C64::new(1.0, 0.0), rhs, C64::new(1.0, 0.0))
    }

    pub fn checked_sub(&self, rhs: &Qobj) -> Result<Qobj> {
        self.combine(C64::new(1.0, 0.0), rhs, C64::new(-1.0, 0.0))
    }

    /// `alpha * self + beta * rhs`.
    pub fn combine(&self, alpha: C64, rhs: &Qobj, beta: C64) -> Result<Qobj> {
        if self.dims != rhs.dims {
            return Err(QError::Dimension(format!(
                "cannot add objects with dims {} and {}",
                self.dims, rhs.dims
            )));
        }
        let data = self.data.add_scaled(alpha, &rhs.data, beta, PRUNE_TOL)?;
        Qobj::new(data, self.dims.clone())
    }

    /// Matrix product.
    pub fn checked_mul(&self, rhs: &Qobj) -> Result<Qobj> {
        use QType::*;
        match (self.qtype, rhs.qtype) {
            (Ket, Ket) | (Bra, Bra) => {
                return Err(QError::Type(format!(
                    "product {} x {} is undefined",
                    self.qtype, rhs.qtype
                )))
            }
            (Super, Super) | (Super, Ket) => {}
            (Super, _) | (_, Super) => {
                return Err(QError::Type(format!(
                    "product {} x {} is undefined",
                    self.qtype, rhs.qtype
                )))
            }
            _ => {}
        }
        let dims = match (&self.dims, &rhs.dims) {
            (Dims::Super { rows, cols }, Dims::Super { rows: r2, cols: c2 }) => {
                if rows != r2 || cols != c2 {
                    return Err(QError::Dimension(format!(
                        "superoperators with dims {} and {}",
                        self.dims, rhs.dims
                    )));
                }
                self.dims.clone()
            }
            (Dims::Super { .. }, Dims::Hilbert { .. }) => {
                if rhs.shape().0 != self.shape().1 {
                    return Err(QError::Dimension(format!(
                        "superoperator {} cannot act on a vector of length {}",
                        self.dims,
                        rhs.shape().0
                    )));
                }
                rhs.dims.clone()
            }
            (Dims::Hilbert { rows, cols }, Dims::Hilbert { rows: r2, cols: c2 }) => {
                if !same_factors(cols, r2) {
                    return Err(QError::Dimension(format!(
                        "cannot multiply objects with dims {} and {}",
                        self.dims, rhs.dims
                    )));
                }
                Dims::Hilbert {
                    rows: rows.clone(),
                    cols: c2.clone(),
                }
            }
            _ => unreachable!("super on the right was rejected above"),
        };
        let data = self.data.matmul(&rhs.data, PRUNE_TOL)?;
        Qobj::new(data, dims)
    }

    /// Drops stored entries with magnitude below `tol`.
    pub fn tidyup(&self, tol: f64) -> Qobj {
        Qobj::new(self.data.clone().prune(tol), self.dims.clone())
            .expect("pruning keeps valid dims")
    }

    fn check_cap(&self, what: &str) -> Result<()> {
        let n = self.shape().0.max(self.shape().1);
        if n > DENSE_CAP {
            return Err(QError::Capacity {
                what: what.into(),
                dim: n,
                cap: DENSE_CAP,
            });
        }
        Ok(())
    }

    fn require_square(&self, what: &str) -> Result<()> {
        if !self.is_square() || matches!(self.qtype, QType::Ket | QType::Bra) {
            return Err(QError::Shape(format!(
                "{what} requires a square operator, got {:?}",
                self.shape()
            )));
        }
        Ok(())
    }

    /// Matrix exponential (dense Padé scaling-and-squaring).
    pub fn expm(&self) -> Result<Qobj> {
        self.require_square("expm")?;
        self.check_cap("expm")?;
        Qobj::from_dense(&dense::expm(&self.full()), self.dims.clone())
    }

    /// Square root of a Hermitian positive-semidefinite operator.
    pub fn sqrtm(&self) -> Result<Qobj> {
        self.require_square("sqrtm")?;
        self.check_cap("sqrtm")?;
        if !self.isherm {
            return Err(QError::Domain("sqrtm requires a Hermitian operator".into()));
        }
        let scale = self.data.max_abs().max(1.0);
        Qobj::from_dense(
            &dense::sqrtm_psd(&self.full(), 1e-10 * scale)?,
            self.dims.clone(),
        )
    }

    pub fn eigenstates(&self) -> Result<Eigenstates> {
        self.eigenstates_with_cap(DENSE_CAP)
    }

    /// Eigenvalues in ascending order with phase-fixed eigenkets. Hermitian
    /// input uses the symmetric solver and yields real eigenvalues.
    pub fn eigenstates_with_cap(&self, cap: usize) -> Result<Eigenstates> {
        self.require_square("eigenstates")?;
        let n = self.shape().0;
        if n > cap {
            return Err(QError::Capacity {
                what: "eigenstates".into(),
                dim: n,
                cap,
            });
        }
        let m = self.full();
        let (values, vecs): (Vec<C64>, Vec<DVector<C64>>) = if self.isherm {
            let (vals, vecs) = dense::eigh(&m);
            (vals.into_iter().map(|l| C64::new(l, 0.0)).collect(), vecs)
        } else {
            dense::eig(&m)
        };
        let ket_dims = Dims::ket(self.dims.rows());
        let kets = vecs
            .into_iter()
            .map(|v| {
                Qobj::new(
                    CsrMatrix::from_column(v.as_slice(), PRUNE_TOL),
                    ket_dims.clone(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Eigenstates { values, kets })
    }

    /// Real eigenvalues of a Hermitian operator, ascending.
    pub fn eigenenergies(&self) -> Result<Vec<f64>> {
        self.require_square("eigenenergies")?;
        self.check_cap("eigenenergies")?;
        if !self.isherm {
            return Err(QError::Domain(
                "eigenenergies requires a Hermitian operator".into(),
            ));
        }
        Ok(dense::eigvalsh(&self.full()))
    }

    /// Density operator `|ψ⟩⟨ψ|` for a ket (or `|ψ⟩⟨ψ|` from a bra's dual).
    pub fn proj(&self) -> Result<Qobj> {
        match self.qtype {
            QType::Ket => self.checked_mul(&self.dag()),
            QType::Bra => self.dag().checked_mul(self),
            _ => Err(QError::Type(format!("cannot project a {}", self.qtype))),
        }
    }

    /// Reduced density operator over the subsystems in `keep`.
    pub fn ptrace(&self, keep: &[usize]) -> Result<Qobj> {
        let rho = match self.qtype {
            QType::Ket | QType::Bra => self.proj()?,
            QType::Oper => self.clone(),
            QType::Super => return Err(QError::Type("partial trace of a superoperator".into())),
        };
        let dims = rho.dims.rows().to_vec();
        if rho.dims.cols() != dims.as_slice() {
            return Err(QError::Dimension(format!(
                "partial trace needs matching row/column factors, got {}",
                rho.dims
            )));
        }
        let mut sel = keep.to_vec();
        sel.sort_unstable();
        if sel.is_empty() {
            return Err(QError::Argument("no subsystem selected to keep".into()));
        }
        if sel.windows(2).any(|w| w[0] == w[1]) {
            return Err(QError::Argument(format!(
                "repeated subsystem index in {keep:?}"
            )));
        }
        if let Some(&bad) = sel.iter().find(|&&k| k >= dims.len()) {
            return Err(QError::Argument(format!(
                "subsystem {bad} out of range for {} factors",
                dims.len()
            )));
        }
        let kept: Vec<usize> = sel.iter().map(|&k| dims[k]).collect();
        let keep_mask: Vec<bool> = (0..dims.len()).map(|k| sel.contains(&k)).collect();
        let split = |mut idx: usize| {
            let mut keep_idx = 0usize;
            let mut rest_idx = 0usize;
            let mut keep_stride = 1usize;
            let mut rest_stride = 1usize;
            for k in (0..dims.len()).rev() {
                let digit = idx % dims[k];
                idx /= dims[k];
                if keep_mask[k] {
                    keep_idx += digit * keep_stride;
                    keep_stride *= dims[k];
                } else {
                    rest_idx += digit * rest_stride;
                    rest_stride *= dims[k];
                }
            }
            (keep_idx, rest_idx)
        };
        let triplets = rho.data.iter().filter_map(|(r, c, v)| {
            let (kr, er) = split(r);
            let (kc, ec) = split(c);
            (er == ec).then_some((kr, kc, v))
        });
        Qobj::from_triplets(triplets, Dims::oper(&kept))
    }

    /// ⟨bra|self|ket⟩ for kets `bra` and `ket`.
    pub fn matrix_element(&self, bra: &Qobj, ket: &Qobj) -> Result<C64> {
        let v = self.checked_mul(ket)?;
        Ok(bra
            .to_vec()
            .iter()
            .zip(v.to_vec())
            .map(|(b, x)| b.conj() * x)
            .sum())
    }
}

/// Kronecker product of a list of kets, bras or operators, in list order.
pub fn tensor(parts: &[&Qobj]) -> Result<Qobj> {
    let first = parts
        .first()
        .ok_or_else(|| QError::Argument("tensor of an empty list".into()))?;
    let qtype = first.qtype;
    if qtype == QType::Super || parts.iter().any(|p| p.qtype != qtype) {
        return Err(QError::Type(format!(
            "tensor needs all kets, all bras or all operators, got [{}]",
            parts
                .iter()
                .map(|p| p.qtype.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }
    let mut data = first.data.clone();
    let mut rows = first.dims.rows().to_vec();
    let mut cols = first.dims.cols().to_vec();
    for p in &parts[1..] {
        data = data.kron(&p.data);
        rows.extend_from_slice(p.dims.rows());
        cols.extend_from_slice(p.dims.cols());
    }
    Qobj::new(data, Dims::Hilbert { rows, cols })
}

impl fmt::Display for Qobj {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (r, c) = self.shape();
        write!(
            f,
            "Quantum object: dims = {}, shape = [{r}, {c}], type = {}",
            self.dims, self.qtype
        )?;
        if matches!(self.qtype, QType::Oper | QType::Super) {
            write!(
                f,
                ", isHerm = {}",
                if self.isherm { "True" } else { "False" }
            )?;
        }
        writeln!(f, "\nQobj data =")?;
        let m = self.full();
        for i in 0..r {
            let row: Vec<String> = (0..c)
                .map(|j| {
                    let v = m[(i, j)];
                    if v.im == 0.0 {
                        format!("{:.4}", v.re)
                    } else {
                        format!("{:.4}{:+.4}j", v.re, v.im)
                    }
                })
                .collect();
            writeln!(f, "[{}]", row.join(" "))?;
        }
        Ok(())
    }
}

/// Owned and mixed-reference forms delegate to the `&Qobj op &Qobj` impl.
macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for Qobj {
            type Output = Qobj;
            fn $f(self, rhs: Qobj) -> Qobj {
                $tr::$f(&self, &rhs)
            }
        }
        impl $tr<&Qobj> for Qobj {
            type Output = Qobj;
            fn $f(self, rhs: &Qobj) -> Qobj {
                $tr::$f(&self, rhs)
            }
        }
        impl $tr<Qobj> for &Qobj {
            type Output = Qobj;
            fn $f(self, rhs: Qobj) -> Qobj {
                $tr::$f(self, &rhs)
            }
        }
    };
}

impl Add for &Qobj {
    type Output = Qobj;
    fn add(self, rhs: &Qobj) -> Qobj {
        self.checked_add(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

forward_owned!(Add, add);

impl Sub for &Qobj {
    type Output = Qobj;
    fn sub(self, rhs: &Qobj) -> Qobj {
        self.checked_sub(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

forward_owned!(Sub, sub);

impl Mul for &Qobj {
    type Output = Qobj;
    fn mul(self, rhs: &Qobj) -> Qobj {
        self.checked_mul(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

forward_owned!(Mul, mul);

impl Mul<C64> for &Qobj {
    type Output = Qobj;
    fn mul(self, s: C64) -> Qobj {
        self.scale(s)
    }
}

impl Mul<C64> for Qobj {
    type Output = Qobj;
    fn mul(self, s: C64) -> Qobj {
        self.scale(s)
    }
}

impl Mul<f64> for &Qobj {
    type Output = Qobj;
    fn mul(self, s: f64) -> Qobj {
        self.scale(C64::new(s, 0.0))
    }
}

impl Mul<f64> for Qobj {
    type Output = Qobj;
    fn mul(self, s: f64) -> Qobj {
        self.scale(C64::new(s, 0.0))
    }
}

impl Mul<&Qobj> for f64 {
    type Output = Qobj;
    fn mul(self, q: &Qobj) -> Qobj {
        q.scale(C64::new(self, 0.0))
    }
}

impl Mul<Qobj> for f64 {
    type Output = Qobj;
    fn mul(self, q: Qobj) -> Qobj {
        q.scale(C64::new(self, 0.0))
    }
}

impl Mul<&Qobj> for C64 {
    type Output = Qobj;
    fn mul(self, q: &Qobj) -> Qobj {
        q.scale(self)
    }
}

impl Mul<Qobj> for C64 {
    type Output = Qobj;
    fn mul(self, q: Qobj) -> Qobj {
        q.scale(self)
    }
}

impl Div<f64> for &Qobj {
    type Output = Qobj;
    fn div(self, s: f64) -> Qobj {
        self.checked_div(C64::new(s, 0.0))
            .unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Div<f64> for Qobj {
    type Output = Qobj;
    fn div(self, s: f64) -> Qobj {
        &self / s
    }
}

impl Neg for &Qobj {
    type Output = Qobj;
    fn neg(self) -> Qobj {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Neg for Qobj {
    type Output = Qobj;
    fn neg(self) -> Qobj {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factory::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn close(a: &DMatrix<C64>, b: &DMatrix<C64>, tol: f64) -> bool {
        a.shape() == b.shape() && (a - b).iter().all(|v| v.norm() <= tol)
    }

    #[test]
    fn construct_infers_type_and_hermiticity() {
        let x = Qobj::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], Dims::oper(&[2])).unwrap();
        assert_eq!(x.qtype(), QType::Oper);
        assert!(x.isherm());
        let k = Qobj::from_real_rows(&[vec![1.0], vec![0.0]], Dims::ket(&[2])).unwrap();
        assert_eq!(k.qtype(), QType::Ket);
        let half =
            Qobj::from_real_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]], Dims::oper(&[2])).unwrap();
        assert_eq!(half.qtype(), QType::Oper);
        assert!(half.isherm());
        let not_herm =
            Qobj::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]], Dims::oper(&[2])).unwrap();
        assert!(!not_herm.isherm());
    }

    #[test]
    fn construct_rejects_dims_mismatch() {
        let err = Qobj::from_real_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], Dims::oper(&[3]));
        assert!(matches!(err, Err(QError::Dimension(_))));
        let err = Qobj::from_real_rows(
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
            Dims::Hilbert {
                rows: vec![2],
                cols: vec![3],
            },
        );
        assert!(matches!(err, Err(QError::Shape(_))));
    }

    #[test]
    fn construct_prunes_small_entries() {
        let q =
            Qobj::from_real_rows(&[vec![1.0, 1e-14], vec![0.0, 1.0]], Dims::oper(&[2])).unwrap();
        assert_eq!(q.data().nnz(), 2);
    }

    #[test]
    fn arithmetic() {
        let sx = sigmax();
        assert_eq!(&sx + &sx, &sx * 2.0);
        // 0.5·ε·σz + 0.5·Δ·σx at ε=1, Δ=0
        let h = 0.5 * 1.0 * sigmaz() + 0.5 * 0.0 * sigmax();
        assert!(close(
            &h.full(),
            &DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.5), c(-0.5)])),
            0.0
        ));
        let k = basis(2, 0).unwrap();
        let p = &k * &k.dag();
        assert!(close(
            &p.full(),
            &DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(0.0)])),
            0.0
        ));
        assert!(p.isherm());
    }

    #[test]
    fn arithmetic_errors() {
        let a = qeye(2);
        let b = qeye(3);
        assert!(matches!(a.checked_add(&b), Err(QError::Dimension(_))));
        assert!(matches!(a.checked_mul(&b), Err(QError::Dimension(_))));
        assert!(matches!(a.checked_div(c(0.0)), Err(QError::Argument(_))));
        let k = basis(2, 0).unwrap();
        assert!(matches!(k.checked_mul(&k), Err(QError::Type(_))));
    }

    #[test]
    fn dag_examples() {
        let a = destroy(2).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(1.0), c(0.0)]);
        assert!(close(&a.dag().full(), &expected, 0.0));
        let k = basis(2, 0).unwrap();
        let b = k.dag();
        assert_eq!(b.qtype(), QType::Bra);
        assert_eq!(b.dims(), &Dims::bra(&[2]));
        assert_eq!(b.to_vec(), vec![c(1.0), c(0.0)]);
    }

    #[test]
    fn trace_examples() {
        assert_eq!(qeye(4).tr().unwrap(), c(4.0));
        assert_eq!(sigmax().tr().unwrap(), c(0.0));
        let rho = thermal_dm(10, 0.75).unwrap();
        assert!((rho.tr().unwrap() - c(1.0)).norm() < 1e-12);
        assert!(matches!(basis(3, 0).unwrap().tr(), Err(QError::Shape(_))));
    }

    #[test]
    fn norm_examples() {
        assert!((basis(2, 0).unwrap().norm().unwrap() - 1.0).abs() < 1e-15);
        let k = Qobj::ket(&[c(1.0), c(1.0)], &[2]).unwrap();
        assert!((k.norm().unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((sigmaz().norm().unwrap() - 2.0).abs() < 1e-12);
        let nh = destroy(3).unwrap();
        assert!((nh.norm().unwrap() - (1.0 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn unit_examples() {
        let s = (fock(2, 0).unwrap() + fock(2, 1).unwrap()).unit().unwrap();
        for a in s.to_vec() {
            assert!((a - c(FRAC_1_SQRT_2)).norm() < 1e-15);
        }
        assert!((s.unit().unwrap().to_dvector() - s.to_dvector()).norm() < 1e-15);
        let b = (basis(2, 1).unwrap() * 3.0).unit().unwrap();
        assert_eq!(b, basis(2, 1).unwrap());
        let zero = basis(2, 1).unwrap() * 0.0;
        assert!(matches!(zero.unit(), Err(QError::Normalization)));
    }

    #[test]
    fn diag_and_full() {
        assert_eq!(num(4).unwrap().diag(), vec![c(0.0), c(1.0), c(2.0), c(3.0)]);
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.0),
                c(1.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(2f64.sqrt()),
                c(0.0),
                c(0.0),
                c(0.0),
            ],
        );
        assert!(close(&destroy(3).unwrap().full(), &expected, 1e-15));
        let m = DMatrix::from_fn(3, 3, |i, j| C64::new(i as f64 + 0.5, j as f64 - 1.0));
        assert_eq!(Qobj::from_dense(&m, Dims::oper(&[3])).unwrap().full(), m);
    }

    #[test]
    fn expm_examples() {
        let z = Qobj::from_triplets(Vec::new(), Dims::oper(&[2])).unwrap();
        assert!(close(
            &z.expm().unwrap().full(),
            &DMatrix::identity(2, 2),
            1e-15
        ));
        let e = (sigmaz() * C64::new(0.0, PI)).expm().unwrap();
        assert!(close(
            &e.full(),
            &(DMatrix::identity(2, 2) * c(-1.0)),
            1e-13
        ));
        assert!(matches!(basis(2, 0).unwrap().expm(), Err(QError::Shape(_))));
    }

    #[test]
    fn sqrtm_examples() {
        assert!(close(
            &qeye(3).sqrtm().unwrap().full(),
            &DMatrix::identity(3, 3),
            1e-14
        ));
        let four = qeye(3) * 4.0;
        assert!(close(
            &four.sqrtm().unwrap().full(),
            &(DMatrix::identity(3, 3) * c(2.0)),
            1e-13
        ));
        let p = coherent(6, C64::new(0.3, -0.2)).unwrap().proj().unwrap();
        // square roots of round-off eigenvalues leave errors near sqrt(eps)
        assert!(close(&p.sqrtm().unwrap().full(), &p.full(), 1e-7));
        assert!(matches!(
            destroy(2).unwrap().sqrtm(),
            Err(QError::Domain(_))
        ));
        assert!(matches!((-qeye(2)).sqrtm(), Err(QError::Domain(_))));
    }

    #[test]
    fn eigenstates_examples() {
        let e = sigmaz().eigenstates().unwrap();
        assert_eq!(e.values, vec![c(-1.0), c(1.0)]);
        assert_eq!(e.kets[0], basis(2, 1).unwrap());
        let e = num(3).unwrap().eigenstates().unwrap();
        for (k, v) in e.values.iter().enumerate() {
            assert!((v - c(k as f64)).norm() < 1e-14);
        }
        // phase convention: first nonzero component real positive
        let e = (sigmax() * -1.0).eigenstates().unwrap();
        for k in &e.kets {
            let first = k.to_vec().into_iter().find(|a| a.norm() > 1e-12).unwrap();
            assert!(first.im.abs() < 1e-15 && first.re > 0.0);
        }
    }

    #[test]
    fn eigenstates_capacity() {
        assert!(matches!(
            qeye(5).eigenstates_with_cap(4),
            Err(QError::Capacity { .. })
        ));
    }

    #[test]
    fn tensor_examples() {
        let ii = tensor(&[&qeye(2), &qeye(2)]).unwrap();
        assert_eq!(ii.dims(), &Dims::oper(&[2, 2]));
        assert_eq!(ii.full(), DMatrix::identity(4, 4));
        let iz = tensor(&[&qeye(2), &sigmaz()]).unwrap();
        assert_eq!(iz.diag(), vec![c(1.0), c(-1.0), c(1.0), c(-1.0)]);
        assert!(matches!(
            tensor(&[&qeye(2), &basis(2, 0).unwrap()]),
            Err(QError::Type(_))
        ));
        let k = tensor(&[&basis(3, 1).unwrap(), &basis(2, 0).unwrap()]).unwrap();
        assert_eq!(k.dims(), &Dims::ket(&[3, 2]));
        assert_eq!(k.to_vec()[2], c(1.0));
    }

    #[test]
    fn ptrace_examples() {
        let psi0 = tensor(&[
            &fock(5, 0).unwrap(),
            &(fock(2, 0).unwrap() + fock(2, 1).unwrap()).unit().unwrap(),
        ])
        .unwrap();
        let q = psi0.ptrace(&[1]).unwrap();
        let half = DMatrix::from_element(2, 2, c(0.5));
        assert!(close(&q.full(), &half, 1e-15));
        assert!(q.isherm());
        assert_eq!(q.qtype(), QType::Oper);

        let bell = (tensor(&[&basis(2, 0).unwrap(), &basis(2, 0).unwrap()]).unwrap()
            + tensor(&[&basis(2, 1).unwrap(), &basis(2, 1).unwrap()]).unwrap())
        .unit()
        .unwrap();
        let r = bell.ptrace(&[0]).unwrap();
        assert!(close(&r.full(), &(DMatrix::identity(2, 2) * c(0.5)), 1e-15));

        assert!(matches!(bell.ptrace(&[2]), Err(QError::Argument(_))));
        assert!(matches!(bell.ptrace(&[0, 0]), Err(QError::Argument(_))));
    }

    #[test]
    fn ptrace_keeps_relative_order() {
        let a = thermal_dm(2, 0.3).unwrap();
        let b = fock_dm(3, 2).unwrap();
        let cdm = coherent_dm(2, c(0.4)).unwrap();
        let rho = tensor(&[&a, &b, &cdm]).unwrap();
        let red = rho.ptrace(&[2, 0]).unwrap();
        let expected = tensor(&[&a, &cdm]).unwrap();
        assert!(close(&red.full(), &expected.full(), 1e-12));
        assert_eq!(red.dims(), &Dims::oper(&[2, 2]));
    }

    #[test]
    fn tidyup_examples() {
        let q = qeye(3);
        assert_eq!(q.tidyup(0.0), q);
        let small =
            Qobj::from_triplets(vec![(0, 0, c(1.0)), (0, 1, c(1e-11))], Dims::oper(&[2])).unwrap();
        let t = small.tidyup(1e-10);
        assert_eq!(t.data().nnz(), 1);
        let tol = 1e-6;
        let noisy = Qobj::from_triplets(
            vec![
                (0, 0, c(0.5)),
                (1, 1, c(0.5)),
                (0, 0, c(5e-7)),
                (1, 1, c(-4e-7)),
            ],
            Dims::oper(&[2]),
        )
        .unwrap();
        let diff = (noisy.tidyup(tol).tr().unwrap() - noisy.tr().unwrap()).norm();
        assert!(diff <= tol * 2.0);
    }

    #[test]
    fn display_mirrors_printout() {
        let q = Qobj::from_real_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]], Dims::oper(&[2])).unwrap();
        let s = q.to_string();
        assert!(s.contains("dims = [[2], [2]], shape = [2, 2], type = oper, isHerm = True"));
    }

    #[test]
    fn dump_is_row_major_pairs() {
        let d = sigmay().dump();
        assert_eq!(d.data[0][1], [0.0, -1.0]);
        let json = serde_json::to_string(&d).unwrap();
        assert!(json.contains("[0.0,-1.0]"));
    }
}
