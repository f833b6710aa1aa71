//! Lindblad master-equation evolution.
//!
//! Density matrices are vectorized by stacking columns, so `ρ[r, c]` lives at
//! index `c·N + r` and `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::analysis::realify;
use crate::dense;
use crate::error::{QError, Result};
use crate::ode::{integrate_with, validate_tlist, SolverOptions};
use crate::qobj::{Dims, QType, Qobj};
use crate::sparse::{CsrMatrix, PRUNE_TOL};
use crate::table::ExpectationTable;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Eigenvector matrices with a larger 2-norm condition number are rejected.
pub const ES_CONDITION_LIMIT: f64 = 1e12;

/// Scalar time dependence of one Hamiltonian term.
pub type Coefficient = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// Opaque `t ↦ H(t)`; every returned operator must keep the same dims.
pub type Evaluator = Arc<dyn Fn(f64) -> Result<Qobj> + Send + Sync>;

/// `H(t) = H₀ + Σ fₖ(t) Hₖ`. Parameters enter through the closures.
#[derive(Clone)]
pub struct TimeDependentOperator {
    constant: Qobj,
    terms: Vec<(Coefficient, Qobj)>,
}

impl TimeDependentOperator {
    pub fn new(constant: Qobj) -> Result<Self> {
        if !constant.is_oper() {
            return Err(QError::Type(format!(
                "Hamiltonian must be an operator, got {}",
                constant.qtype()
            )));
        }
        Ok(TimeDependentOperator {
            constant,
            terms: Vec::new(),
        })
    }

    pub fn with_term(
        mut self,
        coeff: impl Fn(f64) -> C64 + Send + Sync + 'static,
        op: Qobj,
    ) -> Result<Self> {
        if op.dims() != self.constant.dims() {
            return Err(QError::Dimension(format!(
                "time-dependent term has dims {} but the constant part has {}",
                op.dims(),
                self.constant.dims()
            )));
        }
        self.terms.push((Arc::new(coeff), op));
        Ok(self)
    }

    pub fn constant(&self) -> &Qobj {
        &self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Coefficient, &Qobj)> {
        self.terms.iter().map(|(c, o)| (c, o))
    }

    pub fn at(&self, t: f64) -> Result<Qobj> {
        let mut h = self.constant.clone();
        for (c, op) in &self.terms {
            h = h.combine(ONE, op, c(t))?;
        }
        Ok(h)
    }
}

/// The system Hamiltonian in one of its three accepted forms.
#[derive(Clone)]
pub enum Hamiltonian {
    Constant(Qobj),
    Terms(TimeDependentOperator),
    Callback { dims: Dims, f: Evaluator },
}

impl fmt::Debug for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hamiltonian::Constant(h) => write!(f, "Constant({})", h.dims()),
            Hamiltonian::Terms(td) => {
                write!(f, "Terms({}, {} terms)", td.constant.dims(), td.terms.len())
            }
            Hamiltonian::Callback { dims, .. } => write!(f, "Callback({dims})"),
        }
    }
}

impl From<Qobj> for Hamiltonian {
    fn from(h: Qobj) -> Self {
        Hamiltonian::Constant(h)
    }
}

impl From<&Qobj> for Hamiltonian {
    fn from(h: &Qobj) -> Self {
        Hamiltonian::Constant(h.clone())
    }
}

impl From<TimeDependentOperator> for Hamiltonian {
    fn from(h: TimeDependentOperator) -> Self {
        Hamiltonian::Terms(h)
    }
}

impl Hamiltonian {
    pub fn callback(dims: Dims, f: impl Fn(f64) -> Result<Qobj> + Send + Sync + 'static) -> Self {
        Hamiltonian::Callback {
            dims,
            f: Arc::new(f),
        }
    }

    pub fn dims(&self) -> &Dims {
        match self {
            Hamiltonian::Constant(h) => h.dims(),
            Hamiltonian::Terms(td) => td.constant.dims(),
            Hamiltonian::Callback { dims, .. } => dims,
        }
    }

    pub fn space_dims(&self) -> &[usize] {
        self.dims().rows()
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Hamiltonian::Constant(_))
    }

    pub fn at(&self, t: f64) -> Result<Qobj> {
        match self {
            Hamiltonian::Constant(h) => Ok(h.clone()),
            Hamiltonian::Terms(td) => td.at(t),
            Hamiltonian::Callback { dims, f } => {
                let h = f(t)?;
                if h.dims() != dims {
                    return Err(QError::Dimension(format!(
                        "Hamiltonian callback returned dims {} at t = {t}, expected {dims}",
                        h.dims()
                    )));
                }
                Ok(h)
            }
        }
    }

    /// Checks operator type and Hermiticity of the parts known up front; a
    /// callback is probed at `t0`.
    pub(crate) fn validate(&self, t0: f64) -> Result<()> {
        let check = |h: &Qobj, what: &str| -> Result<()> {
            if h.qtype() != QType::Oper {
                return Err(QError::Type(format!(
                    "{what} must be an operator, got {}",
                    h.qtype()
                )));
            }
            if !h.isherm() {
                return Err(QError::Domain(format!("{what} is not Hermitian")));
            }
            Ok(())
        };
        match self {
            Hamiltonian::Constant(h) => check(h, "Hamiltonian"),
            Hamiltonian::Terms(td) => {
                check(&td.constant, "Hamiltonian constant part")?;
                td.terms
                    .iter()
                    .try_for_each(|(_, op)| check(op, "Hamiltonian term"))
            }
            Hamiltonian::Callback { .. } => check(&self.at(t0)?, "Hamiltonian callback output"),
        }
    }
}

/// Applies `y += α·H(t)·x` for any Hamiltonian form, keeping the sparse data
/// of the fixed parts.
pub(crate) struct HamiltonianAction {
    constant: Option<CsrMatrix>,
    terms: Vec<(Coefficient, CsrMatrix)>,
    callback: Option<(Dims, Evaluator)>,
}

impl HamiltonianAction {
    pub(crate) fn new(h: &Hamiltonian) -> Self {
        match h {
            Hamiltonian::Constant(h) => HamiltonianAction {
                constant: Some(h.data().clone()),
                terms: Vec::new(),
                callback: None,
            },
            Hamiltonian::Terms(td) => HamiltonianAction {
                constant: Some(td.constant.data().clone()),
                terms: td
                    .terms
                    .iter()
                    .map(|(c, o)| (c.clone(), o.data().clone()))
                    .collect(),
                callback: None,
            },
            Hamiltonian::Callback { dims, f } => HamiltonianAction {
                constant: None,
                terms: Vec::new(),
                callback: Some((dims.clone(), f.clone())),
            },
        }
    }

    /// Visits `(coefficient, matrix)` pairs whose weighted sum is `H(t)`.
    pub(crate) fn for_each(&self, t: f64, mut visit: impl FnMut(C64, &CsrMatrix)) -> Result<()> {
        if let Some(h0) = &self.constant {
            visit(ONE, h0);
        }
        for (c, op) in &self.terms {
            visit(c(t), op);
        }
        if let Some((dims, f)) = &self.callback {
            let h = f(t)?;
            if h.dims() != dims {
                return Err(QError::Dimension(format!(
                    "Hamiltonian callback returned dims {} at t = {t}, expected {dims}",
                    h.dims()
                )));
            }
            visit(ONE, h.data());
        }
        Ok(())
    }
}

pub(crate) fn check_collapse(c_ops: &[Qobj], dims: &Dims) -> Result<()> {
    for (k, c) in c_ops.iter().enumerate() {
        if !c.is_oper() {
            return Err(QError::Type(format!(
                "collapse operator {k} is a {}",
                c.qtype()
            )));
        }
        if c.dims() != dims {
            return Err(QError::Dimension(format!(
                "collapse operator {k} has dims {}, system has {dims}",
                c.dims()
            )));
        }
    }
    Ok(())
}

pub(crate) fn check_observables(e_ops: &[Qobj], dims: &Dims) -> Result<()> {
    for (k, e) in e_ops.iter().enumerate() {
        if !e.is_oper() {
            return Err(QError::Type(format!("observable {k} is a {}", e.qtype())));
        }
        if e.dims() != dims {
            return Err(QError::Dimension(format!(
                "observable {k} has dims {}, system has {dims}",
                e.dims()
            )));
        }
    }
    Ok(())
}

/// `−i(I⊗H − Hᵀ⊗I)`.
fn hamiltonian_super(h: &CsrMatrix) -> Result<CsrMatrix> {
    let id = CsrMatrix::identity(h.nrows());
    id.kron(h)
        .add_scaled(-I, &h.transpose().kron(&id), I, PRUNE_TOL)
}

/// `Σₙ C̄ₙ⊗Cₙ − ½ I⊗Cₙ†Cₙ − ½ (Cₙ†Cₙ)ᵀ⊗I`.
fn dissipator_super(c_ops: &[Qobj], n: usize) -> Result<CsrMatrix> {
    let id = CsrMatrix::identity(n);
    let mut l = CsrMatrix::zeros(n * n, n * n);
    for c in c_ops {
        let c = c.data();
        let cdc = c.adjoint().matmul(c, 0.0)?;
        l = l.add_scaled(ONE, &c.conj().kron(c), ONE, 0.0)?;
        l = l.add_scaled(ONE, &id.kron(&cdc), C64::new(-0.5, 0.0), 0.0)?;
        l = l.add_scaled(ONE, &cdc.transpose().kron(&id), C64::new(-0.5, 0.0), 0.0)?;
    }
    Ok(l.prune(PRUNE_TOL))
}

/// Liouvillian superoperator for a Hermitian `h` and collapse operators
/// `Cₙ = √γₙ Aₙ`, acting on column-stacked density matrices.
pub fn liouvillian(h: &Qobj, c_ops: &[Qobj]) -> Result<Qobj> {
    if h.qtype() != QType::Oper {
        return Err(QError::Type(format!(
            "Hamiltonian must be an operator, got {}",
            h.qtype()
        )));
    }
    if !h.isherm() {
        return Err(QError::Domain("Hamiltonian is not Hermitian".into()));
    }
    check_collapse(c_ops, h.dims())?;
    let n = h.shape().0;
    let l = hamiltonian_super(h.data())?.add_scaled(
        ONE,
        &dissipator_super(c_ops, n)?,
        ONE,
        PRUNE_TOL,
    )?;
    Qobj::new(l, Dims::superop(h.space_dims()))
}

/// `y += coef · (−i)(Hρ − ρH)` on a column-stacked `ρ`.
fn commutator_acc(h: &CsrMatrix, n: usize, coef: C64, x: &[C64], y: &mut [C64]) {
    let a = -I * coef;
    for (r, c, v) in h.iter() {
        let av = a * v;
        for j in 0..n {
            y[j * n + r] += av * x[j * n + c];
            y[c * n + j] -= av * x[r * n + j];
        }
    }
}

/// Column-stacked vector of a density matrix.
pub fn vectorize(rho: &Qobj) -> Vec<C64> {
    let n = rho.shape().0;
    let mut v = vec![C64::new(0.0, 0.0); n * n];
    for (r, c, x) in rho.data().iter() {
        v[c * n + r] = x;
    }
    v
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &[C64], dims: &Dims) -> Result<Qobj> {
    let n = dims.shape().0;
    if v.len() != n * n {
        return Err(QError::Dimension(format!(
            "vector of length {} for a {n}x{n} operator",
            v.len()
        )));
    }
    let trip = (0..n)
        .flat_map(|c| (0..n).map(move |r| (r, c)))
        .map(|(r, c)| (r, c, v[c * n + r]));
    Qobj::new(
        CsrMatrix::from_triplets(n, n, trip, PRUNE_TOL)?,
        dims.clone(),
    )
}

/// `tr(Oρ)` from the column-stacked `ρ`.
pub(crate) fn expect_vec_dm(op: &Qobj, v: &[C64], n: usize) -> Result<C64> {
    let s: C64 = op.data().iter().map(|(i, j, o)| o * v[i * n + j]).sum();
    realify(op.isherm(), s)
}

/// `⟨ψ|O|ψ⟩` without normalization.
pub(crate) fn expect_vec_ket(op: &Qobj, psi: &[C64]) -> Result<C64> {
    let s: C64 = op
        .data()
        .iter()
        .map(|(r, c, o)| psi[r].conj() * o * psi[c])
        .sum();
    realify(op.isherm(), s)
}

fn prepare_state(state0: &Qobj, dims: &Dims) -> Result<()> {
    match state0.qtype() {
        QType::Ket | QType::Oper => {}
        other => {
            return Err(QError::Type(format!(
                "initial state must be a ket or density operator, got {other}"
            )))
        }
    }
    if state0.space_dims() != dims.rows() {
        return Err(QError::Dimension(format!(
            "initial state lives in {:?}, Hamiltonian in {:?}",
            state0.space_dims(),
            dims.rows()
        )));
    }
    Ok(())
}

struct Collector<'a> {
    e_ops: &'a [Qobj],
    columns: Vec<Vec<C64>>,
    states: Vec<Qobj>,
    final_state: Option<Qobj>,
    last: usize,
}

impl<'a> Collector<'a> {
    fn new(e_ops: &'a [Qobj], len: usize) -> Self {
        Collector {
            e_ops,
            columns: vec![Vec::with_capacity(len); e_ops.len()],
            states: Vec::new(),
            final_state: None,
            last: len - 1,
        }
    }

    fn push(
        &mut self,
        k: usize,
        values: impl Fn(&Qobj) -> Result<C64>,
        state: impl FnOnce() -> Result<Qobj>,
    ) -> Result<()> {
        for (col, op) in self.columns.iter_mut().zip(self.e_ops) {
            col.push(values(op)?);
        }
        if self.e_ops.is_empty() || k == self.last {
            let s = state()?;
            if k == self.last {
                self.final_state = Some(s.clone());
            }
            if self.e_ops.is_empty() {
                self.states.push(s);
            }
        }
        Ok(())
    }

    fn finish(self, tlist: &[f64]) -> Result<ExpectationTable> {
        let mut t = ExpectationTable::new(
            tlist.to_vec(),
            ExpectationTable::default_names(self.e_ops.len()),
            self.columns,
        )?;
        if self.e_ops.is_empty() {
            t.states = Some(self.states);
        }
        t.final_state = self.final_state;
        Ok(t)
    }
}

/// Adaptive ODE evolution. A ket with no collapse operators follows the
/// Schrödinger equation; anything else is promoted to a density operator and
/// follows the master equation. With no observables the table carries the
/// states at every output time.
pub fn odesolve(
    h: &Hamiltonian,
    state0: &Qobj,
    tlist: &[f64],
    c_ops: &[Qobj],
    e_ops: &[Qobj],
    opts: &SolverOptions,
) -> Result<ExpectationTable> {
    validate_tlist(tlist, 2)?;
    opts.validate()?;
    h.validate(tlist[0])?;
    let dims = h.dims().clone();
    check_collapse(c_ops, &dims)?;
    check_observables(e_ops, &dims)?;
    prepare_state(state0, &dims)?;
    let action = HamiltonianAction::new(h);
    let failure: RefCell<Option<QError>> = RefCell::new(None);
    let mut out = Collector::new(e_ops, tlist.len());

    let result = if c_ops.is_empty() && state0.is_ket() {
        let rhs = |t: f64, x: &[C64], dy: &mut [C64]| {
            dy.fill(C64::new(0.0, 0.0));
            if let Err(e) = action.for_each(t, |c, m| m.matvec_acc(-I * c, x, dy)) {
                failure.borrow_mut().get_or_insert(e);
                dy.fill(C64::new(f64::NAN, 0.0));
            }
        };
        let ket_dims = state0.dims().clone();
        integrate_with(rhs, state0.to_vec(), tlist, opts, |k, _, psi| {
            out.push(
                k,
                |op| expect_vec_ket(op, psi),
                || Qobj::new(CsrMatrix::from_column(psi, PRUNE_TOL), ket_dims.clone()),
            )
        })
    } else {
        let rho0 = if state0.is_ket() {
            state0.proj()?
        } else {
            state0.clone()
        };
        let n = rho0.shape().0;
        // the constant Hamiltonian part joins the dissipator in one sparse matrix
        let mut fixed = dissipator_super(c_ops, n)?;
        let mut moving: Vec<(Coefficient, CsrMatrix)> = Vec::new();
        let mut callback = None;
        match h {
            Hamiltonian::Constant(h0) => {
                fixed = fixed.add_scaled(ONE, &hamiltonian_super(h0.data())?, ONE, PRUNE_TOL)?
            }
            Hamiltonian::Terms(td) => {
                fixed = fixed.add_scaled(
                    ONE,
                    &hamiltonian_super(td.constant.data())?,
                    ONE,
                    PRUNE_TOL,
                )?;
                moving = td
                    .terms
                    .iter()
                    .map(|(c, o)| (c.clone(), o.data().clone()))
                    .collect();
            }
            Hamiltonian::Callback { .. } => callback = Some(&action),
        }
        let rhs = |t: f64, x: &[C64], dy: &mut [C64]| {
            fixed.matvec(x, dy);
            for (c, m) in &moving {
                commutator_acc(m, n, c(t), x, dy);
            }
            if let Some(act) = callback {
                if let Err(e) = act.for_each(t, |c, m| commutator_acc(m, n, c, x, dy)) {
                    failure.borrow_mut().get_or_insert(e);
                    dy.fill(C64::new(f64::NAN, 0.0));
                }
            }
        };
        let rho_dims = rho0.dims().clone();
        integrate_with(rhs, vectorize(&rho0), tlist, opts, |k, _, v| {
            out.push(
                k,
                |op| expect_vec_dm(op, v, n),
                || unvectorize(v, &rho_dims),
            )
        })
    };
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    result?;
    out.finish(tlist)
}

/// Evolution by full diagonalization of the Liouvillian. Time-independent
/// Hamiltonians only; the state is always treated as a density operator.
pub fn essolve(
    h: &Hamiltonian,
    state0: &Qobj,
    tlist: &[f64],
    c_ops: &[Qobj],
    e_ops: &[Qobj],
    opts: &SolverOptions,
) -> Result<ExpectationTable> {
    let Hamiltonian::Constant(h) = h else {
        return Err(QError::Unsupported(
            "essolve needs a time-independent Hamiltonian".into(),
        ));
    };
    validate_tlist(tlist, 2)?;
    opts.validate()?;
    let dims = h.dims().clone();
    prepare_state(state0, &dims)?;
    check_observables(e_ops, &dims)?;
    let n = h.shape().0;
    if n * n > opts.dense_cap {
        return Err(QError::Capacity {
            what: "Liouvillian".into(),
            dim: n * n,
            cap: opts.dense_cap,
        });
    }
    let l = liouvillian(h, c_ops)?.full();
    let (vals, vecs) = dense::eig(&l);
    let v = DMatrix::from_columns(&vecs);
    let cond = dense::condition_number(&v);
    if !(cond <= ES_CONDITION_LIMIT) {
        return Err(QError::Conditioning(cond));
    }
    let rho0 = if state0.is_ket() {
        state0.proj()?
    } else {
        state0.clone()
    };
    let x0 = DVector::from_vec(vectorize(&rho0));
    let coeffs = v
        .clone()
        .lu()
        .solve(&x0)
        .ok_or_else(|| QError::Conditioning(f64::INFINITY))?;
    let mut out = Collector::new(e_ops, tlist.len());
    for (k, &t) in tlist.iter().enumerate() {
        let dt = t - tlist[0];
        let weights = DVector::from_iterator(
            vals.len(),
            vals.iter()
                .zip(coeffs.iter())
                .map(|(l, c)| c * (l * dt).exp()),
        );
        let x = &v * weights;
        let x = x.as_slice();
        out.push(
            k,
            |op| expect_vec_dm(op, x, n),
            || unvectorize(x, rho0.dims()),
        )?;
    }
    out.finish(tlist)
}
