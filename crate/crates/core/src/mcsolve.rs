//! Monte-Carlo quantum-jump evolution.
//!
//! Each trajectory integrates `iψ' = H_eff ψ` with
//! `H_eff = H − (i/2) Σ Cₙ†Cₙ` on an unnormalized wave function. When the
//! squared norm decays to a uniform random `r`, a channel is chosen with
//! probability `⟨ψ|Cₙ†Cₙ|ψ⟩ / Σ`, the collapse is applied and a new `r` drawn.

use std::cell::RefCell;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{QError, Result};
use crate::mesolve::{
    check_collapse, check_observables, expect_vec_ket, Hamiltonian, HamiltonianAction,
};
use crate::ode::{validate_tlist, Dopri5, SolverOptions};
use crate::qobj::{QType, Qobj};
use crate::sparse::{CsrMatrix, PRUNE_TOL};
use crate::table::ExpectationTable;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Bisection iterations allowed when locating a jump time.
const MAX_BISECT: usize = 200;

/// `H_eff = H − (i/2)·Σ Cₙ†Cₙ`, with the sum precomputed.
#[derive(Clone, Debug)]
pub struct EffectiveHamiltonian {
    hermitian_part: Hamiltonian,
    anti_hermitian_sum: Qobj,
}

impl EffectiveHamiltonian {
    pub fn new(h: &Hamiltonian, c_ops: &[Qobj]) -> Result<Self> {
        let dims = h.dims().clone();
        check_collapse(c_ops, &dims)?;
        let mut sum = Qobj::new(CsrMatrix::zeros(dims.shape().0, dims.shape().1), dims)?;
        for c in c_ops {
            sum = sum.checked_add(&c.dag().checked_mul(c)?)?;
        }
        Ok(EffectiveHamiltonian {
            hermitian_part: h.clone(),
            anti_hermitian_sum: sum,
        })
    }

    pub fn hermitian_part(&self) -> &Hamiltonian {
        &self.hermitian_part
    }

    pub fn anti_hermitian_sum(&self) -> &Qobj {
        &self.anti_hermitian_sum
    }

    /// `H_eff(t)` as one operator.
    pub fn at(&self, t: f64) -> Result<Qobj> {
        self.hermitian_part.at(t)?.combine(
            C64::new(1.0, 0.0),
            &self.anti_hermitian_sum,
            C64::new(0.0, -0.5),
        )
    }
}

/// Total jump rate `Σ⟨ψ|Cₙ†Cₙ|ψ⟩` and the per-channel weights normalized to
/// one. A zero total rate gives all-zero weights.
pub fn jump_probabilities(psi: &Qobj, c_ops: &[Qobj]) -> Result<(f64, Vec<f64>)> {
    if psi.qtype() != QType::Ket {
        return Err(QError::Type(format!(
            "jump probabilities need a ket, got {}",
            psi.qtype()
        )));
    }
    for c in c_ops {
        if c.space_dims() != psi.space_dims() || !c.is_oper() {
            return Err(QError::Dimension(format!(
                "collapse operator on {:?} for a state in {:?}",
                c.space_dims(),
                psi.space_dims()
            )));
        }
    }
    let data: Vec<&CsrMatrix> = c_ops.iter().map(|c| c.data()).collect();
    Ok(rates(&data, &psi.to_vec()))
}

fn rates(c_ops: &[&CsrMatrix], psi: &[C64]) -> (f64, Vec<f64>) {
    let mut w: Vec<f64> = c_ops
        .iter()
        .map(|c| c.mul_vec(psi).iter().map(|v| v.norm_sqr()).sum())
        .collect();
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter_mut().for_each(|x| *x /= total);
    }
    (total, w)
}

/// Smallest index whose cumulative weight reaches `r`.
pub fn select_collapse(weights: &[f64], r: f64) -> usize {
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if acc >= r {
            return k;
        }
    }
    // rounding left the total a hair below r: take the last live channel
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// `Cψ / ‖Cψ‖`.
pub fn apply_collapse(psi: &Qobj, c: &Qobj) -> Result<Qobj> {
    let out = c.checked_mul(psi)?;
    if out.qtype() != QType::Ket {
        return Err(QError::Type(format!("collapse produced a {}", out.qtype())));
    }
    let v = collapse_vec(c.data(), &psi.to_vec())?;
    Qobj::new(CsrMatrix::from_column(&v, PRUNE_TOL), out.dims().clone())
}

fn collapse_vec(c: &CsrMatrix, psi: &[C64]) -> Result<Vec<C64>> {
    let mut v = c.mul_vec(psi);
    let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if !(n > 0.0) {
        return Err(QError::Internal("collapse annihilated the state".into()));
    }
    v.iter_mut().for_each(|x| *x /= n);
    Ok(v)
}

/// Seed of trajectory `index`: a SplitMix64 output stream keyed by the
/// master seed, so any single trajectory can be rerun in isolation.
pub fn trajectory_seed(master_seed: u64, index: u64) -> u64 {
    const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut z = master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct TrajectoryConfig {
    pub ntraj: usize,
    pub master_seed: u64,
    /// Tolerance on `|⟨ψ|ψ⟩ − r|` when locating a jump.
    pub norm_root_tol: f64,
    pub opts: SolverOptions,
    /// Worker threads; `None` uses every core.
    pub workers: Option<usize>,
    /// Keep each trajectory's expectation series in the result.
    pub keep_records: bool,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            ntraj: 500,
            master_seed: 0,
            norm_root_tol: 1e-6,
            opts: SolverOptions::default(),
            workers: None,
            keep_records: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpEvent {
    pub t: f64,
    pub channel: usize,
}

/// Output of one trajectory.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub jumps: Vec<JumpEvent>,
    /// `expect[k][i]`: observable `k` at output time `i`, normalized state.
    pub expect: Vec<Vec<C64>>,
    /// Normalized states at every output time, when requested.
    pub states: Option<Vec<Qobj>>,
}

/// Inputs shared by every trajectory of an ensemble.
pub struct TrajectoryProblem<'a> {
    pub heff: &'a EffectiveHamiltonian,
    pub c_ops: &'a [Qobj],
    pub psi0: &'a Qobj,
    pub tlist: &'a [f64],
    pub e_ops: &'a [Qobj],
    pub norm_root_tol: f64,
    pub opts: &'a SolverOptions,
    pub keep_states: bool,
}

impl TrajectoryProblem<'_> {
    fn validate(&self) -> Result<()> {
        validate_tlist(self.tlist, 2)?;
        self.opts.validate()?;
        if !(self.norm_root_tol > 0.0) {
            return Err(QError::Argument(format!(
                "norm_root_tol must be positive, got {}",
                self.norm_root_tol
            )));
        }
        let dims = self.heff.hermitian_part.dims();
        self.heff.hermitian_part.validate(self.tlist[0])?;
        check_collapse(self.c_ops, dims)?;
        check_observables(self.e_ops, dims)?;
        if self.psi0.qtype() != QType::Ket {
            return Err(QError::Type(format!(
                "trajectories start from a ket, got {}",
                self.psi0.qtype()
            )));
        }
        if self.psi0.space_dims() != dims.rows() {
            return Err(QError::Dimension(format!(
                "initial state lives in {:?}, Hamiltonian in {:?}",
                self.psi0.space_dims(),
                dims.rows()
            )));
        }
        let norm = self.psi0.norm()?;
        if (norm - 1.0).abs() > 1e-8 {
            return Err(QError::Argument(format!(
                "initial state must have unit norm, has {norm}"
            )));
        }
        Ok(())
    }
}

fn draw_threshold(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let r: f64 = rng.random();
        if r > 0.0 {
            return r;
        }
    }
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

/// Runs one quantum-jump trajectory.
pub fn run_trajectory(p: &TrajectoryProblem<'_>, seed: u64) -> Result<TrajectoryRecord> {
    p.validate()?;
    trajectory(p, seed)
}

fn trajectory(p: &TrajectoryProblem<'_>, seed: u64) -> Result<TrajectoryRecord> {
    let tlist = p.tlist;
    let t_end = *tlist.last().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let action = HamiltonianAction::new(&p.heff.hermitian_part);
    let damping = p.heff.anti_hermitian_sum.data();
    let c_data: Vec<&CsrMatrix> = p.c_ops.iter().map(|c| c.data()).collect();
    let failure: RefCell<Option<QError>> = RefCell::new(None);
    let rhs = |t: f64, x: &[C64], dy: &mut [C64]| {
        dy.fill(ZERO);
        if let Err(e) = action.for_each(t, |c, m| m.matvec_acc(-I * c, x, dy)) {
            failure.borrow_mut().get_or_insert(e);
            dy.fill(C64::new(f64::NAN, 0.0));
            return;
        }
        damping.matvec_acc(C64::new(-0.5, 0.0), x, dy);
    };

    let ket_dims = p.psi0.dims().clone();
    let mut expect: Vec<Vec<C64>> = vec![Vec::with_capacity(tlist.len()); p.e_ops.len()];
    let mut states = p.keep_states.then(|| Vec::with_capacity(tlist.len()));
    let mut record = |psi: &[C64]| -> Result<()> {
        let n2 = norm_sqr(psi);
        let scale = 1.0 / n2.sqrt();
        let unit: Vec<C64> = psi.iter().map(|x| x * scale).collect();
        for (col, op) in expect.iter_mut().zip(p.e_ops) {
            col.push(expect_vec_ket(op, &unit)?);
        }
        if let Some(s) = states.as_mut() {
            s.push(Qobj::new(
                CsrMatrix::from_column(&unit, PRUNE_TOL),
                ket_dims.clone(),
            )?);
        }
        Ok(())
    };

    let psi0 = p.psi0.to_vec();
    record(&psi0)?;
    let mut jumps = Vec::new();
    let mut r = draw_threshold(&mut rng);
    let mut buf = psi0.clone();
    let mut stepper = Dopri5::new(rhs, tlist[0], psi0, t_end, p.opts.clone())?;
    let mut next = 1;
    let run = (|| -> Result<()> {
        while next < tlist.len() {
            stepper.step(t_end)?;
            if norm_sqr(stepper.y()) > r {
                while next < tlist.len() && tlist[next] <= stepper.t() {
                    stepper.dense(tlist[next], &mut buf);
                    record(&buf)?;
                    next += 1;
                }
                continue;
            }
            // the squared norm crossed r inside [t_prev, t]
            let (mut lo, mut hi) = (stepper.t_prev(), stepper.t());
            let mut tau = hi;
            stepper.dense(hi, &mut buf);
            if (norm_sqr(&buf) - r).abs() > p.norm_root_tol {
                for _ in 0..MAX_BISECT {
                    tau = 0.5 * (lo + hi);
                    stepper.dense(tau, &mut buf);
                    let f = norm_sqr(&buf) - r;
                    if f.abs() <= p.norm_root_tol
                        || hi - lo <= 4.0 * f64::EPSILON * tau.abs().max(1.0)
                    {
                        break;
                    }
                    if f > 0.0 {
                        lo = tau;
                    } else {
                        hi = tau;
                    }
                }
            }
            let mut out = vec![ZERO; buf.len()];
            while next < tlist.len() && tlist[next] <= tau {
                stepper.dense(tlist[next], &mut out);
                record(&out)?;
                next += 1;
            }
            stepper.dense(tau, &mut buf);
            let (total, weights) = rates(&c_data, &buf);
            if !(total > 0.0) {
                return Err(QError::Internal(format!(
                    "jump requested at t = {tau} but every collapse rate is zero"
                )));
            }
            let channel = select_collapse(&weights, rng.random());
            let jumped = collapse_vec(c_data[channel], &buf)?;
            jumps.push(JumpEvent { t: tau, channel });
            r = draw_threshold(&mut rng);
            stepper.reset(tau, &jumped, t_end);
        }
        Ok(())
    })();
    drop(stepper);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    run?;
    drop(record);
    Ok(TrajectoryRecord {
        seed,
        jumps,
        expect,
        states,
    })
}

/// Ensemble output; `table` holds the trajectory-averaged expectations.
#[derive(Clone, Debug)]
pub struct EnsembleResult {
    pub table: ExpectationTable,
    pub ntraj: usize,
    pub master_seed: u64,
    /// Jump events of every trajectory, in trajectory order.
    pub jumps: Vec<Vec<JumpEvent>>,
    /// Per-trajectory series and states; always present when no observables
    /// were requested.
    pub records: Option<Vec<TrajectoryRecord>>,
}

#[derive(Serialize)]
struct JumpSidecar<'a> {
    ntraj: usize,
    master_seed: u64,
    trajectories: Vec<SidecarEntry<'a>>,
}

#[derive(Serialize)]
struct SidecarEntry<'a> {
    index: usize,
    seed: u64,
    jumps: &'a [JumpEvent],
}

impl EnsembleResult {
    /// JSON listing the jump events of every trajectory.
    pub fn jumps_json(&self) -> String {
        let sidecar = JumpSidecar {
            ntraj: self.ntraj,
            master_seed: self.master_seed,
            trajectories: self
                .jumps
                .iter()
                .enumerate()
                .map(|(index, jumps)| SidecarEntry {
                    index,
                    seed: trajectory_seed(self.master_seed, index as u64),
                    jumps,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&sidecar).expect("jump events serialize")
    }
}

/// Runs `cfg.ntraj` trajectories on a worker pool and averages their
/// expectation values in trajectory order, so the result does not depend on
/// the number of workers.
pub fn mcsolve(
    h: &Hamiltonian,
    psi0: &Qobj,
    tlist: &[f64],
    c_ops: &[Qobj],
    e_ops: &[Qobj],
    cfg: &TrajectoryConfig,
) -> Result<EnsembleResult> {
    if cfg.ntraj == 0 {
        return Err(QError::Argument("ntraj must be at least 1".into()));
    }
    if cfg.workers == Some(0) {
        return Err(QError::Argument("workers must be at least 1".into()));
    }
    let heff = EffectiveHamiltonian::new(h, c_ops)?;
    let problem = TrajectoryProblem {
        heff: &heff,
        c_ops,
        psi0,
        tlist,
        e_ops,
        norm_root_tol: cfg.norm_root_tol,
        opts: &cfg.opts,
        keep_states: e_ops.is_empty(),
    };
    problem.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| QError::Internal(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<TrajectoryRecord>> = pool.install(|| {
        (0..cfg.ntraj)
            .into_par_iter()
            .map(|i| {
                let seed = trajectory_seed(cfg.master_seed, i as u64);
                trajectory(&problem, seed).map_err(|e| QError::Trajectory {
                    seed,
                    source: Box::new(e),
                })
            })
            .collect()
    });
    let records: Vec<TrajectoryRecord> = results.into_iter().collect::<Result<_>>()?;

    let mut sums = vec![vec![ZERO; tlist.len()]; e_ops.len()];
    for rec in &records {
        for (acc, col) in sums.iter_mut().zip(&rec.expect) {
            for (a, v) in acc.iter_mut().zip(col) {
                *a += v;
            }
        }
    }
    let inv = 1.0 / cfg.ntraj as f64;
    sums.iter_mut().flatten().for_each(|v| *v *= inv);
    let table = ExpectationTable::new(
        tlist.to_vec(),
        ExpectationTable::default_names(e_ops.len()),
        sums,
    )?;
    let jumps = records.iter().map(|r| r.jumps.clone()).collect();
    let keep = cfg.keep_records || e_ops.is_empty();
    Ok(EnsembleResult {
        table,
        ntraj: cfg.ntraj,
        master_seed: cfg.master_seed,
        jumps,
        records: keep.then_some(records),
    })
}
