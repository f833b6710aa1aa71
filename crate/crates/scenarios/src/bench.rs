//! Wall-clock scaling sweeps.

use std::time::Instant;

use qdyn::ode::SolverOptions;
use qdyn::QError;
use serde::Serialize;

use crate::demos::{
    coupled_oscillators_problem, spin_chain_problem, trajectory_config, trilinear_problem,
    MeProblem,
};
use crate::error::{Result, ScenarioError};
use crate::scenario::SolverKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchModel {
    CoupledOscillators,
    Trilinear,
    SpinChain,
}

impl std::str::FromStr for BenchModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "coupled-oscillators" => Ok(BenchModel::CoupledOscillators),
            "trilinear" => Ok(BenchModel::Trilinear),
            "spin-chain" => Ok(BenchModel::SpinChain),
            _ => Err(format!(
                "unknown model `{s}` (expected coupled-oscillators, trilinear or spin-chain)"
            )),
        }
    }
}

impl BenchModel {
    /// Problem for one sweep value: states per mode, or spins for the chain.
    pub fn problem(self, size: usize) -> Result<MeProblem> {
        let (min, max) = match self {
            BenchModel::CoupledOscillators => (2, 64),
            BenchModel::Trilinear => (2, 24),
            BenchModel::SpinChain => (1, 14),
        };
        if !(min..=max).contains(&size) {
            return Err(ScenarioError::Usage(format!(
                "size {size} outside {min}..={max} for this model"
            )));
        }
        Ok(match self {
            BenchModel::CoupledOscillators => coupled_oscillators_problem(size),
            BenchModel::Trilinear => trilinear_problem(size),
            BenchModel::SpinChain => spin_chain_problem(size),
        })
    }
}

/// Largest Hilbert dimension the master-equation sweep will attempt; the
/// Liouvillian has `D²` rows.
pub const ME_DIM_CAP: usize = 1024;

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub model: BenchModel,
    pub sizes: Vec<usize>,
    pub solver: SolverKind,
    pub workers: Option<usize>,
    pub ntraj: usize,
    pub master_seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchPoint {
    pub size: usize,
    pub dim: usize,
    pub seconds: Option<f64>,
    /// Trajectory runs only: the same ensemble on one worker.
    pub seconds_one_worker: Option<f64>,
    pub speedup: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub model: BenchModel,
    pub solver: &'static str,
    pub workers: usize,
    pub ntraj: Option<usize>,
    pub points: Vec<BenchPoint>,
}

fn time<T>(f: impl FnOnce() -> Result<T>) -> Result<f64> {
    let start = Instant::now();
    f()?;
    Ok(start.elapsed().as_secs_f64())
}

fn run_point(cfg: &BenchConfig, size: usize, workers: usize) -> Result<BenchPoint> {
    let p = cfg.model.problem(size)?;
    let dim = p.state0.shape().0;
    let mut point = BenchPoint {
        size,
        dim,
        seconds: None,
        seconds_one_worker: None,
        speedup: None,
        error: None,
    };
    match cfg.solver {
        SolverKind::Me | SolverKind::Es => {
            if dim > ME_DIM_CAP {
                return Err(QError::Capacity {
                    what: "master-equation benchmark".into(),
                    dim,
                    cap: ME_DIM_CAP,
                }
                .into());
            }
            let opts = SolverOptions::default();
            point.seconds = Some(if cfg.solver == SolverKind::Me {
                time(|| p.solve(&opts))?
            } else {
                time(|| {
                    Ok(qdyn::mesolve::essolve(
                        &p.hamiltonian,
                        &p.state0,
                        &p.tlist,
                        &p.c_ops,
                        &p.e_ops,
                        &opts,
                    )?)
                })?
            });
        }
        SolverKind::Mc => {
            let many = time(|| {
                p.trajectories(&trajectory_config(
                    cfg.ntraj,
                    cfg.master_seed,
                    Some(workers),
                ))
            })?;
            let one =
                time(|| p.trajectories(&trajectory_config(cfg.ntraj, cfg.master_seed, Some(1))))?;
            point.seconds = Some(many);
            point.seconds_one_worker = Some(one);
            point.speedup = Some(one / many);
        }
    }
    Ok(point)
}

/// Runs the sweep point by point; a failing point records its error and the
/// sweep moves on.
pub fn bench(cfg: &BenchConfig) -> BenchReport {
    let workers = cfg.workers.unwrap_or_else(rayon::current_num_threads);
    let points = cfg
        .sizes
        .iter()
        .map(|&size| {
            run_point(cfg, size, workers).unwrap_or_else(|e| BenchPoint {
                size,
                dim: 0,
                seconds: None,
                seconds_one_worker: None,
                speedup: None,
                error: Some(e.to_string()),
            })
        })
        .collect();
    BenchReport {
        model: cfg.model,
        solver: cfg.solver.name(),
        workers,
        ntraj: (cfg.solver == SolverKind::Mc).then_some(cfg.ntraj),
        points,
    }
}
