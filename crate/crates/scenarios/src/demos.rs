//! Built-in calculations: each demo reproduces one of the reference
//! figure calculations with its published parameters.

use std::f64::consts::PI;
use std::time::Instant;

use qdyn::analysis::{expect, fidelity, linspace, wigner, PhaseSpaceGrid, WignerMap};
use qdyn::factory::{basis, coherent, destroy, qeye, sigmam, sigmax, sigmay, sigmaz};
use qdyn::mcsolve::{mcsolve, EnsembleResult, TrajectoryConfig};
use qdyn::mesolve::{odesolve, Hamiltonian};
use qdyn::ode::SolverOptions;
use qdyn::table::ExpectationTable;
use qdyn::{tensor, Dims, Qobj, C64};
use serde_json::{json, Value};

use crate::error::{Result, ScenarioError};

pub const DEMOS: [&str; 9] = [
    "nonrwa-sweep",
    "photon-decay",
    "mc-convergence",
    "iswap",
    "jaynes-cummings",
    "trilinear",
    "landau-zener",
    "spin-chain",
    "coupled-oscillators",
];

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn op_on(factors: &[Qobj]) -> Qobj {
    let refs: Vec<&Qobj> = factors.iter().collect();
    tensor(&refs).expect("factors are operators")
}

/// Operator `op` acting on site `k` of `sizes`, identity elsewhere.
pub fn embed(op: &Qobj, k: usize, sizes: &[usize]) -> Qobj {
    let factors: Vec<Qobj> = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| if i == k { op.clone() } else { qeye(n) })
        .collect();
    op_on(&factors)
}

/// A master-equation calculation: everything `odesolve` needs.
#[derive(Clone, Debug)]
pub struct MeProblem {
    pub name: &'static str,
    pub hamiltonian: Hamiltonian,
    pub state0: Qobj,
    pub tlist: Vec<f64>,
    pub c_ops: Vec<Qobj>,
    pub e_ops: Vec<Qobj>,
    pub names: Vec<String>,
}

impl MeProblem {
    pub fn solve(&self, opts: &SolverOptions) -> Result<ExpectationTable> {
        let mut t = odesolve(
            &self.hamiltonian,
            &self.state0,
            &self.tlist,
            &self.c_ops,
            &self.e_ops,
            opts,
        )?;
        t.names = self.names.clone();
        Ok(t)
    }

    /// Density operators at every output time.
    pub fn states(&self, opts: &SolverOptions) -> Result<Vec<Qobj>> {
        let t = odesolve(
            &self.hamiltonian,
            &self.state0,
            &self.tlist,
            &self.c_ops,
            &[],
            opts,
        )?;
        Ok(t.states.expect("states are returned without observables"))
    }

    pub fn trajectories(&self, cfg: &TrajectoryConfig) -> Result<EnsembleResult> {
        let mut r = mcsolve(
            &self.hamiltonian,
            &self.state0,
            &self.tlist,
            &self.c_ops,
            &self.e_ops,
            cfg,
        )?;
        r.table.names = self.names.clone();
        Ok(r)
    }
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

// ---- non-RWA ground state ----

pub const NONRWA_CAVITY: usize = 20;

/// `H = wc a†a + wa σ†σ + g (a† + a)(σ + σ†)` with `wc = wa = 2π`.
pub fn nonrwa_hamiltonian(n: usize, g: f64) -> (Qobj, Qobj, Qobj) {
    let w = 2.0 * PI;
    let a = op_on(&[destroy(n).unwrap(), qeye(2)]);
    let sm = op_on(&[qeye(n), destroy(2).unwrap()]);
    let nc = &a.dag() * &a;
    let na = &sm.dag() * &sm;
    let h = &nc * w + &na * w + (&a.dag() + &a) * (&sm + &sm.dag()) * g;
    (h, nc, na)
}

pub struct NonRwaSweep {
    pub g: Vec<f64>,
    pub na: Vec<f64>,
    pub nc: Vec<f64>,
    /// Ground state at the last coupling.
    pub ground: Qobj,
}

impl NonRwaSweep {
    pub fn table(&self) -> ExpectationTable {
        let col = |v: &[f64]| v.iter().map(|&x| c(x)).collect();
        ExpectationTable::new(
            self.g.clone(),
            names(&["na", "nc"]),
            vec![col(&self.na), col(&self.nc)],
        )
        .unwrap()
    }

    pub fn csv(&self) -> String {
        self.table().to_csv_string().replacen('t', "g", 1)
    }
}

/// Ground-state occupations for `g = linspace(0, 2.5, points)·2π`.
pub fn nonrwa_sweep(n: usize, points: usize) -> Result<NonRwaSweep> {
    let g: Vec<f64> = linspace(0.0, 2.5, points)
        .into_iter()
        .map(|x| x * 2.0 * PI)
        .collect();
    let mut out = NonRwaSweep {
        g: g.clone(),
        na: Vec::new(),
        nc: Vec::new(),
        ground: basis(1, 0)?,
    };
    for gk in g {
        let (h, nc, na) = nonrwa_hamiltonian(n, gk);
        let es = h.eigenstates()?;
        let ground = es.kets.into_iter().next().expect("nonempty spectrum");
        out.na.push(expect(&na, &ground)?.re);
        out.nc.push(expect(&nc, &ground)?.re);
        out.ground = ground;
    }
    Ok(out)
}

pub fn nonrwa_wigner(ground: &Qobj, points: usize) -> Result<WignerMap> {
    let rho = ground.ptrace(&[0])?;
    let x = linspace(-7.5, 7.5, points);
    Ok(wigner(&rho, &PhaseSpaceGrid::new(x.clone(), x)?)?)
}

// ---- thermal photon decay ----

pub const DECAY_KAPPA: f64 = 1.0 / 0.129;
pub const DECAY_NTH: f64 = 0.063;

/// One photon in a cavity of `N = 5` levels relaxing into a thermal bath.
pub fn photon_decay_problem() -> MeProblem {
    let n = 5;
    let a = destroy(n).unwrap();
    MeProblem {
        name: "photon-decay",
        hamiltonian: (&a.dag() * &a).into(),
        state0: basis(n, 1).unwrap(),
        tlist: linspace(0.0, 0.6, 100),
        c_ops: vec![
            &a * (DECAY_KAPPA * (1.0 + DECAY_NTH)).sqrt(),
            a.dag() * (DECAY_KAPPA * DECAY_NTH).sqrt(),
        ],
        e_ops: vec![&a.dag() * &a],
        names: names(&["n"]),
    }
}

/// `⟨n(t)⟩ = n̄ + (1 − n̄) e^{−κt}` for the single-photon start.
pub fn photon_decay_analytic(t: f64) -> f64 {
    DECAY_NTH + (1.0 - DECAY_NTH) * (-DECAY_KAPPA * t).exp()
}

pub fn trajectory_config(
    ntraj: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> TrajectoryConfig {
    TrajectoryConfig {
        ntraj,
        master_seed,
        workers,
        keep_records: true,
        ..TrajectoryConfig::default()
    }
}

/// Average of the first `m` per-trajectory series of observable `k`.
pub fn partial_average(res: &EnsembleResult, k: usize, m: usize) -> Vec<f64> {
    let records = res.records.as_ref().expect("records kept");
    let m = m.min(records.len());
    let len = res.table.tlist.len();
    let mut acc = vec![0.0; len];
    for r in &records[..m] {
        for (a, v) in acc.iter_mut().zip(&r.expect[k]) {
            *a += v.re;
        }
    }
    acc.iter().map(|v| v / m as f64).collect()
}

/// Mean absolute deviation per output time.
pub fn deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

// ---- trajectory convergence ----

pub const CONVERGENCE_M: [usize; 4] = [10, 50, 250, 1250];
pub const CONVERGENCE_REPEATS: usize = 10;

/// Deviation of `m`-trajectory averages of the photon-decay problem from the
/// master equation, each averaged over `repeats` independent ensembles.
pub fn mc_convergence(
    ms: &[usize],
    repeats: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<Vec<(usize, f64)>> {
    let p = photon_decay_problem();
    let me = p.solve(&SolverOptions::default())?.real(0);
    let mut out = Vec::new();
    for (i, &m) in ms.iter().enumerate() {
        let mut total = 0.0;
        for rep in 0..repeats {
            let seed = master_seed
                .wrapping_add(1_000_003 * i as u64)
                .wrapping_add(7919 * rep as u64);
            let mc = p.trajectories(&trajectory_config(m, seed, workers))?;
            total += deviation(&mc.table.real(0), &me);
        }
        out.push((m, total / repeats as f64));
    }
    Ok(out)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(usize, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

// ---- i-SWAP ----

#[derive(Clone, Copy, Debug)]
pub struct IswapParams {
    pub g: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub nth: f64,
}

impl Default for IswapParams {
    fn default() -> Self {
        IswapParams {
            g: 2.0 * PI,
            gamma1: 0.75,
            gamma2: 0.5,
            nth: 0.75,
        }
    }
}

pub fn iswap_problem(p: &IswapParams) -> MeProblem {
    let sx = op_on(&[sigmax(), sigmax()]);
    let sy = op_on(&[sigmay(), sigmay()]);
    let h = (sx + sy) * p.g;
    let t_gate = PI / (4.0 * p.g);
    let mut c_ops = Vec::new();
    for k in 0..2 {
        let sm = embed(&sigmam(), k, &[2, 2]);
        let sz = embed(&sigmaz(), k, &[2, 2]);
        c_ops.push(&sm * (p.gamma1 * (1.0 + p.nth)).sqrt());
        c_ops.push(sm.dag() * (p.gamma1 * p.nth).sqrt());
        c_ops.push(sz * p.gamma2.sqrt());
    }
    let sm1 = embed(&sigmam(), 0, &[2, 2]);
    let sm2 = embed(&sigmam(), 1, &[2, 2]);
    MeProblem {
        name: "iswap",
        hamiltonian: h.into(),
        state0: op_on(&[basis(2, 1).unwrap(), basis(2, 0).unwrap()]),
        tlist: linspace(0.0, t_gate, 100),
        c_ops,
        e_ops: vec![&sm1.dag() * &sm1, &sm2.dag() * &sm2],
        names: names(&["n1", "n2"]),
    }
}

pub struct IswapResult {
    pub dissipative: ExpectationTable,
    pub ideal: ExpectationTable,
    pub fidelity: f64,
}

pub fn iswap(p: &IswapParams) -> Result<IswapResult> {
    let problem = iswap_problem(p);
    let opts = SolverOptions::default();
    let dissipative = problem.solve(&opts)?;
    let rho_final = dissipative
        .final_state
        .clone()
        .expect("final state is always kept");
    let Hamiltonian::Constant(h) = &problem.hamiltonian else {
        unreachable!("the gate Hamiltonian is constant")
    };
    let t_gate = *problem.tlist.last().unwrap();
    let u = h.scale(C64::new(0.0, -t_gate)).expm()?;
    let psi_ideal = u.checked_mul(&problem.state0)?;
    let f = fidelity(&psi_ideal.proj()?, &rho_final)?;
    let ideal = MeProblem {
        c_ops: Vec::new(),
        ..problem
    }
    .solve(&opts)?;
    Ok(IswapResult {
        dissipative,
        ideal,
        fidelity: f,
    })
}

// ---- Jaynes-Cummings ----

pub fn jaynes_cummings_problem() -> MeProblem {
    let n = 5;
    let w0 = 2.0 * PI;
    let eps = 2.0 * PI;
    let g = 0.05 * 2.0 * PI;
    let (kappa, gamma, nth): (f64, f64, f64) = (0.005, 0.05, 0.75);
    let a = op_on(&[destroy(n).unwrap(), qeye(2)]);
    let sm = op_on(&[qeye(n), destroy(2).unwrap()]);
    // atom energy measured from its ground state, so |1⟩ is the excited level
    let h = &a.dag() * &a * w0 + &sm.dag() * &sm * eps + (&a.dag() * &sm + &a * &sm.dag()) * g;
    MeProblem {
        name: "jaynes-cummings",
        hamiltonian: h.into(),
        state0: op_on(&[basis(n, 0).unwrap(), basis(2, 1).unwrap()]),
        tlist: linspace(0.0, 10.0, 100),
        c_ops: vec![
            &a * (kappa * (1.0 + nth)).sqrt(),
            a.dag() * (kappa * nth).sqrt(),
            &sm * gamma.sqrt(),
        ],
        e_ops: vec![&a.dag() * &a, &sm.dag() * &sm],
        names: names(&["nc", "na"]),
    }
}

// ---- trilinear ----

pub const TRILINEAR_N_CI: usize = 10;
pub const TRILINEAR_N_FULL: usize = 17;

/// Pump, signal and idler modes with `H = i(a b† c† − a† b c)`, the pump in
/// a coherent state with `|α|² = 10`.
pub fn trilinear_problem(n: usize) -> MeProblem {
    let sizes = [n, n, n];
    let a: Vec<Qobj> = (0..3)
        .map(|k| embed(&destroy(n).unwrap(), k, &sizes))
        .collect();
    let (g0, g1, g2): (f64, f64, f64) = (0.1, 0.4, 0.1);
    let h = (&a[0] * &a[1].dag() * a[2].dag() - a[0].dag() * &a[1] * &a[2]) * C64::new(0.0, 1.0);
    MeProblem {
        name: "trilinear",
        hamiltonian: h.into(),
        state0: op_on(&[
            coherent(n, c(10f64.sqrt())).unwrap(),
            basis(n, 0).unwrap(),
            basis(n, 0).unwrap(),
        ]),
        tlist: linspace(0.0, 4.0, 201),
        c_ops: vec![
            &a[0] * (2.0 * g0).sqrt(),
            &a[1] * (2.0 * g1).sqrt(),
            &a[2] * (2.0 * g2).sqrt(),
        ],
        e_ops: a.iter().map(|x| x.dag() * x).collect(),
        names: names(&["n0", "n1", "n2"]),
    }
}

pub struct TrilinearResult {
    pub open: EnsembleResult,
    pub closed: ExpectationTable,
}

pub fn trilinear(
    n: usize,
    ntraj: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<TrilinearResult> {
    let p = trilinear_problem(n);
    let cfg = TrajectoryConfig {
        ntraj,
        master_seed,
        workers,
        ..TrajectoryConfig::default()
    };
    let open = p.trajectories(&cfg)?;
    let closed = MeProblem {
        c_ops: Vec::new(),
        ..p
    }
    .trajectories(&TrajectoryConfig { ntraj: 1, ..cfg })?
    .table;
    Ok(TrilinearResult { open, closed })
}

// ---- Landau-Zener ----

pub const LZ_DELTA: f64 = 0.5 * 2.0 * PI;
pub const LZ_V: f64 = 2.0 * 2.0 * PI;

pub fn landau_zener_formula(delta: f64, v: f64) -> f64 {
    1.0 - (-PI * delta * delta / (2.0 * v)).exp()
}

/// Time dependence supplied as a callback `H(t) = H0 + t·H1`.
pub fn landau_zener_problem() -> MeProblem {
    let h0 = sigmax() * (LZ_DELTA / 2.0);
    let h1 = sigmaz() * (LZ_V / 2.0);
    let hamiltonian =
        Hamiltonian::callback(Dims::oper(&[2]), move |t| h0.checked_add(&h1.scale(c(t))));
    let sm = destroy(2).unwrap();
    MeProblem {
        name: "landau-zener",
        hamiltonian,
        state0: basis(2, 0).unwrap(),
        tlist: linspace(-10.0, 10.0, 1500),
        c_ops: Vec::new(),
        e_ops: vec![&sm.dag() * &sm, sigmax(), sigmay(), sigmaz()],
        names: names(&["p1", "sx", "sy", "sz"]),
    }
}

/// Final occupation from a tight-tolerance Schrödinger solve.
pub fn landau_zener() -> Result<ExpectationTable> {
    let opts = SolverOptions {
        rtol: 1e-8,
        atol: 1e-10,
        ..SolverOptions::default()
    };
    landau_zener_problem().solve(&opts)
}

fn bloch_csv(t: &ExpectationTable) -> String {
    let mut s = String::from("t,x,y,z\n");
    for (i, ti) in t.tlist.iter().enumerate() {
        s.push_str(&format!(
            "{ti:.16e},{:.16e},{:.16e},{:.16e}\n",
            t.columns[1][i].re, t.columns[2][i].re, t.columns[3][i].re
        ));
    }
    s
}

// ---- Heisenberg spin chain ----

pub const SPIN_CHAIN_M_CI: usize = 4;
pub const SPIN_CHAIN_M_FULL: usize = 8;

/// `H = −½ Σ h σz − ½ Σ (Jx σxσx + Jy σyσy + Jz σzσz)` on `m` spins with
/// `h = 2π`, `J = 0.1·2π` and dephasing `γ = 0.01` on every spin, from
/// `|1⟩|0⟩…|0⟩`.
pub fn spin_chain_problem(m: usize) -> MeProblem {
    let h = 2.0 * PI;
    let j = 0.1 * 2.0 * PI;
    let gamma: f64 = 0.01;
    let sizes = vec![2; m];
    let sx: Vec<Qobj> = (0..m).map(|k| embed(&sigmax(), k, &sizes)).collect();
    let sy: Vec<Qobj> = (0..m).map(|k| embed(&sigmay(), k, &sizes)).collect();
    let sz: Vec<Qobj> = (0..m).map(|k| embed(&sigmaz(), k, &sizes)).collect();
    let mut ham = Qobj::new(
        qdyn::sparse::CsrMatrix::zeros(1 << m, 1 << m),
        Dims::oper(&sizes),
    )
    .unwrap();
    for k in 0..m {
        ham = ham - &sz[k] * (0.5 * h);
    }
    for k in 0..m.saturating_sub(1) {
        ham = ham - (&sx[k] * &sx[k + 1] + &sy[k] * &sy[k + 1] + &sz[k] * &sz[k + 1]) * (0.5 * j);
    }
    let mut first = vec![basis(2, 1).unwrap()];
    first.extend((1..m).map(|_| basis(2, 0).unwrap()));
    MeProblem {
        name: "spin-chain",
        hamiltonian: ham.into(),
        state0: op_on(&first),
        tlist: linspace(0.0, 10.0, 100),
        c_ops: sz.iter().map(|s| s * gamma.sqrt()).collect(),
        names: (0..m).map(|k| format!("sz{k}")).collect(),
        e_ops: sz,
    }
}

// ---- coupled oscillators ----

pub const OSCILLATOR_N_CI: usize = 5;
pub const OSCILLATOR_N_FULL: usize = 14;

/// `H = ωa a†a + ωb b†b + ωab (a†b + a b†)`, resonator `a` damped at 0.05.
/// Starts from the two highest Fock states the truncation holds.
pub fn coupled_oscillators_problem(n: usize) -> MeProblem {
    let w = 2.0 * PI;
    let wab = 0.1 * 2.0 * PI;
    let a = op_on(&[destroy(n).unwrap(), qeye(n)]);
    let b = op_on(&[qeye(n), destroy(n).unwrap()]);
    let h = &a.dag() * &a * w + &b.dag() * &b * w + (&a.dag() * &b + &a * &b.dag()) * wab;
    MeProblem {
        name: "coupled-oscillators",
        hamiltonian: h.into(),
        state0: op_on(&[
            basis(n, n - 1).unwrap(),
            basis(n, n.saturating_sub(2)).unwrap(),
        ]),
        tlist: linspace(0.0, 10.0, 100),
        c_ops: vec![&a * 0.05f64.sqrt()],
        e_ops: vec![&a.dag() * &a, &b.dag() * &b],
        names: names(&["na", "nb"]),
    }
}

/// Every demo calculation that runs through the master-equation path.
pub fn me_demo_problems(full_scale: bool) -> Vec<MeProblem> {
    vec![
        photon_decay_problem(),
        iswap_problem(&IswapParams::default()),
        jaynes_cummings_problem(),
        spin_chain_problem(if full_scale {
            SPIN_CHAIN_M_FULL
        } else {
            SPIN_CHAIN_M_CI
        }),
        coupled_oscillators_problem(if full_scale {
            OSCILLATOR_N_FULL
        } else {
            OSCILLATOR_N_CI
        }),
    ]
}

// ---- driver ----

pub struct Artifact {
    pub file: String,
    pub contents: String,
}

pub struct DemoReport {
    pub name: String,
    pub artifacts: Vec<Artifact>,
    pub meta: Value,
}

fn artifact(file: &str, contents: String) -> Artifact {
    Artifact {
        file: file.to_string(),
        contents,
    }
}

fn join_tables(tlist: &[f64], parts: &[(&str, &[f64])]) -> String {
    let cols = parts
        .iter()
        .map(|(_, v)| v.iter().map(|&x| c(x)).collect())
        .collect();
    ExpectationTable::new(
        tlist.to_vec(),
        parts.iter().map(|(n, _)| n.to_string()).collect(),
        cols,
    )
    .expect("columns share the grid")
    .to_csv_string()
}

pub fn run_demo(name: &str, full_scale: bool) -> Result<DemoReport> {
    let started = Instant::now();
    let opts = SolverOptions::default();
    let (artifacts, mut meta) = match name {
        "nonrwa-sweep" => {
            let sweep = nonrwa_sweep(NONRWA_CAVITY, 50)?;
            let w = nonrwa_wigner(&sweep.ground, 200)?;
            let mut buf = Vec::new();
            w.write_csv(&mut buf).expect("writing to a Vec cannot fail");
            let meta = json!({ "cavity_states": NONRWA_CAVITY, "wigner_min": w.min(), "wigner_integral": w.integral() });
            (
                vec![
                    artifact("nonrwa_sweep.csv", sweep.csv()),
                    artifact("nonrwa_wigner.csv", String::from_utf8(buf).expect("ASCII")),
                ],
                meta,
            )
        }
        "photon-decay" => {
            let p = photon_decay_problem();
            let me = p.solve(&opts)?.real(0);
            let mc = p.trajectories(&trajectory_config(904, 0, None))?;
            let avg = |m| partial_average(&mc, 0, m);
            let (a1, a5, a15, a904) = (avg(1), avg(5), avg(15), avg(904));
            let exact: Vec<f64> = p.tlist.iter().map(|&t| photon_decay_analytic(t)).collect();
            let csv = join_tables(
                &p.tlist,
                &[
                    ("n_me", &me),
                    ("n_exact", &exact),
                    ("n_mc1", &a1),
                    ("n_mc5", &a5),
                    ("n_mc15", &a15),
                    ("n_mc904", &a904),
                ],
            );
            let peak = me.iter().cloned().fold(0.0, f64::max);
            let meta = json!({
                "ntraj": 904,
                "seed": 0,
                "mc904_mean_deviation_over_peak": deviation(&a904, &me) / peak,
            });
            (
                vec![
                    artifact("photon_decay.csv", csv),
                    artifact("photon_decay.jumps.json", mc.jumps_json()),
                ],
                meta,
            )
        }
        "mc-convergence" => {
            let points = mc_convergence(&CONVERGENCE_M, CONVERGENCE_REPEATS, 0, None)?;
            let mut csv = String::from("m,deviation\n");
            for (m, d) in &points {
                csv.push_str(&format!("{m},{d:.16e}\n"));
            }
            let meta =
                json!({ "repeats": CONVERGENCE_REPEATS, "loglog_slope": loglog_slope(&points) });
            (vec![artifact("mc_convergence.csv", csv)], meta)
        }
        "iswap" => {
            let p = IswapParams::default();
            let r = iswap(&p)?;
            let csv = join_tables(
                &r.dissipative.tlist,
                &[
                    ("n1", &r.dissipative.real(0)),
                    ("n2", &r.dissipative.real(1)),
                    ("n1_ideal", &r.ideal.real(0)),
                    ("n2_ideal", &r.ideal.real(1)),
                ],
            );
            let meta = json!({
                "g": p.g, "gamma1": p.gamma1, "gamma2": p.gamma2, "nth": p.nth,
                "fidelity": r.fidelity,
            });
            (vec![artifact("iswap.csv", csv)], meta)
        }
        "jaynes-cummings" => {
            let t = jaynes_cummings_problem().solve(&opts)?;
            (
                vec![artifact("jaynes_cummings.csv", t.to_csv_string())],
                json!({}),
            )
        }
        "trilinear" => {
            let n = if full_scale {
                TRILINEAR_N_FULL
            } else {
                TRILINEAR_N_CI
            };
            let r = trilinear(n, 1000, 0, None)?;
            let cols: Vec<Vec<f64>> = (0..3).map(|k| r.open.table.real(k)).collect();
            let closed: Vec<Vec<f64>> = (0..3).map(|k| r.closed.real(k)).collect();
            let csv = join_tables(
                &r.open.table.tlist,
                &[
                    ("n0", &cols[0]),
                    ("n1", &cols[1]),
                    ("n2", &cols[2]),
                    ("n0_closed", &closed[0]),
                    ("n1_closed", &closed[1]),
                    ("n2_closed", &closed[2]),
                ],
            );
            (
                vec![
                    artifact("trilinear.csv", csv),
                    artifact("trilinear.jumps.json", r.open.jumps_json()),
                ],
                json!({ "states_per_mode": n, "ntraj": 1000, "seed": 0 }),
            )
        }
        "landau-zener" => {
            let t = landau_zener()?;
            let p_final = t.columns[0].last().unwrap().re;
            let meta = json!({
                "delta": LZ_DELTA,
                "v": LZ_V,
                "final_p1": p_final,
                "formula": landau_zener_formula(LZ_DELTA, LZ_V),
            });
            (
                vec![
                    artifact("landau_zener.csv", t.to_csv_string()),
                    artifact("landau_zener_bloch.csv", bloch_csv(&t)),
                ],
                meta,
            )
        }
        "spin-chain" => {
            let m = if full_scale {
                SPIN_CHAIN_M_FULL
            } else {
                SPIN_CHAIN_M_CI
            };
            let p = spin_chain_problem(m);
            let me = p.solve(&opts)?;
            let mc = p.trajectories(&trajectory_config(500, 0, None))?;
            let me_cols: Vec<Vec<f64>> = (0..m).map(|k| me.real(k)).collect();
            let mc_cols: Vec<Vec<f64>> = (0..m).map(|k| mc.table.real(k)).collect();
            let labels: Vec<(String, String)> = (0..m)
                .map(|k| (format!("sz{k}_me"), format!("sz{k}_mc")))
                .collect();
            let mut parts: Vec<(&str, &[f64])> = Vec::new();
            for k in 0..m {
                parts.push((&labels[k].0, &me_cols[k]));
            }
            for k in 0..m {
                parts.push((&labels[k].1, &mc_cols[k]));
            }
            (
                vec![artifact("spin_chain.csv", join_tables(&p.tlist, &parts))],
                json!({ "spins": m, "ntraj": 500, "seed": 0 }),
            )
        }
        "coupled-oscillators" => {
            let n = if full_scale {
                OSCILLATOR_N_FULL
            } else {
                OSCILLATOR_N_CI
            };
            let t = coupled_oscillators_problem(n).solve(&opts)?;
            (
                vec![artifact("coupled_oscillators.csv", t.to_csv_string())],
                json!({ "states_per_mode": n }),
            )
        }
        other => {
            return Err(ScenarioError::Usage(format!(
                "unknown demo `{other}`; available: {}",
                DEMOS.join(", ")
            )));
        }
    };
    meta["demo"] = json!(name);
    meta["full_scale"] = json!(full_scale);
    meta["wall_clock_s"] = json!(started.elapsed().as_secs_f64());
    Ok(DemoReport {
        name: name.to_string(),
        artifacts,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_demo_lists_the_choices() {
        let err = run_demo("nope", false).err().unwrap();
        assert!(matches!(err, ScenarioError::Usage(_)));
        assert!(err.to_string().contains("landau-zener"));
    }

    #[test]
    fn embed_places_the_factor() {
        let z1 = embed(&sigmaz(), 1, &[2, 2, 3]);
        assert_eq!(z1.dims(), &Dims::oper(&[2, 2, 3]));
        assert_eq!(z1.full()[(0, 0)], c(1.0));
        assert_eq!(z1.full()[(3, 3)], c(-1.0));
    }

    #[test]
    fn slope_of_a_power_law() {
        let pts: Vec<(usize, f64)> = [10, 100, 1000]
            .iter()
            .map(|&m| (m, 3.0 / m as f64))
            .collect();
        assert!((loglog_slope(&pts) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn spin_chain_ground_energy_ordering() {
        let p = spin_chain_problem(2);
        assert_eq!(p.state0.dims(), &Dims::ket(&[2, 2]));
        assert!(p.hamiltonian.at(0.0).unwrap().isherm());
        assert_eq!(p.c_ops.len(), 2);
    }

    #[test]
    fn small_me_demos_run() {
        for name in ["jaynes-cummings", "coupled-oscillators", "iswap"] {
            let r = run_demo(name, false).unwrap();
            assert!(!r.artifacts.is_empty());
            let lines = r.artifacts[0].contents.lines().count();
            assert_eq!(lines, 101, "{name}");
        }
    }
}
