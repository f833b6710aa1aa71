//! Declarative scenario files: parsing, validation, construction of the
//! solver inputs, and output files.
//!
//! ```json
//! {
//!   "name": "landau-zener",
//!   "dims": [2],
//!   "params": { "delta": 3.141592653589793, "v": 12.566370614359172 },
//!   "hamiltonian": [
//!     { "coeff": "1", "op": "delta / 2 * sigmax()" },
//!     { "coeff": "t", "op": "v / 2 * sigmaz()" }
//!   ],
//!   "collapse": [],
//!   "initial": "basis(2, 0)",
//!   "observables": [{ "name": "p1", "op": "dag(destroy(2)) * destroy(2)" }],
//!   "tlist": { "start": -10, "stop": 10, "count": 1500 },
//!   "solver": "me"
//! }
//! ```
//!
//! A collapse entry `{ "rate": "kappa", "op": "a" }` contributes the collapse
//! operator `sqrt(kappa) * a`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qdyn::mcsolve::{mcsolve, TrajectoryConfig};
use qdyn::mesolve::{essolve, odesolve, Hamiltonian, TimeDependentOperator};
use qdyn::ode::SolverOptions;
use qdyn::sparse::CsrMatrix;
use qdyn::table::ExpectationTable;
use qdyn::{Dims, QType, Qobj, C64};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Result, ScenarioError};
use crate::expr::{self, Expr, Scope, RESERVED, SCALAR_FUNCTIONS};
use crate::opexpr::{eval_obj, OPERATOR_FUNCTIONS};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Me,
    Mc,
    Es,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Me => "me",
            SolverKind::Mc => "mc",
            SolverKind::Es => "es",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "me" => Ok(SolverKind::Me),
            "mc" => Ok(SolverKind::Mc),
            "es" => Ok(SolverKind::Es),
            _ => Err(format!("unknown solver `{s}` (expected me, mc or es)")),
        }
    }
}

/// Inclusive `(start, stop, count)` grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        qdyn::analysis::linspace(self.start, self.stop, self.count)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    #[serde(default = "default_ntraj")]
    pub ntraj: usize,
    #[serde(default)]
    pub master_seed: u64,
}

fn default_ntraj() -> usize {
    500
}

impl Default for McBlock {
    fn default() -> Self {
        McBlock {
            ntraj: default_ntraj(),
            master_seed: 0,
        }
    }
}

fn one() -> String {
    "1".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermFile {
    #[serde(default = "one")]
    pub coeff: String,
    pub op: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollapseFile {
    #[serde(default = "one")]
    pub rate: String,
    pub op: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableFile {
    pub name: String,
    pub op: String,
}

/// Scenario as written on disk, expressions still as text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub dims: Vec<usize>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub hamiltonian: Vec<TermFile>,
    #[serde(default)]
    pub collapse: Vec<CollapseFile>,
    pub initial: String,
    #[serde(default)]
    pub observables: Vec<ObservableFile>,
    pub tlist: TimeGrid,
    #[serde(default)]
    pub solver: SolverKind,
    #[serde(default)]
    pub mc: McBlock,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: Expr,
    pub op: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Collapse {
    pub rate: Expr,
    pub op: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    pub name: String,
    pub op: Expr,
}

/// A parsed and validated scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub dims: Vec<usize>,
    pub params: BTreeMap<String, f64>,
    pub hamiltonian: Vec<Term>,
    pub collapse: Vec<Collapse>,
    pub initial: Expr,
    pub observables: Vec<Observable>,
    pub tlist: TimeGrid,
    pub solver: SolverKind,
    pub mc: McBlock,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FieldKind {
    Coefficient,
    Rate,
    Operator,
}

fn parse_field(field: String, src: &str) -> Result<Expr> {
    expr::parse(src).map_err(|source| ScenarioError::Parse { field, source })
}

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_file(f: ScenarioFile) -> Result<Self> {
        let hamiltonian = f
            .hamiltonian
            .iter()
            .enumerate()
            .map(|(k, t)| {
                Ok(Term {
                    coeff: parse_field(format!("hamiltonian[{k}].coeff"), &t.coeff)?,
                    op: parse_field(format!("hamiltonian[{k}].op"), &t.op)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let collapse = f
            .collapse
            .iter()
            .enumerate()
            .map(|(k, c)| {
                Ok(Collapse {
                    rate: parse_field(format!("collapse[{k}].rate"), &c.rate)?,
                    op: parse_field(format!("collapse[{k}].op"), &c.op)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let observables = f
            .observables
            .iter()
            .enumerate()
            .map(|(k, o)| {
                Ok(Observable {
                    name: o.name.clone(),
                    op: parse_field(format!("observables[{k}].op"), &o.op)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = ScenarioSpec {
            name: f.name,
            dims: f.dims,
            params: f.params,
            hamiltonian,
            collapse,
            initial: parse_field("initial".into(), &f.initial)?,
            observables,
            tlist: f.tlist,
            solver: f.solver,
            mc: f.mc,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            name: self.name.clone(),
            dims: self.dims.clone(),
            params: self.params.clone(),
            hamiltonian: self
                .hamiltonian
                .iter()
                .map(|t| TermFile {
                    coeff: t.coeff.to_string(),
                    op: t.op.to_string(),
                })
                .collect(),
            collapse: self
                .collapse
                .iter()
                .map(|c| CollapseFile {
                    rate: c.rate.to_string(),
                    op: c.op.to_string(),
                })
                .collect(),
            initial: self.initial.to_string(),
            observables: self
                .observables
                .iter()
                .map(|o| ObservableFile {
                    name: o.name.clone(),
                    op: o.op.to_string(),
                })
                .collect(),
            tlist: self.tlist,
            solver: self.solver,
            mc: self.mc,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scenario files always serialize")
    }

    /// Every expression with its field label and kind.
    fn fields(&self) -> Vec<(String, &Expr, FieldKind)> {
        let mut out = Vec::new();
        for (k, t) in self.hamiltonian.iter().enumerate() {
            out.push((
                format!("hamiltonian[{k}].coeff"),
                &t.coeff,
                FieldKind::Coefficient,
            ));
            out.push((format!("hamiltonian[{k}].op"), &t.op, FieldKind::Operator));
        }
        for (k, c) in self.collapse.iter().enumerate() {
            out.push((format!("collapse[{k}].rate"), &c.rate, FieldKind::Rate));
            out.push((format!("collapse[{k}].op"), &c.op, FieldKind::Operator));
        }
        out.push(("initial".into(), &self.initial, FieldKind::Operator));
        for (k, o) in self.observables.iter().enumerate() {
            out.push((format!("observables[{k}].op"), &o.op, FieldKind::Operator));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(ScenarioError::invalid("name", "must not be empty"));
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(ScenarioError::invalid(
                "dims",
                format!("need positive subsystem sizes, got {:?}", self.dims),
            ));
        }
        if self.tlist.count < 2 {
            return Err(ScenarioError::invalid("tlist", "count must be at least 2"));
        }
        if !(self.tlist.start.is_finite()
            && self.tlist.stop.is_finite()
            && self.tlist.stop > self.tlist.start)
        {
            return Err(ScenarioError::invalid("tlist", "need finite start < stop"));
        }
        if self.mc.ntraj == 0 {
            return Err(ScenarioError::invalid("mc.ntraj", "must be at least 1"));
        }
        for (name, v) in &self.params {
            if RESERVED.contains(&name.as_str()) {
                return Err(ScenarioError::invalid(
                    format!("params.{name}"),
                    "reserved name",
                ));
            }
            if !v.is_finite() {
                return Err(ScenarioError::invalid(
                    format!("params.{name}"),
                    "must be finite",
                ));
            }
        }
        let mut seen = Vec::new();
        for o in &self.observables {
            if o.name.is_empty()
                || o.name == "t"
                || o.name.contains(',')
                || seen.contains(&o.name.as_str())
            {
                return Err(ScenarioError::invalid(
                    "observables",
                    format!(
                        "observable name `{}` is empty, reserved, contains a comma or is repeated",
                        o.name
                    ),
                ));
            }
            seen.push(o.name.as_str());
        }
        for (field, e, kind) in self.fields() {
            for f in e.functions() {
                let known = SCALAR_FUNCTIONS.contains(&f)
                    || (kind == FieldKind::Operator && OPERATOR_FUNCTIONS.contains(&f));
                if !known {
                    return Err(ScenarioError::invalid(
                        field,
                        format!("unknown function `{f}`"),
                    ));
                }
            }
            for v in e.variables() {
                let known = self.params.contains_key(v)
                    || v == "pi"
                    || (kind == FieldKind::Coefficient && v == "t");
                if !known {
                    let message = if v == "t" {
                        "`t` is only allowed in Hamiltonian coefficients".to_string()
                    } else {
                        format!("undefined parameter `{v}`")
                    };
                    return Err(ScenarioError::invalid(field, message));
                }
            }
        }
        Ok(())
    }

    fn scope(&self) -> Scope<'_> {
        Scope::new(&self.params)
    }

    fn operator(&self, field: &str, e: &Expr) -> Result<Qobj> {
        let q = eval_obj(e, &self.scope()).map_err(|source| ScenarioError::Operator {
            field: field.to_string(),
            source,
        })?;
        if q.qtype() != QType::Oper || q.dims() != &Dims::oper(&self.dims) {
            return Err(ScenarioError::invalid(
                field,
                format!(
                    "expected an operator on {:?}, got a {} with dims {:?}",
                    self.dims,
                    q.qtype(),
                    q.dims()
                ),
            ));
        }
        Ok(q)
    }

    /// Builds solver inputs from the expressions.
    pub fn build(&self) -> Result<Problem> {
        let scope = self.scope();
        let space = Dims::oper(&self.dims);
        let (n, _) = space.shape();
        let mut constant = Qobj::new(CsrMatrix::zeros(n, n), space)?;
        let mut moving = Vec::new();
        for (k, term) in self.hamiltonian.iter().enumerate() {
            let op = self.operator(&format!("hamiltonian[{k}].op"), &term.op)?;
            if term.coeff.mentions("t") {
                let probe = scope.at(self.tlist.start);
                term.coeff
                    .eval(&probe)
                    .map_err(|source| ScenarioError::Eval {
                        field: format!("hamiltonian[{k}].coeff"),
                        source,
                    })?;
                moving.push((term.coeff.clone(), op));
            } else {
                let c = term
                    .coeff
                    .eval(&scope)
                    .map_err(|source| ScenarioError::Eval {
                        field: format!("hamiltonian[{k}].coeff"),
                        source,
                    })?;
                constant = constant.checked_add(&op.scale(c))?;
            }
        }
        let hamiltonian = if moving.is_empty() {
            Hamiltonian::Constant(constant)
        } else {
            let mut td = TimeDependentOperator::new(constant)?;
            for (coeff, op) in moving {
                let params = self.params.clone();
                td = td.with_term(
                    move |t| {
                        coeff
                            .eval(&Scope::new(&params).at(t))
                            .unwrap_or(C64::new(f64::NAN, f64::NAN))
                    },
                    op,
                )?;
            }
            Hamiltonian::Terms(td)
        };
        let mut c_ops = Vec::new();
        for (k, c) in self.collapse.iter().enumerate() {
            let field = format!("collapse[{k}].rate");
            let rate = c
                .rate
                .eval_real(&scope)
                .map_err(|source| ScenarioError::Eval {
                    field: field.clone(),
                    source,
                })?;
            if !(rate >= 0.0) {
                return Err(ScenarioError::invalid(
                    field,
                    format!("rate must be non-negative, got {rate}"),
                ));
            }
            c_ops.push(
                self.operator(&format!("collapse[{k}].op"), &c.op)?
                    .scale(C64::new(rate.sqrt(), 0.0)),
            );
        }
        let initial =
            eval_obj(&self.initial, &scope).map_err(|source| ScenarioError::Operator {
                field: "initial".into(),
                source,
            })?;
        if initial.space_dims() != self.dims.as_slice() || !(initial.is_ket() || initial.is_oper())
        {
            return Err(ScenarioError::invalid(
                "initial",
                format!(
                    "expected a ket or density operator on {:?}, got a {} with dims {:?}",
                    self.dims,
                    initial.qtype(),
                    initial.dims()
                ),
            ));
        }
        let e_ops = self
            .observables
            .iter()
            .enumerate()
            .map(|(k, o)| self.operator(&format!("observables[{k}].op"), &o.op))
            .collect::<Result<Vec<_>>>()?;
        Ok(Problem {
            hamiltonian,
            initial,
            c_ops,
            e_ops,
            names: self.observables.iter().map(|o| o.name.clone()).collect(),
            tlist: self.tlist.points(),
        })
    }
}

/// Solver inputs built from a scenario.
#[derive(Clone, Debug)]
pub struct Problem {
    pub hamiltonian: Hamiltonian,
    pub initial: Qobj,
    pub c_ops: Vec<Qobj>,
    pub e_ops: Vec<Qobj>,
    pub names: Vec<String>,
    pub tlist: Vec<f64>,
}

/// Command-line overrides of the scenario's own settings.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub solver: Option<SolverKind>,
    pub ntraj: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub ode: SolverOptions,
}

pub struct RunOutput {
    pub table: ExpectationTable,
    pub solver: SolverKind,
    /// `(ntraj, master_seed)` for trajectory runs.
    pub ensemble: Option<(usize, u64)>,
    pub elapsed: f64,
    /// Per-trajectory jump lists, trajectory runs only.
    pub jumps_json: Option<String>,
    /// Full states when no observables were requested.
    pub states_json: Option<serde_json::Value>,
}

fn dump_states(tlist: &[f64], dims: &Dims, states: &[Qobj]) -> serde_json::Value {
    json!({
        "tlist": tlist,
        "dims": dims,
        "states": states.iter().map(|s| s.dump()).collect::<Vec<_>>(),
    })
}

pub fn run_scenario(spec: &ScenarioSpec, opts: &RunOptions) -> Result<RunOutput> {
    let problem = spec.build()?;
    let solver = opts.solver.unwrap_or(spec.solver);
    let started = Instant::now();
    let mut ensemble = None;
    let mut jumps_json = None;
    let mut states_json = None;
    let mut table = match solver {
        SolverKind::Me | SolverKind::Es => {
            let run = if solver == SolverKind::Me {
                odesolve
            } else {
                essolve
            };
            let table = run(
                &problem.hamiltonian,
                &problem.initial,
                &problem.tlist,
                &problem.c_ops,
                &problem.e_ops,
                &opts.ode,
            )?;
            if let Some(states) = &table.states {
                states_json = Some(dump_states(&problem.tlist, states[0].dims(), states));
            }
            table
        }
        SolverKind::Mc => {
            let cfg = TrajectoryConfig {
                ntraj: opts.ntraj.unwrap_or(spec.mc.ntraj),
                master_seed: opts.seed.unwrap_or(spec.mc.master_seed),
                opts: opts.ode.clone(),
                workers: opts.workers,
                ..TrajectoryConfig::default()
            };
            let res = mcsolve(
                &problem.hamiltonian,
                &problem.initial,
                &problem.tlist,
                &problem.c_ops,
                &problem.e_ops,
                &cfg,
            )?;
            ensemble = Some((res.ntraj, res.master_seed));
            jumps_json = Some(res.jumps_json());
            if problem.e_ops.is_empty() {
                let records = res.records.as_deref().unwrap_or_default();
                states_json = Some(json!({
                    "tlist": problem.tlist,
                    "dims": problem.initial.dims(),
                    "trajectories": records
                        .iter()
                        .map(|r| json!({
                            "seed": r.seed,
                            "states": r.states.iter().flatten().map(|s| s.dump()).collect::<Vec<_>>(),
                        }))
                        .collect::<Vec<_>>(),
                }));
            }
            res.table
        }
    };
    table.names = problem.names;
    Ok(RunOutput {
        table,
        solver,
        ensemble,
        elapsed: started.elapsed().as_secs_f64(),
        jumps_json,
        states_json,
    })
}

/// Sidecar path next to an output file: `run.csv` becomes `run.<suffix>`.
pub fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    out.with_extension(suffix)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| ScenarioError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| ScenarioError::io(path, e))
}

/// Writes the CSV (or the state dump when there are no observables), the
/// metadata sidecar and, for trajectory runs, the jump list. Returns the
/// paths written.
pub fn write_outputs(out: &Path, spec: &ScenarioSpec, run: &RunOutput) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if let Some(states) = &run.states_json {
        let p = sidecar(out, "states.json");
        write_file(&p, &serde_json::to_string(states)?)?;
        written.push(p);
    } else {
        write_file(out, &run.table.to_csv_string())?;
        written.push(out.to_path_buf());
    }
    if let Some(jumps) = &run.jumps_json {
        let p = sidecar(out, "jumps.json");
        write_file(&p, jumps)?;
        written.push(p);
    }
    let meta = json!({
        "scenario": spec.name,
        "solver": run.solver.name(),
        "parameters": spec.params,
        "dims": spec.dims,
        "columns": run.table.csv_header(),
        "ntraj": run.ensemble.map(|e| e.0),
        "seed": run.ensemble.map(|e| e.1),
        "wall_clock_s": run.elapsed,
    });
    let p = sidecar(out, "meta.json");
    write_file(&p, &serde_json::to_string_pretty(&meta)?)?;
    written.push(p);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LZ: &str = r#"{
        "name": "lz",
        "dims": [2],
        "params": { "delta": 3.141592653589793, "v": 12.566370614359172 },
        "hamiltonian": [
            { "coeff": "1", "op": "delta/2 * sigmax()" },
            { "coeff": "t", "op": "v/2 * sigmaz()" }
        ],
        "initial": "basis(2,0)",
        "observables": [{ "name": "p1", "op": "dag(destroy(2)) * destroy(2)" }],
        "tlist": { "start": -10, "stop": 10, "count": 200 }
    }"#;

    #[test]
    fn json_round_trip_preserves_the_tree() {
        let spec = ScenarioSpec::from_json(LZ).unwrap();
        let again = ScenarioSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(spec, again);
        assert_eq!(spec.solver, SolverKind::Me);
        assert_eq!(spec.mc, McBlock::default());
    }

    #[test]
    fn validation_errors_name_the_field() {
        let bad = LZ.replace("\"t\", \"op\"", "\"w * t\", \"op\"");
        let err = ScenarioSpec::from_json(&bad).unwrap_err().to_string();
        assert!(
            err.contains("hamiltonian[1].coeff") && err.contains("`w`"),
            "{err}"
        );

        let bad = LZ.replace("\"count\": 200", "\"count\": 1");
        assert!(ScenarioSpec::from_json(&bad)
            .unwrap_err()
            .to_string()
            .starts_with("tlist"));

        let bad = LZ.replace("basis(2,0)", "basis(2,0");
        match ScenarioSpec::from_json(&bad).unwrap_err() {
            ScenarioError::Parse { field, source } => {
                assert_eq!(field, "initial");
                assert_eq!(source.offset, 9);
            }
            other => panic!("unexpected {other}"),
        }

        let bad = LZ.replace(
            "\"initial\": \"basis(2,0)\"",
            "\"initial\": \"basis(2,0) * t\"",
        );
        assert!(ScenarioSpec::from_json(&bad)
            .unwrap_err()
            .to_string()
            .contains("only allowed"));

        let bad = LZ.replace("sigmax()", "sigmaq()");
        assert!(ScenarioSpec::from_json(&bad)
            .unwrap_err()
            .to_string()
            .contains("unknown function `sigmaq`"));

        let bad = LZ.replace("\"dims\": [2]", "\"dims\": [3]");
        let spec = ScenarioSpec::from_json(&bad).unwrap();
        assert!(spec
            .build()
            .unwrap_err()
            .to_string()
            .starts_with("hamiltonian[0].op"));
    }

    #[test]
    fn builds_time_dependent_hamiltonian() {
        let spec = ScenarioSpec::from_json(LZ).unwrap();
        let p = spec.build().unwrap();
        assert!(!p.hamiltonian.is_constant());
        let h = p.hamiltonian.at(1.0).unwrap();
        assert!((h.full()[(0, 0)].re - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(p.tlist.len(), 200);
    }

    #[test]
    fn zero_hamiltonian_is_constant() {
        let src = r#"{
            "name": "idle", "dims": [3],
            "initial": "coherent(3, 0.5)",
            "observables": [{ "name": "n", "op": "num(3)" }],
            "tlist": { "start": 0, "stop": 5, "count": 11 }
        }"#;
        let spec = ScenarioSpec::from_json(src).unwrap();
        let out = run_scenario(&spec, &RunOptions::default()).unwrap();
        let col = out.table.real(0);
        assert!(col.iter().all(|v| (v - col[0]).abs() < 1e-12));
        assert_eq!(out.table.csv_header(), vec!["t", "n"]);
    }
}
