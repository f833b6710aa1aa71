//! Evaluation of operator and state expressions such as
//! `tensor(destroy(N), qeye(2))` into quantum objects.

use qdyn::factory::{
    basis, coherent, coherent_dm, create, destroy, displace, fock, fock_dm, num, qeye, sigmam,
    sigmap, sigmax, sigmay, sigmaz, thermal_dm,
};
use qdyn::{tensor, QError, Qobj, C64};
use thiserror::Error;

use crate::expr::{power, scalar_function, BinOp, EvalError, Expr, Scope};

#[derive(Clone, Debug)]
pub enum Value {
    Scalar(C64),
    Obj(Qobj),
}

#[derive(Debug, Error)]
pub enum OpError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    /// A library error, with the smallest subexpression that raised it.
    #[error("in `{term}`: {source}")]
    Quantum { term: String, source: QError },
}

impl OpError {
    fn at(term: &Expr, source: QError) -> Self {
        OpError::Quantum {
            term: term.to_string(),
            source,
        }
    }
}

fn describe(v: &Value) -> String {
    match v {
        Value::Scalar(_) => "a scalar".into(),
        Value::Obj(q) => format!("a {}", q.qtype()),
    }
}

fn index_arg(name: &str, v: &Value) -> Result<usize, EvalError> {
    match v {
        Value::Scalar(z) if z.im == 0.0 && z.re >= 0.0 && (z.re - z.re.round()).abs() < 1e-9 => {
            Ok(z.re.round() as usize)
        }
        other => Err(EvalError::Value(format!(
            "`{name}` needs non-negative integer arguments, got {}",
            match other {
                Value::Scalar(z) => z.to_string(),
                o => describe(o),
            }
        ))),
    }
}

fn scalar_arg(name: &str, v: &Value) -> Result<C64, EvalError> {
    match v {
        Value::Scalar(z) => Ok(*z),
        o => Err(EvalError::Value(format!(
            "`{name}` needs a scalar argument, got {}",
            describe(o)
        ))),
    }
}

fn real_arg(name: &str, v: &Value) -> Result<f64, EvalError> {
    let z = scalar_arg(name, v)?;
    if z.im != 0.0 {
        return Err(EvalError::Value(format!(
            "`{name}` needs a real argument, got {z}"
        )));
    }
    Ok(z.re)
}

fn obj_arg<'v>(name: &str, v: &'v Value) -> Result<&'v Qobj, EvalError> {
    match v {
        Value::Obj(q) => Ok(q),
        Value::Scalar(_) => Err(EvalError::Value(format!(
            "`{name}` needs a quantum object, got a scalar"
        ))),
    }
}

fn arity(name: &str, args: &[Value], expected: usize) -> Result<(), EvalError> {
    if args.len() != expected {
        return Err(EvalError::Arity {
            name: name.to_string(),
            expected,
            got: args.len(),
        });
    }
    Ok(())
}

/// Functions that build or transform quantum objects.
pub const OPERATOR_FUNCTIONS: [&str; 20] = [
    "destroy",
    "create",
    "num",
    "qeye",
    "sigmax",
    "sigmay",
    "sigmaz",
    "sigmap",
    "sigmam",
    "basis",
    "fock",
    "fock_dm",
    "coherent",
    "coherent_dm",
    "thermal_dm",
    "displace",
    "tensor",
    "dag",
    "unit",
    "ket2dm",
];

fn call(name: &str, args: &[Value]) -> Result<std::result::Result<Value, QError>, EvalError> {
    let n = |k: usize| index_arg(name, &args[k]);
    let q = |r: Result<Qobj, QError>| r.map(Value::Obj);
    Ok(match name {
        "destroy" | "create" | "num" | "qeye" => {
            arity(name, args, 1)?;
            let d = n(0)?;
            q(match name {
                "destroy" => destroy(d),
                "create" => create(d),
                "num" => num(d),
                _ if d == 0 => Err(QError::Argument("qeye needs dimension ≥ 1".into())),
                _ => Ok(qeye(d)),
            })
        }
        "sigmax" | "sigmay" | "sigmaz" | "sigmap" | "sigmam" => {
            arity(name, args, 0)?;
            Ok(Value::Obj(match name {
                "sigmax" => sigmax(),
                "sigmay" => sigmay(),
                "sigmaz" => sigmaz(),
                "sigmap" => sigmap(),
                _ => sigmam(),
            }))
        }
        "basis" | "fock" | "fock_dm" => {
            arity(name, args, 2)?;
            let (d, k) = (n(0)?, n(1)?);
            q(match name {
                "basis" => basis(d, k),
                "fock" => fock(d, k),
                _ => fock_dm(d, k),
            })
        }
        "coherent" | "coherent_dm" | "displace" => {
            arity(name, args, 2)?;
            let (d, alpha) = (n(0)?, scalar_arg(name, &args[1])?);
            q(match name {
                "coherent" => coherent(d, alpha),
                "coherent_dm" => coherent_dm(d, alpha),
                _ => displace(d, alpha),
            })
        }
        "thermal_dm" => {
            arity(name, args, 2)?;
            q(thermal_dm(n(0)?, real_arg(name, &args[1])?))
        }
        "tensor" => {
            if args.is_empty() {
                return Err(EvalError::Value(
                    "`tensor` needs at least one factor".into(),
                ));
            }
            let parts = args
                .iter()
                .map(|a| obj_arg(name, a))
                .collect::<Result<Vec<_>, _>>()?;
            q(tensor(&parts))
        }
        "dag" | "unit" | "ket2dm" => {
            arity(name, args, 1)?;
            let x = obj_arg(name, &args[0])?;
            q(match name {
                "dag" => Ok(x.dag()),
                "unit" => x.unit(),
                _ => x.proj(),
            })
        }
        _ => {
            let vals = args
                .iter()
                .map(|a| scalar_arg(name, a))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Value::Scalar(scalar_function(name, &vals)?))
        }
    })
}

fn binary(op: BinOp, a: Value, b: Value) -> Result<std::result::Result<Value, QError>, EvalError> {
    use Value::{Obj, Scalar};
    Ok(match (op, a, b) {
        (BinOp::Add, Scalar(x), Scalar(y)) => Ok(Scalar(x + y)),
        (BinOp::Sub, Scalar(x), Scalar(y)) => Ok(Scalar(x - y)),
        (BinOp::Mul, Scalar(x), Scalar(y)) => Ok(Scalar(x * y)),
        (BinOp::Div, Scalar(x), Scalar(y)) => Ok(Scalar(x / y)),
        (BinOp::Pow, Scalar(x), Scalar(y)) => Ok(Scalar(power(x, y))),
        (BinOp::Add, Obj(x), Obj(y)) => x.checked_add(&y).map(Obj),
        (BinOp::Sub, Obj(x), Obj(y)) => x.checked_sub(&y).map(Obj),
        (BinOp::Mul, Obj(x), Obj(y)) => x.checked_mul(&y).map(Obj),
        (BinOp::Mul, Scalar(s), Obj(x)) | (BinOp::Mul, Obj(x), Scalar(s)) => Ok(Obj(x.scale(s))),
        (BinOp::Div, Obj(x), Scalar(s)) => x.checked_div(s).map(Obj),
        (op, a, b) => {
            return Err(EvalError::Value(format!(
                "cannot apply `{}` to {} and {}",
                match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                },
                describe(&a),
                describe(&b)
            )))
        }
    })
}

/// Evaluates an expression that may mix scalars and quantum objects.
pub fn eval(e: &Expr, scope: &Scope<'_>) -> Result<Value, OpError> {
    match e {
        Expr::Num(_) | Expr::Imag(_) | Expr::Var(_) => Ok(Value::Scalar(e.eval(scope)?)),
        Expr::Neg(x) => Ok(match eval(x, scope)? {
            Value::Scalar(z) => Value::Scalar(-z),
            Value::Obj(q) => Value::Obj(q.scale(C64::new(-1.0, 0.0))),
        }),
        Expr::Bin(op, a, b) => {
            let (a, b) = (eval(a, scope)?, eval(b, scope)?);
            binary(*op, a, b)?.map_err(|err| OpError::at(e, err))
        }
        Expr::Call(name, args) => {
            let vals = args
                .iter()
                .map(|a| eval(a, scope))
                .collect::<Result<Vec<_>, _>>()?;
            call(name, &vals)?.map_err(|err| OpError::at(e, err))
        }
    }
}

/// Evaluates to a quantum object; a bare scalar is an error.
pub fn eval_obj(e: &Expr, scope: &Scope<'_>) -> Result<Qobj, OpError> {
    match eval(e, scope)? {
        Value::Obj(q) => Ok(q),
        Value::Scalar(z) => Err(EvalError::Value(format!(
            "`{e}` evaluates to the scalar {z}, not a quantum object"
        ))
        .into()),
    }
}
