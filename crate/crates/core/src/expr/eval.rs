//! Point and interval evaluation of compiled expressions.

use std::collections::BTreeSet;

use num_rational::BigRational;
use thiserror::Error;

use super::{floor_value, frac_value, rational_to_f64, Expr, Relation, Statement};
use crate::numerics::{Interval, IntervalError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("division by an interval containing zero")]
    DivisionBySpanningZero,
    #[error("argument outside the domain of a root")]
    Domain,
    #[error("floor/frac cannot be evaluated over an interval")]
    FloorInInterval,
    #[error("unbound variable")]
    UnboundVariable,
}

impl EvalError {
    /// The error can go away on a smaller box.
    pub fn needs_subdivision(self) -> bool {
        matches!(self, EvalError::DivisionBySpanningZero | EvalError::Domain)
    }
}

impl From<IntervalError> for EvalError {
    fn from(e: IntervalError) -> Self {
        match e {
            IntervalError::DivisionBySpanningZero => EvalError::DivisionBySpanningZero,
            IntervalError::Domain => EvalError::Domain,
        }
    }
}

/// Tightest interval with f64 endpoints containing `r`.
pub fn rational_enclosure(r: &BigRational) -> Interval {
    let v = rational_to_f64(r);
    if !v.is_finite() {
        return if v > 0.0 {
            Interval::new(f64::MAX, f64::INFINITY)
        } else {
            Interval::new(f64::NEG_INFINITY, f64::MIN)
        };
    }
    let back = BigRational::from_float(v).expect("finite");
    match back.cmp(r) {
        std::cmp::Ordering::Equal => Interval::point(v),
        std::cmp::Ordering::Less => Interval::new(v, v.next_up()),
        std::cmp::Ordering::Greater => Interval::new(v.next_down(), v),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Op {
    Const(f64, Interval),
    Var(usize),
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Pow(u32),
    Root(u32),
    Abs,
    Exp,
    Sin,
    Cos,
    Min(usize),
    Max(usize),
    Floor,
    Frac,
}

/// An expression flattened to postfix form over a fixed variable order.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    ops: Vec<Op>,
    vars: Vec<String>,
    has_floor: bool,
}

impl Program {
    /// Compiles over the expression's own variables in sorted order.
    pub fn new(e: &Expr) -> Program {
        let vars: Vec<String> = e.variables().into_iter().collect();
        Program::compile(e, &vars).expect("all variables listed")
    }

    pub fn compile(e: &Expr, vars: &[String]) -> Result<Program, EvalError> {
        let mut ops = Vec::with_capacity(e.node_count());
        emit(e, vars, &mut ops)?;
        Ok(Program {
            has_floor: ops.iter().any(|o| matches!(o, Op::Floor | Op::Frac)),
            ops,
            vars: vars.to_vec(),
        })
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn eval_point(&self, vals: &[f64]) -> Result<f64, EvalError> {
        if vals.len() < self.vars.len() {
            return Err(EvalError::UnboundVariable);
        }
        let mut st: Vec<f64> = Vec::with_capacity(16);
        for op in &self.ops {
            let v = match *op {
                Op::Const(v, _) => v,
                Op::Var(i) => vals[i],
                Op::Add => {
                    let b = st.pop().expect("stack");
                    st.pop().expect("stack") + b
                }
                Op::Sub => {
                    let b = st.pop().expect("stack");
                    st.pop().expect("stack") - b
                }
                Op::Mul => {
                    let b = st.pop().expect("stack");
                    st.pop().expect("stack") * b
                }
                Op::Div => {
                    let b = st.pop().expect("stack");
                    let a = st.pop().expect("stack");
                    if b == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    a / b
                }
                Op::Neg => -st.pop().expect("stack"),
                Op::Pow(k) => powi(st.pop().expect("stack"), k),
                Op::Root(k) => {
                    let a = st.pop().expect("stack");
                    match k {
                        3 => a.cbrt(),
                        _ if a < 0.0 => return Err(EvalError::Domain),
                        2 => a.sqrt(),
                        _ => a.sqrt().sqrt(),
                    }
                }
                Op::Abs => st.pop().expect("stack").abs(),
                Op::Exp => st.pop().expect("stack").exp(),
                Op::Sin => st.pop().expect("stack").sin(),
                Op::Cos => st.pop().expect("stack").cos(),
                Op::Min(n) => {
                    let at = st.len() - n;
                    let m = st.drain(at..).fold(f64::INFINITY, f64::min);
                    m
                }
                Op::Max(n) => {
                    let at = st.len() - n;
                    let m = st.drain(at..).fold(f64::NEG_INFINITY, f64::max);
                    m
                }
                Op::Floor => floor_value(st.pop().expect("stack")),
                Op::Frac => frac_value(st.pop().expect("stack")),
            };
            st.push(v);
        }
        Ok(st.pop().expect("program leaves one value"))
    }

    pub fn eval_interval(&self, vals: &[Interval]) -> Result<Interval, EvalError> {
        if vals.len() < self.vars.len() {
            return Err(EvalError::UnboundVariable);
        }
        if self.has_floor {
            return Err(EvalError::FloorInInterval);
        }
        let mut st: Vec<Interval> = Vec::with_capacity(16);
        for op in &self.ops {
            let v = match *op {
                Op::Const(_, iv) => iv,
                Op::Var(i) => vals[i],
                Op::Add => {
                    let b = st.pop().expect("stack");
                    st.pop().expect("stack").add(b)
                }
                Op::Sub => {
                    let b = st.pop().expect("stack");
                    st.pop().expect("stack").sub(b)
                }
                Op::Mul => {
                    let b = st.pop().expect("stack");
                    st.pop().expect("stack").mul(b)
                }
                Op::Div => {
                    let b = st.pop().expect("stack");
                    st.pop().expect("stack").div(b)?
                }
                Op::Neg => st.pop().expect("stack").neg(),
                Op::Pow(k) => st.pop().expect("stack").pow(k),
                Op::Root(k) => st.pop().expect("stack").root(k)?,
                Op::Abs => st.pop().expect("stack").abs(),
                Op::Exp => st.pop().expect("stack").exp(),
                Op::Sin => st.pop().expect("stack").sin(),
                Op::Cos => st.pop().expect("stack").cos(),
                Op::Min(n) => {
                    let at = st.len() - n;
                    let m = st.drain(at..).reduce(Interval::min).expect("nonempty");
                    m
                }
                Op::Max(n) => {
                    let at = st.len() - n;
                    let m = st.drain(at..).reduce(Interval::max).expect("nonempty");
                    m
                }
                Op::Floor | Op::Frac => unreachable!("rejected above"),
            };
            st.push(v);
        }
        Ok(st.pop().expect("program leaves one value"))
    }
}

fn powi(a: f64, k: u32) -> f64 {
    match i32::try_from(k) {
        Ok(k) => a.powi(k),
        Err(_) => a.powf(k as f64),
    }
}

fn emit(e: &Expr, vars: &[String], ops: &mut Vec<Op>) -> Result<(), EvalError> {
    for c in e.children() {
        emit(c, vars, ops)?;
    }
    ops.push(match e {
        Expr::Const(c) => Op::Const(rational_to_f64(c), rational_enclosure(c)),
        Expr::Var(v) => Op::Var(
            vars.iter()
                .position(|n| n == v)
                .ok_or(EvalError::UnboundVariable)?,
        ),
        Expr::Add(..) => Op::Add,
        Expr::Sub(..) => Op::Sub,
        Expr::Mul(..) => Op::Mul,
        Expr::Div(..) => Op::Div,
        Expr::Neg(_) => Op::Neg,
        Expr::Pow(_, k) => Op::Pow(*k),
        Expr::Root(_, k) => Op::Root(*k),
        Expr::Abs(_) => Op::Abs,
        Expr::Exp(_) => Op::Exp,
        Expr::Sin(_) => Op::Sin,
        Expr::Cos(_) => Op::Cos,
        Expr::Min(a) => Op::Min(a.len()),
        Expr::Max(a) => Op::Max(a.len()),
        Expr::Floor(_) => Op::Floor,
        Expr::Frac(_) => Op::Frac,
    });
    Ok(())
}

/// Evaluates at a point given as `(name, value)` pairs.
pub fn eval_point(e: &Expr, bindings: &[(&str, f64)]) -> Result<f64, EvalError> {
    let names: Vec<String> = bindings.iter().map(|(n, _)| n.to_string()).collect();
    let vals: Vec<f64> = bindings.iter().map(|(_, v)| *v).collect();
    Program::compile(e, &names)?.eval_point(&vals)
}

/// Encloses the range over the box given as `(name, interval)` pairs.
pub fn eval_interval(e: &Expr, bindings: &[(&str, Interval)]) -> Result<Interval, EvalError> {
    let names: Vec<String> = bindings.iter().map(|(n, _)| n.to_string()).collect();
    let vals: Vec<Interval> = bindings.iter().map(|(_, v)| *v).collect();
    Program::compile(e, &names)?.eval_interval(&vals)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMargin {
    pub lhs: f64,
    pub rhs: f64,
    /// Oriented so that the relation holds iff `margin >= 0` (`> 0` if strict).
    pub margin: f64,
}

impl PointMargin {
    /// `max(1, |lhs|, |rhs|)`, the yardstick for tolerances.
    pub fn scale(&self) -> f64 {
        1f64.max(self.lhs.abs()).max(self.rhs.abs())
    }
}

/// Both sides of a statement compiled over one variable order.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginProgram {
    lhs: Program,
    rhs: Program,
    relation: Relation,
    vars: Vec<String>,
}

impl MarginProgram {
    /// Variables ordered as declared in the domain.
    pub fn new(stmt: &Statement) -> Result<MarginProgram, EvalError> {
        let mut vars: Vec<String> = stmt.domain.names().map(str::to_string).collect();
        let declared: BTreeSet<&String> = vars.iter().collect();
        let extra: Vec<String> = stmt
            .variables()
            .into_iter()
            .filter(|v| !declared.contains(v))
            .collect();
        vars.extend(extra);
        MarginProgram::with_vars(stmt, &vars)
    }

    pub fn with_vars(stmt: &Statement, vars: &[String]) -> Result<MarginProgram, EvalError> {
        Ok(MarginProgram {
            lhs: Program::compile(&stmt.lhs, vars)?,
            rhs: Program::compile(&stmt.rhs, vars)?,
            relation: stmt.relation,
            vars: vars.to_vec(),
        })
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn relation(&self) -> Relation {
        self.relation
    }

    pub fn point(&self, vals: &[f64]) -> Result<PointMargin, EvalError> {
        let lhs = self.lhs.eval_point(vals)?;
        let rhs = self.rhs.eval_point(vals)?;
        let margin = if self.relation.lhs_minus_rhs() {
            lhs - rhs
        } else {
            rhs - lhs
        };
        Ok(PointMargin { lhs, rhs, margin })
    }

    pub fn sides_interval(&self, vals: &[Interval]) -> Result<(Interval, Interval), EvalError> {
        Ok((self.lhs.eval_interval(vals)?, self.rhs.eval_interval(vals)?))
    }

    /// Enclosure of the oriented margin over a box.
    pub fn interval(&self, vals: &[Interval]) -> Result<Interval, EvalError> {
        let (l, r) = self.sides_interval(vals)?;
        Ok(if self.relation.lhs_minus_rhs() {
            l.sub(r)
        } else {
            r.sub(l)
        })
    }
}
