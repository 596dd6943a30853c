//! Expression trees for inequality sides, statements and their domains.

mod eval;
mod parse;
mod print;
mod transform;

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use eval::{
    eval_interval, eval_point, rational_enclosure, EvalError, MarginProgram, PointMargin, Program,
};
pub use parse::{parse_expr, parse_statement, ParseError};
pub use print::print_statement;
pub use transform::{fold_constants, is_structurally_zero, rewrite, substitute};

/// Name of the distinguished variable whose integer and fractional parts appear in statements.
pub const MAIN_VAR: &str = "x";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(BigRational),
    Var(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, u32),
    /// Root of order 2, 3 or 4.
    Root(Box<Expr>, u32),
    Abs(Box<Expr>),
    Exp(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Min(Vec<Expr>),
    Max(Vec<Expr>),
    Floor(Box<Expr>),
    Frac(Box<Expr>),
}

impl Expr {
    pub fn int(v: i64) -> Expr {
        Expr::Const(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn ratio(num: i64, den: i64) -> Expr {
        Expr::Const(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn as_const(&self) -> Option<&BigRational> {
        match self {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_const_zero(&self) -> bool {
        self.as_const().is_some_and(Zero::is_zero)
    }

    pub fn is_const_one(&self) -> bool {
        self.as_const().is_some_and(One::is_one)
    }

    /// Direct children, in evaluation order.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Const(_) | Expr::Var(_) => vec![],
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                vec![a, b]
            }
            Expr::Neg(a)
            | Expr::Pow(a, _)
            | Expr::Root(a, _)
            | Expr::Abs(a)
            | Expr::Exp(a)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Floor(a)
            | Expr::Frac(a) => vec![a],
            Expr::Min(args) | Expr::Max(args) => args.iter().collect(),
        }
    }

    /// Pre-order walk over all nodes.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Var(v) = e {
                out.insert(v.clone());
            }
        });
        out
    }

    pub fn contains_floor_or_frac(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if matches!(e, Expr::Floor(_) | Expr::Frac(_)) {
                found = true;
            }
        });
        found
    }

    /// Every denominator of a `Div` node, in pre-order.
    pub fn denominators(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Div(_, d) = e {
                out.push(d.as_ref());
            }
        });
        out
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Relation {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Ge => ">=",
            Relation::Gt => ">",
            Relation::Le => "<=",
            Relation::Lt => "<",
        }
    }

    pub fn is_strict(self) -> bool {
        matches!(self, Relation::Gt | Relation::Lt)
    }

    /// True when the margin is `lhs - rhs` (rather than `rhs - lhs`).
    pub fn lhs_minus_rhs(self) -> bool {
        matches!(self, Relation::Ge | Relation::Gt)
    }

    /// Whether a margin value satisfies the relation.
    pub fn holds(self, margin: f64) -> bool {
        if self.is_strict() {
            margin > 0.0
        } else {
            margin >= 0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bound {
    pub value: BigRational,
    pub closed: bool,
}

/// Constraints on one declared variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VarDomain {
    pub name: String,
    pub lower: Option<Bound>,
    pub upper: Option<Bound>,
    /// Declared explicitly as ranging over the whole real line.
    pub real_line: bool,
    pub exclude_integers: bool,
}

impl VarDomain {
    pub fn new(name: &str) -> Self {
        VarDomain {
            name: name.to_string(),
            lower: None,
            upper: None,
            real_line: false,
            exclude_integers: false,
        }
    }

    pub fn lower_f64(&self) -> Option<f64> {
        self.lower.as_ref().and_then(|b| b.value.to_f64())
    }

    pub fn upper_f64(&self) -> Option<f64> {
        self.upper.as_ref().and_then(|b| b.value.to_f64())
    }

    /// Whether `v` satisfies every constraint.
    pub fn admits(&self, v: f64) -> bool {
        if let Some(b) = &self.lower {
            let lo = b.value.to_f64().unwrap_or(f64::NEG_INFINITY);
            if v < lo || (!b.closed && v == lo) {
                return false;
            }
        }
        if let Some(b) = &self.upper {
            let hi = b.value.to_f64().unwrap_or(f64::INFINITY);
            if v > hi || (!b.closed && v == hi) {
                return false;
            }
        }
        !(self.exclude_integers && v.fract() == 0.0)
    }

    /// Bounds are finite and ordered.
    pub fn is_sane(&self) -> bool {
        match (&self.lower, &self.upper) {
            (Some(l), Some(u)) => l.value < u.value || (l.value == u.value && l.closed && u.closed),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Domain {
    pub vars: Vec<VarDomain>,
}

impl Domain {
    pub fn get(&self, name: &str) -> Option<&VarDomain> {
        self.vars.iter().find(|v| v.name == name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut VarDomain> {
        self.vars.iter_mut().find(|v| v.name == name)
    }

    pub fn declares(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.vars.iter().map(|v| v.name.as_str())
    }

    /// Declared variables other than [`MAIN_VAR`].
    pub fn aux_params(&self) -> Vec<&VarDomain> {
        self.vars.iter().filter(|v| v.name != MAIN_VAR).collect()
    }

    pub fn main(&self) -> Option<&VarDomain> {
        self.get(MAIN_VAR)
    }

    pub fn entry(&mut self, name: &str) -> &mut VarDomain {
        if let Some(i) = self.vars.iter().position(|v| v.name == name) {
            &mut self.vars[i]
        } else {
            self.vars.push(VarDomain::new(name));
            self.vars.last_mut().expect("just pushed")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Statement {
    pub lhs: Expr,
    pub rhs: Expr,
    pub relation: Relation,
    pub domain: Domain,
}

impl Statement {
    pub fn variables(&self) -> BTreeSet<String> {
        let mut v = self.lhs.variables();
        v.extend(self.rhs.variables());
        v
    }

    /// Variables used in either side but not declared in the domain.
    pub fn undeclared(&self) -> Vec<String> {
        self.variables()
            .into_iter()
            .filter(|v| !self.domain.declares(v))
            .collect()
    }

    /// The oriented margin expression: nonnegative exactly where the relation holds
    /// (strictly positive for strict relations).
    pub fn margin_expr(&self) -> Expr {
        if self.relation.lhs_minus_rhs() {
            self.lhs.clone() - self.rhs.clone()
        } else {
            self.rhs.clone() - self.lhs.clone()
        }
    }

    pub fn contains_floor_or_frac(&self) -> bool {
        self.lhs.contains_floor_or_frac() || self.rhs.contains_floor_or_frac()
    }

    /// Replaces every occurrence of the named variables by constants and drops
    /// them from the domain.
    pub fn bind(&self, values: &[(String, BigRational)]) -> Statement {
        let map = |e: &Expr| {
            substitute(e, &|name| {
                values
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, v)| Expr::Const(v.clone()))
            })
        };
        let mut domain = self.domain.clone();
        domain
            .vars
            .retain(|d| !values.iter().any(|(n, _)| *n == d.name));
        Statement {
            lhs: fold_constants(&map(&self.lhs)),
            rhs: fold_constants(&map(&self.rhs)),
            relation: self.relation,
            domain,
        }
    }
}

impl std::fmt::Display for Statement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&print_statement(self))
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&print::print_expr(self))
    }
}

/// Greatest integer not above `v`.
pub fn floor_value(v: f64) -> f64 {
    v.floor()
}

/// `v - floor(v)`, always in `[0, 1)` for finite `v`.
pub fn frac_value(v: f64) -> f64 {
    let f = v - v.floor();
    // v = -1e-20 rounds to 1.0; keep the half-open range
    if f >= 1.0 {
        1.0f64.next_down()
    } else {
        f
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExprError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("undeclared variable `{0}`")]
    Undeclared(String),
}

pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_and_frac_at_examples() {
        assert_eq!(floor_value(2.75), 2.0);
        assert_eq!(frac_value(2.75), 0.75);
        assert_eq!(floor_value(-1.25), -2.0);
        assert_eq!(frac_value(-1.25), 0.75);
        assert!(frac_value(-1e-20) < 1.0);
    }

    #[test]
    fn margin_orientation() {
        let s = parse_statement("x <= 2 on x>0").unwrap();
        assert_eq!(s.margin_expr(), Expr::int(2) - Expr::var("x"));
        let g = parse_statement("x >= 2 on x>0").unwrap();
        assert_eq!(g.margin_expr(), Expr::var("x") - Expr::int(2));
    }

    #[test]
    fn bind_replaces_params() {
        let s = parse_statement("a*x >= a on x>0, a>=1").unwrap();
        let b = s.bind(&[("a".into(), BigRational::from_integer(2.into()))]);
        assert_eq!(b.lhs, Expr::int(2) * Expr::var("x"));
        assert_eq!(b.rhs, Expr::int(2));
        assert!(!b.domain.declares("a"));
    }

    #[test]
    fn var_domain_admits() {
        let s = parse_statement("x >= 0 on x>1, x notin Z").unwrap();
        let d = s.domain.main().unwrap();
        assert!(!d.admits(1.0));
        assert!(d.admits(1.5));
        assert!(!d.admits(2.0));
    }
}
