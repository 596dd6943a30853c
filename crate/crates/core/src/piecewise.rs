//! Branch specialization: on `[n, n+1)` the integer part is the constant `n`,
//! the fractional part is a fresh variable `t`, and `x = n + t`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::expr::{
    fold_constants, is_structurally_zero, rewrite, Bound, Domain, Expr, Statement, VarDomain,
    MAIN_VAR,
};
use crate::numerics::Interval;

/// Name of the fractional-part variable in specialized statements.
pub const T_VAR: &str = "t";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PiecewiseError {
    #[error("floor/frac applied to `{0}`; only the bare variable x is supported")]
    UnsupportedNode(String),
    #[error("epsilon must lie in (0, 1/2), got {0}")]
    InvalidEpsilon(f64),
    #[error("branch {0} has an empty t-domain")]
    EmptyBranch(i64),
}

/// Declared range of `t` on one branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TDomain {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl TDomain {
    pub fn contains(&self, t: f64) -> bool {
        (t > self.lo || (!self.lo_open && t == self.lo))
            && (t < self.hi || (!self.hi_open && t == self.hi))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchProblem {
    pub n: i64,
    /// Statement over `t` and any auxiliary parameters; free of floor/frac.
    pub stmt_t: Statement,
    pub t_domain: TDomain,
    /// Some denominator is identically zero on this branch.
    pub singular: bool,
    /// Some denominator vanishes at `t = 0` (a fractional-part denominator).
    pub singular_at_zero: bool,
}

fn check_floor_args(e: &Expr) -> Result<(), PiecewiseError> {
    let mut bad = None;
    e.visit(&mut |node| {
        if let Expr::Floor(a) | Expr::Frac(a) = node {
            if !matches!(a.as_ref(), Expr::Var(v) if v == MAIN_VAR) && bad.is_none() {
                bad = Some(a.to_string());
            }
        }
    });
    bad.map_or(Ok(()), |b| Err(PiecewiseError::UnsupportedNode(b)))
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Rewrites one expression for branch `n`, folding constants.
pub fn specialize_expr(e: &Expr, n: i64) -> Expr {
    let x_value = fold_constants(&(Expr::Const(int(n)) + Expr::var(T_VAR)));
    fold_constants(&rewrite(e, &|node| match node {
        Expr::Floor(_) => Some(Expr::Const(int(n))),
        Expr::Frac(_) => Some(Expr::var(T_VAR)),
        Expr::Var(v) if v == MAIN_VAR => Some(x_value.clone()),
        _ => None,
    }))
}

fn at_t_zero(e: &Expr) -> Expr {
    crate::expr::substitute(e, &|v| (v == T_VAR).then(|| Expr::int(0)))
}

fn t_domain_for(main: Option<&VarDomain>, n: i64) -> TDomain {
    let mut d = TDomain {
        lo: 0.0,
        hi: 1.0,
        lo_open: false,
        hi_open: true,
    };
    let Some(main) = main else { return d };
    let (nr, n1) = (int(n), int(n + 1));
    if let Some(Bound { value, closed }) = &main.lower {
        if *value >= nr && *value < n1 {
            d.lo = (value - &nr).to_f64().unwrap_or(0.0);
            d.lo_open = !closed;
        }
    }
    if let Some(Bound { value, closed }) = &main.upper {
        if *value > nr && *value <= n1 {
            d.hi = (value - &nr).to_f64().unwrap_or(1.0);
            d.hi_open = !closed || *value == n1;
        }
    }
    if main.exclude_integers && d.lo == 0.0 {
        d.lo_open = true;
    }
    d
}

pub fn specialize_branch(stmt: &Statement, n: i64) -> Result<BranchProblem, PiecewiseError> {
    check_floor_args(&stmt.lhs)?;
    check_floor_args(&stmt.rhs)?;
    let lhs = specialize_expr(&stmt.lhs, n);
    let rhs = specialize_expr(&stmt.rhs, n);
    let mut denominators = lhs.denominators();
    denominators.extend(rhs.denominators());
    let singular = denominators.iter().any(|d| is_structurally_zero(d));
    let singular_at_zero = denominators.iter().any(|d| is_structurally_zero(&at_t_zero(d)));
    let t_domain = t_domain_for(stmt.domain.main(), n);
    let mut domain = Domain::default();
    let t = domain.entry(T_VAR);
    t.lower = Some(Bound {
        value: BigRational::from_float(t_domain.lo).expect("finite"),
        closed: !t_domain.lo_open,
    });
    t.upper = Some(Bound {
        value: BigRational::from_float(t_domain.hi).expect("finite"),
        closed: !t_domain.hi_open,
    });
    domain
        .vars
        .extend(stmt.domain.aux_params().into_iter().cloned());
    Ok(BranchProblem {
        n,
        stmt_t: Statement {
            lhs,
            rhs,
            relation: stmt.relation,
            domain,
        },
        t_domain,
        singular,
        singular_at_zero,
    })
}

/// Branch indices covering the x-domain up to `n_max`.
pub fn branch_range(domain: &Domain, n_max: i64) -> Vec<i64> {
    assert!(n_max >= 1, "n_max must be at least 1");
    let Some(main) = domain.main() else {
        return vec![0];
    };
    let start = match &main.lower {
        Some(b) if !main.real_line => b.value.floor().to_integer().to_i64().unwrap_or(-n_max),
        _ => -n_max,
    };
    let end = match &main.upper {
        Some(b) => {
            let c = b.value.ceil().to_integer().to_i64().unwrap_or(n_max + 1);
            (c - 1).min(n_max)
        }
        None => n_max,
    };
    (start.max(-n_max)..=end).collect()
}

/// `[epsilon, 1 - epsilon]` intersected with the branch's t-domain.
pub fn effective_t_domain(bp: &BranchProblem, epsilon: f64) -> Result<Interval, PiecewiseError> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(PiecewiseError::InvalidEpsilon(epsilon));
    }
    let lo = epsilon.max(bp.t_domain.lo);
    let hi = (1.0 - epsilon).min(bp.t_domain.hi);
    Interval::try_new(lo, hi).ok_or(PiecewiseError::EmptyBranch(bp.n))
}

/// Polynomial in `t` with exact coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Poly(Vec<BigRational>);

const MAX_DEGREE: usize = 96;

impl Poly {
    fn constant(c: BigRational) -> Poly {
        Poly(vec![c]).trim()
    }

    fn t() -> Poly {
        Poly(vec![BigRational::zero(), BigRational::one()])
    }

    fn trim(mut self) -> Poly {
        while self.0.last().is_some_and(Zero::is_zero) {
            self.0.pop();
        }
        self
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn add(&self, o: &Poly) -> Poly {
        let len = self.0.len().max(o.0.len());
        let z = BigRational::zero();
        Poly((0..len)
            .map(|i| self.0.get(i).unwrap_or(&z) + o.0.get(i).unwrap_or(&z))
            .collect())
        .trim()
    }

    fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|c| -c).collect())
    }

    fn mul(&self, o: &Poly) -> Option<Poly> {
        if self.is_zero() || o.is_zero() {
            return Some(Poly(vec![]));
        }
        let len = self.0.len() + o.0.len() - 1;
        if len > MAX_DEGREE {
            return None;
        }
        let mut out = vec![BigRational::zero(); len];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Some(Poly(out).trim())
    }

    fn scale(&self, c: &BigRational) -> Poly {
        Poly(self.0.iter().map(|x| x * c).collect()).trim()
    }
}

/// `num/den` with `den` not the zero polynomial.
fn rational_form(e: &Expr) -> Option<(Poly, Poly)> {
    let one = || Poly::constant(BigRational::one());
    Some(match e {
        Expr::Const(c) => (Poly::constant(c.clone()), one()),
        Expr::Var(v) if v == T_VAR => (Poly::t(), one()),
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            let (an, ad) = rational_form(a)?;
            let (bn, bd) = rational_form(b)?;
            let bn = if matches!(e, Expr::Sub(..)) { bn.neg() } else { bn };
            (an.mul(&bd)?.add(&bn.mul(&ad)?), ad.mul(&bd)?)
        }
        Expr::Mul(a, b) => {
            let (an, ad) = rational_form(a)?;
            let (bn, bd) = rational_form(b)?;
            (an.mul(&bn)?, ad.mul(&bd)?)
        }
        Expr::Div(a, b) => {
            let (an, ad) = rational_form(a)?;
            let (bn, bd) = rational_form(b)?;
            if bn.is_zero() {
                return None;
            }
            (an.mul(&bd)?, ad.mul(&bn)?)
        }
        Expr::Neg(a) => {
            let (n, d) = rational_form(a)?;
            (n.neg(), d)
        }
        Expr::Pow(a, k) => {
            let (n, d) = rational_form(a)?;
            let (mut pn, mut pd) = (one(), one());
            for _ in 0..*k {
                pn = pn.mul(&n)?;
                pd = pd.mul(&d)?;
            }
            (pn, pd)
        }
        _ => return None,
    })
}

/// If the branch margin is a rational function of `t` alone that is
/// constant wherever it is defined, returns that constant.
pub fn constant_margin(stmt_t: &Statement) -> Option<BigRational> {
    let (num, den) = rational_form(&fold_constants(&stmt_t.margin_expr()))?;
    if num.is_zero() {
        return Some(BigRational::zero());
    }
    let lead = den.0.iter().position(|c| !c.is_zero())?;
    let c = num.0.get(lead)? / &den.0[lead];
    (den.scale(&c) == num).then_some(c)
}

/// The margin is identically zero on the branch.
pub fn is_identically_zero(stmt_t: &Statement) -> bool {
    constant_margin(stmt_t).is_some_and(|c| c.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, parse_statement, MarginProgram};

    const T1: &str = "floor(x)/(3*x+frac(x)) + frac(x)/(3*x+floor(x)) >= 4/15 on x>0";

    #[test]
    fn theorem_one_branch_one() {
        let s = parse_statement(T1).unwrap();
        let bp = specialize_branch(&s, 1).unwrap();
        assert_eq!(
            bp.stmt_t.lhs,
            parse_expr("1/(3*(1 + t) + t) + t/(3*(1 + t) + 1)").unwrap()
        );
        assert!(!bp.singular);
        let m = MarginProgram::new(&bp.stmt_t).unwrap();
        let lhs = m.point(&[0.5]).unwrap().lhs;
        assert!((lhs - 16.0 / 55.0).abs() < 1e-15);
    }

    #[test]
    fn theorem_one_branch_zero_is_constant() {
        let s = parse_statement(T1).unwrap();
        let bp = specialize_branch(&s, 0).unwrap();
        assert_eq!(constant_margin(&bp.stmt_t), Some(BigRational::new(1.into(), 15.into())));
        assert!(bp.singular_at_zero);
        assert!(!specialize_branch(&s, 1).unwrap().singular_at_zero);
    }

    #[test]
    fn floor_denominator_is_singular_at_zero_branch() {
        let s = parse_statement(
            "4*(floor(x)^3/frac(x) + frac(x)^3/floor(x)) >= floor(x)^2+floor(x)*frac(x)+frac(x)^2 on x>0",
        )
        .unwrap();
        assert!(specialize_branch(&s, 0).unwrap().singular);
        let b2 = specialize_branch(&s, 2).unwrap();
        assert!(!b2.singular && b2.singular_at_zero);
    }

    #[test]
    fn negative_branch_keeps_constant_subterms() {
        let s = parse_statement("abs(sin(floor(x))) + abs(sin(frac(x))) + abs(cos(x)) >= 1 on x in R")
            .unwrap();
        let bp = specialize_branch(&s, -1).unwrap();
        let mut has_sin_const = false;
        bp.stmt_t.lhs.visit(&mut |e| {
            if let Expr::Sin(a) = e {
                if a.as_ref() == &Expr::int(-1) {
                    has_sin_const = true;
                }
            }
        });
        assert!(has_sin_const);
        assert!(!bp.stmt_t.contains_floor_or_frac());
    }

    #[test]
    fn unsupported_argument() {
        let s = parse_statement("floor(2*x) >= 0 on x>0").unwrap();
        assert!(matches!(
            specialize_branch(&s, 1),
            Err(PiecewiseError::UnsupportedNode(_))
        ));
    }

    #[test]
    fn ranges() {
        let d = |src: &str| parse_statement(src).unwrap().domain;
        assert_eq!(branch_range(&d("x >= 0 on x>0"), 3), vec![0, 1, 2, 3]);
        assert_eq!(branch_range(&d("x >= 0 on x>1"), 3), vec![1, 2, 3]);
        assert_eq!(branch_range(&d("x >= 0 on x in R"), 2), vec![-2, -1, 0, 1, 2]);
        assert_eq!(branch_range(&d("x >= 0 on x>0, x<5/2"), 9), vec![0, 1, 2]);
    }

    #[test]
    fn t_domains() {
        let s = parse_statement("x >= 0 on x>1").unwrap();
        let b1 = specialize_branch(&s, 1).unwrap();
        assert!(b1.t_domain.lo_open && !b1.t_domain.contains(0.0));
        assert!(!specialize_branch(&s, 2).unwrap().t_domain.lo_open);
        let e = effective_t_domain(&b1, 1e-4).unwrap();
        assert_eq!((e.lo(), e.hi()), (1e-4, 1.0 - 1e-4));
        assert_eq!(
            effective_t_domain(&b1, 0.6),
            Err(PiecewiseError::InvalidEpsilon(0.6))
        );
    }

    #[test]
    fn identically_zero_margins() {
        let s = parse_statement(
            "floor(x)/(2*floor(x)+2*frac(x)) + frac(x)/(2*frac(x)+2*floor(x)) <= 1/2 on x>0",
        )
        .unwrap();
        for n in 0..4 {
            assert!(is_identically_zero(&specialize_branch(&s, n).unwrap().stmt_t));
        }
        let t = parse_statement("frac(x) >= 0 on x>0").unwrap();
        assert!(!is_identically_zero(&specialize_branch(&t, 1).unwrap().stmt_t));
        let r = parse_statement("sqrt(frac(x)) >= 0 on x>0").unwrap();
        assert_eq!(constant_margin(&specialize_branch(&r, 1).unwrap().stmt_t), None);
    }
}
