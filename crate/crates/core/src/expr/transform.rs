//! Tree rewrites: variable substitution and constant folding.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::Expr;

fn map_children(e: &Expr, f: &mut impl FnMut(&Expr) -> Expr) -> Expr {
    let b = |x: &Expr, f: &mut dyn FnMut(&Expr) -> Expr| Box::new(f(x));
    match e {
        Expr::Const(_) | Expr::Var(_) => e.clone(),
        Expr::Add(x, y) => Expr::Add(b(x, f), b(y, f)),
        Expr::Sub(x, y) => Expr::Sub(b(x, f), b(y, f)),
        Expr::Mul(x, y) => Expr::Mul(b(x, f), b(y, f)),
        Expr::Div(x, y) => Expr::Div(b(x, f), b(y, f)),
        Expr::Neg(x) => Expr::Neg(b(x, f)),
        Expr::Pow(x, k) => Expr::Pow(b(x, f), *k),
        Expr::Root(x, k) => Expr::Root(b(x, f), *k),
        Expr::Abs(x) => Expr::Abs(b(x, f)),
        Expr::Exp(x) => Expr::Exp(b(x, f)),
        Expr::Sin(x) => Expr::Sin(b(x, f)),
        Expr::Cos(x) => Expr::Cos(b(x, f)),
        Expr::Floor(x) => Expr::Floor(b(x, f)),
        Expr::Frac(x) => Expr::Frac(b(x, f)),
        Expr::Min(args) => Expr::Min(args.iter().map(&mut *f).collect()),
        Expr::Max(args) => Expr::Max(args.iter().map(&mut *f).collect()),
    }
}

/// Top-down rewrite: wherever `f` returns a replacement the subtree is
/// replaced (and not visited further).
pub fn rewrite(e: &Expr, f: &dyn Fn(&Expr) -> Option<Expr>) -> Expr {
    match f(e) {
        Some(r) => r,
        None => map_children(e, &mut |c| rewrite(c, f)),
    }
}

/// Replaces variables for which `f` yields an expression.
pub fn substitute(e: &Expr, f: &dyn Fn(&str) -> Option<Expr>) -> Expr {
    rewrite(e, &|node| match node {
        Expr::Var(v) => f(v),
        _ => None,
    })
}

fn c(v: BigRational) -> Expr {
    Expr::Const(v)
}

fn exact_root(v: &BigRational, k: u32) -> Option<BigRational> {
    if v.is_zero() || v.is_one() {
        return Some(v.clone());
    }
    if v.is_negative() {
        return if k % 2 == 1 {
            exact_root(&-v, k).map(|r| -r)
        } else {
            None
        };
    }
    let n = v.numer().nth_root(k);
    let d = v.denom().nth_root(k);
    (n.pow(k) == *v.numer() && d.pow(k) == *v.denom()).then(|| BigRational::new(n, d))
}

fn floor_rational(v: &BigRational) -> BigRational {
    BigRational::from_integer(v.floor().to_integer())
}

/// Bottom-up constant folding plus the neutral/absorbing identities
/// `e+0`, `e-0`, `e*1`, `0*e`, `0/e`, `e/1`, `e^0`, `e^1`.
pub fn fold_constants(e: &Expr) -> Expr {
    let e = map_children(e, &mut fold_constants);
    match e {
        Expr::Add(a, b) => match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => c(x + y),
            (Some(x), _) if x.is_zero() => *b,
            (_, Some(y)) if y.is_zero() => *a,
            _ => Expr::Add(a, b),
        },
        Expr::Sub(a, b) => match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => c(x - y),
            (_, Some(y)) if y.is_zero() => *a,
            (Some(x), _) if x.is_zero() => fold_constants(&Expr::Neg(b)),
            _ => Expr::Sub(a, b),
        },
        Expr::Mul(a, b) => match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => c(x * y),
            (Some(x), _) | (_, Some(x)) if x.is_zero() => Expr::int(0),
            (Some(x), _) if x.is_one() => *b,
            (_, Some(y)) if y.is_one() => *a,
            _ => Expr::Mul(a, b),
        },
        Expr::Div(a, b) => match (a.as_const(), b.as_const()) {
            (_, Some(y)) if y.is_zero() => Expr::Div(a, b),
            (Some(x), Some(y)) => c(x / y),
            (Some(x), _) if x.is_zero() => Expr::int(0),
            (_, Some(y)) if y.is_one() => *a,
            _ => Expr::Div(a, b),
        },
        Expr::Neg(a) => match *a {
            Expr::Const(x) => c(-x),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        },
        Expr::Pow(a, k) => match (a.as_const(), k) {
            (_, 0) => Expr::int(1),
            (_, 1) => *a,
            (Some(x), _) => c(num_traits::pow(x.clone(), k as usize)),
            _ => Expr::Pow(a, k),
        },
        Expr::Root(a, k) => match a.as_const().and_then(|x| exact_root(x, k)) {
            Some(r) => c(r),
            None => Expr::Root(a, k),
        },
        Expr::Abs(a) => match a.as_const() {
            Some(x) => c(x.abs()),
            None => Expr::Abs(a),
        },
        Expr::Exp(a) if a.is_const_zero() => Expr::int(1),
        Expr::Sin(a) if a.is_const_zero() => Expr::int(0),
        Expr::Cos(a) if a.is_const_zero() => Expr::int(1),
        Expr::Floor(a) => match a.as_const() {
            Some(x) => c(floor_rational(x)),
            None => Expr::Floor(a),
        },
        Expr::Frac(a) => match a.as_const() {
            Some(x) => c(x - floor_rational(x)),
            None => Expr::Frac(a),
        },
        Expr::Min(args) => fold_extremum(args, true),
        Expr::Max(args) => fold_extremum(args, false),
        other => other,
    }
}

fn fold_extremum(args: Vec<Expr>, is_min: bool) -> Expr {
    let consts: Option<Vec<&BigRational>> = args.iter().map(Expr::as_const).collect();
    match consts {
        Some(vals) if !vals.is_empty() => {
            let pick = if is_min {
                vals.into_iter().min()
            } else {
                vals.into_iter().max()
            };
            c(pick.expect("nonempty").clone())
        }
        _ if args.len() == 1 => args.into_iter().next().expect("one arg"),
        _ if is_min => Expr::Min(args),
        _ => Expr::Max(args),
    }
}

/// The expression folds to the constant zero.
pub fn is_structurally_zero(e: &Expr) -> bool {
    fold_constants(e).is_const_zero()
}
