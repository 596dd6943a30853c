//! Seeded property suites shared by the property and acceptance targets.
//! Each returns the number of cases checked or the first failure.
#![allow(dead_code)]

use floorcheck::corpus::builtin_corpus;
use floorcheck::expr::{floor_value, frac_value, parse_expr, parse_statement, Expr, MarginProgram, Statement};
use floorcheck::numerics::Interval;
use floorcheck::piecewise::{branch_range, effective_t_domain, specialize_branch};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CASES: usize = 100_000;

/// Every corpus statement version with parameters fixed to the first slice.
pub fn versions() -> Vec<Statement> {
    let mut out = Vec::new();
    for t in &builtin_corpus().theorems {
        for s in std::iter::once(&t.as_printed).chain(t.corrected.iter()) {
            out.push(match t.slices.first() {
                Some(slice) => s.bind(slice),
                None => s.clone(),
            });
        }
    }
    out
}

struct BranchCase {
    prog: MarginProgram,
    dom: Interval,
}

fn branch_cases() -> Vec<BranchCase> {
    let mut out = Vec::new();
    for s in versions() {
        let mut ns = branch_range(&s.domain, 20);
        ns.push(1000);
        for n in ns {
            let Ok(bp) = specialize_branch(&s, n) else { continue };
            if bp.singular {
                continue;
            }
            let (Ok(dom), Ok(prog)) = (effective_t_domain(&bp, 1e-4), MarginProgram::new(&bp.stmt_t)) else {
                continue;
            };
            out.push(BranchCase { prog, dom });
        }
    }
    out
}

/// Point values of both sides lie in the interval values over a random enclosing box.
pub fn enclosure(cases: usize, seed: u64) -> Result<usize, String> {
    let branches = branch_cases();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut checked, mut attempts) = (0usize, 0usize);
    while checked < cases {
        attempts += 1;
        if attempts > 4 * cases {
            return Err(format!("only {checked} evaluable boxes"));
        }
        let c = &branches[rng.random_range(0..branches.len())];
        let width = c.dom.width() * 10f64.powf(rng.random_range(-9.0..0.0));
        let lo = rng.random_range(c.dom.lo()..=c.dom.hi() - width);
        let bx = Interval::new(lo, (lo + width).min(c.dom.hi()));
        let Ok((l, r)) = c.prog.sides_interval(&[bx]) else { continue };
        let t = rng.random_range(bx.lo()..=bx.hi());
        let Ok(p) = c.prog.point(&[t]) else { continue };
        if !l.contains(p.lhs) || !r.contains(p.rhs) {
            return Err(format!("t = {t}: ({}, {}) not in ({l:?}, {r:?})", p.lhs, p.rhs));
        }
        checked += 1;
    }
    Ok(checked)
}

/// Original statement at `x` and its branch at `t = frac(x)` agree side by side.
pub fn branch_equivalence(cases: usize, seed: u64) -> Result<usize, String> {
    let vs = versions();
    let progs: Vec<MarginProgram> = vs.iter().map(|s| MarginProgram::new(s).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(1.0);
    let (mut checked, mut attempts) = (0usize, 0usize);
    while checked < cases {
        attempts += 1;
        if attempts > 4 * cases {
            return Err(format!("only {checked} evaluable points"));
        }
        let i = rng.random_range(0..vs.len());
        let s = &vs[i];
        let main = s.domain.main().unwrap();
        let lo = if main.real_line { -21.0 } else { 0.0 };
        let x: f64 = rng.random_range(lo..21.0);
        if !main.admits(x) {
            continue;
        }
        let (n, t) = (floor_value(x) as i64, frac_value(x));
        let bp = specialize_branch(s, n).map_err(|e| e.to_string())?;
        if bp.stmt_t.contains_floor_or_frac() {
            return Err(format!("branch {n} of {s} still has floor/frac"));
        }
        let specialized = MarginProgram::new(&bp.stmt_t).map_err(|e| e.to_string())?;
        let (Ok(a), Ok(b)) = (progs[i].point(&[x]), specialized.point(&[t])) else { continue };
        if !(close(a.lhs, b.lhs) && close(a.rhs, b.rhs)) {
            return Err(format!("{s} at x = {x}: {a:?} vs {b:?}"));
        }
        checked += 1;
    }
    Ok(checked)
}

/// `floor(v) + frac(v) = v` exactly and `0 <= frac(v) < 1`.
pub fn floor_frac(cases: usize, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..cases {
        let v: f64 = match i % 4 {
            0 => rng.random_range(-1e6..1e6),
            1 => rng.random_range(-25i64..25) as f64 + rng.random_range(-1e-9..1e-9),
            2 => rng.random_range(-1.0..1.0) * 10f64.powi(rng.random_range(-20..3)),
            _ => rng.random_range(-25i64..25) as f64,
        };
        let (fl, fr) = (floor_value(v), frac_value(v));
        let ok = fl == fl.trunc()
            && (0.0..1.0).contains(&fr)
            && if (-0.5..0.0).contains(&v) {
                // v + 1 is not representable; frac is its rounding
                fl == -1.0 && fr == (v + 1.0).min(1.0f64.next_down())
            } else {
                fl + fr == v
            };
        if !ok {
            return Err(format!("v = {v}: floor {fl}, frac {fr}"));
        }
    }
    Ok(cases)
}

/// Every corpus statement survives print then parse unchanged.
pub fn corpus_round_trip() -> Result<usize, String> {
    let c = builtin_corpus();
    let stmts = c
        .theorems
        .iter()
        .flat_map(|t| std::iter::once(&t.as_printed).chain(t.corrected.iter()))
        .chain(c.bases.iter().filter_map(|b| b.statement.as_ref()));
    let mut count = 0;
    for s in stmts {
        let printed = s.to_string();
        let back = parse_statement(&printed).map_err(|e| format!("{printed}: {e}"))?;
        if &back != s || back.to_string() != printed {
            return Err(format!("{printed} reparsed differently"));
        }
        count += 1;
    }
    Ok(count)
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0i64..40).prop_map(Expr::int),
        (1i64..40, 2i64..12).prop_map(|(p, q)| Expr::Const(BigRational::new(BigInt::from(p), BigInt::from(q)))),
        prop::sample::select(vec!["x", "a", "b", "y"]).prop_map(Expr::var),
        Just(Expr::Floor(Box::new(Expr::var("x")))),
        Just(Expr::Frac(Box::new(Expr::var("x")))),
    ]
}

pub fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 40, 3, |inner| {
        let b = |e: Expr| Box::new(e);
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(move |(l, r)| Expr::Add(b(l), b(r))),
            (inner.clone(), inner.clone()).prop_map(move |(l, r)| Expr::Sub(b(l), b(r))),
            (inner.clone(), inner.clone()).prop_map(move |(l, r)| Expr::Mul(b(l), b(r))),
            (inner.clone(), inner.clone()).prop_map(move |(l, r)| Expr::Div(b(l), b(r))),
            inner.clone().prop_map(move |e| Expr::Neg(b(e))),
            (inner.clone(), 0u32..6).prop_map(move |(e, k)| Expr::Pow(b(e), k)),
            (inner.clone(), 2u32..5).prop_map(move |(e, k)| Expr::Root(b(e), k)),
            inner.clone().prop_map(move |e| Expr::Abs(b(e))),
            inner.clone().prop_map(move |e| Expr::Exp(b(e))),
            inner.clone().prop_map(move |e| Expr::Sin(b(e))),
            inner.clone().prop_map(move |e| Expr::Cos(b(e))),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::Min),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::Max),
        ]
    })
}

/// Corpus statements plus `cases` generated expressions round-trip through the printer.
pub fn round_trip(cases: usize, seed: u64) -> Result<usize, String> {
    let corpus = corpus_round_trip()?;
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut runner = TestRunner::new_with_rng(
        Config { cases: cases as u32, failure_persistence: None, ..Config::default() },
        TestRng::from_seed(RngAlgorithm::ChaCha, &key),
    );
    runner
        .run(&expr(), |e| {
            let printed = e.to_string();
            prop_assert_eq!(parse_expr(&printed).ok(), Some(e), "{}", printed);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(corpus + cases)
}
