//! Printer producing text that re-parses to the same tree.

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::{Expr, Statement, VarDomain};

const ADD: u8 = 1;
const MUL: u8 = 2;
const NEG: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn rational_text(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn is_int_const(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if c.is_integer() && !c.is_negative())
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Const(c) if c.is_negative() || c.is_integer() => ATOM,
        Expr::Const(_) => MUL,
        Expr::Add(..) | Expr::Sub(..) => ADD,
        Expr::Mul(..) | Expr::Div(..) => MUL,
        Expr::Neg(_) => NEG,
        Expr::Pow(..) => POW,
        _ => ATOM,
    }
}

fn write(e: &Expr, min: u8, out: &mut String) {
    if prec(e) < min {
        out.push('(');
        write(e, 0, out);
        out.push(')');
        return;
    }
    match e {
        Expr::Const(c) => {
            if c.is_negative() {
                out.push_str("(-");
                out.push_str(&rational_text(&-c));
                out.push(')');
            } else {
                out.push_str(&rational_text(c));
            }
        }
        Expr::Var(v) => out.push_str(v),
        Expr::Add(a, b) => binary(a, " + ", b, ADD, MUL, out),
        Expr::Sub(a, b) => binary(a, " - ", b, ADD, MUL, out),
        Expr::Mul(a, b) => binary(a, "*", b, MUL, NEG, out),
        Expr::Div(a, b) => {
            // `3/4` would re-read as a single literal
            let literal_clash = is_int_const(b)
                && (is_int_const(a) || matches!(a.as_ref(), Expr::Neg(x) if is_int_const(x)));
            if literal_clash {
                out.push('(');
                write(a, 0, out);
                out.push(')');
            } else {
                write(a, MUL, out);
            }
            out.push('/');
            write(b, NEG, out);
        }
        Expr::Neg(a) => {
            out.push('-');
            match a.as_ref() {
                Expr::Const(c) if min <= MUL && !c.is_integer() && c.is_positive() => {
                    out.push_str(&rational_text(c))
                }
                _ => write(a, POW, out),
            }
        }
        Expr::Pow(a, k) => {
            write(a, ATOM, out);
            out.push('^');
            out.push_str(&k.to_string());
        }
        Expr::Root(a, k) => {
            let name = match k {
                2 => "sqrt",
                3 => "cbrt",
                4 => "root4",
                _ => panic!("unsupported root order {k}"),
            };
            call(name, std::slice::from_ref(a.as_ref()), out);
        }
        Expr::Abs(a) => call("abs", std::slice::from_ref(a.as_ref()), out),
        Expr::Exp(a) => call("exp", std::slice::from_ref(a.as_ref()), out),
        Expr::Sin(a) => call("sin", std::slice::from_ref(a.as_ref()), out),
        Expr::Cos(a) => call("cos", std::slice::from_ref(a.as_ref()), out),
        Expr::Floor(a) => call("floor", std::slice::from_ref(a.as_ref()), out),
        Expr::Frac(a) => call("frac", std::slice::from_ref(a.as_ref()), out),
        Expr::Min(args) => call("min", args, out),
        Expr::Max(args) => call("max", args, out),
    }
}

fn binary(a: &Expr, op: &str, b: &Expr, left: u8, right: u8, out: &mut String) {
    write(a, left, out);
    out.push_str(op);
    write(b, right, out);
}

fn call(name: &str, args: &[Expr], out: &mut String) {
    out.push_str(name);
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write(a, 0, out);
    }
    out.push(')');
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write(e, 0, &mut out);
    out
}

fn signed_text(r: &BigRational) -> String {
    if r.is_negative() {
        format!("-{}", rational_text(&-r))
    } else if r.is_zero() {
        "0".to_string()
    } else {
        rational_text(r)
    }
}

fn constraints(d: &VarDomain) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(b) = &d.lower {
        let op = if b.closed { ">=" } else { ">" };
        out.push(format!("{}{op}{}", d.name, signed_text(&b.value)));
    }
    if let Some(b) = &d.upper {
        let op = if b.closed { "<=" } else { "<" };
        out.push(format!("{}{op}{}", d.name, signed_text(&b.value)));
    }
    if d.real_line {
        out.push(format!("{} in R", d.name));
    }
    if d.exclude_integers {
        out.push(format!("{} notin Z", d.name));
    }
    out
}

pub fn print_statement(s: &Statement) -> String {
    let domain: Vec<String> = s.domain.vars.iter().flat_map(constraints).collect();
    format!(
        "{} {} {} on {}",
        print_expr(&s.lhs),
        s.relation.symbol(),
        print_expr(&s.rhs),
        domain.join(", ")
    )
}

#[cfg(test)]
mod tests {
    use super::super::{parse_expr, parse_statement};
    use super::*;

    fn round_trip(src: &str) {
        let e = parse_expr(src).unwrap();
        let printed = print_expr(&e);
        assert_eq!(parse_expr(&printed).unwrap(), e, "{src} -> {printed}");
    }

    #[test]
    fn rationals_print_exactly() {
        assert_eq!(print_expr(&Expr::ratio(4, 15)), "4/15");
        assert_eq!(print_expr(&Expr::ratio(-4, 15)), "(-4/15)");
        assert_eq!(
            print_expr(&(Expr::var("x") * Expr::ratio(4, 15))),
            "x*(4/15)"
        );
    }

    #[test]
    fn min_list_syntax() {
        let e = Expr::Min(vec![Expr::var("x"), Expr::int(1)]);
        assert_eq!(print_expr(&e), "min(x, 1)");
    }

    #[test]
    fn tricky_round_trips() {
        for src in [
            "(3)/4",
            "-3/4",
            "(-3)/4",
            "3/4/5",
            "x/2/3",
            "3/4^2",
            "(3/4)^2",
            "-(3/4)*x",
            "x*-(3/4)",
            "-1/2/3",
            "x - 3/4*x",
            "x*-y",
            "-(-x)",
            "(x^2)^3",
            "x - (y - z)",
            "x/(y*z)",
            "(x + 1)*(x - 1)",
            "cbrt(x*y)^3",
            "3/2*(x^2 + floor(x)*frac(x))",
            "max(floor(x)^2, (floor(x) - frac(x))^2)",
        ] {
            round_trip(src);
        }
    }

    #[test]
    fn statement_round_trip() {
        let s = parse_statement("x*a >= -1/2 on x>1, x notin Z, a>=1, y in R, y<3").unwrap();
        let printed = print_statement(&s);
        assert_eq!(printed, "x*a >= -1/2 on x>1, x notin Z, a>=1, y<3, y in R");
        assert_eq!(parse_statement(&printed).unwrap(), s);
    }
}
