//! Theorem and base-inequality records, the text format they are stored in,
//! and the built-in corpus.

mod format;

use std::fmt;
use std::path::Path;
use std::sync::LazyLock;

use num_rational::BigRational;
use thiserror::Error;

use crate::expr::{Expr, Statement, VarDomain, MAIN_VAR};

pub use format::{parse_corpus, to_text};

/// What a base-inequality variable is bound to.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Image {
    X,
    Floor,
    Frac,
    Param(String),
}

impl Image {
    pub fn to_expr(&self) -> Expr {
        match self {
            Image::X => Expr::var(MAIN_VAR),
            Image::Floor => Expr::Floor(Box::new(Expr::var(MAIN_VAR))),
            Image::Frac => Expr::Frac(Box::new(Expr::var(MAIN_VAR))),
            Image::Param(p) => Expr::var(p),
        }
    }

    /// Value at `x`, with parameters looked up in `params`.
    pub fn value(&self, x: f64, params: &[(String, f64)]) -> Option<f64> {
        match self {
            Image::X => Some(x),
            Image::Floor => Some(crate::expr::floor_value(x)),
            Image::Frac => Some(crate::expr::frac_value(x)),
            Image::Param(p) => params.iter().find(|(n, _)| n == p).map(|(_, v)| *v),
        }
    }
}

impl fmt::Display for Image {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Image::X => f.write_str(MAIN_VAR),
            Image::Floor => write!(f, "floor({MAIN_VAR})"),
            Image::Frac => write!(f, "frac({MAIN_VAR})"),
            Image::Param(p) => f.write_str(p),
        }
    }
}

/// Binding of base variables, in the order written.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Substitution {
    pub pairs: Vec<(String, Image)>,
}

impl Substitution {
    pub fn get(&self, var: &str) -> Option<&Image> {
        self.pairs.iter().find(|(v, _)| v == var).map(|(_, i)| i)
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|(v, _)| v.as_str())
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (v, img)) in self.pairs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}={img}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivationMode {
    /// The theorem is the substituted base, term for term.
    Verbatim,
    /// The theorem is an algebraic rearrangement of the substituted base.
    Simplified,
}

impl fmt::Display for DerivationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DerivationMode::Verbatim => "verbatim",
            DerivationMode::Simplified => "simplified",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseRecord {
    pub id: String,
    pub statement: Option<Statement>,
    /// The printed form is unusable; `statement` (if any) is a reconstruction.
    pub garbled: bool,
    pub notes: Vec<String>,
}

/// One parameter assignment used for slice certification.
pub type Slice = Vec<(String, BigRational)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheoremRecord {
    pub id: String,
    pub as_printed: Statement,
    pub corrected: Option<Statement>,
    pub base: String,
    pub substitution: Substitution,
    /// The substitution as literally written, when it differs from `substitution`.
    pub printed_substitution: Option<Substitution>,
    pub mode: DerivationMode,
    pub slices: Vec<Slice>,
    pub notes: Vec<String>,
}

impl TheoremRecord {
    /// Constraints on variables other than `x`.
    pub fn aux_params(&self) -> Vec<&VarDomain> {
        self.as_printed.domain.aux_params()
    }

    /// Numeric part of the id, for sorting (`T7` < `T12`).
    pub fn number(&self) -> u32 {
        id_number(&self.id)
    }
}

pub fn id_number(id: &str) -> u32 {
    id.trim_start_matches(|c: char| c.is_ascii_alphabetic())
        .parse()
        .unwrap_or(u32::MAX)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub theorems: Vec<TheoremRecord>,
    pub bases: Vec<BaseRecord>,
}

impl Corpus {
    pub fn theorem(&self, id: &str) -> Option<&TheoremRecord> {
        self.theorems.iter().find(|t| t.id.eq_ignore_ascii_case(id))
    }

    pub fn base(&self, id: &str) -> Option<&BaseRecord> {
        self.bases.iter().find(|b| b.id == id)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.theorems.iter().map(|t| t.id.as_str()).collect()
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("record {record}, line {line}: {message}")]
    Parse {
        record: String,
        line: usize,
        message: String,
    },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("record {id}: {}", diagnostics.join("; "))]
    Validation { id: String, diagnostics: Vec<String> },
}

static BUILTIN: LazyLock<Corpus> = LazyLock::new(|| {
    parse_corpus(include_str!("../../data/corpus.txt")).expect("built-in corpus is valid")
});

pub fn builtin_corpus() -> &'static Corpus {
    &BUILTIN
}

pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    parse_corpus(&std::fs::read_to_string(path)?)
}

fn statement_diagnostics(label: &str, s: &Statement, out: &mut Vec<String>) {
    for v in s.undeclared() {
        out.push(format!("{label}: variable `{v}` is not declared"));
    }
    for d in &s.domain.vars {
        if !d.is_sane() {
            out.push(format!("{label}: bounds of `{}` are not ordered", d.name));
        }
    }
    for side in [&s.lhs, &s.rhs] {
        side.visit(&mut |e| {
            if let Expr::Floor(a) | Expr::Frac(a) = e {
                if !matches!(a.as_ref(), Expr::Var(v) if v == MAIN_VAR) {
                    out.push(format!("{label}: floor/frac of `{a}` (only `{MAIN_VAR}` allowed)"));
                }
            }
        });
    }
}

pub fn validate_base(base: &BaseRecord) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(s) = &base.statement {
        statement_diagnostics("statement", s, &mut out);
        if s.contains_floor_or_frac() {
            out.push("statement: base inequalities must not use floor/frac".into());
        }
    } else if !base.garbled {
        out.push("missing statement".into());
    }
    if base.garbled && base.notes.is_empty() {
        out.push("garbled base without a note".into());
    }
    out
}

/// Empty iff the record is well-formed against `bases`.
pub fn validate_record(rec: &TheoremRecord, bases: &[BaseRecord]) -> Vec<String> {
    let mut out = Vec::new();
    statement_diagnostics("statement", &rec.as_printed, &mut out);
    if rec.as_printed.domain.main().is_none() {
        out.push(format!("statement: variable `{MAIN_VAR}` is not declared"));
    }
    if let Some(c) = &rec.corrected {
        statement_diagnostics("corrected", c, &mut out);
        if c.domain != rec.as_printed.domain {
            out.push("corrected: domain differs from the printed statement".into());
        }
    }
    let base = bases.iter().find(|b| b.id == rec.base);
    if base.is_none() {
        out.push(format!("base `{}` not found", rec.base));
    }
    let subs = std::iter::once(("subst", &rec.substitution))
        .chain(rec.printed_substitution.iter().map(|s| ("printed_subst", s)));
    for (label, sub) in subs {
        for (v, img) in &sub.pairs {
            if let Image::Param(p) = img {
                if p == MAIN_VAR || !rec.as_printed.domain.declares(p) {
                    out.push(format!("{label}: image `{p}` of `{v}` is not a declared parameter"));
                }
            }
        }
        if let Some(bs) = base.and_then(|b| b.statement.as_ref()) {
            for v in bs.variables() {
                if sub.get(&v).is_none() {
                    out.push(format!("{label}: base variable `{v}` is not bound"));
                }
            }
            for v in sub.vars() {
                if !bs.domain.declares(v) {
                    out.push(format!("{label}: `{v}` is not a variable of {}", rec.base));
                }
            }
        }
    }
    let aux: Vec<&str> = rec.aux_params().iter().map(|d| d.name.as_str()).collect();
    if !aux.is_empty() && rec.slices.is_empty() {
        out.push("auxiliary parameters without certification slices".into());
    }
    for slice in &rec.slices {
        for p in &aux {
            if !slice.iter().any(|(n, _)| n == p) {
                out.push(format!("slices: parameter `{p}` is not fixed"));
            }
        }
        for (n, v) in slice {
            match rec.as_printed.domain.get(n) {
                Some(d) if n != MAIN_VAR => {
                    let ok_lo = d.lower.as_ref().is_none_or(|b| {
                        *v > b.value || (b.closed && *v == b.value)
                    });
                    let ok_hi = d.upper.as_ref().is_none_or(|b| {
                        *v < b.value || (b.closed && *v == b.value)
                    });
                    if !(ok_lo && ok_hi) {
                        out.push(format!("slices: `{n}` = {v} is outside its domain"));
                    }
                }
                _ => out.push(format!("slices: `{n}` is not an auxiliary parameter")),
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_has_all_theorems() {
        let c = builtin_corpus();
        assert_eq!(c.theorems.len(), 43);
        for (i, t) in c.theorems.iter().enumerate() {
            assert_eq!(t.id, format!("T{}", i + 1));
            assert!(validate_record(t, &c.bases).is_empty(), "{}", t.id);
        }
        for b in &c.bases {
            assert!(validate_base(b).is_empty(), "{}", b.id);
        }
    }

    #[test]
    fn flagged_records_carry_notes() {
        let c = builtin_corpus();
        for id in ["T3", "T21", "T22", "T25", "T32", "T43"] {
            assert!(!c.theorem(id).unwrap().notes.is_empty(), "{id}");
        }
        for id in ["T3", "T21", "T43"] {
            assert!(c.theorem(id).unwrap().corrected.is_some(), "{id}");
        }
    }

    #[test]
    fn theorem_21_constants() {
        let t = builtin_corpus().theorem("T21").unwrap();
        assert_eq!(t.as_printed.rhs, Expr::ratio(5, 2));
        assert_eq!(t.corrected.as_ref().unwrap().rhs, Expr::ratio(5, 4));
    }

    #[test]
    fn aux_params_only_on_two_and_three() {
        let c = builtin_corpus();
        for t in &c.theorems {
            let names: Vec<&str> = t.aux_params().iter().map(|d| d.name.as_str()).collect();
            match t.id.as_str() {
                "T2" => assert_eq!(names, ["a", "b", "c"]),
                "T3" => {
                    assert_eq!(names, ["a"]);
                    let a = t.aux_params()[0];
                    let lower = a.lower.as_ref().unwrap();
                    assert!(lower.closed && lower.value == BigRational::from_integer(1.into()));
                }
                _ => assert!(names.is_empty(), "{}", t.id),
            }
        }
    }

    #[test]
    fn ids_sort_numerically() {
        assert!(id_number("T7") < id_number("T12"));
        assert_eq!(id_number("B43"), 43);
    }
}
