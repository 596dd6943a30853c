//! Line-oriented corpus text format.
//!
//! Records are blocks of `key: value` lines separated by blank lines; lines
//! starting with `#` are comments. Ids beginning with `B` are base
//! inequalities, ids beginning with `T` are theorems.

use std::collections::HashSet;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::{
    validate_base, validate_record, BaseRecord, Corpus, CorpusError, DerivationMode, Image, Slice,
    Substitution, TheoremRecord,
};
use crate::expr::{parse_statement, print_statement, MAIN_VAR};

const THEOREM_KEYS: &[&str] = &[
    "id",
    "statement",
    "corrected",
    "base",
    "subst",
    "printed_subst",
    "mode",
    "slices",
    "note",
];
const BASE_KEYS: &[&str] = &["id", "statement", "garbled", "note"];

struct Field {
    line: usize,
    key: String,
    value: String,
}

struct Raw {
    start: usize,
    fields: Vec<Field>,
}

impl Raw {
    fn id(&self) -> String {
        self.fields
            .iter()
            .find(|f| f.key == "id")
            .map_or_else(|| format!("<line {}>", self.start), |f| f.value.clone())
    }

    fn err(&self, line: usize, message: impl Into<String>) -> CorpusError {
        CorpusError::Parse {
            record: self.id(),
            line,
            message: message.into(),
        }
    }

    fn one(&self, key: &str) -> Option<&Field> {
        self.fields.iter().find(|f| f.key == key)
    }

    fn required(&self, key: &str) -> Result<&Field, CorpusError> {
        self.one(key)
            .ok_or_else(|| self.err(self.start, format!("missing `{key}`")))
    }

    fn notes(&self) -> Vec<String> {
        self.fields
            .iter()
            .filter(|f| f.key == "note")
            .map(|f| f.value.clone())
            .collect()
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), CorpusError> {
        let mut seen = HashSet::new();
        for f in &self.fields {
            if !allowed.contains(&f.key.as_str()) {
                return Err(self.err(f.line, format!("unknown key `{}`", f.key)));
            }
            if f.key != "note" && !seen.insert(f.key.as_str()) {
                return Err(self.err(f.line, format!("key `{}` given twice", f.key)));
            }
        }
        Ok(())
    }

    fn statement(&self, f: &Field) -> Result<crate::expr::Statement, CorpusError> {
        parse_statement(&f.value).map_err(|e| self.err(f.line, e.to_string()))
    }
}

fn split_records(text: &str) -> Result<Vec<Raw>, CorpusError> {
    let mut out = Vec::new();
    let mut cur: Option<Raw> = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.starts_with('#') {
            continue;
        }
        if trimmed.is_empty() {
            out.extend(cur.take());
            continue;
        }
        let raw = cur.get_or_insert_with(|| Raw {
            start: lineno,
            fields: Vec::new(),
        });
        let Some((key, value)) = trimmed.split_once(':') else {
            return Err(raw.err(lineno, "expected `key: value`"));
        };
        raw.fields.push(Field {
            line: lineno,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }
    out.extend(cur);
    Ok(out)
}

fn parse_image(s: &str) -> Option<Image> {
    let s = s.replace(' ', "");
    Some(match s.as_str() {
        "x" => Image::X,
        "floor(x)" => Image::Floor,
        "frac(x)" => Image::Frac,
        p if !p.is_empty()
            && p != MAIN_VAR
            && p.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            && p.starts_with(|c: char| c.is_ascii_alphabetic()) =>
        {
            Image::Param(p.to_string())
        }
        _ => return None,
    })
}

fn parse_substitution(raw: &Raw, f: &Field) -> Result<Substitution, CorpusError> {
    let mut pairs = Vec::new();
    for part in f.value.split(',') {
        let Some((var, img)) = part.split_once('=') else {
            return Err(raw.err(f.line, format!("expected `var=image`, found `{}`", part.trim())));
        };
        let var = var.trim().to_string();
        let image = parse_image(img)
            .ok_or_else(|| raw.err(f.line, format!("invalid image `{}`", img.trim())))?;
        if pairs.iter().any(|(v, _)| *v == var) {
            return Err(raw.err(f.line, format!("`{var}` bound twice")));
        }
        pairs.push((var, image));
    }
    Ok(Substitution { pairs })
}

fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let d: BigInt = d.trim().parse().ok()?;
            if d == BigInt::from(0) {
                return None;
            }
            Some(BigRational::new(n.trim().parse().ok()?, d))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

fn parse_slices(raw: &Raw, f: &Field) -> Result<Vec<Slice>, CorpusError> {
    f.value
        .split(';')
        .map(|slice| {
            slice
                .split(',')
                .map(|pair| {
                    let (n, v) = pair
                        .split_once('=')
                        .ok_or_else(|| raw.err(f.line, format!("expected `name=value` in `{pair}`")))?;
                    let v = parse_rational(v)
                        .ok_or_else(|| raw.err(f.line, format!("invalid value `{}`", v.trim())))?;
                    Ok((n.trim().to_string(), v))
                })
                .collect()
        })
        .collect()
}

fn parse_base(raw: &Raw) -> Result<BaseRecord, CorpusError> {
    raw.check_keys(BASE_KEYS)?;
    let statement = raw.one("statement").map(|f| raw.statement(f)).transpose()?;
    let garbled = match raw.one("garbled") {
        None => false,
        Some(f) => match f.value.as_str() {
            "true" => true,
            "false" => false,
            other => return Err(raw.err(f.line, format!("expected true or false, found `{other}`"))),
        },
    };
    Ok(BaseRecord {
        id: raw.id(),
        statement,
        garbled,
        notes: raw.notes(),
    })
}

fn parse_theorem(raw: &Raw) -> Result<TheoremRecord, CorpusError> {
    raw.check_keys(THEOREM_KEYS)?;
    let mode_field = raw.required("mode")?;
    let mode = match mode_field.value.as_str() {
        "verbatim" => DerivationMode::Verbatim,
        "simplified" => DerivationMode::Simplified,
        other => {
            return Err(raw.err(
                mode_field.line,
                format!("mode must be verbatim or simplified, found `{other}`"),
            ))
        }
    };
    Ok(TheoremRecord {
        id: raw.id(),
        as_printed: raw.statement(raw.required("statement")?)?,
        corrected: raw.one("corrected").map(|f| raw.statement(f)).transpose()?,
        base: raw.required("base")?.value.clone(),
        substitution: parse_substitution(raw, raw.required("subst")?)?,
        printed_substitution: raw
            .one("printed_subst")
            .map(|f| parse_substitution(raw, f))
            .transpose()?,
        mode,
        slices: raw
            .one("slices")
            .map(|f| parse_slices(raw, f))
            .transpose()?
            .unwrap_or_default(),
        notes: raw.notes(),
    })
}

/// Parses and validates a corpus.
pub fn parse_corpus(text: &str) -> Result<Corpus, CorpusError> {
    let mut corpus = Corpus::default();
    let mut ids = HashSet::new();
    for raw in split_records(text)? {
        let id_field = raw.required("id")?;
        let id = id_field.value.clone();
        if !ids.insert(id.clone()) {
            return Err(CorpusError::DuplicateId(id));
        }
        if id.starts_with('B') {
            corpus.bases.push(parse_base(&raw)?);
        } else if id.starts_with('T') {
            corpus.theorems.push(parse_theorem(&raw)?);
        } else {
            return Err(raw.err(id_field.line, "ids must start with T or B"));
        }
    }
    for b in &corpus.bases {
        let d = validate_base(b);
        if !d.is_empty() {
            return Err(CorpusError::Validation {
                id: b.id.clone(),
                diagnostics: d,
            });
        }
    }
    for t in &corpus.theorems {
        let d = validate_record(t, &corpus.bases);
        if !d.is_empty() {
            return Err(CorpusError::Validation {
                id: t.id.clone(),
                diagnostics: d,
            });
        }
    }
    Ok(corpus)
}

fn write_base(b: &BaseRecord, out: &mut String) {
    let _ = writeln!(out, "id: {}", b.id);
    if let Some(s) = &b.statement {
        let _ = writeln!(out, "statement: {}", print_statement(s));
    }
    if b.garbled {
        out.push_str("garbled: true\n");
    }
    for n in &b.notes {
        let _ = writeln!(out, "note: {n}");
    }
    out.push('\n');
}

fn rational_text(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn write_theorem(t: &TheoremRecord, out: &mut String) {
    let _ = writeln!(out, "id: {}", t.id);
    let _ = writeln!(out, "statement: {}", print_statement(&t.as_printed));
    if let Some(c) = &t.corrected {
        let _ = writeln!(out, "corrected: {}", print_statement(c));
    }
    let _ = writeln!(out, "base: {}", t.base);
    let _ = writeln!(out, "subst: {}", t.substitution);
    if let Some(p) = &t.printed_substitution {
        let _ = writeln!(out, "printed_subst: {p}");
    }
    let _ = writeln!(out, "mode: {}", t.mode);
    if !t.slices.is_empty() {
        let slices: Vec<String> = t
            .slices
            .iter()
            .map(|s| {
                s.iter()
                    .map(|(n, v)| format!("{n}={}", rational_text(v)))
                    .collect::<Vec<_>>()
                    .join(", ")
            })
            .collect();
        let _ = writeln!(out, "slices: {}", slices.join("; "));
    }
    for n in &t.notes {
        let _ = writeln!(out, "note: {n}");
    }
    out.push('\n');
}

/// Serializes a corpus; each base is written just before the first theorem using it.
pub fn to_text(c: &Corpus) -> String {
    let mut out = String::new();
    let mut written = HashSet::new();
    for t in &c.theorems {
        if let Some(b) = c.base(&t.base) {
            if written.insert(b.id.clone()) {
                write_base(b, &mut out);
            }
        }
        write_theorem(t, &mut out);
    }
    for b in &c.bases {
        if written.insert(b.id.clone()) {
            write_base(b, &mut out);
        }
    }
    out
}
