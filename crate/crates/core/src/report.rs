//! Per-theorem reports, their JSON and Markdown renderings, and the exit-code rule.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::certifier::{certify_statement, probe_integer_points, CertifiedRegion, IntegerProbe, VerdictKind};
use crate::config::{OutputFormat, RunConfig};
use crate::corpus::{id_number, BaseRecord, TheoremRecord};
use crate::derivation::{check_derivation, DerivationCheck, DerivationReport, DerivationStatus, DisagreementKind};
use crate::expr::Statement;
use crate::falsifier::{falsify_statement, slice_anchors, Counterexample, PointSample};

/// Which analyses a run performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub falsify: bool,
    pub certify: bool,
    pub derive: bool,
}

impl Stages {
    pub const ALL: Stages = Stages { falsify: true, certify: true, derive: true };
    pub const CHECK: Stages = Stages { falsify: true, certify: true, derive: false };
    pub const FALSIFY: Stages = Stages { falsify: true, certify: false, derive: false };
    pub const DERIVE: Stages = Stages { falsify: false, certify: false, derive: true };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionReport {
    pub statement: String,
    pub status: Option<VerdictKind>,
    pub certified_region: Option<CertifiedRegion>,
    pub margin_lower_bound: Option<f64>,
    pub witness: Option<Counterexample>,
    /// Negative point value the interval re-check could not confirm.
    pub unconfirmed: Option<Counterexample>,
    pub min_observed: Option<PointSample>,
    pub tail_samples_ok: Option<bool>,
    pub slice_certified: bool,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoremReport {
    pub id: String,
    #[serde(flatten)]
    pub as_printed: VersionReport,
    pub corrected: Option<VersionReport>,
    pub derivation: Option<DerivationCheck>,
    pub integer_points: Vec<IntegerProbe>,
    pub notes: Vec<String>,
    /// Not rendered, so that output is reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl PartialEq for TheoremReport {
    fn eq(&self, o: &Self) -> bool {
        self.id == o.id
            && self.as_printed == o.as_printed
            && self.corrected == o.corrected
            && self.derivation == o.derivation
            && self.integer_points == o.integer_points
            && self.notes == o.notes
    }
}

impl TheoremReport {
    /// The printed or the corrected statement was certified (and the derivation, if run, is consistent).
    pub fn settled(&self, stages: Stages) -> bool {
        let certified = |v: &VersionReport| v.status == Some(VerdictKind::Certified);
        let verdict_ok = !stages.certify
            || certified(&self.as_printed)
            || self.corrected.as_ref().is_some_and(certified);
        let derivation_ok = !stages.derive
            || self
                .derivation
                .as_ref()
                .is_some_and(|d| d.best_status() == DerivationStatus::Consistent);
        verdict_ok && derivation_ok
    }

    pub fn falsified(&self) -> bool {
        self.as_printed.status == Some(VerdictKind::Falsified)
    }

    pub fn discrepant(&self) -> bool {
        self.derivation
            .as_ref()
            .is_some_and(|d| d.as_printed.status == DerivationStatus::Discrepant)
    }
}

fn analyze_version(
    rec: &TheoremRecord,
    stmt: &Statement,
    version: &str,
    cfg: &RunConfig,
    stages: Stages,
) -> VersionReport {
    let mut out = VersionReport {
        statement: stmt.to_string(),
        status: None,
        certified_region: None,
        margin_lower_bound: None,
        witness: None,
        unconfirmed: None,
        min_observed: None,
        tail_samples_ok: None,
        slice_certified: false,
        reasons: vec![],
    };
    let falsification = stages
        .falsify
        .then(|| falsify_statement(stmt, &rec.id, version, &slice_anchors(rec), cfg));
    if stages.certify {
        let mut v = certify_statement(stmt, &rec.slices, cfg);
        if let Some(f) = &falsification {
            v = v.with_witness(f);
        }
        out.status = Some(v.kind);
        out.margin_lower_bound = v.margin_lower_bound;
        out.tail_samples_ok = Some(v.tail_samples_ok);
        out.slice_certified = v.slice_certified;
        out.reasons = v.reasons;
        out.certified_region = Some(v.certified_region);
    }
    if let Some(f) = falsification {
        if out.status.is_none() || f.witness.as_ref().is_some_and(|w| w.rigorous) {
            out.status = Some(if f.witness.is_some() {
                VerdictKind::Falsified
            } else {
                VerdictKind::Undecided
            });
        }
        out.witness = f.witness;
        out.unconfirmed = f.unconfirmed;
        out.min_observed = f.min_observed;
    }
    out
}

/// Runs the selected analyses on one theorem.
pub fn analyze(rec: &TheoremRecord, bases: &[BaseRecord], cfg: &RunConfig, stages: Stages) -> TheoremReport {
    let start = Instant::now();
    let as_printed = analyze_version(rec, &rec.as_printed, "as_printed", cfg, stages);
    let corrected = rec
        .corrected
        .as_ref()
        .filter(|_| stages.falsify || stages.certify)
        .map(|c| analyze_version(rec, c, "corrected", cfg, stages));
    let integer_points = if stages.certify {
        probe_integer_points(&rec.as_printed, &rec.slices, cfg.n_max)
    } else {
        vec![]
    };
    TheoremReport {
        id: rec.id.clone(),
        as_printed,
        corrected,
        derivation: stages.derive.then(|| check_derivation(rec, bases, cfg)),
        integer_points,
        notes: rec.notes.clone(),
        wall_time: start.elapsed(),
    }
}

/// 1 if anything is falsified (or a printed derivation is discrepant), 0 if every
/// theorem is settled, 2 otherwise.
pub fn exit_code(reports: &[TheoremReport], stages: Stages) -> i32 {
    if reports.iter().any(|r| r.falsified() || r.discrepant()) {
        1
    } else if reports.iter().all(|r| r.settled(stages)) {
        0
    } else {
        2
    }
}

fn sorted(reports: &[TheoremReport]) -> Vec<&TheoremReport> {
    let mut v: Vec<&TheoremReport> = reports.iter().collect();
    v.sort_by(|a, b| id_number(&a.id).cmp(&id_number(&b.id)).then(a.id.cmp(&b.id)));
    v
}

pub fn num(v: f64) -> String {
    if v == 0.0 || (1e-3..1e6).contains(&v.abs()) {
        let s = format!("{v:.6}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".into() } else { s.to_string() }
    } else {
        format!("{v:.4e}")
    }
}

fn point(p: &PointSample) -> String {
    let mut s = format!("x = {}", num(p.x));
    for (n, v) in &p.params {
        let _ = write!(s, ", {n} = {}", num(*v));
    }
    s
}

fn status_cell(v: &VersionReport) -> String {
    let mut s = v.status.map_or("-", VerdictKind::as_str).to_string();
    if v.slice_certified && v.status == Some(VerdictKind::Certified) {
        s.push_str(" (slices)");
    }
    s
}

fn derivation_line(label: &str, d: &DerivationReport) -> String {
    let mut s = format!(
        "{label} ({}, base {}, {}): {}, {} of {} samples disagree",
        d.mode,
        d.base,
        d.substitution,
        d.status.as_str(),
        d.disagreement_count,
        d.samples_tested
    );
    if let Some(first) = d.disagreements.first() {
        let what = match first.kind {
            DisagreementKind::SignFlip => "sign flip",
            DisagreementKind::ValueMismatch => "side values differ",
        };
        let _ = write!(
            s,
            "; first at x = {}{}: {what}, theorem margin {}, instance margin {}",
            num(first.x),
            first.params.iter().map(|(n, v)| format!(", {n} = {}", num(*v))).collect::<String>(),
            num(first.theorem_margin),
            num(first.instance_margin)
        );
    }
    if let Some(r) = &d.reason {
        let _ = write!(s, " ({r})");
    }
    s
}

fn render_md(reports: &[&TheoremReport]) -> String {
    let mut out = String::from("# floorcheck report\n\n");
    out.push_str("| id | as printed | corrected | margin lower bound | derivation |\n");
    out.push_str("|---|---|---|---|---|\n");
    for r in reports {
        let bound = r
            .corrected
            .as_ref()
            .filter(|_| r.falsified())
            .unwrap_or(&r.as_printed)
            .margin_lower_bound
            .map_or("-".into(), num);
        let derivation = r.derivation.as_ref().map_or("-", |d| d.as_printed.status.as_str());
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            r.id,
            status_cell(&r.as_printed),
            r.corrected.as_ref().map_or("-".into(), status_cell),
            bound,
            derivation
        );
    }

    out.push_str("\n## Errata\n");
    let flagged: Vec<&&TheoremReport> = reports
        .iter()
        .filter(|r| {
            r.falsified()
                || r.discrepant()
                || r.derivation.as_ref().is_some_and(|d| {
                    d.printed_substitution
                        .as_ref()
                        .is_some_and(|p| p.status == DerivationStatus::Discrepant)
                })
        })
        .collect();
    if flagged.is_empty() {
        out.push_str("\nNone.\n");
    }
    for r in flagged {
        let _ = writeln!(out, "\n### {}\n", r.id);
        let _ = writeln!(out, "- Statement: `{}`", r.as_printed.statement);
        if let Some(w) = &r.as_printed.witness {
            let _ = writeln!(
                out,
                "- Falsified at {}: lhs {}, rhs {}, margin {}{}",
                point(&w.point),
                num(w.point.lhs),
                num(w.point.rhs),
                num(w.point.margin),
                if w.rigorous { " (interval-confirmed)" } else { "" }
            );
        }
        if let Some(c) = &r.corrected {
            let _ = writeln!(
                out,
                "- Corrected: `{}`: {}{}",
                c.statement,
                status_cell(c),
                c.margin_lower_bound.map_or(String::new(), |b| format!(", margin >= {}", num(b)))
            );
        }
        if let Some(d) = &r.derivation {
            let _ = writeln!(out, "- {}", derivation_line("Derivation", &d.as_printed));
            if let Some(c) = &d.corrected {
                let _ = writeln!(out, "- {}", derivation_line("Derivation of the correction", c));
            }
            if let Some(p) = &d.printed_substitution {
                let _ = writeln!(out, "- {}", derivation_line("Printed substitution", p));
            }
        }
        for n in &r.notes {
            let _ = writeln!(out, "- Note: {n}");
        }
    }

    let excluded: Vec<(&str, Vec<String>)> = reports
        .iter()
        .map(|r| {
            let xs = r
                .integer_points
                .iter()
                .filter(|p| p.excluded.is_some())
                .map(|p| match p.slice {
                    Some(s) => format!("{} (slice {s})", p.x),
                    None => p.x.to_string(),
                })
                .collect::<Vec<_>>();
            (r.id.as_str(), xs)
        })
        .filter(|(_, xs)| !xs.is_empty())
        .collect();
    if !excluded.is_empty() {
        out.push_str("\n## Excluded integer points\n\n");
        for (id, xs) in excluded {
            let _ = writeln!(out, "- {id}: {}", xs.join(", "));
        }
    }

    let undecided: Vec<(&str, &str, &Vec<String>)> = reports
        .iter()
        .flat_map(|r| {
            std::iter::once(("as printed", &r.as_printed))
                .chain(r.corrected.iter().map(|c| ("corrected", c)))
                .filter(|(_, v)| v.status == Some(VerdictKind::Undecided) && !v.reasons.is_empty())
                .map(move |(l, v)| (r.id.as_str(), l, &v.reasons))
        })
        .collect();
    if !undecided.is_empty() {
        out.push_str("\n## Undecided\n\n");
        for (id, label, reasons) in undecided {
            let _ = writeln!(out, "- {id} ({label}): {}", reasons.join("; "));
        }
    }
    out
}

/// Renders reports sorted by theorem number.
pub fn render_report(reports: &[TheoremReport], format: OutputFormat) -> String {
    let reports = sorted(reports);
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&reports).expect("reports serialize");
            s.push('\n');
            s
        }
        OutputFormat::Md => render_md(&reports),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::builtin_corpus;

    fn quick() -> RunConfig {
        RunConfig { n_max: 4, samples: 500, ..RunConfig::default() }
    }

    fn report(id: &str, stages: Stages) -> TheoremReport {
        let c = builtin_corpus();
        analyze(c.theorem(id).unwrap(), &c.bases, &quick(), stages)
    }

    #[test]
    fn md_table_rows() {
        let rs = vec![report("T21", Stages::ALL), report("T1", Stages::ALL)];
        let md = render_report(&rs, OutputFormat::Md);
        let rows: Vec<&str> = md.lines().filter(|l| l.starts_with("| T")).collect();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].starts_with("| T1 | certified"));
        assert!(rows[1].starts_with("| T21 | falsified | certified"));
        assert!(md.contains("### T21"));
        assert_eq!(md, render_report(&rs, OutputFormat::Md));
    }

    #[test]
    fn json_keys_and_round_trip() {
        let rs = vec![report("T3", Stages::ALL)];
        let json = render_report(&rs, OutputFormat::Json);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["id", "status", "certified_region", "margin_lower_bound", "witness", "derivation", "notes"] {
            assert!(v[0].get(key).is_some(), "{key}");
        }
        let back: Vec<TheoremReport> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rs);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&[report("T1", Stages::CHECK)], Stages::CHECK), 0);
        assert_eq!(exit_code(&[report("T21", Stages::CHECK)], Stages::CHECK), 1);
        assert_eq!(exit_code(&[report("T12", Stages::CHECK)], Stages::CHECK), 2);
        assert_eq!(exit_code(&[report("T21", Stages::FALSIFY)], Stages::FALSIFY), 1);
        assert_eq!(exit_code(&[report("T1", Stages::DERIVE)], Stages::DERIVE), 0);
    }

    #[test]
    fn number_format() {
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(-1.0 / 6.0), "-0.166667");
        assert_eq!(num(1e-9), "1.0000e-9");
        assert_eq!(num(0.0), "0");
    }
}
