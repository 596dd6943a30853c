//! Base-inequality instantiation and sign agreement with the theorem statement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{unit_seed, RunConfig, MIN_SAMPLES};
use crate::corpus::{BaseRecord, DerivationMode, Substitution, TheoremRecord};
use crate::expr::{fold_constants, substitute, Domain, MarginProgram, PointMargin, Relation, Statement, MAIN_VAR};
use crate::falsifier::ParamStrategy;
use crate::piecewise::branch_range;

/// Margins within this multiple of the scale count as zero.
pub const ZERO_BAND: f64 = 1e-12;
/// Relative tolerance for term-for-term value agreement.
pub const VALUE_TOL: f64 = 1e-9;
/// Width of the sampling zone at each end of a branch.
pub const EDGE_ZONE: f64 = 1e-3;
/// Disagreement points kept in a report.
pub const MAX_LISTED: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DerivationError {
    #[error("base variable `{0}` has no image")]
    IncompleteSubstitution(String),
    #[error("base {0} has no usable statement")]
    MissingStatement(String),
}

/// The base statement with every variable replaced by its image; the domain is the theorem's.
pub fn instantiate_base(
    base: &BaseRecord,
    subst: &Substitution,
    domain: &Domain,
) -> Result<Statement, DerivationError> {
    let stmt = base
        .statement
        .as_ref()
        .ok_or_else(|| DerivationError::MissingStatement(base.id.clone()))?;
    if let Some(v) = stmt.variables().into_iter().find(|v| subst.get(v).is_none()) {
        return Err(DerivationError::IncompleteSubstitution(v));
    }
    let map = |e| fold_constants(&substitute(e, &|name| subst.get(name).map(|i| i.to_expr())));
    Ok(Statement {
        lhs: map(&stmt.lhs),
        rhs: map(&stmt.rhs),
        relation: stmt.relation,
        domain: domain.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivationStatus {
    Consistent,
    Discrepant,
    Untestable,
}

impl DerivationStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            DerivationStatus::Consistent => "consistent",
            DerivationStatus::Discrepant => "discrepant",
            DerivationStatus::Untestable => "untestable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisagreementKind {
    /// The two margins have opposite signs.
    SignFlip,
    /// Verbatim mode: a side of the theorem differs from the instance's.
    ValueMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disagreement {
    pub x: f64,
    pub params: Vec<(String, f64)>,
    pub theorem_margin: f64,
    pub instance_margin: f64,
    pub kind: DisagreementKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivationReport {
    pub id: String,
    pub version: String,
    pub mode: DerivationMode,
    pub base: String,
    pub substitution: String,
    pub instance: Option<String>,
    pub samples_tested: usize,
    pub agreements: usize,
    /// Points where either side could not be evaluated.
    pub skipped: usize,
    pub disagreement_count: usize,
    /// The first few disagreements, in sampling order.
    pub disagreements: Vec<Disagreement>,
    pub status: DerivationStatus,
    pub reason: Option<String>,
}

impl DerivationReport {
    fn untestable(id: &str, version: &str, rec: &TheoremRecord, sub: &Substitution, reason: String) -> Self {
        DerivationReport {
            id: id.to_string(),
            version: version.to_string(),
            mode: rec.mode,
            base: rec.base.clone(),
            substitution: sub.to_string(),
            instance: None,
            samples_tested: 0,
            agreements: 0,
            skipped: 0,
            disagreement_count: 0,
            disagreements: vec![],
            status: DerivationStatus::Untestable,
            reason: Some(reason),
        }
    }
}

/// Outcome of one agreement run, before labelling.
#[derive(Debug, Clone, PartialEq)]
pub struct Agreement {
    pub samples_tested: usize,
    pub agreements: usize,
    pub skipped: usize,
    pub disagreement_count: usize,
    pub disagreements: Vec<Disagreement>,
}

impl Agreement {
    pub fn status(&self, min_samples: usize) -> DerivationStatus {
        if self.disagreement_count > 0 {
            DerivationStatus::Discrepant
        } else if self.samples_tested < min_samples {
            DerivationStatus::Untestable
        } else {
            DerivationStatus::Consistent
        }
    }
}

/// -1, 0 or 1, with margins inside the zero band counted as 0.
pub fn sign(m: &PointMargin) -> i8 {
    if m.margin.abs() <= ZERO_BAND * m.scale() {
        0
    } else if m.margin > 0.0 {
        1
    } else {
        -1
    }
}

fn mirrored(a: Relation, b: Relation) -> bool {
    a.lhs_minus_rhs() != b.lhs_minus_rhs()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= VALUE_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Sample points `(x, params)`: half uniform over the first branches, half near branch ends.
pub fn sample_points(domain: &Domain, n_max: i64, count: usize, span: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Some(main) = domain.main() else {
        return vec![];
    };
    let strategy = ParamStrategy::for_params(&domain.aux_params(), span);
    let branches = branch_range(domain, n_max);
    let (lo, hi) = if main.real_line {
        (-(n_max as f64 + 1.0), n_max as f64 + 1.0)
    } else {
        (main.lower_f64().unwrap_or(0.0), n_max as f64 + 1.0)
    };
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 20 * count.max(1) {
        attempts += 1;
        let x = if out.len() % 2 == 0 {
            rng.random_range(lo..hi)
        } else {
            let n = branches[rng.random_range(0..branches.len())] as f64;
            let d = rng.random_range(f64::MIN_POSITIVE..EDGE_ZONE);
            if rng.random_bool(0.5) {
                n + d
            } else {
                n + 1.0 - d
            }
        };
        if !main.admits(x) {
            continue;
        }
        let mut p = vec![x];
        p.extend(strategy.sample(&mut rng));
        out.push(p);
    }
    out
}

/// Compares margin signs of `theorem` and `instance` at seeded sample points;
/// in verbatim mode the sides must also agree in value.
pub fn sign_agreement(
    theorem: &Statement,
    instance: &Statement,
    mode: DerivationMode,
    cfg: &RunConfig,
    seed: u64,
) -> Agreement {
    let mut names = vec![MAIN_VAR.to_string()];
    names.extend(theorem.domain.aux_params().iter().map(|d| d.name.clone()));
    let mut agreement = Agreement {
        samples_tested: 0,
        agreements: 0,
        skipped: 0,
        disagreement_count: 0,
        disagreements: vec![],
    };
    let (Ok(tp), Ok(ip)) = (
        MarginProgram::with_vars(theorem, &names),
        MarginProgram::with_vars(instance, &names),
    ) else {
        return agreement;
    };
    let swap = mirrored(theorem.relation, instance.relation);
    for p in sample_points(&theorem.domain, cfg.n_max, cfg.samples, cfg.param_span, seed) {
        let (Ok(tm), Ok(im)) = (tp.point(&p), ip.point(&p)) else {
            agreement.skipped += 1;
            continue;
        };
        if !(tm.margin.is_finite() && im.margin.is_finite()) {
            agreement.skipped += 1;
            continue;
        }
        agreement.samples_tested += 1;
        let kind = if sign(&tm) * sign(&im) < 0 {
            Some(DisagreementKind::SignFlip)
        } else if mode == DerivationMode::Verbatim && {
            let (l, r) = if swap { (im.rhs, im.lhs) } else { (im.lhs, im.rhs) };
            !(close(tm.lhs, l) && close(tm.rhs, r))
        } {
            Some(DisagreementKind::ValueMismatch)
        } else {
            None
        };
        match kind {
            None => agreement.agreements += 1,
            Some(kind) => {
                agreement.disagreement_count += 1;
                if agreement.disagreements.len() < MAX_LISTED {
                    agreement.disagreements.push(Disagreement {
                        x: p[0],
                        params: names[1..].iter().cloned().zip(p[1..].iter().copied()).collect(),
                        theorem_margin: tm.margin,
                        instance_margin: im.margin,
                        kind,
                    });
                }
            }
        }
    }
    agreement
}

fn run_version(
    rec: &TheoremRecord,
    theorem: &Statement,
    version: &str,
    sub: &Substitution,
    bases: &[BaseRecord],
    cfg: &RunConfig,
) -> DerivationReport {
    let Some(base) = bases.iter().find(|b| b.id == rec.base) else {
        return DerivationReport::untestable(&rec.id, version, rec, sub, format!("base {} not found", rec.base));
    };
    let instance = match instantiate_base(base, sub, &theorem.domain) {
        Ok(s) => s,
        Err(e) => return DerivationReport::untestable(&rec.id, version, rec, sub, e.to_string()),
    };
    let seed = unit_seed(cfg.seed, &rec.id, &format!("derive:{version}"), 0);
    let a = sign_agreement(theorem, &instance, rec.mode, cfg, seed);
    let status = a.status(MIN_SAMPLES);
    let reason = match status {
        DerivationStatus::Untestable => Some(format!(
            "only {} of {} samples could be evaluated",
            a.samples_tested, cfg.samples
        )),
        _ => None,
    };
    DerivationReport {
        id: rec.id.clone(),
        version: version.to_string(),
        mode: rec.mode,
        base: base.id.clone(),
        substitution: sub.to_string(),
        instance: Some(instance.to_string()),
        samples_tested: a.samples_tested,
        agreements: a.agreements,
        skipped: a.skipped,
        disagreement_count: a.disagreement_count,
        disagreements: a.disagreements,
        status,
        reason,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivationCheck {
    pub as_printed: DerivationReport,
    pub corrected: Option<DerivationReport>,
    /// The literally printed substitution, when the corpus uses a different one.
    pub printed_substitution: Option<DerivationReport>,
}

impl DerivationCheck {
    /// Consistent for the corrected statement if there is one, else for the printed one.
    pub fn best_status(&self) -> DerivationStatus {
        self.corrected.as_ref().unwrap_or(&self.as_printed).status
    }
}

pub fn check_derivation(rec: &TheoremRecord, bases: &[BaseRecord], cfg: &RunConfig) -> DerivationCheck {
    DerivationCheck {
        as_printed: run_version(rec, &rec.as_printed, "as_printed", &rec.substitution, bases, cfg),
        corrected: rec
            .corrected
            .as_ref()
            .map(|c| run_version(rec, c, "corrected", &rec.substitution, bases, cfg)),
        printed_substitution: rec
            .printed_substitution
            .as_ref()
            .map(|s| run_version(rec, &rec.as_printed, "printed_substitution", s, bases, cfg)),
    }
}
