//! Interval branch-and-bound proving `margin >= 0` (or `> 0`) branch by branch.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::corpus::{Slice, TheoremRecord};
use crate::expr::{rational_to_f64, MarginProgram, Statement};
use crate::falsifier::{Counterexample, FalsifyOutcome};
use crate::numerics::Interval;
use crate::parallel::par_map;
use crate::piecewise::{
    branch_range, constant_margin, effective_t_domain, specialize_branch, BranchProblem,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Certified,
    Falsified,
    Undecided,
}

impl VerdictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::Certified => "certified",
            VerdictKind::Falsified => "falsified",
            VerdictKind::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchStatus {
    Certified,
    Undecided,
    /// A denominator vanishes identically; the branch lies outside the statement's domain of definition.
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliverKind {
    /// A denominator vanishes at the branch start.
    SingularDenominator,
    /// Not certified; the margin may approach zero there.
    OpenBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sliver {
    pub n: i64,
    pub lo: f64,
    pub hi: f64,
    pub kind: SliverKind,
}

/// A t-interval with its certified margin lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TBox {
    pub lo: f64,
    pub hi: f64,
    pub margin_lo: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchVerdict {
    pub n: i64,
    /// Index into the record's parameter slices.
    pub slice: Option<usize>,
    pub status: BranchStatus,
    /// The effective t-domain that was bisected.
    pub t_region: Option<[f64; 2]>,
    pub margin_lower_bound: Option<f64>,
    /// The margin reduced to an exact constant on this branch.
    pub exact_constant: bool,
    pub unresolved: Vec<[f64; 2]>,
    pub slivers: Vec<Sliver>,
    pub boxes: usize,
    pub reason: Option<String>,
    /// Smallest point margin seen, with its `t`.
    pub best_point: Option<[f64; 2]>,
    #[serde(skip)]
    pub accepted: Vec<TBox>,
}

impl BranchVerdict {
    fn empty(n: i64, status: BranchStatus, reason: Option<String>) -> Self {
        BranchVerdict {
            n,
            slice: None,
            status,
            t_region: None,
            margin_lower_bound: None,
            exact_constant: false,
            unresolved: vec![],
            slivers: vec![],
            boxes: 0,
            reason,
            best_point: None,
            accepted: vec![],
        }
    }

    /// Whether `t` lies in an accepted box.
    pub fn covers(&self, t: f64) -> bool {
        self.status == BranchStatus::Certified
            && self.t_region.is_some_and(|[lo, hi]| lo <= t && t <= hi)
    }
}

#[derive(Debug, Clone, Copy)]
struct QueuedBox {
    margin_lo: f64,
    a: f64,
    b: f64,
    depth: u32,
}

impl PartialEq for QueuedBox {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for QueuedBox {}
impl PartialOrd for QueuedBox {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for QueuedBox {
    // max-heap order: the smallest lower bound pops first
    fn cmp(&self, o: &Self) -> Ordering {
        o.margin_lo
            .total_cmp(&self.margin_lo)
            .then(o.a.total_cmp(&self.a))
    }
}

fn slivers(bp: &BranchProblem, dom: Interval) -> Vec<Sliver> {
    let mut out = Vec::new();
    if dom.lo() > bp.t_domain.lo {
        out.push(Sliver {
            n: bp.n,
            lo: bp.t_domain.lo,
            hi: dom.lo(),
            kind: if bp.singular_at_zero {
                SliverKind::SingularDenominator
            } else {
                SliverKind::OpenBoundary
            },
        });
    }
    if dom.hi() < bp.t_domain.hi {
        out.push(Sliver {
            n: bp.n,
            lo: dom.hi(),
            hi: bp.t_domain.hi,
            kind: SliverKind::OpenBoundary,
        });
    }
    out
}

/// Adaptive bisection of branch `n`. The statement must not have free parameters.
pub fn certify_branch(stmt: &Statement, n: i64, cfg: &RunConfig) -> BranchVerdict {
    let bp = match specialize_branch(stmt, n) {
        Ok(bp) => bp,
        Err(e) => return BranchVerdict::empty(n, BranchStatus::Undecided, Some(e.to_string())),
    };
    if bp.singular {
        return BranchVerdict::empty(
            n,
            BranchStatus::Singular,
            Some("a denominator is identically zero".into()),
        );
    }
    if !stmt.domain.aux_params().is_empty() {
        return BranchVerdict::empty(
            n,
            BranchStatus::Undecided,
            Some("free parameters; certify on slices".into()),
        );
    }
    let dom = match effective_t_domain(&bp, cfg.epsilon) {
        Ok(d) => d,
        Err(e) => return BranchVerdict::empty(n, BranchStatus::Undecided, Some(e.to_string())),
    };
    let mut v = BranchVerdict::empty(n, BranchStatus::Undecided, None);
    v.t_region = Some([dom.lo(), dom.hi()]);
    v.slivers = slivers(&bp, dom);
    let strict = stmt.relation.is_strict();
    let ok = |lo: f64| if strict { lo > 0.0 } else { lo >= 0.0 };

    if let Some(c) = constant_margin(&bp.stmt_t) {
        let c = rational_to_f64(&c);
        v.exact_constant = true;
        v.best_point = Some([dom.mid(), c]);
        v.boxes = 1;
        if ok(c) {
            v.status = BranchStatus::Certified;
            v.margin_lower_bound = Some(c);
            v.accepted.push(TBox {
                lo: dom.lo(),
                hi: dom.hi(),
                margin_lo: c,
            });
        } else {
            v.unresolved.push([dom.lo(), dom.hi()]);
            v.reason = Some(if c == 0.0 {
                "margin is identically zero under a strict relation".into()
            } else {
                format!("margin is the negative constant {c}")
            });
        }
        return v;
    }

    let prog = match MarginProgram::new(&bp.stmt_t) {
        Ok(p) => p,
        Err(e) => return BranchVerdict::empty(n, BranchStatus::Undecided, Some(e.to_string())),
    };
    let box_lo = |a: f64, b: f64| match prog.interval(&[Interval::new(a, b)]) {
        Ok(iv) => iv.lo(),
        Err(_) => f64::NEG_INFINITY,
    };
    let mut best = [f64::NAN, f64::INFINITY];
    let observe = |t: f64, best: &mut [f64; 2]| {
        if let Ok(p) = prog.point(&[t]) {
            if p.margin < best[1] {
                *best = [t, p.margin];
            }
        }
    };
    for t in [dom.lo(), dom.mid(), dom.hi()] {
        observe(t, &mut best);
    }
    let failing = |u: f64| if strict { u <= 0.0 } else { u < 0.0 };

    let mut heap = BinaryHeap::new();
    heap.push(QueuedBox {
        margin_lo: box_lo(dom.lo(), dom.hi()),
        a: dom.lo(),
        b: dom.hi(),
        depth: 0,
    });
    v.boxes = 1;
    let accept = |q: &QueuedBox, v: &mut BranchVerdict| {
        v.accepted.push(TBox {
            lo: q.a,
            hi: q.b,
            margin_lo: q.margin_lo,
        })
    };
    while let Some(q) = heap.pop() {
        let u = best[1];
        let gap = (cfg.rel_gap * u.abs()).max(cfg.abs_gap);
        if ok(q.margin_lo) && q.margin_lo >= u - gap {
            accept(&q, &mut v);
            for r in heap.drain() {
                accept(&r, &mut v);
            }
            break;
        }
        if failing(u) {
            v.reason = Some(if u >= -cfg.tol_f * (1.0 + u.abs()) {
                format!("margin touches zero near t = {}", best[0])
            } else {
                format!("point margin {u:e} at t = {}", best[0])
            });
            v.unresolved.push([q.a, q.b]);
            v.unresolved.extend(heap.drain().map(|r| [r.a, r.b]));
            break;
        }
        if v.boxes >= cfg.max_boxes {
            v.reason = Some(format!("box budget of {} exhausted", cfg.max_boxes));
            for r in std::iter::once(q).chain(heap.drain()) {
                if ok(r.margin_lo) {
                    accept(&r, &mut v);
                } else {
                    v.unresolved.push([r.a, r.b]);
                }
            }
            break;
        }
        if q.depth >= cfg.max_depth || q.b - q.a < cfg.min_width {
            if ok(q.margin_lo) {
                accept(&q, &mut v);
            } else {
                v.unresolved.push([q.a, q.b]);
                v.reason.get_or_insert_with(|| "resolution limit reached".into());
            }
            continue;
        }
        let m = 0.5 * (q.a + q.b);
        for (a, b) in [(q.a, m), (m, q.b)] {
            observe(0.5 * (a + b), &mut best);
            heap.push(QueuedBox {
                margin_lo: box_lo(a, b),
                a,
                b,
                depth: q.depth + 1,
            });
            v.boxes += 1;
        }
    }
    v.best_point = best[1].is_finite().then_some(best);
    v.unresolved.sort_by(|p, q| p[0].total_cmp(&q[0]));
    v.accepted.sort_by(|p, q| p.lo.total_cmp(&q.lo));
    if v.unresolved.is_empty() {
        v.status = BranchStatus::Certified;
        v.reason = None;
        v.margin_lower_bound = v
            .accepted
            .iter()
            .map(|b| b.margin_lo)
            .min_by(f64::total_cmp);
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegerProbe {
    pub x: i64,
    pub slice: Option<usize>,
    pub margin: Option<f64>,
    /// Why the point is not evaluated.
    pub excluded: Option<String>,
}

fn bound_versions(stmt: &Statement, slices: &[Slice]) -> Vec<(Option<usize>, Statement)> {
    if stmt.domain.aux_params().is_empty() || slices.is_empty() {
        vec![(None, stmt.clone())]
    } else {
        slices
            .iter()
            .enumerate()
            .map(|(i, s)| (Some(i), stmt.bind(s)))
            .collect()
    }
}

/// Evaluates the statement at integer `x` in the certified range.
pub fn probe_integer_points(stmt: &Statement, slices: &[Slice], n_max: i64) -> Vec<IntegerProbe> {
    let mut out = Vec::new();
    let Some(main) = stmt.domain.main() else {
        return out;
    };
    let xs: Vec<i64> = if main.real_line {
        (-n_max..=n_max).collect()
    } else {
        (branch_range(&stmt.domain, n_max).first().copied().unwrap_or(0)..=n_max).collect()
    };
    for (slice, s) in bound_versions(stmt, slices) {
        let prog = MarginProgram::new(&s);
        for &x in &xs {
            let xf = x as f64;
            let in_bounds = {
                let mut d = main.clone();
                d.exclude_integers = false;
                d.admits(xf)
            };
            if !in_bounds {
                continue;
            }
            let result = prog
                .as_ref()
                .map_err(|e| *e)
                .and_then(|p| p.point(&[xf]).map(|m| m.margin));
            let (margin, excluded) = match result {
                Err(e) => (None, Some(e.to_string())),
                Ok(_) if main.exclude_integers => (None, Some("integers excluded by the domain".into())),
                Ok(m) => (Some(m), None),
            };
            out.push(IntegerProbe {
                x,
                slice,
                margin,
                excluded,
            });
        }
    }
    out
}

/// Minimum point margin over the tail branches, and whether all were acceptable.
pub fn sample_tail(stmt: &Statement, slices: &[Slice], cfg: &RunConfig) -> (bool, Option<f64>) {
    let real_line = stmt.domain.main().is_some_and(|d| d.real_line);
    let mut ns: Vec<i64> = cfg.tail_branches.clone();
    if real_line {
        ns.extend(cfg.tail_branches.iter().map(|n| -n));
    }
    let k = cfg.tail_t_samples.max(2);
    let mut all_ok = true;
    let mut min = None::<f64>;
    for (_, s) in bound_versions(stmt, slices) {
        for &n in &ns {
            let Ok(bp) = specialize_branch(&s, n) else { continue };
            if bp.singular {
                continue;
            }
            let Ok(prog) = MarginProgram::new(&bp.stmt_t) else { continue };
            for i in 0..k {
                let t = cfg.epsilon + (1.0 - 2.0 * cfg.epsilon) * i as f64 / (k - 1) as f64;
                if let Ok(p) = prog.point(&[t]) {
                    if p.margin < -cfg.tol_f * p.scale() {
                        all_ok = false;
                    }
                    min = Some(min.map_or(p.margin, |m| m.min(p.margin)));
                }
            }
        }
    }
    (all_ok, min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedRegion {
    /// Branch indices certified (for every slice).
    pub branches: Vec<i64>,
    pub singular_branches: Vec<i64>,
    pub slivers: Vec<Sliver>,
    pub unresolved: Vec<UnresolvedInterval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
/// Hull of the unresolved boxes of one branch.
pub struct UnresolvedInterval {
    pub n: i64,
    pub slice: Option<usize>,
    pub lo: f64,
    pub hi: f64,
    pub pieces: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub certified_region: CertifiedRegion,
    pub margin_lower_bound: Option<f64>,
    pub witness: Option<Counterexample>,
    pub tail_samples_ok: bool,
    pub tail_min_margin: Option<f64>,
    /// Certification ran on fixed parameter slices only.
    pub slice_certified: bool,
    pub slices: Vec<Vec<(String, f64)>>,
    pub reasons: Vec<String>,
    pub branches: Vec<BranchVerdict>,
}

impl Verdict {
    /// Attaches a falsifier result; a rigorous witness makes the verdict Falsified.
    pub fn with_witness(mut self, f: &FalsifyOutcome) -> Verdict {
        if let Some(w) = f.witness.as_ref().filter(|w| w.rigorous) {
            self.kind = VerdictKind::Falsified;
            self.witness = Some(w.clone());
        }
        self
    }

    /// The witness lies inside a certified part of the same slice.
    pub fn contradicts(&self, w: &Counterexample) -> bool {
        self.branches.iter().any(|b| {
            b.n == w.point.n
                && b.accepted.iter().any(|a| a.lo <= w.point.t && w.point.t <= a.hi)
                && match b.slice {
                    None => w.point.params.is_empty(),
                    Some(i) => self.slices.get(i).is_some_and(|s| {
                        s.iter().all(|(n, v)| {
                            w.point.params.iter().any(|(m, u)| m == n && u == v)
                        })
                    }),
                }
        })
    }
}

/// Certifies one statement version over branches up to `n_max` (per slice when it has parameters).
pub fn certify_statement(stmt: &Statement, slices: &[Slice], cfg: &RunConfig) -> Verdict {
    let versions = bound_versions(stmt, slices);
    let branches = branch_range(&stmt.domain, cfg.n_max);
    let units: Vec<(usize, i64)> = (0..versions.len())
        .flat_map(|i| branches.iter().map(move |&n| (i, n)))
        .collect();
    let results = par_map(&units, cfg.parallelism, |&(i, n)| {
        let (slice, s) = &versions[i];
        let mut v = certify_branch(s, n, cfg);
        v.slice = *slice;
        v
    });
    let (tail_ok, tail_min) = sample_tail(stmt, slices, cfg);
    let mut region = CertifiedRegion {
        branches: vec![],
        singular_branches: vec![],
        slivers: vec![],
        unresolved: vec![],
    };
    let mut reasons = Vec::new();
    for &n in &branches {
        let of_n: Vec<&BranchVerdict> = results.iter().filter(|v| v.n == n).collect();
        if of_n.iter().all(|v| v.status == BranchStatus::Singular) {
            region.singular_branches.push(n);
        } else if of_n.iter().all(|v| v.status == BranchStatus::Certified) {
            region.branches.push(n);
        }
        if let Some(first) = of_n.first() {
            region.slivers.extend(first.slivers.iter().copied());
        }
    }
    for v in &results {
        if let (Some(first), Some(last)) = (v.unresolved.first(), v.unresolved.last()) {
            region.unresolved.push(UnresolvedInterval {
                n: v.n,
                slice: v.slice,
                lo: first[0],
                hi: last[1],
                pieces: v.unresolved.len(),
            });
        }
        if v.status == BranchStatus::Undecided {
            let r = v.reason.clone().unwrap_or_else(|| "unresolved".into());
            let label = match v.slice {
                Some(i) => format!("slice {i}, branch {}: {r}", v.n),
                None => format!("branch {}: {r}", v.n),
            };
            reasons.push(label);
        }
    }
    let any_certified = results.iter().any(|v| v.status == BranchStatus::Certified);
    let all_done = results
        .iter()
        .all(|v| matches!(v.status, BranchStatus::Certified | BranchStatus::Singular));
    let kind = if any_certified && all_done {
        VerdictKind::Certified
    } else {
        if !any_certified && reasons.is_empty() {
            reasons.push("no branch could be certified".into());
        }
        VerdictKind::Undecided
    };
    Verdict {
        kind,
        certified_region: region,
        margin_lower_bound: results
            .iter()
            .filter(|v| v.status == BranchStatus::Certified)
            .filter_map(|v| v.margin_lower_bound)
            .min_by(f64::total_cmp),
        witness: None,
        tail_samples_ok: tail_ok,
        tail_min_margin: tail_min,
        slice_certified: versions.iter().any(|(s, _)| s.is_some()),
        slices: versions
            .iter()
            .filter_map(|(s, _)| s.map(|i| &slices[i]))
            .map(|s| s.iter().map(|(n, v)| (n.clone(), rational_to_f64(v))).collect())
            .collect(),
        reasons,
        branches: results,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certification {
    pub as_printed: Verdict,
    pub corrected: Option<Verdict>,
}

pub fn certify(record: &TheoremRecord, cfg: &RunConfig) -> Certification {
    Certification {
        as_printed: certify_statement(&record.as_printed, &record.slices, cfg),
        corrected: record
            .corrected
            .as_ref()
            .map(|c| certify_statement(c, &record.slices, cfg)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::builtin_corpus;

    fn stmt(id: &str) -> &'static Statement {
        &builtin_corpus().theorem(id).unwrap().as_printed
    }

    #[test]
    fn theorem_1_branches() {
        let cfg = RunConfig::default();
        let b1 = certify_branch(stmt("T1"), 1, &cfg);
        assert_eq!(b1.status, BranchStatus::Certified);
        let lb = b1.margin_lower_bound.unwrap();
        assert!((0.0185..=2.0 / 105.0 + 1e-6).contains(&lb), "{lb}");
        let b0 = certify_branch(stmt("T1"), 0, &cfg);
        assert!(b0.exact_constant);
        assert!((b0.margin_lower_bound.unwrap() - 1.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn theorem_12_branch_one() {
        let b = certify_branch(stmt("T12"), 1, &RunConfig::default());
        assert_eq!(b.status, BranchStatus::Certified);
        let lb = b.margin_lower_bound.unwrap();
        assert!(lb > 0.0 && lb < 0.0071, "{lb}");
        let b0 = certify_branch(stmt("T12"), 0, &RunConfig::default());
        assert_eq!(b0.status, BranchStatus::Undecided);
    }

    #[test]
    fn singular_branch() {
        let b = certify_branch(stmt("T9"), 1, &RunConfig::default());
        assert_eq!(b.status, BranchStatus::Certified);
        assert_eq!(b.slivers[0].kind, SliverKind::SingularDenominator);
        let s = crate::expr::parse_statement("1/floor(x) >= 0 on x>0").unwrap();
        assert_eq!(certify_branch(&s, 0, &RunConfig::default()).status, BranchStatus::Singular);
    }

    #[test]
    fn theorem_21_corrected_bound() {
        let t = builtin_corpus().theorem("T21").unwrap();
        let b = certify_branch(t.corrected.as_ref().unwrap(), 1, &RunConfig::default());
        assert_eq!(b.status, BranchStatus::Certified);
        assert!((b.margin_lower_bound.unwrap() - 1.0 / 12.0).abs() < 1e-3);
        let p = certify_branch(&t.as_printed, 1, &RunConfig::default());
        assert_eq!(p.status, BranchStatus::Undecided);
    }

    #[test]
    fn integer_probes() {
        let p18 = probe_integer_points(stmt("T18"), &[], 3);
        let at2 = p18.iter().find(|p| p.x == 2).unwrap();
        assert!((at2.margin.unwrap() - 0.5).abs() < 1e-15);
        let p13 = probe_integer_points(stmt("T13"), &[], 3);
        assert!(p13.iter().find(|p| p.x == 2).unwrap().excluded.is_some());
        let p24 = probe_integer_points(stmt("T24"), &[], 3);
        let at3 = p24.iter().find(|p| p.x == 3).unwrap().margin.unwrap();
        assert!((at3 - (3f64.exp() + 1.0 - 5.0)).abs() < 1e-12);
    }

    #[test]
    fn whole_theorem_1() {
        let v = certify_statement(stmt("T1"), &[], &RunConfig::default());
        assert_eq!(v.kind, VerdictKind::Certified);
        assert!(v.tail_samples_ok);
        assert_eq!(v.certified_region.branches, (0..=20).collect::<Vec<_>>());
    }
}
