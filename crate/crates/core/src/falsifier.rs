//! Counterexample search: grid scan of every branch, local refinement, and a
//! point-interval re-check of anything that looks negative.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{unit_seed, RunConfig};
use crate::corpus::TheoremRecord;
use crate::expr::{rational_to_f64, EvalError, MarginProgram, PointMargin, Statement, VarDomain};
use crate::numerics::Interval;
use crate::parallel::par_map;
use crate::piecewise::{branch_range, effective_t_domain, specialize_branch, BranchProblem};

/// Margin of `stmt` at a point given as `(name, value)` pairs.
pub fn margin(stmt: &Statement, assignment: &[(&str, f64)]) -> Result<PointMargin, EvalError> {
    let names: Vec<String> = assignment.iter().map(|(n, _)| n.to_string()).collect();
    let vals: Vec<f64> = assignment.iter().map(|(_, v)| *v).collect();
    MarginProgram::with_vars(stmt, &names)?.point(&vals)
}

/// How auxiliary parameters are explored.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamStrategy {
    None,
    /// Several positive parameters: points of the open unit simplex.
    Simplex(usize),
    /// One parameter, log-uniform over `[lo, hi]`.
    LogUniform { lo: f64, hi: f64 },
    /// Anything else: uniform over a box.
    Uniform(Vec<(f64, f64)>),
}

impl ParamStrategy {
    pub fn for_params(params: &[&VarDomain], span: f64) -> ParamStrategy {
        let positive = |d: &VarDomain| d.lower_f64() == Some(0.0) && d.upper.is_none();
        match params {
            [] => ParamStrategy::None,
            [d] if d.upper.is_none() => {
                let lo = d.lower_f64().filter(|l| *l > 0.0).unwrap_or(1.0);
                ParamStrategy::LogUniform { lo, hi: lo * span }
            }
            ps if ps.iter().all(|d| positive(d)) => ParamStrategy::Simplex(ps.len()),
            ps => ParamStrategy::Uniform(
                ps.iter()
                    .map(|d| {
                        let lo = d.lower_f64().unwrap_or(-span);
                        (lo, d.upper_f64().unwrap_or(lo + span))
                    })
                    .collect(),
            ),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ParamStrategy::None => 0,
            ParamStrategy::Simplex(k) => *k,
            ParamStrategy::LogUniform { .. } => 1,
            ParamStrategy::Uniform(b) => b.len(),
        }
    }

    /// Deterministic first point: the simplex centroid or the lower bound.
    pub fn anchor(&self) -> Vec<f64> {
        match self {
            ParamStrategy::None => vec![],
            ParamStrategy::Simplex(k) => vec![1.0 / *k as f64; *k],
            ParamStrategy::LogUniform { lo, .. } => vec![*lo],
            ParamStrategy::Uniform(b) => b.iter().map(|(l, h)| 0.5 * (l + h)).collect(),
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        match self {
            ParamStrategy::None => vec![],
            ParamStrategy::Simplex(k) => {
                let e: Vec<f64> = (0..*k)
                    .map(|_| -rng.random_range(1e-12..1.0f64).ln())
                    .collect();
                let s: f64 = e.iter().sum();
                e.into_iter().map(|v| (v / s).max(1e-9)).collect()
            }
            ParamStrategy::LogUniform { lo, hi } => {
                vec![(rng.random_range(lo.ln()..=hi.ln())).exp().clamp(*lo, *hi)]
            }
            ParamStrategy::Uniform(b) => b.iter().map(|(l, h)| rng.random_range(*l..=*h)).collect(),
        }
    }
}

/// One evaluated point of a branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSample {
    pub x: f64,
    pub n: i64,
    pub t: f64,
    pub params: Vec<(String, f64)>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    #[serde(flatten)]
    pub point: PointSample,
    /// Upper end of the interval margin at the exact point, if it could be computed.
    pub margin_upper: Option<f64>,
    /// The interval margin is entirely negative: a machine-checked disproof.
    pub rigorous: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub t: f64,
    pub params: Vec<f64>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub n: i64,
    /// Grid-local minima, ascending by margin.
    pub candidates: Vec<Candidate>,
    /// Grid points where evaluation failed.
    pub skipped: usize,
    pub singular: bool,
}

/// A specialized branch ready for point evaluation.
struct Branch {
    bp: BranchProblem,
    prog: MarginProgram,
    dom: Interval,
    strategy: ParamStrategy,
    param_names: Vec<String>,
    params_lo: Vec<Option<(f64, bool)>>,
    params_hi: Vec<Option<(f64, bool)>>,
}

impl Branch {
    fn new(stmt: &Statement, n: i64, cfg: &RunConfig) -> Option<Branch> {
        let bp = specialize_branch(stmt, n).ok()?;
        if bp.singular {
            return None;
        }
        let dom = effective_t_domain(&bp, cfg.epsilon).ok()?;
        let prog = MarginProgram::new(&bp.stmt_t).ok()?;
        let aux = stmt.domain.aux_params();
        let strategy = ParamStrategy::for_params(&aux, cfg.param_span);
        let bound = |b: &Option<crate::expr::Bound>| {
            b.as_ref().map(|b| (rational_to_f64(&b.value), b.closed))
        };
        Some(Branch {
            param_names: aux.iter().map(|d| d.name.clone()).collect(),
            params_lo: aux.iter().map(|d| bound(&d.lower)).collect(),
            params_hi: aux.iter().map(|d| bound(&d.upper)).collect(),
            bp,
            prog,
            dom,
            strategy,
        })
    }

    fn eval(&self, t: f64, params: &[f64]) -> Option<PointMargin> {
        let mut vals = Vec::with_capacity(1 + params.len());
        vals.push(t);
        vals.extend_from_slice(params);
        self.prog.point(&vals).ok().filter(|p| p.margin.is_finite())
    }

    fn value(&self, t: f64, params: &[f64]) -> f64 {
        self.eval(t, params).map_or(f64::INFINITY, |p| p.margin)
    }

    fn include_integer_point(&self) -> bool {
        self.bp.t_domain.contains(0.0)
    }

    fn grid(&self, size: usize) -> Vec<f64> {
        let (lo, hi) = (self.dom.lo(), self.dom.hi());
        (0..size)
            .map(|i| {
                if i + 1 == size {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (size - 1) as f64
                }
            })
            .collect()
    }

    fn param_sets(&self, cfg: &RunConfig, seed: u64, anchors: &[Vec<f64>]) -> Vec<Vec<f64>> {
        if self.strategy.dim() == 0 {
            return vec![vec![]];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sets = vec![self.strategy.anchor()];
        sets.extend(anchors.iter().cloned());
        sets.extend((0..cfg.param_samples).map(|_| self.strategy.sample(&mut rng)));
        sets
    }

    fn param_admits(&self, i: usize, v: f64) -> bool {
        let lo_ok = self.params_lo[i].is_none_or(|(l, closed)| v > l || (closed && v == l));
        let hi_ok = self.params_hi[i].is_none_or(|(h, closed)| v < h || (closed && v == h));
        lo_ok && hi_ok && v.is_finite()
    }

    fn sample(&self, t: f64, params: &[f64]) -> Option<PointSample> {
        let p = self.eval(t, params)?;
        Some(PointSample {
            x: self.bp.n as f64 + t,
            n: self.bp.n,
            t,
            params: self
                .param_names
                .iter()
                .cloned()
                .zip(params.iter().copied())
                .collect(),
            lhs: p.lhs,
            rhs: p.rhs,
            margin: p.margin,
        })
    }

    /// Interval margin at the exact point `n + t`.
    fn recheck(&self, t: f64, params: &[f64]) -> Option<Interval> {
        let mut vals = vec![Interval::point(t)];
        vals.extend(params.iter().map(|v| Interval::point(*v)));
        self.prog.interval(&vals).ok()
    }
}

fn golden(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut best = [(lo, f(lo)), (hi, f(hi))]
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .expect("two points");
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a < tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        for p in [(c, fc), (d, fd)] {
            if p.1 < best.1 {
                best = p;
            }
        }
    }
    best
}

fn scan(branch: &Branch, cfg: &RunConfig, param_sets: &[Vec<f64>]) -> (Vec<Candidate>, usize) {
    let grid = branch.grid(cfg.grid_size);
    let mut out = Vec::new();
    let mut skipped = 0;
    for params in param_sets {
        let vals: Vec<f64> = grid
            .iter()
            .map(|&t| {
                let v = branch.value(t, params);
                if v.is_infinite() {
                    skipped += 1;
                }
                v
            })
            .collect();
        for i in 0..vals.len() {
            let left = if i == 0 { f64::INFINITY } else { vals[i - 1] };
            let right = vals.get(i + 1).copied().unwrap_or(f64::INFINITY);
            if vals[i].is_finite() && vals[i] <= left && vals[i] <= right {
                out.push(Candidate {
                    t: grid[i],
                    params: params.clone(),
                    margin: vals[i],
                });
            }
        }
        if branch.include_integer_point() {
            match branch.eval(0.0, params) {
                Some(p) => out.push(Candidate {
                    t: 0.0,
                    params: params.clone(),
                    margin: p.margin,
                }),
                None => skipped += 1,
            }
        }
    }
    out.sort_by(|a, b| a.margin.total_cmp(&b.margin).then(a.t.total_cmp(&b.t)));
    (out, skipped)
}

/// Grid scan of branch `n`; `seed` drives the parameter samples.
pub fn scan_branch(stmt: &Statement, n: i64, cfg: &RunConfig, seed: u64) -> ScanResult {
    let Some(branch) = Branch::new(stmt, n, cfg) else {
        return ScanResult {
            n,
            candidates: vec![],
            skipped: 0,
            singular: true,
        };
    };
    let sets = branch.param_sets(cfg, seed, &[]);
    let (candidates, skipped) = scan(&branch, cfg, &sets);
    ScanResult {
        n,
        candidates,
        skipped,
        singular: false,
    }
}

const REFINE_TOL: f64 = 1e-10;

fn refine_in(branch: &Branch, cfg: &RunConfig, c: &Candidate) -> Candidate {
    if c.t == 0.0 && branch.include_integer_point() {
        return c.clone();
    }
    let step = branch.dom.width() / (cfg.grid_size - 1) as f64;
    let (lo, hi) = (branch.dom.lo(), branch.dom.hi());
    let mut t = c.t;
    let mut params = c.params.clone();
    let mut best = branch.value(t, &params);
    for round in 0..3 {
        let mut span = if round == 0 { step } else { step / 8.0 };
        // follow the descent while the minimum sits on the bracket edge
        for _ in 0..64 {
            let (a, b) = ((t - span).max(lo), (t + span).min(hi));
            let (tt, v) = golden(|s| branch.value(s, &params), a, b, REFINE_TOL);
            let on_edge = (tt - a < 2.0 * REFINE_TOL && a > lo) || (b - tt < 2.0 * REFINE_TOL && b < hi);
            if v <= best {
                t = tt;
                best = v;
            }
            if !on_edge {
                break;
            }
            span *= 2.0;
        }
        for i in 0..params.len() {
            let p = params[i];
            let mut a = p / 4.0;
            let mut b = p * 4.0;
            if let Some((l, _)) = branch.params_lo[i] {
                a = a.max(l);
            }
            if let Some((h, _)) = branch.params_hi[i] {
                b = b.min(h);
            }
            if !(a > 0.0 && b > a) {
                continue;
            }
            let f = |u: f64| {
                let v = u.exp();
                if !branch.param_admits(i, v) {
                    return f64::INFINITY;
                }
                let mut q = params.clone();
                q[i] = v;
                branch.value(t, &q)
            };
            let (u, v) = golden(f, a.ln(), b.ln(), 1e-10);
            if v < best {
                params[i] = u.exp();
                best = v;
            }
        }
    }
    Candidate {
        t,
        params,
        margin: best,
    }
}

/// Local minimization from a scan candidate.
pub fn refine(
    stmt: &Statement,
    n: i64,
    t0: f64,
    params0: &[f64],
    cfg: &RunConfig,
) -> Option<(f64, Vec<f64>, f64)> {
    let branch = Branch::new(stmt, n, cfg)?;
    let start = Candidate {
        t: t0,
        params: params0.to_vec(),
        margin: branch.value(t0, params0),
    };
    let c = refine_in(&branch, cfg, &start);
    Some((c.t, c.params, c.margin))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FalsifyOutcome {
    /// Most negative rigorously confirmed counterexample.
    pub witness: Option<Counterexample>,
    /// Most negative point below tolerance that the interval re-check could not confirm.
    pub unconfirmed: Option<Counterexample>,
    /// Lowest margin seen anywhere.
    pub min_observed: Option<PointSample>,
    pub skipped_points: usize,
    pub singular_branches: Vec<i64>,
}

struct BranchFinding {
    n: i64,
    singular: bool,
    skipped: usize,
    refined: Vec<(PointSample, Option<Interval>)>,
}

const REFINED_PER_BRANCH: usize = 8;

fn search_branch(
    stmt: &Statement,
    n: i64,
    cfg: &RunConfig,
    seed: u64,
    anchors: &[Vec<f64>],
) -> BranchFinding {
    let Some(branch) = Branch::new(stmt, n, cfg) else {
        return BranchFinding {
            n,
            singular: true,
            skipped: 0,
            refined: vec![],
        };
    };
    let sets = branch.param_sets(cfg, seed, anchors);
    let (candidates, skipped) = scan(&branch, cfg, &sets);
    let mut refined = Vec::new();
    for c in candidates.iter().take(REFINED_PER_BRANCH) {
        let r = refine_in(&branch, cfg, c);
        let best = if r.margin <= c.margin { &r } else { c };
        if let Some(s) = branch.sample(best.t, &best.params) {
            let recheck = (s.margin < -cfg.tol_f * 1f64.max(s.lhs.abs()).max(s.rhs.abs()))
                .then(|| branch.recheck(best.t, &best.params))
                .flatten();
            refined.push((s, recheck));
        }
    }
    BranchFinding {
        n,
        singular: false,
        skipped,
        refined,
    }
}

/// Searches one statement version over all branches up to `n_max`.
pub fn falsify_statement(
    stmt: &Statement,
    id: &str,
    version: &str,
    anchors: &[Vec<f64>],
    cfg: &RunConfig,
) -> FalsifyOutcome {
    let branches = branch_range(&stmt.domain, cfg.n_max);
    let findings = par_map(&branches, cfg.parallelism, |&n| {
        search_branch(stmt, n, cfg, unit_seed(cfg.seed, id, version, n), anchors)
    });
    let mut out = FalsifyOutcome {
        witness: None,
        unconfirmed: None,
        min_observed: None,
        skipped_points: 0,
        singular_branches: vec![],
    };
    let lower = |cur: &Option<PointSample>, s: &PointSample| {
        cur.as_ref().is_none_or(|c| s.margin < c.margin)
    };
    for f in findings {
        out.skipped_points += f.skipped;
        if f.singular {
            out.singular_branches.push(f.n);
        }
        for (s, recheck) in f.refined {
            if lower(&out.min_observed, &s) {
                out.min_observed = Some(s.clone());
            }
            let scale = 1f64.max(s.lhs.abs()).max(s.rhs.abs());
            if s.margin >= -cfg.tol_f * scale {
                continue;
            }
            let rigorous = recheck.is_some_and(|iv| iv.hi() < 0.0);
            let slot = if rigorous {
                &mut out.witness
            } else {
                &mut out.unconfirmed
            };
            if slot.as_ref().is_none_or(|c| s.margin < c.point.margin) {
                *slot = Some(Counterexample {
                    point: s,
                    margin_upper: recheck.map(|iv| iv.hi()),
                    rigorous,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Falsification {
    pub as_printed: FalsifyOutcome,
    pub corrected: Option<FalsifyOutcome>,
}

/// Slice parameter values in the statement's parameter order.
pub fn slice_anchors(record: &TheoremRecord) -> Vec<Vec<f64>> {
    let names: Vec<&str> = record.aux_params().iter().map(|d| d.name.as_str()).collect();
    record
        .slices
        .iter()
        .map(|s| {
            names
                .iter()
                .map(|n| {
                    s.iter()
                        .find(|(m, _)| m == n)
                        .map_or(f64::NAN, |(_, v)| rational_to_f64(v))
                })
                .collect()
        })
        .filter(|v: &Vec<f64>| v.iter().all(|x| x.is_finite()))
        .collect()
}

pub fn falsify(record: &TheoremRecord, cfg: &RunConfig) -> Falsification {
    let anchors = slice_anchors(record);
    Falsification {
        as_printed: falsify_statement(&record.as_printed, &record.id, "as_printed", &anchors, cfg),
        corrected: record
            .corrected
            .as_ref()
            .map(|c| falsify_statement(c, &record.id, "corrected", &anchors, cfg)),
    }
}
