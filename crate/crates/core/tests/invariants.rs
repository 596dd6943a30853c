use floorcheck::certifier::{certify_statement, BranchStatus, Verdict};
use floorcheck::config::{OutputFormat, RunConfig};
use floorcheck::corpus::{builtin_corpus, parse_corpus, to_text, TheoremRecord};
use floorcheck::derivation::{check_derivation, instantiate_base, sign, DerivationStatus, DisagreementKind};
use floorcheck::expr::{MarginProgram, Statement};
use floorcheck::falsifier::{falsify, falsify_statement, margin, slice_anchors, FalsifyOutcome, ParamStrategy};
use floorcheck::numerics::Interval;
use floorcheck::parallel::Parallelism;
use floorcheck::piecewise::specialize_branch;
use floorcheck::report::{analyze, render_report, Stages};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small() -> RunConfig {
    RunConfig { n_max: 6, samples: 1_000, ..RunConfig::default() }
}

fn versions(t: &TheoremRecord) -> Vec<(&'static str, &Statement)> {
    let mut v = vec![("as_printed", &t.as_printed)];
    if let Some(c) = &t.corrected {
        v.push(("corrected", c));
    }
    v
}

fn bound(t: &TheoremRecord, stmt: &Statement, slice: Option<usize>) -> Statement {
    match slice {
        Some(i) => stmt.bind(&t.slices[i]),
        None => stmt.clone(),
    }
}

fn spot_check(t: &TheoremRecord, stmt: &Statement, v: &Verdict, rng: &mut ChaCha8Rng) -> usize {
    let mut checked = 0;
    for b in v.branches.iter().filter(|b| b.status == BranchStatus::Certified) {
        let s = bound(t, stmt, b.slice);
        let bp = specialize_branch(&s, b.n).unwrap();
        let prog = MarginProgram::new(&bp.stmt_t).unwrap();
        for bx in &b.accepted {
            for _ in 0..16 {
                let tt = rng.random_range(bx.lo..=bx.hi);
                let Ok(p) = prog.point(&[tt]) else { continue };
                assert!(
                    p.margin >= bx.margin_lo - 1e-12 * p.scale(),
                    "{} branch {} t = {tt}: {} < {}",
                    t.id,
                    b.n,
                    p.margin,
                    bx.margin_lo
                );
                checked += 1;
            }
        }
    }
    checked
}

#[test]
fn certified_boxes_bound_interior_points() {
    let cfg = small();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut total = 0;
    for t in &builtin_corpus().theorems {
        for (_, s) in versions(t) {
            let v = certify_statement(s, &t.slices, &cfg);
            total += spot_check(t, s, &v, &mut rng);
        }
    }
    assert!(total > 10_000, "{total}");
}

#[test]
fn more_depth_never_shrinks_the_region() {
    for id in ["T1", "T18", "T24"] {
        let t = builtin_corpus().theorem(id).unwrap();
        let shallow = certify_statement(&t.as_printed, &[], &RunConfig { max_depth: 20, ..RunConfig::default() });
        let deep = certify_statement(&t.as_printed, &[], &RunConfig::default());
        for n in &shallow.certified_region.branches {
            assert!(deep.certified_region.branches.contains(n), "{id} branch {n}");
        }
        for b in shallow.branches.iter().filter(|b| b.status == BranchStatus::Certified) {
            let d = deep.branches.iter().find(|d| d.n == b.n).unwrap();
            assert_eq!(d.t_region, b.t_region, "{id} branch {}", b.n);
        }
    }
}

fn witness_is_rigorous(stmt: &Statement, f: &FalsifyOutcome) {
    let Some(w) = &f.witness else { return };
    assert!(w.rigorous);
    let bp = specialize_branch(stmt, w.point.n).unwrap();
    let prog = MarginProgram::new(&bp.stmt_t).unwrap();
    let mut vals = vec![Interval::point(w.point.t)];
    for name in &prog.vars()[1..] {
        let v = w.point.params.iter().find(|(n, _)| n == name).unwrap().1;
        vals.push(Interval::point(v));
    }
    let m = prog.interval(&vals).unwrap();
    assert!(m.hi() < 0.0, "{stmt}: {m:?}");
}

#[test]
fn witnesses_and_verdicts_agree() {
    let cfg = small();
    for t in &builtin_corpus().theorems {
        let f = falsify(t, &cfg);
        for ((_, s), out) in versions(t).into_iter().zip(std::iter::once(&f.as_printed).chain(f.corrected.iter())) {
            witness_is_rigorous(s, out);
            let v = certify_statement(s, &t.slices, &cfg).with_witness(out);
            if let Some(w) = &v.witness {
                assert!(!v.contradicts(w), "{} certified at its own witness", t.id);
            }
        }
    }
}

#[test]
fn falsifier_is_deterministic() {
    let cfg = small();
    for id in ["T3", "T21", "T32"] {
        let t = builtin_corpus().theorem(id).unwrap();
        let a = falsify_statement(&t.as_printed, id, "as_printed", &slice_anchors(t), &cfg);
        let b = falsify_statement(&t.as_printed, id, "as_printed", &slice_anchors(t), &cfg);
        assert_eq!(a, b);
    }
}

#[test]
fn disagreements_reproduce() {
    let c = builtin_corpus();
    let cfg = small();
    let mut seen = 0;
    for t in &c.theorems {
        let d = check_derivation(t, &c.bases, &cfg);
        assert_eq!(d, check_derivation(t, &c.bases, &cfg), "{}", t.id);
        let base = c.base(&t.base).unwrap();
        for (stmt, r) in std::iter::once((&t.as_printed, &d.as_printed)).chain(t.corrected.iter().zip(d.corrected.iter())) {
            assert_eq!(r.status == DerivationStatus::Consistent, r.disagreement_count == 0 && r.samples_tested >= 100);
            let inst = instantiate_base(base, &t.substitution, &stmt.domain).unwrap();
            for dis in r.disagreements.iter().filter(|d| d.kind == DisagreementKind::SignFlip) {
                let mut point = vec![("x", dis.x)];
                point.extend(dis.params.iter().map(|(n, v)| (n.as_str(), *v)));
                let (tm, im) = (margin(stmt, &point).unwrap(), margin(&inst, &point).unwrap());
                assert!(sign(&tm) * sign(&im) < 0, "{} at x = {}", t.id, dis.x);
                seen += 1;
            }
        }
    }
    assert!(seen > 0);
}

#[test]
fn substitution_images_respect_base_domains() {
    let c = builtin_corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for t in &c.theorems {
        let base = c.base(&t.base).unwrap().statement.as_ref().unwrap();
        let main = t.as_printed.domain.main().unwrap();
        let aux = t.aux_params();
        let strategy = ParamStrategy::for_params(&aux, 64.0);
        let names: Vec<String> = aux.iter().map(|d| d.name.clone()).collect();
        let lo = if main.real_line { -21.0 } else { main.lower_f64().unwrap_or(0.0) };
        let mut tested = 0;
        for _ in 0..1_000 {
            let x = rng.random_range(lo..21.0);
            let params: Vec<(String, f64)> = names.iter().cloned().zip(strategy.sample(&mut rng)).collect();
            if !main.admits(x) {
                continue;
            }
            let mut point = vec![("x", x)];
            point.extend(params.iter().map(|(n, v)| (n.as_str(), *v)));
            if margin(&t.as_printed, &point).is_err() {
                continue;
            }
            for (var, img) in &t.substitution.pairs {
                let v = img.value(x, &params).unwrap();
                let d = base.domain.get(var).unwrap();
                assert!(d.admits(v), "{}: {var} = {img} = {v} at x = {x}", t.id);
            }
            tested += 1;
        }
        assert!(tested > 500, "{}: {tested}", t.id);
    }
}

#[test]
fn corpus_text_round_trip() {
    let c = builtin_corpus();
    let back = parse_corpus(&to_text(c)).unwrap();
    assert_eq!(&back, c);
}

#[test]
fn output_does_not_depend_on_threads() {
    let c = builtin_corpus();
    let ids = ["T1", "T3", "T21", "T25"];
    let render = |p: Parallelism| {
        let cfg = RunConfig { parallelism: p, ..small() };
        let rs: Vec<_> = ids.iter().map(|id| analyze(c.theorem(id).unwrap(), &c.bases, &cfg, Stages::ALL)).collect();
        (render_report(&rs, OutputFormat::Json), render_report(&rs, OutputFormat::Md))
    };
    assert_eq!(render(Parallelism::Sequential), render(Parallelism::Parallel));
}
