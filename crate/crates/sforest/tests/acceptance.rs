//! Acceptance run: prints one PASS/FAIL line per criterion and fails if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use rand::Rng;
use sforest::baselines::{brute_force_conforming, brute_force_opt, two_approx_primal_dual, verify};
use sforest::conforming::solve_conforming;
use sforest::epas::{greedy_delta_net, pow_unit, prepare_epas, simulate_merge_rules, solve_epas, DEFAULT_ENUM_CAP};
use sforest::fes::{build_skeleton, solve_fes, solve_two_pole};
use sforest::generators::{
    assignment_to_solution, gen_random_bounded, sat_to_steiner_forest, tsat3_transform, Cnf3, Profile, TargetParam,
};
use sforest::instance::{component_labels, evaluate_solution, Instance};
use sforest::partition::conforms;
use sforest::reduce::{apply_rule3, lift_solution, reduce_aspect_ratio};
use sforest::td::{
    heuristic_td, height_bound, push_terminals_to_leaves, rebalance, validate_td, width_bound, TreeDecomposition,
    REBALANCE_C_H, REBALANCE_C_W,
};
use sforest::vc::{solve_vc, CoverCertificate};
use sforest::{Ratio, SfError};

const CORPUS_SIZE: usize = 300;
const CORPUS_SEED: u64 = 2024;
const VC_MAX_COVER: usize = 6;
const CONFORMING_PAIRS: usize = 220;
const TWO_POLE_FAMILY: usize = 100;
const NET_TRIALS: usize = 1000;
const NET_MAX_POINTS: usize = 64;
const SAT_MAX_VARS: usize = 8;
const SAT_FORMULAS: usize = 40;
const EPAS_MAX_WIDTH: usize = 2;
const EXACT_TIME_LIMIT: Duration = Duration::from_secs(60);
const EPAS_TIME_LIMIT: Duration = Duration::from_secs(600);

fn eps_list() -> [Ratio<u64>; 3] {
    [Ratio::new(1, 1), Ratio::new(1, 2), Ratio::new(1, 4)]
}

/// cost <= (1 + eps) * base, exactly.
fn within(cost: u64, base: u64, eps: Ratio<u64>) -> bool {
    cost as u128 * *eps.denom() as u128 <= base as u128 * (*eps.numer() + *eps.denom()) as u128
}

struct Report {
    failed: Vec<usize>,
}

impl Report {
    fn line(&mut self, id: usize, title: &str, ok: bool, detail: String) {
        println!("{} {id:>2} {title}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(id);
        }
    }
}

fn opts(corpus: &[Instance]) -> Vec<u64> {
    corpus.iter().map(|i| brute_force_opt(i).unwrap().0).collect()
}

fn fes_oracle(rep: &mut Report, corpus: &[Instance], opt: &[u64]) {
    let t = Instant::now();
    let hits = corpus.iter().zip(opt).filter(|(i, &o)| solve_fes(i).ok().and_then(|f| verify(i, &f).ok()) == Some(o)).count();
    let el = t.elapsed();
    rep.line(
        1,
        "FES equals brute force",
        hits == corpus.len() && corpus.len() >= 300 && el < EXACT_TIME_LIMIT,
        format!("{hits}/{} exact matches in {:.2?}", corpus.len(), el),
    );
}

fn vc_oracle(rep: &mut Report, corpus: &[Instance], opt: &[u64]) {
    let t = Instant::now();
    let (mut runs, mut hits) = (0, 0);
    for (inst, &o) in corpus.iter().zip(opt) {
        let cover = common::min_vertex_cover(inst);
        if cover.len() > VC_MAX_COVER {
            continue;
        }
        runs += 1;
        let cert = CoverCertificate::new(inst, cover).unwrap();
        if solve_vc(inst, Some(&cert)).ok().and_then(|f| verify(inst, &f).ok()) == Some(o) {
            hits += 1;
        }
    }
    let el = t.elapsed();
    rep.line(
        2,
        "VC equals brute force",
        hits == runs && runs > 0 && el < EXACT_TIME_LIMIT,
        format!("{hits}/{runs} exact matches (cover <= {VC_MAX_COVER}) in {:.2?}", el),
    );
}

fn conforming_oracle(rep: &mut Report) {
    let mut r = common::rng(CORPUS_SEED + 3);
    let corpus = common::corpus(CONFORMING_PAIRS, CORPUS_SEED + 3);
    let mut agree = 0;
    for (i, inst) in corpus.iter().enumerate() {
        let base = if i % 2 == 0 { heuristic_td(inst) } else { rebalance(&heuristic_td(inst)) };
        let td = push_terminals_to_leaves(inst, &base);
        let fam = common::random_family(&mut r, inst, &td);
        let same = match (solve_conforming(inst, &td, &fam), brute_force_conforming(inst, &td, &fam)) {
            (Ok(f), Ok((c, _))) => verify(inst, &f).ok() == Some(c),
            (Err(SfError::Infeasible(_)), Err(SfError::Infeasible(_))) => true,
            _ => false,
        };
        agree += usize::from(same);
    }
    rep.line(
        3,
        "conforming DP equals exhaustive conforming search",
        agree == corpus.len() && corpus.len() >= 200,
        format!("{agree}/{} pairs agree", corpus.len()),
    );
}

fn epas_guarantee(rep: &mut Report, corpus: &[Instance], opt: &[u64]) {
    let t = Instant::now();
    let (mut runs, mut ok) = (0, 0);
    for eps in eps_list() {
        for (inst, &o) in corpus.iter().zip(opt) {
            let width = prepare_epas(inst, None, eps, DEFAULT_ENUM_CAP).map(|p| p.td.width());
            if width.as_ref().is_ok_and(|&w| w > EPAS_MAX_WIDTH) {
                continue;
            }
            runs += 1;
            if solve_epas(inst, None, eps).ok().and_then(|f| verify(inst, &f).ok()).is_some_and(|c| within(c, o, eps)) {
                ok += 1;
            }
        }
    }
    let el = t.elapsed();
    rep.line(
        4,
        "EPAS cost within (1+eps')·OPT",
        ok == runs && runs > 0 && el < EPAS_TIME_LIMIT,
        format!("{ok}/{runs} runs over eps' in {{1, 1/2, 1/4}}, width <= {EPAS_MAX_WIDTH}, in {:.2?}", el),
    );
}

fn charging(rep: &mut Report, corpus: &[Instance]) {
    let (mut runs, mut ok) = (0, 0);
    for inst in corpus {
        let (opt, f_star) = brute_force_opt(inst).unwrap();
        let td = push_terminals_to_leaves(inst, &rebalance(&heuristic_td(inst)));
        for eps in eps_list() {
            runs += 1;
            let (fe, ft) = simulate_merge_rules(inst, &td, &f_star, eps).unwrap();
            let (ce, ct) = (fe.cost(inst), ft.cost(inst));
            if within(ce, opt, eps) && within(ct, ce, eps) {
                ok += 1;
            }
        }
    }
    rep.line(
        5,
        "merge rules stay within (1+eps) per stage",
        ok == runs,
        format!("{ok}/{runs} (instance, eps) runs satisfy both stage bounds"),
    );
}

fn refinement(rep: &mut Report, corpus: &[Instance]) {
    let (mut runs, mut refine, mut conform) = (0, 0, 0);
    for inst in corpus {
        for eps in [Ratio::new(1, 1), Ratio::new(1, 2)] {
            let prep = prepare_epas(inst, None, eps, DEFAULT_ENUM_CAP).unwrap();
            if prep.td.width() > EPAS_MAX_WIDTH {
                continue;
            }
            runs += 1;
            let red = &prep.reduction.instance;
            let (_, f_star) = brute_force_opt(red).unwrap();
            let (fe, ft) = simulate_merge_rules(red, &prep.td, &f_star, prep.params.eps).unwrap();
            let le = component_labels(red, fe.edges.iter().copied());
            if prep.zetas.iter().flat_map(|z| &z.blocks).all(|b| b.members.iter().all(|&t| le[t] == le[b.members[0]])) {
                refine += 1;
            }
            let lt = component_labels(red, ft.edges.iter().copied());
            if conforms(&prep.contexts, &prep.family, &lt) {
                conform += 1;
            }
        }
    }
    rep.line(
        6,
        "zeta refines f_eps and f_tilde conforms to the family",
        refine == runs && conform == runs && runs > 0,
        format!("refinement {refine}/{runs}, conformity {conform}/{runs}"),
    );
}

fn structural(rep: &mut Report, corpus: &[Instance]) {
    let mut skel_ok = 0;
    for inst in corpus {
        let red = apply_rule3(inst).instance;
        if let Ok(sk) = build_skeleton(&red) {
            let k = sk.k();
            let deg3 = (0..red.n()).filter(|&v| red.degree(v) >= 3).count();
            skel_ok += usize::from(deg3 <= 2 * k && sk.topo_edges.len() <= 5 * k);
        }
    }
    let mut r = common::rng(CORPUS_SEED + 7);
    let mut nets_ok = 0;
    for _ in 0..NET_TRIALS {
        let n = r.gen_range(1..=NET_MAX_POINTS);
        let pts: Vec<(i64, i64)> = (0..n).map(|_| (r.gen_range(0..100), r.gen_range(0..100))).collect();
        let d = |a: usize, b: usize| (pts[a].0 - pts[b].0).unsigned_abs() + (pts[a].1 - pts[b].1).unsigned_abs();
        let delta = r.gen_range(0..60u128);
        let ids: Vec<usize> = (0..n).collect();
        let net = greedy_delta_net(&ids, d, delta, 1);
        let pack = net.iter().enumerate().all(|(i, &a)| net[i + 1..].iter().all(|&b| d(a, b) as u128 > delta));
        let cover = (0..n).all(|p| net.iter().any(|&q| d(p, q) as u128 <= delta));
        nets_ok += usize::from(pack && cover);
    }
    let (mut comps, mut small) = (0, 0);
    for inst in corpus {
        let prep = prepare_epas(inst, None, Ratio::new(1, 2), DEFAULT_ENUM_CAP).unwrap();
        let red = &prep.reduction.instance;
        let p = &prep.params;
        let (_, f_star) = brute_force_opt(red).unwrap();
        let (fe, _) = simulate_merge_rules(red, &prep.td, &f_star, p.eps).unwrap();
        let labels = component_labels(red, fe.edges.iter().copied());
        for ctx in &prep.contexts {
            let mut cs: Vec<usize> = ctx.active.iter().map(|&t| labels[t]).collect();
            cs.sort_unstable();
            cs.dedup();
            for c in cs {
                let members: Vec<usize> = ctx.active.iter().copied().filter(|&t| labels[t] == c).collect();
                let cost: u64 = fe.edges.iter().filter(|&&e| labels[red.edge(e).u] == c).map(|&e| red.edge(e).w).sum();
                let delta = pow_unit(cost, p.w_min) as u128 * *p.eps.numer() as u128;
                let net = greedy_delta_net(&members, |a, b| prep.dist.get(a, b), delta, *p.eps.denom() as u128 * p.k as u128);
                comps += 1;
                small += usize::from(net.len() <= p.max_set_size());
            }
        }
    }
    rep.line(
        7,
        "skeleton, net and component-net bounds",
        skel_ok == corpus.len() && nets_ok == NET_TRIALS && small == comps,
        format!("skeleton {skel_ok}/{}, nets {nets_ok}/{NET_TRIALS}, component nets {small}/{comps}", corpus.len()),
    );
}

fn two_pole(rep: &mut Report) {
    let mut r = common::rng(CORPUS_SEED + 8);
    let mut agree = 0;
    for _ in 0..TWO_POLE_FAMILY {
        let g = common::random_two_pole(&mut r);
        let same = match (solve_two_pole(&g, 0, 1), common::brute_separating(&g)) {
            (Ok(f), Some(c)) => f.cost(&g) == c,
            (Err(SfError::Infeasible(_)), None) => true,
            _ => false,
        };
        agree += usize::from(same);
    }
    rep.line(
        8,
        "two-pole min cut equals separating brute force",
        agree == TWO_POLE_FAMILY,
        format!("{agree}/{TWO_POLE_FAMILY} instances agree"),
    );
}

fn chain_td(bag: impl Fn(usize) -> Vec<usize>, len: usize) -> TreeDecomposition {
    TreeDecomposition::new((0..len).map(|i| i.checked_sub(1)).collect(), (0..len).map(bag).collect()).unwrap()
}

fn decompositions(rep: &mut Report) {
    let mut cases: Vec<(String, Instance, TreeDecomposition)> = Vec::new();
    for n in [16usize, 128, 1024] {
        let path = Instance::new(n, (0..n - 1).map(|i| (i, i + 1, 1)), []).unwrap();
        cases.push((format!("path {n}"), path, chain_td(|i| vec![i, i + 1], n - 1)));
        let cycle = Instance::new(n, (0..n).map(|i| (i, (i + 1) % n, 1)), []).unwrap();
        cases.push((format!("cycle {n}"), cycle, chain_td(|i| vec![0, i + 1, i + 2], n - 2)));
        let rnd = gen_random_bounded(n as u64, &Profile { n, m: n + 2, demands: 4, weight_max: 5, target: TargetParam::Fes(3) }).unwrap();
        let td = heuristic_td(&rnd);
        cases.push((format!("random {n}"), rnd, td));
    }
    let mut ok = 0;
    let (mut worst_w, mut worst_h) = (0f64, 0f64);
    for (_, inst, td) in &cases {
        let k = td.width();
        let b = rebalance(td);
        worst_w = worst_w.max((b.width() + 1) as f64 / (k + 1) as f64);
        worst_h = worst_h.max(b.height() as f64 / ((k + 1) as f64 * (1.0 + (inst.n() as f64).log2())));
        let good = validate_td(inst, &b).ok
            && b.is_nice()
            && b.width() <= width_bound(k)
            && b.height() as f64 <= height_bound(k, inst.n());
        ok += usize::from(good);
    }
    rep.line(
        9,
        "rebalance is valid, nice and within the width and height bounds",
        ok == cases.len(),
        format!(
            "{ok}/{} decompositions (C_w = {REBALANCE_C_W}, C_h = {REBALANCE_C_H}; measured width factor {worst_w:.2}, height factor {worst_h:.2})",
            cases.len()
        ),
    );
}

fn two_approx(rep: &mut Report, corpus: &[Instance], opt: &[u64]) {
    let ok = corpus
        .iter()
        .zip(opt)
        .filter(|(i, &o)| two_approx_primal_dual(i).ok().and_then(|f| verify(i, &f).ok()).is_some_and(|c| c <= 2 * o))
        .count();
    rep.line(10, "2-approximation within 2·OPT", ok == corpus.len(), format!("{ok}/{} instances", corpus.len()));
}

fn sat_gadget(rep: &mut Report) {
    let mut r = common::rng(CORPUS_SEED + 11);
    let (mut sat, mut ok) = (0, 0);
    while sat < SAT_FORMULAS {
        let vars = r.gen_range(1..=SAT_MAX_VARS);
        let count = r.gen_range(1..=2 * vars);
        let clauses = (0..count)
            .map(|_| {
                let len = r.gen_range(1..=3);
                (0..len).map(|_| r.gen_range(1..=vars as i64) * if r.gen_bool(0.5) { 1 } else { -1 }).collect()
            })
            .collect();
        let cnf = Cnf3::new(vars, clauses).unwrap();
        let Some(a) = cnf.brute_force_sat() else { continue };
        sat += 1;
        let t = tsat3_transform(&cnf);
        let (inst, lay) = sat_to_steiner_forest(&t).unwrap();
        let full: Vec<bool> = (0..3).flat_map(|_| a.iter().copied()).collect();
        let sol = assignment_to_solution(&inst, &lay, &full).unwrap();
        let ev = evaluate_solution(&inst, &sol.forest).unwrap();
        let b = 2 * t.clauses.len() as u64 + 12 * (lay.l * lay.log_n) as u64;
        let cover_ok = CoverCertificate::new(&inst, lay.cover_witness()).is_ok();
        let cv: Vec<usize> = lay.clause_vertices.iter().flat_map(|&(x, y)| [x, y]).collect();
        let independent = cv.iter().all(|&x| cv.iter().all(|&y| inst.edge_between(x, y).is_none()));
        ok += usize::from(ev.feasible && ev.cost == b && lay.budget == b && cover_ok && independent);
    }
    rep.line(
        11,
        "SAT gadget: satisfying assignments give cost exactly B",
        ok == sat,
        format!("{ok}/{sat} satisfiable formulas with <= {SAT_MAX_VARS} variables (cover witness and clause independence checked)"),
    );
}

fn aspect(rep: &mut Report, corpus: &[Instance], opt: &[u64]) {
    let (mut runs, mut ok) = (0, 0);
    for (inst, &o) in corpus.iter().zip(opt) {
        for eps in eps_list() {
            runs += 1;
            let (num, den) = (*eps.numer(), *eps.denom());
            let red = reduce_aspect_ratio(inst, num, den).unwrap();
            let ws: Vec<u64> = red.instance.edges().iter().map(|e| e.w).collect();
            let ratio_ok = match (ws.iter().min(), ws.iter().max()) {
                (Some(&lo), Some(&hi)) => hi as u128 * num as u128 <= 2 * inst.n() as u128 * lo as u128 * den as u128,
                _ => true,
            };
            let (_, f) = brute_force_opt(&red.instance).unwrap();
            let lifted = lift_solution(&f, &red.trace).ok().and_then(|l| verify(inst, &l).ok());
            ok += usize::from(ratio_ok && lifted.is_some_and(|c| within(c, o, eps)));
        }
    }
    rep.line(
        12,
        "aspect-ratio reduction: ratio <= 2n/eps and lifted optimum within (1+eps)·OPT",
        ok == runs,
        format!("{ok}/{runs} (instance, eps) runs"),
    );
}

fn main() {
    let corpus = common::corpus(CORPUS_SIZE, CORPUS_SEED);
    let opt = opts(&corpus);
    let mut rep = Report { failed: Vec::new() };
    fes_oracle(&mut rep, &corpus, &opt);
    vc_oracle(&mut rep, &corpus, &opt);
    conforming_oracle(&mut rep);
    epas_guarantee(&mut rep, &corpus, &opt);
    charging(&mut rep, &corpus);
    refinement(&mut rep, &corpus);
    structural(&mut rep, &corpus);
    two_pole(&mut rep);
    decompositions(&mut rep);
    two_approx(&mut rep, &corpus, &opt);
    sat_gadget(&mut rep);
    aspect(&mut rep, &corpus, &opt);
    if !rep.failed.is_empty() {
        eprintln!("failed criteria: {:?}", rep.failed);
        std::process::exit(1);
    }
}
