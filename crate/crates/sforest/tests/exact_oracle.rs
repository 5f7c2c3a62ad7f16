mod common;

use sforest::baselines::brute_force_opt;
use sforest::fes::{build_skeleton, solve_fes, solve_two_pole};
use sforest::instance::evaluate_solution;
use sforest::reduce::apply_rule3;
use sforest::vc::{build_vc_decomposition, cover_preprocess, solve_vc, CoverCertificate};
use sforest::partition::conforms;
use sforest::td::bag_contexts;

#[test]
fn fes_matches_brute_force() {
    let insts = common::corpus(320, 21);
    for (i, inst) in insts.iter().enumerate() {
        let (opt, _) = brute_force_opt(inst).unwrap();
        let f = solve_fes(inst).unwrap();
        let ev = evaluate_solution(inst, &f).unwrap();
        assert!(ev.feasible, "instance {i}");
        assert_eq!(ev.cost, opt, "instance {i}");
    }
}

#[test]
fn skeleton_bounds_on_corpus() {
    for inst in common::corpus(320, 21) {
        let red = apply_rule3(&inst).instance;
        let sk = build_skeleton(&red).unwrap();
        let k = sk.k();
        let deg3 = (0..red.n()).filter(|&v| red.degree(v) >= 3).count();
        assert!(deg3 <= 2 * k);
        assert!(sk.special.len() <= 4 * k);
        assert!(sk.topo_edges.len() <= 5 * k);
        let mut seen = vec![0; red.m()];
        for t in &sk.topo_edges {
            for &e in &t.edges {
                seen[e] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        let comps = {
            let c = red.components();
            let mut c = c.clone();
            c.sort_unstable();
            c.dedup();
            c.len()
        };
        assert_eq!(k + red.n(), red.m() + comps);
    }
}

#[test]
fn vc_matches_brute_force_and_conforms() {
    let insts = common::corpus(320, 31);
    for (i, inst) in insts.iter().enumerate() {
        let (opt, _) = brute_force_opt(inst).unwrap();
        let cert = CoverCertificate::new(inst, common::min_vertex_cover(inst)).unwrap();
        let f = solve_vc(inst, Some(&cert)).unwrap();
        let ev = evaluate_solution(inst, &f).unwrap();
        assert!(ev.feasible, "instance {i}");
        assert_eq!(ev.cost, opt, "instance {i}");
        let (p, c2, tr) = cover_preprocess(inst, &cert).unwrap();
        let (td, fam) = build_vc_decomposition(&p, &c2).unwrap();
        assert!(td.width() <= cert.size());
        assert!((0..td.len()).all(|x| fam.get(x).len() <= 1));
        // an optimum of the preprocessed instance conforms
        let (_, of) = brute_force_opt(&p).unwrap();
        let comp = sforest::instance::component_labels(&p, of.edges.iter().copied());
        assert!(conforms(&bag_contexts(&p, &td), &fam, &comp), "instance {i}");
        assert_eq!(tr.lift(&of).cost(inst), opt);
    }
}

#[test]
fn two_pole_matches_separating_brute_force() {
    let mut r = common::rng(41);
    let mut solved = 0;
    for i in 0..400 {
        let g = common::random_two_pole(&mut r);
        match (solve_two_pole(&g, 0, 1), common::brute_separating(&g)) {
            (Ok(f), Some(c)) => {
                assert_eq!(f.cost(&g), c, "instance {i}");
                solved += 1;
            }
            (Err(sforest::SfError::Infeasible(_)), None) => {}
            (a, b) => panic!("instance {i}: {a:?} vs {b:?}"),
        }
    }
    assert!(solved > 200);
}
