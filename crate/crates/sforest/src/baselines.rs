//! Primal-dual 2-approximation and exhaustive oracles.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Result, SfError};
use crate::instance::{evaluate_solution, Forest, Instance};
use crate::partition::PartitionFamily;
use crate::td::{bag_contexts, TreeDecomposition};
use crate::util::{canonical_rgs, UnionFind};

pub const BRUTE_MAX_EDGES: usize = 24;
pub const BRUTE_CONFORMING_MAX_EDGES: usize = 18;

fn feasible_with(inst: &Instance, edges: impl IntoIterator<Item = usize>) -> bool {
    let mut uf = UnionFind::new(inst.n());
    for e in edges {
        let ed = inst.edge(e);
        uf.union(ed.u, ed.v);
    }
    inst.demands().iter().all(|&(s, t)| uf.same(s, t))
}

/// Uniform dual growth on active components, then reverse delete.
///
/// A component is active while it holds a terminal whose partner lies outside. Each step
/// grows all active duals until the first edge between two components goes tight (lowest
/// edge id on ties) and admits it.
pub fn two_approx_primal_dual(inst: &Instance) -> Result<Forest> {
    inst.check_demands_connected()?;
    let n = inst.n();
    let mut uf = UnionFind::new(n);
    let mut load: Vec<BigRational> = vec![BigRational::zero(); n];
    let mut admitted: Vec<usize> = Vec::new();
    loop {
        let mut active_root = vec![false; n];
        for &(s, t) in inst.demands() {
            let (rs, rt) = (uf.find(s), uf.find(t));
            if rs != rt {
                active_root[rs] = true;
                active_root[rt] = true;
            }
        }
        if !active_root.iter().any(|&a| a) {
            break;
        }
        let roots: Vec<usize> = (0..n).map(|v| uf.find(v)).collect();
        let mut best: Option<(BigRational, usize)> = None;
        for (id, e) in inst.edges().iter().enumerate() {
            let (ru, rv) = (roots[e.u], roots[e.v]);
            if ru == rv {
                continue;
            }
            let rate = active_root[ru] as i64 + active_root[rv] as i64;
            if rate == 0 {
                continue;
            }
            let slack = BigRational::from_integer(BigInt::from(e.w)) - &load[e.u] - &load[e.v];
            let t = slack / BigRational::from_integer(BigInt::from(rate));
            if best.as_ref().is_none_or(|(bt, _)| t < *bt) {
                best = Some((t, id));
            }
        }
        let Some((dt, id)) = best else {
            return Err(SfError::Infeasible("no edge leaves an active component".into()));
        };
        for v in 0..n {
            if active_root[roots[v]] {
                load[v] += &dt;
            }
        }
        let e = inst.edge(id);
        uf.union(e.u, e.v);
        admitted.push(id);
    }
    let mut keep: Vec<bool> = vec![false; inst.m()];
    for &e in &admitted {
        keep[e] = true;
    }
    for &e in admitted.iter().rev() {
        keep[e] = false;
        if !feasible_with(inst, (0..inst.m()).filter(|&i| keep[i])) {
            keep[e] = true;
        }
    }
    Ok(Forest::new((0..inst.m()).filter(|&i| keep[i])))
}

fn subset_edges(mask: u64, m: usize) -> Vec<usize> {
    (0..m).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Exhaustive optimum over all edge subsets; ties go to the lexicographically smallest
/// sorted edge list.
pub fn brute_force_opt(inst: &Instance) -> Result<(u64, Forest)> {
    let m = inst.m();
    if m > BRUTE_MAX_EDGES {
        return Err(SfError::ResourceCap(format!("brute force limited to {BRUTE_MAX_EDGES} edges, instance has {m}")));
    }
    let mut best: Option<(u64, Vec<usize>)> = None;
    for mask in 0u64..(1u64 << m) {
        let cost: u64 = (0..m).filter(|&i| mask >> i & 1 == 1).map(|i| inst.edge(i).w).sum();
        if best.as_ref().is_some_and(|(c, _)| cost > *c) {
            continue;
        }
        if !feasible_with(inst, (0..m).filter(|&i| mask >> i & 1 == 1)) {
            continue;
        }
        let edges = subset_edges(mask, m);
        if best.as_ref().is_none_or(|(c, e)| (cost, &edges) < (*c, e)) {
            best = Some((cost, edges));
        }
    }
    match best {
        Some((c, e)) => Ok((c, Forest::new(e))),
        None => Err(SfError::Infeasible("no edge subset satisfies all demands".into())),
    }
}

/// Exhaustive optimum among feasible edge subsets whose active-component partition at every
/// node with active terminals is listed in `fam`.
pub fn brute_force_conforming(inst: &Instance, td: &TreeDecomposition, fam: &PartitionFamily) -> Result<(u64, Forest)> {
    let m = inst.m();
    if m > BRUTE_CONFORMING_MAX_EDGES {
        return Err(SfError::ResourceCap(format!(
            "conforming brute force limited to {BRUTE_CONFORMING_MAX_EDGES} edges, instance has {m}"
        )));
    }
    let ctx = bag_contexts(inst, td);
    fam.check(&ctx)?;
    let allowed: Vec<(usize, HashSet<Vec<u8>>)> = fam
        .rgs_sets(&ctx)
        .into_iter()
        .enumerate()
        .filter_map(|(x, s)| s.map(|s| (x, s)))
        .collect();
    let mut best: Option<(u64, Vec<usize>)> = None;
    for mask in 0u64..(1u64 << m) {
        let cost: u64 = (0..m).filter(|&i| mask >> i & 1 == 1).map(|i| inst.edge(i).w).sum();
        if best.as_ref().is_some_and(|(c, _)| cost > *c) {
            continue;
        }
        let mut uf = UnionFind::new(inst.n());
        for i in 0..m {
            if mask >> i & 1 == 1 {
                let e = inst.edge(i);
                uf.union(e.u, e.v);
            }
        }
        if !inst.demands().iter().all(|&(s, t)| uf.same(s, t)) {
            continue;
        }
        let ok = allowed.iter().all(|(x, set)| {
            let labels: Vec<usize> = ctx[*x].active.iter().map(|&t| uf.find(t)).collect();
            set.contains(&canonical_rgs(&labels))
        });
        if !ok {
            continue;
        }
        let edges = subset_edges(mask, m);
        if best.as_ref().is_none_or(|(c, e)| (cost, &edges) < (*c, e)) {
            best = Some((cost, edges));
        }
    }
    match best {
        Some((c, e)) => Ok((c, Forest::new(e))),
        None => Err(SfError::Infeasible("no conforming feasible edge subset".into())),
    }
}

/// Re-checks a solver result: evaluates feasibility independently.
pub fn verify(inst: &Instance, f: &Forest) -> Result<u64> {
    let ev = evaluate_solution(inst, f)?;
    if !ev.feasible {
        return Err(SfError::Internal(format!("solution violates demands {:?}", ev.violations)));
    }
    Ok(ev.cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::Partition;
    use crate::util::all_rgs;

    fn triangle() -> Instance {
        Instance::new(3, [(0, 1, 1), (1, 2, 1), (0, 2, 3)], [(0, 2)]).unwrap()
    }

    #[test]
    fn approx_triangle() {
        let inst = triangle();
        let f = two_approx_primal_dual(&inst).unwrap();
        let ev = evaluate_solution(&inst, &f).unwrap();
        assert!(ev.feasible && ev.cost <= 4);
        let single = Instance::new(2, [(0, 1, 9)], [(0, 1)]).unwrap();
        assert_eq!(two_approx_primal_dual(&single).unwrap(), Forest::new([0]));
        assert!(two_approx_primal_dual(&Instance::new(2, [(0, 1, 9)], []).unwrap()).unwrap().is_empty());
    }

    #[test]
    fn brute_triangle() {
        let (c, f) = brute_force_opt(&triangle()).unwrap();
        assert_eq!(c, 2);
        assert_eq!(f, Forest::new([0, 2]));
        let none = Instance::new(3, [(0, 1, 1)], []).unwrap();
        assert_eq!(brute_force_opt(&none).unwrap(), (0, Forest::empty()));
        let split = Instance::new(4, [(0, 1, 1), (2, 3, 1)], [(0, 3)]).unwrap();
        assert!(matches!(brute_force_opt(&split), Err(SfError::Infeasible(_))));
        assert!(matches!(two_approx_primal_dual(&split), Err(SfError::Infeasible(_))));
    }

    #[test]
    fn conforming_full_family_equals_opt() {
        let inst = triangle();
        let td = crate::td::make_nice(&crate::td::heuristic_td(&inst));
        let ctx = bag_contexts(&inst, &td);
        let mut all = PartitionFamily::new(td.len());
        for c in &ctx {
            for r in all_rgs(c.active.len()) {
                let p = Partition::from_key(&c.active, |t| r[c.active.binary_search(&t).unwrap()]);
                all.insert(c.node, p);
            }
        }
        assert_eq!(brute_force_conforming(&inst, &td, &all).unwrap().0, 2);
        let trivial = crate::partition::family_trivial(&inst, &td);
        assert_eq!(brute_force_conforming(&inst, &td, &trivial).unwrap().0, 2);
        if let Some(x) = ctx.iter().position(|c| !c.active.is_empty()) {
            let mut per: Vec<Vec<Partition>> = (0..td.len()).map(|y| all.get(y).to_vec()).collect();
            per[x].clear();
            let holed = PartitionFamily::from_vec(per);
            assert!(matches!(brute_force_conforming(&inst, &td, &holed), Err(SfError::Infeasible(_))));
        }
    }
}
