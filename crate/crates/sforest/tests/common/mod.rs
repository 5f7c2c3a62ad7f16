//! Seeded instance corpus and helpers shared by the integration suites.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sforest::instance::{component_labels, Instance};
use sforest::partition::{Partition, PartitionFamily};
use sforest::td::{bag_contexts, TreeDecomposition};
use sforest::util::UnionFind;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Connected instance with `n` vertices, `m` edges, weights in `1..=wmax`, `d` demands.
pub fn random_connected(rng: &mut ChaCha8Rng, n: usize, m: usize, wmax: u64, d: usize) -> Instance {
    let mut edges = std::collections::BTreeSet::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.insert((u, v));
    }
    let max_m = n * (n - 1) / 2;
    while edges.len() < m.min(max_m) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let mut demands = Vec::new();
    while demands.len() < d {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            demands.push((a, b));
        }
    }
    Instance::new(n, edges.into_iter().map(|(u, v)| (u, v, rng.gen_range(1..=wmax))), demands).unwrap()
}

/// The oracle corpus: n in 4..=9, m between n-1 and min(14, n+5, n(n-1)/2), weights 1..=8,
/// one to three demands, always connected.
pub fn corpus(count: usize, seed: u64) -> Vec<Instance> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let n = r.gen_range(4..=9);
            let hi = 14.min(n + 5).min(n * (n - 1) / 2);
            let m = r.gen_range(n - 1..=hi);
            let d = r.gen_range(1..=3);
            random_connected(&mut r, n, m, 8, d)
        })
        .collect()
}

/// Smallest vertex cover by exhaustive search.
pub fn min_vertex_cover(inst: &Instance) -> Vec<usize> {
    let n = inst.n();
    let mut best: Option<Vec<usize>> = None;
    for mask in 0u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if best.as_ref().is_some_and(|b| b.len() <= size) {
            continue;
        }
        if inst.edges().iter().all(|e| mask >> e.u & 1 == 1 || mask >> e.v & 1 == 1) {
            best = Some((0..n).filter(|&v| mask >> v & 1 == 1).collect());
        }
    }
    best.unwrap_or_default()
}

/// Up to three partitions per node with active terminals: random groupings, and often the
/// grouping induced by a random feasible edge set.
pub fn random_family(r: &mut ChaCha8Rng, inst: &Instance, td: &TreeDecomposition) -> PartitionFamily {
    let ctx = bag_contexts(inst, td);
    // a random feasible forest: random edge order kruskal until all demands hold
    let mut order: Vec<usize> = (0..inst.m()).collect();
    order.shuffle(r);
    let mut chosen = Vec::new();
    for e in order {
        chosen.push(e);
        let comp = component_labels(inst, chosen.iter().copied());
        if inst.demands().iter().all(|&(s, t)| comp[s] == comp[t]) {
            break;
        }
    }
    let comp = component_labels(inst, chosen.iter().copied());
    let mut fam = PartitionFamily::new(td.len());
    for c in &ctx {
        if c.active.is_empty() {
            continue;
        }
        let count = r.gen_range(0..=3);
        for i in 0..count {
            let p = if i == 0 && r.gen_bool(0.7) {
                Partition::from_key(&c.active, |t| comp[t])
            } else {
                let k = r.gen_range(1..=c.active.len());
                let labels: Vec<usize> = c.active.iter().map(|_| r.gen_range(0..k)).collect();
                Partition::from_key(&c.active, |t| labels[c.active.binary_search(&t).unwrap()])
            };
            fam.insert(c.node, p);
        }
    }
    fam
}

/// Parallel paths between poles 0 and 1 with random demands between interiors of different paths.
pub fn random_two_pole(r: &mut rand_chacha::ChaCha8Rng) -> Instance {
    let paths = r.gen_range(2..=4);
    let mut edges = Vec::new();
    let mut interiors: Vec<Vec<usize>> = Vec::new();
    let mut next = 2;
    while edges.len() < 12 && interiors.len() < paths {
        let len = r.gen_range(1..=3).min(12 - edges.len() - 1).max(1);
        let mut prev = 0;
        let mut inner = Vec::new();
        for _ in 0..len {
            edges.push((prev, next, r.gen_range(1..=8)));
            inner.push(next);
            prev = next;
            next += 1;
        }
        edges.push((prev, 1, r.gen_range(1..=8)));
        interiors.push(inner);
    }
    let mut demands = Vec::new();
    for _ in 0..r.gen_range(0..=3) {
        let a = r.gen_range(0..interiors.len());
        let b = r.gen_range(0..interiors.len());
        if a != b {
            let x = interiors[a][r.gen_range(0..interiors[a].len())];
            let y = interiors[b][r.gen_range(0..interiors[b].len())];
            demands.push((x, y));
        }
    }
    Instance::new(next, edges, demands).unwrap()
}

/// Cheapest feasible edge set that keeps poles 0 and 1 apart.
pub fn brute_separating(inst: &Instance) -> Option<u64> {
    let m = inst.m();
    let mut best = None;
    for mask in 0u32..(1 << m) {
        let mut uf = UnionFind::new(inst.n());
        let mut cost = 0;
        for e in 0..m {
            if mask >> e & 1 == 1 {
                let ed = inst.edge(e);
                uf.union(ed.u, ed.v);
                cost += ed.w;
            }
        }
        if !uf.same(0, 1) && inst.demands().iter().all(|&(s, t)| uf.same(s, t)) && best.is_none_or(|b| cost < b) {
            best = Some(cost);
        }
    }
    best
}
