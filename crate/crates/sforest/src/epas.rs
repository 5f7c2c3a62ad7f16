//! Approximation scheme parameterized by treewidth.
//!
//! Each bag's active terminals are first cut into a refinement partition ζ: terminals are
//! grouped by closest bag vertex and by distance annulus, then either a whole annulus or
//! each net point's neighbourhood becomes a block. Candidate partitions of the active set are
//! then produced from sequences of (block set, scale) pairs plus a grouping of the pairs, and
//! the conforming DP picks the best forest consistent with them.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashSet};
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_rational::Ratio;

use crate::conforming::solve_conforming;
use crate::error::{Result, SfError};
use crate::instance::{evaluate_solution, Forest, Instance};
use crate::partition::{Partition, PartitionFamily};
use crate::reduce::{lift_solution, reduce_aspect_ratio, AspectReduction};
use crate::td::{
    bag_contexts, heuristic_td, make_nice, push_terminals_to_leaves, rebalance, validate_td, BagContext,
    TreeDecomposition,
};
use crate::util::{pow2_floor, BitSet, UnionFind};

/// Default bound on enumeration steps per bag.
pub const DEFAULT_ENUM_CAP: u64 = 10_000_000;

/// Constant in the ζ size bound `C_ZETA * k^4 h^2 / eps^2 * log2(max(2, D/d))`.
pub const C_ZETA: u64 = 66;

fn checked_prod(xs: &[u128]) -> Option<u128> {
    xs.iter().try_fold(1u128, |acc, &x| acc.checked_mul(x))
}

fn big_prod(xs: &[u128]) -> BigUint {
    xs.iter().fold(BigUint::from(1u8), |acc, &x| acc * BigUint::from(x))
}

/// Whether the product of `a` is at most the product of `b`, exactly.
pub(crate) fn prod_le(a: &[u128], b: &[u128]) -> bool {
    match (checked_prod(a), checked_prod(b)) {
        (Some(x), Some(y)) => x <= y,
        _ => big_prod(a) <= big_prod(b),
    }
}

/// Largest `a / (64 den)` with `(1 + eps)^2 + eps <= 1 + target`.
pub fn eps_internal(target: Ratio<u64>) -> Result<Ratio<u64>> {
    let (num, den) = (*target.numer(), *target.denom());
    if num == 0 {
        return Err(SfError::Invalid("eps must be positive".into()));
    }
    if den > 1 << 32 {
        return Err(SfError::Invalid("eps denominator above 2^32".into()));
    }
    let q = 64 * den as u128;
    // (a^2 + 3aq) den <= num q^2
    let ok = |a: u128| big_prod(&[a, a + 3 * q, den as u128]) <= big_prod(&[num as u128, q, q]);
    let (mut lo, mut hi) = (0u128, (num as u128 * q) / den as u128 / 3 + 2);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    if lo == 0 {
        return Err(SfError::Invalid("eps too small".into()));
    }
    let a = u64::try_from(lo).map_err(|_| SfError::Invalid("eps too large".into()))?;
    Ok(Ratio::new(a, 64 * den))
}

/// Shortest-path distances and trees from every vertex.
#[derive(Clone, Debug)]
pub struct Distances {
    n: usize,
    dist: Vec<u64>,
    pred: Vec<usize>,
}

impl Distances {
    /// Dijkstra from every source, settling vertices by (distance, id).
    pub fn new(inst: &Instance) -> Self {
        let n = inst.n();
        let mut dist = vec![u64::MAX; n * n];
        let mut pred = vec![usize::MAX; n * n];
        for s in 0..n {
            let row = s * n;
            dist[row + s] = 0;
            let mut heap = BinaryHeap::from([Reverse((0u64, s))]);
            while let Some(Reverse((d, x))) = heap.pop() {
                if d > dist[row + x] {
                    continue;
                }
                for &(y, e) in inst.adj(x) {
                    let nd = d + inst.edge(e).w;
                    if nd < dist[row + y] {
                        dist[row + y] = nd;
                        pred[row + y] = e;
                        heap.push(Reverse((nd, y)));
                    }
                }
            }
        }
        Distances { n, dist, pred }
    }

    /// `u64::MAX` when unreachable.
    pub fn get(&self, u: usize, v: usize) -> u64 {
        self.dist[u * self.n + v]
    }

    /// Edges of the stored shortest path from `s` to `t`.
    pub fn path(&self, inst: &Instance, s: usize, t: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut x = t;
        while x != s {
            let e = self.pred[s * self.n + x];
            if e == usize::MAX {
                return Vec::new();
            }
            out.push(e);
            x = inst.edge(e).other(x);
        }
        out.reverse();
        out
    }

    fn set_dist(&self, a: &[usize], b: &[usize]) -> (u64, usize, usize) {
        let mut best = (u64::MAX, usize::MAX, usize::MAX);
        for &u in a {
            for &v in b {
                best = best.min((self.get(u, v), u, v));
            }
        }
        best
    }
}

/// Greedy net in ascending id order: a point is kept iff it is farther than
/// `delta_num / delta_den` from every kept point.
pub fn greedy_delta_net(points: &[usize], dist: impl Fn(usize, usize) -> u64, delta_num: u128, delta_den: u128) -> Vec<usize> {
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    let mut net: Vec<usize> = Vec::new();
    for p in pts {
        if net.iter().all(|&q| !prod_le(&[dist(p, q) as u128, delta_den], &[delta_num])) {
            net.push(p);
        }
    }
    net
}

/// Parameters shared by ζ construction, enumeration and the merge-rule simulator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpasParams {
    pub eps_target: Ratio<u64>,
    pub eps: Ratio<u64>,
    /// Width of the decomposition, raised to 1 for width 0.
    pub k: usize,
    /// Height of the decomposition in nodes.
    pub h: usize,
    pub n_orig: usize,
    /// Unit for scales: the lightest edge weight of the working instance.
    pub w_min: u64,
}

impl EpasParams {
    pub fn new(eps_target: Ratio<u64>, td: &TreeDecomposition, inst: &Instance, n_orig: usize) -> Result<Self> {
        Ok(EpasParams {
            eps_target,
            eps: eps_internal(eps_target)?,
            k: td.width().max(1),
            h: td.height(),
            n_orig,
            w_min: inst.edges().iter().map(|e| e.w).min().unwrap_or(1).max(1),
        })
    }

    fn en(&self) -> u128 {
        *self.eps.numer() as u128
    }

    fn ed(&self) -> u128 {
        *self.eps.denom() as u128
    }

    /// `floor(4k / eps)`.
    pub fn max_set_size(&self) -> usize {
        (4 * self.k as u128 * self.ed() / self.en()) as usize
    }

    /// Largest `q` with `2^q <= 2 n^2 / eps`.
    pub fn max_scale_exponent(&self) -> u32 {
        let bound = 2 * (self.n_orig as u128).pow(2) * self.ed() / self.en();
        if bound == 0 {
            0
        } else {
            127 - bound.leading_zeros()
        }
    }

    /// The scales `w_min * 2^q`, `0 <= q <= max_scale_exponent`.
    pub fn scales(&self) -> Vec<u128> {
        (0..=self.max_scale_exponent()).map(|q| (self.w_min as u128) << q).collect()
    }

    /// Whether a net of `size` points reaches `8 k^2 (k+1) h^2 / eps^2`.
    pub fn net_is_large(&self, size: usize) -> bool {
        let (k, h) = (self.k as u128, self.h as u128);
        prod_le(&[8, k, k, k + 1, h, h, self.ed(), self.ed()], &[size as u128, self.en(), self.en()])
    }

    /// `C_ZETA * k^4 h^2 / eps^2 * log2(max(2, dmax / d))`.
    pub fn zeta_bound(&self, d: u64, dmax: u64) -> f64 {
        let (k, h) = (self.k as f64, self.h as f64);
        let eps = self.en() as f64 / self.ed() as f64;
        let ratio = (dmax as f64 / d as f64).max(2.0);
        C_ZETA as f64 * k.powi(4) * h * h / (eps * eps) * ratio.log2()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlockOrigin {
    /// A terminal of the bag itself.
    InBag,
    /// Terminals closest to bag vertex `anchor` at distance in `[2^j d, 2^(j+1) d)`; either
    /// the whole annulus or the terminals nearest to `net_point`.
    Annulus { anchor: usize, j: u32, net_point: Option<usize> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZetaBlock {
    pub members: Vec<usize>,
    pub origin: BlockOrigin,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZetaPartition {
    pub node: usize,
    pub blocks: Vec<ZetaBlock>,
    /// Smallest and largest distance of an off-bag active terminal to the bag.
    pub d: Option<u64>,
    pub d_max: Option<u64>,
}

impl ZetaPartition {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn partition(&self) -> Partition {
        Partition::new(self.blocks.iter().map(|b| b.members.clone()).collect()).expect("blocks are disjoint")
    }
}

/// Refinement partition of the active terminals of one bag.
pub fn zeta_partition(ctx: &BagContext, dist: &Distances, params: &EpasParams) -> Result<ZetaPartition> {
    let mut blocks = Vec::new();
    let mut off: Vec<(usize, usize, u64)> = Vec::new(); // (terminal, closest bag vertex, distance)
    for &t in &ctx.active {
        if ctx.bag.binary_search(&t).is_ok() {
            blocks.push(ZetaBlock { members: vec![t], origin: BlockOrigin::InBag });
            continue;
        }
        let (dt, b) = ctx.bag.iter().map(|&b| (dist.get(t, b), b)).min().ok_or_else(|| {
            SfError::Internal(format!("node {}: active terminal {t} below an empty bag", ctx.node))
        })?;
        if dt == u64::MAX || dt == 0 {
            return Err(SfError::Internal(format!("node {}: terminal {t} has distance {dt} to the bag", ctx.node)));
        }
        off.push((t, b, dt));
    }
    let d = off.iter().map(|x| x.2).min();
    let d_max = off.iter().map(|x| x.2).max();
    if let Some(d) = d {
        let (en, ed) = (params.en(), params.ed());
        let (k, h) = (params.k as u128, params.h as u128);
        let mut groups: std::collections::BTreeMap<(usize, u32), Vec<usize>> = Default::default();
        for &(t, b, dt) in &off {
            let j = 63 - (dt / d).leading_zeros();
            groups.entry((b, j)).or_default().push(t);
        }
        for ((b, j), members) in groups {
            let scale = (d as u128) << j;
            let net = greedy_delta_net(&members, |x, y| dist.get(x, y), en * scale, ed * k * h);
            if params.net_is_large(net.len()) {
                blocks.push(ZetaBlock { members, origin: BlockOrigin::Annulus { anchor: b, j, net_point: None } });
                continue;
            }
            let mut per: Vec<Vec<usize>> = vec![Vec::new(); net.len()];
            for &t in &members {
                let i = (0..net.len()).min_by_key(|&i| (dist.get(t, net[i]), net[i])).expect("net is non-empty");
                per[i].push(t);
            }
            for (i, m) in per.into_iter().enumerate() {
                blocks.push(ZetaBlock { members: m, origin: BlockOrigin::Annulus { anchor: b, j, net_point: Some(net[i]) } });
            }
        }
    }
    Ok(ZetaPartition { node: ctx.node, blocks, d, d_max })
}

/// Text dump of ζ for every node; ids are 1-based.
pub fn write_zeta(zetas: &[ZetaPartition]) -> String {
    let mut out = String::from("ZETA 1\n");
    for z in zetas.iter().filter(|z| !z.is_empty()) {
        let _ = write!(out, "NODE {}", z.node + 1);
        if let (Some(d), Some(dm)) = (z.d, z.d_max) {
            let _ = write!(out, " D {d} DMAX {dm}");
        }
        out.push('\n');
        for b in &z.blocks {
            let ids: Vec<String> = b.members.iter().map(|v| (v + 1).to_string()).collect();
            let tag = match &b.origin {
                BlockOrigin::InBag => "BAG".to_string(),
                BlockOrigin::Annulus { anchor, j, net_point: None } => format!("ANNULUS {} {j}", anchor + 1),
                BlockOrigin::Annulus { anchor, j, net_point: Some(p) } => format!("NET {} {j} {}", anchor + 1, p + 1),
            };
            let _ = writeln!(out, "BLOCK {tag} : {}", ids.join(" "));
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EnumStats {
    pub subsets: u64,
    pub options: usize,
    pub expansions: u64,
    pub partitions: usize,
}

/// Partitions of the active terminals of one bag produced by all sequences of at most
/// `k + 1` (block set, scale) pairs and groupings of the pairs.
///
/// A sequence is replayed pair by pair: members of the chosen blocks take the pair's group
/// (a clash with an earlier block member under another group dismisses it), and every still
/// unplaced terminal within `eps / k` times the scale of the chosen members takes that group
/// too. Sequences whose result places every terminal yield a partition. Replays that reach
/// the same placement are merged, so work is bounded by distinct placements.
pub fn enumerate_node(ctx: &BagContext, zeta: &ZetaPartition, dist: &Distances, params: &EpasParams, cap: u64) -> Result<(Vec<Partition>, EnumStats)> {
    let mut stats = EnumStats::default();
    let a = ctx.active.len();
    if a == 0 {
        return Ok((Vec::new(), stats));
    }
    let over = |count: u64| {
        SfError::ResourceCap(format!("node {}: partition enumeration needs more than {cap} steps (reached {count})", ctx.node))
    };
    let idx = |t: usize| ctx.active.binary_search(&t).expect("block member is active");
    let blocks: Vec<Vec<usize>> = zeta.blocks.iter().map(|b| b.members.iter().map(|&t| idx(t)).collect()).collect();
    let smax = params.max_set_size().min(blocks.len());
    let scales = params.scales();
    let (en, ed, k) = (params.en(), params.ed(), params.k as u128);
    // distinct (members, reach) options
    let mut options: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    let mut seen_opt: HashSet<(BitSet, BitSet)> = HashSet::new();
    // non-empty block subsets of size <= smax in lexicographic order
    fn subsets(n: usize, smax: usize, f: &mut dyn FnMut(&[usize]) -> Result<()>) -> Result<()> {
        fn rec(start: usize, n: usize, smax: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> Result<()>) -> Result<()> {
            for i in start..n {
                cur.push(i);
                f(cur)?;
                if cur.len() < smax {
                    rec(i + 1, n, smax, cur, f)?;
                }
                cur.pop();
            }
            Ok(())
        }
        rec(0, n, smax, &mut Vec::new(), f)
    }
    subsets(blocks.len(), smax, &mut |s: &[usize]| {
        stats.subsets += 1;
        if stats.subsets > cap {
            return Err(over(stats.subsets));
        }
        let mut u = BitSet::new(a);
        let mut members = Vec::new();
        for &b in s {
            for &t in &blocks[b] {
                u.insert(t);
                members.push(t);
            }
        }
        members.sort_unstable();
        // smallest scale index reaching each terminal
        let mut reach_at: Vec<Option<usize>> = vec![None; a];
        for (t, slot) in reach_at.iter_mut().enumerate() {
            let du = members.iter().map(|&m| dist.get(ctx.active[t], ctx.active[m])).min().unwrap_or(u64::MAX);
            if du == u64::MAX {
                continue;
            }
            *slot = scales.iter().position(|&sc| prod_le(&[du as u128, ed, k], &[en, sc]));
        }
        let mut levels: Vec<usize> = reach_at.iter().flatten().copied().collect();
        levels.sort_unstable();
        levels.dedup();
        for q in levels {
            let mut r = BitSet::new(a);
            let mut reach = Vec::new();
            for t in 0..a {
                if reach_at[t].is_some_and(|x| x <= q) && !u.contains(t) {
                    r.insert(t);
                    reach.push(t);
                }
            }
            if seen_opt.insert((u.clone(), r)) {
                options.push((members.clone(), reach));
            }
        }
        Ok(())
    })?;
    stats.options = options.len();
    let lmax = params.k + 1;
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let mut frontier: Vec<Vec<u8>> = vec![vec![0u8; a]];
    let mut found: BTreeSet<Partition> = BTreeSet::new();
    for _ in 0..lmax {
        let mut next = Vec::new();
        for state in &frontier {
            let labels = state.iter().map(|&c| c.div_ceil(2)).max().unwrap_or(0);
            for (members, reach) in &options {
                for l in 0..=labels {
                    stats.expansions += 1;
                    if stats.subsets + stats.expansions > cap {
                        return Err(over(stats.subsets + stats.expansions));
                    }
                    let hard = 2 * l + 2;
                    let mut s = state.clone();
                    let mut ok = true;
                    for &t in members {
                        if s[t] != 0 && s[t] % 2 == 0 && s[t] != hard {
                            ok = false;
                            break;
                        }
                        s[t] = hard;
                    }
                    if !ok {
                        continue;
                    }
                    for &t in reach {
                        if s[t] == 0 {
                            s[t] = hard - 1;
                        }
                    }
                    if seen.insert(s.clone()) {
                        if s.iter().all(|&c| c != 0) {
                            found.insert(Partition::from_key(&ctx.active, |t| s[idx(t)].div_ceil(2)));
                        }
                        next.push(s);
                    }
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    stats.partitions = found.len();
    Ok((found.into_iter().collect(), stats))
}

/// Candidate partitions for every node.
pub fn enumerate_partition_family(
    ctxs: &[BagContext],
    zetas: &[ZetaPartition],
    dist: &Distances,
    params: &EpasParams,
    cap: u64,
) -> Result<(PartitionFamily, EnumStats)> {
    let mut fam = PartitionFamily::new(ctxs.len());
    let mut total = EnumStats::default();
    for (c, z) in ctxs.iter().zip(zetas) {
        let (ps, st) = enumerate_node(c, z, dist, params, cap)?;
        for p in ps {
            fam.insert(c.node, p);
        }
        total.subsets += st.subsets;
        total.options += st.options;
        total.expansions += st.expansions;
        total.partitions += st.partitions;
    }
    Ok((fam, total))
}

/// Everything computed before the DP runs.
#[derive(Clone, Debug)]
pub struct EpasPrepared {
    pub params: EpasParams,
    pub reduction: AspectReduction,
    pub td: TreeDecomposition,
    pub contexts: Vec<BagContext>,
    pub dist: Distances,
    pub zetas: Vec<ZetaPartition>,
    pub family: PartitionFamily,
    pub enum_stats: EnumStats,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpasStats {
    pub eps_internal: Ratio<u64>,
    pub width: usize,
    pub height: usize,
    pub reduced_vertices: usize,
    pub max_zeta: usize,
    pub family_total: usize,
    pub expansions: u64,
}

/// Replaces every vertex in the bags by its image; images must exist.
fn map_td(td: &TreeDecomposition, map: &[Option<usize>]) -> Result<TreeDecomposition> {
    let parent: Vec<Option<usize>> = (0..td.len()).map(|x| td.parent(x)).collect();
    let mut bags = Vec::with_capacity(td.len());
    for x in 0..td.len() {
        let mut bag = Vec::new();
        for &v in td.bag(x) {
            bag.push(map.get(v).copied().flatten().ok_or_else(|| SfError::Internal(format!("vertex {v} has no image")))?);
        }
        bags.push(bag);
    }
    TreeDecomposition::new(parent, bags)
}

/// Runs the pipeline up to the partition family: rebalance, aspect-ratio reduction, nice
/// form with terminals in leaves, distances, ζ and enumeration.
pub fn prepare_epas(inst: &Instance, td: Option<&TreeDecomposition>, eps_target: Ratio<u64>, cap: u64) -> Result<EpasPrepared> {
    if *eps_target.numer() == 0 {
        return Err(SfError::Invalid("eps must be positive".into()));
    }
    inst.check_demands_connected()?;
    let base = match td {
        Some(td) => {
            let v = validate_td(inst, td);
            if !v.ok {
                return Err(SfError::Precondition(format!("invalid decomposition: {}", v.violations.join("; "))));
            }
            td.clone()
        }
        None => heuristic_td(inst),
    };
    let balanced = rebalance(&base);
    let eps = eps_internal(eps_target)?;
    let reduction = reduce_aspect_ratio(inst, *eps.numer(), *eps.denom())?;
    let mapped = map_td(&balanced, &reduction.trace.vertex_map)?;
    let red = &reduction.instance;
    let td = push_terminals_to_leaves(red, &make_nice(&mapped));
    let params = EpasParams::new(eps_target, &td, red, inst.n())?;
    let contexts = bag_contexts(red, &td);
    let dist = Distances::new(red);
    let zetas = contexts.iter().map(|c| zeta_partition(c, &dist, &params)).collect::<Result<Vec<_>>>()?;
    let (family, enum_stats) = enumerate_partition_family(&contexts, &zetas, &dist, &params, cap)?;
    Ok(EpasPrepared { params, reduction, td, contexts, dist, zetas, family, enum_stats })
}

/// Forest of cost at most `(1 + eps_target)` times the optimum.
pub fn solve_epas(inst: &Instance, td: Option<&TreeDecomposition>, eps_target: Ratio<u64>) -> Result<Forest> {
    solve_epas_with(inst, td, eps_target, DEFAULT_ENUM_CAP).map(|r| r.0)
}

pub fn solve_epas_with(inst: &Instance, td: Option<&TreeDecomposition>, eps_target: Ratio<u64>, cap: u64) -> Result<(Forest, EpasStats)> {
    let prep = prepare_epas(inst, td, eps_target, cap)?;
    solve_prepared(inst, &prep)
}

/// Runs the DP on a prepared family and lifts the result back to `inst`.
pub fn solve_prepared(inst: &Instance, prep: &EpasPrepared) -> Result<(Forest, EpasStats)> {
    let red = &prep.reduction.instance;
    let f = solve_conforming(red, &prep.td, &prep.family)?;
    let lifted = lift_solution(&f, &prep.reduction.trace)?;
    let ev = evaluate_solution(inst, &lifted)?;
    if !ev.feasible {
        return Err(SfError::Internal(format!("lifted forest misses demands {:?}", ev.violations)));
    }
    let stats = EpasStats {
        eps_internal: prep.params.eps,
        width: prep.td.width(),
        height: prep.td.height(),
        reduced_vertices: red.n(),
        max_zeta: prep.zetas.iter().map(ZetaPartition::len).max().unwrap_or(0),
        family_total: prep.family.total(),
        expansions: prep.enum_stats.subsets + prep.enum_stats.expansions,
    };
    Ok((lifted, stats))
}

/// Connected pieces of an edge set: vertex lists (ascending) of components with an edge.
fn components_of(inst: &Instance, edges: &[usize]) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(inst.n());
    let mut touched = vec![false; inst.n()];
    for &e in edges {
        let ed = inst.edge(e);
        uf.union(ed.u, ed.v);
        touched[ed.u] = true;
        touched[ed.v] = true;
    }
    let mut by_root: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for v in (0..inst.n()).filter(|&v| touched[v]) {
        by_root.entry(uf.find(v)).or_default().push(v);
    }
    let mut out: Vec<Vec<usize>> = by_root.into_values().collect();
    out.sort();
    out
}

/// Adds the edges of a shortest path between two vertex sets, skipping edges that would
/// close a cycle.
fn connect(inst: &Instance, dist: &Distances, a: &[usize], b: &[usize], uf: &mut UnionFind, edges: &mut Vec<usize>) {
    let (_, u, v) = dist.set_dist(a, b);
    for e in dist.path(inst, u, v) {
        let ed = inst.edge(e);
        if uf.union(ed.u, ed.v) {
            edges.push(e);
        }
    }
}

/// Largest `unit * 2^q` at most `x` (`x >= unit`).
pub fn pow_unit(x: u64, unit: u64) -> u64 {
    unit * pow2_floor(x / unit)
}

/// Test oracle: applies the two merge rules to a forest.
///
/// Rule 1 joins components of `f_star` that share a bag `B` when their distance is at most
/// `eps / (k h)` times the first one's weight below `B`, visiting bags by depth. Rule 2 then
/// joins components `C <= C'` of the result (ordered by how deep their topmost bag is, then
/// by smallest vertex) when their distance is at most `eps / k` times `pow(cost(C))`, with
/// `pow` measured in units of the lightest edge. Path edges that would close a cycle are
/// skipped.
pub fn simulate_merge_rules(inst: &Instance, td: &TreeDecomposition, f_star: &Forest, eps: Ratio<u64>) -> Result<(Forest, Forest)> {
    let dist = Distances::new(inst);
    let ctx = bag_contexts(inst, td);
    let (en, ed) = (*eps.numer() as u128, *eps.denom() as u128);
    let k = td.width().max(1) as u128;
    let h = td.height() as u128;
    let w_min = inst.edges().iter().map(|e| e.w).min().unwrap_or(1).max(1);
    let in_bag = |x: usize, comp: &[usize]| comp.iter().any(|v| td.bag(x).binary_search(v).is_ok());

    let star = components_of(inst, &f_star.edges);
    let mut comp_of = vec![usize::MAX; inst.n()];
    for (i, c) in star.iter().enumerate() {
        for &v in c {
            comp_of[v] = i;
        }
    }
    let mut uf = UnionFind::new(inst.n());
    let mut f_eps: Vec<usize> = f_star.edges.clone();
    for &e in &f_eps {
        uf.union(inst.edge(e).u, inst.edge(e).v);
    }
    let mut nodes: Vec<usize> = (0..td.len()).collect();
    nodes.sort_by_key(|&x| (td.depth(x), x));
    for &x in &nodes {
        let sharing: Vec<usize> = (0..star.len()).filter(|&i| in_bag(x, &star[i])).collect();
        for &i in &sharing {
            let below: u64 = f_star
                .edges
                .iter()
                .filter(|&&e| comp_of[inst.edge(e).u] == i)
                .filter(|&&e| {
                    let ed = inst.edge(e);
                    let inb = |v: usize| ctx[x].bag.binary_search(&v).is_ok();
                    ctx[x].vb.contains(ed.u) && ctx[x].vb.contains(ed.v) && !(inb(ed.u) && inb(ed.v))
                })
                .map(|&e| inst.edge(e).w)
                .sum();
            for &j in &sharing {
                if i == j || uf.same(star[i][0], star[j][0]) {
                    continue;
                }
                let (d, _, _) = dist.set_dist(&star[i], &star[j]);
                if d != u64::MAX && prod_le(&[d as u128, ed, k, h], &[en, below as u128]) {
                    connect(inst, &dist, &star[i], &star[j], &mut uf, &mut f_eps);
                }
            }
        }
    }
    f_eps.sort_unstable();

    let comps = components_of(inst, &f_eps);
    let cost: Vec<u64> = comps
        .iter()
        .map(|c| f_eps.iter().filter(|&&e| c.binary_search(&inst.edge(e).u).is_ok()).map(|&e| inst.edge(e).w).sum())
        .collect();
    let top_depth: Vec<usize> =
        comps.iter().map(|c| (0..td.len()).filter(|&x| in_bag(x, c)).map(|x| td.depth(x)).min().unwrap_or(0)).collect();
    let mut order: Vec<usize> = (0..comps.len()).collect();
    order.sort_by_key(|&i| (Reverse(top_depth[i]), comps[i][0]));
    let mut share = vec![vec![false; comps.len()]; comps.len()];
    for x in 0..td.len() {
        let here: Vec<usize> = (0..comps.len()).filter(|&i| in_bag(x, &comps[i])).collect();
        for &a in &here {
            for &b in &here {
                share[a][b] = true;
            }
        }
    }
    let mut tilde = f_eps.clone();
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if !share[i][j] || uf.same(comps[i][0], comps[j][0]) {
                continue;
            }
            let (d, _, _) = dist.set_dist(&comps[i], &comps[j]);
            let p = pow_unit(cost[i], w_min) as u128;
            if d != u64::MAX && prod_le(&[d as u128, ed, k], &[en, p]) {
                connect(inst, &dist, &comps[i], &comps[j], &mut uf, &mut tilde);
            }
        }
    }
    Ok((Forest::new(f_eps), Forest::new(tilde)))
}
