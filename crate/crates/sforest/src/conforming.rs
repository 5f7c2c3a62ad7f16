//! Minimum-cost Steiner forest conforming to per-node partition families, by dynamic
//! programming over a nice tree decomposition.
//!
//! A state at node `x` records, for the bag positions:
//! * `l`: which bag vertices are already connected by the edges decided below `x`;
//! * `g`: which bag vertices end up in the same component of the final forest (a guess,
//!   always coarser than `l`);
//! * the index of the partition of the active terminals `A_x` the forest induces, and for
//!   each of its blocks the `g` class its component reaches the bag through.
//!
//! Every edge is decided at the forget node of whichever endpoint leaves the bags first; edges
//! between vertices of the root bag are decided while forgetting those vertices one by one
//! after the root. A component may only leave the bag for good when its `g` class is a
//! singleton and no active block is charged to it.

use std::collections::HashMap;

use crate::error::{Result, SfError};
use crate::instance::{Forest, Instance};
use crate::partition::PartitionFamily;
use crate::td::{bag_contexts, validate_td, BagContext, NodeKind, TreeDecomposition};
use crate::util::{all_rgs, canonical_rgs, UnionFind};

const NONE: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Key {
    pi: u32,
    l: Vec<u8>,
    g: Vec<u8>,
    bc: Vec<u8>,
}

#[derive(Clone, Debug)]
struct Val {
    cost: u64,
    edges: Vec<u32>,
}

type Table = HashMap<Key, Val>;

fn relax(table: &mut Table, key: Key, cost: u64, edges: Vec<u32>) {
    match table.get_mut(&key) {
        Some(cur) => {
            if (cost, &edges) < (cur.cost, &cur.edges) {
                *cur = Val { cost, edges };
            }
        }
        None => {
            table.insert(key, Val { cost, edges });
        }
    }
}

fn merge_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out.sort_unstable();
    out
}

/// Per-node data fixed before the DP runs.
struct NodeInfo {
    /// Allowed partitions of the active set as restricted-growth strings.
    pis: Vec<Vec<u8>>,
    pi_index: HashMap<Vec<u8>, u32>,
}

struct Dp<'a> {
    inst: &'a Instance,
    td: &'a TreeDecomposition,
    ctx: Vec<BagContext>,
    info: Vec<NodeInfo>,
    partners: Vec<Vec<usize>>,
}

impl<'a> Dp<'a> {
    fn pos(bag: &[usize], v: usize) -> Option<usize> {
        bag.binary_search(&v).ok()
    }

    /// Class label of active terminal `t` of child `c` in the child's state.
    fn child_class(&self, c: usize, key: &Key, t: usize) -> u8 {
        let a = &self.ctx[c].active;
        let i = a.binary_search(&t).expect("active in child");
        let block = self.info[c].pis[key.pi as usize][i];
        key.bc[block as usize]
    }

    /// Canonicalises a raw state and checks the node's family. `act` holds the raw `g` label
    /// of each active terminal in ascending order.
    fn finalize(&self, x: usize, l: &[u8], g: &[u8], act: &[u8]) -> Option<Key> {
        let gc = canonical_rgs(g);
        let mut relabel: HashMap<u8, u8> = HashMap::new();
        for (raw, c) in g.iter().zip(&gc) {
            relabel.insert(*raw, *c);
        }
        let lc = canonical_rgs(l);
        if self.ctx[x].active.is_empty() {
            return Some(Key { pi: NONE, l: lc, g: gc, bc: Vec::new() });
        }
        let pi_rgs = canonical_rgs(act);
        let &pi = self.info[x].pi_index.get(&pi_rgs)?;
        let mut bc = Vec::new();
        for (i, &b) in pi_rgs.iter().enumerate() {
            if b as usize == bc.len() {
                bc.push(*relabel.get(&act[i]).expect("active class present in bag"));
            }
        }
        Some(Key { pi, l: lc, g: gc, bc })
    }

    fn leaf(&self, x: usize) -> Table {
        let bag = self.td.bag(x);
        let mut table = Table::new();
        for g in all_rgs(bag.len()) {
            let ok = self.inst.demands().iter().all(|&(s, t)| match (Self::pos(bag, s), Self::pos(bag, t)) {
                (Some(a), Some(b)) => g[a] == g[b],
                _ => true,
            });
            if !ok {
                continue;
            }
            let act: Vec<u8> = self.ctx[x].active.iter().map(|&t| g[Self::pos(bag, t).expect("active in leaf bag")]).collect();
            let l: Vec<u8> = (0..bag.len() as u8).collect();
            if let Some(key) = self.finalize(x, &l, &g, &act) {
                relax(&mut table, key, 0, Vec::new());
            }
        }
        table
    }

    fn introduce(&self, x: usize, c: usize, child: &Table) -> Table {
        let bag = self.td.bag(x);
        let cbag = self.td.bag(c);
        let v = self.td.introduced(x).expect("introduce node");
        let pv = Self::pos(bag, v).expect("introduced vertex in bag");
        let cvb = &self.ctx[c].vb;
        let mut table = Table::new();
        for (key, val) in child {
            let classes = key.g.iter().copied().max().map_or(0, |m| m + 1);
            let lnew = key.l.iter().copied().max().map_or(0, |m| m + 1);
            let class_of = |t: usize, gv: u8| -> u8 {
                if t == v {
                    gv
                } else if let Some(p) = Self::pos(cbag, t) {
                    key.g[p]
                } else {
                    self.child_class(c, key, t)
                }
            };
            for gv in 0..=classes {
                let closing_ok = self.partners[v].iter().all(|&t| !cvb.contains(t) || class_of(t, gv) == gv);
                if !closing_ok {
                    continue;
                }
                let mut g = key.g.clone();
                g.insert(pv, gv);
                let mut l = key.l.clone();
                l.insert(pv, lnew);
                let act: Vec<u8> = self.ctx[x].active.iter().map(|&t| class_of(t, gv)).collect();
                if let Some(nk) = self.finalize(x, &l, &g, &act) {
                    relax(&mut table, nk, val.cost, val.edges.clone());
                }
            }
        }
        table
    }

    /// Forgets `v` from `cbag` (state `key`), choosing edges from `v` to the rest of the bag.
    /// `x` is the node whose family applies, or `None` for the virtual forgets after the root.
    fn forget_into(&self, x: Option<usize>, c: Option<usize>, cbag: &[usize], v: usize, key: &Key, val: &Val, out: &mut Table) {
        let pv = Self::pos(cbag, v).expect("forgotten vertex in child bag");
        let cand: Vec<(usize, usize)> = self
            .inst
            .adj(v)
            .iter()
            .filter_map(|&(u, e)| Self::pos(cbag, u).map(|p| (p, e)))
            .filter(|&(p, _)| key.g[p] == key.g[pv])
            .collect();
        let charged = |cls: u8| key.bc.contains(&cls);
        let class_alone = key.g.iter().enumerate().all(|(p, &cl)| p == pv || cl != key.g[pv]);
        for mask in 0u32..(1u32 << cand.len()) {
            let mut uf = UnionFind::new(cbag.len());
            for (p, &lab) in key.l.iter().enumerate() {
                let first = key.l.iter().position(|&q| q == lab).expect("label occurs");
                uf.union(p, first);
            }
            let mut cost = val.cost;
            let mut picked = Vec::new();
            let mut cyclic = false;
            for (i, &(p, e)) in cand.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    if !uf.union(pv, p) {
                        cyclic = true;
                        break;
                    }
                    cost += self.inst.edge(e).w;
                    picked.push(e as u32);
                }
            }
            if cyclic {
                continue;
            }
            let root_v = uf.find(pv);
            let block_alone = (0..cbag.len()).all(|p| p == pv || uf.find(p) != root_v);
            if block_alone && (!class_alone || charged(key.g[pv])) {
                continue;
            }
            let mut l = Vec::with_capacity(cbag.len() - 1);
            let mut g = Vec::with_capacity(cbag.len() - 1);
            for p in 0..cbag.len() {
                if p != pv {
                    l.push(uf.find(p) as u8);
                    g.push(key.g[p]);
                }
            }
            let nk = match (x, c) {
                (Some(x), Some(c)) => {
                    let act: Vec<u8> = self.ctx[x]
                        .active
                        .iter()
                        .map(|&t| match Self::pos(cbag, t) {
                            Some(p) => key.g[p],
                            None => self.child_class(c, key, t),
                        })
                        .collect();
                    self.finalize(x, &l, &g, &act)
                }
                _ => Some(Key { pi: NONE, l: canonical_rgs(&l), g: canonical_rgs(&g), bc: Vec::new() }),
            };
            if let Some(nk) = nk {
                let edges = if picked.is_empty() { val.edges.clone() } else { merge_sorted(&val.edges, &picked) };
                relax(out, nk, cost, edges);
            }
        }
    }

    fn forget(&self, x: usize, c: usize, child: &Table) -> Table {
        let v = self.td.forgotten(x).expect("forget node");
        let cbag = self.td.bag(c);
        let mut table = Table::new();
        for (key, val) in child {
            self.forget_into(Some(x), Some(c), cbag, v, key, val, &mut table);
        }
        table
    }

    fn join(&self, x: usize, c1: usize, c2: usize, t1: &Table, t2: &Table) -> Table {
        let bag = self.td.bag(x);
        let mut by_g: HashMap<&Vec<u8>, Vec<(&Key, &Val)>> = HashMap::new();
        for (k, v) in t2 {
            by_g.entry(&k.g).or_default().push((k, v));
        }
        let (vb1, vb2) = (&self.ctx[c1].vb, &self.ctx[c2].vb);
        // demands split between the two sides
        let split: Vec<(usize, usize)> = self
            .inst
            .demands()
            .iter()
            .filter_map(|&(s, t)| {
                let (s1, s2, t1, t2) = (vb1.contains(s), vb2.contains(s), vb1.contains(t), vb2.contains(t));
                if s1 && !s2 && t2 && !t1 {
                    Some((s, t))
                } else if t1 && !t2 && s2 && !s1 {
                    Some((t, s))
                } else {
                    None
                }
            })
            .collect();
        let mut table = Table::new();
        for (k1, v1) in t1 {
            let Some(list) = by_g.get(&k1.g) else { continue };
            for &(k2, v2) in list {
                if !split.iter().all(|&(s, t)| self.child_class(c1, k1, s) == self.child_class(c2, k2, t)) {
                    continue;
                }
                let mut uf = UnionFind::new(bag.len());
                for p in 0..bag.len() {
                    let first = k1.l.iter().position(|&q| q == k1.l[p]).expect("label occurs");
                    uf.union(p, first);
                }
                let mut cyclic = false;
                for p in 0..bag.len() {
                    let first = k2.l.iter().position(|&q| q == k2.l[p]).expect("label occurs");
                    if first != p && !uf.union(p, first) {
                        cyclic = true;
                    }
                }
                if cyclic {
                    continue;
                }
                let l: Vec<u8> = (0..bag.len()).map(|p| uf.find(p) as u8).collect();
                let act: Vec<u8> = self.ctx[x]
                    .active
                    .iter()
                    .map(|&t| match Self::pos(bag, t) {
                        Some(p) => k1.g[p],
                        None if vb1.contains(t) => self.child_class(c1, k1, t),
                        None => self.child_class(c2, k2, t),
                    })
                    .collect();
                if let Some(nk) = self.finalize(x, &l, &k1.g, &act) {
                    relax(&mut table, nk, v1.cost + v2.cost, merge_sorted(&v1.edges, &v2.edges));
                }
            }
        }
        table
    }
}

/// Checks the structural preconditions of [`solve_conforming`].
pub fn check_preconditions(inst: &Instance, td: &TreeDecomposition, fam: &PartitionFamily) -> Result<Vec<BagContext>> {
    let v = validate_td(inst, td);
    if !v.ok {
        return Err(SfError::Precondition(format!("invalid decomposition: {}", v.violations.join("; "))));
    }
    if !td.is_nice() {
        return Err(SfError::Precondition("decomposition is not nice".into()));
    }
    for t in inst.terminals() {
        let in_leaf = (0..td.len()).any(|x| td.kind(x) == NodeKind::Leaf && td.bag(x).binary_search(&t).is_ok());
        if !in_leaf {
            return Err(SfError::Precondition(format!("terminal {t} lies in no leaf bag")));
        }
    }
    let ctx = bag_contexts(inst, td);
    fam.check(&ctx)?;
    Ok(ctx)
}

/// Cheapest feasible forest whose active-component partition at every node with active
/// terminals is one of the node's listed partitions.
pub fn solve_conforming(inst: &Instance, td: &TreeDecomposition, fam: &PartitionFamily) -> Result<Forest> {
    let ctx = check_preconditions(inst, td, fam)?;
    let info: Vec<NodeInfo> = (0..td.len())
        .map(|x| {
            let pis: Vec<Vec<u8>> = fam.get(x).iter().map(|p| p.rgs()).collect();
            let pi_index = pis.iter().enumerate().map(|(i, r)| (r.clone(), i as u32)).collect();
            NodeInfo { pis, pi_index }
        })
        .collect();
    let mut partners = vec![Vec::new(); inst.n()];
    for &(s, t) in inst.demands() {
        partners[s].push(t);
        partners[t].push(s);
    }
    let dp = Dp { inst, td, ctx, info, partners };
    let mut tables: Vec<Option<Table>> = vec![None; td.len()];
    for x in td.post_order() {
        let ch = td.children(x);
        let table = match td.kind(x) {
            NodeKind::Leaf => dp.leaf(x),
            NodeKind::Introduce => {
                let t = tables[ch[0]].take().expect("child done");
                dp.introduce(x, ch[0], &t)
            }
            NodeKind::Forget => {
                let t = tables[ch[0]].take().expect("child done");
                dp.forget(x, ch[0], &t)
            }
            NodeKind::Join => {
                let a = tables[ch[0]].take().expect("child done");
                let b = tables[ch[1]].take().expect("child done");
                dp.join(x, ch[0], ch[1], &a, &b)
            }
            NodeKind::Plain => unreachable!("checked nice"),
        };
        if table.is_empty() {
            return Err(SfError::Infeasible(format!("no conforming partial solution at node {x}")));
        }
        tables[x] = Some(table);
    }
    let root = td.root();
    let mut table = tables[root].take().expect("root done");
    let mut bag = td.bag(root).to_vec();
    while let Some(&v) = bag.first() {
        let mut next = Table::new();
        for (key, val) in &table {
            dp.forget_into(None, None, &bag, v, key, val, &mut next);
        }
        bag.remove(0);
        table = next;
    }
    let best = table
        .into_values()
        .min_by(|a, b| (a.cost, &a.edges).cmp(&(b.cost, &b.edges)))
        .ok_or_else(|| SfError::Infeasible("no conforming feasible forest".into()))?;
    Ok(Forest::new(best.edges.into_iter().map(|e| e as usize)))
}
