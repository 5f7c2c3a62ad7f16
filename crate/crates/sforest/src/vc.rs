//! Exact solver parameterized by the size of a vertex cover.
//!
//! Terminals are moved out of the cover with zero-cost pendant edges, a decomposition of
//! width k is built from per-group leaf trees with the cover added to every bag, and each
//! non-root group node gets the single partition grouping all its active terminals.

use crate::conforming::solve_conforming;
use crate::error::{invalid, precondition, Result};
use crate::instance::{demand_groups, Forest, Instance};
use crate::partition::{Partition, PartitionFamily};
use crate::td::{bag_contexts, TreeDecomposition};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverCertificate {
    cover: Vec<usize>,
}

impl CoverCertificate {
    /// Checks that every edge of `inst` has an endpoint in `cover`.
    pub fn new(inst: &Instance, cover: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut cover: Vec<usize> = cover.into_iter().collect();
        cover.sort_unstable();
        cover.dedup();
        if let Some(&v) = cover.iter().find(|&&v| v >= inst.n()) {
            return invalid(format!("cover vertex {v} out of range"));
        }
        let mut mask = vec![false; inst.n()];
        for &v in &cover {
            mask[v] = true;
        }
        if let Some(e) = inst.edges().iter().find(|e| !mask[e.u] && !mask[e.v]) {
            return invalid(format!("edge {}-{} not covered", e.u, e.v));
        }
        Ok(CoverCertificate { cover })
    }

    pub fn cover(&self) -> &[usize] {
        &self.cover
    }

    pub fn size(&self) -> usize {
        self.cover.len()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.cover.binary_search(&v).is_ok()
    }
}

/// Both endpoints of a maximal matching taken greedily in edge id order, then, from the
/// highest id down, every vertex whose neighbours are all still in the cover is dropped.
pub fn greedy_cover(inst: &Instance) -> CoverCertificate {
    let mut used = vec![false; inst.n()];
    for e in inst.edges() {
        if !used[e.u] && !used[e.v] {
            used[e.u] = true;
            used[e.v] = true;
        }
    }
    for v in (0..inst.n()).rev() {
        if used[v] && inst.adj(v).iter().all(|&(x, _)| used[x]) {
            used[v] = false;
        }
    }
    CoverCertificate { cover: (0..inst.n()).filter(|&v| used[v]).collect() }
}

/// Maps edges of a preprocessed instance back to the original.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverTrace {
    /// Original edge id of each edge; `None` for a helper edge.
    pub edge_origin: Vec<Option<usize>>,
    /// Cover terminal each new vertex stands in for, indexed by `new vertex - original n`.
    pub moved: Vec<usize>,
}

impl CoverTrace {
    pub fn lift(&self, f: &Forest) -> Forest {
        Forest::new(f.edges.iter().filter_map(|&e| self.edge_origin[e]))
    }
}

/// Gives every terminal in the cover a fresh pendant vertex joined by a zero-cost edge and
/// moves its demands there.
pub fn cover_preprocess(inst: &Instance, cert: &CoverCertificate) -> Result<(Instance, CoverCertificate, CoverTrace)> {
    let cert = CoverCertificate::new(inst, cert.cover().iter().copied())?;
    let n = inst.n();
    let moved: Vec<usize> = inst.terminals().into_iter().filter(|&t| cert.contains(t)).collect();
    let mut target: Vec<usize> = (0..n).collect();
    for (i, &t) in moved.iter().enumerate() {
        target[t] = n + i;
    }
    let mut edges: Vec<(usize, usize, u64)> = inst.edges().iter().map(|e| (e.u, e.v, e.w)).collect();
    edges.extend(moved.iter().enumerate().map(|(i, &t)| (t, n + i, 0)));
    let demands = inst.demands().iter().map(|&(s, t)| (target[s], target[t]));
    let out = Instance::new(n + moved.len(), edges, demands)?;
    let edge_origin = out
        .edges()
        .iter()
        .map(|e| if e.v >= n { None } else { inst.edge_between(e.u, e.v) })
        .collect();
    let cert2 = CoverCertificate { cover: cert.cover };
    Ok((out, cert2, CoverTrace { edge_origin, moved }))
}

struct Nodes {
    parent: Vec<Option<usize>>,
    bags: Vec<Vec<usize>>,
}

impl Nodes {
    fn add(&mut self, bag: Vec<usize>, children: &[usize]) -> usize {
        let id = self.parent.len();
        self.parent.push(None);
        self.bags.push(bag);
        for &c in children {
            self.parent[c] = Some(id);
        }
        id
    }

    /// Pairs up subtree tops with join nodes until one remains.
    fn join_all(&mut self, mut tops: Vec<usize>, bag: &[usize], made: &mut Vec<usize>) -> usize {
        while tops.len() > 1 {
            let mut next = Vec::with_capacity(tops.len().div_ceil(2));
            for pair in tops.chunks(2) {
                if let [a, b] = *pair {
                    let j = self.add(bag.to_vec(), &[a, b]);
                    made.push(j);
                    next.push(j);
                } else {
                    next.push(pair[0]);
                }
            }
            tops = next;
        }
        tops[0]
    }

    /// Leaf `{v} + S` under a forget node with bag `S`; returns the forget node.
    fn leaf_pair(&mut self, v: usize, s: &[usize], made: &mut Vec<usize>) -> usize {
        let mut bag = s.to_vec();
        bag.push(v);
        let leaf = self.add(bag, &[]);
        let fg = self.add(s.to_vec(), &[leaf]);
        made.push(leaf);
        made.push(fg);
        fg
    }
}

/// Nice decomposition of width at most k built from the cover, and the trivial family on it.
pub fn build_vc_decomposition(inst: &Instance, cert: &CoverCertificate) -> Result<(TreeDecomposition, PartitionFamily)> {
    if let Some(t) = inst.terminals().into_iter().find(|&t| cert.contains(t)) {
        return precondition(format!("terminal {t} lies in the cover; preprocess first"));
    }
    let s = cert.cover().to_vec();
    let mut nodes = Nodes { parent: Vec::new(), bags: Vec::new() };
    let mut tops = Vec::new();
    let mut group_inner: Vec<usize> = Vec::new();
    for group in demand_groups(inst) {
        let mut made = Vec::new();
        let fs: Vec<usize> = group.iter().map(|&t| nodes.leaf_pair(t, &s, &mut made)).collect();
        let top = nodes.join_all(fs, &s, &mut made);
        group_inner.extend(made.into_iter().filter(|&x| x != top));
        tops.push(top);
    }
    let term = inst.is_terminal_mask();
    let steiner: Vec<usize> = (0..inst.n()).filter(|&v| !term[v] && !cert.contains(v)).collect();
    if !steiner.is_empty() {
        let mut made = Vec::new();
        let fs: Vec<usize> = steiner.iter().map(|&v| nodes.leaf_pair(v, &s, &mut made)).collect();
        tops.push(nodes.join_all(fs, &s, &mut made));
    }
    if tops.is_empty() {
        nodes.add(s.clone(), &[]);
    } else {
        nodes.join_all(tops, &s, &mut Vec::new());
    }
    let td = TreeDecomposition::new(nodes.parent, nodes.bags)?.with_nice_flag();
    let ctx = bag_contexts(inst, &td);
    let mut fam = PartitionFamily::new(td.len());
    for x in group_inner {
        let active = &ctx[x].active;
        if !active.is_empty() {
            fam.insert(x, Partition::new(vec![active.clone()])?);
        }
    }
    Ok((td, fam))
}

/// Optimal forest; without a certificate a matching-based cover of at most twice the
/// minimum size is used.
pub fn solve_vc(inst: &Instance, cert: Option<&CoverCertificate>) -> Result<Forest> {
    inst.check_demands_connected()?;
    let cert = match cert {
        Some(c) => c.clone(),
        None => greedy_cover(inst),
    };
    let (inst2, cert2, trace) = cover_preprocess(inst, &cert)?;
    let (td, fam) = build_vc_decomposition(&inst2, &cert2)?;
    let f = solve_conforming(&inst2, &td, &fam)?;
    Ok(trace.lift(&f))
}
