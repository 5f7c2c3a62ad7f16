//! Leaf reduction, aspect-ratio reduction, and lifting solutions back to the source instance.

use std::collections::{BTreeMap, BTreeSet};

use crate::baselines::two_approx_primal_dual;
use crate::error::{Result, SfError};
use crate::instance::{Forest, Instance};
use crate::util::UnionFind;

/// One reduction step; ids refer to the source instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceStep {
    /// A degree-1 vertex removed; `forced_edge` is set when it was a terminal.
    Rule3Deletion { vertex: usize, forced_edge: Option<usize> },
    Contraction { edge: usize },
    EdgeRemoval { edge: usize },
}

#[derive(Clone, Debug)]
pub struct ReductionTrace {
    pub source: Instance,
    pub steps: Vec<TraceStep>,
    /// Source vertex to reduced vertex; `None` when deleted.
    pub vertex_map: Vec<Option<usize>>,
    /// Reduced edge id to source edge id.
    pub edge_origin: Vec<usize>,
}

impl ReductionTrace {
    pub fn identity(inst: &Instance) -> Self {
        ReductionTrace {
            source: inst.clone(),
            steps: Vec::new(),
            vertex_map: (0..inst.n()).map(Some).collect(),
            edge_origin: (0..inst.m()).collect(),
        }
    }

    pub fn forced_edges(&self) -> Vec<usize> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                TraceStep::Rule3Deletion { forced_edge, .. } => *forced_edge,
                _ => None,
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Rule3Result {
    pub instance: Instance,
    pub spent: u64,
    pub trace: ReductionTrace,
}

/// Builds the reduced instance over the surviving vertices (renumbered in id order).
fn rebuild(
    src: &Instance,
    keep_vertex: &[bool],
    edges: &[(usize, usize, u64, usize)],
    demands: impl IntoIterator<Item = (usize, usize)>,
) -> Result<(Instance, Vec<Option<usize>>, Vec<usize>)> {
    let mut map = vec![None; src.n()];
    let mut next = 0;
    for v in 0..src.n() {
        if keep_vertex[v] {
            map[v] = Some(next);
            next += 1;
        }
    }
    let m = |v: usize| map[v].expect("kept vertex");
    let inst = Instance::new(next, edges.iter().map(|&(u, v, w, _)| (m(u), m(v), w)), demands.into_iter().map(|(s, t)| (m(s), m(t))))?;
    let labels = src.labels().map(|l| (0..src.n()).filter(|&v| keep_vertex[v]).map(|v| l[v].clone()).collect());
    let inst = inst.with_labels(labels)?;
    let mut origin = vec![0; inst.m()];
    for &(u, v, _, id) in edges {
        origin[inst.edge_between(m(u), m(v)).expect("edge kept")] = id;
    }
    Ok((inst, map, origin))
}

/// Exhaustive degree-1 reduction, lowest vertex id first.
///
/// A non-terminal leaf is deleted. A terminal leaf `u` with neighbour `v` forces the edge
/// `uv`, and every demand on `u` moves to `v` (demands that become trivial vanish).
pub fn apply_rule3(inst: &Instance) -> Rule3Result {
    let n = inst.n();
    let mut adj: Vec<BTreeMap<usize, usize>> = (0..n).map(|v| inst.adj(v).iter().copied().collect()).collect();
    let mut demands: BTreeSet<(usize, usize)> = inst.demands().iter().copied().collect();
    let mut alive = vec![true; n];
    let mut queue: BTreeSet<usize> = (0..n).filter(|&v| adj[v].len() == 1).collect();
    let mut steps = Vec::new();
    let mut spent = 0u64;
    while let Some(u) = queue.pop_first() {
        if !alive[u] || adj[u].len() != 1 {
            continue;
        }
        let (&v, &e) = adj[u].iter().next().expect("degree one");
        let touching: Vec<(usize, usize)> = demands.iter().copied().filter(|&(s, t)| s == u || t == u).collect();
        let forced = if touching.is_empty() {
            None
        } else {
            for d in &touching {
                demands.remove(d);
                let x = if d.0 == u { d.1 } else { d.0 };
                if x != v {
                    demands.insert((x.min(v), x.max(v)));
                }
            }
            spent += inst.edge(e).w;
            Some(e)
        };
        steps.push(TraceStep::Rule3Deletion { vertex: u, forced_edge: forced });
        alive[u] = false;
        adj[u].clear();
        adj[v].remove(&u);
        if adj[v].len() == 1 {
            queue.insert(v);
        }
    }
    let edges: Vec<(usize, usize, u64, usize)> = inst
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| alive[e.u] && alive[e.v])
        .map(|(id, e)| (e.u, e.v, e.w, id))
        .collect();
    let (reduced, vertex_map, edge_origin) = rebuild(inst, &alive, &edges, demands).expect("reduction keeps validity");
    Rule3Result { instance: reduced, spent, trace: ReductionTrace { source: inst.clone(), steps, vertex_map, edge_origin } }
}

#[derive(Clone, Debug)]
pub struct AspectReduction {
    pub instance: Instance,
    pub trace: ReductionTrace,
    /// Cost of the 2-approximation used for the thresholds.
    pub f2_cost: u64,
}

/// Drops edges heavier than a 2-approximate solution and contracts edges lighter than
/// `eps / (2n)` of its cost, `eps = eps_num / eps_den`.
pub fn reduce_aspect_ratio(inst: &Instance, eps_num: u64, eps_den: u64) -> Result<AspectReduction> {
    if eps_num == 0 || eps_den == 0 {
        return Err(SfError::Invalid("eps must be a positive rational".into()));
    }
    let f2 = two_approx_primal_dual(inst)?;
    let c = f2.cost(inst);
    let n = inst.n() as u128;
    let mut steps = Vec::new();
    let mut removed = vec![false; inst.m()];
    for (id, e) in inst.edges().iter().enumerate() {
        if e.w > c {
            removed[id] = true;
            steps.push(TraceStep::EdgeRemoval { edge: id });
        }
    }
    let mut uf = UnionFind::new(inst.n());
    for (id, e) in inst.edges().iter().enumerate() {
        let light = (e.w as u128) * 2 * n * (eps_den as u128) < (eps_num as u128) * (c as u128);
        if !removed[id] && light && uf.union(e.u, e.v) {
            steps.push(TraceStep::Contraction { edge: id });
        }
    }
    // classes numbered by their minimum vertex
    let mut class_of_root: BTreeMap<usize, usize> = BTreeMap::new();
    let mut class = vec![0; inst.n()];
    for v in 0..inst.n() {
        let r = uf.find(v);
        let next = class_of_root.len();
        class[v] = *class_of_root.entry(r).or_insert(next);
    }
    let classes = class_of_root.len();
    let mut best: BTreeMap<(usize, usize), (u64, usize)> = BTreeMap::new();
    for (id, e) in inst.edges().iter().enumerate() {
        let (a, b) = (class[e.u], class[e.v]);
        if removed[id] || a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        let cand = (e.w, id);
        best.entry(key).and_modify(|cur| *cur = (*cur).min(cand)).or_insert(cand);
    }
    let mut edge_origin = Vec::new();
    let reduced = Instance::new(
        classes,
        best.iter().map(|(&(a, b), &(w, _))| (a, b, w)),
        inst.demands().iter().map(|&(s, t)| (class[s], class[t])).filter(|(a, b)| a != b),
    )?;
    for (&(a, b), &(_, id)) in &best {
        let rid = reduced.edge_between(a, b).expect("edge present");
        if edge_origin.len() <= rid {
            edge_origin.resize(rid + 1, 0);
        }
        edge_origin[rid] = id;
    }
    let vertex_map = class.into_iter().map(Some).collect();
    Ok(AspectReduction { instance: reduced, trace: ReductionTrace { source: inst.clone(), steps, vertex_map, edge_origin }, f2_cost: c })
}

fn feasible(inst: &Instance, edges: impl IntoIterator<Item = usize>) -> bool {
    let mut uf = UnionFind::new(inst.n());
    for e in edges {
        let ed = inst.edge(e);
        uf.union(ed.u, ed.v);
    }
    inst.demands().iter().all(|&(s, t)| uf.same(s, t))
}

/// Maps a reduced forest back: re-adds forced leaf edges, then undoes contractions in
/// reverse order, keeping a contracted edge only when dropping it breaks a demand.
pub fn lift_solution(f: &Forest, trace: &ReductionTrace) -> Result<Forest> {
    let src = &trace.source;
    let mut chosen: BTreeSet<usize> = BTreeSet::new();
    for &e in &f.edges {
        let Some(&orig) = trace.edge_origin.get(e) else {
            return Err(SfError::Invalid(format!("edge {e} not in the reduced instance")));
        };
        if orig >= src.m() {
            return Err(SfError::Invalid("trace does not match its source instance".into()));
        }
        chosen.insert(orig);
    }
    chosen.extend(trace.forced_edges());
    let contractions: Vec<usize> = trace
        .steps
        .iter()
        .filter_map(|s| match s {
            TraceStep::Contraction { edge } => Some(*edge),
            _ => None,
        })
        .collect();
    let mut virt: BTreeSet<usize> = contractions.iter().copied().collect();
    for &e in contractions.iter().rev() {
        virt.remove(&e);
        if !chosen.contains(&e) && !feasible(src, chosen.iter().chain(virt.iter()).copied()) {
            chosen.insert(e);
        }
    }
    Ok(Forest::new(chosen))
}
