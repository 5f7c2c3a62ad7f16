//! Instance model, solution evaluation and the SFP exchange format.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Result, SfError};
use crate::util::UnionFind;

/// Largest edge weight accepted from external input.
pub const MAX_WEIGHT: u64 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: u64,
}

impl Edge {
    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Weighted undirected simple graph with demand pairs.
///
/// Edges are stored sorted by `(u, v)` with `u < v`; an edge id is its index.
/// Demands are stored as sorted `(s, t)` pairs with `s < t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    n: usize,
    edges: Vec<Edge>,
    demands: Vec<(usize, usize)>,
    labels: Option<Vec<String>>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl Instance {
    /// Builds a canonical instance. Zero weights are allowed here; the parser rejects them.
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, u64)>,
        demands: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut es: Vec<Edge> = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(SfError::Invalid(format!("edge ({a},{b}) out of range")));
            }
            if a == b {
                return Err(SfError::Invalid(format!("self-loop at {a}")));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            es.push(Edge { u, v, w });
        }
        es.sort();
        for pair in es.windows(2) {
            if pair[0].u == pair[1].u && pair[0].v == pair[1].v {
                return Err(SfError::Invalid(format!("duplicate edge ({},{})", pair[0].u, pair[0].v)));
            }
        }
        let mut ds = BTreeSet::new();
        for (s, t) in demands {
            if s >= n || t >= n {
                return Err(SfError::Invalid(format!("demand ({s},{t}) out of range")));
            }
            if s == t {
                return Err(SfError::Invalid(format!("trivial demand at {s}")));
            }
            ds.insert((s.min(t), s.max(t)));
        }
        let mut adj = vec![Vec::new(); n];
        for (id, e) in es.iter().enumerate() {
            adj[e.u].push((e.v, id));
            adj[e.v].push((e.u, id));
        }
        for a in &mut adj {
            a.sort();
        }
        Ok(Instance { n, edges: es, demands: ds.into_iter().collect(), labels: None, adj })
    }

    pub fn with_labels(mut self, labels: Option<Vec<String>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != self.n {
                return Err(SfError::Invalid("label count differs from vertex count".into()));
            }
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> Edge {
        self.edges[id]
    }

    pub fn demands(&self) -> &[(usize, usize)] {
        &self.demands
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Neighbors of `v` as `(neighbor, edge id)`, sorted by neighbor.
    pub fn adj(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        let (u, v) = (a.min(b), a.max(b));
        self.edges.binary_search_by(|e| (e.u, e.v).cmp(&(u, v))).ok()
    }

    /// Sorted terminal set.
    pub fn terminals(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.demands.iter().flat_map(|&(s, t)| [s, t]).collect();
        set.into_iter().collect()
    }

    pub fn is_terminal_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n];
        for &(s, t) in &self.demands {
            mask[s] = true;
            mask[t] = true;
        }
        mask
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    /// Component label per vertex in the whole graph.
    pub fn components(&self) -> Vec<usize> {
        component_labels(self, 0..self.m())
    }

    /// Reports a demand whose endpoints lie in different components of the graph.
    pub fn check_demands_connected(&self) -> Result<()> {
        let comp = self.components();
        for &(s, t) in &self.demands {
            if comp[s] != comp[t] {
                return Err(SfError::Infeasible(format!("demand ({s},{t}) spans components")));
            }
        }
        Ok(())
    }
}

/// A selected edge set, kept sorted and duplicate free.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Forest {
    pub edges: Vec<usize>,
}

impl Forest {
    pub fn new(edges: impl IntoIterator<Item = usize>) -> Self {
        let mut edges: Vec<usize> = edges.into_iter().collect();
        edges.sort_unstable();
        edges.dedup();
        Forest { edges }
    }

    pub fn empty() -> Self {
        Forest::default()
    }

    pub fn cost(&self, inst: &Instance) -> u64 {
        self.edges.iter().map(|&e| inst.edge(e).w).sum()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub cost: u64,
    pub feasible: bool,
    pub violations: Vec<(usize, usize)>,
    pub has_cycle: bool,
}

/// Root label per vertex for the subgraph spanned by `edges`.
pub fn component_labels(inst: &Instance, edges: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut uf = UnionFind::new(inst.n());
    for e in edges {
        let ed = inst.edge(e);
        uf.union(ed.u, ed.v);
    }
    (0..inst.n()).map(|v| uf.find(v)).collect()
}

pub fn evaluate_solution(inst: &Instance, f: &Forest) -> Result<Evaluation> {
    let mut uf = UnionFind::new(inst.n());
    let mut cost = 0u64;
    let mut has_cycle = false;
    for &e in &f.edges {
        if e >= inst.m() {
            return Err(SfError::Invalid(format!("edge reference {e} out of range")));
        }
        let ed = inst.edge(e);
        cost += ed.w;
        if !uf.union(ed.u, ed.v) {
            has_cycle = true;
        }
    }
    let violations: Vec<(usize, usize)> =
        inst.demands().iter().copied().filter(|&(s, t)| !uf.same(s, t)).collect();
    Ok(Evaluation { cost, feasible: violations.is_empty(), violations, has_cycle })
}

/// Terminals grouped by connectivity in the demand graph; groups sorted, ordered by minimum.
pub fn demand_groups(inst: &Instance) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(inst.n());
    for &(s, t) in inst.demands() {
        uf.union(s, t);
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for t in inst.terminals() {
        groups.entry(uf.find(t)).or_default().push(t);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

fn perr<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(SfError::Parse { line, msg: msg.into() })
}

fn parse_id(tok: Option<&str>, n: usize, line: usize, what: &str) -> Result<usize> {
    let Some(tok) = tok else { return perr(line, format!("missing {what}")) };
    let id: usize = match tok.parse() {
        Ok(v) => v,
        Err(_) => return perr(line, format!("bad {what} '{tok}'")),
    };
    if id == 0 || id > n {
        return perr(line, format!("{what} {id} out of range 1..={n}"));
    }
    Ok(id - 1)
}

/// Parses SFP text. Ids in the file are 1-based.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut n: Option<usize> = None;
    let mut header = false;
    let mut ended = false;
    let mut edges = Vec::new();
    let mut demands = Vec::new();
    let mut labels: Vec<Option<String>> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if ended {
            return perr(ln, "content after END");
        }
        let mut toks = line.split_whitespace();
        let kw = toks.next().unwrap_or("");
        if !header {
            if kw != "SFP" || toks.next() != Some("1") {
                return perr(ln, "expected header 'SFP 1'");
            }
            header = true;
            continue;
        }
        match kw {
            "NODES" => {
                if n.is_some() {
                    return perr(ln, "NODES given twice");
                }
                let v = toks.next().and_then(|t| t.parse::<usize>().ok());
                let Some(v) = v else { return perr(ln, "bad NODES count") };
                n = Some(v);
                labels = vec![None; v];
            }
            "EDGE" | "DEMAND" | "LABEL" => {
                let Some(nn) = n else { return perr(ln, format!("{kw} before NODES")) };
                match kw {
                    "EDGE" => {
                        let u = parse_id(toks.next(), nn, ln, "edge endpoint")?;
                        let v = parse_id(toks.next(), nn, ln, "edge endpoint")?;
                        let w: i128 = match toks.next().map(|t| t.parse::<i128>()) {
                            Some(Ok(w)) => w,
                            _ => return perr(ln, "bad edge weight"),
                        };
                        if w <= 0 {
                            return perr(ln, "non-positive weight");
                        }
                        if w > MAX_WEIGHT as i128 {
                            return perr(ln, format!("weight exceeds cap {MAX_WEIGHT}"));
                        }
                        if u == v {
                            return perr(ln, "self-loop");
                        }
                        if !seen.insert((u.min(v), u.max(v))) {
                            return perr(ln, "duplicate edge");
                        }
                        edges.push((u, v, w as u64));
                    }
                    "DEMAND" => {
                        let s = parse_id(toks.next(), nn, ln, "dangling demand id");
                        let t = parse_id(toks.next(), nn, ln, "dangling demand id");
                        let (s, t) = match (s, t) {
                            (Ok(s), Ok(t)) => (s, t),
                            _ => return perr(ln, "dangling demand id"),
                        };
                        if s == t {
                            return perr(ln, "demand endpoints coincide");
                        }
                        demands.push((s, t));
                    }
                    _ => {
                        let v = parse_id(toks.next(), nn, ln, "label id")?;
                        let name: Vec<&str> = toks.by_ref().collect();
                        if name.is_empty() {
                            return perr(ln, "empty label");
                        }
                        labels[v] = Some(name.join(" "));
                    }
                }
                if toks.next().is_some() {
                    return perr(ln, "trailing tokens");
                }
            }
            "END" => ended = true,
            other => return perr(ln, format!("unknown keyword '{other}'")),
        }
    }
    if !header {
        return perr(1, "empty input");
    }
    let Some(n) = n else { return perr(0, "missing NODES") };
    if !ended {
        return perr(text.lines().count(), "missing END");
    }
    let inst = Instance::new(n, edges, demands)?;
    let labels = if labels.iter().any(Option::is_some) {
        Some(labels.into_iter().enumerate().map(|(i, l)| l.unwrap_or_else(|| (i + 1).to_string())).collect())
    } else {
        None
    };
    inst.with_labels(labels)
}

/// Canonical SFP text: sorted edges, sorted demands, labels when present.
pub fn write_instance(inst: &Instance) -> String {
    let mut out = String::new();
    out.push_str("SFP 1\n");
    let _ = writeln!(out, "NODES {}", inst.n());
    if let Some(labels) = inst.labels() {
        for (i, l) in labels.iter().enumerate() {
            let _ = writeln!(out, "LABEL {} {}", i + 1, l);
        }
    }
    for e in inst.edges() {
        let _ = writeln!(out, "EDGE {} {} {}", e.u + 1, e.v + 1, e.w);
    }
    for &(s, t) in inst.demands() {
        let _ = writeln!(out, "DEMAND {} {}", s + 1, t + 1);
    }
    out.push_str("END\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRI: &str = "SFP 1\nNODES 3\nEDGE 1 2 1\nEDGE 2 3 1\nEDGE 1 3 3\nDEMAND 1 3\nEND\n";

    #[test]
    fn parse_triangle() {
        let inst = parse_instance(TRI).unwrap();
        assert_eq!((inst.n(), inst.m(), inst.demands().len()), (3, 3, 1));
    }

    #[test]
    fn zero_weight_rejected() {
        let err = parse_instance(&TRI.replace("EDGE 1 2 1", "EDGE 1 2 0")).unwrap_err();
        assert!(err.to_string().contains("non-positive weight"), "{err}");
    }

    #[test]
    fn dangling_and_duplicate() {
        let e = parse_instance(&TRI.replace("DEMAND 1 3", "DEMAND 1 9")).unwrap_err();
        assert!(e.to_string().contains("dangling demand id"));
        let e = parse_instance(&TRI.replace("EDGE 1 3 3", "EDGE 2 1 3")).unwrap_err();
        assert!(e.to_string().contains("duplicate edge"));
        let e = parse_instance("SFP 1\nNODES 2\nEDGE 1 2 x\nEND\n").unwrap_err();
        assert!(matches!(e, SfError::Parse { line: 3, .. }));
    }

    #[test]
    fn round_trip_and_determinism() {
        let inst = parse_instance(TRI).unwrap();
        let text = write_instance(&inst);
        assert_eq!(parse_instance(&text).unwrap(), inst);
        assert_eq!(write_instance(&parse_instance(&text).unwrap()), text);
    }

    #[test]
    fn labels_survive() {
        let t = "SFP 1\nNODES 2\nLABEL 1 alpha\nLABEL 2 beta\nEDGE 1 2 4\nEND\n";
        let inst = parse_instance(t).unwrap();
        assert_eq!(inst.labels().unwrap(), ["alpha", "beta"]);
        assert_eq!(write_instance(&inst), t);
        let empty = write_instance(&Instance::new(2, [(0, 1, 1)], []).unwrap());
        assert!(!empty.contains("DEMAND"));
    }

    #[test]
    fn evaluate_triangle() {
        let inst = parse_instance(TRI).unwrap();
        let (e12, e23) = (inst.edge_between(0, 1).unwrap(), inst.edge_between(1, 2).unwrap());
        let ev = evaluate_solution(&inst, &Forest::new([e12, e23])).unwrap();
        assert_eq!((ev.cost, ev.feasible), (2, true));
        let ev = evaluate_solution(&inst, &Forest::empty()).unwrap();
        assert_eq!((ev.cost, ev.feasible, ev.violations), (0, false, vec![(0, 2)]));
        let none = Instance::new(3, [(0, 1, 1)], []).unwrap();
        assert!(evaluate_solution(&none, &Forest::empty()).unwrap().feasible);
        assert!(evaluate_solution(&inst, &Forest::new([7])).is_err());
    }

    #[test]
    fn groups() {
        let inst = Instance::new(6, [], [(0, 1), (1, 2), (3, 4)]).unwrap();
        assert_eq!(demand_groups(&inst), vec![vec![0, 1, 2], vec![3, 4]]);
        let inst = Instance::new(2, [], [(0, 1)]).unwrap();
        assert_eq!(demand_groups(&inst), vec![vec![0, 1]]);
        assert!(demand_groups(&Instance::new(2, [], []).unwrap()).is_empty());
    }
}
