//! Exact solver parameterized by the size of a feedback edge set.
//!
//! After exhaustive leaf removal the graph is a set of special vertices (degree at least 3 or
//! touching a feedback edge) joined by topological edges, paths whose interior vertices have
//! degree 2. Every set of fully used topological edges is tried. A guess fixes how special
//! vertices group into components; the interiors of the remaining topological edges are then
//! settled by forced moves, a per-path local optimum, and a min cut for each pair of classes.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use crate::baselines::two_approx_primal_dual;
use crate::error::{precondition, Result, SfError};
use crate::instance::{evaluate_solution, Forest, Instance};
use crate::reduce::{apply_rule3, lift_solution};
use crate::util::UnionFind;

/// Non-tree edges of the minimum spanning forest taken by Kruskal in (weight, id) order.
pub fn feedback_edge_set(inst: &Instance) -> Vec<usize> {
    let mut order: Vec<usize> = (0..inst.m()).collect();
    order.sort_by_key(|&e| (inst.edge(e).w, e));
    let mut uf = UnionFind::new(inst.n());
    let mut h: Vec<usize> = order.into_iter().filter(|&e| !uf.union(inst.edge(e).u, inst.edge(e).v)).collect();
    h.sort_unstable();
    h
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopoEdge {
    /// Vertices from one special endpoint to the other.
    pub path: Vec<usize>,
    /// `edges[i]` joins `path[i]` and `path[i + 1]`.
    pub edges: Vec<usize>,
    pub weight: u64,
}

impl TopoEdge {
    pub fn ends(&self) -> (usize, usize) {
        (self.path[0], *self.path.last().expect("non-empty path"))
    }

    pub fn interior(&self) -> &[usize] {
        &self.path[1..self.path.len() - 1]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopologySkeleton {
    pub special: Vec<usize>,
    pub topo_edges: Vec<TopoEdge>,
    pub feedback: Vec<usize>,
}

impl TopologySkeleton {
    pub fn k(&self) -> usize {
        self.feedback.len()
    }
}

/// Special vertices and topological edges of a graph with no degree-1 vertex.
pub fn build_skeleton(inst: &Instance) -> Result<TopologySkeleton> {
    if let Some(v) = (0..inst.n()).find(|&v| inst.degree(v) == 1) {
        return precondition(format!("vertex {v} has degree 1; apply leaf removal first"));
    }
    let feedback = feedback_edge_set(inst);
    let mut special: Vec<bool> = (0..inst.n()).map(|v| inst.degree(v) >= 3).collect();
    for &e in &feedback {
        special[inst.edge(e).u] = true;
        special[inst.edge(e).v] = true;
    }
    let mut used = vec![false; inst.m()];
    let mut topo_edges = Vec::new();
    for s in (0..inst.n()).filter(|&v| special[v]) {
        for &(first, e0) in inst.adj(s) {
            if used[e0] {
                continue;
            }
            let mut path = vec![s];
            let mut edges = Vec::new();
            let (mut cur, mut e) = (first, e0);
            loop {
                used[e] = true;
                edges.push(e);
                path.push(cur);
                if special[cur] {
                    break;
                }
                let &(nxt, ne) = inst.adj(cur).iter().find(|&&(_, x)| x != e).expect("interior vertex has degree 2");
                cur = nxt;
                e = ne;
            }
            let weight = edges.iter().map(|&x| inst.edge(x).w).sum();
            topo_edges.push(TopoEdge { path, edges, weight });
        }
    }
    if let Some(e) = used.iter().position(|&u| !u) {
        return Err(SfError::Internal(format!("edge {e} lies on a cycle without special vertices")));
    }
    Ok(TopologySkeleton { special: (0..inst.n()).filter(|&v| special[v]).collect(), topo_edges, feedback })
}

/// Text dump; vertex and edge ids are 1-based.
pub fn write_skeleton(sk: &TopologySkeleton) -> String {
    let ids = |xs: &[usize]| xs.iter().map(|x| (x + 1).to_string()).collect::<Vec<_>>().join(" ");
    let mut out = String::new();
    let _ = writeln!(out, "K {}", sk.k());
    let _ = writeln!(out, "FEEDBACK {}", ids(&sk.feedback));
    let _ = writeln!(out, "SPECIAL {}", ids(&sk.special));
    for t in &sk.topo_edges {
        let _ = writeln!(out, "TOPO {} W {}", ids(&t.path), t.weight);
    }
    out
}

struct Dinic {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<u128>,
}

impl Dinic {
    fn new(n: usize) -> Self {
        Dinic { head: vec![Vec::new(); n], to: Vec::new(), cap: Vec::new() }
    }

    /// Undirected edge as a pair of arcs with equal capacity.
    fn add(&mut self, a: usize, b: usize, c: u128) {
        self.head[a].push(self.to.len());
        self.to.push(b);
        self.cap.push(c);
        self.head[b].push(self.to.len());
        self.to.push(a);
        self.cap.push(c);
    }

    fn levels(&self, s: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.head.len()];
        level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            for &a in &self.head[x] {
                let y = self.to[a];
                if self.cap[a] > 0 && level[y] == usize::MAX {
                    level[y] = level[x] + 1;
                    q.push_back(y);
                }
            }
        }
        level
    }

    fn push(&mut self, x: usize, t: usize, f: u128, level: &[usize], it: &mut [usize]) -> u128 {
        if x == t {
            return f;
        }
        while it[x] < self.head[x].len() {
            let a = self.head[x][it[x]];
            let y = self.to[a];
            if self.cap[a] > 0 && level[y] == level[x] + 1 {
                let d = self.push(y, t, f.min(self.cap[a]), level, it);
                if d > 0 {
                    self.cap[a] -= d;
                    self.cap[a ^ 1] += d;
                    return d;
                }
            }
            it[x] += 1;
        }
        0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> u128 {
        let mut flow = 0;
        loop {
            let level = self.levels(s);
            if level[t] == usize::MAX {
                return flow;
            }
            let mut it = vec![0; self.head.len()];
            loop {
                let f = self.push(s, t, u128::MAX, &level, &mut it);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
    }
}

/// Minimum s-t cut of an undirected capacitated multigraph. Returns the cut value and the
/// indices of edges leaving the set reachable from `s` in the residual network.
pub fn min_cut(n: usize, edges: &[(usize, usize, u128)], s: usize, t: usize) -> Result<(u128, Vec<usize>)> {
    if s == t {
        return Err(SfError::Invalid("min cut needs distinct terminals".into()));
    }
    if s >= n || t >= n || edges.iter().any(|&(a, b, _)| a >= n || b >= n) {
        return Err(SfError::Invalid("min cut vertex out of range".into()));
    }
    let mut d = Dinic::new(n);
    for &(a, b, c) in edges {
        d.add(a, b, c);
    }
    let value = d.max_flow(s, t);
    let level = d.levels(s);
    let reach = |v: usize| level[v] != usize::MAX;
    let cut = (0..edges.len()).filter(|&i| reach(edges[i].0) != reach(edges[i].1)).collect();
    Ok((value, cut))
}

/// Cheapest forest satisfying all demands of a graph made of paths between poles `c1` and
/// `c2` that leaves the poles in different components.
///
/// Demand-free interior vertices are merged into their path first. The remaining graph is
/// cut with capacities `N - w` on path edges and `n^2 N` on demand pairs, `N` the total
/// weight; the forest is every edge outside the cut.
pub fn solve_two_pole(g2: &Instance, c1: usize, c2: usize) -> Result<Forest> {
    let n = g2.n();
    if c1 == c2 || c1 >= n || c2 >= n {
        return Err(SfError::Invalid("poles must be two distinct vertices".into()));
    }
    let term = g2.is_terminal_mask();
    let key = |v: usize| v == c1 || v == c2 || term[v];
    if let Some(v) = (0..n).find(|&v| !key(v) && g2.degree(v) != 2 && g2.degree(v) != 0) {
        return precondition(format!("vertex {v} is not on a pole-to-pole path"));
    }
    // chains between key vertices: (a, b, weight, original edges)
    let mut chains: Vec<(usize, usize, u64, Vec<usize>)> = Vec::new();
    let mut used = vec![false; g2.m()];
    for a in (0..n).filter(|&v| key(v)) {
        for &(first, e0) in g2.adj(a) {
            if used[e0] {
                continue;
            }
            let (mut cur, mut e) = (first, e0);
            let mut es = Vec::new();
            loop {
                used[e] = true;
                es.push(e);
                if key(cur) {
                    break;
                }
                let &(nxt, ne) = g2.adj(cur).iter().find(|&&(_, x)| x != e).expect("degree 2");
                cur = nxt;
                e = ne;
            }
            if cur != a {
                let w = es.iter().map(|&x| g2.edge(x).w).sum();
                chains.push((a, cur, w, es));
            }
        }
    }
    let total: u128 = g2.total_weight() as u128;
    let big = (n as u128) * (n as u128) * total.max(1);
    let mut net: Vec<(usize, usize, u128)> = chains.iter().map(|c| (c.0, c.1, total - c.2 as u128)).collect();
    net.extend(g2.demands().iter().map(|&(s, t)| (s, t, big)));
    let (_, cut) = min_cut(n, &net, c1, c2)?;
    if cut.iter().any(|&i| i >= chains.len()) {
        return Err(SfError::Infeasible("no forest satisfies the demands with the poles apart".into()));
    }
    let mut keep = vec![true; chains.len()];
    for &i in &cut {
        keep[i] = false;
    }
    let f = Forest::new(chains.iter().zip(&keep).filter(|(_, &k)| k).flat_map(|(c, _)| c.3.iter().copied()));
    let mut uf = UnionFind::new(n);
    for &e in &f.edges {
        uf.union(g2.edge(e).u, g2.edge(e).v);
    }
    if uf.same(c1, c2) || !g2.demands().iter().all(|&(s, t)| uf.same(s, t)) {
        return Err(SfError::Infeasible("no forest satisfies the demands with the poles apart".into()));
    }
    Ok(f)
}

/// Counters from one run of the solver.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FesStats {
    pub k: usize,
    pub special: usize,
    pub topo_edges: usize,
    pub guesses: u64,
    pub rejected: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Special,
    Interior { topo: usize, pos: usize },
    Isolated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Label {
    Class(usize),
    Open { topo: usize, seg: usize },
    Local { topo: usize, pos: usize },
    Nowhere,
}

/// Interior of a topological edge whose ends lie in different classes. Positions run
/// `0..=r+1` along the path; `0..=a` hang on the first end, `b..=r+1` on the last, and the
/// open positions between form contiguous segments that must stay together.
#[derive(Clone)]
struct Split {
    a: usize,
    b: usize,
    seg: UnionFind,
    lo: Vec<usize>,
    hi: Vec<usize>,
}

impl Split {
    fn new(r: usize) -> Self {
        Split { a: 0, b: r + 1, seg: UnionFind::new(r + 2), lo: (0..r + 2).collect(), hi: (0..r + 2).collect() }
    }

    fn root(&mut self, p: usize) -> usize {
        self.seg.find(p)
    }

    fn merge(&mut self, p: usize, q: usize) {
        let (p, q) = (p.min(q), p.max(q));
        for x in p..q {
            let (ra, rb) = (self.seg.find(x), self.seg.find(x + 1));
            if ra != rb {
                let (lo, hi) = (self.lo[ra].min(self.lo[rb]), self.hi[ra].max(self.hi[rb]));
                self.seg.union(ra, rb);
                let r = self.seg.find(ra);
                self.lo[r] = lo;
                self.hi[r] = hi;
            }
        }
    }
}

enum Step {
    Done,
    Keep,
    Changed,
    Reject,
}

struct Solver<'a> {
    inst: &'a Instance,
    sk: TopologySkeleton,
    role: Vec<Role>,
}

struct Guess<'a, 'b> {
    s: &'b Solver<'a>,
    class: Vec<usize>,
    cross: Vec<bool>,
    split: Vec<Split>,
    local: Vec<Vec<(usize, usize)>>,
    queue: Vec<(usize, usize)>,
}

impl<'a> Solver<'a> {
    fn new(inst: &'a Instance) -> Result<Self> {
        let sk = build_skeleton(inst)?;
        let mut role = vec![Role::Isolated; inst.n()];
        for &v in &sk.special {
            role[v] = Role::Special;
        }
        for (t, te) in sk.topo_edges.iter().enumerate() {
            for (i, &v) in te.interior().iter().enumerate() {
                role[v] = Role::Interior { topo: t, pos: i + 1 };
            }
        }
        Ok(Solver { inst, sk, role })
    }

    /// Cost and edge set of the best forest consistent with the fully used topological edges.
    fn evaluate(&self, full: &[bool]) -> Result<Option<(u64, Vec<usize>)>> {
        let mut uf = UnionFind::new(self.inst.n());
        for (t, te) in self.sk.topo_edges.iter().enumerate() {
            if full[t] {
                let (u, v) = te.ends();
                uf.union(u, v);
            }
        }
        let class: Vec<usize> = (0..self.inst.n()).map(|v| uf.find(v)).collect();
        let tes = &self.sk.topo_edges;
        let cross: Vec<bool> = tes.iter().map(|te| class[te.ends().0] != class[te.ends().1]).collect();
        let mut g = Guess {
            s: self,
            class,
            cross,
            split: tes.iter().map(|te| Split::new(te.path.len() - 2)).collect(),
            local: vec![Vec::new(); tes.len()],
            queue: self.inst.demands().to_vec(),
        };
        let mut residual: Vec<(usize, usize)> = Vec::new();
        while let Some((x, y)) = g.queue.pop() {
            match g.step(x, y) {
                Step::Done => {}
                Step::Keep => residual.push((x, y)),
                Step::Changed => g.queue.append(&mut residual),
                Step::Reject => return Ok(None),
            }
        }
        g.assemble(full, &residual)
    }
}

impl Guess<'_, '_> {
    fn label(&mut self, x: usize) -> Label {
        match self.s.role[x] {
            Role::Special => Label::Class(self.class[x]),
            Role::Isolated => Label::Nowhere,
            Role::Interior { topo, pos } => {
                if !self.cross[topo] {
                    return Label::Local { topo, pos };
                }
                let (u, v) = self.s.sk.topo_edges[topo].ends();
                let sp = &mut self.split[topo];
                if pos <= sp.a {
                    Label::Class(self.class[u])
                } else if pos >= sp.b {
                    Label::Class(self.class[v])
                } else {
                    Label::Open { topo, seg: sp.root(pos) }
                }
            }
        }
    }

    /// Hangs the segment at `pos` on whichever end of `topo` lies in class `c`.
    fn force(&mut self, topo: usize, pos: usize, c: usize) -> Step {
        let (u, v) = self.s.sk.topo_edges[topo].ends();
        let sp = &mut self.split[topo];
        let r = sp.root(pos);
        if self.class[u] == c {
            sp.a = sp.a.max(sp.hi[r]);
        } else if self.class[v] == c {
            sp.b = sp.b.min(sp.lo[r]);
        } else {
            return Step::Reject;
        }
        if sp.a >= sp.b {
            Step::Reject
        } else {
            Step::Changed
        }
    }

    fn pair(&self, topo: usize) -> (usize, usize) {
        let (u, v) = self.s.sk.topo_edges[topo].ends();
        let (a, b) = (self.class[u], self.class[v]);
        (a.min(b), a.max(b))
    }

    fn step(&mut self, x: usize, y: usize) -> Step {
        if x == y {
            return Step::Done;
        }
        let (lx, ly) = (self.label(x), self.label(y));
        if let Label::Local { topo, pos } = lx {
            return self.local_demand(topo, pos, y);
        }
        if let Label::Local { topo, pos } = ly {
            return self.local_demand(topo, pos, x);
        }
        match (lx, ly) {
            (Label::Nowhere, _) | (_, Label::Nowhere) => Step::Reject,
            (Label::Class(a), Label::Class(b)) => {
                if a == b {
                    Step::Done
                } else {
                    Step::Reject
                }
            }
            (Label::Open { topo, .. }, Label::Class(c)) => self.force(topo, self.pos(x), c),
            (Label::Class(c), Label::Open { topo, .. }) => self.force(topo, self.pos(y), c),
            (Label::Open { topo: t1, seg: s1 }, Label::Open { topo: t2, .. }) => {
                if t1 == t2 {
                    let (px, py) = (self.pos(x), self.pos(y));
                    if self.split[t1].root(py) == s1 {
                        return Step::Done;
                    }
                    self.split[t1].merge(px, py);
                    return Step::Changed;
                }
                let (p1, p2) = (self.pair(t1), self.pair(t2));
                if p1 == p2 {
                    return Step::Keep;
                }
                let shared = [p1.0, p1.1].into_iter().find(|&c| c == p2.0 || c == p2.1);
                let Some(c) = shared else { return Step::Reject };
                if let Step::Reject = self.force(t1, self.pos(x), c) {
                    return Step::Reject;
                }
                self.force(t2, self.pos(y), c)
            }
            _ => unreachable!("local labels handled above"),
        }
    }

    fn pos(&self, x: usize) -> usize {
        match self.s.role[x] {
            Role::Interior { pos, .. } => pos,
            _ => unreachable!("interior vertex"),
        }
    }

    /// Demand from `pos` inside a topological edge with both ends in one class. A partner
    /// outside the path is rerouted through the first end.
    fn local_demand(&mut self, topo: usize, pos: usize, y: usize) -> Step {
        let te = &self.s.sk.topo_edges[topo];
        let r = te.path.len() - 2;
        let (u, v) = te.ends();
        let q = match self.s.role[y] {
            Role::Interior { topo: t, pos: q } if t == topo => Some(q),
            _ if y == u || y == v => Some(0),
            _ => None,
        };
        let q = q.map(|q| if q == r + 1 { 0 } else { q });
        match q {
            Some(q) => self.local[topo].push((pos, q)),
            None => {
                self.local[topo].push((pos, 0));
                self.queue.push((y, u));
            }
        }
        Step::Done
    }

    fn assemble(&mut self, full: &[bool], residual: &[(usize, usize)]) -> Result<Option<(u64, Vec<usize>)>> {
        let inst = self.s.inst;
        let tes = &self.s.sk.topo_edges;
        let mut chosen: Vec<usize> = Vec::new();
        for (t, te) in tes.iter().enumerate() {
            if full[t] {
                chosen.extend(&te.edges);
            } else if te.path.len() > 2 && !self.cross[t] {
                chosen.extend(best_deletion(inst, te, &self.local[t]));
            } else if te.path.len() > 2 {
                let sp = &mut self.split[t];
                let r = te.path.len() - 2;
                for i in 0..=r {
                    let inside = i > sp.a && i + 1 < sp.b && sp.seg.find(i) == sp.seg.find(i + 1);
                    if i < sp.a || i >= sp.b || inside {
                        chosen.push(te.edges[i]);
                    }
                }
            }
        }
        let mut by_pair: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for &(x, y) in residual {
            let Role::Interior { topo, .. } = self.s.role[x] else { unreachable!() };
            by_pair.entry(self.pair(topo)).or_default().push((x, y));
        }
        for (pair, demands) in by_pair {
            match self.two_pole(pair, &demands)? {
                Some(es) => chosen.extend(es),
                None => return Ok(None),
            }
        }
        chosen.sort_unstable();
        chosen.dedup();
        let f = Forest::new(chosen.iter().copied());
        let ev = evaluate_solution(inst, &f)?;
        if !ev.feasible {
            return Err(SfError::Internal(format!("assembled forest misses demands {:?}", ev.violations)));
        }
        Ok(Some((ev.cost, chosen)))
    }

    /// Builds the two-pole instance of every crossing topological edge between the classes
    /// of `pair` that carries a remaining demand, solves it and maps the edges back.
    fn two_pole(&mut self, pair: (usize, usize), demands: &[(usize, usize)]) -> Result<Option<Vec<usize>>> {
        let s = self.s;
        let inst = s.inst;
        let mut involved: Vec<usize> = Vec::new();
        for &(x, y) in demands {
            for z in [x, y] {
                if let Role::Interior { topo, .. } = s.role[z] {
                    involved.push(topo);
                }
            }
        }
        involved.sort_unstable();
        involved.dedup();
        // node ids: 0 and 1 are the poles, then one node per open segment
        let mut node_of: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut g2_edges: Vec<(usize, usize, u64, usize)> = Vec::new();
        for &t in &involved {
            let te = &s.sk.topo_edges[t];
            let (u, v) = te.ends();
            let pole = |c: usize| if c == pair.0 { 0 } else { 1 };
            let (pu, pv) = (pole(self.class[u]), pole(self.class[v]));
            let (a, b) = (self.split[t].a, self.split[t].b);
            if a + 1 == b {
                continue;
            }
            let mut node = |p: usize, sp: &mut Split| -> usize {
                if p <= a {
                    pu
                } else if p >= b {
                    pv
                } else {
                    let key = (t, sp.root(p));
                    let next = node_of.len() + 2;
                    *node_of.entry(key).or_insert(next)
                }
            };
            for i in a..b {
                let (na, nb) = (node(i, &mut self.split[t]), node(i + 1, &mut self.split[t]));
                if na != nb {
                    g2_edges.push((na, nb, inst.edge(te.edges[i]).w, te.edges[i]));
                }
            }
        }
        let mut g2_demands = Vec::new();
        for &(x, y) in demands {
            let key = |g: &mut Self, z: usize| {
                let Role::Interior { topo, pos } = g.s.role[z] else { unreachable!() };
                (topo, g.split[topo].root(pos))
            };
            let (kx, ky) = (key(self, x), key(self, y));
            g2_demands.push((node_of[&kx], node_of[&ky]));
        }
        let g2 = Instance::new(node_of.len() + 2, g2_edges.iter().map(|e| (e.0, e.1, e.2)), g2_demands)?;
        let origin: BTreeMap<(usize, usize), usize> =
            g2_edges.iter().map(|e| ((e.0.min(e.1), e.0.max(e.1)), e.3)).collect();
        match solve_two_pole(&g2, 0, 1) {
            Ok(f) => Ok(Some(
                f.edges
                    .iter()
                    .map(|&e| {
                        let ed = g2.edge(e);
                        origin[&(ed.u, ed.v)]
                    })
                    .collect(),
            )),
            Err(SfError::Infeasible(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

/// Cheapest way to serve `local` demands on a path whose two ends are already connected:
/// one edge is left out and every other edge is kept exactly when the part of the path it
/// cuts off holds one endpoint of some demand. Position 0 stands for both ends.
fn best_deletion(inst: &Instance, te: &TopoEdge, local: &[(usize, usize)]) -> Vec<usize> {
    let r = te.path.len() - 2;
    let separates = |lo: usize, hi: usize| {
        local.iter().any(|&(p, q)| (lo <= p && p <= hi) != (lo <= q && q <= hi))
    };
    let mut best: Option<(u64, Vec<usize>)> = None;
    for j in 0..=r {
        let mut es = Vec::new();
        for i in 0..=r {
            let needed = if i < j { separates(i + 1, j) } else if i > j { separates(j + 1, i) } else { false };
            if needed {
                es.push(te.edges[i]);
            }
        }
        let cost: u64 = es.iter().map(|&e| inst.edge(e).w).sum();
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, es));
        }
    }
    best.map(|b| b.1).unwrap_or_default()
}

/// Optimal forest.
pub fn solve_fes(inst: &Instance) -> Result<Forest> {
    solve_fes_with_stats(inst).map(|r| r.0)
}

pub fn solve_fes_with_stats(inst: &Instance) -> Result<(Forest, FesStats)> {
    inst.check_demands_connected()?;
    let red = apply_rule3(inst);
    let solver = Solver::new(&red.instance)?;
    let tes = &solver.sk.topo_edges;
    let mut stats = FesStats {
        k: solver.sk.k(),
        special: solver.sk.special.len(),
        topo_edges: tes.len(),
        ..Default::default()
    };
    let mut order: Vec<usize> = (0..tes.len()).collect();
    order.sort_by_key(|&t| (std::cmp::Reverse(tes[t].weight), t));
    let mut full = vec![false; tes.len()];
    let mut best: Option<(u64, Vec<usize>)> = None;
    let uf = UnionFind::new(red.instance.n());
    search(&solver, &order, 0, 0, &uf, &mut full, &mut best, &mut stats)?;
    let Some((_, edges)) = best else {
        return match two_approx_primal_dual(inst) {
            Err(e @ SfError::Infeasible(_)) => Err(e),
            _ => Err(SfError::Internal("every guess was rejected on a feasible instance".into())),
        };
    };
    let f = lift_solution(&Forest::new(edges), &red.trace)?;
    Ok((f, stats))
}

/// Depth-first search over acyclic sets of fully used topological edges, heaviest first,
/// cut off once the fully used weight reaches the best cost found.
#[allow(clippy::too_many_arguments)]
fn search(
    s: &Solver,
    order: &[usize],
    i: usize,
    lb: u64,
    uf: &UnionFind,
    full: &mut Vec<bool>,
    best: &mut Option<(u64, Vec<usize>)>,
    stats: &mut FesStats,
) -> Result<()> {
    if best.as_ref().is_some_and(|(c, _)| lb >= *c) {
        return Ok(());
    }
    if i == order.len() {
        stats.guesses += 1;
        match s.evaluate(full)? {
            Some((c, es)) => {
                if best.as_ref().is_none_or(|(b, _)| c < *b) {
                    *best = Some((c, es));
                }
            }
            None => stats.rejected += 1,
        }
        return Ok(());
    }
    let t = order[i];
    let (u, v) = s.sk.topo_edges[t].ends();
    let mut inner = uf.clone();
    if inner.union(u, v) {
        full[t] = true;
        search(s, order, i + 1, lb + s.sk.topo_edges[t].weight, &inner, full, best, stats)?;
        full[t] = false;
    }
    search(s, order, i + 1, lb, uf, full, best, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::brute_force_opt;

    fn cycle(ws: &[u64]) -> Instance {
        let n = ws.len();
        Instance::new(n, ws.iter().enumerate().map(|(i, &w)| (i, (i + 1) % n, w)), []).unwrap()
    }

    #[test]
    fn feedback_counts() {
        let tree = Instance::new(4, [(0, 1, 1), (1, 2, 1), (1, 3, 1)], []).unwrap();
        assert!(feedback_edge_set(&tree).is_empty());
        assert_eq!(feedback_edge_set(&cycle(&[1, 1, 1, 1])).len(), 1);
        let two = Instance::new(8, (0..4).flat_map(|c| [(c, (c + 1) % 4, 1), (4 + c, 4 + (c + 1) % 4, 1)]), []).unwrap();
        assert_eq!(feedback_edge_set(&two).len(), 2);
    }

    #[test]
    fn skeleton_shapes() {
        let c5 = cycle(&[1, 2, 3, 4, 5]);
        let sk = build_skeleton(&c5).unwrap();
        assert_eq!(sk.k(), 1);
        assert_eq!(sk.special.len(), 2);
        assert_eq!(sk.topo_edges.len(), 2);
        let k4 = Instance::new(4, [(0, 1, 1), (0, 2, 1), (0, 3, 1), (1, 2, 1), (1, 3, 1), (2, 3, 1)], []).unwrap();
        let sk = build_skeleton(&k4).unwrap();
        assert_eq!((sk.k(), sk.special.len(), sk.topo_edges.len()), (3, 4, 6));
        let leafy = Instance::new(3, [(0, 1, 1), (1, 2, 1)], []).unwrap();
        assert!(matches!(build_skeleton(&leafy), Err(SfError::Precondition(_))));
        assert!(write_skeleton(&sk).starts_with("K 3\n"));
    }

    #[test]
    fn cuts() {
        assert_eq!(min_cut(2, &[(0, 1, 7)], 0, 1).unwrap(), (7, vec![0]));
        let par = [(0, 2, 3), (2, 1, 9), (0, 3, 6), (3, 1, 5)];
        assert_eq!(min_cut(4, &par, 0, 1).unwrap().0, 8);
        assert_eq!(min_cut(3, &[(0, 2, 4)], 0, 1).unwrap(), (0, vec![]));
        assert!(min_cut(2, &[], 1, 1).is_err());
    }

    #[test]
    fn two_pole_example() {
        // poles 0 and 1, paths 0-2-1 and 0-3-1, demand {2,3}
        let g = Instance::new(4, [(0, 2, 1), (2, 1, 1), (0, 3, 1), (3, 1, 1)], [(2, 3)]).unwrap();
        let f = solve_two_pole(&g, 0, 1).unwrap();
        assert_eq!(f.cost(&g), 2);
        let none = Instance::new(4, [(0, 2, 1), (2, 1, 1), (0, 3, 1), (3, 1, 1)], []).unwrap();
        assert!(solve_two_pole(&none, 0, 1).unwrap().is_empty());
    }

    #[test]
    fn small_optima() {
        let c4 = Instance::new(4, [(0, 1, 2), (1, 2, 2), (2, 3, 2), (0, 3, 2)], [(0, 1), (2, 3)]).unwrap();
        assert_eq!(solve_fes(&c4).unwrap().cost(&c4), 4);
        let c6 = Instance::new(6, [1, 1, 1, 1, 1, 10].iter().enumerate().map(|(i, &w)| (i, (i + 1) % 6, w)), [(0, 3)]).unwrap();
        assert_eq!(solve_fes(&c6).unwrap().cost(&c6), 3);
        // theta: 0 and 1 joined through 2, 3, 4
        let theta = Instance::new(5, [(0, 2, 1), (2, 1, 3), (0, 3, 2), (3, 1, 1), (0, 4, 4), (4, 1, 1)], [(2, 3)]).unwrap();
        assert_eq!(solve_fes(&theta).unwrap().cost(&theta), brute_force_opt(&theta).unwrap().0);
    }
}
