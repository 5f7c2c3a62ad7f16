//! Instance generators: bounded random instances and the 3-SAT reduction gadget.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result, SfError};
use crate::instance::{Forest, Instance};

/// A CNF with at most three literals per clause. Literals are DIMACS style: `v + 1` for
/// variable `v`, negated for its complement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cnf3 {
    pub vars: usize,
    pub clauses: Vec<Vec<i64>>,
    /// Three variable sets with each clause touching each set at most once.
    pub partition: Option<[Vec<usize>; 3]>,
}

impl Cnf3 {
    pub fn new(vars: usize, clauses: Vec<Vec<i64>>) -> Result<Self> {
        for (i, c) in clauses.iter().enumerate() {
            if c.len() > 3 {
                return invalid(format!("clause {} has {} literals", i + 1, c.len()));
            }
            if let Some(&l) = c.iter().find(|&&l| l == 0 || l.unsigned_abs() as usize > vars) {
                return invalid(format!("clause {} has literal {l} outside 1..={vars}", i + 1));
            }
        }
        Ok(Cnf3 { vars, clauses, partition: None })
    }

    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|&l| lit_true(l, assignment)))
    }

    /// Some satisfying assignment, by exhaustive search (at most 24 variables).
    pub fn brute_force_sat(&self) -> Option<Vec<bool>> {
        assert!(self.vars <= 24, "exhaustive search limited to 24 variables");
        (0u32..1 << self.vars)
            .map(|mask| (0..self.vars).map(|v| mask >> v & 1 == 1).collect::<Vec<_>>())
            .find(|a| self.satisfied_by(a))
    }
}

fn lit_true(l: i64, assignment: &[bool]) -> bool {
    let v = l.unsigned_abs() as usize - 1;
    assignment.get(v).copied().unwrap_or(false) == (l > 0)
}

/// Reads DIMACS CNF. Clauses may span lines and end with `0`; a `%` line ends the input.
pub fn parse_dimacs(text: &str) -> Result<Cnf3> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut cur: Vec<i64> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            let t: Vec<&str> = line.split_whitespace().collect();
            if header.is_some() || t.len() != 4 || t[1] != "cnf" {
                return Err(SfError::Parse { line: ln, msg: "expected 'p cnf <vars> <clauses>'".into() });
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| SfError::Parse { line: ln, msg: format!("bad count '{s}'") });
            header = Some((num(t[2])?, num(t[3])?));
            continue;
        }
        let (vars, _) = header.ok_or(SfError::Parse { line: ln, msg: "clause before header".into() })?;
        for tok in line.split_whitespace() {
            let l: i64 = tok.parse().map_err(|_| SfError::Parse { line: ln, msg: format!("bad literal '{tok}'") })?;
            if l == 0 {
                clauses.push(std::mem::take(&mut cur));
                continue;
            }
            if l.unsigned_abs() as usize > vars {
                return Err(SfError::Parse { line: ln, msg: format!("literal {l} exceeds {vars} variables") });
            }
            cur.push(l);
            if cur.len() > 3 {
                return Err(SfError::Parse { line: ln, msg: "clause with more than 3 literals".into() });
            }
        }
    }
    let (vars, count) = header.ok_or(SfError::Parse { line: 0, msg: "missing header".into() })?;
    if !cur.is_empty() {
        clauses.push(cur);
    }
    if clauses.len() != count {
        return Err(SfError::Parse { line: 0, msg: format!("header declares {count} clauses, found {}", clauses.len()) });
    }
    Cnf3::new(vars, clauses)
}

/// Adds copies `x' = n + x`, `x'' = 2n + x` tied by `x -> x' -> x'' -> x`; the literal at
/// position p of every clause is moved to copy p.
pub fn tsat3_transform(cnf: &Cnf3) -> Cnf3 {
    let n = cnf.vars as i64;
    let mut clauses: Vec<Vec<i64>> = cnf
        .clauses
        .iter()
        .map(|c| c.iter().enumerate().map(|(p, &l)| l.signum() * (l.abs() + p as i64 * n)).collect())
        .collect();
    for x in 1..=n {
        clauses.push(vec![-x, x + n]);
        clauses.push(vec![-(x + n), x + 2 * n]);
        clauses.push(vec![-(x + 2 * n), x]);
    }
    let v = cnf.vars;
    Cnf3 { vars: 3 * v, clauses, partition: Some([(0..v).collect(), (v..2 * v).collect(), (2 * v..3 * v).collect()]) }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gadget {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub middle: Vec<usize>,
}

/// Vertex ids of the reduction instance and the variable encoding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GadgetLayout {
    /// Padded size of each variable set, a power of 4.
    pub n: usize,
    pub log_n: usize,
    pub l: usize,
    pub gadgets: Vec<Gadget>,
    /// `(c1, c2)` per clause.
    pub clause_vertices: Vec<(usize, usize)>,
    /// `(gadget i, left index j, bit alpha)` per formula variable.
    pub var_slot: Vec<(usize, usize, usize)>,
    pub clauses: Vec<Vec<i64>>,
    pub budget: u64,
}

impl GadgetLayout {
    pub fn sqrt_n(&self) -> usize {
        1 << (self.log_n / 2)
    }

    /// All gadget vertices; every edge has an endpoint among them.
    pub fn cover_witness(&self) -> Vec<usize> {
        let mut out: Vec<usize> =
            self.gadgets.iter().flat_map(|g| g.left.iter().chain(&g.right).chain(&g.middle).copied()).collect();
        out.sort_unstable();
        out
    }
}

/// Steiner Forest instance of the 3-SAT reduction, unit weights.
pub fn sat_to_steiner_forest(cnf: &Cnf3) -> Result<(Instance, GadgetLayout)> {
    let Some(parts) = &cnf.partition else {
        return invalid("formula has no three-way variable partition");
    };
    let mut set_of = vec![usize::MAX; cnf.vars];
    for (s, part) in parts.iter().enumerate() {
        for &v in part {
            if v >= cnf.vars || set_of[v] != usize::MAX {
                return invalid(format!("variable {} missing from or repeated in the partition", v + 1));
            }
            set_of[v] = s;
        }
    }
    if let Some(v) = set_of.iter().position(|&s| s == usize::MAX) {
        return invalid(format!("variable {} is not in the partition", v + 1));
    }
    for (i, c) in cnf.clauses.iter().enumerate() {
        let vars: BTreeSet<usize> = c.iter().map(|l| l.unsigned_abs() as usize - 1).collect();
        let sets: BTreeSet<usize> = vars.iter().map(|&v| set_of[v]).collect();
        if sets.len() != vars.len() {
            return invalid(format!("clause {} uses two variables of one set", i + 1));
        }
    }
    let biggest = parts.iter().map(Vec::len).max().unwrap_or(0);
    let mut n = 4;
    while n < biggest {
        n *= 4;
    }
    let log_n = n.trailing_zeros() as usize;
    let half = log_n / 2;
    let sqrt_n = 1usize << half;
    let l = n.div_ceil(log_n * log_n);

    let mut var_slot = vec![(0, 0, 0); cnf.vars];
    for (s, part) in parts.iter().enumerate() {
        let mut sorted = part.clone();
        sorted.sort_unstable();
        // split n padded slots into log_n groups as equal as possible
        let (base, extra) = (n / log_n, n % log_n);
        let mut pos = 0;
        for g in 0..log_n {
            let size = base + usize::from(g < extra);
            for p in 0..size {
                if let Some(&v) = sorted.get(pos + p) {
                    var_slot[v] = (s * log_n + g, p / half, p % half);
                }
            }
            pos += size;
        }
    }

    let mut next = 0;
    let mut take = |count: usize| {
        let ids: Vec<usize> = (next..next + count).collect();
        next += count;
        ids
    };
    let gadgets: Vec<Gadget> =
        (0..3 * log_n).map(|_| Gadget { left: take(2 * l), right: take(2 * l), middle: take(sqrt_n) }).collect();
    let clause_vertices: Vec<(usize, usize)> = cnf.clauses.iter().map(|_| (take(1)[0], take(1)[0])).collect();

    let mut edges = BTreeSet::new();
    let mut demands = Vec::new();
    for g in &gadgets {
        for j in 0..2 * l {
            for &m in &g.middle {
                edges.insert((g.left[j], m));
                edges.insert((g.right[j], m));
            }
            demands.push((g.left[j], g.right[j]));
        }
    }
    for (c, &(c1, c2)) in cnf.clauses.iter().zip(&clause_vertices) {
        for &lit in c {
            let (i, j, alpha) = var_slot[lit.unsigned_abs() as usize - 1];
            edges.insert((c1, gadgets[i].left[j]));
            for (jp, &m) in gadgets[i].middle.iter().enumerate() {
                if (jp >> alpha & 1 == 1) == (lit > 0) {
                    edges.insert((c2, m));
                }
            }
        }
        demands.push((c1, c2));
    }
    let budget = 2 * cnf.clauses.len() as u64 + 12 * (l * log_n) as u64;
    let inst = Instance::new(next, edges.into_iter().map(|(a, b)| (a, b, 1)), demands)?;
    let layout = GadgetLayout { n, log_n, l, gadgets, clause_vertices, var_slot, clauses: cnf.clauses.clone(), budget };
    Ok((inst, layout))
}

/// Text sidecar for a gadget instance; vertex ids are 1-based as in SFP.
pub fn write_layout(layout: &GadgetLayout) -> String {
    let ids = |v: &[usize]| v.iter().map(|x| (x + 1).to_string()).collect::<Vec<_>>().join(" ");
    let mut out = String::from("LAYOUT 1\n");
    let _ = writeln!(out, "N {} LOGN {} L {} SQRTN {}", layout.n, layout.log_n, layout.l, layout.sqrt_n());
    let _ = writeln!(out, "BUDGET {}", layout.budget);
    for (i, g) in layout.gadgets.iter().enumerate() {
        let _ = writeln!(out, "GADGET {i} LEFT {} RIGHT {} MIDDLE {}", ids(&g.left), ids(&g.right), ids(&g.middle));
    }
    for (c, &(c1, c2)) in layout.clause_vertices.iter().enumerate() {
        let _ = writeln!(out, "CLAUSE {} {} {}", c + 1, c1 + 1, c2 + 1);
    }
    for (v, &(i, j, a)) in layout.var_slot.iter().enumerate() {
        let _ = writeln!(out, "VAR {} {i} {j} {a}", v + 1);
    }
    out.push_str("END\n");
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GadgetSolution {
    pub forest: Forest,
    /// Clauses (0-based) with no true literal; their demand is left open.
    pub unrouted: Vec<usize>,
}

/// The intended solution for an assignment of the formula variables; padding variables are
/// false.
pub fn assignment_to_solution(inst: &Instance, layout: &GadgetLayout, assignment: &[bool]) -> Result<GadgetSolution> {
    let edge = |a: usize, b: usize| {
        inst.edge_between(a, b).ok_or_else(|| SfError::Invalid(format!("no edge {}-{} in the gadget instance", a + 1, b + 1)))
    };
    // chosen middle index per (gadget, left index)
    let mut chosen: Vec<Vec<usize>> = layout.gadgets.iter().map(|g| vec![0; g.left.len()]).collect();
    for (v, &(i, j, a)) in layout.var_slot.iter().enumerate() {
        if assignment.get(v).copied().unwrap_or(false) {
            chosen[i][j] |= 1 << a;
        }
    }
    let mut edges = Vec::new();
    for (g, ch) in layout.gadgets.iter().zip(&chosen) {
        for j in 0..g.left.len() {
            edges.push(edge(g.left[j], g.middle[ch[j]])?);
            edges.push(edge(g.right[j], g.middle[ch[j]])?);
        }
    }
    let mut unrouted = Vec::new();
    for (c, (lits, &(c1, c2))) in layout.clauses.iter().zip(&layout.clause_vertices).enumerate() {
        match lits.iter().find(|&&l| lit_true(l, assignment)) {
            Some(&l) => {
                let (i, j, _) = layout.var_slot[l.unsigned_abs() as usize - 1];
                let g = &layout.gadgets[i];
                edges.push(edge(c1, g.left[j])?);
                edges.push(edge(g.middle[chosen[i][j]], c2)?);
            }
            None => unrouted.push(c),
        }
    }
    Ok(GadgetSolution { forest: Forest::new(edges), unrouted })
}

/// Structural bound built into a random instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetParam {
    None,
    /// Spanning tree plus at most k further edges.
    Fes(usize),
    /// Every edge touches one of k cover vertices.
    Vc(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Profile {
    pub n: usize,
    pub m: usize,
    pub demands: usize,
    pub weight_max: u64,
    pub target: TargetParam,
}

/// Connected random instance, deterministic in the seed.
pub fn gen_random_bounded(seed: u64, p: &Profile) -> Result<Instance> {
    let n = p.n;
    if n == 0 {
        return invalid("profile needs at least one vertex");
    }
    if p.weight_max == 0 {
        return invalid("weight_max must be positive");
    }
    if p.demands > 0 && n < 2 {
        return invalid("demands need two vertices");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let full = n * (n - 1) / 2;
    let (max_m, cover) = match p.target {
        TargetParam::None => (full, None),
        TargetParam::Fes(k) => (full.min(n - 1 + k), None),
        TargetParam::Vc(k) => {
            let k = k.min(n);
            if k == 0 && n > 1 {
                return invalid("a connected instance on two or more vertices has no empty cover");
            }
            (k * (k.saturating_sub(1)) / 2 + k * (n - k), Some(order[..k].to_vec()))
        }
    };
    if p.m + 1 < n || p.m > max_m {
        return invalid(format!("m = {} outside {}..={max_m} for this profile", p.m, n - 1));
    }
    let mut edges = BTreeSet::new();
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    match &cover {
        None => {
            for i in 1..n {
                let j = rng.gen_range(0..i);
                edges.insert(key(order[i], order[j]));
            }
        }
        Some(c) => {
            for i in 1..c.len() {
                let j = rng.gen_range(0..i);
                edges.insert(key(c[i], c[j]));
            }
            for &v in &order[c.len()..] {
                edges.insert(key(v, c[rng.gen_range(0..c.len())]));
            }
        }
    }
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    let in_cover: Vec<bool> = {
        let mut m = vec![cover.is_none(); n];
        for &v in cover.iter().flatten() {
            m[v] = true;
        }
        m
    };
    for a in 0..n {
        for b in a + 1..n {
            if (in_cover[a] || in_cover[b]) && !edges.contains(&(a, b)) {
                candidates.push((a, b));
            }
        }
    }
    candidates.shuffle(&mut rng);
    edges.extend(candidates.into_iter().take(p.m - edges.len()));
    let weighted: Vec<(usize, usize, u64)> = edges.into_iter().map(|(a, b)| (a, b, rng.gen_range(1..=p.weight_max))).collect();
    let demands: Vec<(usize, usize)> = (0..p.demands)
        .map(|_| {
            let a = rng.gen_range(0..n);
            let b = (a + rng.gen_range(1..n)) % n;
            (a, b)
        })
        .collect();
    Instance::new(n, weighted, demands)
}
