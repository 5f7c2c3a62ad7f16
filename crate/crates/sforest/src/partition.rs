//! Partitions of active terminals and per-node partition families.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Result, SfError};
use crate::instance::Instance;
use crate::td::{bag_contexts, BagContext, TreeDecomposition};
use crate::util::canonical_rgs;

/// Set partition in canonical form: sorted blocks ordered by their minimum.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut blocks: Vec<Vec<usize>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        if blocks.iter().any(Vec::is_empty) {
            return Err(SfError::Invalid("partition with an empty block".into()));
        }
        blocks.sort();
        let mut all: Vec<usize> = blocks.iter().flatten().copied().collect();
        let len = all.len();
        all.sort_unstable();
        all.dedup();
        if all.len() != len {
            return Err(SfError::Invalid("partition blocks overlap".into()));
        }
        Ok(Partition { blocks })
    }

    /// Groups `items` by `key`.
    pub fn from_key<K: Eq + std::hash::Hash>(items: &[usize], mut key: impl FnMut(usize) -> K) -> Self {
        let mut map: HashMap<K, usize> = HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for &t in items {
            let next = blocks.len();
            let idx = *map.entry(key(t)).or_insert(next);
            if idx == next {
                blocks.push(Vec::new());
            }
            blocks[idx].push(t);
        }
        Partition::new(blocks).expect("grouping yields disjoint blocks")
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Sorted ground set.
    pub fn ground(&self) -> Vec<usize> {
        let mut g: Vec<usize> = self.blocks.iter().flatten().copied().collect();
        g.sort_unstable();
        g
    }

    /// Block index of every ground element, listed in ascending element order, in
    /// restricted-growth form.
    pub fn rgs(&self) -> Vec<u8> {
        let mut pairs: Vec<(usize, usize)> =
            self.blocks.iter().enumerate().flat_map(|(i, b)| b.iter().map(move |&t| (t, i))).collect();
        pairs.sort_unstable();
        canonical_rgs(&pairs.iter().map(|&(_, i)| i).collect::<Vec<_>>())
    }

    pub fn block_of(&self, t: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.binary_search(&t).is_ok())
    }
}

/// One set of partitions per decomposition node.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartitionFamily {
    per_node: Vec<Vec<Partition>>,
}

impl PartitionFamily {
    pub fn new(nodes: usize) -> Self {
        PartitionFamily { per_node: vec![Vec::new(); nodes] }
    }

    pub fn from_vec(per_node: Vec<Vec<Partition>>) -> Self {
        let mut fam = PartitionFamily { per_node: Vec::new() };
        for set in per_node {
            fam.per_node.push(Vec::new());
            let x = fam.per_node.len() - 1;
            for p in set {
                fam.insert(x, p);
            }
        }
        fam
    }

    /// Adds `p` at `node` unless already present.
    pub fn insert(&mut self, node: usize, p: Partition) {
        let set = &mut self.per_node[node];
        if !set.contains(&p) {
            set.push(p);
        }
    }

    pub fn get(&self, node: usize) -> &[Partition] {
        &self.per_node[node]
    }

    pub fn nodes(&self) -> usize {
        self.per_node.len()
    }

    /// Total partition count over all nodes.
    pub fn total(&self) -> usize {
        self.per_node.iter().map(Vec::len).sum()
    }

    /// Checks that each partition is over exactly the node's active terminals.
    pub fn check(&self, ctx: &[BagContext]) -> Result<()> {
        if self.per_node.len() != ctx.len() {
            return Err(SfError::Precondition(format!(
                "family covers {} nodes, decomposition has {}",
                self.per_node.len(),
                ctx.len()
            )));
        }
        for (x, set) in self.per_node.iter().enumerate() {
            for p in set {
                if p.ground() != ctx[x].active {
                    return Err(SfError::Precondition(format!("node {x}: partition ground set differs from active terminals")));
                }
            }
        }
        Ok(())
    }

    /// Allowed partitions as restricted-growth strings over the sorted active set;
    /// `None` marks an unconstrained node (no active terminals).
    pub fn rgs_sets(&self, ctx: &[BagContext]) -> Vec<Option<std::collections::HashSet<Vec<u8>>>> {
        self.per_node
            .iter()
            .zip(ctx)
            .map(|(set, c)| if c.active.is_empty() { None } else { Some(set.iter().map(Partition::rgs).collect()) })
            .collect()
    }
}

/// Per-node partition of active terminals induced by the components of a forest.
pub fn active_partitions(ctx: &[BagContext], comp: &[usize]) -> Vec<Partition> {
    ctx.iter().map(|c| Partition::from_key(&c.active, |t| comp[t])).collect()
}

/// Whether a forest with component labels `comp` conforms to `fam`.
pub fn conforms(ctx: &[BagContext], fam: &PartitionFamily, comp: &[usize]) -> bool {
    ctx.iter().enumerate().all(|(x, c)| {
        c.active.is_empty() || fam.get(x).contains(&Partition::from_key(&c.active, |t| comp[t]))
    })
}

/// Text form: `PF 1`, `NODE <id>`, `PART a,b|c`; ids 1-based.
pub fn write_family(fam: &PartitionFamily) -> String {
    let mut out = String::from("PF 1\n");
    for x in 0..fam.nodes() {
        if fam.get(x).is_empty() {
            continue;
        }
        let _ = writeln!(out, "NODE {}", x + 1);
        for p in fam.get(x) {
            let blocks: Vec<String> = p
                .blocks()
                .iter()
                .map(|b| b.iter().map(|v| (v + 1).to_string()).collect::<Vec<_>>().join(","))
                .collect();
            let _ = writeln!(out, "PART {}", blocks.join("|"));
        }
    }
    out
}

pub fn parse_family(text: &str, nodes: usize) -> Result<PartitionFamily> {
    let perr = |line: usize, msg: &str| SfError::Parse { line, msg: msg.to_string() };
    let mut fam = PartitionFamily::new(nodes);
    let mut header = false;
    let mut cur: Option<usize> = None;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if !header {
            if line != "PF 1" {
                return Err(perr(ln, "expected header 'PF 1'"));
            }
            header = true;
        } else if let Some(rest) = line.strip_prefix("NODE") {
            let id: usize = rest.trim().parse().ok().filter(|&v| v >= 1 && v <= nodes).ok_or_else(|| perr(ln, "bad node id"))?;
            cur = Some(id - 1);
        } else if let Some(rest) = line.strip_prefix("PART") {
            let x = cur.ok_or_else(|| perr(ln, "PART before NODE"))?;
            let mut blocks = Vec::new();
            let rest = rest.trim();
            if !rest.is_empty() {
                for b in rest.split('|') {
                    let mut block = Vec::new();
                    for v in b.split(',') {
                        let v: usize = v.trim().parse().ok().filter(|&v| v >= 1).ok_or_else(|| perr(ln, "bad terminal id"))?;
                        block.push(v - 1);
                    }
                    blocks.push(block);
                }
            }
            let p = Partition::new(blocks).map_err(|e| perr(ln, &e.to_string()))?;
            fam.insert(x, p);
        } else {
            return Err(perr(ln, "expected NODE or PART"));
        }
    }
    if !header {
        return Err(perr(1, "empty input"));
    }
    Ok(fam)
}

/// Family with one partition per node with active terminals: the active terminals grouped
/// by demand group.
pub fn family_trivial(inst: &Instance, td: &TreeDecomposition) -> PartitionFamily {
    let ctx = bag_contexts(inst, td);
    let mut uf = crate::util::UnionFind::new(inst.n());
    for &(s, t) in inst.demands() {
        uf.union(s, t);
    }
    let mut fam = PartitionFamily::new(td.len());
    for c in &ctx {
        if !c.active.is_empty() {
            fam.insert(c.node, Partition::from_key(&c.active, |t| uf.find(t)));
        }
    }
    fam
}
