//! Clustering of the parse tree and the induced subautomata.
//!
//! A cluster is a connected set of at most `x` parse-tree nodes. Every
//! subtree hanging off a cluster belongs to a child cluster and is replaced
//! by a pseudo-leaf; in the cluster's subautomaton the child appears only as
//! a pseudo-edge between its start and accept nodes. Local node numbering is
//! the global (construction) order restricted to the subautomaton, which is
//! topological for forward edges and keeps every child's start and accept
//! nodes adjacent.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::nfa::{edge_line, EdgeKind, EdgeLabel, Nfa};
use crate::regex_ast::{Label, ParseTree};

#[derive(Debug, Clone)]
pub struct ClusterPartition {
    pub x: usize,
    /// Cluster id of every parse-tree node.
    pub cluster_of: Vec<usize>,
    /// Members of each cluster, in pre-order.
    pub clusters: Vec<Vec<usize>>,
    /// Topmost parse-tree node of each cluster.
    pub roots: Vec<usize>,
    pub macro_parent: Vec<Option<usize>>,
}

impl ClusterPartition {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn check_invariants(&self, tree: &ParseTree) -> std::result::Result<(), String> {
        let m = tree.len();
        let mut seen = vec![false; m];
        for (id, members) in self.clusters.iter().enumerate() {
            if members.is_empty() || members.len() > self.x {
                return Err(format!(
                    "cluster {id} has {} nodes (x = {})",
                    members.len(),
                    self.x
                ));
            }
            for &v in members {
                if std::mem::replace(&mut seen[v], true) {
                    return Err(format!("node {v} in two clusters"));
                }
                if self.cluster_of[v] != id {
                    return Err(format!("cluster_of[{v}] disagrees with membership"));
                }
                let connected =
                    v == self.roots[id] || tree.parent(v).is_some_and(|p| self.cluster_of[p] == id);
                if !connected {
                    return Err(format!("cluster {id} is not connected at node {v}"));
                }
            }
            let expected_parent = tree.parent(self.roots[id]).map(|p| self.cluster_of[p]);
            if self.macro_parent[id] != expected_parent {
                return Err(format!("macro parent of cluster {id} is wrong"));
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err("clusters do not cover the tree".into());
        }
        let count = self.clusters.len();
        if count > 1 && count * self.x > 4 * m {
            return Err(format!(
                "{count} clusters exceeds 4m/x for m = {m}, x = {}",
                self.x
            ));
        }
        Ok(())
    }
}

/// Bottom-up greedy clustering: each node starts an open cluster holding
/// itself and its children's open clusters; while that exceeds `x`, the
/// largest open child cluster is closed. Every closed cluster other than the
/// root one then has at least `x/2` nodes.
pub fn cluster(tree: &ParseTree, x: usize) -> ClusterPartition {
    assert!(x >= 1, "cluster capacity must be positive");
    let m = tree.len();
    let mut pending = vec![0usize; m];
    let mut closed = vec![false; m];
    for v in tree.postorder() {
        let mut open: Vec<usize> = tree.children(v).to_vec();
        let mut total = 1 + open.iter().map(|&c| pending[c]).sum::<usize>();
        while total > x {
            let (i, _) = open
                .iter()
                .enumerate()
                .max_by_key(|&(i, &c)| (pending[c], std::cmp::Reverse(i)))
                .expect("a single node always fits");
            let c = open.remove(i);
            closed[c] = true;
            total -= pending[c];
        }
        pending[v] = total;
    }
    closed[tree.root()] = true;

    let mut cluster_of = vec![usize::MAX; m];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut roots = Vec::new();
    let mut macro_parent = Vec::new();
    for v in tree.preorder() {
        let id = if closed[v] {
            clusters.push(Vec::new());
            roots.push(v);
            macro_parent.push(tree.parent(v).map(|p| cluster_of[p]));
            clusters.len() - 1
        } else {
            cluster_of[tree.parent(v).expect("root is always closed")]
        };
        cluster_of[v] = id;
        clusters[id].push(v);
    }
    ClusterPartition {
        x,
        cluster_of,
        clusters,
        roots,
        macro_parent,
    }
}

/// Canonical encoding of a label-erased cluster tree: pre-order, two bits per
/// node, under a leading sentinel bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShapeKey(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LocalLabel {
    Eps,
    Sym(u8),
    Pseudo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LocalEdge {
    pub from: usize,
    pub to: usize,
    pub label: LocalLabel,
    pub back: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChildLink {
    pub id: usize,
    pub start_slot: usize,
    pub accept_slot: usize,
}

#[derive(Debug, Clone)]
pub struct Subautomaton {
    pub id: usize,
    pub parent: Option<usize>,
    /// Global NFA node of every local slot; slot order is topological.
    pub nodes: Vec<usize>,
    pub children: Vec<ChildLink>,
    /// Edges created by this cluster's nodes plus one pseudo-edge per child.
    pub edges: Vec<LocalEdge>,
    pub chunks: Vec<u64>,
    pub shape: ShapeKey,
}

impl Subautomaton {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn start_slot(&self) -> usize {
        0
    }

    pub fn accept_slot(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn pseudo_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .filter(|e| e.label == LocalLabel::Pseudo)
            .map(|e| (e.from, e.to))
    }

    /// Label-erased graph: the part every table depends on.
    pub fn erased_edges(&self) -> Vec<(usize, usize, bool, bool)> {
        let mut v: Vec<_> = self
            .edges
            .iter()
            .map(|e| (e.from, e.to, e.label == LocalLabel::Eps, e.back))
            .collect();
        v.sort_unstable();
        v
    }
}

/// Chunk i holds the slots after the previous child's accept node (or after
/// the start node) up to and including child i's start node; the last chunk
/// runs to the accept node.
pub fn compute_chunks(a: &Subautomaton) -> Vec<u64> {
    let interval =
        |lo: usize, hi: usize| -> u64 { (lo + 1..=hi).fold(0u64, |acc, i| acc | 1 << i) };
    let mut chunks = Vec::with_capacity(a.children.len() + 1);
    let mut prev = a.start_slot();
    for c in &a.children {
        chunks.push(interval(prev, c.start_slot));
        prev = c.accept_slot;
    }
    chunks.push(interval(prev, a.accept_slot()));
    chunks
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub partition: ClusterPartition,
    pub subautomata: Vec<Subautomaton>,
    pub root: usize,
    pub nfa_nodes: usize,
}

impl Decomposition {
    pub fn x(&self) -> usize {
        self.partition.x
    }

    pub fn len(&self) -> usize {
        self.subautomata.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subautomata.is_empty()
    }

    pub fn max_size(&self) -> usize {
        self.subautomata
            .iter()
            .map(Subautomaton::size)
            .max()
            .unwrap_or(0)
    }

    fn is_ancestor(&self, anc: usize, mut id: usize) -> bool {
        loop {
            if id == anc {
                return true;
            }
            match self.subautomata[id].parent {
                Some(p) => id = p,
                None => return false,
            }
        }
    }

    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let x = self.x();
        let mut holders: Vec<Vec<usize>> = vec![Vec::new(); self.nfa_nodes];
        for a in &self.subautomata {
            if a.size() > 6 * x {
                return Err(format!("subautomaton {} has {} > 6x nodes", a.id, a.size()));
            }
            if a.children.len() > 2 * x {
                return Err(format!(
                    "subautomaton {} has {} children",
                    a.id,
                    a.children.len()
                ));
            }
            if a.nodes.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("subautomaton {} slots not in order", a.id));
            }
            for e in &a.edges {
                if !e.back && e.from >= e.to {
                    return Err(format!("subautomaton {}: forward edge against order", a.id));
                }
            }
            for w in a.children.windows(2) {
                if w[0].start_slot >= w[1].start_slot {
                    return Err(format!("children of {} not ordered", a.id));
                }
            }
            for c in &a.children {
                let child = &self.subautomata[c.id];
                if child.parent != Some(a.id) {
                    return Err(format!("child {} does not point back to {}", c.id, a.id));
                }
                if c.accept_slot != c.start_slot + 1 {
                    return Err(format!(
                        "child {} start/accept not adjacent in {}",
                        c.id, a.id
                    ));
                }
                if a.nodes[c.start_slot] != child.nodes[child.start_slot()]
                    || a.nodes[c.accept_slot] != child.nodes[child.accept_slot()]
                {
                    return Err(format!("child {} boundary nodes not shared", c.id));
                }
            }
            let chunks = compute_chunks(a);
            let mut union = 0u64;
            for &ch in &chunks {
                if union & ch != 0 {
                    return Err(format!("overlapping chunks in {}", a.id));
                }
                union |= ch;
            }
            let mut expected = if a.size() == 64 {
                u64::MAX
            } else {
                (1u64 << a.size()) - 1
            };
            expected &= !1;
            for c in &a.children {
                expected &= !(1 << c.accept_slot);
            }
            if union != expected || chunks != a.chunks {
                return Err(format!("chunk partition of {} is wrong", a.id));
            }
            for &v in &a.nodes {
                holders[v].push(a.id);
            }
        }
        // A node held by several subautomata is a boundary node of all of
        // them except at most one, and that one is an ancestor of the rest.
        for (v, hs) in holders.iter().enumerate() {
            if hs.is_empty() {
                return Err(format!("NFA node {v} not covered"));
            }
            let interior: Vec<usize> = hs
                .iter()
                .copied()
                .filter(|&h| {
                    let a = &self.subautomata[h];
                    v != a.nodes[0] && v != a.nodes[a.size() - 1]
                })
                .collect();
            match interior.as_slice() {
                [] => {}
                [owner] if hs.iter().all(|&h| self.is_ancestor(*owner, h)) => {}
                _ => return Err(format!("node {v} shared by {hs:?} illegally")),
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for a in &self.subautomata {
            let _ = writeln!(
                s,
                "subautomaton {} parent {} shape {:#x} nodes {:?}",
                a.id,
                a.parent.map_or("-".to_string(), |p| p.to_string()),
                a.shape.0,
                a.nodes
            );
            for c in &a.children {
                let _ = writeln!(
                    s,
                    "  child {} at {} -> {}",
                    c.id, c.start_slot, c.accept_slot
                );
            }
            for e in &a.edges {
                let line = match e.label {
                    LocalLabel::Pseudo => format!("{} -> {} pseudo", e.from, e.to),
                    LocalLabel::Eps | LocalLabel::Sym(_) => {
                        let label = match e.label {
                            LocalLabel::Sym(c) => EdgeLabel::Sym(c),
                            _ => EdgeLabel::Eps,
                        };
                        let kind = if e.back {
                            EdgeKind::Back
                        } else {
                            EdgeKind::Forward
                        };
                        edge_line(e.from, e.to, label, kind)
                    }
                };
                let _ = writeln!(s, "  {line}");
            }
        }
        s
    }
}

/// Builds the subautomaton of every cluster. Fails if one of them would not
/// fit a machine word.
pub fn decompose(
    nfa: &Nfa,
    tree: &ParseTree,
    partition: &ClusterPartition,
) -> Result<Decomposition> {
    let mut owned: Vec<Vec<usize>> = vec![Vec::new(); tree.len()];
    for e in 0..nfa.edges().len() {
        owned[nfa.edge_owner(e)].push(e);
    }
    let mut subautomata = Vec::with_capacity(partition.len());
    for (id, members) in partition.clusters.iter().enumerate() {
        let pseudo: Vec<usize> = members
            .iter()
            .flat_map(|&v| tree.children(v).iter().copied())
            .filter(|&c| partition.cluster_of[c] != id)
            .collect();
        let mut nodes: Vec<usize> = members
            .iter()
            .chain(&pseudo)
            .flat_map(|&v| {
                let (s, a) = nfa.span(v);
                [s, a]
            })
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.len() > crate::WORD_BITS as usize {
            return Err(Error::LimitExceeded {
                limit: crate::WORD_BITS as usize,
            });
        }
        let slot = |g: usize| {
            nodes
                .binary_search(&g)
                .expect("edge endpoint inside subautomaton")
        };

        let mut edges = Vec::new();
        for &v in members {
            for &e in &owned[v] {
                let e = &nfa.edges()[e];
                edges.push(LocalEdge {
                    from: slot(e.from),
                    to: slot(e.to),
                    label: match e.label {
                        EdgeLabel::Eps => LocalLabel::Eps,
                        EdgeLabel::Sym(c) => LocalLabel::Sym(c),
                    },
                    back: e.kind == EdgeKind::Back,
                });
            }
        }
        let mut children: Vec<ChildLink> = pseudo
            .iter()
            .map(|&w| {
                let (s, a) = nfa.span(w);
                ChildLink {
                    id: partition.cluster_of[w],
                    start_slot: slot(s),
                    accept_slot: slot(a),
                }
            })
            .collect();
        children.sort_by_key(|c| c.start_slot);
        for c in &children {
            edges.push(LocalEdge {
                from: c.start_slot,
                to: c.accept_slot,
                label: LocalLabel::Pseudo,
                back: false,
            });
        }

        let mut a = Subautomaton {
            id,
            parent: partition.macro_parent[id],
            nodes,
            children,
            edges,
            chunks: Vec::new(),
            shape: shape_of(tree, partition, id),
        };
        a.chunks = compute_chunks(&a);
        subautomata.push(a);
    }
    Ok(Decomposition {
        partition: partition.clone(),
        subautomata,
        root: 0,
        nfa_nodes: nfa.node_count(),
    })
}

fn shape_of(tree: &ParseTree, partition: &ClusterPartition, id: usize) -> ShapeKey {
    let mut key = 1u64;
    let mut stack = vec![partition.roots[id]];
    while let Some(v) = stack.pop() {
        let inside = partition.cluster_of[v] == id;
        let code = match tree.label(v) {
            _ if !inside => 3,
            Label::Char(_) => 3,
            Label::Cat => 0,
            Label::Union => 1,
            Label::Star => 2,
        };
        key = key << 2 | code;
        if inside {
            stack.extend(tree.children(v).iter().rev());
        }
    }
    ShapeKey(key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfa::build_nfa;
    use crate::regex_ast::parse;

    fn deco(p: &str, x: usize) -> (ParseTree, Nfa, Decomposition) {
        let t = parse(p).unwrap();
        let n = build_nfa(&t);
        let part = cluster(&t, x);
        part.check_invariants(&t).unwrap();
        let d = decompose(&n, &t, &part).unwrap();
        d.check_invariants().unwrap();
        (t, n, d)
    }

    #[test]
    fn figure_clustering() {
        let t = parse("ac|a*b").unwrap();
        let part = cluster(&t, 3);
        part.check_invariants(&t).unwrap();
        assert_eq!(part.len(), 3);
        assert!(part.clusters.iter().all(|c| c.len() <= 3));
    }

    #[test]
    fn figure_subautomata() {
        let (_, n, d) = deco("ac|a*b", 3);
        assert_eq!(d.len(), 3);
        let root = &d.subautomata[d.root];
        assert_eq!(root.pseudo_edges().count(), 2);
        assert_eq!(root.nodes[0], n.start());
        assert_eq!(*root.nodes.last().unwrap(), n.accept());
    }

    #[test]
    fn one_cluster_is_whole_automaton() {
        let (t, n, d) = deco("(a|b)*abb", 100);
        assert_eq!(d.len(), 1);
        let a = &d.subautomata[0];
        assert_eq!(a.nodes, (0..n.node_count()).collect::<Vec<_>>());
        assert_eq!(a.pseudo_edges().count(), 0);
        assert_eq!(a.edges.len(), n.edges().len());
        assert!(t.len() <= 100);
    }

    #[test]
    fn leaf_has_single_chunk() {
        let (_, _, d) = deco("abc", 100);
        let a = &d.subautomata[0];
        assert_eq!(a.chunks, vec![((1u64 << a.size()) - 1) & !1]);
    }

    #[test]
    fn one_child_two_chunks() {
        for (p, x) in [("a*b", 2), ("(ab)*c", 3), ("a|bc", 2)] {
            let (_, _, d) = deco(p, x);
            for a in &d.subautomata {
                assert_eq!(a.chunks.len(), a.children.len() + 1);
                if a.children.len() == 1 {
                    let all = (1u64 << a.size()) - 1;
                    let c = a.children[0];
                    assert_eq!(a.chunks[0] | a.chunks[1], all & !1 & !(1 << c.accept_slot));
                }
            }
        }
    }

    #[test]
    fn capacity_one() {
        let (t, _, d) = deco("(a|b)*c", 1);
        assert_eq!(d.len(), t.len());
    }

    #[test]
    fn shape_keys() {
        let (_, _, d1) = deco("ab", 10);
        let (_, _, d2) = deco("cd", 10);
        let (_, _, d3) = deco("a|b", 10);
        assert_eq!(d1.subautomata[0].shape, d2.subautomata[0].shape);
        assert_ne!(d1.subautomata[0].shape, d3.subautomata[0].shape);
    }

    #[test]
    fn text_dump_mentions_pseudo_edges() {
        let (_, _, d) = deco("ac|a*b", 3);
        let s = d.to_text();
        assert!(s.contains("pseudo"));
        assert!(s.starts_with("subautomaton 0 parent -"));
    }
}
