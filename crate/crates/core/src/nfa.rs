//! Thompson automaton construction and the plain node-set simulation.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::regex_ast::{Label, ParseTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeLabel {
    Eps,
    Sym(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Forward,
    Back,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub label: EdgeLabel,
    pub kind: EdgeKind,
}

/// Thompson NFA. Node ids follow construction order, which is a topological
/// order of the forward edges.
#[derive(Debug, Clone)]
pub struct Nfa {
    edges: Vec<Edge>,
    out: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
    node_label: Vec<Option<u8>>,
    start: usize,
    accept: usize,
    /// (start, accept) of the sub-automaton built for each parse-tree node.
    span: Vec<(usize, usize)>,
    /// Parse-tree node whose construction rule created each edge.
    owner: Vec<usize>,
}

impl Nfa {
    pub fn node_count(&self) -> usize {
        self.out.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn accept(&self) -> usize {
        self.accept
    }

    pub fn out_edges(&self, node: usize) -> impl Iterator<Item = &Edge> {
        self.out[node].iter().map(|&e| &self.edges[e])
    }

    pub fn in_edges(&self, node: usize) -> impl Iterator<Item = &Edge> {
        self.incoming[node].iter().map(|&e| &self.edges[e])
    }

    /// The character on every incoming edge of `node`, or `None` for an ε-node.
    pub fn node_label(&self, node: usize) -> Option<u8> {
        self.node_label[node]
    }

    pub fn span(&self, tree_node: usize) -> (usize, usize) {
        self.span[tree_node]
    }

    pub fn edge_owner(&self, edge: usize) -> usize {
        self.owner[edge]
    }

    pub fn back_edge_count(&self) -> usize {
        self.edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Back)
            .count()
    }

    fn new_node(&mut self) -> usize {
        self.out.push(Vec::new());
        self.incoming.push(Vec::new());
        self.node_label.push(None);
        self.out.len() - 1
    }

    fn add_edge(&mut self, from: usize, to: usize, label: EdgeLabel, kind: EdgeKind, owner: usize) {
        let id = self.edges.len();
        self.edges.push(Edge {
            from,
            to,
            label,
            kind,
        });
        self.owner.push(owner);
        self.out[from].push(id);
        self.incoming[to].push(id);
        if let EdgeLabel::Sym(c) = label {
            self.node_label[to] = Some(c);
        }
    }

    /// Structural checks: size bounds, out-degree, uniform incoming labels,
    /// source/sink conditions and one back edge per star.
    pub fn check_invariants(&self, tree: &ParseTree) -> std::result::Result<(), String> {
        let m = tree.len();
        if self.node_count() > 2 * m {
            return Err(format!("{} nodes > 2m = {}", self.node_count(), 2 * m));
        }
        if self.edges.len() >= 4 * m {
            return Err(format!("{} edges >= 4m = {}", self.edges.len(), 4 * m));
        }
        for v in 0..self.node_count() {
            if self.out[v].len() > 2 {
                return Err(format!("node {v} has out-degree {}", self.out[v].len()));
            }
            let mut labels = self.in_edges(v).map(|e| e.label);
            if let Some(first) = labels.next() {
                if labels.any(|l| l != first) {
                    return Err(format!("node {v} has mixed incoming labels"));
                }
            }
        }
        if !self.incoming[self.start].is_empty() {
            return Err("start node has incoming edges".into());
        }
        if !self.out[self.accept].is_empty() {
            return Err("accept node has outgoing edges".into());
        }
        let stars = tree
            .nodes()
            .iter()
            .filter(|n| n.label == Label::Star)
            .count();
        if self.back_edge_count() != stars {
            return Err(format!(
                "{} back edges for {stars} stars",
                self.back_edge_count()
            ));
        }
        for e in &self.edges {
            let forward_ok = match e.kind {
                EdgeKind::Forward => e.from < e.to,
                EdgeKind::Back => e.from > e.to && e.label == EdgeLabel::Eps,
            };
            if !forward_ok {
                return Err(format!("edge {e:?} violates construction order"));
            }
        }
        Ok(())
    }

    pub fn initial_set(&self) -> Vec<bool> {
        let mut s = vec![false; self.node_count()];
        s[self.start] = true;
        self.close_set(&mut s);
        s
    }

    /// Nodes reachable from `set` by one edge labeled `c`.
    pub fn move_set(&self, set: &[bool], c: u8) -> Vec<bool> {
        let mut next = vec![false; self.node_count()];
        for (v, _) in set.iter().enumerate().filter(|(_, &on)| on) {
            for e in self.out_edges(v) {
                if e.label == EdgeLabel::Sym(c) {
                    next[e.to] = true;
                }
            }
        }
        next
    }

    /// Extends `set` in place with everything reachable over ε-edges.
    pub fn close_set(&self, set: &mut [bool]) {
        let mut queue: VecDeque<usize> = (0..set.len()).filter(|&v| set[v]).collect();
        while let Some(v) = queue.pop_front() {
            for e in self.out_edges(v) {
                if e.label == EdgeLabel::Eps && !set[e.to] {
                    set[e.to] = true;
                    queue.push_back(e.to);
                }
            }
        }
    }

    /// The node sets S_0, ..., S_n of the standard simulation.
    pub fn trace_naive(&self, q: &[u8]) -> Vec<Vec<bool>> {
        let mut sets = Vec::with_capacity(q.len() + 1);
        sets.push(self.initial_set());
        for &c in q {
            let mut next = self.move_set(sets.last().unwrap(), c);
            self.close_set(&mut next);
            sets.push(next);
        }
        sets
    }

    /// Membership by explicit node-set simulation.
    pub fn accepts_naive(&self, q: &[u8]) -> bool {
        let mut set = self.initial_set();
        for &c in q {
            if !set.iter().any(|&b| b) {
                return false;
            }
            set = self.move_set(&set, c);
            self.close_set(&mut set);
        }
        set[self.accept]
    }

    /// Every simple path of the automaton, from every node (trivial paths
    /// included), failing once more than `limit` paths exist.
    pub fn enumerate_cycle_free_paths(&self, limit: usize) -> Result<Vec<Path>> {
        let mut paths = Vec::new();
        let mut on_path = vec![false; self.node_count()];
        for first in 0..self.node_count() {
            let mut cur = Path {
                nodes: vec![first],
                edges: Vec::new(),
            };
            on_path[first] = true;
            // (node, index of next outgoing edge to try)
            let mut stack = vec![(first, 0usize)];
            if paths.len() == limit {
                return Err(Error::LimitExceeded { limit });
            }
            paths.push(cur.clone());
            while let Some(top) = stack.last_mut() {
                let (v, i) = *top;
                if i == self.out[v].len() {
                    stack.pop();
                    on_path[v] = false;
                    cur.nodes.pop();
                    cur.edges.pop();
                    continue;
                }
                top.1 += 1;
                let eid = self.out[v][i];
                let w = self.edges[eid].to;
                if on_path[w] {
                    continue;
                }
                on_path[w] = true;
                cur.nodes.push(w);
                cur.edges.push(eid);
                if paths.len() == limit {
                    return Err(Error::LimitExceeded { limit });
                }
                paths.push(cur.clone());
                stack.push((w, 0));
            }
        }
        Ok(paths)
    }

    /// Plain-text graph description used by test fixtures and debug dumps.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "nodes {} start {} accept {}",
            self.node_count(),
            self.start,
            self.accept
        );
        for e in &self.edges {
            let _ = writeln!(s, "{}", edge_line(e.from, e.to, e.label, e.kind));
        }
        s
    }
}

pub(crate) fn edge_line(from: usize, to: usize, label: EdgeLabel, kind: EdgeKind) -> String {
    let label = match label {
        EdgeLabel::Eps => "eps".to_string(),
        EdgeLabel::Sym(c) if c.is_ascii_graphic() => format!("'{}'", c as char),
        EdgeLabel::Sym(c) => format!("0x{c:02x}"),
    };
    let kind = match kind {
        EdgeKind::Forward => "",
        EdgeKind::Back => " back",
    };
    format!("{from} -> {to} {label}{kind}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
}

impl Path {
    pub fn back_edges(&self, nfa: &Nfa) -> usize {
        self.edges
            .iter()
            .filter(|&&e| nfa.edges[e].kind == EdgeKind::Back)
            .count()
    }
}

/// Builds N(R). Concatenation reuses the left accept node as the right start
/// node, so no ε-edge is spent on it.
pub fn build_nfa(tree: &ParseTree) -> Nfa {
    enum Task {
        Enter(usize, Option<usize>),
        CatRight(usize),
        Exit(usize),
    }
    let mut nfa = Nfa {
        edges: Vec::new(),
        out: Vec::new(),
        incoming: Vec::new(),
        node_label: Vec::new(),
        start: 0,
        accept: 0,
        span: vec![(usize::MAX, usize::MAX); tree.len()],
        owner: Vec::new(),
    };
    let mut stack = vec![Task::Enter(tree.root(), None)];
    while let Some(task) = stack.pop() {
        match task {
            Task::Enter(v, start) => {
                let ch = tree.children(v);
                match tree.label(v) {
                    Label::Cat => {
                        stack.push(Task::Exit(v));
                        stack.push(Task::CatRight(v));
                        stack.push(Task::Enter(ch[0], start));
                    }
                    label => {
                        let theta = start.unwrap_or_else(|| nfa.new_node());
                        nfa.span[v].0 = theta;
                        if let Label::Char(c) = label {
                            let phi = nfa.new_node();
                            nfa.add_edge(theta, phi, EdgeLabel::Sym(c), EdgeKind::Forward, v);
                            nfa.span[v].1 = phi;
                        } else {
                            stack.push(Task::Exit(v));
                            for &c in ch.iter().rev() {
                                stack.push(Task::Enter(c, None));
                            }
                        }
                    }
                }
            }
            Task::CatRight(v) => {
                let ch = tree.children(v);
                let mid = nfa.span[ch[0]].1;
                stack.push(Task::Enter(ch[1], Some(mid)));
            }
            Task::Exit(v) => {
                let ch = tree.children(v);
                match tree.label(v) {
                    Label::Cat => {
                        nfa.span[v] = (nfa.span[ch[0]].0, nfa.span[ch[1]].1);
                    }
                    Label::Union => {
                        let theta = nfa.span[v].0;
                        let phi = nfa.new_node();
                        let (l, r) = (nfa.span[ch[0]], nfa.span[ch[1]]);
                        let fwd = EdgeKind::Forward;
                        nfa.add_edge(theta, l.0, EdgeLabel::Eps, fwd, v);
                        nfa.add_edge(theta, r.0, EdgeLabel::Eps, fwd, v);
                        nfa.add_edge(l.1, phi, EdgeLabel::Eps, fwd, v);
                        nfa.add_edge(r.1, phi, EdgeLabel::Eps, fwd, v);
                        nfa.span[v].1 = phi;
                    }
                    Label::Star => {
                        let theta = nfa.span[v].0;
                        let phi = nfa.new_node();
                        let inner = nfa.span[ch[0]];
                        let fwd = EdgeKind::Forward;
                        nfa.add_edge(theta, inner.0, EdgeLabel::Eps, fwd, v);
                        nfa.add_edge(theta, phi, EdgeLabel::Eps, fwd, v);
                        nfa.add_edge(inner.1, phi, EdgeLabel::Eps, fwd, v);
                        nfa.add_edge(inner.1, inner.0, EdgeLabel::Eps, EdgeKind::Back, v);
                        nfa.span[v].1 = phi;
                    }
                    Label::Char(_) => unreachable!("leaves have no exit task"),
                }
            }
        }
    }
    let (start, accept) = nfa.span[tree.root()];
    nfa.start = start;
    nfa.accept = accept;
    nfa
}
