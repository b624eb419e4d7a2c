//! Exact regular expression matching over a decomposed Thompson automaton.
//!
//! The node set is kept as one bitvector per subautomaton. A step is one
//! `Move` followed by two `Close` calls on the root; each call updates a
//! subautomaton with a table lookup and then descends into its children in
//! topological order, feeding each child's accept bit back into the parent
//! before the next child is visited.
//!
//! The descent is the same every time, so it is compiled once into a flat
//! sequence of enter/return operations in depth-first order.

use std::collections::HashMap;
use std::sync::Arc;

use crate::decomposition::{cluster, decompose, Decomposition};
use crate::error::{check_budget, Error, Result};
use crate::nfa::{build_nfa, Nfa};
use crate::regex_ast::{parse, ParseTree};
use crate::tables::{build_eq, exact_words, initial_x, ExactShapeTables, ExactTables};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationState {
    pub sets: Vec<u64>,
    /// Whether any set in the subtree of a subautomaton is nonempty. A dead
    /// subtree entered without its start node stays empty, so it is skipped.
    pub live: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OpKind {
    Enter,
    Return,
}

/// One edge of the macro tree, visited on the way down or back up.
#[derive(Debug, Clone, Copy)]
struct Op {
    kind: OpKind,
    parent: u32,
    child: u32,
    start_slot: u8,
    accept_slot: u8,
    child_accept: u8,
    parent_shape: u32,
    child_shape: u32,
    /// for `Enter`, the index of the matching `Return`
    pair: u32,
}

#[derive(Debug, Clone)]
pub struct CompiledRegex {
    tree: ParseTree,
    nfa: Nfa,
    deco: Decomposition,
    /// distinct shape tables, and the one of each subautomaton
    shapes: Vec<Arc<ExactShapeTables>>,
    shape_of: Vec<u32>,
    ops: Vec<Op>,
    /// operations strictly inside the subtree of each subautomaton
    range: Vec<(u32, u32)>,
    accept_slot: Vec<u8>,
    /// `eq[col * len + a]`: α-nodes of subautomaton `a` for the character in
    /// column `col`; column 0 is for characters outside the pattern
    eq_col: [u16; 256],
    eq: Vec<u64>,
    words: usize,
    k: u32,
}

impl CompiledRegex {
    pub fn new(pattern: impl AsRef<[u8]>, k: u32) -> Result<Self> {
        Self::with_tables(pattern, k, &ExactTables::new())
    }

    /// Compiles against a shared table store, so shapes already built for
    /// other patterns are reused.
    pub fn with_tables(pattern: impl AsRef<[u8]>, k: u32, store: &ExactTables) -> Result<Self> {
        check_budget(k)?;
        let tree = parse(pattern)?;
        Self::from_tree(tree, k, store)
    }

    pub fn from_tree(tree: ParseTree, k: u32, store: &ExactTables) -> Result<Self> {
        check_budget(k)?;
        let nfa = build_nfa(&tree);
        let budget = 1usize << k;
        let mut x = initial_x(k, 0);
        let deco = loop {
            let attempt = decompose(&nfa, &tree, &cluster(&tree, x));
            match attempt {
                Ok(d) if distinct_words(&d) <= budget => break d,
                Ok(_) | Err(Error::LimitExceeded { .. }) if x > 1 => x -= 1,
                Ok(_) => return Err(Error::LimitExceeded { limit: budget }),
                Err(e) => return Err(e),
            }
        };

        let mut shapes = Vec::new();
        let mut index = HashMap::new();
        let shape_of: Vec<u32> = deco
            .subautomata
            .iter()
            .map(|a| {
                *index.entry(a.shape).or_insert_with(|| {
                    shapes.push(store.get_or_build(a));
                    shapes.len() as u32 - 1
                })
            })
            .collect();

        let n = deco.len();
        let mut ops: Vec<Op> = Vec::with_capacity(2 * n);
        let mut range = vec![(0u32, 0u32); n];
        // (subautomaton, next child, index of its Enter op)
        let mut stack = vec![(deco.root, 0usize, usize::MAX)];
        while let Some(&(cur, i, enter)) = stack.last() {
            let a = &deco.subautomata[cur];
            if i == a.children.len() {
                stack.pop();
                if enter != usize::MAX {
                    let mut op = ops[enter];
                    range[cur] = (enter as u32 + 1, ops.len() as u32);
                    ops[enter].pair = ops.len() as u32;
                    op.kind = OpKind::Return;
                    ops.push(op);
                } else {
                    range[cur] = (0, ops.len() as u32);
                }
                continue;
            }
            stack.last_mut().unwrap().1 += 1;
            let link = a.children[i];
            let child = &deco.subautomata[link.id];
            stack.push((link.id, 0, ops.len()));
            ops.push(Op {
                kind: OpKind::Enter,
                parent: cur as u32,
                child: link.id as u32,
                start_slot: link.start_slot as u8,
                accept_slot: link.accept_slot as u8,
                child_accept: child.accept_slot() as u8,
                parent_shape: shape_of[cur],
                child_shape: shape_of[link.id],
                pair: 0,
            });
        }

        let sigma = tree.alphabet();
        let mut eq_col = [0u16; 256];
        for (col, &c) in sigma.iter().enumerate() {
            eq_col[c as usize] = col as u16 + 1;
        }
        let mut eq = vec![0u64; (sigma.len() + 1) * n];
        for (id, a) in deco.subautomata.iter().enumerate() {
            for (c, bits) in build_eq(a).iter() {
                eq[eq_col[c as usize] as usize * n + id] = bits;
            }
        }
        let accept_slot = deco
            .subautomata
            .iter()
            .map(|a| a.accept_slot() as u8)
            .collect();
        let words = distinct_words(&deco);
        Ok(CompiledRegex {
            tree,
            nfa,
            deco,
            shapes,
            shape_of,
            ops,
            range,
            accept_slot,
            eq_col,
            eq,
            words,
            k,
        })
    }

    pub fn tree(&self) -> &ParseTree {
        &self.tree
    }

    pub fn nfa(&self) -> &Nfa {
        &self.nfa
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.deco
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Table words used by the shapes of this pattern.
    pub fn tables_words(&self) -> usize {
        self.words
    }

    pub fn empty_state(&self) -> SimulationState {
        SimulationState {
            sets: vec![0; self.deco.len()],
            live: vec![false; self.deco.len()],
        }
    }

    /// State after the empty prefix.
    pub fn initial_state(&self) -> SimulationState {
        let mut s = self.empty_state();
        self.close(&mut s, self.deco.root, true);
        self.close(&mut s, self.deco.root, true);
        s
    }

    pub fn step(&self, state: &mut SimulationState, c: u8) {
        self.move_(state, self.deco.root, false, c);
        self.close(state, self.deco.root, false);
        self.close(state, self.deco.root, false);
        debug_assert_eq!(self.check_overlap(state), Ok(()));
    }

    pub fn accepts(&self, state: &SimulationState) -> bool {
        let root = self.deco.root;
        state.sets[root] >> self.accept_slot[root] & 1 == 1
    }

    pub fn is_match(&self, q: impl AsRef<[u8]>) -> bool {
        let mut s = self.initial_state();
        for &c in q.as_ref() {
            self.step(&mut s, c);
        }
        self.accepts(&s)
    }

    #[inline]
    fn table(&self, a: usize) -> &ExactShapeTables {
        &self.shapes[self.shape_of[a] as usize]
    }

    /// `Move(A, b, α)`: returns whether the accept node of `a` is reached.
    pub fn move_(&self, state: &mut SimulationState, a: usize, b: bool, c: u8) -> bool {
        let n = self.deco.len();
        let col = self.eq_col[c as usize] as usize;
        let eq = &self.eq[col * n..(col + 1) * n];
        let sets = &mut state.sets;
        let live = &mut state.live;
        sets[a] = (self.table(a).succ(sets[a]) & eq[a]) | b as u64;
        live[a] = false;
        let (lo, hi) = self.range[a];
        let mut i = lo as usize;
        while i < hi as usize {
            let op = self.ops[i];
            let (p, ch) = (op.parent as usize, op.child as usize);
            match op.kind {
                OpKind::Enter => {
                    let bit = sets[p] >> op.start_slot & 1;
                    if bit == 0 && !live[ch] {
                        i = op.pair as usize + 1;
                        continue;
                    }
                    sets[ch] = (self.shapes[op.child_shape as usize].succ(sets[ch]) & eq[ch]) | bit;
                    live[ch] = false;
                }
                OpKind::Return => {
                    sets[p] |= (sets[ch] >> op.child_accept & 1) << op.accept_slot;
                    live[ch] |= sets[ch] != 0;
                    live[p] |= live[ch];
                }
            }
            i += 1;
        }
        live[a] |= sets[a] != 0;
        sets[a] >> self.accept_slot[a] & 1 == 1
    }

    /// `Close(A, b)`: one closure pass over `a` and its descendants. The
    /// parent is re-closed after each child's accept bit is merged in.
    pub fn close(&self, state: &mut SimulationState, a: usize, b: bool) -> bool {
        let sets = &mut state.sets;
        let live = &mut state.live;
        sets[a] = self.table(a).close(sets[a], b);
        live[a] = false;
        let (lo, hi) = self.range[a];
        let mut i = lo as usize;
        while i < hi as usize {
            let op = self.ops[i];
            let (p, ch) = (op.parent as usize, op.child as usize);
            match op.kind {
                OpKind::Enter => {
                    let bit = sets[p] >> op.start_slot & 1 == 1;
                    if !bit && !live[ch] {
                        i = op.pair as usize + 1;
                        continue;
                    }
                    sets[ch] = self.shapes[op.child_shape as usize].close(sets[ch], bit);
                    live[ch] = false;
                }
                OpKind::Return => {
                    let reached = sets[ch] >> op.child_accept & 1 == 1;
                    // the parent set is closed already unless this adds a node
                    if reached && sets[p] >> op.accept_slot & 1 == 0 {
                        sets[p] = self.shapes[op.parent_shape as usize]
                            .close(sets[p] | 1 << op.accept_slot, false);
                    }
                    live[ch] |= sets[ch] != 0;
                    live[p] |= live[ch];
                }
            }
            i += 1;
        }
        live[a] |= sets[a] != 0;
        sets[a] >> self.accept_slot[a] & 1 == 1
    }

    /// Union of the per-subautomaton sets as global node flags.
    pub fn global_set(&self, state: &SimulationState) -> Vec<bool> {
        let mut out = vec![false; self.deco.nfa_nodes];
        for (a, &set) in self.deco.subautomata.iter().zip(&state.sets) {
            for (slot, &g) in a.nodes.iter().enumerate() {
                if set >> slot & 1 == 1 {
                    out[g] = true;
                }
            }
        }
        out
    }

    /// Global node set after each prefix of `q`, starting with the empty one.
    pub fn trace(&self, q: impl AsRef<[u8]>) -> Vec<Vec<bool>> {
        let mut s = self.initial_state();
        let mut out = vec![self.global_set(&s)];
        for &c in q.as_ref() {
            self.step(&mut s, c);
            out.push(self.global_set(&s));
        }
        out
    }

    /// Shared boundary nodes must have the same bit in parent and child.
    pub fn check_overlap(&self, state: &SimulationState) -> std::result::Result<(), String> {
        for a in &self.deco.subautomata {
            for link in &a.children {
                let child = &self.deco.subautomata[link.id];
                let pairs = [
                    (link.start_slot, child.start_slot()),
                    (link.accept_slot, child.accept_slot()),
                ];
                for (ps, cs) in pairs {
                    let p = state.sets[a.id] >> ps & 1;
                    let c = state.sets[link.id] >> cs & 1;
                    if p != c {
                        return Err(format!(
                            "subautomaton {} slot {} = {} but child {} slot {} = {}",
                            a.id, ps, p, link.id, cs, c
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

fn distinct_words(deco: &Decomposition) -> usize {
    let mut seen = std::collections::HashSet::new();
    deco.subautomata
        .iter()
        .filter(|a| seen.insert(a.shape))
        .map(|a| exact_words(a.size()))
        .sum()
}

/// One-shot membership test with table budget `2^k` words.
pub fn is_match(pattern: impl AsRef<[u8]>, q: impl AsRef<[u8]>, k: u32) -> Result<bool> {
    Ok(CompiledRegex::new(pattern, k)?.is_match(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DEFAULT_K;

    #[test]
    fn figure_pattern() {
        for (q, want) in [
            ("ac", true),
            ("ab", true),
            ("b", true),
            ("aab", true),
            ("a", false),
            ("", false),
            ("abc", false),
        ] {
            assert_eq!(is_match("ac|a*b", q, DEFAULT_K).unwrap(), want, "{q}");
        }
    }

    #[test]
    fn star_accepts_empty() {
        assert!(is_match("a*", "", DEFAULT_K).unwrap());
        assert!(is_match("a*", "aaaa", DEFAULT_K).unwrap());
        assert!(!is_match("a*", "ab", DEFAULT_K).unwrap());
    }

    #[test]
    fn empty_state_stays_empty() {
        let r = CompiledRegex::new("(ab|c)*d", 16).unwrap();
        let mut s = r.empty_state();
        assert!(!r.move_(&mut s, r.decomposition().root, false, b'a'));
        assert_eq!(s, r.empty_state());
        assert!(!r.close(&mut s, r.decomposition().root, false));
        assert_eq!(s, r.empty_state());
    }

    #[test]
    fn move_single_char() {
        let r = CompiledRegex::new("a", 16).unwrap();
        let mut s = r.empty_state();
        s.sets[0] = 1;
        assert!(r.move_(&mut s, 0, false, b'a'));
        assert_eq!(s.sets[0], 0b10);
    }

    #[test]
    fn close_star() {
        let r = CompiledRegex::new("a*", 16).unwrap();
        let mut s = r.empty_state();
        assert!(r.close(&mut s, 0, true));
        assert_eq!(s.sets[0], 0b1011);
    }

    #[test]
    fn syntax_errors_propagate() {
        assert!(matches!(is_match("((", "x", 16), Err(Error::Syntax(_))));
        assert!(matches!(
            is_match("a", "a", 8),
            Err(Error::BadBudget { .. })
        ));
    }

    #[test]
    fn nested_stars_across_clusters() {
        let r = CompiledRegex::new("((a|b)*c((d)*e)*)*f", 16).unwrap();
        assert!(r.decomposition().len() > 1);
        for q in ["f", "cf", "acdeef", "bbcddeeacf", "cdf"] {
            assert_eq!(r.is_match(q), r.nfa().accepts_naive(q.as_bytes()), "{q}");
        }
    }
}
