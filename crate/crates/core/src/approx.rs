//! Approximate regular expression matching: is the query within edit
//! distance `d` of some string of the language?
//!
//! Each column of the dynamic program over the Thompson automaton is
//! computed in two passes. Pass 1 handles insertions, substitutions/matches
//! and deletions along forward edges; pass 2 adds paths that use one back
//! edge. Values are clamped at `d + 1`, so a subautomaton's values pack into
//! one word and each chunk of a pass is a table lookup.

use std::sync::Mutex;

use crate::decomposition::{cluster, decompose, Decomposition};
use crate::error::{check_budget, Error, Result};
use crate::nfa::{build_nfa, EdgeKind, EdgeLabel, Nfa};
use crate::regex_ast::{parse, Label, ParseTree};
use crate::tables::{build_eq, initial_x, ApproxTables, EqMap, Lanes};

/// Pass-1 and pass-2 values of every node for one column, clamped at `cap`.
fn naive_column(nfa: &Nfa, prev: Option<(&[u64], u8)>, i: u64, cap: u64) -> (Vec<u64>, Vec<u64>) {
    let n = nfa.node_count();
    let mut d1 = vec![cap; n];
    for v in 0..n {
        let val = if v == nfa.start() {
            i
        } else if nfa.node_label(v).is_some() {
            let e = nfa
                .in_edges(v)
                .next()
                .expect("labeled node has a predecessor");
            let deletion = d1[e.from] + 1;
            match prev {
                None => deletion,
                Some((old, c)) => {
                    let lambda = u64::from(e.label != EdgeLabel::Sym(c));
                    deletion.min(old[v] + 1).min(old[e.from] + lambda)
                }
            }
        } else {
            nfa.in_edges(v)
                .filter(|e| e.kind == EdgeKind::Forward)
                .map(|e| d1[e.from])
                .min()
                .unwrap_or(cap)
        };
        d1[v] = val.min(cap);
    }
    let mut d2 = vec![cap; n];
    for v in 0..n {
        let cost = u64::from(nfa.node_label(v).is_some());
        let mut val = d1[v];
        for e in nfa.in_edges(v) {
            let via = match e.kind {
                EdgeKind::Back => d1[e.from],
                EdgeKind::Forward => d2[e.from],
            };
            val = val.min(via + cost);
        }
        d2[v] = val.min(cap);
    }
    (d1, d2)
}

/// Pass-2 values of every column, evaluated node by node on the whole
/// automaton.
pub fn naive_columns(nfa: &Nfa, q: &[u8], d: usize) -> Vec<Vec<u64>> {
    let cap = d as u64 + 1;
    let mut cols = vec![naive_column(nfa, None, 0, cap).1];
    for (j, &c) in q.iter().enumerate() {
        let next = naive_column(nfa, Some((cols[j].as_slice(), c)), j as u64 + 1, cap).1;
        cols.push(next);
    }
    cols
}

/// Reference decision procedure: the two-pass recurrence on the whole
/// automaton.
pub fn approx_dp_naive(pattern: impl AsRef<[u8]>, q: impl AsRef<[u8]>, d: usize) -> Result<bool> {
    let tree = parse(pattern)?;
    let nfa = build_nfa(&tree);
    let cols = naive_columns(&nfa, q.as_ref(), d);
    Ok(cols.last().unwrap()[nfa.accept()] <= d as u64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    Enter { sub: usize },
    Chunk { sub: usize, index: usize },
}

#[derive(Debug)]
pub struct ApproxRegex {
    tree: ParseTree,
    nfa: Nfa,
    deco: Decomposition,
    eqs: Vec<EqMap>,
    d: usize,
    lanes: Lanes,
    tables: Mutex<ApproxTables>,
}

impl ApproxRegex {
    pub fn new(pattern: impl AsRef<[u8]>, d: usize, k: u32) -> Result<Self> {
        Self::with_clamp(pattern, d, d, k)
    }

    /// Decides distance `<= d` while clamping values at `clamp + 1`
    /// (`clamp >= d`).
    pub fn with_clamp(pattern: impl AsRef<[u8]>, d: usize, clamp: usize, k: u32) -> Result<Self> {
        check_budget(k)?;
        assert!(clamp >= d, "clamp bound below the distance threshold");
        let tree = parse(pattern)?;
        let nfa = build_nfa(&tree);
        let lanes = Lanes::for_distance(clamp);
        let mut x = initial_x(k, clamp);
        let deco = loop {
            match decompose(&nfa, &tree, &cluster(&tree, x)) {
                Ok(deco) if deco.max_size() * lanes.width as usize <= 64 => break deco,
                Ok(_) | Err(Error::LimitExceeded { .. }) if x > 1 => x -= 1,
                Ok(_) => return Err(Error::DistanceTooLarge { d: clamp }),
                Err(e) => return Err(e),
            }
        };
        let mut tables = ApproxTables::new(clamp, 1usize << k);
        for a in &deco.subautomata {
            tables.register(a);
        }
        let eqs = deco.subautomata.iter().map(build_eq).collect();
        Ok(ApproxRegex {
            tree,
            nfa,
            deco,
            eqs,
            d,
            lanes,
            tables: Mutex::new(tables),
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

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn lanes(&self) -> Lanes {
        self.lanes
    }

    /// Memoized table words so far.
    pub fn tables_words(&self) -> usize {
        self.tables.lock().unwrap().words()
    }

    fn fresh_state(&self) -> Vec<u64> {
        self.deco
            .subautomata
            .iter()
            .map(|a| self.lanes.broadcast(self.lanes.cap, a.size()))
            .collect()
    }

    /// Pass-2 values per column, as global node values.
    pub fn columns(&self, q: impl AsRef<[u8]>) -> Vec<Vec<u64>> {
        let mut state = self.fresh_state();
        let mut out = Vec::new();
        self.column(&mut state, 0, None, &mut None);
        out.push(self.global_values(&state));
        for (j, &c) in q.as_ref().iter().enumerate() {
            self.column(&mut state, j as u64 + 1, Some(c), &mut None);
            out.push(self.global_values(&state));
        }
        out
    }

    /// Value of the accept node after the whole query.
    pub fn distance_bound(&self, q: impl AsRef<[u8]>) -> u64 {
        let mut state = self.fresh_state();
        self.column(&mut state, 0, None, &mut None);
        for (j, &c) in q.as_ref().iter().enumerate() {
            self.column(&mut state, j as u64 + 1, Some(c), &mut None);
        }
        let root = &self.deco.subautomata[self.deco.root];
        self.lanes.get(state[root.id], root.accept_slot())
    }

    pub fn is_match(&self, q: impl AsRef<[u8]>) -> bool {
        self.distance_bound(q) <= self.d as u64
    }

    /// Order of subautomaton visits and chunk updates during the pass-1
    /// update of the first column.
    pub fn first_column_events(&self) -> Vec<TraceEvent> {
        let mut state = self.fresh_state();
        let mut log = Some(Vec::new());
        self.pass1(&mut state, self.deco.root, 0, None, &mut log);
        log.unwrap()
    }

    fn column(&self, state: &mut [u64], j: u64, c: Option<u8>, log: &mut Option<Vec<TraceEvent>>) {
        let b = j.min(self.lanes.cap);
        self.pass1(state, self.deco.root, b, c, log);
        self.pass2(state, self.deco.root, b);
    }

    /// `Next1(A, b, α)`; `c = None` gives the base column, where no node
    /// matches.
    fn pass1(
        &self,
        state: &mut [u64],
        a: usize,
        b: u64,
        c: Option<u8>,
        log: &mut Option<Vec<TraceEvent>>,
    ) -> u64 {
        let subs = &self.deco.subautomata;
        let lanes = self.lanes;
        let mut tables = self.tables.lock().unwrap();
        let eq_of = |id: usize| c.map_or(0, |c| self.eqs[id].get(c));
        let enter = |state: &mut [u64],
                     id: usize,
                     b: u64,
                     tables: &mut ApproxTables,
                     log: &mut Option<Vec<TraceEvent>>|
         -> u64 {
            let old = state[id];
            let cur = lanes.set(old, 0, b);
            if let Some(l) = log.as_mut() {
                l.push(TraceEvent::Enter { sub: id });
                l.push(TraceEvent::Chunk { sub: id, index: 0 });
            }
            let a = &subs[id];
            state[id] = tables
                .tab_next1(a.shape, cur, a.chunks[0], eq_of(id), lanes.get(old, 0))
                .expect("registered shape");
            old
        };
        let old = enter(state, a, b, &mut tables, log);
        let mut stack: Vec<(usize, usize, u64)> = vec![(a, 0, old)];
        while let Some(&(cur, i, old)) = stack.last() {
            let sub = &subs[cur];
            if i > 0 {
                let link = sub.children[i - 1];
                let f = lanes.get(state[link.id], subs[link.id].accept_slot());
                let updated = lanes.set(state[cur], link.accept_slot, f);
                if let Some(l) = log.as_mut() {
                    l.push(TraceEvent::Chunk { sub: cur, index: i });
                }
                state[cur] = tables
                    .tab_next1(
                        sub.shape,
                        updated,
                        sub.chunks[i],
                        eq_of(cur),
                        lanes.get(old, link.accept_slot),
                    )
                    .expect("registered shape");
            }
            if i == sub.children.len() {
                stack.pop();
                continue;
            }
            stack.last_mut().unwrap().1 += 1;
            let link = sub.children[i];
            let b = lanes.get(state[cur], link.start_slot);
            let old = enter(state, link.id, b, &mut tables, log);
            stack.push((link.id, 0, old));
        }
        lanes.get(state[a], subs[a].accept_slot())
    }

    /// `Next2(A, b)`.
    fn pass2(&self, state: &mut [u64], a: usize, b: u64) -> u64 {
        let subs = &self.deco.subautomata;
        let lanes = self.lanes;
        let mut tables = self.tables.lock().unwrap();
        let enter = |state: &mut [u64], id: usize, b: u64, tables: &mut ApproxTables| {
            let a = &subs[id];
            let cur = lanes.set(state[id], 0, b);
            state[id] = tables
                .tab_next2(a.shape, cur, a.chunks[0])
                .expect("registered shape");
        };
        enter(state, a, b, &mut tables);
        let mut stack: Vec<(usize, usize)> = vec![(a, 0)];
        while let Some(&(cur, i)) = stack.last() {
            let sub = &subs[cur];
            if i > 0 {
                let link = sub.children[i - 1];
                let f = lanes.get(state[link.id], subs[link.id].accept_slot());
                let updated = lanes.set(state[cur], link.accept_slot, f);
                state[cur] = tables
                    .tab_next2(sub.shape, updated, sub.chunks[i])
                    .expect("registered shape");
            }
            if i == sub.children.len() {
                stack.pop();
                continue;
            }
            stack.last_mut().unwrap().1 += 1;
            let link = sub.children[i];
            let b = lanes.get(state[cur], link.start_slot);
            enter(state, link.id, b, &mut tables);
            stack.push((link.id, 0));
        }
        lanes.get(state[a], subs[a].accept_slot())
    }

    fn global_values(&self, state: &[u64]) -> Vec<u64> {
        let mut out = vec![self.lanes.cap; self.deco.nfa_nodes];
        for (a, &vals) in self.deco.subautomata.iter().zip(state) {
            for (slot, &g) in a.nodes.iter().enumerate() {
                out[g] = self.lanes.get(vals, slot);
            }
        }
        out
    }

    /// Shared boundary nodes must hold the same value in parent and child.
    pub fn check_overlap(&self, q: impl AsRef<[u8]>) -> std::result::Result<(), String> {
        let mut state = self.fresh_state();
        let check = |state: &[u64]| -> std::result::Result<(), String> {
            for a in &self.deco.subautomata {
                for link in &a.children {
                    let child = &self.deco.subautomata[link.id];
                    for (ps, cs) in [
                        (link.start_slot, 0),
                        (link.accept_slot, child.accept_slot()),
                    ] {
                        let p = self.lanes.get(state[a.id], ps);
                        let c = self.lanes.get(state[link.id], cs);
                        if p != c {
                            return Err(format!(
                                "subautomaton {} slot {ps} = {p}, child {} slot {cs} = {c}",
                                a.id, link.id
                            ));
                        }
                    }
                }
            }
            Ok(())
        };
        self.column(&mut state, 0, None, &mut None);
        check(&state)?;
        for (j, &c) in q.as_ref().iter().enumerate() {
            self.column(&mut state, j as u64 + 1, Some(c), &mut None);
            check(&state)?;
        }
        Ok(())
    }
}

/// One-shot approximate membership with table budget `2^k` words.
///
/// Every query is within `max(|q|, leaves)` of the language (replace and
/// pad against its shortest string), so larger bounds are lowered to that.
pub fn amatch(pattern: impl AsRef<[u8]>, q: impl AsRef<[u8]>, d: usize, k: u32) -> Result<bool> {
    let q = q.as_ref();
    let tree = parse(pattern.as_ref())?;
    let leaves = tree
        .nodes()
        .iter()
        .filter(|n| matches!(n.label, Label::Char(_)))
        .count();
    let d = d.min(q.len().max(leaves));
    Ok(ApproxRegex::new(pattern, d, k)?.is_match(q))
}
