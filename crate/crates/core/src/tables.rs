//! Four Russians tables for subautomata.
//!
//! Transition functions of a subautomaton depend on its characters only
//! through the set of α-nodes, so the character-dependent part is kept in a
//! small per-subautomaton [`EqMap`] and everything else is tabulated once per
//! label-erased shape ([`ShapeKey`]) and shared by all subautomata of that
//! shape.
//!
//! Exact engine: `succ[B]` and `close[B]` for every bitvector `B` over the
//! shape's nodes, built incrementally from single-node results.
//!
//! Approximate engine: the chunk-restricted pass-1/pass-2 updates over
//! packed value vectors. Their input space is far too large to enumerate, so
//! entries are memoized on first use up to the word budget.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::sync::{Arc, Mutex};

use crate::decomposition::{LocalLabel, ShapeKey, Subautomaton};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeClass {
    Eps,
    EpsBack,
    Labeled,
}

/// Label-erased subautomaton: what every table of a shape is computed from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeGraph {
    pub size: usize,
    pub edges: Vec<(usize, usize, EdgeClass)>,
    pub chunks: Vec<u64>,
}

impl ShapeGraph {
    pub fn of(a: &Subautomaton) -> Self {
        let mut edges: Vec<_> = a
            .edges
            .iter()
            .map(|e| {
                let class = match (e.label, e.back) {
                    (LocalLabel::Eps, false) => EdgeClass::Eps,
                    (LocalLabel::Eps, true) => EdgeClass::EpsBack,
                    _ => EdgeClass::Labeled,
                };
                (e.from, e.to, class)
            })
            .collect();
        edges.sort_unstable_by_key(|&(f, t, c)| (f, t, c as u8));
        ShapeGraph {
            size: a.size(),
            edges,
            chunks: a.chunks.clone(),
        }
    }

    pub fn is_sigma_node(&self, v: usize) -> bool {
        self.edges
            .iter()
            .any(|&(_, t, c)| t == v && c == EdgeClass::Labeled)
    }

    fn single_succ(&self, v: usize) -> u64 {
        self.edges
            .iter()
            .filter(|&&(f, _, _)| f == v)
            .fold(0, |acc, &(_, t, _)| acc | 1 << t)
    }

    fn single_close(&self, v: usize) -> u64 {
        let mut set = 1u64 << v;
        loop {
            let mut next = set;
            for &(f, t, c) in &self.edges {
                if c != EdgeClass::Labeled && set >> f & 1 == 1 {
                    next |= 1 << t;
                }
            }
            if next == set {
                return set;
            }
            set = next;
        }
    }
}

pub fn shape_key(a: &Subautomaton) -> ShapeKey {
    a.shape
}

/// Characteristic vectors of the α-nodes of one subautomaton, for the
/// characters that occur in it. Pseudo-edges carry no character.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EqMap {
    entries: Vec<(u8, u64)>,
}

impl EqMap {
    pub fn get(&self, c: u8) -> u64 {
        match self.entries.binary_search_by_key(&c, |&(k, _)| k) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u8, u64)> + '_ {
        self.entries.iter().copied()
    }
}

pub fn build_eq(a: &Subautomaton) -> EqMap {
    let mut entries: Vec<(u8, u64)> = Vec::new();
    for e in &a.edges {
        if let LocalLabel::Sym(c) = e.label {
            match entries.iter_mut().find(|(k, _)| *k == c) {
                Some((_, bits)) => *bits |= 1 << e.to,
                None => entries.push((c, 1 << e.to)),
            }
        }
    }
    entries.sort_unstable_by_key(|&(c, _)| c);
    EqMap { entries }
}

/// Succ and Close of one shape, indexed by bitvector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactShapeTables {
    size: usize,
    succ: Vec<u64>,
    close: Vec<u64>,
}

impl ExactShapeTables {
    pub fn build(graph: &ShapeGraph) -> Self {
        let n = 1usize << graph.size;
        let single_succ: Vec<u64> = (0..graph.size).map(|v| graph.single_succ(v)).collect();
        let single_close: Vec<u64> = (0..graph.size).map(|v| graph.single_close(v)).collect();
        let mut succ = vec![0u64; n];
        let mut close = vec![0u64; n];
        for b in 1..n {
            let low = b.trailing_zeros() as usize;
            let rest = b & (b - 1);
            succ[b] = succ[rest] | single_succ[low];
            close[b] = close[rest] | single_close[low];
        }
        ExactShapeTables {
            size: graph.size,
            succ,
            close,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn words(&self) -> usize {
        self.succ.len() + self.close.len()
    }

    #[inline]
    pub fn succ(&self, b: u64) -> u64 {
        self.succ[b as usize]
    }

    /// ε-closure of `b`, plus the start node (slot 0) when `with_start` is set.
    #[inline]
    pub fn close(&self, b: u64, with_start: bool) -> u64 {
        self.close[(b | with_start as u64) as usize]
    }
}

/// Starting cluster size for budget `k` and distance bound `d` (`d = 0` for
/// exact matching): the largest `x` with `x * ceil(log2(d+2)) <= max(4, k/8)`.
/// Builders step down from here while tables or vectors do not fit.
pub fn initial_x(k: u32, d: usize) -> usize {
    let width = Lanes::for_distance(d).width as usize;
    ((k as usize / 8).max(4) / width).max(1)
}

/// Words used by the exact tables of a shape with `size` nodes.
pub fn exact_words(size: usize) -> usize {
    2 << size
}

/// `Succ(B) ∩ Eq(α)`, plus the start node when `b` is set.
#[inline]
pub fn move_a(tables: &ExactShapeTables, eq: &EqMap, set: u64, b: bool, c: u8) -> u64 {
    (tables.succ(set) & eq.get(c)) | b as u64
}

/// Shared cache of exact tables keyed by shape. A missing shape is built
/// exactly once even under concurrent lookups.
#[derive(Debug, Default)]
pub struct ExactTables {
    shapes: Mutex<HashMap<ShapeKey, Arc<ExactShapeTables>>>,
}

const EXACT_MAGIC: &[u8; 4] = b"RMXT";
const EXACT_VERSION: u32 = 1;

impl ExactTables {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_build(&self, a: &Subautomaton) -> Arc<ExactShapeTables> {
        let mut shapes = self.shapes.lock().unwrap();
        shapes
            .entry(a.shape)
            .or_insert_with(|| Arc::new(ExactShapeTables::build(&ShapeGraph::of(a))))
            .clone()
    }

    pub fn get(&self, key: ShapeKey) -> Result<Arc<ExactShapeTables>> {
        self.shapes
            .lock()
            .unwrap()
            .get(&key)
            .cloned()
            .ok_or(Error::UnknownShape(key.0))
    }

    pub fn tab_succ(&self, key: ShapeKey, set: u64) -> Result<u64> {
        Ok(self.get(key)?.succ(set))
    }

    pub fn tab_close(&self, key: ShapeKey, set: u64, b: bool) -> Result<u64> {
        Ok(self.get(key)?.close(set, b))
    }

    pub fn shape_count(&self) -> usize {
        self.shapes.lock().unwrap().len()
    }

    pub fn words(&self) -> usize {
        self.shapes
            .lock()
            .unwrap()
            .values()
            .map(|t| t.words())
            .sum()
    }

    /// Versioned binary dump: magic, version, count, then per shape its key,
    /// node count and both tables as little-endian words.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let shapes = self.shapes.lock().unwrap();
        let mut keys: Vec<_> = shapes.keys().copied().collect();
        keys.sort();
        w.write_all(EXACT_MAGIC)?;
        w.write_all(&EXACT_VERSION.to_le_bytes())?;
        w.write_all(&(keys.len() as u32).to_le_bytes())?;
        for key in keys {
            let t = &shapes[&key];
            w.write_all(&key.0.to_le_bytes())?;
            w.write_all(&[t.size as u8])?;
            for v in t.succ.iter().chain(&t.close) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != EXACT_MAGIC {
            return Err(Error::Format("not a table file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != EXACT_VERSION {
            return Err(Error::Format(format!(
                "unsupported table version {version}"
            )));
        }
        let count = read_u32(&mut r)?;
        let mut shapes = HashMap::new();
        for _ in 0..count {
            let key = ShapeKey(read_u64(&mut r)?);
            let mut size = [0u8];
            r.read_exact(&mut size)?;
            let size = size[0] as usize;
            if size > 30 {
                return Err(Error::Format(format!("shape of {size} nodes")));
            }
            let n = 1usize << size;
            let read_vec =
                |r: &mut R| -> Result<Vec<u64>> { (0..n).map(|_| read_u64(r)).collect() };
            let succ = read_vec(&mut r)?;
            let close = read_vec(&mut r)?;
            shapes.insert(key, Arc::new(ExactShapeTables { size, succ, close }));
        }
        Ok(ExactTables {
            shapes: Mutex::new(shapes),
        })
    }
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Fixed-width lanes of values in `[0, d+1]` packed into one word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lanes {
    pub width: u32,
    pub cap: u64,
}

impl Lanes {
    /// Lane layout for distance bound `d`: `ceil(log2(d+2))` bits per value.
    pub fn for_distance(d: usize) -> Self {
        let cap = d as u64 + 1;
        let width = (u64::BITS - cap.leading_zeros()).max(1);
        Lanes { width, cap }
    }

    /// Number of lanes that fit a word.
    pub fn per_word(self) -> usize {
        (u64::BITS / self.width) as usize
    }

    #[inline]
    fn mask(self) -> u64 {
        (1u64 << self.width) - 1
    }

    #[inline]
    pub fn get(self, packed: u64, i: usize) -> u64 {
        packed >> (i as u32 * self.width) & self.mask()
    }

    #[inline]
    pub fn set(self, packed: u64, i: usize, v: u64) -> u64 {
        let sh = i as u32 * self.width;
        (packed & !(self.mask() << sh)) | v << sh
    }

    /// Word with `v` in each of the first `n` lanes.
    pub fn broadcast(self, v: u64, n: usize) -> u64 {
        (0..n).fold(0, |acc, i| self.set(acc, i, v))
    }

    /// `min(x + 1, cap)` in each of the first `n` lanes at once.
    pub fn saturating_inc(self, packed: u64, n: usize) -> u64 {
        let lsb = self.broadcast(1, n);
        let high = lsb << (self.width - 1);
        let low = high.wrapping_sub(lsb) & !high;
        let t = packed ^ self.broadcast(self.cap, n);
        // high bit of a lane set iff that lane of t is nonzero
        let nonzero = ((t & low).wrapping_add(low) | t) & high;
        packed + (nonzero >> (self.width - 1))
    }

    pub fn unpack(self, packed: u64, n: usize) -> Vec<u64> {
        (0..n).map(|i| self.get(packed, i)).collect()
    }

    pub fn pack(self, values: &[u64]) -> u64 {
        values
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &v)| self.set(acc, i, v))
    }
}

/// Pass-1 update restricted to chunk `chunk`. `old` is the previous column's
/// pass-2 vector with earlier chunks already advanced; `boundary` is the
/// previous-column value of the node just before the chunk, which `old` has
/// already overwritten.
pub fn next1_direct(
    g: &ShapeGraph,
    lanes: Lanes,
    old: u64,
    chunk: u64,
    eq: u64,
    boundary: u64,
) -> u64 {
    let cap = lanes.cap;
    let inserted = lanes.saturating_inc(old, g.size);
    let mut out = old;
    for v in BitIter(chunk) {
        let mut val = cap;
        let mut sigma = false;
        for &(w, t, class) in &g.edges {
            if t != v {
                continue;
            }
            match class {
                EdgeClass::Labeled => {
                    sigma = true;
                    let prev = if chunk >> w & 1 == 1 {
                        lanes.get(old, w)
                    } else {
                        boundary
                    };
                    let lambda = if eq >> v & 1 == 1 { 0 } else { 1 };
                    val = val.min(prev + lambda).min(lanes.get(out, w) + 1);
                }
                EdgeClass::Eps => val = val.min(lanes.get(out, w)),
                EdgeClass::EpsBack => {}
            }
        }
        if sigma {
            val = val.min(lanes.get(inserted, v));
        }
        out = lanes.set(out, v, val.min(cap));
    }
    out
}

/// Pass-2 update restricted to chunk `chunk`: back edges contribute the
/// pass-1 value of their source, forward edges the pass-2 value.
pub fn next2_direct(g: &ShapeGraph, lanes: Lanes, pass1: u64, chunk: u64) -> u64 {
    let cap = lanes.cap;
    let mut out = pass1;
    for v in BitIter(chunk) {
        let mut val = lanes.get(pass1, v);
        for &(w, t, class) in &g.edges {
            if t != v {
                continue;
            }
            let via = match class {
                EdgeClass::Labeled => lanes.get(out, w) + 1,
                EdgeClass::Eps | EdgeClass::EpsBack => lanes.get(out, w),
            };
            val = val.min(via);
        }
        out = lanes.set(out, v, val.min(cap));
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct BitIter(pub u64);

impl Iterator for BitIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }
}

const NEXT1_ENTRY_WORDS: usize = 5;
const NEXT2_ENTRY_WORDS: usize = 3;

#[derive(Debug)]
struct ApproxShape {
    graph: ShapeGraph,
    next1: HashMap<(u64, u64, u64, u64), u64>,
    next2: HashMap<(u64, u64), u64>,
}

/// Memoized pass-1/pass-2 chunk tables for one distance bound.
#[derive(Debug)]
pub struct ApproxTables {
    lanes: Lanes,
    budget_words: usize,
    used_words: usize,
    shapes: HashMap<ShapeKey, ApproxShape>,
    pub hits: u64,
    pub misses: u64,
}

impl ApproxTables {
    pub fn new(d: usize, budget_words: usize) -> Self {
        ApproxTables {
            lanes: Lanes::for_distance(d),
            budget_words,
            used_words: 0,
            shapes: HashMap::new(),
            hits: 0,
            misses: 0,
        }
    }

    pub fn lanes(&self) -> Lanes {
        self.lanes
    }

    pub fn register(&mut self, a: &Subautomaton) {
        self.shapes.entry(a.shape).or_insert_with(|| ApproxShape {
            graph: ShapeGraph::of(a),
            next1: HashMap::new(),
            next2: HashMap::new(),
        });
    }

    pub fn words(&self) -> usize {
        self.used_words
    }

    pub fn tab_next1(
        &mut self,
        key: ShapeKey,
        old: u64,
        chunk: u64,
        eq: u64,
        boundary: u64,
    ) -> Result<u64> {
        let lanes = self.lanes;
        let shape = self
            .shapes
            .get_mut(&key)
            .ok_or(Error::UnknownShape(key.0))?;
        let eq = eq & chunk;
        let k = (old, chunk, eq, boundary);
        if let Some(&v) = shape.next1.get(&k) {
            self.hits += 1;
            return Ok(v);
        }
        self.misses += 1;
        let v = next1_direct(&shape.graph, lanes, old, chunk, eq, boundary);
        if self.used_words + NEXT1_ENTRY_WORDS <= self.budget_words {
            shape.next1.insert(k, v);
            self.used_words += NEXT1_ENTRY_WORDS;
        }
        Ok(v)
    }

    pub fn tab_next2(&mut self, key: ShapeKey, pass1: u64, chunk: u64) -> Result<u64> {
        let lanes = self.lanes;
        let shape = self
            .shapes
            .get_mut(&key)
            .ok_or(Error::UnknownShape(key.0))?;
        let k = (pass1, chunk);
        if let Some(&v) = shape.next2.get(&k) {
            self.hits += 1;
            return Ok(v);
        }
        self.misses += 1;
        let v = next2_direct(&shape.graph, lanes, pass1, chunk);
        if self.used_words + NEXT2_ENTRY_WORDS <= self.budget_words {
            shape.next2.insert(k, v);
            self.used_words += NEXT2_ENTRY_WORDS;
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{cluster, decompose, Decomposition};
    use crate::nfa::build_nfa;
    use crate::regex_ast::parse;

    fn deco(p: &str, x: usize) -> Decomposition {
        let t = parse(p).unwrap();
        let n = build_nfa(&t);
        decompose(&n, &t, &cluster(&t, x)).unwrap()
    }

    /// ε-reachability by repeated relaxation over the subautomaton's edges.
    fn eps_bfs(a: &Subautomaton, start: u64) -> u64 {
        let mut set = start;
        let mut changed = true;
        while changed {
            changed = false;
            for e in &a.edges {
                if e.label == LocalLabel::Eps && set >> e.from & 1 == 1 && set >> e.to & 1 == 0 {
                    set |= 1 << e.to;
                    changed = true;
                }
            }
        }
        set
    }

    #[test]
    fn succ_of_empty_is_empty() {
        let d = deco("(a|b)*c", 10);
        let store = ExactTables::new();
        let a = &d.subautomata[0];
        store.get_or_build(a);
        assert_eq!(store.tab_succ(a.shape, 0).unwrap(), 0);
    }

    #[test]
    fn close_of_star() {
        let d = deco("a*", 10);
        let a = &d.subautomata[0];
        let store = ExactTables::new();
        store.get_or_build(a);
        // slots: 0 = θ, 1 = θ_S, 2 = φ_S, 3 = φ
        assert_eq!(store.tab_close(a.shape, 1, false).unwrap(), 0b1011);
        assert_eq!(store.tab_close(a.shape, 1, false).unwrap(), eps_bfs(a, 1));
        assert_eq!(store.tab_close(a.shape, 0, true).unwrap(), 0b1011);
    }

    #[test]
    fn unknown_shape() {
        let store = ExactTables::new();
        assert!(matches!(
            store.tab_succ(ShapeKey(7), 0),
            Err(Error::UnknownShape(7))
        ));
        let mut t = ApproxTables::new(1, 1000);
        assert!(t.tab_next2(ShapeKey(7), 0, 0).is_err());
    }

    #[test]
    fn eq_maps() {
        let d = deco("aab", 10);
        let eq = build_eq(&d.subautomata[0]);
        assert_eq!(eq.get(b'a').count_ones(), 2);
        assert_eq!(eq.get(b'b').count_ones(), 1);
        assert_eq!(eq.get(b'c'), 0);
        assert_eq!(eq.len(), 2);

        // A cluster holding only a Cat over two pseudo children has no characters.
        let d = deco("(a|b)(c|d)", 3);
        let root = &d.subautomata[d.root];
        assert_eq!(root.pseudo_edges().count(), 2);
        assert!(build_eq(root).is_empty());
    }

    #[test]
    fn move_formula() {
        let d = deco("ac", 10);
        let a = &d.subautomata[0];
        let store = ExactTables::new();
        let t = store.get_or_build(a);
        let eq = build_eq(a);
        assert_eq!(move_a(&t, &eq, 0, true, b'z'), 1);
        // slots: 0 -a-> 1 -c-> 2
        assert_eq!(move_a(&t, &eq, 1, false, b'a'), 0b10);
        assert_eq!(move_a(&t, &eq, 1, false, b'c'), 0);
    }

    #[test]
    fn shared_shapes() {
        let d = deco("(ab)(ab)(ab)(ab)(ab)(ab)(ab)(ab)", 3);
        let store = ExactTables::new();
        for a in &d.subautomata {
            store.get_or_build(a);
        }
        assert!(store.shape_count() < d.len());
    }

    #[test]
    fn serialization_round_trip() {
        let d = deco("(a|b)*c(d|e*)", 3);
        let store = ExactTables::new();
        for a in &d.subautomata {
            store.get_or_build(a);
        }
        let mut buf = Vec::new();
        store.write_to(&mut buf).unwrap();
        let back = ExactTables::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.shape_count(), store.shape_count());
        for a in &d.subautomata {
            assert_eq!(*back.get(a.shape).unwrap(), *store.get(a.shape).unwrap());
        }
        assert!(ExactTables::read_from(&b"XXXX"[..]).is_err());
    }

    #[test]
    fn lanes_saturating_inc() {
        for d in [0usize, 1, 2, 3, 5, 6, 14] {
            let lanes = Lanes::for_distance(d);
            assert!(lanes.cap < 1 << lanes.width);
            let n = lanes.per_word().min(12);
            let vals: Vec<u64> = (0..n).map(|i| (i as u64 * 7) % (lanes.cap + 1)).collect();
            let inc = lanes.unpack(lanes.saturating_inc(lanes.pack(&vals), n), n);
            let expect: Vec<u64> = vals.iter().map(|&v| (v + 1).min(lanes.cap)).collect();
            assert_eq!(inc, expect, "d = {d}");
        }
    }

    #[test]
    fn next1_empty_chunk_is_identity() {
        let d = deco("a*b", 10);
        let g = ShapeGraph::of(&d.subautomata[0]);
        let lanes = Lanes::for_distance(3);
        let b = lanes.pack(&[1, 2, 3, 4, 0, 2]);
        assert_eq!(next1_direct(&g, lanes, b, 0, 0, 0), b);
        assert_eq!(next2_direct(&g, lanes, b, 0), b);
    }

    #[test]
    fn next1_match_case() {
        // "a": slots 0 -a-> 1, one chunk {1}
        let d = deco("a", 10);
        let a = &d.subautomata[0];
        let g = ShapeGraph::of(a);
        let lanes = Lanes::for_distance(2);
        let old = lanes.pack(&[0, 3]);
        let eq = build_eq(a).get(b'a');
        // θ already advanced to 1, its previous value 0 is passed as boundary
        let cur = lanes.set(old, 0, 1);
        let out = next1_direct(&g, lanes, cur, a.chunks[0], eq, 0);
        assert_eq!(lanes.get(out, 1), 0);
        let out = next1_direct(&g, lanes, cur, a.chunks[0], 0, 0);
        assert_eq!(lanes.get(out, 1), 1);
    }
}
