//! Subsequence indexing: preprocess a text so that "is `q` a subsequence of
//! the text?" is answered without scanning the text.
//!
//! Three engines with different space/time trade-offs, all following the
//! greedy leftmost match:
//!
//! - [`Engine::Full`]: the subsequence automaton, a next-occurrence table with
//!   one entry per (position, character).
//! - [`Engine::Successor`]: one sorted position list per character, queried
//!   by successor search.
//! - [`Engine::Hybrid`]: the text is cut into groups of `σ` positions (`σ`
//!   the number of distinct characters). Inside a group a small two-level
//!   bitmask answers successor queries; leaving a group is a precomputed long
//!   jump to the first occurrence of the character in a later group.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tables::{read_u32, read_u64};

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    Full,
    Successor,
    Hybrid,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::Full, Engine::Successor, Engine::Hybrid];

    fn tag(self) -> u8 {
        match self {
            Engine::Full => 0,
            Engine::Successor => 1,
            Engine::Hybrid => 2,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        Engine::ALL
            .into_iter()
            .find(|e| e.tag() == tag)
            .ok_or_else(|| Error::Format(format!("unknown engine tag {tag}")))
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Full => "full",
            Engine::Successor => "successor",
            Engine::Hybrid => "hybrid",
        })
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Engine::Full),
            "successor" => Ok(Engine::Successor),
            "hybrid" => Ok(Engine::Hybrid),
            _ => Err(Error::Format(format!("unknown engine '{s}'"))),
        }
    }
}

/// Successor structure over a small universe: a summary bitmask of the
/// nonempty 64-bit buckets, and the nonempty buckets in order.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Buckets {
    summary: Vec<u64>,
    buckets: Vec<u64>,
}

impl Buckets {
    fn from_sorted(universe: usize, items: &[u32]) -> Self {
        let mut summary = vec![0u64; universe.div_ceil(64 * 64).max(1)];
        let mut buckets: Vec<u64> = Vec::new();
        let mut last = usize::MAX;
        for &r in items {
            let b = r as usize / 64;
            if b != last {
                summary[b / 64] |= 1 << (b % 64);
                buckets.push(0);
                last = b;
            }
            *buckets.last_mut().unwrap() |= 1 << (r % 64);
        }
        Buckets { summary, buckets }
    }

    fn entries(&self) -> usize {
        self.summary.len() + self.buckets.len()
    }

    /// Number of nonempty buckets before bucket `b`.
    fn rank(&self, b: usize) -> usize {
        let w = b / 64;
        let below: u32 = self.summary[..w].iter().map(|x| x.count_ones()).sum();
        (below + (self.summary[w] & ((1u64 << (b % 64)) - 1)).count_ones()) as usize
    }

    /// Smallest element `>= r`.
    fn successor(&self, r: usize) -> Option<usize> {
        let b = r / 64;
        if b / 64 >= self.summary.len() {
            return None;
        }
        if self.summary[b / 64] >> (b % 64) & 1 == 1 {
            let word = self.buckets[self.rank(b)] & (!0u64 << (r % 64));
            if word != 0 {
                return Some(b * 64 + word.trailing_zeros() as usize);
            }
        }
        // next nonempty bucket after b
        let mut w = b / 64;
        let mut bits = if b % 64 == 63 {
            0
        } else {
            self.summary[w] & (!0u64 << (b % 64 + 1))
        };
        loop {
            if bits != 0 {
                let nb = w * 64 + bits.trailing_zeros() as usize;
                return Some(nb * 64 + self.buckets[self.rank(nb)].trailing_zeros() as usize);
            }
            w += 1;
            if w >= self.summary.len() {
                return None;
            }
            bits = self.summary[w];
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Payload {
    Full {
        next: Vec<u32>,
    },
    Successor {
        lists: Vec<Vec<u32>>,
    },
    Hybrid {
        /// group-major, one slot per character: index into `structs` or NONE
        slots: Vec<u32>,
        structs: Vec<Buckets>,
        /// per group but the last, per character: first occurrence in a
        /// later group
        jumps: Vec<u32>,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryTrace {
    pub lookups: usize,
    pub long_jumps: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubseqIndex<T> {
    engine: Engine,
    n: usize,
    alphabet: Vec<T>,
    payload: Payload,
}

impl<T: Ord + Copy> SubseqIndex<T> {
    pub fn build(text: &[T], engine: Engine) -> Self {
        let mut alphabet = text.to_vec();
        alphabet.sort_unstable();
        alphabet.dedup();
        let sigma = alphabet.len();
        let n = text.len();
        let codes: Vec<usize> = text
            .iter()
            .map(|c| alphabet.binary_search(c).unwrap())
            .collect();
        let payload = match engine {
            Engine::Full => {
                let mut next = vec![NONE; n * sigma];
                for p in (0..n).rev() {
                    if p + 1 < n {
                        let (head, tail) = next.split_at_mut((p + 1) * sigma);
                        head[p * sigma..].copy_from_slice(&tail[..sigma]);
                    }
                    next[p * sigma + codes[p]] = p as u32;
                }
                Payload::Full { next }
            }
            Engine::Successor => {
                let mut lists = vec![Vec::new(); sigma];
                for (p, &c) in codes.iter().enumerate() {
                    lists[c].push(p as u32);
                }
                Payload::Successor { lists }
            }
            Engine::Hybrid => {
                let groups = if sigma == 0 { 0 } else { n.div_ceil(sigma) };
                let mut slots = vec![NONE; groups * sigma];
                let mut structs = Vec::new();
                let mut members: Vec<Vec<u32>> = vec![Vec::new(); sigma];
                for g in 0..groups {
                    for list in members.iter_mut() {
                        list.clear();
                    }
                    for p in g * sigma..n.min((g + 1) * sigma) {
                        members[codes[p]].push((p - g * sigma) as u32);
                    }
                    for (c, list) in members.iter().enumerate() {
                        if !list.is_empty() {
                            slots[g * sigma + c] = structs.len() as u32;
                            structs.push(Buckets::from_sorted(sigma, list));
                        }
                    }
                }
                let mut jumps = vec![NONE; groups.saturating_sub(1) * sigma];
                let mut first = vec![NONE; sigma];
                for g in (0..groups.saturating_sub(1)).rev() {
                    for p in ((g + 1) * sigma..n.min((g + 2) * sigma)).rev() {
                        first[codes[p]] = p as u32;
                    }
                    jumps[g * sigma..(g + 1) * sigma].copy_from_slice(&first);
                }
                Payload::Hybrid {
                    slots,
                    structs,
                    jumps,
                }
            }
        };
        SubseqIndex {
            engine,
            n,
            alphabet,
            payload,
        }
    }

    pub fn engine(&self) -> Engine {
        self.engine
    }

    pub fn text_len(&self) -> usize {
        self.n
    }

    pub fn sigma(&self) -> usize {
        self.alphabet.len()
    }

    /// Stored payload entries (words or position slots).
    pub fn entries(&self) -> usize {
        match &self.payload {
            Payload::Full { next } => next.len(),
            Payload::Successor { lists } => lists.iter().map(Vec::len).sum(),
            Payload::Hybrid {
                slots,
                structs,
                jumps,
            } => slots.len() + jumps.len() + structs.iter().map(Buckets::entries).sum::<usize>(),
        }
    }

    /// Full engine: first position `>= p` holding `c`.
    pub fn next_occurrence(&self, p: usize, c: T) -> Option<usize> {
        let code = self.alphabet.binary_search(&c).ok()?;
        self.next_code(p, code, &mut QueryTrace::default())
    }

    fn next_code(&self, p: usize, code: usize, trace: &mut QueryTrace) -> Option<usize> {
        if p >= self.n {
            return None;
        }
        let sigma = self.alphabet.len();
        let found = match &self.payload {
            Payload::Full { next } => {
                trace.lookups += 1;
                next[p * sigma + code]
            }
            Payload::Successor { lists } => {
                trace.lookups += 1;
                let list = &lists[code];
                let i = list.partition_point(|&x| (x as usize) < p);
                list.get(i).copied().unwrap_or(NONE)
            }
            Payload::Hybrid {
                slots,
                structs,
                jumps,
            } => {
                let g = p / sigma;
                let slot = slots[g * sigma + code];
                trace.lookups += 1;
                let local = (slot != NONE)
                    .then(|| structs[slot as usize].successor(p - g * sigma))
                    .flatten();
                match local {
                    Some(r) => (g * sigma + r) as u32,
                    None if g * sigma + sigma < self.n => {
                        trace.long_jumps += 1;
                        jumps[g * sigma + code]
                    }
                    None => NONE,
                }
            }
        };
        (found != NONE).then_some(found as usize)
    }

    /// Greedy leftmost match positions of `q`, or `None` if it is not a
    /// subsequence.
    pub fn query_traced(&self, q: &[T]) -> (Option<Vec<usize>>, QueryTrace) {
        let mut trace = QueryTrace::default();
        let mut positions = Vec::with_capacity(q.len());
        let mut p = 0;
        for c in q {
            let Ok(code) = self.alphabet.binary_search(c) else {
                return (None, trace);
            };
            match self.next_code(p, code, &mut trace) {
                Some(j) => {
                    positions.push(j);
                    p = j + 1;
                }
                None => return (None, trace),
            }
        }
        (Some(positions), trace)
    }

    pub fn query(&self, q: &[T]) -> bool {
        self.query_traced(q).0.is_some()
    }

    /// Recover the indexed text: position `p` holds the one character whose
    /// next occurrence from `p` is `p` itself.
    pub fn text(&self) -> Vec<T> {
        let mut scratch = QueryTrace::default();
        (0..self.n)
            .map(|p| {
                let code = (0..self.alphabet.len())
                    .find(|&c| self.next_code(p, c, &mut scratch) == Some(p))
                    .expect("every position holds some character");
                self.alphabet[code]
            })
            .collect()
    }
}

/// Greedy two-pointer scan.
pub fn subsequence_naive<T: PartialEq>(t: &[T], q: &[T]) -> bool {
    let mut it = t.iter();
    q.iter().all(|c| it.any(|x| x == c))
}

/// Positions chosen by the greedy two-pointer scan.
pub fn greedy_positions<T: PartialEq>(t: &[T], q: &[T]) -> Option<Vec<usize>> {
    let mut out = Vec::with_capacity(q.len());
    let mut p = 0;
    for c in q {
        let j = p + t[p..].iter().position(|x| x == c)?;
        out.push(j);
        p = j + 1;
    }
    Some(out)
}

const MAGIC: &[u8; 4] = b"RMSQ";
const VERSION: u32 = 1;

fn write_u32s<W: Write>(w: &mut W, v: &[u32]) -> Result<()> {
    w.write_all(&(v.len() as u64).to_le_bytes())?;
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn write_u64s<W: Write>(w: &mut W, v: &[u64]) -> Result<()> {
    w.write_all(&(v.len() as u64).to_le_bytes())?;
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_len<R: Read>(r: &mut R) -> Result<usize> {
    let len = read_u64(r)?;
    if len > 1 << 40 {
        return Err(Error::Format(format!("implausible length {len}")));
    }
    Ok(len as usize)
}

fn read_u32s<R: Read>(r: &mut R) -> Result<Vec<u32>> {
    let len = read_len(r)?;
    (0..len).map(|_| read_u32(r)).collect()
}

fn read_u64s<R: Read>(r: &mut R) -> Result<Vec<u64>> {
    let len = read_len(r)?;
    (0..len).map(|_| read_u64(r)).collect()
}

impl SubseqIndex<u8> {
    /// Versioned binary format: magic, version, engine tag, text length,
    /// alphabet, then the engine payload.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[self.engine.tag()])?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&(self.alphabet.len() as u32).to_le_bytes())?;
        w.write_all(&self.alphabet)?;
        match &self.payload {
            Payload::Full { next } => write_u32s(&mut w, next)?,
            Payload::Successor { lists } => {
                for list in lists {
                    write_u32s(&mut w, list)?;
                }
            }
            Payload::Hybrid {
                slots,
                structs,
                jumps,
            } => {
                write_u32s(&mut w, slots)?;
                write_u32s(&mut w, jumps)?;
                w.write_all(&(structs.len() as u64).to_le_bytes())?;
                for s in structs {
                    write_u64s(&mut w, &s.summary)?;
                    write_u64s(&mut w, &s.buckets)?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a subsequence index".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Format(format!(
                "unsupported index version {version}"
            )));
        }
        let mut tag = [0u8];
        r.read_exact(&mut tag)?;
        let engine = Engine::from_tag(tag[0])?;
        let n = read_len(&mut r)?;
        let sigma = read_u32(&mut r)? as usize;
        if sigma > 256 {
            return Err(Error::Format(format!("alphabet of {sigma} bytes")));
        }
        let mut alphabet = vec![0u8; sigma];
        r.read_exact(&mut alphabet)?;
        let payload = match engine {
            Engine::Full => Payload::Full {
                next: read_u32s(&mut r)?,
            },
            Engine::Successor => Payload::Successor {
                lists: (0..sigma)
                    .map(|_| read_u32s(&mut r))
                    .collect::<Result<_>>()?,
            },
            Engine::Hybrid => {
                let slots = read_u32s(&mut r)?;
                let jumps = read_u32s(&mut r)?;
                let count = read_len(&mut r)?;
                let structs = (0..count)
                    .map(|_| {
                        Ok(Buckets {
                            summary: read_u64s(&mut r)?,
                            buckets: read_u64s(&mut r)?,
                        })
                    })
                    .collect::<Result<_>>()?;
                Payload::Hybrid {
                    slots,
                    structs,
                    jumps,
                }
            }
        };
        Ok(SubseqIndex {
            engine,
            n,
            alphabet,
            payload,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_recovered_by_every_engine() {
        let t = b"abracadabra, said the cat";
        for e in Engine::ALL {
            assert_eq!(SubseqIndex::build(t, e).text(), t.to_vec(), "{e}");
        }
    }

    #[test]
    fn empty_text() {
        for e in Engine::ALL {
            let idx = SubseqIndex::build(b"", e);
            assert!(idx.query(b""));
            assert!(!idx.query(b"a"));
        }
    }

    #[test]
    fn abcde() {
        for e in Engine::ALL {
            let idx = SubseqIndex::build(b"abcde", e);
            assert!(idx.query(b"ace"), "{e}");
            assert!(!idx.query(b"aec"), "{e}");
            assert!(idx.query(b""));
            assert!(!idx.query(b"abcdef"));
        }
        let full = SubseqIndex::build(b"abcde", Engine::Full);
        assert_eq!(full.next_occurrence(0, b'c'), Some(2));
        assert_eq!(full.next_occurrence(3, b'c'), None);
        assert_eq!(full.entries(), 25);
    }

    #[test]
    fn naive_scan() {
        assert!(subsequence_naive(b"abc", b"abc"));
        assert!(!subsequence_naive(b"abc", b"abcd"));
        assert_eq!(greedy_positions(b"abcabc", b"cab"), Some(vec![2, 3, 4]));
    }

    #[test]
    fn buckets_successor() {
        let items = [0u32, 5, 63, 64, 200, 4095, 4096, 9000];
        let b = Buckets::from_sorted(10_000, &items);
        for r in 0..10_000 {
            let want = items.iter().map(|&x| x as usize).find(|&x| x >= r);
            assert_eq!(b.successor(r), want, "{r}");
        }
    }

    #[test]
    fn long_jumps_cross_groups() {
        let text = b"abcabcabcabcaaaac";
        let idx = SubseqIndex::build(text, Engine::Hybrid);
        let (pos, trace) = idx.query_traced(b"ccc");
        assert_eq!(pos, greedy_positions(text, b"ccc"));
        assert!(trace.long_jumps <= text.len().div_ceil(3));
    }

    #[test]
    fn serialization_round_trip() {
        for e in Engine::ALL {
            let idx = SubseqIndex::build(b"mississippi river", e);
            let mut buf = Vec::new();
            idx.write_to(&mut buf).unwrap();
            assert_eq!(SubseqIndex::read_from(buf.as_slice()).unwrap(), idx);
        }
        assert!(SubseqIndex::read_from(&b"RMSQ\x09\0\0\0"[..]).is_err());
    }
}
