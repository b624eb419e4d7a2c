//! Seeded input generators and brute-force reference answers shared by the
//! test suites and the benchmark.

use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::editdist::edit_distance_naive;
use crate::error::{Error, Result};
use crate::nfa::build_nfa;
use crate::regex_ast::{is_meta, parse, Label, ParseTree};

/// Longest strings `enumerate_language` will spell.
pub const MAX_ENUM_LEN: usize = 12;

/// Most strings (and search states) `enumerate_language` will visit.
pub const ENUM_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzConfig {
    pub seed: u64,
    pub alphabet_sizes: Vec<usize>,
    pub max_pattern_len: usize,
    pub max_text_len: usize,
    pub iterations: usize,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            seed: 0x5eed,
            alphabet_sizes: vec![2, 8, 64, 256],
            max_pattern_len: 40,
            max_text_len: 80,
            iterations: 1000,
        }
    }
}

impl FuzzConfig {
    /// Independent generator for one named stream of this configuration.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// The first `size` symbols: lowercase letters while they suffice, bytes
/// from 0 upwards otherwise.
pub fn alphabet(size: usize) -> Vec<u8> {
    assert!((1..=256).contains(&size), "alphabet size out of range");
    if size <= 26 {
        (b'a'..b'a' + size as u8).collect()
    } else {
        (0..size).map(|c| c as u8).collect()
    }
}

pub fn gen_string<R: Rng>(rng: &mut R, alphabet: &[u8], len: usize) -> Vec<u8> {
    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

/// Random parse tree with `leaves` character leaves; all three operators
/// and nested stars occur.
pub fn gen_tree<R: Rng>(rng: &mut R, alphabet: &[u8], leaves: usize) -> ParseTree {
    assert!(leaves >= 1);
    let mut b = ParseTree::builder();
    // explicit stack: (leaves, wrap in star) pending, then combine
    enum Task {
        Build(usize),
        Combine(Label, bool),
        Star,
    }
    let mut tasks = vec![Task::Build(leaves)];
    let mut built: Vec<usize> = Vec::new();
    let top_level = leaves == 1;
    while let Some(task) = tasks.pop() {
        match task {
            Task::Build(1) => {
                let leaf = b.char(*alphabet.choose(rng).unwrap());
                built.push(leaf);
                if !top_level && rng.gen_bool(0.2) {
                    tasks.push(Task::Star);
                }
            }
            Task::Build(n) => {
                let left = rng.gen_range(1..n);
                let op = if rng.gen_bool(0.5) {
                    Label::Cat
                } else {
                    Label::Union
                };
                tasks.push(Task::Combine(op, rng.gen_bool(0.15)));
                tasks.push(Task::Build(n - left));
                tasks.push(Task::Build(left));
            }
            Task::Combine(op, star) => {
                let r = built.pop().unwrap();
                let l = built.pop().unwrap();
                let v = if op == Label::Cat {
                    b.cat(l, r)
                } else {
                    b.union(l, r)
                };
                built.push(v);
                if star {
                    tasks.push(Task::Star);
                }
            }
            Task::Star => {
                let c = built.pop().unwrap();
                let v = b.star(c);
                built.push(v);
            }
        }
    }
    let root = built.pop().unwrap();
    b.finish(root)
}

/// Pattern text with as few parentheses as precedence allows.
pub fn print_compact(tree: &ParseTree) -> Vec<u8> {
    fn prec(l: Label) -> u8 {
        match l {
            Label::Union => 0,
            Label::Cat => 1,
            Label::Star => 2,
            Label::Char(_) => 3,
        }
    }
    enum Item {
        Node(usize, u8),
        Text(&'static [u8]),
    }
    let mut out = Vec::new();
    let mut stack = vec![Item::Node(tree.root(), 0)];
    while let Some(item) = stack.pop() {
        let (v, min) = match item {
            Item::Text(t) => {
                out.extend_from_slice(t);
                continue;
            }
            Item::Node(v, min) => (v, min),
        };
        let label = tree.label(v);
        let paren = prec(label) < min;
        if paren {
            out.push(b'(');
            stack.push(Item::Text(b")"));
        }
        let ch = tree.children(v);
        match label {
            Label::Char(c) => {
                if is_meta(c) {
                    out.push(b'\\');
                }
                out.push(c);
            }
            // left-associative: the right operand needs strictly higher precedence
            Label::Union => {
                stack.push(Item::Node(ch[1], 1));
                stack.push(Item::Text(b"|"));
                stack.push(Item::Node(ch[0], 0));
            }
            Label::Cat => {
                stack.push(Item::Node(ch[1], 2));
                stack.push(Item::Node(ch[0], 1));
            }
            Label::Star => {
                stack.push(Item::Text(b"*"));
                stack.push(Item::Node(ch[0], 3));
            }
        }
    }
    out
}

/// Random pattern over `alphabet` with exactly `leaves` characters.
pub fn gen_regex<R: Rng>(rng: &mut R, alphabet: &[u8], leaves: usize) -> Vec<u8> {
    print_compact(&gen_tree(rng, alphabet, leaves))
}

/// Random pattern of at most `max_len` bytes.
pub fn gen_regex_within<R: Rng>(rng: &mut R, alphabet: &[u8], max_len: usize) -> Vec<u8> {
    assert!(max_len >= 2, "room for at least one escaped character");
    loop {
        let leaves = rng.gen_range(1..=(max_len / 2).max(1));
        let p = gen_regex(rng, alphabet, leaves);
        if p.len() <= max_len {
            return p;
        }
    }
}

/// Random member of the language: unions pick a branch, stars repeat up to
/// twice, and no star repeats once `soft_len` characters are out.
pub fn sample_member<R: Rng>(rng: &mut R, tree: &ParseTree, soft_len: usize) -> Vec<u8> {
    let mut out = Vec::new();
    let mut stack = vec![tree.root()];
    while let Some(v) = stack.pop() {
        let ch = tree.children(v);
        match tree.label(v) {
            Label::Char(c) => out.push(c),
            Label::Cat => {
                stack.push(ch[1]);
                stack.push(ch[0]);
            }
            Label::Union => stack.push(ch[rng.gen_range(0..2)]),
            Label::Star => {
                let reps = if out.len() >= soft_len {
                    0
                } else {
                    rng.gen_range(0..=2)
                };
                stack.extend(std::iter::repeat_n(ch[0], reps));
            }
        }
    }
    out
}

/// Every string of the language of length at most `max_len`, spelled by a
/// depth-first walk over node sets of the automaton.
pub fn enumerate_language(pattern: impl AsRef<[u8]>, max_len: usize) -> Result<BTreeSet<Vec<u8>>> {
    if max_len > MAX_ENUM_LEN {
        return Err(Error::LimitExceeded {
            limit: MAX_ENUM_LEN,
        });
    }
    let tree = parse(pattern)?;
    let nfa = build_nfa(&tree);
    let sigma = tree.alphabet();
    let mut out = BTreeSet::new();
    let mut visited = 0usize;
    let mut stack = vec![(nfa.initial_set(), Vec::new())];
    while let Some((set, word)) = stack.pop() {
        visited += 1;
        if visited > ENUM_CAP {
            return Err(Error::LimitExceeded { limit: ENUM_CAP });
        }
        if set[nfa.accept()] {
            out.insert(word.clone());
        }
        if word.len() == max_len {
            continue;
        }
        for &c in &sigma {
            let mut next = nfa.move_set(&set, c);
            if next.iter().any(|&b| b) {
                nfa.close_set(&mut next);
                let mut w = word.clone();
                w.push(c);
                stack.push((next, w));
            }
        }
    }
    Ok(out)
}

/// Approximate membership by enumerating the language up to `|q| + d` and
/// taking the smallest edit distance.
pub fn approx_bruteforce(pattern: impl AsRef<[u8]>, q: &[u8], d: usize) -> Result<bool> {
    let words = enumerate_language(pattern, q.len() + d)?;
    Ok(words.iter().any(|w| edit_distance_naive(w, q) <= d))
}

/// Random text over `alphabet` and query, half of the queries drawn as
/// subsequences of the text.
pub fn gen_subseq_case<R: Rng, T: Copy>(
    rng: &mut R,
    alphabet: &[T],
    text_len: usize,
    query_len: usize,
) -> (Vec<T>, Vec<T>) {
    let text: Vec<T> = (0..text_len)
        .map(|_| *alphabet.choose(rng).unwrap())
        .collect();
    let q = gen_subseq_query(rng, alphabet, &text, query_len);
    (text, q)
}

pub fn gen_subseq_query<R: Rng, T: Copy>(
    rng: &mut R,
    alphabet: &[T],
    text: &[T],
    query_len: usize,
) -> Vec<T> {
    if rng.gen_bool(0.5) && !text.is_empty() {
        let mut picks: Vec<usize> = (0..query_len.min(text.len()))
            .map(|_| rng.gen_range(0..text.len()))
            .collect();
        picks.sort_unstable();
        let mut q: Vec<T> = picks.iter().map(|&i| text[i]).collect();
        // occasionally break it with one random symbol
        if rng.gen_bool(0.3) && !q.is_empty() {
            let i = rng.gen_range(0..q.len());
            q[i] = *alphabet.choose(rng).unwrap();
        }
        q
    } else {
        (0..query_len)
            .map(|_| *alphabet.choose(rng).unwrap())
            .collect()
    }
}

/// `n` distinct symbols drawn from a large integer alphabet.
pub fn wide_alphabet(n: usize) -> Vec<u32> {
    let mut seen = HashSet::new();
    (0u32..)
        .map(|i| i.wrapping_mul(2_654_435_761))
        .filter(|x| seen.insert(*x))
        .take(n)
        .collect()
}
