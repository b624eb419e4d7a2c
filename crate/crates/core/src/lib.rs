//! String matching on the word RAM.
//!
//! Four problems, each with a tabulated ("Four Russians") engine and a
//! plain reference implementation used as an oracle:
//!
//! - [`matcher`]: regular expression membership via a decomposition of the
//!   Thompson automaton into small subautomata whose transitions are looked
//!   up in tables shared between subautomata of the same shape.
//! - [`approx`]: approximate regular expression matching (is the query within
//!   edit distance `d` of the language?) using the same decomposition.
//! - [`editdist`]: string edit distance with an alphabet-independent cell
//!   encoding.
//! - [`subseq`]: subsequence indexing with three space/time trade-offs.

pub mod approx;
pub mod decomposition;
pub mod editdist;
mod error;
pub mod matcher;
pub mod nfa;
pub mod oracles;
pub mod regex_ast;
pub mod subseq;
pub mod tables;

pub use approx::{amatch, approx_dp_naive, ApproxRegex};
pub use editdist::{edit_distance_4r, edit_distance_naive};
pub use error::{Error, Result, SyntaxError, SyntaxErrorKind};
pub use matcher::{is_match, CompiledRegex};
pub use nfa::Nfa;
pub use regex_ast::{parse, ParseTree};
pub use subseq::{Engine, SubseqIndex};

/// Default table budget exponent: tables use at most `2^DEFAULT_K` words.
pub const DEFAULT_K: u32 = 24;

/// Smallest accepted table budget exponent.
pub const MIN_K: u32 = 16;

/// Machine word size in bits; every bitvector handled in constant time fits one.
pub const WORD_BITS: u32 = u64::BITS;
