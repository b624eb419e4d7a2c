//! The `rammatch` command line: every matcher in the core crate behind one
//! binary, with a switch between the tabulated engines and the plain
//! reference implementations.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::{Deserialize, Serialize};

use rammatch::editdist::FourRussians;
use rammatch::nfa::build_nfa;
use rammatch::oracles::{
    alphabet, gen_string, gen_subseq_query, gen_tree, sample_member, FuzzConfig,
};
use rammatch::subseq::subsequence_naive;
use rammatch::{
    amatch, approx_dp_naive, edit_distance_4r, edit_distance_naive, parse, ApproxRegex,
    CompiledRegex, Engine as Layout, SubseqIndex, DEFAULT_K, MIN_K, WORD_BITS,
};

/// Largest `-d` every engine accepts: six-node subautomata (the finest
/// decomposition) with lanes wide enough for `d + 1` must still fit a word.
pub const MAX_DISTANCE: usize = 1022;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineKind {
    Tabulated,
    Naive,
}

#[derive(Debug, Parser)]
#[command(
    name = "rammatch",
    version,
    about = "Regular expression, approximate, edit distance and subsequence matching"
)]
pub struct Cli {
    /// Which implementation answers the query.
    #[arg(long, value_enum, default_value_t = EngineKind::Tabulated, global = true)]
    pub engine: EngineKind,

    /// Table budget: tables hold at most 2^k words.
    #[arg(short, default_value_t = DEFAULT_K, global = true,
          value_parser = clap::value_parser!(u32).range(MIN_K as i64..=WORD_BITS as i64))]
    pub k: u32,

    /// Print one JSON object instead of plain text.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Does the whole input belong to the pattern's language?
    Match {
        pattern: String,
        /// Literal text, `@path` for a file, or `@-` for stdin.
        input: String,
    },
    /// Is the input within edit distance `d` of some string in the language?
    Amatch {
        #[arg(short, value_parser = clap::value_parser!(u64).range(0..=MAX_DISTANCE as u64))]
        d: u64,
        pattern: String,
        input: String,
    },
    /// Edit distance between two strings.
    Editdist { s: String, t: String },
    /// Build or query a subsequence index.
    Subseq {
        #[command(subcommand)]
        action: SubseqAction,
    },
    /// Time both engines on generated inputs; prints one JSON row per run.
    Bench {
        #[arg(value_enum)]
        suite: Suite,
        /// Input size; each suite has its own default.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long, default_value_t = 0x00c0_ffee)]
        seed: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum SubseqAction {
    /// Index a text file.
    Index {
        text: PathBuf,
        #[arg(short)]
        o: PathBuf,
        #[arg(long, value_enum, default_value_t = LayoutArg::Hybrid)]
        layout: LayoutArg,
    },
    /// Is the query a subsequence of the indexed text?
    Query { index: PathBuf, query: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    Full,
    Successor,
    Hybrid,
}

impl From<LayoutArg> for Layout {
    fn from(l: LayoutArg) -> Self {
        match l {
            LayoutArg::Full => Layout::Full,
            LayoutArg::Successor => Layout::Successor,
            LayoutArg::Hybrid => Layout::Hybrid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Exact,
    Approx,
    Editdist,
    Subseq,
    All,
}

/// `--json` output of `match`, `amatch` and `subseq query`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchReport {
    pub command: String,
    pub matched: bool,
}

/// `--json` output of `editdist`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceReport {
    pub command: String,
    pub distance: usize,
}

/// `--json` output of `subseq index`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexReport {
    pub command: String,
    pub chars: usize,
    pub distinct: usize,
    pub layout: String,
    pub entries: usize,
}

/// One `bench` measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchRow {
    pub suite: String,
    pub engine: String,
    /// pattern tree nodes, first string length, or query length
    pub m: usize,
    /// text length or second string length
    pub n: usize,
    pub k: u32,
    pub ns_per_char: f64,
    /// table memory from the library's word counters, in bytes
    pub bytes: usize,
    /// whether `bytes` stays within 2^k words; absent for the subsequence
    /// indexes, whose size does not depend on k
    pub within_budget: Option<bool>,
    pub result: String,
}

/// Parse `args` (program name first), run, and return the exit code:
/// 0 for a match or success, 1 for no match, 2 for any error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            let text = e.to_string();
            let line = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments");
            let _ = writeln!(err, "{}", line.trim());
            return 2;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            2
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Match { pattern, input } => {
            let pattern = read_arg(pattern)?;
            let text = read_arg(input)?;
            let matched = match cli.engine {
                EngineKind::Tabulated => CompiledRegex::new(&pattern, cli.k)?.is_match(&text),
                EngineKind::Naive => build_nfa(&parse(&pattern)?).accepts_naive(&text),
            };
            report_match(cli, out, "match", matched)
        }
        Command::Amatch { d, pattern, input } => {
            let pattern = read_arg(pattern)?;
            let text = read_arg(input)?;
            let d = *d as usize;
            let matched = match cli.engine {
                EngineKind::Tabulated => amatch(&pattern, &text, d, cli.k)?,
                EngineKind::Naive => approx_dp_naive(&pattern, &text, d)?,
            };
            report_match(cli, out, "amatch", matched)
        }
        Command::Editdist { s, t } => {
            let s = read_arg(s)?;
            let t = read_arg(t)?;
            let distance = match cli.engine {
                EngineKind::Tabulated => edit_distance_4r(&s, &t, cli.k)?,
                EngineKind::Naive => edit_distance_naive(&s, &t),
            };
            if cli.json {
                emit_json(
                    out,
                    &DistanceReport {
                        command: "editdist".into(),
                        distance,
                    },
                )?;
            } else {
                writeln!(out, "{distance}")?;
            }
            Ok(0)
        }
        Command::Subseq {
            action: SubseqAction::Index { text, o, layout },
        } => {
            let text = read_file(text)?;
            let idx = SubseqIndex::build(&text, (*layout).into());
            let file =
                fs::File::create(o).with_context(|| format!("cannot create {}", o.display()))?;
            let mut w = io::BufWriter::new(file);
            idx.write_to(&mut w)?;
            w.flush()?;
            let report = IndexReport {
                command: "subseq index".into(),
                chars: idx.text_len(),
                distinct: idx.sigma(),
                layout: idx.engine().to_string(),
                entries: idx.entries(),
            };
            if cli.json {
                emit_json(out, &report)?;
            } else {
                writeln!(
                    out,
                    "indexed {} chars, {} distinct, {} layout, {} entries",
                    report.chars, report.distinct, report.layout, report.entries
                )?;
            }
            Ok(0)
        }
        Command::Subseq {
            action: SubseqAction::Query { index, query },
        } => {
            let bytes =
                fs::read(index).with_context(|| format!("cannot read {}", index.display()))?;
            let idx = SubseqIndex::<u8>::read_from(bytes.as_slice())
                .with_context(|| format!("{} is not a subsequence index", index.display()))?;
            let q = read_arg(query)?;
            let matched = match cli.engine {
                EngineKind::Tabulated => idx.query(&q),
                EngineKind::Naive => subsequence_naive(&idx.text(), &q),
            };
            report_match(cli, out, "subseq query", matched)
        }
        Command::Bench { suite, size, seed } => {
            let suites: &[Suite] = match suite {
                Suite::All => &[Suite::Exact, Suite::Approx, Suite::Editdist, Suite::Subseq],
                one => std::slice::from_ref(one),
            };
            for &s in suites {
                for row in bench(s, *size, *seed, cli.k)? {
                    emit_json(out, &row)?;
                }
            }
            Ok(0)
        }
    }
}

fn report_match(cli: &Cli, out: &mut dyn Write, command: &str, matched: bool) -> Result<i32> {
    if cli.json {
        emit_json(
            out,
            &MatchReport {
                command: command.into(),
                matched,
            },
        )?;
    } else {
        writeln!(out, "{}", if matched { "match" } else { "no match" })?;
    }
    Ok(if matched { 0 } else { 1 })
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

/// `@path` reads a file, `@-` reads stdin, anything else is taken literally.
/// One trailing newline is dropped from file and stdin contents.
fn read_arg(arg: &str) -> Result<Vec<u8>> {
    match arg.strip_prefix('@') {
        Some("-") => {
            let mut buf = Vec::new();
            io::stdin()
                .read_to_end(&mut buf)
                .context("cannot read stdin")?;
            Ok(chomp(buf))
        }
        Some(path) => read_file(Path::new(path)),
        None => Ok(arg.as_bytes().to_vec()),
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let buf = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(chomp(buf))
}

fn chomp(mut buf: Vec<u8>) -> Vec<u8> {
    if buf.last() == Some(&b'\n') {
        buf.pop();
        if buf.last() == Some(&b'\r') {
            buf.pop();
        }
    }
    buf
}

fn bench(suite: Suite, size: Option<usize>, seed: u64, k: u32) -> Result<Vec<BenchRow>> {
    let config = FuzzConfig {
        seed,
        ..FuzzConfig::default()
    };
    let mut rng = config.rng(suite as u64);
    let budget = 1usize << k.min(63);
    let row = |engine: &str,
               m: usize,
               n: usize,
               chars: usize,
               elapsed: f64,
               words: usize,
               result: String| BenchRow {
        suite: format!("{suite:?}").to_lowercase(),
        engine: engine.into(),
        m,
        n,
        k,
        ns_per_char: elapsed * 1e9 / chars.max(1) as f64,
        bytes: words * 8,
        within_budget: (suite != Suite::Subseq).then_some(words <= budget),
        result,
    };
    let mut rows = Vec::new();
    match suite {
        Suite::Exact | Suite::Approx => {
            let exact = suite == Suite::Exact;
            let size = size.unwrap_or(if exact { 10_000 } else { 1_000 });
            let sigma = alphabet(2);
            let inner = gen_tree(&mut rng, &sigma, (size / 2).max(1));
            let mut pattern = b"(".to_vec();
            pattern.extend(rammatch::regex_ast::print(&inner));
            pattern.extend(b")*");
            let mut text = Vec::new();
            while text.len() < size {
                text.extend(sample_member(&mut rng, &inner, 64));
            }
            if !exact {
                // a few edits so the answer depends on the distance bound
                for _ in 0..2 {
                    let p = rng.gen_range(0..text.len());
                    text[p] ^= 1;
                }
            }
            let m = parse(&pattern)?.len();
            let n = text.len();
            if exact {
                let re = CompiledRegex::new(&pattern, k)?;
                let t0 = Instant::now();
                let naive = re.nfa().accepts_naive(&text);
                let naive_time = t0.elapsed().as_secs_f64();
                let t0 = Instant::now();
                let tab = re.is_match(&text);
                let tab_time = t0.elapsed().as_secs_f64();
                rows.push(row("naive", m, n, n, naive_time, 0, verdict(naive)));
                rows.push(row(
                    "tabulated",
                    m,
                    n,
                    n,
                    tab_time,
                    re.tables_words(),
                    verdict(tab),
                ));
            } else {
                let d = 2;
                let t0 = Instant::now();
                let naive = approx_dp_naive(&pattern, &text, d)?;
                let naive_time = t0.elapsed().as_secs_f64();
                let re = ApproxRegex::new(&pattern, d, k)?;
                let t0 = Instant::now();
                let tab = re.is_match(&text);
                let tab_time = t0.elapsed().as_secs_f64();
                rows.push(row("naive", m, n, n, naive_time, 0, verdict(naive)));
                rows.push(row(
                    "tabulated",
                    m,
                    n,
                    n,
                    tab_time,
                    re.tables_words(),
                    verdict(tab),
                ));
            }
        }
        Suite::Editdist => {
            let size = size.unwrap_or(2_000);
            let sigma = alphabet(4);
            let s = gen_string(&mut rng, &sigma, size);
            let t = gen_string(&mut rng, &sigma, size);
            let t0 = Instant::now();
            let naive = edit_distance_naive(&s, &t);
            let naive_time = t0.elapsed().as_secs_f64();
            let fr = FourRussians::new(k)?;
            let t0 = Instant::now();
            let tab = fr.distance(&s, &t);
            let tab_time = t0.elapsed().as_secs_f64();
            rows.push(row(
                "naive",
                size,
                size,
                size,
                naive_time,
                0,
                naive.to_string(),
            ));
            rows.push(row(
                "tabulated",
                size,
                size,
                size,
                tab_time,
                fr.cache_words(),
                tab.to_string(),
            ));
        }
        Suite::Subseq => {
            let size = size.unwrap_or(100_000);
            let sigma = alphabet(16);
            let text = gen_string(&mut rng, &sigma, size);
            let queries: Vec<Vec<u8>> = (0..200)
                .map(|_| gen_subseq_query(&mut rng, &sigma, &text, 50))
                .collect();
            let qchars: usize = queries.iter().map(Vec::len).sum();
            let t0 = Instant::now();
            let hits = queries
                .iter()
                .filter(|q| subsequence_naive(&text, q))
                .count();
            let naive_time = t0.elapsed().as_secs_f64();
            rows.push(row(
                "naive",
                50,
                size,
                qchars,
                naive_time,
                0,
                hits.to_string(),
            ));
            for layout in Layout::ALL {
                let idx = SubseqIndex::build(&text, layout);
                let t0 = Instant::now();
                let hits = queries.iter().filter(|q| idx.query(q)).count();
                let elapsed = t0.elapsed().as_secs_f64();
                let name = format!("tabulated-{layout}");
                rows.push(row(
                    &name,
                    50,
                    size,
                    qchars,
                    elapsed,
                    idx.entries(),
                    hits.to_string(),
                ));
            }
        }
        Suite::All => unreachable!("expanded by the caller"),
    }
    Ok(rows)
}

fn verdict(matched: bool) -> String {
    if matched { "match" } else { "no match" }.to_string()
}
