//! String edit distance.
//!
//! The tabulated algorithm splits the distance matrix into `x × x` cells.
//! A cell's interior depends only on which characters of its two substrings
//! are equal and on the differences along its top row and left column, each
//! of which is -1, 0 or +1. Characters are replaced by their rank among the
//! characters shared by both strings within a `xy × xy` macro cell (0 when
//! not shared), so the table is independent of the alphabet.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{check_budget, Result};

/// Levenshtein distance with one row of working space.
pub fn edit_distance_naive<T: PartialEq>(s: &[T], t: &[T]) -> usize {
    let (s, t) = if s.len() < t.len() { (t, s) } else { (s, t) };
    let mut row: Vec<usize> = (0..=t.len()).collect();
    for (i, a) in s.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, b) in t.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = (diag + usize::from(a != b)).min(up + 1).min(row[j] + 1);
            diag = up;
        }
    }
    row[t.len()]
}

/// Rank codes of two blocks: a character shared by both blocks gets its
/// 1-based rank among the shared characters, any other character gets 0.
pub fn encode_macro_cell<T: Ord + Copy>(s_block: &[T], t_block: &[T]) -> (Vec<u32>, Vec<u32>) {
    let mut sorted_s = s_block.to_vec();
    sorted_s.sort_unstable();
    sorted_s.dedup();
    let mut shared: Vec<T> = t_block
        .iter()
        .copied()
        .filter(|c| sorted_s.binary_search(c).is_ok())
        .collect();
    shared.sort_unstable();
    shared.dedup();
    let code = |c: &T| shared.binary_search(c).map_or(0, |r| r as u32 + 1);
    (
        s_block.iter().map(code).collect(),
        t_block.iter().map(code).collect(),
    )
}

/// Cell side `x` and macro factor `y` for budget `k`: `y = max(1,
/// ceil(k log2 k) / 16)` and `x` the largest value whose `2x` codes of
/// `ceil(log2(xy + 1))` bits fit in `k` bits.
pub fn cell_params(k: u32) -> (usize, usize) {
    let y = (((k as f64) * (k as f64).log2()).ceil() as usize / 16).max(1);
    let code_bits = |x: usize| usize::BITS as usize - (x * y).leading_zeros() as usize;
    let mut x = 1;
    while 2 * (x + 1) * code_bits(x + 1) <= k as usize {
        x += 1;
    }
    (x, y)
}

/// Table key of one cell: code vectors packed into `codes`, top and left
/// steps as base-3 digits in `steps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellKey {
    pub codes: u64,
    pub steps: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub table_cells: u64,
    pub direct_cells: u64,
    pub boundary_checks: u64,
    pub boundary_violations: u64,
}

#[derive(Debug)]
pub struct FourRussians {
    x: usize,
    y: usize,
    code_bits: u32,
    max_entries: usize,
    cache: Mutex<HashMap<CellKey, u32>>,
    stats: Mutex<Stats>,
}

fn step_digit(diff: i64) -> u32 {
    debug_assert!((-1..=1).contains(&diff));
    (diff + 1) as u32
}

impl FourRussians {
    pub fn new(k: u32) -> Result<Self> {
        check_budget(k)?;
        let (x, y) = cell_params(k);
        let code_bits = usize::BITS - (x * y).leading_zeros();
        Ok(FourRussians {
            x,
            y,
            code_bits,
            // one key word plus one value word per entry
            max_entries: (1usize << k) / 2,
            cache: Mutex::new(HashMap::new()),
            stats: Mutex::new(Stats::default()),
        })
    }

    pub fn x(&self) -> usize {
        self.x
    }

    pub fn y(&self) -> usize {
        self.y
    }

    pub fn stats(&self) -> Stats {
        *self.stats.lock().unwrap()
    }

    pub fn cache_keys(&self) -> Vec<CellKey> {
        self.cache.lock().unwrap().keys().copied().collect()
    }

    pub fn cache_words(&self) -> usize {
        self.cache.lock().unwrap().len() * 2
    }

    /// Splits a key back into its code vectors; every code is at most `xy`.
    pub fn decode_codes(&self, key: CellKey) -> (Vec<u32>, Vec<u32>) {
        let mask = (1u64 << self.code_bits) - 1;
        let all: Vec<u32> = (0..2 * self.x)
            .map(|i| (key.codes >> (i as u32 * self.code_bits) & mask) as u32)
            .collect();
        (all[..self.x].to_vec(), all[self.x..].to_vec())
    }

    pub fn max_code(&self) -> u32 {
        (self.x * self.y) as u32
    }

    pub fn distance<T: Ord + Copy>(&self, s: &[T], t: &[T]) -> usize {
        let (x, y) = (self.x, self.y);
        let (m, n) = (s.len(), t.len());
        let macro_len = x * y;
        let mut stats = Stats::default();
        // D values of the current band's top row
        let mut top: Vec<i64> = (0..=n as i64).collect();
        let mut codes_t: Vec<Vec<u32>> = Vec::new();
        let mut codes_s: Vec<Vec<u32>> = Vec::new();
        let mut i0 = 0;
        while i0 < m {
            let h = x.min(m - i0);
            if i0 % macro_len == 0 {
                let s_block = &s[i0..m.min(i0 + macro_len)];
                codes_s.clear();
                codes_t.clear();
                for j in (0..n).step_by(macro_len) {
                    let (cs, ct) = encode_macro_cell(s_block, &t[j..n.min(j + macro_len)]);
                    codes_s.push(cs);
                    codes_t.push(ct);
                }
            }
            let mut bottom = vec![0i64; n + 1];
            bottom[0] = (i0 + h) as i64;
            // left column of the current cell, D[i0..=i0+h][j0]
            let mut left: Vec<i64> = (i0..=i0 + h).map(|i| i as i64).collect();
            let mut j0 = 0;
            while j0 < n {
                let w = x.min(n - j0);
                let right = if h == x && w == x {
                    stats.table_cells += 1;
                    let mc = j0 / macro_len;
                    let si = i0 % macro_len;
                    let tj = j0 % macro_len;
                    let vs = &codes_s[mc][si..si + x];
                    let vt = &codes_t[mc][tj..tj + x];
                    self.table_cell(vs, vt, &top[j0..=j0 + x], &left, &mut bottom[j0..=j0 + x])
                } else {
                    stats.direct_cells += 1;
                    direct_cell(
                        &s[i0..i0 + h],
                        &t[j0..j0 + w],
                        &top[j0..=j0 + w],
                        &left,
                        &mut bottom[j0..=j0 + w],
                    )
                };
                left = right;
                j0 += w;
            }
            for pair in bottom.windows(2) {
                stats.boundary_checks += 1;
                if (pair[1] - pair[0]).abs() > 1 {
                    stats.boundary_violations += 1;
                }
            }
            debug_assert_eq!(stats.boundary_violations, 0);
            top = bottom;
            i0 += h;
        }
        let mut total = self.stats.lock().unwrap();
        total.table_cells += stats.table_cells;
        total.direct_cells += stats.direct_cells;
        total.boundary_checks += stats.boundary_checks;
        total.boundary_violations += stats.boundary_violations;
        top[n] as usize
    }

    /// Fills `bottom[1..]` and returns the right column, via the table.
    fn table_cell(
        &self,
        vs: &[u32],
        vt: &[u32],
        top: &[i64],
        left: &[i64],
        bottom: &mut [i64],
    ) -> Vec<i64> {
        let x = self.x;
        let mut codes = 0u64;
        for (i, &c) in vs.iter().chain(vt).enumerate() {
            codes |= u64::from(c) << (i as u32 * self.code_bits);
        }
        let mut steps = 0u32;
        for pair in top.windows(2).chain(left.windows(2)) {
            steps = steps * 3 + step_digit(pair[1] - pair[0]);
        }
        let key = CellKey { codes, steps };
        let cached = self.cache.lock().unwrap().get(&key).copied();
        let out = match cached {
            Some(v) => v,
            None => {
                let v = relative_cell(vs, vt, steps, x);
                let mut cache = self.cache.lock().unwrap();
                if cache.len() < self.max_entries {
                    cache.insert(key, v);
                }
                v
            }
        };
        // out holds bottom steps then right steps, most significant first
        let mut digits = vec![0i64; 2 * x];
        let mut rest = out;
        for d in digits.iter_mut().rev() {
            *d = (rest % 3) as i64 - 1;
            rest /= 3;
        }
        bottom[0] = left[x];
        for c in 0..x {
            bottom[c + 1] = bottom[c] + digits[c];
        }
        let mut right = vec![top[x]; x + 1];
        for r in 0..x {
            right[r + 1] = right[r] + digits[x + r];
        }
        debug_assert_eq!(right[x], bottom[x]);
        right
    }
}

/// Cell contents from codes and boundary steps alone, with the corner at 0.
fn relative_cell(vs: &[u32], vt: &[u32], steps: u32, x: usize) -> u32 {
    let mut digits = vec![0i64; 2 * x];
    let mut rest = steps;
    for d in digits.iter_mut().rev() {
        *d = (rest % 3) as i64 - 1;
        rest /= 3;
    }
    let mut top = vec![0i64; x + 1];
    let mut left = vec![0i64; x + 1];
    for c in 0..x {
        top[c + 1] = top[c] + digits[c];
        left[c + 1] = left[c] + digits[x + c];
    }
    let mut d = vec![vec![0i64; x + 1]; x + 1];
    d[0] = top;
    for (r, row) in d.iter_mut().enumerate() {
        row[0] = left[r];
    }
    for r in 1..=x {
        for c in 1..=x {
            let same = vs[r - 1] == vt[c - 1] && vs[r - 1] > 0;
            d[r][c] = (d[r - 1][c - 1] + i64::from(!same))
                .min(d[r - 1][c] + 1)
                .min(d[r][c - 1] + 1);
        }
    }
    let mut out = 0u32;
    for c in 0..x {
        out = out * 3 + step_digit(d[x][c + 1] - d[x][c]);
    }
    for r in 0..x {
        out = out * 3 + step_digit(d[r + 1][x] - d[r][x]);
    }
    out
}

/// Plain recurrence for a (possibly partial) cell; returns the right column.
fn direct_cell<T: PartialEq>(
    s: &[T],
    t: &[T],
    top: &[i64],
    left: &[i64],
    bottom: &mut [i64],
) -> Vec<i64> {
    let mut prev = top.to_vec();
    let mut right = vec![top[t.len()]];
    for (r, a) in s.iter().enumerate() {
        let mut cur = vec![left[r + 1]; t.len() + 1];
        for (c, b) in t.iter().enumerate() {
            cur[c + 1] = (prev[c] + i64::from(a != b))
                .min(prev[c + 1] + 1)
                .min(cur[c] + 1);
        }
        right.push(cur[t.len()]);
        prev = cur;
    }
    bottom.copy_from_slice(&prev);
    right
}

/// Tabulated edit distance with budget `2^k` words for the cell table.
pub fn edit_distance_4r<T: Ord + Copy>(s: &[T], t: &[T], k: u32) -> Result<usize> {
    Ok(FourRussians::new(k)?.distance(s, t))
}
