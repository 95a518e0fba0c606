//! Ratcliff/Obershelp gestalt similarity.
//!
//! Matching blocks are found the same way as Python's
//! `difflib.SequenceMatcher` without junk heuristics: the longest common
//! block is taken first (earliest in `a`, then earliest in `b`), and the
//! regions on either side are searched recursively.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

/// Longest common block within `a[alo..ahi]` and `b[blo..bhi]` as
/// `(i, j, len)`.
fn longest_match(
    a: &[char],
    b: &[char],
    b2j: &BTreeMap<char, Vec<usize>>,
    alo: usize,
    ahi: usize,
    blo: usize,
    bhi: usize,
) -> (usize, usize, usize) {
    let (mut best_i, mut best_j, mut best_len) = (alo, blo, 0usize);
    // j2len[j + 1] = length of the block ending at a[i - 1], b[j].
    let mut j2len = vec![0usize; b.len() + 1];
    let mut next = vec![0usize; b.len() + 1];
    for (i, ch) in a.iter().enumerate().take(ahi).skip(alo) {
        let mut touched: Vec<usize> = Vec::new();
        if let Some(js) = b2j.get(ch) {
            for &j in js {
                if j < blo {
                    continue;
                }
                if j >= bhi {
                    break;
                }
                let k = j2len[j] + 1;
                next[j + 1] = k;
                touched.push(j + 1);
                if k > best_len {
                    best_i = i + 1 - k;
                    best_j = j + 1 - k;
                    best_len = k;
                }
            }
        }
        for slot in j2len.iter_mut() {
            *slot = 0;
        }
        for t in touched {
            j2len[t] = next[t];
            next[t] = 0;
        }
    }
    (best_i, best_j, best_len)
}

/// Matching blocks `(i, j, len)` in increasing order, adjacent blocks merged.
pub fn matching_blocks(a: &str, b: &str) -> Vec<(usize, usize, usize)> {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut b2j: BTreeMap<char, Vec<usize>> = BTreeMap::new();
    for (j, ch) in b.iter().enumerate() {
        b2j.entry(*ch).or_default().push(j);
    }
    let mut queue = vec![(0, a.len(), 0, b.len())];
    let mut blocks = Vec::new();
    while let Some((alo, ahi, blo, bhi)) = queue.pop() {
        let (i, j, k) = longest_match(&a, &b, &b2j, alo, ahi, blo, bhi);
        if k > 0 {
            blocks.push((i, j, k));
            if alo < i && blo < j {
                queue.push((alo, i, blo, j));
            }
            if i + k < ahi && j + k < bhi {
                queue.push((i + k, ahi, j + k, bhi));
            }
        }
    }
    blocks.sort_unstable();
    let mut merged: Vec<(usize, usize, usize)> = Vec::with_capacity(blocks.len());
    for (i, j, k) in blocks {
        match merged.last_mut() {
            Some(last) if last.0 + last.2 == i && last.1 + last.2 == j => last.2 += k,
            _ => merged.push((i, j, k)),
        }
    }
    merged
}

/// `2·M / (|a| + |b|)`, with `M` the total length of the matching blocks.
/// Two empty strings score 1.0.
pub fn similarity_ratio(a: &str, b: &str) -> f64 {
    let total = a.chars().count() + b.chars().count();
    if total == 0 {
        return 1.0;
    }
    let matched: usize = matching_blocks(a, b).iter().map(|(_, _, k)| k).sum();
    2.0 * matched as f64 / total as f64
}
