//! Character-level longest-common-subsequence alignment.
//!
//! Among all optimal alignments the one returned is the lexicographically
//! smallest edit script read left to right with `copy < delete < insert`:
//! equal characters are copied as soon as they meet, and when neither a copy
//! is possible the old character is consumed first if that stays optimal.
//!
//! The search is a backward dynamic program restricted to the diagonal band
//! that optimal paths can occupy, after the width of that band is measured with
//! Myers' O(ND) distance. Inputs whose band would exceed the cell budget are
//! aligned line by line first and then character by character inside each
//! changed block.

const CELL_BUDGET: usize = 16 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Copy,
    Delete,
    Insert,
}

/// For each character of `old`, the index it was copied to in `new`, or
/// `None` when the edit script deletes it.
pub fn align_chars(old: &[char], new: &[char]) -> Vec<Option<usize>> {
    align_with_budget(old, new, CELL_BUDGET)
}

pub(crate) fn align_with_budget(old: &[char], new: &[char], budget: usize) -> Vec<Option<usize>> {
    match exact(old, new, budget) {
        Some(map) => map,
        None => by_lines(old, new, budget),
    }
}

fn exact<T: PartialEq>(old: &[T], new: &[T], budget: usize) -> Option<Vec<Option<usize>>> {
    let mut map = vec![None; old.len()];
    let prefix = old.iter().zip(new).take_while(|(a, b)| a == b).count();
    for (i, slot) in map.iter_mut().enumerate().take(prefix) {
        *slot = Some(i);
    }
    let a = &old[prefix..];
    let b = &new[prefix..];
    if a.is_empty() || b.is_empty() {
        return Some(map);
    }
    let (n, m) = (a.len(), b.len());
    let max_d = (budget / n).saturating_sub(1);
    let distance = edit_distance(a, b, max_d)?;
    let lcs = (n + m - distance) / 2;
    let kmin = -((m - lcs) as isize);
    let width = distance + 1;
    let steps = banded_steps(a, b, kmin, width);

    let (mut i, mut j) = (0usize, 0usize);
    while i < n && j < m {
        let idx = (i as isize - j as isize - kmin) as usize;
        debug_assert!(idx < width);
        match steps[i * width + idx] {
            Step::Copy => {
                map[prefix + i] = Some(prefix + j);
                i += 1;
                j += 1;
            }
            Step::Delete => i += 1,
            Step::Insert => j += 1,
        }
    }
    Some(map)
}

/// Myers' forward search for the insert/delete distance, giving up past `max_d`.
fn edit_distance<T: PartialEq>(a: &[T], b: &[T], max_d: usize) -> Option<usize> {
    let (n, m) = (a.len() as isize, b.len() as isize);
    let max = max_d.min(a.len() + b.len()) as isize;
    let offset = max + 1;
    let mut v = vec![0isize; (2 * max + 3) as usize];
    for d in 0..=max {
        let mut k = -d;
        while k <= d {
            let idx = (k + offset) as usize;
            let mut x = if k == -d || (k != d && v[idx - 1] < v[idx + 1]) {
                v[idx + 1]
            } else {
                v[idx - 1] + 1
            };
            let mut y = x - k;
            while x < n && y < m && y >= 0 && a[x as usize] == b[y as usize] {
                x += 1;
                y += 1;
            }
            v[idx] = x;
            if x >= n && y >= m {
                return Some(d as usize);
            }
            k += 2;
        }
    }
    None
}

/// Greedy step for every in-band cell, from suffix LCS lengths.
fn banded_steps<T: PartialEq>(a: &[T], b: &[T], kmin: isize, width: usize) -> Vec<Step> {
    const NEG: i64 = i64::MIN / 4;
    let (n, m) = (a.len(), b.len() as isize);
    let mut steps = vec![Step::Copy; n * width];
    let mut below = vec![NEG; width];
    let mut row = vec![NEG; width];

    for (idx, cell) in below.iter_mut().enumerate() {
        let j = n as isize - (kmin + idx as isize);
        if (0..=m).contains(&j) {
            *cell = 0;
        }
    }
    for i in (0..n).rev() {
        // ascending band index is descending j, so row[idx - 1] (= j + 1) is ready
        for idx in 0..width {
            let j = i as isize - (kmin + idx as isize);
            if !(0..=m).contains(&j) {
                row[idx] = NEG;
                continue;
            }
            if j == m {
                row[idx] = 0;
                continue;
            }
            let j = j as usize;
            let cell = &mut steps[i * width + idx];
            if a[i] == b[j] {
                row[idx] = below[idx] + 1;
                *cell = Step::Copy;
            } else {
                let delete = if idx + 1 < width { below[idx + 1] } else { NEG };
                let insert = if idx > 0 { row[idx - 1] } else { NEG };
                if delete >= insert {
                    row[idx] = delete;
                    *cell = Step::Delete;
                } else {
                    row[idx] = insert;
                    *cell = Step::Insert;
                }
            }
        }
        std::mem::swap(&mut below, &mut row);
    }
    steps
}

/// Common prefix and suffix only; the cheapest alignment that is still a
/// common subsequence.
fn prefix_suffix<T: PartialEq>(old: &[T], new: &[T]) -> Vec<Option<usize>> {
    let mut map = vec![None; old.len()];
    let prefix = old.iter().zip(new).take_while(|(a, b)| a == b).count();
    let room = old.len().min(new.len()) - prefix;
    let suffix = old
        .iter()
        .rev()
        .zip(new.iter().rev())
        .take(room)
        .take_while(|(a, b)| a == b)
        .count();
    for (i, slot) in map.iter_mut().enumerate().take(prefix) {
        *slot = Some(i);
    }
    for s in 1..=suffix {
        map[old.len() - s] = Some(new.len() - s);
    }
    map
}

fn line_starts(text: &[char]) -> Vec<usize> {
    let mut starts = vec![0];
    for (i, &c) in text.iter().enumerate() {
        if c == '\n' && i + 1 < text.len() {
            starts.push(i + 1);
        }
    }
    if text.is_empty() {
        starts.clear();
    }
    starts
}

fn lines<'a>(text: &'a [char], starts: &[usize]) -> Vec<&'a [char]> {
    starts
        .iter()
        .enumerate()
        .map(|(n, &s)| {
            let end = starts.get(n + 1).copied().unwrap_or(text.len());
            &text[s..end]
        })
        .collect()
}

fn by_lines(old: &[char], new: &[char], budget: usize) -> Vec<Option<usize>> {
    let old_starts = line_starts(old);
    let new_starts = line_starts(new);
    let old_lines = lines(old, &old_starts);
    let new_lines = lines(new, &new_starts);
    let line_map = exact(&old_lines, &new_lines, budget).unwrap_or_else(|| prefix_suffix(&old_lines, &new_lines));

    let mut map = vec![None; old.len()];
    let align_gap = |map: &mut Vec<Option<usize>>, old_range: (usize, usize), new_range: (usize, usize)| {
        let a = &old[old_range.0..old_range.1];
        let b = &new[new_range.0..new_range.1];
        let gap = exact(a, b, budget).unwrap_or_else(|| prefix_suffix(a, b));
        for (i, hit) in gap.into_iter().enumerate() {
            map[old_range.0 + i] = hit.map(|j| new_range.0 + j);
        }
    };

    let (mut old_pos, mut new_pos) = (0usize, 0usize);
    for (li, hit) in line_map.iter().enumerate() {
        let Some(lj) = *hit else { continue };
        let (os, ns) = (old_starts[li], new_starts[lj]);
        align_gap(&mut map, (old_pos, os), (new_pos, ns));
        let len = old_lines[li].len();
        for c in 0..len {
            map[os + c] = Some(ns + c);
        }
        old_pos = os + len;
        new_pos = ns + len;
    }
    align_gap(&mut map, (old_pos, old.len()), (new_pos, new.len()));
    map
}
