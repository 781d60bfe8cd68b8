//! LCS alignment oracles.
//!
//! Both return, for each old character, the index it is copied to in the new
//! text. The chosen alignment is the optimal edit script that is smallest
//! when read left to right with `copy < delete < insert`.

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Op {
    Copy,
    Delete,
    Insert,
}

/// Full quadratic table of suffix LCS lengths.
pub fn suffix_table<T: PartialEq>(a: &[T], b: &[T]) -> Vec<Vec<u32>> {
    let (n, m) = (a.len(), b.len());
    let mut l = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            l[i][j] = if a[i] == b[j] {
                l[i + 1][j + 1] + 1
            } else {
                l[i + 1][j].max(l[i][j + 1])
            };
        }
    }
    l
}

pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    suffix_table(a, b)[0][0] as usize
}

/// Walks the full table choosing the smallest step that keeps the script
/// optimal.
pub fn dp_alignment<T: PartialEq>(a: &[T], b: &[T]) -> Vec<Option<usize>> {
    let l = suffix_table(a, b);
    let mut map = vec![None; a.len()];
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] == b[j] && l[i][j] == l[i + 1][j + 1] + 1 {
            map[i] = Some(j);
            i += 1;
            j += 1;
        } else if l[i + 1][j] == l[i][j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    map
}

pub fn script_to_map(script: &[Op], old_len: usize) -> Vec<Option<usize>> {
    let mut map = vec![None; old_len];
    let (mut i, mut j) = (0, 0);
    for op in script {
        match op {
            Op::Copy => {
                map[i] = Some(j);
                i += 1;
                j += 1;
            }
            Op::Delete => i += 1,
            Op::Insert => j += 1,
        }
    }
    map
}

/// Enumerates every edit script. Exponential; keep inputs to a handful of
/// characters.
pub fn brute_force_alignment<T: PartialEq>(a: &[T], b: &[T]) -> Vec<Option<usize>> {
    fn walk<T: PartialEq>(
        a: &[T],
        b: &[T],
        i: usize,
        j: usize,
        script: &mut Vec<Op>,
        best: &mut Option<(usize, Vec<Op>)>,
    ) {
        if i == a.len() && j == b.len() {
            let copies = script.iter().filter(|&&o| o == Op::Copy).count();
            let better = match best {
                None => true,
                Some((c, s)) => copies > *c || (copies == *c && script.as_slice() < s.as_slice()),
            };
            if better {
                *best = Some((copies, script.clone()));
            }
            return;
        }
        if i < a.len() && j < b.len() && a[i] == b[j] {
            script.push(Op::Copy);
            walk(a, b, i + 1, j + 1, script, best);
            script.pop();
        }
        if i < a.len() {
            script.push(Op::Delete);
            walk(a, b, i + 1, j, script, best);
            script.pop();
        }
        if j < b.len() {
            script.push(Op::Insert);
            walk(a, b, i, j + 1, script, best);
            script.pop();
        }
    }
    let mut best = None;
    walk(a, b, 0, 0, &mut Vec::new(), &mut best);
    let (_, script) = best.expect("at least one script");
    script_to_map(&script, a.len())
}

/// Where an anchor at `offset` should land: the copy target of its
/// character, or `None` when that character is deleted.
pub fn expected_remap(old: &str, new: &str, offset: usize) -> Option<usize> {
    let a: Vec<char> = old.chars().collect();
    let b: Vec<char> = new.chars().collect();
    dp_alignment(&a, &b).get(offset).copied().flatten()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn table_walk_agrees_with_enumeration() {
        let mut rng = crate::rng(7);
        for _ in 0..400 {
            let n = rng.gen_range(0..6);
            let m = rng.gen_range(0..6);
            let a: Vec<char> = (0..n).map(|_| rng.gen_range(b'a'..b'd') as char).collect();
            let b: Vec<char> = (0..m).map(|_| rng.gen_range(b'a'..b'd') as char).collect();
            assert_eq!(dp_alignment(&a, &b), brute_force_alignment(&a, &b), "{a:?} {b:?}");
        }
    }

    #[test]
    fn leftmost_copy_wins() {
        let a: Vec<char> = "a".chars().collect();
        let b: Vec<char> = "aa".chars().collect();
        assert_eq!(dp_alignment(&a, &b), vec![Some(0)]);
        let a: Vec<char> = "ab".chars().collect();
        let b: Vec<char> = "ba".chars().collect();
        // copy of 'a' would need insert first; delete < insert keeps 'b'
        assert_eq!(dp_alignment(&a, &b), vec![None, Some(0)]);
    }
}
