//! Independent reference implementations used to pin library behavior.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splashkit::diff::{apply_script, merge_segments, token_edit_script};

pub const ALPHABET: [&str; 5] = ["a", "b", "c", "d", "e"];

/// Textbook two-row Levenshtein distance.
pub fn levenshtein(a: &[&str], b: &[&str]) -> u32 {
    let mut prev: Vec<u32> = (0..=b.len() as u32).collect();
    for (i, x) in a.iter().enumerate() {
        let mut cur = vec![i as u32 + 1];
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + u32::from(x != y);
            cur.push(sub.min(prev[j + 1] + 1).min(cur[j] + 1));
        }
        prev = cur;
    }
    prev[b.len()]
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Last {
    Keep,
    Sub,
    Del,
    Ins,
}

/// Smallest (edits, segments) over all alignments, by memoized recursion
/// over suffixes.
pub fn min_edits_then_segments(a: &[&str], b: &[&str]) -> (u32, u32) {
    type Memo = Vec<Option<(u32, u32)>>;
    fn go(a: &[&str], b: &[&str], i: usize, j: usize, last: Last, memo: &mut Memo) -> (u32, u32) {
        if i == a.len() && j == b.len() {
            return (0, 0);
        }
        let slot = (i * (b.len() + 1) + j) * 4 + last as usize;
        if let Some(v) = memo[slot] {
            return v;
        }
        let step = |kind: Last, rest: (u32, u32)| (rest.0 + 1, rest.1 + u32::from(last != kind));
        let mut best = (u32::MAX, u32::MAX);
        if i < a.len() && j < b.len() {
            if a[i] == b[j] {
                best = best.min(go(a, b, i + 1, j + 1, Last::Keep, memo));
            } else {
                best = best.min(step(Last::Sub, go(a, b, i + 1, j + 1, Last::Sub, memo)));
            }
        }
        if i < a.len() {
            best = best.min(step(Last::Del, go(a, b, i + 1, j, Last::Del, memo)));
        }
        if j < b.len() {
            best = best.min(step(Last::Ins, go(a, b, i, j + 1, Last::Ins, memo)));
        }
        memo[slot] = Some(best);
        best
    }
    let mut memo = vec![None; (a.len() + 1) * (b.len() + 1) * 4];
    go(a, b, 0, 0, Last::Keep, &mut memo)
}

/// Every sequence over the alphabet of length at most `max_len`.
pub fn all_sequences(max_len: usize) -> Vec<Vec<&'static str>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for t in ALPHABET {
                let mut s2: Vec<&str> = s.clone();
                s2.push(t);
                next.push(s2);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

pub fn random_sequence(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<&'static str> {
    let len = rng.random_range(0..=max_len);
    (0..len)
        .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())])
        .collect()
}

/// Checks one pair; returns a description of the first disagreement.
pub fn check_pair(a: &[&str], b: &[&str]) -> Result<(), String> {
    let script = token_edit_script(a, b);
    let cost = script.len() as u32;
    let lev = levenshtein(a, b);
    if cost != lev {
        return Err(format!("{a:?} -> {b:?}: script cost {cost}, oracle {lev}"));
    }
    if apply_script(a, &script) != b {
        return Err(format!("{a:?} -> {b:?}: script does not reproduce the target"));
    }
    let segs = merge_segments(&script).len() as u32;
    let (_, min_segs) = min_edits_then_segments(a, b);
    if segs != min_segs {
        return Err(format!("{a:?} -> {b:?}: {segs} segments, oracle {min_segs}"));
    }
    let back = merge_segments(&token_edit_script(b, a)).len() as u32;
    if back != segs {
        return Err(format!("{a:?} <-> {b:?}: {segs} segments one way, {back} the other"));
    }
    Ok(())
}

pub struct OracleRun {
    pub exhaustive_pairs: usize,
    pub random_pairs: usize,
}

/// All pairs up to length 4, then `random` seeded pairs up to length 8.
pub fn run_diff_oracle(random: usize, seed: u64) -> Result<OracleRun, String> {
    let small = all_sequences(4);
    for a in &small {
        for b in &small {
            check_pair(a, b)?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random {
        let a = random_sequence(&mut rng, 8);
        let b = random_sequence(&mut rng, 8);
        check_pair(&a, &b)?;
    }
    Ok(OracleRun {
        exhaustive_pairs: small.len() * small.len(),
        random_pairs: random,
    })
}
