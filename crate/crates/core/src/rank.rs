//! Lexicographic ranking of partial permutations.
//!
//! A placement of `k` distinct items into `m` slots is the sequence of slot
//! numbers `locs[0..k]`. Its rank is the mixed-radix number whose `i`-th
//! digit counts the free slots below `locs[i]`, with radix `m - i`.

use arrayvec::ArrayVec;

pub const MAX_SLOTS: usize = 32;

/// Number of placements of `k` items into `m` slots: m! / (m - k)!.
pub fn partial_count(m: usize, k: usize) -> u64 {
    debug_assert!(k <= m);
    ((m - k + 1)..=m).fold(1u64, |acc, x| acc * x as u64)
}

pub fn rank_partial(locs: &[u8], m: usize) -> u64 {
    debug_assert!(m <= MAX_SLOTS);
    let mut used = 0u32;
    let mut rank = 0u64;
    for (i, &loc) in locs.iter().enumerate() {
        let below = (used & ((1u32 << loc) - 1)).count_ones() as u64;
        rank = rank * (m - i) as u64 + (loc as u64 - below);
        used |= 1 << loc;
    }
    rank
}

pub fn unrank_partial(mut index: u64, k: usize, m: usize) -> ArrayVec<u8, MAX_SLOTS> {
    let mut digits = [0u8; MAX_SLOTS];
    for i in (0..k).rev() {
        let radix = (m - i) as u64;
        digits[i] = (index % radix) as u8;
        index /= radix;
    }
    let mut used = 0u32;
    let mut locs = ArrayVec::new();
    for &d in &digits[..k] {
        // d-th free slot in increasing order
        let mut remaining = d;
        let mut slot = 0u8;
        loop {
            if used & (1 << slot) == 0 {
                if remaining == 0 {
                    break;
                }
                remaining -= 1;
            }
            slot += 1;
        }
        used |= 1 << slot;
        locs.push(slot);
    }
    locs
}

/// Parity of a permutation given as an image array (true = odd).
pub fn parity(perm: &[u8]) -> bool {
    let mut seen = 0u32;
    let mut odd = false;
    for start in 0..perm.len() {
        if seen & (1 << start) != 0 {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while seen & (1 << i) == 0 {
            seen |= 1 << i;
            i = perm[i] as usize;
            len += 1;
        }
        if len % 2 == 0 {
            odd = !odd;
        }
    }
    odd
}
