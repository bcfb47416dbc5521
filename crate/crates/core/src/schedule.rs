//! Greedy adjacent-swap schedules and the bookkeeping of which families a
//! sequence of variable orderings exposes.
//!
//! A factor over ordering `[v1..vm]` solves every family whose parent set is
//! a prefix `{v1..vk}` and whose response sits after it. Swapping positions
//! `i` and `i+1` changes only the length-`i` prefix set, so each swap can
//! expose new families for at most one parent set. The greedy schedule for
//! `m` variables is built recursively from the one for `m-1`:
//!
//! ```text
//! S(2) = [1]
//! S(m) = S(m-1) ++ [m-1, m-2, .., 1] ++ [i+1 for i in S(m-1)]
//! ```
//!
//! and has length `2^m - m - 1`, the smallest possible.

use crate::error::{Error, Result};

/// Default ceiling on `m`. The score table has `m * 2^(m-1)` entries.
pub const DEFAULT_MAX_VARIABLES: usize = 25;

/// Parent sets are `u64` masks and positions are stored as bytes.
pub const ABSOLUTE_MAX_VARIABLES: usize = 63;

/// `2^m - m - 1`.
pub fn greedy_len(m: usize) -> u64 {
    (1u64 << m) - m as u64 - 1
}

/// Families with a non-empty parent set: `m * (2^(m-1) - 1)`.
pub fn family_count(m: usize) -> u64 {
    m as u64 * ((1u64 << (m - 1)) - 1)
}

/// Sequence of 1-based adjacent-swap positions for an `m`-variable ordering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapSchedule {
    m: usize,
    swaps: Vec<u8>,
}

impl SwapSchedule {
    pub fn new(m: usize, swaps: Vec<usize>) -> Result<Self> {
        if m > ABSOLUTE_MAX_VARIABLES {
            return Err(Error::LimitExceeded {
                m,
                limit: ABSOLUTE_MAX_VARIABLES,
            });
        }
        if let Some(&bad) = swaps.iter().find(|&&i| i == 0 || i >= m) {
            return Err(Error::InvalidPosition {
                position: bad,
                max: m.saturating_sub(1),
            });
        }
        Ok(SwapSchedule {
            m,
            swaps: swaps.into_iter().map(|i| i as u8).collect(),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.swaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.swaps.is_empty()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.swaps.iter().map(|&i| i as usize)
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Every position moved up by `d`, acting on an ordering of `m` variables.
    pub fn shifted(&self, d: usize, m: usize) -> Result<SwapSchedule> {
        SwapSchedule::new(m, self.iter().map(|i| i + d).collect())
    }

    /// First `len` swaps only.
    pub fn truncated(&self, len: usize) -> SwapSchedule {
        SwapSchedule {
            m: self.m,
            swaps: self.swaps[..len.min(self.swaps.len())].to_vec(),
        }
    }

    /// Rotation flops for walking the whole schedule.
    pub fn rotation_cost(&self) -> u64 {
        self.iter()
            .map(|i| crate::linalg::TriangularFactor::grc_flops(self.m, i))
            .sum()
    }
}

pub fn greedy_swaps(m: usize) -> Result<SwapSchedule> {
    greedy_swaps_with_limit(m, DEFAULT_MAX_VARIABLES)
}

pub fn greedy_swaps_with_limit(m: usize, limit: usize) -> Result<SwapSchedule> {
    let limit = limit.min(ABSOLUTE_MAX_VARIABLES);
    if m > limit {
        return Err(Error::LimitExceeded { m, limit });
    }
    if m < 2 {
        return Err(Error::InvalidDataset(format!(
            "a schedule needs at least 2 variables, got {m}"
        )));
    }
    let mut swaps: Vec<u8> = Vec::with_capacity(greedy_len(m) as usize);
    swaps.push(1);
    for size in 3..=m {
        let prev = swaps.len();
        swaps.extend((1..size as u8).rev());
        swaps.extend_from_within(..prev);
        swaps[prev + size - 1..].iter_mut().for_each(|i| *i += 1);
    }
    Ok(SwapSchedule { m, swaps })
}

/// A (response, parent set) pair. Variables are 0-based; bit `v` of
/// `parents` is set when variable `v` is a parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FamilyKey {
    pub response: usize,
    pub parents: u64,
}

impl FamilyKey {
    pub fn new(response: usize, parents: u64) -> Result<Self> {
        if response >= ABSOLUTE_MAX_VARIABLES || parents & (1 << response) != 0 {
            return Err(Error::InvalidDataset(format!(
                "response {response} cannot be its own parent ({parents:#b})"
            )));
        }
        Ok(FamilyKey { response, parents })
    }

    pub fn nparents(&self) -> usize {
        self.parents.count_ones() as usize
    }

    /// Parent ids in ascending order.
    pub fn parent_ids(&self) -> impl Iterator<Item = usize> {
        let mask = self.parents;
        (0..64).filter(move |v| mask & (1 << v) != 0)
    }
}

pub fn mask_of(vars: &[usize]) -> u64 {
    vars.iter().fold(0, |acc, &v| acc | 1 << v)
}

/// Dense bitset over all `m * 2^(m-1)` families, empty parent sets included.
///
/// Family `(y, S)` lives at `y * 2^(m-1) + rank(S)`, where `rank` drops bit
/// `y` from the mask. Index order equals (response, mask) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageTracker {
    m: usize,
    words: Vec<u64>,
    count: u64,
}

impl CoverageTracker {
    pub fn new(m: usize) -> Self {
        let cap = Self::capacity_for(m);
        CoverageTracker {
            m,
            words: vec![0; cap.div_ceil(64) as usize],
            count: 0,
        }
    }

    pub fn capacity_for(m: usize) -> u64 {
        (m as u64) << (m - 1)
    }

    pub fn capacity(&self) -> u64 {
        Self::capacity_for(self.m)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    #[inline]
    pub fn index(m: usize, key: FamilyKey) -> usize {
        let low = key.parents & ((1u64 << key.response) - 1);
        let high = key.parents >> (key.response + 1);
        let rank = low | (high << key.response);
        (key.response << (m - 1)) | rank as usize
    }

    /// Inverse of [`index`](Self::index).
    pub fn key_at(m: usize, index: usize) -> FamilyKey {
        let response = index >> (m - 1);
        let rank = (index & ((1usize << (m - 1)) - 1)) as u64;
        let low = rank & ((1u64 << response) - 1);
        let high = rank >> response;
        FamilyKey {
            response,
            parents: low | (high << (response + 1)),
        }
    }

    pub fn contains(&self, key: FamilyKey) -> bool {
        let idx = Self::index(self.m, key);
        self.words[idx / 64] & (1 << (idx % 64)) != 0
    }

    /// Marks `key`; returns whether it was new.
    pub fn insert(&mut self, key: FamilyKey) -> bool {
        let idx = Self::index(self.m, key);
        let word = &mut self.words[idx / 64];
        let bit = 1 << (idx % 64);
        if *word & bit != 0 {
            return false;
        }
        *word |= bit;
        self.count += 1;
        true
    }
}

/// Every family readable from one factor: `m(m-1)/2` keys.
pub fn models_of_permutation(order: &[usize]) -> Vec<FamilyKey> {
    let m = order.len();
    let mut keys = Vec::with_capacity(m * m.saturating_sub(1) / 2);
    let mut prefix = 0u64;
    for k in 1..m {
        prefix |= 1 << order[k - 1];
        keys.extend(order[k..].iter().map(|&response| FamilyKey {
            response,
            parents: prefix,
        }));
    }
    keys
}

/// Unsolved families exposed by a swap at 1-based position `i`; `order`
/// is the ordering after the swap. Does not mark anything.
pub fn new_models_after_swap(
    order: &[usize],
    i: usize,
    tracker: &CoverageTracker,
) -> Vec<FamilyKey> {
    let prefix = mask_of(&order[..i]);
    order[i..]
        .iter()
        .map(|&response| FamilyKey {
            response,
            parents: prefix,
        })
        .filter(|&key| !tracker.contains(key))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coverage {
    pub covered: u64,
    pub total: u64,
    pub complete: bool,
}

/// Walks `schedule` from the identity ordering and counts distinct families.
pub fn verify_coverage(m: usize, schedule: &SwapSchedule) -> Coverage {
    let mut tracker = CoverageTracker::new(m);
    for order in visited_orders(m, schedule) {
        for key in models_of_permutation(&order) {
            tracker.insert(key);
        }
    }
    let total = family_count(m);
    Coverage {
        covered: tracker.count(),
        total,
        complete: tracker.count() == total,
    }
}

/// Orderings visited by `schedule` starting from the identity, start included.
pub fn visited_orders(m: usize, schedule: &SwapSchedule) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..m).collect();
    let mut out = Vec::with_capacity(schedule.len() + 1);
    out.push(order.clone());
    for i in schedule.iter() {
        order.swap(i - 1, i);
        out.push(order.clone());
    }
    out
}
