//! Splitting the sweep across `p = 2^b` independent workers.
//!
//! Worker `w` is identified by the `b`-bit binary code of `w` (most
//! significant bit first). The last `b` variables are pinned: variable `i`
//! (1-based, `i > m-b`) goes to the front of the seed ordering when bit
//! `m-i` is set and to the back otherwise. The `m-b` free variables sit in
//! between in ascending order, and the worker walks the greedy schedule for
//! `m-b` variables shifted past the `d` pinned front variables.

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::schedule::{
    family_count, greedy_swaps_with_limit, models_of_permutation, CoverageTracker, FamilyKey,
    SwapSchedule, ABSOLUTE_MAX_VARIABLES,
};
use crate::sweep::{
    empty_families, walk, FamilyResult, FlopLedger, ScoreTable, SweepOptions, SweepOutput,
};

/// Optional cap on worker threads.
pub const THREADS_ENV: &str = "GIVENS_SWEEP_THREADS";

/// Relative rss disagreement tolerated between workers covering the same family.
pub const MERGE_TOLERANCE: f64 = 1e-6;

/// Largest `m` for which [`build_partition`] re-checks joint coverage.
pub const PLAN_CHECK_MAX_M: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerPlan {
    pub bits: Vec<bool>,
    /// 0-based variable ids.
    pub seed_order: Vec<usize>,
    pub offset: usize,
    pub schedule: SwapSchedule,
}

impl WorkerPlan {
    /// Families this worker will expose, with multiplicity removed.
    pub fn covered(&self) -> CoverageTracker {
        let m = self.seed_order.len();
        let mut tracker = CoverageTracker::new(m);
        let mut order = self.seed_order.clone();
        for key in models_of_permutation(&order) {
            tracker.insert(key);
        }
        for i in self.schedule.iter() {
            order.swap(i - 1, i);
            for key in models_of_permutation(&order) {
                tracker.insert(key);
            }
        }
        tracker
    }
}

pub fn seed_path(bits: &[bool], m: usize) -> Result<WorkerPlan> {
    let b = bits.len();
    if m < 2 || b + 1 >= m {
        return Err(Error::TooManyWorkers { bits: b, m });
    }
    let k = m - b;
    let mut front = Vec::new();
    let mut seed: Vec<usize> = (0..k).collect();
    for i in k + 1..=m {
        if bits[m - i] {
            front.push(i - 1);
        } else {
            seed.push(i - 1);
        }
    }
    // each prepend lands in front of the previous ones
    front.reverse();
    front.extend(seed);
    let offset = bits.iter().filter(|&&bit| bit).count();
    let schedule = greedy_swaps_with_limit(k, ABSOLUTE_MAX_VARIABLES)?.shifted(offset, m)?;
    Ok(WorkerPlan {
        bits: bits.to_vec(),
        seed_order: front,
        offset,
        schedule,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionPlan {
    pub m: usize,
    pub workers: Vec<WorkerPlan>,
}

impl PartitionPlan {
    /// Number of distinct non-empty-parent families across all workers.
    pub fn joint_coverage(&self) -> u64 {
        let mut union = CoverageTracker::new(self.m);
        for worker in &self.workers {
            let covered = worker.covered();
            for idx in 0..covered.capacity() as usize {
                let key = CoverageTracker::key_at(self.m, idx);
                if covered.contains(key) {
                    union.insert(key);
                }
            }
        }
        union.count()
    }
}

pub fn build_partition(m: usize, p: usize) -> Result<PartitionPlan> {
    if p == 0 || !p.is_power_of_two() {
        return Err(Error::InvalidWorkerCount(p));
    }
    let b = p.trailing_zeros() as usize;
    let workers = (0..p)
        .map(|w| {
            let bits: Vec<bool> = (0..b).map(|t| (w >> (b - 1 - t)) & 1 == 1).collect();
            seed_path(&bits, m)
        })
        .collect::<Result<Vec<_>>>()?;
    let plan = PartitionPlan { m, workers };
    if m <= PLAN_CHECK_MAX_M {
        debug_assert_eq!(plan.joint_coverage(), family_count(m));
    }
    Ok(plan)
}

/// Worker threads to use: `p`, capped by [`THREADS_ENV`] when set.
pub fn thread_count(p: usize) -> usize {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&c| c > 0);
    cap.map_or(p, |c| c.min(p)).max(1)
}

/// Runs every worker of `plan` and merges in ascending worker order.
/// The first worker to report a family wins; later reports must agree.
pub fn parallel_sweep(
    data: &Dataset,
    plan: &PartitionPlan,
    opts: &SweepOptions,
) -> Result<SweepOutput> {
    if plan.m != data.m() {
        return Err(Error::InvalidDataset(format!(
            "plan for {} variables applied to {}",
            plan.m,
            data.m()
        )));
    }
    let run = |worker: &WorkerPlan| -> Result<(Vec<(FamilyKey, FamilyResult)>, FlopLedger)> {
        let mut found = Vec::new();
        let ledger = walk(data, &worker.seed_order, &worker.schedule, opts, |k, r| {
            found.push((k, r));
        })?;
        Ok((found, ledger))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(plan.workers.len()))
        .build()
        .map_err(|e| Error::InvalidDataset(format!("thread pool: {e}")))?;
    let partials: Vec<_> = pool.install(|| plan.workers.par_iter().map(run).collect());

    let mut table = ScoreTable::new(data.m(), data.n());
    let mut ledger = FlopLedger::default();
    for partial in partials {
        let (found, worker_ledger) = partial?;
        ledger.absorb(&worker_ledger);
        for (key, result) in found {
            if let Some(prev) = table.get(key) {
                let scale = prev.rss.abs().max(result.rss.abs()).max(f64::MIN_POSITIVE);
                if (prev.rss - result.rss).abs() > MERGE_TOLERANCE * scale {
                    return Err(Error::MergeConflict {
                        response: key.response,
                        parents: key.parents,
                        first: prev.rss,
                        second: result.rss,
                    });
                }
                continue;
            }
            table.insert(key, result);
        }
    }
    if opts.include_empty {
        for (key, result) in empty_families(data, opts.score) {
            table.insert(key, result);
        }
    }
    Ok(SweepOutput { table, ledger })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{greedy_len, mask_of};

    fn prefix_sets(plan: &WorkerPlan) -> Vec<u64> {
        let m = plan.seed_order.len();
        let mut order = plan.seed_order.clone();
        let mut sets = Vec::new();
        let mut push = |order: &[usize]| {
            for k in 1..m {
                let s = mask_of(&order[..k]);
                if !sets.contains(&s) {
                    sets.push(s);
                }
            }
        };
        push(&order);
        for i in plan.schedule.iter() {
            order.swap(i - 1, i);
            push(&order);
        }
        sets.sort_unstable();
        sets
    }

    #[test]
    fn seed_path_examples() {
        let w = seed_path(&[false], 3).unwrap();
        assert_eq!(
            (w.seed_order.clone(), w.schedule.to_vec()),
            (vec![0, 1, 2], vec![1])
        );
        let w = seed_path(&[true], 3).unwrap();
        assert_eq!(
            (w.seed_order.clone(), w.schedule.to_vec()),
            (vec![2, 0, 1], vec![2])
        );
        let w = seed_path(&[true, false], 4).unwrap();
        assert_eq!(w.seed_order, vec![3, 0, 1, 2]);
        assert_eq!(w.offset, 1);
        assert_eq!(w.schedule.to_vec(), vec![2]);
        // {4}, {1,4}, {1,2,4}, {2,4} in 1-based ids
        assert_eq!(prefix_sets(&w), vec![0b1000, 0b1001, 0b1010, 0b1011]);
    }

    #[test]
    fn both_pinned_in_front() {
        let w = seed_path(&[true, true], 4).unwrap();
        assert_eq!(w.seed_order, vec![3, 2, 0, 1]);
        assert_eq!(w.schedule.to_vec(), vec![3]);
    }

    #[test]
    fn too_many_workers() {
        assert_eq!(
            seed_path(&[true, false], 3).unwrap_err(),
            Error::TooManyWorkers { bits: 2, m: 3 }
        );
        assert!(build_partition(4, 8).is_err());
        assert_eq!(
            build_partition(4, 3).unwrap_err(),
            Error::InvalidWorkerCount(3)
        );
    }

    #[test]
    fn four_workers_on_four_variables() {
        let plan = build_partition(4, 4).unwrap();
        let sets: Vec<Vec<u64>> = plan.workers.iter().map(prefix_sets).collect();
        assert_eq!(sets[0], vec![0b0001, 0b0010, 0b0011, 0b0111]);
        assert_eq!(sets[1], vec![0b0100, 0b0101, 0b0110, 0b0111]);
        assert_eq!(sets[2], vec![0b1000, 0b1001, 0b1010, 0b1011]);
        assert_eq!(sets[3], vec![0b1000, 0b1100, 0b1101, 0b1110]);
        let mut union: Vec<u64> = sets.concat();
        union.sort_unstable();
        union.dedup();
        assert_eq!(union.len(), 14);
        assert_eq!(plan.joint_coverage(), 28);
    }

    #[test]
    fn single_worker_is_the_sequential_plan() {
        let plan = build_partition(6, 1).unwrap();
        assert_eq!(plan.workers.len(), 1);
        assert_eq!(plan.workers[0].seed_order, (0..6).collect::<Vec<_>>());
        assert_eq!(
            plan.workers[0].schedule,
            crate::schedule::greedy_swaps(6).unwrap()
        );
    }

    #[test]
    fn per_worker_lengths() {
        let plan = build_partition(10, 8).unwrap();
        for w in &plan.workers {
            assert_eq!(w.schedule.len(), 120);
            assert!(w.schedule.iter().all(|i| i > w.offset && i <= w.offset + 6));
        }
        assert_eq!(greedy_len(7), 120);
    }

    #[test]
    fn three_variable_split_counts() {
        // worker 0 visits [1,2,3],[2,1,3]; worker 1 visits [3,1,2],[3,2,1]
        let plan = build_partition(3, 2).unwrap();
        let a = plan.workers[0].covered();
        let b = plan.workers[1].covered();
        assert_eq!((a.count(), b.count()), (5, 4));
        let overlap = (0..a.capacity() as usize)
            .map(|i| CoverageTracker::key_at(3, i))
            .filter(|&k| a.contains(k) && b.contains(k))
            .count();
        assert_eq!(overlap, 0);
        assert_eq!(plan.joint_coverage(), 9);
    }
}
