//! Single-worker sweep: factorize once, walk the greedy schedule and solve
//! each family the moment its parent set first appears as a prefix.

use std::fmt;
use std::str::FromStr;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{
    qr_factorize_ordered, solve_flops, solve_regression, FactorMethod, TriangularFactor,
};
use crate::schedule::{
    greedy_swaps_with_limit, models_of_permutation, new_models_after_swap, CoverageTracker,
    FamilyKey, SwapSchedule, DEFAULT_MAX_VARIABLES,
};

/// Residual sums at or below this are treated as exact fits.
pub const PERFECT_FIT_RSS: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreFn {
    #[default]
    Rss,
    GaussianLoglik,
    Bic,
}

impl FromStr for ScoreFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rss" => Ok(ScoreFn::Rss),
            "loglik" | "gaussian_loglik" => Ok(ScoreFn::GaussianLoglik),
            "bic" => Ok(ScoreFn::Bic),
            other => Err(Error::UnknownMethod(other.to_string())),
        }
    }
}

impl fmt::Display for ScoreFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreFn::Rss => "rss",
            ScoreFn::GaussianLoglik => "loglik",
            ScoreFn::Bic => "bic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub value: f64,
    pub perfect_fit: bool,
}

/// Local score of a fit with `k` parents on `n` samples.
///
/// The Gaussian log-likelihood at the MLE variance is
/// `-(n/2) * (ln(rss/n) + 1 + ln(2π))`; BIC subtracts `(k/2) * ln(n)`.
/// Exact fits make the logarithm undefined and score `+inf`.
pub fn score_family(rss: f64, n: usize, k: usize, score_fn: ScoreFn) -> Score {
    let nf = n as f64;
    if score_fn == ScoreFn::Rss {
        return Score {
            value: rss,
            perfect_fit: rss <= PERFECT_FIT_RSS,
        };
    }
    if rss <= PERFECT_FIT_RSS {
        return Score {
            value: f64::INFINITY,
            perfect_fit: true,
        };
    }
    let loglik = -0.5 * nf * ((rss / nf).ln() + 1.0 + (2.0 * std::f64::consts::PI).ln());
    let value = match score_fn {
        ScoreFn::Bic => loglik - 0.5 * k as f64 * nf.ln(),
        _ => loglik,
    };
    Score {
        value,
        perfect_fit: false,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyResult {
    /// One per parent, ordered by ascending variable id.
    pub coefficients: Vec<f64>,
    pub rss: f64,
    pub score: f64,
    pub nparents: usize,
    pub perfect_fit: bool,
}

impl FamilyResult {
    pub fn new(coefficients: Vec<f64>, rss: f64, n: usize, score_fn: ScoreFn) -> Self {
        let k = coefficients.len();
        let score = score_family(rss, n, k, score_fn);
        FamilyResult {
            coefficients,
            rss,
            score: score.value,
            nparents: k,
            perfect_fit: score.perfect_fit,
        }
    }
}

/// Write-once table over every family of an `m`-variable dataset, stored
/// densely in (response, parent mask) order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    m: usize,
    n: usize,
    slots: Vec<Option<FamilyResult>>,
    len: usize,
}

impl ScoreTable {
    pub fn new(m: usize, n: usize) -> Self {
        ScoreTable {
            m,
            n,
            slots: vec![None; CoverageTracker::capacity_for(m) as usize],
            len: 0,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Stores `result` unless `key` is already present; returns whether it was stored.
    pub fn insert(&mut self, key: FamilyKey, result: FamilyResult) -> bool {
        let slot = &mut self.slots[CoverageTracker::index(self.m, key)];
        if slot.is_some() {
            return false;
        }
        *slot = Some(result);
        self.len += 1;
        true
    }

    pub fn get(&self, key: FamilyKey) -> Option<&FamilyResult> {
        self.slots[CoverageTracker::index(self.m, key)].as_ref()
    }

    /// Entries sorted by (response, parent mask).
    pub fn iter(&self) -> impl Iterator<Item = (FamilyKey, &FamilyResult)> + '_ {
        let m = self.m;
        self.slots
            .iter()
            .enumerate()
            .filter_map(move |(i, s)| s.as_ref().map(|r| (CoverageTracker::key_at(m, i), r)))
    }

    pub fn expected_len(m: usize, include_empty: bool) -> usize {
        let full = CoverageTracker::capacity_for(m) as usize;
        if include_empty {
            full
        } else {
            full - m
        }
    }

    pub fn is_complete(&self, include_empty: bool) -> bool {
        self.len == Self::expected_len(self.m, include_empty)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FlopLedger {
    pub rotation_flops: u64,
    pub factorization_flops: u64,
    pub solve_flops: u64,
}

impl FlopLedger {
    pub fn total(&self) -> u64 {
        self.rotation_flops + self.factorization_flops + self.solve_flops
    }

    pub fn absorb(&mut self, other: &FlopLedger) {
        self.rotation_flops += other.rotation_flops;
        self.factorization_flops += other.factorization_flops;
        self.solve_flops += other.solve_flops;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOptions {
    pub score: ScoreFn,
    pub include_empty: bool,
    pub method: FactorMethod,
    pub max_m: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            score: ScoreFn::Rss,
            include_empty: true,
            method: FactorMethod::Householder,
            max_m: DEFAULT_MAX_VARIABLES,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub table: ScoreTable,
    pub ledger: FlopLedger,
}

/// `3m*2^m + 6*2^m - 3m^2 - 9m - 6`: rotation flops of the full greedy walk.
pub fn predicted_rotation_flops(m: usize) -> u64 {
    let m = m as u64;
    let pow = 1u64 << m;
    3 * m * pow + 6 * pow - 3 * m * m - 9 * m - 6
}

/// Solves one family from a factor whose prefix holds exactly its parents.
pub fn solve_family(
    factor: &TriangularFactor,
    key: FamilyKey,
    n: usize,
    score_fn: ScoreFn,
) -> Result<(FamilyResult, u64)> {
    let k = key.nparents();
    let mismatch = Error::PositionMismatch {
        response: key.response,
        parents: key.parents,
    };
    if k == 0 || k >= factor.m() || factor.prefix_mask(k) != key.parents {
        return Err(mismatch);
    }
    let j = match factor.position_of(key.response) {
        Some(p) if p >= k => p + 1,
        _ => return Err(mismatch),
    };
    let reg = solve_regression(factor, k, j)?;
    let mut paired: Vec<(usize, f64)> = factor.order()[..k]
        .iter()
        .copied()
        .zip(reg.coefficients)
        .collect();
    paired.sort_unstable_by_key(|&(var, _)| var);
    let coefficients = paired.into_iter().map(|(_, b)| b).collect();
    let result = FamilyResult::new(coefficients, reg.rss, n, score_fn);
    if result.perfect_fit {
        log::warn!(
            "perfect fit for response {} on parents {:#b}",
            key.response,
            key.parents
        );
    }
    Ok((result, solve_flops(k, j)))
}

/// Solves `keys` against `factor` and stores them in `table`. Returns solve flops.
pub fn harvest(
    factor: &TriangularFactor,
    keys: &[FamilyKey],
    score_fn: ScoreFn,
    table: &mut ScoreTable,
) -> Result<u64> {
    let n = table.n();
    let mut flops = 0;
    for &key in keys {
        let (result, f) = solve_family(factor, key, n, score_fn)?;
        table.insert(key, result);
        flops += f;
    }
    Ok(flops)
}

/// Baseline families with no parents: rss is the squared column norm.
pub fn empty_families(data: &Dataset, score_fn: ScoreFn) -> Vec<(FamilyKey, FamilyResult)> {
    (0..data.m())
        .map(|v| {
            let rss = data.column(v).iter().map(|x| x * x).sum();
            let key = FamilyKey {
                response: v,
                parents: 0,
            };
            (key, FamilyResult::new(Vec::new(), rss, data.n(), score_fn))
        })
        .collect()
}

/// Factorizes `data` in `seed_order`, walks `schedule` and hands every
/// newly exposed family to `sink`, in discovery order.
pub fn walk<F>(
    data: &Dataset,
    seed_order: &[usize],
    schedule: &SwapSchedule,
    opts: &SweepOptions,
    mut sink: F,
) -> Result<FlopLedger>
where
    F: FnMut(FamilyKey, FamilyResult),
{
    let n = data.n();
    let fact = qr_factorize_ordered(data, seed_order, opts.method)?;
    let mut factor = fact.factor;
    let mut ledger = FlopLedger {
        factorization_flops: fact.flops,
        ..FlopLedger::default()
    };
    let mut tracker = CoverageTracker::new(data.m());

    for key in models_of_permutation(factor.order()) {
        tracker.insert(key);
        let (result, f) = solve_family(&factor, key, n, opts.score)?;
        ledger.solve_flops += f;
        sink(key, result);
    }
    for i in schedule.iter() {
        factor.grc(i)?;
        for key in new_models_after_swap(factor.order(), i, &tracker) {
            tracker.insert(key);
            let (result, f) = solve_family(&factor, key, n, opts.score)?;
            ledger.solve_flops += f;
            sink(key, result);
        }
    }
    ledger.rotation_flops = factor.rotation_flops();
    Ok(ledger)
}

pub fn sweep(data: &Dataset, opts: &SweepOptions) -> Result<SweepOutput> {
    let m = data.m();
    let schedule = greedy_swaps_with_limit(m, opts.max_m)?;
    let identity: Vec<usize> = (0..m).collect();
    let mut table = ScoreTable::new(m, data.n());
    let ledger = walk(data, &identity, &schedule, opts, |key, result| {
        table.insert(key, result);
    })?;
    if opts.include_empty {
        for (key, result) in empty_families(data, opts.score) {
            table.insert(key, result);
        }
    }
    Ok(SweepOutput { table, ledger })
}
