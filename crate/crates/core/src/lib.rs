//! Exact least-squares regressions for every (child, parent-set) family of
//! a set of continuous variables, as needed for score tables in Bayesian
//! network structure learning.
//!
//! One upper-triangular QR factor is kept and moved between variable
//! orderings by adjacent column swaps, each repaired with a single Givens
//! rotation. The greedy swap schedule visits `2^m - m - 1` orderings, the
//! minimum needed for every parent set to appear as a prefix once.
//!
//! ```
//! use givens_sweep::{sweep, Dataset, SweepOptions};
//!
//! let data = Dataset::synthetic(40, 4, 7).unwrap();
//! let out = sweep(&data, &SweepOptions::default()).unwrap();
//! assert_eq!(out.table.len(), 4 * 8);
//! ```

pub mod cli;
pub mod dataset;
pub mod error;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod parallel;
pub mod schedule;
pub mod sweep;

pub use dataset::{Dataset, Preprocess};
pub use error::{Error, Result};
pub use linalg::{
    givens, qr_factorize, qr_factorize_ordered, solve_regression, FactorMethod, GivensCoefficients,
    Regression, TriangularFactor,
};
pub use oracle::{analytic_flops, oracle_fit, oracle_solve, run_bench, BenchReport, Method};
pub use parallel::{build_partition, parallel_sweep, seed_path, PartitionPlan, WorkerPlan};
pub use schedule::{
    greedy_swaps, models_of_permutation, new_models_after_swap, verify_coverage, Coverage,
    CoverageTracker, FamilyKey, SwapSchedule,
};
pub use sweep::{
    harvest, predicted_rotation_flops, score_family, sweep, FamilyResult, FlopLedger, ScoreFn,
    ScoreTable, SweepOptions, SweepOutput,
};
