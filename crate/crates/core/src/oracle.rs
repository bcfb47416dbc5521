//! Reference solvers that treat every family independently, and a small
//! benchmark harness comparing them with the sweep.
//!
//! Nothing here shares code with [`crate::linalg`]: the oracle has its own
//! Householder QR on the predictor submatrix, and the brute-force path uses
//! Cholesky factors of Gram submatrices.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::schedule::{CoverageTracker, FamilyKey};
use crate::sweep::{sweep, FamilyResult, ScoreFn, ScoreTable, SweepOptions};

/// Oracle fit with both residual routes.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleFit {
    /// Ascending parent id.
    pub coefficients: Vec<f64>,
    /// `‖y - Xβ‖²`, computed from the explicit residual.
    pub rss: f64,
    /// `‖y‖² - ‖(Qᵀy)[..k]‖²`.
    pub rss_projected: f64,
    pub flops: u64,
}

pub fn oracle_fit(data: &Dataset, key: FamilyKey) -> Result<OracleFit> {
    let n = data.n();
    let parents: Vec<usize> = key.parent_ids().collect();
    let k = parents.len();
    if k == 0 || key.response >= data.m() || parents.iter().any(|&p| p >= data.m()) {
        return Err(Error::InvalidDataset(format!("bad family {key:?}")));
    }
    let mut cols: Vec<Vec<f64>> = parents.iter().map(|&p| data.column(p).to_vec()).collect();
    let y = data.column(key.response);
    let mut qty = y.to_vec();
    let mut diag = vec![0.0; k];
    let mut flops = 0u64;
    let tol = crate::linalg::RANK_TOL_FACTOR * data.max_column_norm();

    for j in 0..k {
        let len = (n - j) as u64;
        let (left, right) = cols.split_at_mut(j + 1);
        let v = &mut left[j][j..];
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= tol {
            return Err(Error::RankDeficient { column: parents[j] });
        }
        let alpha = if v[0] > 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        flops += 4 * len + 2;
        let reflect = |target: &mut [f64]| {
            let w: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * w / vtv;
            target
                .iter_mut()
                .zip(v.iter())
                .for_each(|(t, a)| *t -= f * a);
        };
        for col in right.iter_mut() {
            reflect(&mut col[j..]);
            flops += 4 * len + 2;
        }
        reflect(&mut qty[j..]);
        flops += 4 * len + 2;
        diag[j] = alpha;
    }

    // R[i][j] for i < j sits in cols[j][i]
    let mut beta = vec![0.0; k];
    for t in (0..k).rev() {
        let mut acc = qty[t];
        for u in t + 1..k {
            acc -= cols[u][t] * beta[u];
        }
        beta[t] = acc / diag[t];
    }
    flops += (k * k) as u64;

    let mut rss = 0.0;
    for (i, yi) in y.iter().enumerate() {
        let fit: f64 = parents
            .iter()
            .zip(&beta)
            .map(|(&p, b)| data.column(p)[i] * b)
            .sum();
        let e = yi - fit;
        rss += e * e;
    }
    flops += (n * (2 * k + 2)) as u64;

    let yy: f64 = y.iter().map(|v| v * v).sum();
    let head: f64 = qty[..k].iter().map(|v| v * v).sum();
    Ok(OracleFit {
        coefficients: beta,
        rss,
        rss_projected: (yy - head).max(0.0),
        flops,
    })
}

pub fn oracle_solve(data: &Dataset, key: FamilyKey, score_fn: ScoreFn) -> Result<FamilyResult> {
    let fit = oracle_fit(data, key)?;
    Ok(FamilyResult::new(
        fit.coefficients,
        fit.rss,
        data.n(),
        score_fn,
    ))
}

fn all_keys(m: usize, include_empty: bool) -> impl Iterator<Item = FamilyKey> {
    (0..CoverageTracker::capacity_for(m) as usize)
        .map(move |i| CoverageTracker::key_at(m, i))
        .filter(move |k| include_empty || k.parents != 0)
}

/// Full table from per-family QR fits. Returns the table and its flop count.
pub fn oracle_table(
    data: &Dataset,
    score_fn: ScoreFn,
    include_empty: bool,
) -> Result<(ScoreTable, u64)> {
    let mut table = ScoreTable::new(data.m(), data.n());
    let mut flops = 0;
    for key in all_keys(data.m(), include_empty) {
        let result = if key.parents == 0 {
            let rss = data.column(key.response).iter().map(|v| v * v).sum();
            FamilyResult::new(Vec::new(), rss, data.n(), score_fn)
        } else {
            let fit = oracle_fit(data, key)?;
            flops += fit.flops;
            FamilyResult::new(fit.coefficients, fit.rss, data.n(), score_fn)
        };
        table.insert(key, result);
    }
    Ok((table, flops))
}

/// Full table from Cholesky factors of Gram submatrices.
pub fn brute_cholesky_table(
    data: &Dataset,
    score_fn: ScoreFn,
    include_empty: bool,
) -> Result<(ScoreTable, u64)> {
    let m = data.m();
    let gram = data.gram();
    let g = |a: usize, b: usize| gram[a * m + b];
    let mut flops = (data.n() * m * (m + 1)) as u64;
    let tol = crate::linalg::RANK_TOL_FACTOR * data.max_column_norm();
    let mut table = ScoreTable::new(m, data.n());
    let mut lower = vec![0.0; m * m];
    for key in all_keys(m, include_empty) {
        let parents: Vec<usize> = key.parent_ids().collect();
        let k = parents.len();
        let y = key.response;
        // row-major lower factor L with L Lᵀ = G[S,S]
        for i in 0..k {
            for j in 0..=i {
                let mut s = g(parents[i], parents[j]);
                for l in 0..j {
                    s -= lower[i * m + l] * lower[j * m + l];
                }
                flops += 2 * j as u64 + 1;
                if i == j {
                    if s <= tol * tol {
                        return Err(Error::RankDeficient { column: parents[i] });
                    }
                    lower[i * m + i] = s.sqrt();
                } else {
                    lower[i * m + j] = s / lower[j * m + j];
                }
            }
        }
        let mut z = vec![0.0; k];
        for i in 0..k {
            let mut s = g(parents[i], y);
            for l in 0..i {
                s -= lower[i * m + l] * z[l];
            }
            z[i] = s / lower[i * m + i];
        }
        let mut beta = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = z[i];
            for l in i + 1..k {
                s -= lower[l * m + i] * beta[l];
            }
            beta[i] = s / lower[i * m + i];
        }
        let rss = (g(y, y) - z.iter().map(|v| v * v).sum::<f64>()).max(0.0);
        flops += (2 * k * k + 2 * k + 1) as u64;
        table.insert(key, FamilyResult::new(beta, rss, data.n(), score_fn));
    }
    Ok((table, flops))
}

/// Cost models for the methods compared in the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Greedy,
    Dca,
    Clarke,
    BruteCholesky,
    NaiveQr,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Greedy,
        Method::NaiveQr,
        Method::BruteCholesky,
        Method::Dca,
        Method::Clarke,
    ];

    /// Whether the harness can execute the method (otherwise analytic only).
    pub fn runnable(self) -> bool {
        matches!(
            self,
            Method::Greedy | Method::NaiveQr | Method::BruteCholesky
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Greedy => "greedy",
            Method::Dca => "dca",
            Method::Clarke => "clarke",
            Method::BruteCholesky => "brute_cholesky",
            Method::NaiveQr => "naive_qr",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s || (s == "naive_sampled" && *m == Method::NaiveQr))
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Leading-order flop models. `n` is used only by the per-family QR model.
pub fn analytic_flops(method: Method, m: usize, n: usize) -> f64 {
    let mf = m as f64;
    let pow = (2.0f64).powi(m as i32);
    match method {
        Method::Greedy => crate::sweep::predicted_rotation_flops(m) as f64,
        Method::Dca => 9.0 * mf * pow,
        Method::Clarke => 1.5 * mf * mf * pow,
        Method::BruteCholesky => 0.5 * mf * mf * mf * pow,
        Method::NaiveQr => {
            let nf = n as f64;
            mf * (1..=m)
                .map(|k| {
                    let kf = k as f64;
                    (2.0 * nf * kf * kf + kf * kf) * binomial(m as u64, k as u64)
                })
                .sum::<f64>()
        }
    }
}

pub fn analytic_flops_by_name(method: &str, m: usize, n: usize) -> Result<f64> {
    Ok(analytic_flops(method.parse()?, m, n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: Method,
    pub m: usize,
    pub n: usize,
    pub analytic_flops: f64,
    pub measured_flops: Option<u64>,
    pub wall_ns: Option<u128>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub const HEADER: &'static str = "method,m,n,analytic_flops,measured_flops,wall_ns";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for r in &self.rows {
            let measured = r.measured_flops.map(|v| v.to_string()).unwrap_or_default();
            let wall = r.wall_ns.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.method, r.m, r.n, r.analytic_flops, measured, wall
            ));
        }
        out
    }

    pub fn row(&self, method: Method, m: usize) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.method == method && r.m == m)
    }
}

/// Runs the runnable methods on synthetic Gaussian data (one dataset per
/// `m`, seeded by `seed + m`) and records analytic models for all of them.
///
/// For the greedy sweep the measured count is rotation flops only, which is
/// the quantity its analytic model describes.
pub fn run_bench(
    ms: impl IntoIterator<Item = usize>,
    n: usize,
    methods: &[Method],
    seed: u64,
) -> Result<BenchReport> {
    let mut rows = Vec::new();
    if methods.is_empty() {
        return Ok(BenchReport { rows });
    }
    for m in ms {
        let data = Dataset::synthetic(n, m, seed.wrapping_add(m as u64))?;
        let mut block = Vec::with_capacity(methods.len());
        for &method in methods {
            let (measured, wall) = if method.runnable() {
                let start = Instant::now();
                let flops = match method {
                    Method::Greedy => {
                        sweep(&data, &SweepOptions::default())?
                            .ledger
                            .rotation_flops
                    }
                    Method::NaiveQr => oracle_table(&data, ScoreFn::Rss, true)?.1,
                    Method::BruteCholesky => brute_cholesky_table(&data, ScoreFn::Rss, true)?.1,
                    _ => unreachable!(),
                };
                (Some(flops), Some(start.elapsed().as_nanos()))
            } else {
                (None, None)
            };
            block.push(BenchRow {
                method,
                m,
                n,
                analytic_flops: analytic_flops(method, m, n),
                measured_flops: measured,
                wall_ns: wall,
            });
        }
        block.sort_by(|a, b| a.analytic_flops.total_cmp(&b.analytic_flops));
        rows.extend(block);
    }
    Ok(BenchReport { rows })
}
