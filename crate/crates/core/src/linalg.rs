//! Upper-triangular QR factor of the data matrix and the operations that
//! move it between variable orderings.
//!
//! Only `R` is kept. The orthogonal factor is never formed: every regression
//! whose predictors form a prefix of the current ordering can be read from
//! `R` alone, and an adjacent column swap can be repaired with one Givens
//! rotation on two rows of `R`.
//!
//! Positions passed to [`TriangularFactor::grc`] and [`solve_regression`] are
//! 1-based, matching swap schedules. Variable ids are 0-based.

use crate::error::{Error, Result};

/// Relative rank tolerance; multiplied by the largest column norm.
pub const RANK_TOL_FACTOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FactorMethod {
    /// Householder reflections applied to the data matrix.
    #[default]
    Householder,
    /// Cholesky factor of the Gram matrix. Faster for large `n`, less accurate.
    Cholesky,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GivensCoefficients {
    pub c: f64,
    pub s: f64,
}

/// Rotation taking `(a, b)` to `(hypot(a, b), 0)`.
pub fn givens(a: f64, b: f64) -> GivensCoefficients {
    let h = a.hypot(b);
    if h == 0.0 {
        return GivensCoefficients { c: 1.0, s: 0.0 };
    }
    GivensCoefficients { c: a / h, s: b / h }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangularFactor {
    m: usize,
    /// Row-major `m x m`; entries below the diagonal are always zero.
    r: Vec<f64>,
    /// `order[p]` is the variable occupying column `p`.
    order: Vec<usize>,
    rank_tol: f64,
    rotation_flops: u64,
}

impl TriangularFactor {
    /// Wraps an existing upper-triangular matrix. The lower part must be
    /// exactly zero and the diagonal strictly positive.
    pub fn from_parts(r: Vec<f64>, order: Vec<usize>, rank_tol: f64) -> Result<Self> {
        let m = order.len();
        if r.len() != m * m {
            return Err(Error::InvalidDataset(format!(
                "factor has {} entries, expected {}",
                r.len(),
                m * m
            )));
        }
        let mut seen = vec![false; m];
        for &v in &order {
            if v >= m || std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidDataset(format!(
                    "{order:?} is not a permutation"
                )));
            }
        }
        for i in 0..m {
            if r[i * m + i].is_nan() || r[i * m + i] <= 0.0 {
                return Err(Error::RankDeficient { column: order[i] });
            }
            if r[i * m..i * m + i].iter().any(|&x| x != 0.0) {
                return Err(Error::InvalidDataset(
                    "factor is not upper triangular".into(),
                ));
            }
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(TriangularFactor {
            m,
            r,
            order,
            rank_tol,
            rotation_flops: 0,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// 0-based entry access.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.r[row * self.m + col]
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// Flops spent in [`grc`](Self::grc) since construction. Monotone.
    pub fn rotation_flops(&self) -> u64 {
        self.rotation_flops
    }

    /// Bitmask of the variables in the first `k` columns.
    pub fn prefix_mask(&self, k: usize) -> u64 {
        self.order[..k].iter().fold(0, |acc, &v| acc | 1 << v)
    }

    pub fn position_of(&self, var: usize) -> Option<usize> {
        self.order.iter().position(|&v| v == var)
    }

    /// Frobenius norm of `RᵀR - PᵀGP`, where `gram` is the row-major Gram
    /// matrix of the data in original variable order.
    pub fn gram_residual(&self, gram: &[f64]) -> f64 {
        let m = self.m;
        let mut acc = 0.0;
        for a in 0..m {
            for b in 0..m {
                let rtr: f64 = (0..=a.min(b))
                    .map(|l| self.get(l, a) * self.get(l, b))
                    .sum();
                let g = gram[self.order[a] * m + self.order[b]];
                acc += (rtr - g) * (rtr - g);
            }
        }
        acc.sqrt()
    }

    /// Cost of one [`grc`](Self::grc) at 1-based position `i`: one rotation
    /// (four multiplies, two adds) on each of columns `i..=m`.
    pub fn grc_flops(m: usize, i: usize) -> u64 {
        6 * (m - i + 1) as u64
    }

    /// Swaps columns `i` and `i+1` (1-based) and restores triangularity with
    /// a Givens rotation on rows `i` and `i+1`.
    ///
    /// A degenerate or out-of-range request leaves the factor untouched.
    pub fn grc(&mut self, i: usize) -> Result<GivensCoefficients> {
        let m = self.m;
        if i == 0 || i >= m {
            return Err(Error::InvalidPosition {
                position: i,
                max: m.saturating_sub(1),
            });
        }
        let p = i - 1;
        let q = i;
        let a = self.r[p * m + q];
        let b = self.r[q * m + q];
        if a.abs() <= self.rank_tol && b.abs() <= self.rank_tol {
            return Err(Error::DegenerateRotation { position: i });
        }

        // Column swap. Rows past q are zero in both columns.
        for row in 0..=q {
            self.r.swap(row * m + p, row * m + q);
        }

        let rot = givens(a, b);
        let (c, s) = (rot.c, rot.s);
        let (head, tail) = self.r.split_at_mut(q * m);
        let row_p = &mut head[p * m..];
        let row_q = &mut tail[..m];
        for col in p..m {
            let x = row_p[col];
            let y = row_q[col];
            row_p[col] = c * x + s * y;
            row_q[col] = c * y - s * x;
        }
        row_q[p] = 0.0;
        if row_q[q] < 0.0 {
            row_q[q..].iter_mut().for_each(|v| *v = -*v);
        }
        if !row_p[p].is_finite() || !row_q[q].is_finite() {
            return Err(Error::NonFinite);
        }

        self.order.swap(p, q);
        self.rotation_flops += Self::grc_flops(m, i);
        Ok(rot)
    }
}

/// A factor together with what it cost to build.
#[derive(Debug, Clone)]
pub struct Factorization {
    pub factor: TriangularFactor,
    pub flops: u64,
}

pub fn qr_factorize(data: &crate::Dataset, method: FactorMethod) -> Result<Factorization> {
    let order: Vec<usize> = (0..data.m()).collect();
    qr_factorize_ordered(data, &order, method)
}

/// Factorizes the data with its columns arranged as `order`.
pub fn qr_factorize_ordered(
    data: &crate::Dataset,
    order: &[usize],
    method: FactorMethod,
) -> Result<Factorization> {
    let m = order.len();
    if m != data.m() {
        return Err(Error::InvalidDataset(format!(
            "ordering has {m} entries for {} variables",
            data.m()
        )));
    }
    let rank_tol = RANK_TOL_FACTOR * data.max_column_norm();
    let (r, flops) = match method {
        FactorMethod::Householder => householder_r(data, order, rank_tol)?,
        FactorMethod::Cholesky => cholesky_r(data, order, rank_tol)?,
    };
    let factor = TriangularFactor::from_parts(r, order.to_vec(), rank_tol)?;
    Ok(Factorization { factor, flops })
}

fn householder_r(data: &crate::Dataset, order: &[usize], rank_tol: f64) -> Result<(Vec<f64>, u64)> {
    let n = data.n();
    let m = order.len();
    let mut a: Vec<f64> = Vec::with_capacity(n * m);
    for &var in order {
        a.extend_from_slice(data.column(var));
    }
    let mut r = vec![0.0; m * m];
    let mut flops = 0u64;

    for j in 0..m {
        let len = (n - j) as u64;
        let (done, rest) = a.split_at_mut((j + 1) * n);
        let x = &mut done[j * n + j..];
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        flops += 2 * len;
        if !norm.is_finite() {
            return Err(Error::NonFinite);
        }
        if norm <= rank_tol {
            return Err(Error::RankDeficient { column: order[j] });
        }
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        let vtv = 2.0 * alpha * (alpha - x[0]);
        x[0] -= alpha;
        flops += 4;
        let v = &*x;
        for c in 0..m - j - 1 {
            let col = &mut rest[c * n + j..(c + 1) * n];
            let w: f64 = v.iter().zip(col.iter()).map(|(vi, ci)| vi * ci).sum();
            let f = 2.0 * w / vtv;
            col.iter_mut().zip(v).for_each(|(ci, vi)| *ci -= f * vi);
            r[j * m + j + 1 + c] = col[0];
            flops += 4 * len + 2;
        }
        r[j * m + j] = alpha;
    }
    for j in 0..m {
        if r[j * m + j] < 0.0 {
            r[j * m + j..(j + 1) * m].iter_mut().for_each(|v| *v = -*v);
        }
    }
    Ok((r, flops))
}

fn cholesky_r(data: &crate::Dataset, order: &[usize], rank_tol: f64) -> Result<(Vec<f64>, u64)> {
    let n = data.n() as u64;
    let m = order.len();
    let gram = data.gram();
    let g = |a: usize, b: usize| gram[order[a] * m + order[b]];
    let mut flops = n * (m * (m + 1)) as u64;
    let mut r = vec![0.0; m * m];
    for j in 0..m {
        let d = g(j, j) - (0..j).map(|l| r[l * m + j] * r[l * m + j]).sum::<f64>();
        flops += 2 * j as u64 + 1;
        if !d.is_finite() {
            return Err(Error::NonFinite);
        }
        if d <= rank_tol * rank_tol {
            return Err(Error::RankDeficient { column: order[j] });
        }
        let djj = d.sqrt();
        r[j * m + j] = djj;
        for c in j + 1..m {
            let s = g(j, c) - (0..j).map(|l| r[l * m + j] * r[l * m + c]).sum::<f64>();
            r[j * m + c] = s / djj;
            flops += 2 * j as u64 + 2;
        }
    }
    Ok((r, flops))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regression {
    /// In prefix order: `coefficients[t]` belongs to the variable at position `t+1`.
    pub coefficients: Vec<f64>,
    pub rss: f64,
}

/// Back-substitution plus the residual tail: `k*k + 2*(j-k)`.
pub fn solve_flops(k: usize, j: usize) -> u64 {
    (k * k + 2 * (j - k)) as u64
}

/// Regresses the variable at 1-based position `j` on the variables at
/// positions `1..=k`.
pub fn solve_regression(factor: &TriangularFactor, k: usize, j: usize) -> Result<Regression> {
    let m = factor.m();
    if k == 0 || k >= j {
        return Err(Error::InvalidPosition {
            position: k,
            max: j.saturating_sub(1),
        });
    }
    if j > m {
        return Err(Error::InvalidPosition {
            position: j,
            max: m,
        });
    }
    let col = j - 1;
    if (0..k).any(|t| factor.get(t, t) <= factor.rank_tol()) {
        return Err(Error::SingularPrefix {
            variables: factor.order()[..k].to_vec(),
        });
    }
    let mut beta = vec![0.0; k];
    for t in (0..k).rev() {
        let mut acc = factor.get(t, col);
        for (u, b) in beta.iter().enumerate().skip(t + 1) {
            acc -= factor.get(t, u) * b;
        }
        beta[t] = acc / factor.get(t, t);
    }
    let rss = (k..j)
        .map(|l| factor.get(l, col) * factor.get(l, col))
        .sum();
    Ok(Regression {
        coefficients: beta,
        rss,
    })
}
