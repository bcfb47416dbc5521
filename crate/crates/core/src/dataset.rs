//! Observational data: an `n x m` column-major matrix with one name per column.

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    m: usize,
    values: Vec<f64>,
    names: Vec<String>,
}

/// Column transforms applied before factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preprocess {
    /// Subtract each column's mean (an implicit intercept).
    pub center: bool,
    /// Divide each column by its sample standard deviation.
    pub scale: bool,
}

impl Default for Preprocess {
    fn default() -> Self {
        Preprocess {
            center: true,
            scale: false,
        }
    }
}

impl Dataset {
    /// `values` is column-major: column `j` occupies `values[j*n..(j+1)*n]`.
    pub fn new(n: usize, m: usize, values: Vec<f64>, names: Vec<String>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidDataset("no variables".into()));
        }
        if values.len() != n * m {
            return Err(Error::InvalidDataset(format!(
                "expected {} values for {n} samples of {m} variables, got {}",
                n * m,
                values.len()
            )));
        }
        if names.len() != m {
            return Err(Error::InvalidDataset(format!(
                "expected {m} names, got {}",
                names.len()
            )));
        }
        if n < m {
            return Err(Error::InvalidDataset(format!(
                "{n} samples cannot support {m} variables"
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value in variable '{}' at sample {}",
                names[pos / n],
                pos % n + 1
            )));
        }
        let mut seen = HashSet::with_capacity(m);
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate variable name '{name}'"
                )));
            }
        }
        Ok(Dataset {
            n,
            m,
            values,
            names,
        })
    }

    /// Builds a dataset from row-major samples; names default to `X1..Xm`.
    pub fn from_rows(rows: &[Vec<f64>], names: Option<Vec<String>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::InvalidDataset(format!(
                "row {} has {} values, expected {m}",
                bad + 1,
                rows[bad].len()
            )));
        }
        let mut values = vec![0.0; n * m];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                values[j * n + i] = v;
            }
        }
        let names = names.unwrap_or_else(|| default_names(m));
        Dataset::new(n, m, values, names)
    }

    /// Standard Gaussian i.i.d. entries from a fixed seed.
    pub fn synthetic(n: usize, m: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n * m)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        Dataset::new(n, m, values, default_names(m))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, var: usize) -> &str {
        &self.names[var]
    }

    pub fn column(&self, var: usize) -> &[f64] {
        &self.values[var * self.n..(var + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column_norm(&self, var: usize) -> f64 {
        self.column(var).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_column_norm(&self) -> f64 {
        (0..self.m).map(|j| self.column_norm(j)).fold(0.0, f64::max)
    }

    /// `XᵀX` as a dense row-major `m x m` matrix.
    pub fn gram(&self) -> Vec<f64> {
        let m = self.m;
        let mut g = vec![0.0; m * m];
        for a in 0..m {
            for b in a..m {
                let dot: f64 = self
                    .column(a)
                    .iter()
                    .zip(self.column(b))
                    .map(|(x, y)| x * y)
                    .sum();
                g[a * m + b] = dot;
                g[b * m + a] = dot;
            }
        }
        g
    }

    pub fn preprocess(&self, opts: Preprocess) -> Result<Dataset> {
        let mut values = self.values.clone();
        let n = self.n;
        for col in values.chunks_mut(n) {
            if opts.center {
                let mean = col.iter().sum::<f64>() / n as f64;
                col.iter_mut().for_each(|v| *v -= mean);
            }
            if opts.scale {
                let mean = if opts.center {
                    0.0
                } else {
                    col.iter().sum::<f64>() / n as f64
                };
                let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
                let sd = (ss / (n.max(2) - 1) as f64).sqrt();
                if sd > 0.0 {
                    col.iter_mut().for_each(|v| *v /= sd);
                }
            }
        }
        Dataset::new(n, self.m, values, self.names.clone())
    }

    /// Reorders columns so that new column `p` is old column `order[p]`.
    pub fn select_columns(&self, order: &[usize]) -> Result<Dataset> {
        let mut values = Vec::with_capacity(self.n * order.len());
        let mut names = Vec::with_capacity(order.len());
        for &var in order {
            if var >= self.m {
                return Err(Error::InvalidDataset(format!("no variable {var}")));
            }
            values.extend_from_slice(self.column(var));
            names.push(self.names[var].clone());
        }
        Dataset::new(self.n, order.len(), values, names)
    }
}

pub fn default_names(m: usize) -> Vec<String> {
    (1..=m).map(|j| format!("X{j}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_names() {
        let err = Dataset::new(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec!["a".into(), "a".into()]);
        assert!(matches!(err, Err(Error::InvalidDataset(_))));
    }

    #[test]
    fn rejects_non_finite_and_short_data() {
        let names = default_names(2);
        assert!(Dataset::new(2, 2, vec![1.0, f64::NAN, 0.0, 1.0], names.clone()).is_err());
        assert!(Dataset::new(1, 2, vec![1.0, 2.0], names).is_err());
    }

    #[test]
    fn centering_zeroes_means() {
        let data = Dataset::synthetic(40, 3, 7).unwrap();
        let shifted: Vec<f64> = data.values().iter().map(|v| v + 100.0).collect();
        let data = Dataset::new(40, 3, shifted, default_names(3)).unwrap();
        let centered = data.preprocess(Preprocess::default()).unwrap();
        for j in 0..3 {
            let col = centered.column(j);
            let mean = col.iter().sum::<f64>() / 40.0;
            assert!(mean.abs() <= 1e-12 * centered.column_norm(j));
        }
    }

    #[test]
    fn scaling_gives_unit_sd() {
        let data = Dataset::synthetic(30, 2, 1).unwrap();
        let scaled = data
            .preprocess(Preprocess {
                center: true,
                scale: true,
            })
            .unwrap();
        for j in 0..2 {
            let ss: f64 = scaled.column(j).iter().map(|v| v * v).sum();
            assert!((ss / 29.0 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn from_rows_is_column_major() {
        let d = Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]], None).unwrap();
        assert_eq!(d.column(0), &[1.0, 3.0]);
        assert_eq!(d.column(1), &[2.0, 4.0]);
        assert_eq!(d.names(), &["X1".to_string(), "X2".to_string()]);
    }
}
