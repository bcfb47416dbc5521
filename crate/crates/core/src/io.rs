//! CSV ingestion and score-table export.
//!
//! Input: a header row of variable names followed by numeric rows.
//! Output: `response,parents,k,rss,score,coefficients`, one row per family
//! in (response id, parent mask) order. Parents and coefficients are
//! `;`-joined in ascending variable id; floats use the shortest
//! representation that parses back to the same value.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::schedule::FamilyKey;
use crate::sweep::{score_family, FamilyResult, ScoreFn, ScoreTable, PERFECT_FIT_RSS};

pub const TABLE_HEADER: [&str; 6] = ["response", "parents", "k", "rss", "score", "coefficients"];

pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::InvalidDataset(format!("line 1: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let m = names.len();
    if m == 0 || names.iter().all(String::is_empty) {
        return Err(Error::InvalidDataset("line 1: empty header".into()));
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); m];
    for (row, record) in rdr.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| Error::InvalidDataset(format!("line {line}: {e}")))?;
        if record.len() != m {
            return Err(Error::InvalidDataset(format!(
                "line {line}: expected {m} fields, found {}",
                record.len()
            )));
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::InvalidDataset(format!(
                    "line {line}, column {}: '{field}' is not a number",
                    col + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::InvalidDataset(format!(
                    "line {line}, column {}: non-finite value '{field}'",
                    col + 1
                )));
            }
            columns[col].push(v);
        }
    }
    let n = columns[0].len();
    Dataset::new(n, m, columns.concat(), names)
}

fn join<T: ToString>(items: impl Iterator<Item = T>) -> String {
    items.map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

pub fn write_table<W: Write>(table: &ScoreTable, names: &[String], writer: W) -> Result<()> {
    let io_err = |e: csv::Error| Error::InvalidDataset(format!("write failed: {e}"));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TABLE_HEADER).map_err(io_err)?;
    for (key, result) in table.iter() {
        w.write_record([
            names[key.response].clone(),
            join(key.parent_ids().map(|p| names[p].as_str())),
            result.nparents.to_string(),
            result.rss.to_string(),
            result.score.to_string(),
            join(result.coefficients.iter()),
        ])
        .map_err(io_err)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidDataset(format!("write failed: {e}")))?;
    Ok(())
}

/// Inverse of [`write_table`], given the variable names and sample count.
pub fn read_table<R: Read>(reader: R, names: &[String], n: usize) -> Result<ScoreTable> {
    let ids: HashMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let id = |s: &str, line: usize| {
        ids.get(s)
            .copied()
            .ok_or_else(|| Error::InvalidDataset(format!("line {line}: unknown variable '{s}'")))
    };
    let num = |s: &str, line: usize| {
        s.parse::<f64>()
            .map_err(|_| Error::InvalidDataset(format!("line {line}: '{s}' is not a number")))
    };
    let split = |s: &str| -> Vec<String> {
        if s.is_empty() {
            Vec::new()
        } else {
            s.split(';').map(str::to_string).collect()
        }
    };

    let mut rdr = csv::Reader::from_reader(reader);
    let mut table = ScoreTable::new(names.len(), n);
    for (row, record) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = record.map_err(|e| Error::InvalidDataset(format!("line {line}: {e}")))?;
        if rec.len() != TABLE_HEADER.len() {
            return Err(Error::InvalidDataset(format!(
                "line {line}: expected 6 fields"
            )));
        }
        let response = id(&rec[0], line)?;
        let mut parents = 0u64;
        for p in split(&rec[1]) {
            parents |= 1 << id(&p, line)?;
        }
        let key = FamilyKey::new(response, parents)?;
        let coefficients = split(&rec[5])
            .iter()
            .map(|c| num(c, line))
            .collect::<Result<Vec<_>>>()?;
        let rss = num(&rec[3], line)?;
        let result = FamilyResult {
            nparents: coefficients.len(),
            coefficients,
            rss,
            score: num(&rec[4], line)?,
            perfect_fit: rss <= PERFECT_FIT_RSS,
        };
        if !table.insert(key, result) {
            return Err(Error::InvalidDataset(format!(
                "line {line}: duplicate family"
            )));
        }
    }
    Ok(table)
}

/// Recomputes scores under a different scoring function.
pub fn rescore(table: &ScoreTable, score_fn: ScoreFn) -> ScoreTable {
    let mut out = ScoreTable::new(table.m(), table.n());
    for (key, r) in table.iter() {
        let s = score_family(r.rss, table.n(), r.nparents, score_fn);
        out.insert(
            key,
            FamilyResult {
                score: s.value,
                perfect_fit: s.perfect_fit,
                ..r.clone()
            },
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{sweep, SweepOptions};

    #[test]
    fn reports_line_and_column() {
        let err = read_dataset("a,b\n1,2\n3,x\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3, column 2"), "{err}");
        let err = read_dataset("a,b\n1,2\n3\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = read_dataset("a,a\n1,2\n3,4\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
        assert!(read_dataset("a,b\n1,2\n3,inf\n".as_bytes()).is_err());
    }

    #[test]
    fn parses_numbers() {
        let d = read_dataset("a, b\n1.5,2e-3\n-3,4\n".as_bytes()).unwrap();
        assert_eq!(d.names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.column(1), &[2e-3, 4.0]);
    }

    #[test]
    fn round_trip() {
        let data = Dataset::synthetic(25, 4, 3).unwrap();
        let out = sweep(
            &data,
            &SweepOptions {
                score: ScoreFn::Bic,
                ..SweepOptions::default()
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        write_table(&out.table, data.names(), &mut buf).unwrap();
        let back = read_table(buf.as_slice(), data.names(), data.n()).unwrap();
        assert_eq!(back, out.table);

        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().nth(1).unwrap();
        assert!(first.starts_with("X1,,0,"), "{first}");
    }

    #[test]
    fn rescore_changes_only_scores() {
        let data = Dataset::synthetic(25, 3, 3).unwrap();
        let out = sweep(&data, &SweepOptions::default()).unwrap();
        let bic = rescore(&out.table, ScoreFn::Bic);
        for ((_, a), (_, b)) in out.table.iter().zip(bic.iter()) {
            assert_eq!(a.rss, b.rss);
            assert!(b.score < 0.0 || b.score.is_finite());
        }
    }
}
