//! External clustering measures: Rand index and normalized mutual information.

use serde::{Deserialize, Serialize};

use crate::data::{Snapshot, TemporalDataset};
use crate::error::{Error, Result};
use crate::genome::Partition;

/// Compact relabeling to `0..k` in order of first appearance.
fn compact(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut seen: Vec<(usize, usize)> = Vec::new();
    let out = labels
        .iter()
        .map(|&l| match seen.iter().find(|s| s.0 == l) {
            Some(s) => s.1,
            None => {
                seen.push((l, seen.len()));
                seen.len() - 1
            }
        })
        .collect();
    (out, seen.len())
}

/// Contingency counts of two labelings plus their marginals.
pub fn contingency(a: &[usize], b: &[usize]) -> (Vec<Vec<u64>>, Vec<u64>, Vec<u64>) {
    let (a, ka) = compact(a);
    let (b, kb) = compact(b);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&i, &j) in a.iter().zip(&b) {
        table[i][j] += 1;
    }
    let rows = table.iter().map(|r| r.iter().sum()).collect();
    let cols = (0..kb).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    (table, rows, cols)
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

fn check_lengths(a: &[usize], b: &[usize]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(())
}

/// Fraction of unordered sample pairs on which two labelings agree.
pub fn rand_index_labels(a: &[usize], b: &[usize]) -> Result<f64> {
    check_lengths(a, b)?;
    if a.len() < 2 {
        return Err(Error::UndefinedMetric("rand index needs two samples".into()));
    }
    let (table, rows, cols) = contingency(a, b);
    let together: u64 = table.iter().flatten().map(|&n| pairs(n)).sum();
    let row_pairs: u64 = rows.iter().map(|&n| pairs(n)).sum();
    let col_pairs: u64 = cols.iter().map(|&n| pairs(n)).sum();
    let total = pairs(a.len() as u64);
    let agree = total + 2 * together - row_pairs - col_pairs;
    Ok(agree as f64 / total as f64)
}

fn entropy(counts: &[u64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information over the geometric mean of the two entropies.
///
/// Two single-cluster labelings score 1; a single cluster against anything
/// else scores 0.
pub fn nmi_labels(a: &[usize], b: &[usize]) -> Result<f64> {
    check_lengths(a, b)?;
    if a.is_empty() {
        return Err(Error::UndefinedMetric("nmi of an empty labeling".into()));
    }
    let n = a.len() as f64;
    let (table, rows, cols) = contingency(a, b);
    let (ha, hb) = (entropy(&rows, n), entropy(&cols, n));
    if rows.len() == 1 && cols.len() == 1 {
        return Ok(1.0);
    }
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n * (n * nij / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    Ok((mi / (ha * hb).sqrt()).clamp(0.0, 1.0))
}

/// Ground-truth labels of `s` in the id order of `pred`.
fn aligned_labels(pred: &Partition, s: &Snapshot) -> Result<Vec<usize>> {
    let labels = s.labels().ok_or(Error::MissingLabels(s.time_index()))?;
    pred.ids()
        .iter()
        .map(|&id| {
            s.row_of(id)
                .map(|r| labels[r])
                .ok_or_else(|| Error::ContractViolation(format!("sample {id} not in snapshot")))
        })
        .collect()
}

pub fn rand_index(pred: &Partition, s: &Snapshot) -> Result<f64> {
    if pred.len() != s.len() {
        return Err(Error::DimensionMismatch {
            expected: s.len(),
            got: pred.len(),
        });
    }
    rand_index_labels(pred.clusters(), &aligned_labels(pred, s)?)
}

pub fn nmi(pred: &Partition, s: &Snapshot) -> Result<f64> {
    if pred.len() != s.len() {
        return Err(Error::DimensionMismatch {
            expected: s.len(),
            got: pred.len(),
        });
    }
    nmi_labels(pred.clusters(), &aligned_labels(pred, s)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeScore {
    pub t: usize,
    pub ri: f64,
    pub nmi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSeries {
    pub per_time: Vec<TimeScore>,
    pub m_ri: f64,
    pub m_nmi: f64,
}

/// RI and NMI of each partition against the labels of the matching snapshot.
pub fn score_partitions(partitions: &[Partition], data: &TemporalDataset) -> Result<ScoreSeries> {
    if partitions.len() != data.horizon() {
        return Err(Error::ContractViolation(format!(
            "{} partitions for a horizon of {}",
            partitions.len(),
            data.horizon()
        )));
    }
    let per_time = partitions
        .iter()
        .zip(data.snapshots())
        .map(|(p, s)| {
            Ok(TimeScore {
                t: s.time_index(),
                ri: rand_index(p, s)?,
                nmi: nmi(p, s)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = per_time.len().max(1) as f64;
    Ok(ScoreSeries {
        m_ri: per_time.iter().map(|s| s.ri).sum::<f64>() / n,
        m_nmi: per_time.iter().map(|s| s.nmi).sum::<f64>() / n,
        per_time,
    })
}
