//! Maximum-overlap one-to-one cluster matching.

use crate::data::SampleId;
use crate::error::{Error, Result};
use crate::genome::Partition;

/// Maximum-weight assignment of rows to columns (Hungarian method with
/// potentials, O(n^3)). Returns the matched column of each row; with more
/// rows than columns the surplus rows get `None`.
pub fn max_weight_assignment(weights: &[Vec<i64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    let n = rows.max(cols);
    let max_w = weights.iter().flatten().copied().max().unwrap_or(0);
    // square cost matrix, 1-based as in the classic formulation
    let cost = |i: usize, j: usize| -> i64 {
        if i <= rows && j <= cols {
            max_w - weights[i - 1][j - 1]
        } else {
            max_w
        }
    };
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![None; rows];
    for j in 1..=n {
        let i = p[j];
        if i >= 1 && i <= rows && j <= cols {
            out[i - 1] = Some(j - 1);
        }
    }
    out
}

/// Overlap table between the clusters of `cur` and `prev` over `common_ids`.
///
/// Returns the cluster labels indexing rows and columns and the counts.
pub fn overlap_table(
    cur: &Partition,
    prev: &Partition,
    common_ids: &[SampleId],
) -> (Vec<usize>, Vec<usize>, Vec<Vec<i64>>) {
    let pairs: Vec<(usize, usize)> = common_ids
        .iter()
        .filter_map(|&id| Some((cur.cluster_of(id)?, prev.cluster_of(id)?)))
        .collect();
    let mut rows: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let mut cols: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    rows.sort_unstable();
    rows.dedup();
    cols.sort_unstable();
    cols.dedup();
    let mut table = vec![vec![0i64; cols.len()]; rows.len()];
    for (a, b) in pairs {
        let i = rows.binary_search(&a).unwrap();
        let j = cols.binary_search(&b).unwrap();
        table[i][j] += 1;
    }
    (rows, cols, table)
}

/// Pair each cluster of `cur` with a cluster of `prev` so that the total
/// number of shared samples is maximal. `min(C_cur, C_prev)` pairs result.
pub fn match_clusters(
    cur: &Partition,
    prev: &Partition,
    common_ids: &[SampleId],
) -> Result<Vec<(usize, usize)>> {
    if common_ids.is_empty() {
        return Err(Error::NoCommonSamples);
    }
    let (rows, cols, table) = overlap_table(cur, prev, common_ids);
    if rows.is_empty() {
        return Err(Error::NoCommonSamples);
    }
    Ok(max_weight_assignment(&table)
        .into_iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (rows[i], cols[j])))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(labels: &[usize]) -> Partition {
        let mut active: Vec<usize> = labels.to_vec();
        active.sort_unstable();
        active.dedup();
        Partition::new(
            labels.iter().enumerate().map(|(i, &c)| (i as u64, c)).collect(),
            active,
        )
    }

    #[test]
    fn identity_matching() {
        let p = part(&[0, 0, 1, 1]);
        let ids = [0, 1, 2, 3];
        assert_eq!(match_clusters(&p, &p, &ids).unwrap(), vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn permutation_recovered() {
        let a = part(&[0, 0, 1, 1, 2, 2]);
        let b = part(&[5, 5, 3, 3, 1, 1]);
        let ids: Vec<u64> = (0..6).collect();
        assert_eq!(
            match_clusters(&a, &b, &ids).unwrap(),
            vec![(0, 5), (1, 3), (2, 1)]
        );
    }

    #[test]
    fn unequal_counts() {
        let a = part(&[0, 0, 1, 1, 2, 2]);
        let b = part(&[0, 0, 0, 1, 1, 1]);
        let ids: Vec<u64> = (0..6).collect();
        let m = match_clusters(&a, &b, &ids).unwrap();
        assert_eq!(m.len(), 2);
        let (_, _, t) = overlap_table(&a, &b, &ids);
        let total: i64 = m.iter().map(|&(r, c)| t[r][c]).sum();
        assert_eq!(total, 4);
    }

    #[test]
    fn no_overlap() {
        let p = part(&[0, 1]);
        assert!(match_clusters(&p, &p, &[]).is_err());
    }

    #[test]
    fn rectangular_wide() {
        let w = vec![vec![1, 9, 3]];
        assert_eq!(max_weight_assignment(&w), vec![Some(1)]);
    }
}
