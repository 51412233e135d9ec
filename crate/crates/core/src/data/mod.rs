//! Temporal datasets: one [`Snapshot`] per time step, with sample ids that
//! stay stable across time so that the same entity can be followed.

pub mod boids;
pub mod io;
pub mod synthetic;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type SampleId = u64;

/// The data matrix of one time step.
///
/// Rows are kept sorted by sample id; coordinates are stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    time_index: usize,
    dim: usize,
    ids: Vec<SampleId>,
    coords: Vec<f64>,
    labels: Option<Vec<usize>>,
}

impl Snapshot {
    /// Build a snapshot from `(id, coords)` rows. Rows may come in any order.
    pub fn new(
        time_index: usize,
        samples: Vec<(SampleId, Vec<f64>)>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        if time_index == 0 {
            return Err(Error::InvalidSnapshot("time index starts at 1".into()));
        }
        let dim = samples.first().map(|(_, c)| c.len()).unwrap_or(0);
        if dim == 0 && !samples.is_empty() {
            return Err(Error::InvalidSnapshot("zero-dimensional sample".into()));
        }
        if let Some(l) = &labels {
            if l.len() != samples.len() {
                return Err(Error::InvalidSnapshot(format!(
                    "{} labels for {} samples",
                    l.len(),
                    samples.len()
                )));
            }
        }
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.sort_by_key(|&i| samples[i].0);
        let mut ids = Vec::with_capacity(samples.len());
        let mut coords = Vec::with_capacity(samples.len() * dim);
        for &i in &order {
            let (id, c) = &samples[i];
            if c.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.len(),
                });
            }
            if ids.last() == Some(id) {
                return Err(Error::InvalidSnapshot(format!("duplicate sample id {id}")));
            }
            ids.push(*id);
            coords.extend_from_slice(c);
        }
        let labels = labels.map(|l| order.iter().map(|&i| l[i]).collect());
        Ok(Snapshot {
            time_index,
            dim,
            ids,
            coords,
            labels,
        })
    }

    pub fn time_index(&self) -> usize {
        self.time_index
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[SampleId] {
        &self.ids
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn point(&self, row: usize) -> &[f64] {
        &self.coords[row * self.dim..(row + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim.max(1))
    }

    /// Row of `id`, if present.
    pub fn row_of(&self, id: SampleId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    /// Per-dimension `(min, max)` of the coordinates.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for p in self.points() {
            for (d, &x) in p.iter().enumerate() {
                b[d].0 = b[d].0.min(x);
                b[d].1 = b[d].1.max(x);
            }
        }
        b
    }

    /// A copy restricted to the given rows (which must be ascending).
    pub fn select_rows(&self, rows: &[usize]) -> Snapshot {
        let mut coords = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            coords.extend_from_slice(self.point(r));
        }
        Snapshot {
            time_index: self.time_index,
            dim: self.dim,
            ids: rows.iter().map(|&r| self.ids[r]).collect(),
            coords,
            labels: self
                .labels
                .as_ref()
                .map(|l| rows.iter().map(|&r| l[r]).collect()),
        }
    }

    /// A copy restricted to the given ids; ids absent from the snapshot are skipped.
    pub fn restrict_to(&self, ids: &[SampleId]) -> Snapshot {
        let rows: Vec<usize> = ids.iter().filter_map(|&id| self.row_of(id)).collect();
        self.select_rows(&rows)
    }

    pub(crate) fn from_sorted_parts(
        time_index: usize,
        dim: usize,
        ids: Vec<SampleId>,
        coords: Vec<f64>,
        labels: Option<Vec<usize>>,
    ) -> Snapshot {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        debug_assert_eq!(coords.len(), ids.len() * dim);
        Snapshot {
            time_index,
            dim,
            ids,
            coords,
            labels,
        }
    }

    pub(crate) fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    /// Number of distinct ground-truth labels, if labels exist.
    pub fn label_count(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| {
            let mut seen: Vec<usize> = l.clone();
            seen.sort_unstable();
            seen.dedup();
            seen.len()
        })
    }
}

/// Snapshots ordered by strictly increasing time index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalDataset {
    pub name: String,
    snapshots: Vec<Snapshot>,
}

impl TemporalDataset {
    pub fn new(name: impl Into<String>, snapshots: Vec<Snapshot>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::InvalidDataset("no snapshots".into()));
        }
        let dim = snapshots[0].dim();
        for w in snapshots.windows(2) {
            if w[1].time_index() <= w[0].time_index() {
                return Err(Error::InvalidDataset(format!(
                    "time index {} follows {}",
                    w[1].time_index(),
                    w[0].time_index()
                )));
            }
        }
        if let Some(s) = snapshots.iter().find(|s| s.dim() != dim && !s.is_empty()) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: s.dim(),
            });
        }
        Ok(TemporalDataset {
            name: name.into(),
            snapshots,
        })
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn horizon(&self) -> usize {
        self.snapshots.len()
    }

    pub fn dim(&self) -> usize {
        self.snapshots[0].dim()
    }

    pub fn has_labels(&self) -> bool {
        self.snapshots.iter().all(|s| s.labels().is_some())
    }

    pub(crate) fn snapshots_mut(&mut self) -> &mut [Snapshot] {
        &mut self.snapshots
    }
}

/// Sorted ids present in both snapshots.
pub fn common_samples(a: &Snapshot, b: &Snapshot) -> Vec<SampleId> {
    let (mut i, mut j) = (0, 0);
    let (x, y) = (a.ids(), b.ids());
    let mut out = Vec::new();
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(x[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Subtract the per-dimension mean from every sample.
pub fn normalize_zero_mean(s: &Snapshot) -> Snapshot {
    let mut out = s.clone();
    if s.is_empty() {
        return out;
    }
    let mut mean = vec![0.0; s.dim()];
    for p in s.points() {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x;
        }
    }
    let n = s.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    let dim = s.dim();
    for (k, x) in out.coords_mut().iter_mut().enumerate() {
        *x -= mean[k % dim];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snap(t: usize, rows: &[(u64, [f64; 2])]) -> Snapshot {
        Snapshot::new(t, rows.iter().map(|(i, c)| (*i, c.to_vec())).collect(), None).unwrap()
    }

    #[test]
    fn rows_are_sorted_by_id() {
        let s = Snapshot::new(
            1,
            vec![(5, vec![1.0, 1.0]), (2, vec![0.0, 2.0])],
            Some(vec![7, 3]),
        )
        .unwrap();
        assert_eq!(s.ids(), &[2, 5]);
        assert_eq!(s.point(0), &[0.0, 2.0]);
        assert_eq!(s.labels().unwrap(), &[3, 7]);
    }

    #[test]
    fn rejects_bad_snapshots() {
        assert!(Snapshot::new(1, vec![(1, vec![0.0]), (1, vec![1.0])], None).is_err());
        assert!(Snapshot::new(1, vec![(1, vec![0.0]), (2, vec![1.0, 2.0])], None).is_err());
        assert!(Snapshot::new(1, vec![(1, vec![0.0])], Some(vec![])).is_err());
        assert!(Snapshot::new(0, vec![(1, vec![0.0])], None).is_err());
    }

    #[test]
    fn dataset_requires_increasing_time() {
        let a = snap(2, &[(1, [0.0, 0.0])]);
        let b = snap(1, &[(1, [0.0, 0.0])]);
        assert!(TemporalDataset::new("x", vec![a, b]).is_err());
    }

    #[test]
    fn common_samples_cases() {
        let a = snap(1, &[(1, [0.0, 0.0]), (2, [0.0, 0.0])]);
        let b = snap(2, &[(3, [0.0, 0.0]), (4, [0.0, 0.0])]);
        assert!(common_samples(&a, &b).is_empty());
        assert_eq!(common_samples(&a, &a), vec![1, 2]);
        let c = snap(2, &[(2, [0.0, 0.0]), (3, [0.0, 0.0])]);
        assert_eq!(common_samples(&a, &c), vec![2]);
    }

    #[test]
    fn normalize_single_sample() {
        let s = snap(1, &[(0, [3.0, -1.0])]);
        assert_eq!(normalize_zero_mean(&s).point(0), &[0.0, 0.0]);
    }

    #[test]
    fn normalize_keeps_zero_mean_input() {
        let s = snap(1, &[(0, [1.0, -2.0]), (1, [-1.0, 2.0])]);
        let n = normalize_zero_mean(&s);
        for (a, b) in s.points().zip(n.points()) {
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }

    proptest::proptest! {
        #[test]
        fn normalized_column_means_vanish(
            rows in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 3), 1..60)
        ) {
            let s = Snapshot::new(
                1,
                rows.into_iter().enumerate().map(|(i, c)| (i as u64, c)).collect(),
                None,
            ).unwrap();
            let n = normalize_zero_mean(&s);
            for d in 0..3 {
                let m: f64 = n.points().map(|p| p[d]).sum::<f64>() / n.len() as f64;
                proptest::prop_assert!(m.abs() <= 1e-9);
            }
        }
    }
}
