//! Hybrid real encoding of a candidate partition: `c_max` activation masks
//! followed by `c_max` centroid blocks of length `D`. Centroid `c` is active
//! when its mask is at least 0.5.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{common_samples, SampleId, Snapshot};
use crate::error::{Error, Result};

pub const ACTIVATION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    masks: Vec<f64>,
    centroids: Vec<f64>,
    dim: usize,
    bounds: Vec<(f64, f64)>,
}

impl Genome {
    pub fn new(masks: Vec<f64>, centroids: Vec<Vec<f64>>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if masks.len() != centroids.len() {
            return Err(Error::ContractViolation(format!(
                "{} masks for {} centroids",
                masks.len(),
                centroids.len()
            )));
        }
        let dim = bounds.len();
        if let Some(c) = centroids.iter().find(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: c.len(),
            });
        }
        Ok(Genome {
            masks,
            centroids: centroids.concat(),
            dim,
            bounds,
        })
    }

    /// Rebuild a genome from its flat gene vector (masks first, then centroids).
    pub fn from_genes(genes: &[f64], c_max: usize, bounds: Vec<(f64, f64)>) -> Result<Self> {
        let dim = bounds.len();
        if genes.len() != c_max * (dim + 1) {
            return Err(Error::DimensionMismatch {
                expected: c_max * (dim + 1),
                got: genes.len(),
            });
        }
        Ok(Genome {
            masks: genes[..c_max].to_vec(),
            centroids: genes[c_max..].to_vec(),
            dim,
            bounds,
        })
    }

    pub fn genes(&self) -> Vec<f64> {
        let mut g = self.masks.clone();
        g.extend_from_slice(&self.centroids);
        g
    }

    /// Lower/upper bound of gene `k` of the flat vector.
    pub fn gene_bounds(&self, k: usize) -> (f64, f64) {
        if k < self.c_max() {
            (0.0, 1.0)
        } else {
            self.bounds[(k - self.c_max()) % self.dim]
        }
    }

    pub fn len(&self) -> usize {
        self.masks.len() + self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn c_max(&self) -> usize {
        self.masks.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn masks(&self) -> &[f64] {
        &self.masks
    }

    pub fn centroid(&self, c: usize) -> &[f64] {
        &self.centroids[c * self.dim..(c + 1) * self.dim]
    }

    pub fn is_active(&self, c: usize) -> bool {
        self.masks[c] >= ACTIVATION_THRESHOLD
    }

    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.c_max()).filter(|&c| self.is_active(c)).collect()
    }

    pub fn active_count(&self) -> usize {
        self.masks.iter().filter(|&&m| m >= ACTIVATION_THRESHOLD).count()
    }

    pub fn set_mask(&mut self, c: usize, value: f64) {
        self.masks[c] = value;
    }

    pub fn set_centroid(&mut self, c: usize, value: &[f64]) {
        let dim = self.dim;
        let dst = &mut self.centroids[c * dim..(c + 1) * dim];
        for ((d, v), (lo, hi)) in dst.iter_mut().zip(value).zip(&self.bounds) {
            *d = v.clamp(*lo, *hi);
        }
    }

    /// Replace the bounds and clip every centroid into them.
    pub fn rebound(&mut self, bounds: Vec<(f64, f64)>) {
        debug_assert_eq!(bounds.len(), self.dim);
        self.bounds = bounds;
        for c in 0..self.c_max() {
            let v = self.centroid(c).to_vec();
            self.set_centroid(c, &v);
        }
    }
}

/// Hard assignment of samples to active centroids.
///
/// `clusters[k]` is the centroid index (not its rank among active ones) of the
/// sample `ids[k]`; ids are ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    ids: Vec<SampleId>,
    clusters: Vec<usize>,
    active: Vec<usize>,
}

impl Partition {
    pub fn new(assignment: Vec<(SampleId, usize)>, active: Vec<usize>) -> Self {
        let mut assignment = assignment;
        assignment.sort_by_key(|a| a.0);
        let mut active = active;
        active.sort_unstable();
        active.dedup();
        Partition {
            ids: assignment.iter().map(|a| a.0).collect(),
            clusters: assignment.iter().map(|a| a.1).collect(),
            active,
        }
    }

    pub fn ids(&self) -> &[SampleId] {
        &self.ids
    }

    pub fn clusters(&self) -> &[usize] {
        &self.clusters
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn cluster_of(&self, id: SampleId) -> Option<usize> {
        self.ids.binary_search(&id).ok().map(|k| self.clusters[k])
    }

    /// Number of clusters that actually hold samples.
    pub fn n_clusters(&self) -> usize {
        let mut c = self.clusters.clone();
        c.sort_unstable();
        c.dedup();
        c.len()
    }

    /// Restrict to the given ids (ids missing from the partition are skipped).
    pub fn restrict(&self, ids: &[SampleId]) -> Partition {
        let (ids, clusters) = ids
            .iter()
            .filter_map(|&id| self.cluster_of(id).map(|c| (id, c)))
            .unzip();
        Partition {
            ids,
            clusters,
            active: self.active.clone(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (SampleId, usize)> + '_ {
        self.ids.iter().copied().zip(self.clusters.iter().copied())
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

pub fn random_genome<R: Rng + ?Sized>(c_max: usize, bounds: &[(f64, f64)], rng: &mut R) -> Genome {
    assert!(c_max >= 2, "c_max must be at least 2");
    let masks = (0..c_max).map(|_| rng.random::<f64>()).collect();
    let mut centroids = Vec::with_capacity(c_max * bounds.len());
    for _ in 0..c_max {
        for &(lo, hi) in bounds {
            centroids.push(lo + (hi - lo) * rng.random::<f64>());
        }
    }
    let g = Genome {
        masks,
        centroids,
        dim: bounds.len(),
        bounds: bounds.to_vec(),
    };
    repair(g, rng)
}

/// Active centroids in ascending index order.
pub fn active_centroids(g: &Genome) -> Vec<(usize, &[f64])> {
    g.active_indices()
        .into_iter()
        .map(|c| (c, g.centroid(c)))
        .collect()
}

/// Raise the largest inactive masks until at least two centroids are active.
pub fn repair<R: Rng + ?Sized>(mut g: Genome, rng: &mut R) -> Genome {
    repair_in_place(&mut g, rng);
    g
}

pub fn repair_in_place<R: Rng + ?Sized>(g: &mut Genome, rng: &mut R) {
    while g.active_count() < 2.min(g.c_max()) {
        let c = (0..g.c_max())
            .filter(|&c| !g.is_active(c))
            .max_by(|&a, &b| g.masks[a].total_cmp(&g.masks[b]).then(b.cmp(&a)))
            .expect("an inactive centroid exists");
        g.masks[c] = ACTIVATION_THRESHOLD + 0.5 * rng.random::<f64>();
    }
}

/// Nearest active centroid of `p`; ties go to the lowest index.
pub(crate) fn nearest(active: &[(usize, &[f64])], p: &[f64]) -> (usize, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    for &(c, z) in active {
        let d = sq_dist(z, p);
        if d < best.1 {
            best = (c, d);
        }
    }
    (best.0, best.1.sqrt())
}

fn check_dim(g: &Genome, s: &Snapshot) -> Result<()> {
    if !s.is_empty() && s.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: s.dim(),
        });
    }
    Ok(())
}

/// Decode: assign each sample to its nearest active centroid.
///
/// A genome with fewer than two active centroids is repaired (with a fixed
/// seed) before decoding.
pub fn assign_memberships(g: &Genome, s: &Snapshot) -> Result<Partition> {
    check_dim(g, s)?;
    if g.active_count() < 2 {
        let fixed = repair(g.clone(), &mut ChaCha8Rng::seed_from_u64(0));
        return assign_memberships(&fixed, s);
    }
    let active = active_centroids(g);
    let clusters = s.points().map(|p| nearest(&active, p).0).collect();
    Ok(Partition {
        ids: s.ids().to_vec(),
        clusters,
        active: g.active_indices(),
    })
}

/// Encode: move every active centroid to the mean of its members in `s`.
///
/// Active centroids without members are deactivated; the result is repaired
/// and means are clipped into the genome bounds.
pub fn recompute_centroids<R: Rng + ?Sized>(
    g: &Genome,
    p: &Partition,
    s: &Snapshot,
    rng: &mut R,
) -> Result<Genome> {
    check_dim(g, s)?;
    let dim = g.dim();
    let mut sums = vec![0.0; g.c_max() * dim];
    let mut counts = vec![0usize; g.c_max()];
    let aligned = p.ids() == s.ids();
    for (k, (id, c)) in p.iter().enumerate() {
        let row = if aligned { Some(k) } else { s.row_of(id) };
        let Some(row) = row else { continue };
        counts[c] += 1;
        for (acc, x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(s.point(row)) {
            *acc += x;
        }
    }
    let mut out = g.clone();
    for c in g.active_indices() {
        if counts[c] == 0 {
            out.masks[c] = 0.0;
            continue;
        }
        let n = counts[c] as f64;
        let mean: Vec<f64> = sums[c * dim..(c + 1) * dim].iter().map(|x| x / n).collect();
        out.set_centroid(c, &mean);
    }
    repair_in_place(&mut out, rng);
    Ok(out)
}

/// One decode/encode pass on the same snapshot.
pub fn refine<R: Rng + ?Sized>(g: &Genome, s: &Snapshot, rng: &mut R) -> Result<Genome> {
    let p = assign_memberships(g, s)?;
    recompute_centroids(g, &p, s, rng)
}

/// Carry a genome from the data space of `from` into that of `to`.
///
/// Memberships are decoded on `from` and re-encoded on `to`, using only the
/// samples present in both snapshots. The genome takes the bounds of `to`.
pub fn transform_centroids<R: Rng + ?Sized>(
    g: &Genome,
    from: &Snapshot,
    to: &Snapshot,
    rng: &mut R,
) -> Result<Genome> {
    let common = common_samples(from, to);
    if common.is_empty() {
        return Err(Error::NoCommonSamples);
    }
    check_dim(g, to)?;
    let from_common = from.restrict_to(&common);
    let to_common = to.restrict_to(&common);
    let p = assign_memberships(g, &from_common)?;
    let mut moved = g.clone();
    moved.rebound(to.bounds());
    recompute_centroids(&moved, &p, &to_common, rng)
}
