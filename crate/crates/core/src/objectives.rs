//! Clustering validity objectives and their temporal accumulation.
//!
//! Both objectives are minimized: `f_cp` is the sum of unsquared Euclidean
//! distances from each sample to its nearest active centroid, `f_sep` the
//! reciprocal of the smallest distance between two active centroids.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Snapshot;
use crate::error::{Error, Result};
use crate::genome::{active_centroids, dist, nearest, transform_centroids, Genome};

/// `f_sep` of a genome whose active centroids coincide.
pub const COINCIDENT_PENALTY: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub f_cp: f64,
    /// Second objective. Separation for ERCOT; the temporal penalty for penaltyEC.
    pub f_sep: f64,
    pub accumulated: bool,
}

impl ObjectiveVector {
    pub fn plain(f_cp: f64, f_sep: f64) -> Self {
        ObjectiveVector {
            f_cp,
            f_sep,
            accumulated: false,
        }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.f_cp, self.f_sep]
    }

    /// Pareto dominance under minimization.
    pub fn dominates(&self, other: &ObjectiveVector) -> bool {
        let (a, b) = (self.as_array(), other.as_array());
        a.iter().zip(&b).all(|(x, y)| x <= y) && a.iter().zip(&b).any(|(x, y)| x < y)
    }

    /// `(1 - alpha) * self + alpha * previous`, flagged as accumulated.
    pub fn blend(&self, previous: &ObjectiveVector, alpha: f64) -> ObjectiveVector {
        ObjectiveVector {
            f_cp: (1.0 - alpha) * self.f_cp + alpha * previous.f_cp,
            f_sep: (1.0 - alpha) * self.f_sep + alpha * previous.f_sep,
            accumulated: true,
        }
    }
}

pub fn compactness(g: &Genome, s: &Snapshot) -> f64 {
    let active = active_centroids(g);
    s.points().map(|p| nearest(&active, p).1).sum()
}

pub fn separation(g: &Genome) -> f64 {
    let active = active_centroids(g);
    let mut min = f64::INFINITY;
    for i in 0..active.len() {
        for j in i + 1..active.len() {
            min = min.min(dist(active[i].1, active[j].1));
        }
    }
    if min > 0.0 {
        1.0 / min
    } else {
        COINCIDENT_PENALTY
    }
}

pub fn eval_fitness(g: &Genome, s: &Snapshot) -> Result<ObjectiveVector> {
    if !s.is_empty() && s.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: s.dim(),
        });
    }
    if g.active_count() < 2 {
        return Err(Error::ContractViolation(
            "fitness needs at least two active centroids".into(),
        ));
    }
    Ok(ObjectiveVector::plain(compactness(g, s), separation(g)))
}

/// Blend an already computed plain fitness on `current` with the fitness of the
/// genome carried back onto `previous`.
///
/// Returns the accumulated vector and whether the previous-side evaluation
/// happened. Without common samples the weight collapses to zero.
pub fn accumulate_from<R: Rng + ?Sized>(
    plain: &ObjectiveVector,
    g: &Genome,
    current: &Snapshot,
    previous: &Snapshot,
    alpha: f64,
    rng: &mut R,
) -> Result<(ObjectiveVector, bool)> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::ContractViolation(format!(
            "smoothness weight {alpha} outside [0, 1]"
        )));
    }
    match transform_centroids(g, current, previous, rng) {
        Ok(back) => {
            let prev = eval_fitness(&back, previous)?;
            Ok((plain.blend(&prev, alpha), true))
        }
        Err(Error::NoCommonSamples) => Ok((plain.blend(plain, 0.0), false)),
        Err(e) => Err(e),
    }
}

pub fn accumulate_fitness<R: Rng + ?Sized>(
    g: &Genome,
    current: &Snapshot,
    previous: &Snapshot,
    alpha: f64,
    rng: &mut R,
) -> Result<ObjectiveVector> {
    let plain = eval_fitness(g, current)?;
    accumulate_from(&plain, g, current, previous, alpha, rng).map(|r| r.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn snap(t: usize, rows: &[[f64; 2]]) -> Snapshot {
        Snapshot::new(
            t,
            rows.iter()
                .enumerate()
                .map(|(i, c)| (i as u64, c.to_vec()))
                .collect(),
            None,
        )
        .unwrap()
    }

    fn genome(cs: &[[f64; 2]]) -> Genome {
        Genome::new(
            vec![1.0; cs.len()],
            cs.iter().map(|c| c.to_vec()).collect(),
            vec![(-100.0, 100.0); 2],
        )
        .unwrap()
    }

    #[test]
    fn samples_on_centroids() {
        let g = genome(&[[0.0, 0.0], [4.0, 0.0]]);
        let f = eval_fitness(&g, &snap(1, &[[0.0, 0.0], [4.0, 0.0]])).unwrap();
        assert_eq!(f, ObjectiveVector::plain(0.0, 0.25));
        let f = eval_fitness(&g, &snap(1, &[[1.0, 0.0]])).unwrap();
        assert_eq!(f.f_cp, 1.0);
    }

    #[test]
    fn coincident_centroids_are_penalized() {
        let g = genome(&[[1.0, 1.0], [1.0, 1.0]]);
        assert_eq!(separation(&g), COINCIDENT_PENALTY);
    }

    #[test]
    fn dimension_mismatch() {
        let g = genome(&[[0.0, 0.0], [4.0, 0.0]]);
        let s = Snapshot::new(1, vec![(0, vec![1.0, 2.0, 3.0])], None).unwrap();
        assert!(eval_fitness(&g, &s).is_err());
    }

    #[test]
    fn direct_double_loop_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let k = rng.random_range(2..6);
            let cs: Vec<[f64; 2]> = (0..k)
                .map(|_| [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
                .collect();
            let ps: Vec<[f64; 2]> = (0..30)
                .map(|_| [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
                .collect();
            let g = genome(&cs);
            let f = eval_fitness(&g, &snap(1, &ps)).unwrap();
            // u_sc chosen by the first centroid attaining the minimum
            let d = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            let mut cp = 0.0;
            for p in &ps {
                let mut best = f64::INFINITY;
                for c in &cs {
                    if d(*c, *p) < best {
                        best = d(*c, *p);
                    }
                }
                cp += best;
            }
            let mut min = f64::INFINITY;
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        min = min.min(d(cs[i], cs[j]));
                    }
                }
            }
            assert!((f.f_cp - cp).abs() <= 1e-12 * cp.max(1.0));
            assert!((f.f_sep - 1.0 / min).abs() <= 1e-12 * f.f_sep);
        }
    }

    #[test]
    fn accumulation_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = genome(&[[0.0, 0.0], [5.0, 5.0]]);
        let cur = snap(2, &[[0.0, 1.0], [1.0, 0.0], [5.0, 6.0], [6.0, 5.0]]);
        let prev = snap(1, &[[0.0, 0.0], [2.0, 0.0], [5.0, 5.0], [7.0, 5.0]]);
        let plain = eval_fitness(&g, &cur).unwrap();
        let a0 = accumulate_fitness(&g, &cur, &prev, 0.0, &mut rng).unwrap();
        assert_eq!(a0.as_array(), plain.as_array());
        assert!(a0.accumulated);
        let back = transform_centroids(&g, &cur, &prev, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let fprev = eval_fitness(&back, &prev).unwrap();
        let a1 = accumulate_fitness(&g, &cur, &prev, 1.0, &mut rng).unwrap();
        assert_eq!(a1.as_array(), fprev.as_array());
    }

    #[test]
    fn accumulation_midpoint_on_six_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = genome(&[[0.0, 0.0], [6.0, 0.0]]);
        let cur = snap(2, &[[0.0, 1.0], [1.0, 0.0], [0.0, -1.0], [6.0, 1.0], [7.0, 0.0], [6.0, -1.0]]);
        let prev = snap(1, &[[0.0, 2.0], [2.0, 0.0], [0.0, -2.0], [6.0, 2.0], [8.0, 0.0], [6.0, -2.0]]);
        // current side: centroids unchanged, distances 1 each
        let f_cur = (6.0, 1.0 / 6.0);
        // previous side: members carried over keep their groups; means become
        // (2/3, 0) and (20/3, 0); distances recomputed by hand
        let c0 = [2.0 / 3.0, 0.0];
        let c1 = [20.0 / 3.0, 0.0];
        let dd = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let cp_prev = dd(c0, [0.0, 2.0]) + dd(c0, [2.0, 0.0]) + dd(c0, [0.0, -2.0])
            + dd(c1, [6.0, 2.0]) + dd(c1, [8.0, 0.0]) + dd(c1, [6.0, -2.0]);
        let f_prev = (cp_prev, 1.0 / 6.0);
        let a = accumulate_fitness(&g, &cur, &prev, 0.5, &mut rng).unwrap();
        assert!((a.f_cp - 0.5 * (f_cur.0 + f_prev.0)).abs() < 1e-12);
        assert!((a.f_sep - 0.5 * (f_cur.1 + f_prev.1)).abs() < 1e-12);
    }

    #[test]
    fn accumulation_without_overlap_falls_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = genome(&[[0.0, 0.0], [5.0, 5.0]]);
        let cur = snap(2, &[[0.0, 1.0], [5.0, 6.0]]);
        let prev = Snapshot::new(1, vec![(10, vec![0.0, 0.0])], None).unwrap();
        let a = accumulate_fitness(&g, &cur, &prev, 0.7, &mut rng).unwrap();
        assert_eq!(a.as_array(), eval_fitness(&g, &cur).unwrap().as_array());
        assert!(accumulate_fitness(&g, &cur, &prev, 1.5, &mut rng).is_err());
    }

    #[test]
    fn dominance() {
        let a = ObjectiveVector::plain(1.0, 1.0);
        let b = ObjectiveVector::plain(1.0, 2.0);
        assert!(a.dominates(&b));
        assert!(!b.dominates(&a));
        assert!(!a.dominates(&a));
    }
}
