//! Automatic inference of the temporal smoothness weight.
//!
//! Each cluster of the current time is matched to a cluster of the previous
//! final partition. A Gaussian fit on the previous cluster is stacked with
//! cross-validated Gaussian fits on the current cluster, and EM gives the
//! weight of the previous model. Pair weights are averaged by cluster size.

pub mod em;
pub mod gaussian;
pub mod hungarian;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{common_samples, normalize_zero_mean, SampleId, Snapshot};
use crate::engine::{knee_point, nondominated_fronts, Individual};
use crate::error::{Error, Result};
use crate::genome::{assign_memberships, Partition};
use crate::objectives::ObjectiveVector;

pub use em::{cv_likelihood_matrix, em_alpha, LikelihoodMatrix};
pub use gaussian::{fit_gaussian, GaussianModel, DENSITY_FLOOR};
pub use hungarian::{match_clusters, max_weight_assignment, overlap_table};

/// Weight estimated for one matched cluster pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairWeight {
    pub cur_cluster: usize,
    pub prev_cluster: usize,
    pub alpha: f64,
    pub prev_size: usize,
    pub cur_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRecord {
    pub pairs: Vec<PairWeight>,
    pub alpha: f64,
}

impl WeightRecord {
    pub fn empty() -> Self {
        WeightRecord {
            pairs: Vec::new(),
            alpha: 0.0,
        }
    }

    /// Size-weighted mean of the pair weights, zero without pairs.
    pub fn aggregate(pairs: &[PairWeight]) -> f64 {
        let mass: usize = pairs.iter().map(|p| p.prev_size + p.cur_size).sum();
        if mass == 0 {
            return 0.0;
        }
        let sum: f64 = pairs
            .iter()
            .map(|p| (p.prev_size + p.cur_size) as f64 * p.alpha)
            .sum();
        (sum / mass as f64).clamp(0.0, 1.0)
    }
}

/// Knee of the first front of `parents ∪ offspring`, decoded on `s`.
pub fn pseudo_partition(
    parents: &[Individual],
    offspring: &[Individual],
    s: &Snapshot,
) -> Result<Partition> {
    let union: Vec<&Individual> = parents.iter().chain(offspring).collect();
    if union.is_empty() {
        return Err(Error::ContractViolation("empty population".into()));
    }
    if union.iter().any(|i| i.objectives.accumulated) {
        return Err(Error::ContractViolation(
            "pseudo partition needs plain fitness".into(),
        ));
    }
    let objs: Vec<ObjectiveVector> = union.iter().map(|i| i.objectives).collect();
    let front = nondominated_fronts(&objs)?.swap_remove(0);
    let front_objs: Vec<ObjectiveVector> = front.iter().map(|&i| objs[i]).collect();
    let knee = front[knee_point(&front_objs)];
    assign_memberships(&union[knee].genome, s)
}

fn members(p: &Partition, cluster: usize, s: &Snapshot) -> Vec<usize> {
    p.iter()
        .filter(|&(_, c)| c == cluster)
        .filter_map(|(id, _)| s.row_of(id))
        .collect()
}

fn pair_alpha(prev_pts: &[&[f64]], cur_pts: &[&[f64]], v_cap: usize, seed: u64) -> f64 {
    let Ok(model_prev) = fit_gaussian(prev_pts) else {
        return 0.0;
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match cv_likelihood_matrix(cur_pts, &model_prev, v_cap, &mut rng) {
        Ok(m) => em_alpha(&m),
        Err(_) => 0.0,
    }
}

/// Infer the smoothness weight between `prev` and `cur`.
///
/// `prev_partition` is the final partition of the previous time; the current
/// side uses the pseudo partition of the final populations. Only samples
/// present at both times take part.
pub fn tune_weight<R: Rng + ?Sized>(
    prev_partition: &Partition,
    prev: &Snapshot,
    parents: &[Individual],
    offspring: &[Individual],
    cur: &Snapshot,
    v_cap: usize,
    rng: &mut R,
) -> Result<WeightRecord> {
    let common: Vec<SampleId> = common_samples(prev, cur);
    if common.is_empty() {
        return Ok(WeightRecord::empty());
    }
    let prev_n = normalize_zero_mean(prev).restrict_to(&common);
    let cur_n = normalize_zero_mean(cur).restrict_to(&common);
    let cur_part = pseudo_partition(parents, offspring, cur)?.restrict(&common);
    let prev_part = prev_partition.restrict(&common);
    let matched = match match_clusters(&cur_part, &prev_part, &common) {
        Ok(m) => m,
        Err(Error::NoCommonSamples) => return Ok(WeightRecord::empty()),
        Err(e) => return Err(e),
    };
    // fold seeds drawn up front so the parallel part is order independent
    let jobs: Vec<(usize, usize, Vec<usize>, Vec<usize>, u64)> = matched
        .into_iter()
        .map(|(c, p)| {
            let prev_rows = members(&prev_part, p, &prev_n);
            let cur_rows = members(&cur_part, c, &cur_n);
            (c, p, prev_rows, cur_rows, rng.random())
        })
        .collect();
    let pairs: Vec<PairWeight> = jobs
        .into_par_iter()
        .map(|(c, p, prev_rows, cur_rows, seed)| {
            let prev_pts: Vec<&[f64]> = prev_rows.iter().map(|&r| prev_n.point(r)).collect();
            let cur_pts: Vec<&[f64]> = cur_rows.iter().map(|&r| cur_n.point(r)).collect();
            PairWeight {
                cur_cluster: c,
                prev_cluster: p,
                alpha: pair_alpha(&prev_pts, &cur_pts, v_cap, seed),
                prev_size: prev_pts.len(),
                cur_size: cur_pts.len(),
            }
        })
        .collect();
    let alpha = WeightRecord::aggregate(&pairs);
    Ok(WeightRecord { pairs, alpha })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::Genome;
    use crate::objectives::eval_fitness;
    use rand_distr::{Distribution, Normal};

    const CENTERS: [[f64; 2]; 4] = [[3.0, 3.0], [-3.0, 3.0], [-3.0, -3.0], [3.0, -3.0]];

    fn blobs(shift: f64, seed: u64) -> Snapshot {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut rows = Vec::new();
        for (c, m) in CENTERS.iter().enumerate() {
            for k in 0..40 {
                let id = (c * 40 + k) as u64;
                let x = m[0] + shift * (c as f64) + noise.sample(&mut rng);
                let y = m[1] + noise.sample(&mut rng);
                rows.push((id, vec![x, y]));
            }
        }
        Snapshot::new(1, rows, None).unwrap()
    }

    fn truth() -> Partition {
        Partition::new((0..160).map(|i| (i as u64, i / 40)).collect(), vec![0, 1, 2, 3])
    }

    fn centroid_individual(centers: &[[f64; 2]], s: &Snapshot) -> Individual {
        let g = Genome::new(
            vec![0.9; centers.len()],
            centers.iter().map(|c| c.to_vec()).collect(),
            s.bounds(),
        )
        .unwrap();
        let objectives = eval_fitness(&g, s).unwrap();
        Individual::new(g, objectives)
    }

    #[test]
    fn identical_times_give_high_weight() {
        let s = blobs(0.0, 3);
        let ind = centroid_individual(&CENTERS, &s);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rec = tune_weight(&truth(), &s, &[ind], &[], &s, 500, &mut rng).unwrap();
        assert_eq!(rec.pairs.len(), 4);
        assert!(rec.alpha >= 0.4, "alpha {}", rec.alpha);
    }

    #[test]
    fn displaced_previous_gives_low_weight() {
        let prev = blobs(0.0, 3);
        // same samples, each cluster pushed far apart horizontally
        let cur = blobs(12.0, 4);
        let centers: Vec<[f64; 2]> = CENTERS
            .iter()
            .enumerate()
            .map(|(c, m)| [m[0] + 12.0 * c as f64, m[1]])
            .collect();
        let ind = centroid_individual(&centers, &cur);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rec = tune_weight(&truth(), &prev, &[ind], &[], &cur, 500, &mut rng).unwrap();
        assert!(rec.alpha <= 0.1, "alpha {}", rec.alpha);
    }

    #[test]
    fn no_common_samples_gives_zero() {
        let prev = blobs(0.0, 3);
        let cur = Snapshot::new(2, vec![(1000, vec![0.0, 0.0]), (1001, vec![1.0, 1.0])], None).unwrap();
        let ind = centroid_individual(&CENTERS[..2], &cur);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rec = tune_weight(&truth(), &prev, &[ind], &[], &cur, 500, &mut rng).unwrap();
        assert_eq!(rec, WeightRecord::empty());
    }

    #[test]
    fn deterministic_given_seed() {
        let prev = blobs(0.0, 3);
        let cur = blobs(0.5, 8);
        let ind = centroid_individual(&CENTERS, &cur);
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            tune_weight(&truth(), &prev, std::slice::from_ref(&ind), &[], &cur, 10, &mut rng).unwrap()
        };
        assert_eq!(run(2), run(2));
    }

    #[test]
    fn aggregation_is_size_weighted() {
        let pairs = vec![
            PairWeight { cur_cluster: 0, prev_cluster: 0, alpha: 1.0, prev_size: 10, cur_size: 10 },
            PairWeight { cur_cluster: 1, prev_cluster: 1, alpha: 0.0, prev_size: 5, cur_size: 15 },
        ];
        assert!((WeightRecord::aggregate(&pairs) - 0.5).abs() < 1e-15);
        assert_eq!(WeightRecord::aggregate(&pairs[..1]), 1.0);
    }

    #[test]
    fn pseudo_partition_separates_blobs() {
        let s = blobs(0.0, 1);
        let good = centroid_individual(&[[0.0, 3.0], [0.0, -3.0]], &s);
        let p = pseudo_partition(std::slice::from_ref(&good), &[], &s).unwrap();
        assert_eq!(p.n_clusters(), 2);
        for (id, c) in p.iter() {
            let top = id < 80;
            assert_eq!(c, if top { 0 } else { 1 });
        }
        let dup = pseudo_partition(&[good.clone(), good.clone()], &[good], &s).unwrap();
        assert_eq!(dup, p);
    }
}
