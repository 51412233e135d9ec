//! Cross-validated likelihoods and the EM estimate of the mixing weight.

use rand::seq::SliceRandom;
use rand::Rng;

use super::gaussian::{mean_of, GaussianModel, Moments, DENSITY_FLOOR};
use crate::error::{Error, Result};

pub const EM_START: f64 = 0.5;
pub const EM_TOLERANCE: f64 = 1e-6;
pub const EM_MAX_ITER: usize = 500;

/// Per-point densities `(current, previous)`, both at least [`DENSITY_FLOOR`].
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodMatrix {
    pub rows: Vec<(f64, f64)>,
}

impl LikelihoodMatrix {
    pub fn new(rows: Vec<(f64, f64)>) -> Self {
        LikelihoodMatrix {
            rows: rows
                .into_iter()
                .map(|(c, p)| (c.max(DENSITY_FLOOR), p.max(DENSITY_FLOOR)))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `sum log((1 - alpha) cur + alpha prev)`.
    pub fn log_likelihood(&self, alpha: f64) -> f64 {
        self.rows
            .iter()
            .map(|&(c, p)| ((1.0 - alpha) * c + alpha * p).ln())
            .sum()
    }
}

/// Fold index of every point: a seeded permutation dealt round-robin.
pub(crate) fn fold_assignment<R: Rng + ?Sized>(n: usize, folds: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut fold = vec![0; n];
    for (k, &i) in order.iter().enumerate() {
        fold[i] = k % folds;
    }
    fold
}

/// Held-out densities of `cluster_cur` under fold-trained current models and
/// under the fixed `model_prev`.
///
/// Uses `min(v_cap, n)` folds, which is leave-one-out for clusters smaller
/// than `v_cap`.
pub fn cv_likelihood_matrix<R: Rng + ?Sized>(
    cluster_cur: &[&[f64]],
    model_prev: &GaussianModel,
    v_cap: usize,
    rng: &mut R,
) -> Result<LikelihoodMatrix> {
    let n = cluster_cur.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if v_cap < 2 {
        return Err(Error::InvalidConfig(format!("cv fold cap {v_cap} < 2")));
    }
    let folds = v_cap.min(n);
    let fold = fold_assignment(n, folds, rng);
    let shift = mean_of(cluster_cur);
    let mut total = Moments::new(shift.clone());
    let mut per_fold: Vec<Moments> = (0..folds).map(|_| Moments::new(shift.clone())).collect();
    for (p, &f) in cluster_cur.iter().zip(&fold) {
        total.add(p);
        per_fold[f].add(p);
    }
    let mut rows = vec![(0.0, 0.0); n];
    for (f, held_out) in per_fold.iter().enumerate() {
        let model_cur = total.minus(held_out).fit()?;
        for (i, p) in cluster_cur.iter().enumerate() {
            if fold[i] == f {
                rows[i] = (model_cur.density(p), model_prev.density(p));
            }
        }
    }
    Ok(LikelihoodMatrix::new(rows))
}

/// Derivative of the log-likelihood at `alpha`.
fn slope(matrix: &LikelihoodMatrix, alpha: f64) -> f64 {
    matrix
        .rows
        .iter()
        .map(|&(c, p)| (p - c) / ((1.0 - alpha) * c + alpha * p))
        .sum()
}

/// Weight of the previous-time model in the two-component stack, by EM.
///
/// EM slows to a crawl when the optimum sits on a boundary, so the result is
/// snapped to 0 or 1 when the (concave) log-likelihood is decreasing at 0 or
/// increasing at 1.
pub fn em_alpha(matrix: &LikelihoodMatrix) -> f64 {
    if matrix.is_empty() {
        return 0.0;
    }
    let n = matrix.len() as f64;
    let mut alpha = EM_START;
    for _ in 0..EM_MAX_ITER {
        let next = matrix
            .rows
            .iter()
            .map(|&(c, p)| {
                let prev = alpha * p;
                prev / ((1.0 - alpha) * c + prev)
            })
            .sum::<f64>()
            / n;
        let next = next.clamp(0.0, 1.0);
        let done = (next - alpha).abs() < EM_TOLERANCE;
        alpha = next;
        if done {
            break;
        }
    }
    if slope(matrix, 0.0) < 0.0 {
        0.0
    } else if slope(matrix, 1.0) > 0.0 {
        1.0
    } else {
        alpha
    }
}
