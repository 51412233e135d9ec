//! k-means with temporal smoothness in the centroid update.
//!
//! Each centroid is pulled towards its counterpart of the previous time:
//! `z = (1 - alpha) * mean(members) + alpha * z_prev`, which minimizes
//! `(1 - alpha) * sum |x - z|^2 + alpha * n * |z - z_prev|^2` per cluster.
//! The evolutionary baselines live in [`crate::engine`].

use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Snapshot, TemporalDataset};
use crate::engine::{EngineConfig, RunResult, StepResult};
use crate::error::{Error, Result};
use crate::genome::{nearest, sq_dist, Partition};

pub const MAX_LLOYD_ITER: usize = 100;

#[derive(Debug, Clone)]
struct Fit {
    centroids: Vec<Vec<f64>>,
    assignment: Vec<usize>,
    cost: f64,
}

fn assign(centroids: &[Vec<f64>], s: &Snapshot) -> Vec<usize> {
    let active: Vec<(usize, &[f64])> = centroids.iter().enumerate().map(|(c, z)| (c, z.as_slice())).collect();
    s.points().map(|p| nearest(&active, p).0).collect()
}

/// Smoothed objective of a fit: `(1 - alpha) * SSE + alpha * sum n_c |z_c - a_c|^2`.
fn smoothed_cost(centroids: &[Vec<f64>], assignment: &[usize], s: &Snapshot, anchors: Option<&[Vec<f64>]>, alpha: f64) -> f64 {
    let sse: f64 = assignment
        .iter()
        .enumerate()
        .map(|(r, &c)| sq_dist(s.point(r), &centroids[c]))
        .sum();
    let Some(anchors) = anchors else { return sse };
    let mut counts = vec![0usize; centroids.len()];
    assignment.iter().for_each(|&c| counts[c] += 1);
    let temporal: f64 = (0..centroids.len())
        .map(|c| counts[c] as f64 * sq_dist(&centroids[c], &anchors[c]))
        .sum();
    (1.0 - alpha) * sse + alpha * temporal
}

/// Lloyd iterations from `init`; returns the fit and the iterations used.
fn lloyd(
    init: Vec<Vec<f64>>,
    s: &Snapshot,
    anchors: Option<&[Vec<f64>]>,
    alpha: f64,
    max_iter: usize,
) -> (Fit, usize) {
    let k = init.len();
    let d = s.dim();
    let mut centroids = init;
    let mut assignment = assign(&centroids, s);
    let mut iters = 0;
    while iters < max_iter {
        iters += 1;
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (r, &c) in assignment.iter().enumerate() {
            counts[c] += 1;
            for (a, x) in sums[c].iter_mut().zip(s.point(r)) {
                *a += x;
            }
        }
        for c in 0..k {
            // an empty cluster keeps its centroid
            if counts[c] == 0 {
                continue;
            }
            let n = counts[c] as f64;
            for j in 0..d {
                let mean = sums[c][j] / n;
                centroids[c][j] = match anchors {
                    Some(a) => (1.0 - alpha) * mean + alpha * a[c][j],
                    None => mean,
                };
            }
        }
        let next = assign(&centroids, s);
        let stable = next == assignment;
        assignment = next;
        if stable {
            break;
        }
    }
    let cost = smoothed_cost(&centroids, &assignment, s, anchors, alpha);
    (
        Fit {
            centroids,
            assignment,
            cost,
        },
        iters,
    )
}

/// Reorder `init` so that centroid `c` starts next to anchor `c`, greedily by
/// smallest distance.
fn align_to_anchors(init: Vec<Vec<f64>>, anchors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = init.len();
    let mut pairs: Vec<(f64, usize, usize)> = (0..k)
        .flat_map(|i| (0..k).map(move |a| (i, a)))
        .map(|(i, a)| (sq_dist(&init[i], &anchors[a]), i, a))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut slot: Vec<Option<Vec<f64>>> = vec![None; k];
    let mut used = vec![false; k];
    for (_, i, a) in pairs {
        if !used[i] && slot[a].is_none() {
            used[i] = true;
            slot[a] = Some(init[i].clone());
        }
    }
    slot.into_iter().map(|z| z.expect("complete matching")).collect()
}

/// Best of repeated Lloyd runs within `budget` iterations.
fn kmeans_step<R: Rng + ?Sized>(
    s: &Snapshot,
    k: usize,
    anchors: Option<&[Vec<f64>]>,
    alpha: f64,
    budget: usize,
    rng: &mut R,
) -> Result<(Fit, usize)> {
    if k > s.len() {
        return Err(Error::InvalidConfig(format!("k = {k} exceeds {} samples", s.len())));
    }
    let mut best: Option<Fit> = None;
    let mut used = 0;
    let mut restart = 0;
    while used < budget.max(1) {
        let init = match anchors {
            // the first start continues from the previous centroids
            Some(a) if restart == 0 => a.to_vec(),
            _ => {
                let rows = sample(rng, s.len(), k);
                let init: Vec<Vec<f64>> = rows.iter().map(|r| s.point(r).to_vec()).collect();
                match anchors {
                    Some(a) => align_to_anchors(init, a),
                    None => init,
                }
            }
        };
        let cap = MAX_LLOYD_ITER.min(budget.max(1) - used);
        let (fit, iters) = lloyd(init, s, anchors, alpha, cap);
        used += iters;
        restart += 1;
        if best.as_ref().is_none_or(|b| fit.cost < b.cost) {
            best = Some(fit);
        }
    }
    Ok((best.expect("at least one restart"), used))
}

/// k-means over time with smoothness weight `alpha`. Restarts share the
/// per-step budget of `cfg`, one Lloyd iteration counting as one evaluation.
pub fn run_kmeans_cot(data: &TemporalDataset, k: usize, alpha: f64, cfg: &EngineConfig) -> Result<RunResult> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("k = {k} < 2")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig(format!("alpha {alpha} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut prev: Option<Vec<Vec<f64>>> = None;
    let mut steps = Vec::with_capacity(data.horizon());
    for s in data.snapshots() {
        let start = Instant::now();
        let (fit, used) = kmeans_step(s, k, prev.as_deref(), alpha, cfg.budget, &mut rng)?;
        let partition = Partition::new(
            s.ids().iter().copied().zip(fit.assignment.iter().copied()).collect(),
            (0..k).collect(),
        );
        steps.push(StepResult {
            t: s.time_index(),
            n_clusters: partition.n_clusters(),
            partition,
            alpha: None,
            weight: None,
            evaluations: used,
            accumulation_evaluations: 0,
            seconds: start.elapsed().as_secs_f64(),
        });
        prev = Some(fit.centroids);
    }
    Ok(RunResult {
        algorithm: "kmeanscot".into(),
        seed: cfg.seed,
        steps,
    })
}
