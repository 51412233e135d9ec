//! Flocking simulation used as the `bird_flocks` dataset.
//!
//! Birds follow cohesion towards their own flock centre, separation from
//! close neighbours and alignment with their flock's mean velocity. After each
//! move, one stray bird per flock (the one farthest from its flock centre)
//! switches to a random other flock and steers towards it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{SampleId, Snapshot, TemporalDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoidsConfig {
    pub n_flocks: usize,
    pub birds_per_flock: usize,
    pub horizon: usize,
    /// Vertical distance between the starting boxes of neighbouring flocks.
    pub lane_spacing: f64,
    /// Side length of the square each flock starts in.
    pub spawn_width: f64,
    pub cohesion: f64,
    pub separation: f64,
    pub separation_radius: f64,
    pub alignment: f64,
    pub max_speed: f64,
    /// Speed of a bird heading for its new flock.
    pub join_speed: f64,
    /// Steps a newly joined bird is exempt from being picked as a stray.
    pub settle_steps: usize,
}

impl Default for BoidsConfig {
    fn default() -> Self {
        BoidsConfig {
            n_flocks: 4,
            birds_per_flock: 25,
            horizon: 30,
            lane_spacing: 12.0,
            spawn_width: 6.0,
            cohesion: 0.05,
            separation: 0.15,
            separation_radius: 0.6,
            alignment: 0.2,
            max_speed: 1.5,
            join_speed: 4.0,
            settle_steps: 3,
        }
    }
}

struct Bird {
    pos: [f64; 2],
    vel: [f64; 2],
    flock: usize,
    joined_at: Option<usize>,
}

fn centroids(birds: &[Bird], n_flocks: usize) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    let mut c = vec![[0.0; 2]; n_flocks];
    let mut v = vec![[0.0; 2]; n_flocks];
    let mut n = vec![0.0; n_flocks];
    for b in birds {
        n[b.flock] += 1.0;
        for k in 0..2 {
            c[b.flock][k] += b.pos[k];
            v[b.flock][k] += b.vel[k];
        }
    }
    for f in 0..n_flocks {
        if n[f] > 0.0 {
            for k in 0..2 {
                c[f][k] /= n[f];
                v[f][k] /= n[f];
            }
        }
    }
    (c, v)
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn cap(v: &mut [f64; 2], max: f64) {
    let s = (v[0] * v[0] + v[1] * v[1]).sqrt();
    if s > max {
        v[0] *= max / s;
        v[1] *= max / s;
    }
}

fn snapshot(t: usize, birds: &[Bird]) -> Snapshot {
    Snapshot::from_sorted_parts(
        t,
        2,
        (0..birds.len() as SampleId).collect(),
        birds.iter().flat_map(|b| b.pos).collect(),
        Some(birds.iter().map(|b| b.flock).collect()),
    )
}

pub fn gen_bird_flocks(cfg: &BoidsConfig, seed: u64) -> Result<TemporalDataset> {
    if cfg.n_flocks < 2 {
        return Err(Error::InvalidConfig("need at least two flocks".into()));
    }
    if cfg.birds_per_flock == 0 || cfg.horizon == 0 {
        return Err(Error::InvalidConfig(
            "birds_per_flock and horizon must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut birds = Vec::with_capacity(cfg.n_flocks * cfg.birds_per_flock);
    for f in 0..cfg.n_flocks {
        for _ in 0..cfg.birds_per_flock {
            birds.push(Bird {
                pos: [
                    rng.random_range(0.0..cfg.spawn_width),
                    f as f64 * cfg.lane_spacing + rng.random_range(0.0..cfg.spawn_width),
                ],
                vel: [1.0 + rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)],
                flock: f,
                joined_at: None,
            });
        }
    }
    let mut snapshots = vec![snapshot(1, &birds)];
    for t in 2..=cfg.horizon {
        let (centre, mean_vel) = centroids(&birds, cfg.n_flocks);
        let mut new_vel = Vec::with_capacity(birds.len());
        for (i, b) in birds.iter().enumerate() {
            let mut v = b.vel;
            let c = centre[b.flock];
            let joining = b.joined_at.is_some_and(|j| j + cfg.settle_steps > t);
            let pull = if joining { 4.0 * cfg.cohesion } else { cfg.cohesion };
            for k in 0..2 {
                v[k] += pull * (c[k] - b.pos[k]);
                v[k] += cfg.alignment * (mean_vel[b.flock][k] - b.vel[k]);
            }
            for (j, o) in birds.iter().enumerate() {
                if i != j && dist(b.pos, o.pos) < cfg.separation_radius {
                    for k in 0..2 {
                        v[k] += cfg.separation * (b.pos[k] - o.pos[k]);
                    }
                }
            }
            cap(&mut v, if joining { cfg.join_speed } else { cfg.max_speed });
            new_vel.push(v);
        }
        for (b, v) in birds.iter_mut().zip(new_vel) {
            b.vel = v;
            b.pos[0] += v[0];
            b.pos[1] += v[1];
        }
        // one stray per flock, chosen before any flock changes membership
        let (centre, _) = centroids(&birds, cfg.n_flocks);
        let mut strays = Vec::with_capacity(cfg.n_flocks);
        for f in 0..cfg.n_flocks {
            let farthest = |settled_only: bool| {
                birds
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| b.flock == f)
                    .filter(|(_, b)| {
                        !settled_only || b.joined_at.is_none_or(|j| j + cfg.settle_steps <= t)
                    })
                    .max_by(|a, b| {
                        dist(a.1.pos, centre[f]).total_cmp(&dist(b.1.pos, centre[f]))
                    })
                    .map(|(i, _)| i)
            };
            if let Some(i) = farthest(true).or_else(|| farthest(false)) {
                let mut dest = rng.random_range(0..cfg.n_flocks - 1);
                if dest >= f {
                    dest += 1;
                }
                strays.push((i, dest));
            }
        }
        for (i, dest) in strays {
            let b = &mut birds[i];
            b.flock = dest;
            b.joined_at = Some(t);
            let c = centre[dest];
            let mut v = [c[0] - b.pos[0], c[1] - b.pos[1]];
            cap(&mut v, cfg.join_speed);
            b.vel = v;
        }
        snapshots.push(snapshot(t, &birds));
    }
    TemporalDataset::new("bird_flocks", snapshots)
}
