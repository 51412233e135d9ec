//! Gaussian benchmark generators: moving clusters, concept drift, sample churn
//! and cluster disappearance, plus the named `syn1`..`syn8` presets.
//!
//! Every sample keeps its id for its whole life. A sample's coordinates at time
//! `t` are the mean of its current cluster at `t` plus a fixed offset drawn when
//! it joined that cluster, so a moving cluster translates its point cloud and a
//! sample that switches cluster is redrawn from the destination Gaussian.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{boids, SampleId, Snapshot, TemporalDataset};
use crate::error::{Error, Result};

/// One isotropic Gaussian cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianClusterSpec {
    pub mean: Vec<f64>,
    /// Covariance is `covariance_scale * I`.
    pub covariance_scale: f64,
    pub count: usize,
}

impl GaussianClusterSpec {
    pub fn new(mean: Vec<f64>, covariance_scale: f64, count: usize) -> Self {
        GaussianClusterSpec {
            mean,
            covariance_scale,
            count,
        }
    }
}

/// Clusters of which one translates by `step` at every time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianScenario {
    pub specs: Vec<GaussianClusterSpec>,
    pub horizon: usize,
    pub moving_cluster: usize,
    pub step: Vec<f64>,
}

impl GaussianScenario {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
        }
        if self.specs.is_empty() {
            return Err(Error::InvalidConfig("no cluster specs".into()));
        }
        if self.moving_cluster >= self.specs.len() {
            return Err(Error::InvalidConfig(format!(
                "moving cluster {} out of range",
                self.moving_cluster
            )));
        }
        let dim = self.dim();
        if dim == 0 {
            return Err(Error::InvalidConfig("zero-dimensional cluster".into()));
        }
        for s in &self.specs {
            if s.mean.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.mean.len(),
                });
            }
            if s.count == 0 || s.covariance_scale.is_nan() || s.covariance_scale <= 0.0 {
                return Err(Error::InvalidConfig(
                    "cluster count must be >= 1 and covariance scale > 0".into(),
                ));
            }
        }
        if self.step.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.step.len(),
            });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.specs[0].mean.len()
    }

    /// Mean of `cluster` at time `t` (1-based): `mean_1 + (t-1) * step` for the moving cluster.
    pub fn mean_at(&self, cluster: usize, t: usize) -> Vec<f64> {
        let base = &self.specs[cluster].mean;
        if cluster != self.moving_cluster {
            return base.clone();
        }
        let k = t.saturating_sub(1) as f64;
        base.iter().zip(&self.step).map(|(m, s)| m + k * s).collect()
    }

    fn draw_offset(&self, cluster: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let sd = self.specs[cluster].covariance_scale.sqrt();
        (0..self.dim())
            .map(|_| sd * Distribution::<f64>::sample(&StandardNormal, rng))
            .collect::<Vec<f64>>()
    }

    fn position(&self, cluster: usize, t: usize, offset: &[f64]) -> Vec<f64> {
        self.mean_at(cluster, t)
            .into_iter()
            .zip(offset)
            .map(|(m, o)| m + o)
            .collect()
    }

    /// Draw the base dataset. Ids are assigned cluster by cluster from 0.
    pub fn generate(&self, name: &str, seed: u64) -> Result<TemporalDataset> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut members = Vec::new();
        for (c, spec) in self.specs.iter().enumerate() {
            for _ in 0..spec.count {
                members.push((c, self.draw_offset(c, &mut rng)));
            }
        }
        let dim = self.dim();
        let snapshots = (1..=self.horizon)
            .map(|t| {
                let mut coords = Vec::with_capacity(members.len() * dim);
                for (c, off) in &members {
                    coords.extend(self.position(*c, t, off));
                }
                Snapshot::from_sorted_parts(
                    t,
                    dim,
                    (0..members.len() as SampleId).collect(),
                    coords,
                    Some(members.iter().map(|(c, _)| *c).collect()),
                )
            })
            .collect();
        TemporalDataset::new(name, snapshots)
    }
}

pub fn gen_moving_gaussians(
    specs: Vec<GaussianClusterSpec>,
    horizon: usize,
    moving_cluster: usize,
    step: Vec<f64>,
    seed: u64,
) -> Result<TemporalDataset> {
    GaussianScenario {
        specs,
        horizon,
        moving_cluster,
        step,
    }
    .generate("moving_gaussians", seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DriftEvent {
    /// `count` random members of `from` move to the clusters in `to`, spread round-robin.
    Switch {
        time: usize,
        count: usize,
        from: usize,
        to: Vec<usize>,
    },
    /// The samples moved by the `event`-th entry of the schedule go back to their origin cluster.
    Return { time: usize, event: usize },
}

impl DriftEvent {
    fn time(&self) -> usize {
        match self {
            DriftEvent::Switch { time, .. } | DriftEvent::Return { time, .. } => *time,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ChurnEvent {
    /// Remove `per_cluster` random members of every cluster from this time on.
    Remove { time: usize, per_cluster: usize },
    /// Add `per_cluster` fresh samples to every cluster from this time on.
    Insert { time: usize, per_cluster: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisappearanceEvent {
    pub time: usize,
    pub cluster: usize,
}

fn snapshot_pos(data: &TemporalDataset, time: usize) -> Result<usize> {
    data.snapshots()
        .iter()
        .position(|s| s.time_index() == time)
        .ok_or_else(|| Error::InvalidEvent(format!("no snapshot at t={time}")))
}

fn members_of(s: &Snapshot, cluster: usize) -> Result<Vec<SampleId>> {
    let labels = s
        .labels()
        .ok_or(Error::MissingLabels(s.time_index()))?;
    Ok(s.ids()
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == cluster)
        .map(|(&id, _)| id)
        .collect())
}

/// Overwrite label and coordinates of `id` in the snapshot at position `pos`.
fn place(
    data: &mut TemporalDataset,
    scenario: &GaussianScenario,
    pos: usize,
    id: SampleId,
    cluster: usize,
    offset: &[f64],
) {
    let s = &mut data.snapshots_mut()[pos];
    let Some(row) = s.row_of(id) else { return };
    let p = scenario.position(cluster, s.time_index(), offset);
    let dim = s.dim();
    s.coords_mut()[row * dim..(row + 1) * dim].copy_from_slice(&p);
    if let Some(l) = s.labels.as_mut() {
        l[row] = cluster;
    }
}

/// Relocate samples between clusters according to `events` (processed in order).
pub fn apply_concept_drift(
    data: &TemporalDataset,
    scenario: &GaussianScenario,
    events: &[DriftEvent],
    seed: u64,
) -> Result<TemporalDataset> {
    let mut out = data.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = scenario.specs.len();
    // per event: moved ids and their origin cluster
    let mut moved: Vec<Vec<(SampleId, usize)>> = Vec::with_capacity(events.len());
    let mut last_time = 0;
    for (e_idx, ev) in events.iter().enumerate() {
        if ev.time() < last_time {
            return Err(Error::InvalidEvent("events must be sorted by time".into()));
        }
        last_time = ev.time();
        let start = snapshot_pos(&out, ev.time())?;
        let n_snap = out.horizon();
        match ev {
            DriftEvent::Switch {
                count, from, to, ..
            } => {
                if *from >= k || to.is_empty() || to.iter().any(|&c| c >= k || c == *from) {
                    return Err(Error::InvalidEvent(format!(
                        "bad clusters in drift event {e_idx}"
                    )));
                }
                let members = members_of(&out.snapshots()[start], *from)?;
                if *count > members.len() {
                    return Err(Error::InvalidEvent(format!(
                        "cannot move {count} samples out of a cluster of {}",
                        members.len()
                    )));
                }
                let chosen: Vec<SampleId> =
                    members.choose_multiple(&mut rng, *count).copied().collect();
                for (j, &id) in chosen.iter().enumerate() {
                    let dest = to[j % to.len()];
                    let off = scenario.draw_offset(dest, &mut rng);
                    for pos in start..n_snap {
                        place(&mut out, scenario, pos, id, dest, &off);
                    }
                }
                moved.push(chosen.into_iter().map(|id| (id, *from)).collect());
            }
            DriftEvent::Return { event, .. } => {
                let group = moved
                    .get(*event)
                    .filter(|_| *event < e_idx)
                    .ok_or_else(|| {
                        Error::InvalidEvent(format!("return references unknown event {event}"))
                    })?
                    .clone();
                for &(id, origin) in &group {
                    let off = scenario.draw_offset(origin, &mut rng);
                    for pos in start..n_snap {
                        place(&mut out, scenario, pos, id, origin, &off);
                    }
                }
                moved.push(Vec::new());
            }
        }
    }
    Ok(out)
}

/// Remove or insert samples; removals persist, inserted samples get fresh ids.
pub fn apply_sample_churn(
    data: &TemporalDataset,
    scenario: &GaussianScenario,
    events: &[ChurnEvent],
    seed: u64,
) -> Result<TemporalDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = data.dim();
    let k = scenario.specs.len();
    // rows per snapshot: id -> (coords, label)
    let mut rows: Vec<Vec<(SampleId, Vec<f64>, usize)>> = data
        .snapshots()
        .iter()
        .map(|s| {
            let labels = s.labels().ok_or(Error::MissingLabels(s.time_index()))?;
            Ok(s.ids()
                .iter()
                .enumerate()
                .map(|(r, &id)| (id, s.point(r).to_vec(), labels[r]))
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut next_id = data
        .snapshots()
        .iter()
        .flat_map(|s| s.ids().last().copied())
        .max()
        .map_or(0, |m| m + 1);
    for ev in events {
        match *ev {
            ChurnEvent::Remove { time, per_cluster } => {
                let start = snapshot_pos(data, time)?;
                let mut removed = Vec::new();
                for c in 0..k {
                    let members: Vec<SampleId> = rows[start]
                        .iter()
                        .filter(|r| r.2 == c)
                        .map(|r| r.0)
                        .collect();
                    if members.is_empty() {
                        continue;
                    }
                    if per_cluster >= members.len() {
                        return Err(Error::InvalidEvent(format!(
                            "removing {per_cluster} samples would empty cluster {c} ({} members)",
                            members.len()
                        )));
                    }
                    removed.extend(members.choose_multiple(&mut rng, per_cluster).copied());
                }
                removed.sort_unstable();
                for snap in rows.iter_mut().skip(start) {
                    snap.retain(|r| removed.binary_search(&r.0).is_err());
                }
            }
            ChurnEvent::Insert { time, per_cluster } => {
                let start = snapshot_pos(data, time)?;
                for c in 0..k {
                    for _ in 0..per_cluster {
                        let off = scenario.draw_offset(c, &mut rng);
                        let id = next_id;
                        next_id += 1;
                        for (pos, snap) in rows.iter_mut().enumerate().skip(start) {
                            let t = data.snapshots()[pos].time_index();
                            snap.push((id, scenario.position(c, t, &off), c));
                        }
                    }
                }
            }
        }
    }
    let snapshots = rows
        .into_iter()
        .zip(data.snapshots())
        .map(|(mut r, s)| {
            r.sort_by_key(|x| x.0);
            let ids = r.iter().map(|x| x.0).collect();
            let labels = Some(r.iter().map(|x| x.2).collect());
            let coords = r.into_iter().flat_map(|x| x.1).collect();
            Snapshot::from_sorted_parts(s.time_index(), dim, ids, coords, labels)
        })
        .collect();
    TemporalDataset::new(data.name.clone(), snapshots)
}

/// At each event time, every member of the cluster is redrawn into one of the
/// remaining clusters (round-robin over a random order). Only that time step changes.
pub fn apply_cluster_disappearance(
    data: &TemporalDataset,
    scenario: &GaussianScenario,
    events: &[DisappearanceEvent],
    seed: u64,
) -> Result<TemporalDataset> {
    let mut out = data.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = scenario.specs.len();
    for ev in events {
        if ev.cluster >= k || k < 2 {
            return Err(Error::InvalidEvent(format!("bad cluster {}", ev.cluster)));
        }
        let pos = snapshot_pos(&out, ev.time)?;
        let mut members = members_of(&out.snapshots()[pos], ev.cluster)?;
        rand::seq::SliceRandom::shuffle(members.as_mut_slice(), &mut rng);
        let remaining: Vec<usize> = (0..k).filter(|&c| c != ev.cluster).collect();
        for (j, &id) in members.iter().enumerate() {
            let dest = remaining[j % remaining.len()];
            let off = scenario.draw_offset(dest, &mut rng);
            place(&mut out, scenario, pos, id, dest, &off);
        }
    }
    Ok(out)
}

/// Four 2-D clusters of 50 samples, the bottom-left one moving by (0.6, 0.6) per step.
pub fn syn1_scenario() -> GaussianScenario {
    let means = [[2.0, 2.0], [-2.0, 2.0], [-2.0, -2.0], [2.0, -2.0]];
    GaussianScenario {
        specs: means
            .iter()
            .map(|m| GaussianClusterSpec::new(m.to_vec(), 0.8, 50))
            .collect(),
        horizon: 10,
        moving_cluster: 2,
        step: vec![0.6, 0.6],
    }
}

/// The 4-D counterpart of [`syn1_scenario`]; the moving cluster advances 0.6
/// in Euclidean length per step.
pub fn syn2_scenario() -> GaussianScenario {
    let means = [
        [2.0, 2.0, 2.0, 2.0],
        [-2.0, -2.0, 2.0, 2.0],
        [-2.0, -2.0, -2.0, -2.0],
        [2.0, 2.0, -2.0, -2.0],
    ];
    GaussianScenario {
        specs: means
            .iter()
            .map(|m| GaussianClusterSpec::new(m.to_vec(), 0.8, 50))
            .collect(),
        horizon: 10,
        moving_cluster: 2,
        step: vec![0.3; 4],
    }
}

/// 15 samples leave the moving cluster at t=4, 15 more at t=5, and the second group returns at t=6.
pub fn drift_schedule() -> Vec<DriftEvent> {
    vec![
        DriftEvent::Switch {
            time: 4,
            count: 15,
            from: 2,
            to: vec![0, 1, 3],
        },
        DriftEvent::Switch {
            time: 5,
            count: 15,
            from: 2,
            to: vec![0, 1, 3],
        },
        DriftEvent::Return { time: 6, event: 1 },
    ]
}

pub fn churn_schedule() -> Vec<ChurnEvent> {
    vec![
        ChurnEvent::Remove {
            time: 4,
            per_cluster: 10,
        },
        ChurnEvent::Insert {
            time: 6,
            per_cluster: 10,
        },
        ChurnEvent::Remove {
            time: 8,
            per_cluster: 10,
        },
    ]
}

pub fn disappearance_schedule() -> Vec<DisappearanceEvent> {
    vec![
        DisappearanceEvent {
            time: 5,
            cluster: 2,
        },
        DisappearanceEvent {
            time: 6,
            cluster: 2,
        },
    ]
}

pub const DATASET_NAMES: [&str; 9] = [
    "syn1",
    "syn2",
    "syn3",
    "syn4",
    "syn5",
    "syn6",
    "syn7",
    "syn8",
    "bird_flocks",
];

fn stage_seed(seed: u64, stage: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stage.wrapping_mul(0xBF58_476D_1CE4_E5B9))
}

/// Generate a named benchmark dataset.
pub fn named_dataset(name: &str, seed: u64) -> Result<TemporalDataset> {
    let lower = name.to_ascii_lowercase();
    if lower == "bird_flocks" {
        let mut d = boids::gen_bird_flocks(&boids::BoidsConfig::default(), seed)?;
        d.name = lower;
        return Ok(d);
    }
    let n: u32 = lower
        .strip_prefix("syn")
        .and_then(|s| s.parse().ok())
        .filter(|n| (1..=8).contains(n))
        .ok_or_else(|| Error::UnknownDataset(name.to_string()))?;
    // odd numbers are 2-D, even numbers 4-D
    let scenario = if n % 2 == 1 {
        syn1_scenario()
    } else {
        syn2_scenario()
    };
    let mut data = scenario.generate(&lower, stage_seed(seed, 0))?;
    let drifted = matches!(n, 3 | 4 | 6 | 7 | 8);
    if drifted {
        data = apply_concept_drift(&data, &scenario, &drift_schedule(), stage_seed(seed, 1))?;
    }
    if matches!(n, 5 | 6) {
        data = apply_sample_churn(&data, &scenario, &churn_schedule(), stage_seed(seed, 2))?;
    }
    if matches!(n, 7 | 8) {
        data = apply_cluster_disappearance(
            &data,
            &scenario,
            &disappearance_schedule(),
            stage_seed(seed, 3),
        )?;
    }
    data.name = lower;
    Ok(data)
}
