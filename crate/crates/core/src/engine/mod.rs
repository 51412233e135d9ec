//! NSGA-II based evolutionary clustering over a sequence of snapshots.

pub mod knee;
pub mod operators;
pub mod sort;

use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{common_samples, SampleId, Snapshot, TemporalDataset};
use crate::error::{Error, Result};
use crate::genome::{assign_memberships, random_genome, refine, repair, transform_centroids, Genome, Partition};
use crate::metrics::nmi_labels;
use crate::objectives::{accumulate_from, compactness, eval_fitness, ObjectiveVector};
use crate::smoothness::{tune_weight, WeightRecord};

pub use knee::knee_point;
pub use operators::{binary_tournament, polynomial_delta, polynomial_mutation, single_point_crossover};
pub use sort::{crowding_distances, environmental_selection, nondominated_fronts, nondominated_sort, rank_population};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub population: usize,
    pub c_max: usize,
    /// Plain fitness evaluations per time step.
    pub budget: usize,
    pub reinit_fraction: f64,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub mutation_eta: f64,
    pub seed: u64,
    pub cv_folds: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            population: 100,
            c_max: 8,
            budget: 1000,
            reinit_fraction: 0.8,
            crossover_rate: 0.9,
            mutation_rate: 0.9,
            mutation_eta: 20.0,
            seed: 0,
            cv_folds: 500,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.population < 4 {
            return bad(format!("population {} < 4", self.population));
        }
        if self.c_max < 2 {
            return bad(format!("c_max {} < 2", self.c_max));
        }
        if self.budget < 2 * self.population {
            return bad(format!(
                "budget {} < twice the population {}",
                self.budget, self.population
            ));
        }
        for (name, v) in [
            ("reinit fraction", self.reinit_fraction),
            ("crossover rate", self.crossover_rate),
            ("mutation rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} {v} outside [0, 1]"));
            }
        }
        if !(self.mutation_eta >= 0.0 && self.mutation_eta.is_finite()) {
            return bad(format!("mutation eta {} must be finite and >= 0", self.mutation_eta));
        }
        if self.cv_folds < 2 {
            return bad(format!("cv folds {} < 2", self.cv_folds));
        }
        Ok(())
    }

    /// Generations after initialization: `budget / N - 1`.
    pub fn generations(&self) -> usize {
        (self.budget / self.population).saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genome: Genome,
    pub objectives: ObjectiveVector,
    pub rank: usize,
    pub crowding: f64,
}

impl Individual {
    pub fn new(genome: Genome, objectives: ObjectiveVector) -> Self {
        Individual {
            genome,
            objectives,
            rank: 0,
            crowding: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Reinitialization plus fitness accumulation with an inferred weight.
    Ercot,
    /// Independent runs per time step.
    Static,
    /// Second objective replaced by `1 - NMI` against the previous partition.
    Penalty,
}

/// Objective evaluation for one snapshot.
pub struct Evaluator<'a> {
    snapshot: &'a Snapshot,
    /// Common ids and the previous partition restricted to them.
    reference: Option<(Vec<SampleId>, Partition)>,
}

impl<'a> Evaluator<'a> {
    pub fn plain(snapshot: &'a Snapshot) -> Self {
        Evaluator {
            snapshot,
            reference: None,
        }
    }

    /// Penalty objective against `prev_partition` over the samples shared
    /// with `prev`. Falls back to plain evaluation when nothing is shared.
    pub fn penalty(snapshot: &'a Snapshot, prev: &Snapshot, prev_partition: &Partition) -> Self {
        let common = common_samples(prev, snapshot);
        let reference = (!common.is_empty()).then(|| {
            let p = prev_partition.restrict(&common);
            (p.ids().to_vec(), p)
        });
        Evaluator { snapshot, reference }
    }

    pub fn snapshot(&self) -> &Snapshot {
        self.snapshot
    }

    pub fn evaluate(&self, g: &Genome) -> Result<ObjectiveVector> {
        let Some((common, prev)) = &self.reference else {
            return eval_fitness(g, self.snapshot);
        };
        let cur = assign_memberships(g, self.snapshot)?.restrict(common);
        let penalty = 1.0 - nmi_labels(cur.clusters(), prev.clusters())?;
        Ok(ObjectiveVector::plain(compactness(g, self.snapshot), penalty))
    }
}

/// Refine and evaluate genomes in parallel, each with its own seeded stream.
fn finish(jobs: Vec<(Genome, u64)>, eval: &Evaluator) -> Result<Vec<Individual>> {
    jobs.into_par_iter()
        .map(|(g, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = refine(&repair(g, &mut rng), eval.snapshot(), &mut rng)?;
            let obj = eval.evaluate(&g)?;
            Ok(Individual::new(g, obj))
        })
        .collect()
}

/// `N` random genomes, refined once and evaluated.
pub fn initialize<R: Rng + ?Sized>(
    eval: &Evaluator,
    cfg: &EngineConfig,
    rng: &mut R,
) -> Result<Vec<Individual>> {
    let bounds = eval.snapshot().bounds();
    let jobs = (0..cfg.population)
        .map(|_| (random_genome(cfg.c_max, &bounds, rng), rng.random()))
        .collect();
    finish(jobs, eval)
}

/// `floor(p N)` individuals of the previous final population carried onto the
/// current snapshot, the rest random.
pub fn reinitialize<R: Rng + ?Sized>(
    prev_final: &[Individual],
    prev: &Snapshot,
    eval: &Evaluator,
    cfg: &EngineConfig,
    rng: &mut R,
) -> Result<Vec<Individual>> {
    if prev_final.is_empty() {
        return Err(Error::ContractViolation("empty previous population".into()));
    }
    let cur = eval.snapshot();
    let bounds = cur.bounds();
    let inherit = ((cfg.reinit_fraction * cfg.population as f64).floor() as usize)
        .min(prev_final.len());
    let picked = sample(rng, prev_final.len(), inherit);
    let mut out = Vec::with_capacity(cfg.population);
    // genomes that cannot be carried over are replaced by random ones below
    for i in picked.iter() {
        match transform_centroids(&prev_final[i].genome, prev, cur, rng) {
            Ok(g) => out.push(g),
            Err(Error::NoCommonSamples) => {}
            Err(e) => return Err(e),
        }
    }
    let inherited: Vec<Individual> = out
        .into_par_iter()
        .map(|g| {
            let obj = eval.evaluate(&g)?;
            Ok(Individual::new(g, obj))
        })
        .collect::<Result<_>>()?;
    let jobs = (0..cfg.population - inherited.len())
        .map(|_| (random_genome(cfg.c_max, &bounds, rng), rng.random()))
        .collect();
    let mut pop = inherited;
    pop.extend(finish(jobs, eval)?);
    Ok(pop)
}

/// `N` offspring by tournament, single-point crossover, polynomial mutation,
/// repair and one refinement pass.
pub fn reproduce<R: Rng + ?Sized>(
    parents: &[Individual],
    eval: &Evaluator,
    cfg: &EngineConfig,
    rng: &mut R,
) -> Result<Vec<Individual>> {
    let template = &parents[0].genome;
    let len = template.len();
    let mut jobs = Vec::with_capacity(cfg.population + 1);
    while jobs.len() < cfg.population {
        let a = binary_tournament(parents, rng).genome.genes();
        let b = binary_tournament(parents, rng).genome.genes();
        let (mut c1, mut c2) = if rng.random::<f64>() < cfg.crossover_rate {
            single_point_crossover(&a, &b, rng.random_range(1..len))
        } else {
            (a, b)
        };
        for child in [&mut c1, &mut c2] {
            if rng.random::<f64>() < cfg.mutation_rate {
                polynomial_mutation(child, template, cfg.mutation_eta, rng);
            }
        }
        for child in [c1, c2] {
            let g = Genome::from_genes(&child, template.c_max(), template.bounds().to_vec())?;
            jobs.push((g, rng.random()));
        }
    }
    jobs.truncate(cfg.population);
    finish(jobs, eval)
}

/// State handed from one time step to the next.
#[derive(Debug, Clone)]
pub struct StepState {
    pub population: Vec<Individual>,
    pub partition: Partition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub t: usize,
    pub partition: Partition,
    /// Smoothness weight, present for ERCOT at `t > 1` only.
    pub alpha: Option<f64>,
    pub weight: Option<WeightRecord>,
    pub n_clusters: usize,
    /// Plain fitness evaluations.
    pub evaluations: usize,
    /// Evaluations on the previous snapshot made by fitness accumulation.
    pub accumulation_evaluations: usize,
    /// Wall-clock time; not serialized so that results stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub algorithm: String,
    pub seed: u64,
    pub steps: Vec<StepResult>,
}

impl RunResult {
    pub fn partitions(&self) -> Vec<Partition> {
        self.steps.iter().map(|s| s.partition.clone()).collect()
    }

    pub fn alphas(&self) -> Vec<Option<f64>> {
        self.steps.iter().map(|s| s.alpha).collect()
    }

    pub fn n_clusters(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.n_clusters).collect()
    }

    pub fn seconds(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.seconds).collect()
    }
}

/// Decode the knee of the first front of `pop` on `s`.
pub fn final_partition(pop: &[Individual], s: &Snapshot) -> Result<Partition> {
    let objs: Vec<ObjectiveVector> = pop.iter().map(|i| i.objectives).collect();
    let front = nondominated_fronts(&objs)?.swap_remove(0);
    let front_objs: Vec<ObjectiveVector> = front.iter().map(|&i| objs[i]).collect();
    assign_memberships(&pop[front[knee_point(&front_objs)]].genome, s)
}

/// Re-score individuals with fitness accumulated from `previous`.
fn accumulate_all<R: Rng + ?Sized>(
    pop: Vec<Individual>,
    current: &Snapshot,
    previous: &Snapshot,
    alpha: f64,
    rng: &mut R,
) -> Result<(Vec<Individual>, usize)> {
    let jobs: Vec<(Individual, u64)> = pop.into_iter().map(|i| (i, rng.random())).collect();
    let scored: Vec<(Individual, bool)> = jobs
        .into_par_iter()
        .map(|(mut ind, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (obj, used) = accumulate_from(&ind.objectives, &ind.genome, current, previous, alpha, &mut rng)?;
            ind.objectives = obj;
            Ok((ind, used))
        })
        .collect::<Result<_>>()?;
    let count = scored.iter().filter(|s| s.1).count();
    Ok((scored.into_iter().map(|s| s.0).collect(), count))
}

/// One time step of the given strategy. `prev` carries the previous snapshot
/// and final state; `None` at the first time.
pub fn run_time_step<R: Rng + ?Sized>(
    cur: &Snapshot,
    prev: Option<(&Snapshot, &StepState)>,
    cfg: &EngineConfig,
    strategy: Strategy,
    rng: &mut R,
) -> Result<(StepState, StepResult)> {
    cfg.validate()?;
    let start = Instant::now();
    let eval = match (strategy, prev) {
        (Strategy::Penalty, Some((ps, state))) => Evaluator::penalty(cur, ps, &state.partition),
        _ => Evaluator::plain(cur),
    };
    let mut pop = match (strategy, prev) {
        (Strategy::Static, _) | (_, None) => initialize(&eval, cfg, rng)?,
        (_, Some((ps, state))) => reinitialize(&state.population, ps, &eval, cfg, rng)?,
    };
    rank_population(&mut pop)?;
    let mut evaluations = pop.len();
    let mut accumulation_evaluations = 0;
    let mut weight = None;
    let g_max = cfg.generations();
    for gen in 1..=g_max {
        let offspring = reproduce(&pop, &eval, cfg, rng)?;
        evaluations += offspring.len();
        let accumulate = gen == g_max && strategy == Strategy::Ercot;
        pop = match prev.filter(|_| accumulate) {
            Some((ps, state)) => {
                let record = tune_weight(&state.partition, ps, &pop, &offspring, cur, cfg.cv_folds, rng)?;
                let (p, n1) = accumulate_all(pop, cur, ps, record.alpha, rng)?;
                let (q, n2) = accumulate_all(offspring, cur, ps, record.alpha, rng)?;
                accumulation_evaluations += n1 + n2;
                weight = Some(record);
                environmental_selection(p, q, cfg.population)?
            }
            None => environmental_selection(pop, offspring, cfg.population)?,
        };
    }
    let partition = final_partition(&pop, cur)?;
    let result = StepResult {
        t: cur.time_index(),
        n_clusters: partition.n_clusters(),
        partition: partition.clone(),
        alpha: weight.as_ref().map(|w| w.alpha),
        weight,
        evaluations,
        accumulation_evaluations,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((
        StepState {
            population: pop,
            partition,
        },
        result,
    ))
}

/// Run a strategy over every snapshot of `data`.
pub fn run_strategy(data: &TemporalDataset, cfg: &EngineConfig, strategy: Strategy) -> Result<RunResult> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut steps = Vec::with_capacity(data.horizon());
    let mut state: Option<StepState> = None;
    let snaps = data.snapshots();
    for (k, cur) in snaps.iter().enumerate() {
        let prev = state.as_ref().map(|st| (&snaps[k - 1], st));
        let (next, result) = run_time_step(cur, prev, cfg, strategy, &mut rng)?;
        steps.push(result);
        state = Some(next);
    }
    let algorithm = match strategy {
        Strategy::Ercot => "ercot",
        Strategy::Static => "static",
        Strategy::Penalty => "penalty",
    };
    Ok(RunResult {
        algorithm: algorithm.into(),
        seed: cfg.seed,
        steps,
    })
}

pub fn run_ercot(data: &TemporalDataset, cfg: &EngineConfig) -> Result<RunResult> {
    run_strategy(data, cfg, Strategy::Ercot)
}

/// ERCOT without reinitialization or accumulation.
pub fn run_static_ec(data: &TemporalDataset, cfg: &EngineConfig) -> Result<RunResult> {
    run_strategy(data, cfg, Strategy::Static)
}

/// ERCOT without accumulation, with `1 - NMI` to the previous partition as the
/// second objective after the first time step.
pub fn run_penalty_ec(data: &TemporalDataset, cfg: &EngineConfig) -> Result<RunResult> {
    run_strategy(data, cfg, Strategy::Penalty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic::gen_moving_gaussians;
    use crate::data::synthetic::GaussianClusterSpec;
    use proptest::prelude::*;
    use rand::rngs::StdRng;

    fn small_cfg() -> EngineConfig {
        EngineConfig {
            population: 20,
            budget: 200,
            seed: 3,
            ..EngineConfig::default()
        }
    }

    fn blobs(horizon: usize) -> TemporalDataset {
        let specs = vec![
            GaussianClusterSpec::new(vec![3.0, 3.0], 0.3, 25),
            GaussianClusterSpec::new(vec![-3.0, 3.0], 0.3, 25),
            GaussianClusterSpec::new(vec![0.0, -3.0], 0.3, 25),
        ];
        gen_moving_gaussians(specs, horizon, 2, vec![0.3, 0.0], 1).unwrap()
    }

    #[test]
    fn generation_count() {
        assert_eq!(EngineConfig::default().generations(), 9);
        let cfg = EngineConfig { budget: 8, population: 4, ..EngineConfig::default() };
        assert_eq!(cfg.generations(), 1);
        let cfg = EngineConfig { budget: 7, population: 4, ..EngineConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn initialize_counts_and_finite() {
        let data = blobs(1);
        let cfg = EngineConfig { population: 4, budget: 8, ..EngineConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pop = initialize(&Evaluator::plain(&data.snapshots()[0]), &cfg, &mut rng).unwrap();
        assert_eq!(pop.len(), 4);
        assert!(pop.iter().all(|i| i.objectives.f_cp.is_finite() && i.objectives.f_sep.is_finite()));
    }

    #[test]
    fn reinitialize_split() {
        let data = blobs(2);
        let cfg = small_cfg();
        let s = data.snapshots();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pop = initialize(&Evaluator::plain(&s[0]), &cfg, &mut rng).unwrap();
        let mut rng_a = ChaCha8Rng::seed_from_u64(7);
        let next = reinitialize(&pop, &s[0], &Evaluator::plain(&s[1]), &cfg, &mut rng_a).unwrap();
        assert_eq!(next.len(), 20);
        // the first 16 are transforms of the sampled parents, in draw order
        let mut rng_b = ChaCha8Rng::seed_from_u64(7);
        let picked = sample(&mut rng_b, pop.len(), 16);
        for (k, i) in picked.iter().enumerate() {
            let g = transform_centroids(&pop[i].genome, &s[0], &s[1], &mut rng_b).unwrap();
            assert_eq!(next[k].genome, g);
        }
    }

    #[test]
    fn no_variation_gives_refined_parents() {
        let data = blobs(1);
        let s = &data.snapshots()[0];
        let cfg = EngineConfig { crossover_rate: 0.0, mutation_rate: 0.0, ..small_cfg() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let eval = Evaluator::plain(s);
        let mut pop = initialize(&eval, &cfg, &mut rng).unwrap();
        rank_population(&mut pop).unwrap();
        let kids = reproduce(&pop, &eval, &cfg, &mut rng).unwrap();
        for k in &kids {
            let ok = pop.iter().any(|p| {
                let again = refine(&p.genome, s, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
                again == k.genome
            });
            assert!(ok);
        }
    }

    #[test]
    fn elitism_on_compactness() {
        let data = blobs(1);
        let s = &data.snapshots()[0];
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let eval = Evaluator::plain(s);
        let mut pop = initialize(&eval, &cfg, &mut rng).unwrap();
        rank_population(&mut pop).unwrap();
        let best = |p: &[Individual]| p.iter().map(|i| i.objectives.f_cp).fold(f64::INFINITY, f64::min);
        let mut last = best(&pop);
        for _ in 0..cfg.generations() {
            let kids = reproduce(&pop, &eval, &cfg, &mut rng).unwrap();
            pop = environmental_selection(pop, kids, cfg.population).unwrap();
            let b = best(&pop);
            assert!(b <= last);
            last = b;
        }
    }

    #[test]
    fn structure_and_determinism() {
        let data = blobs(3);
        let cfg = small_cfg();
        let a = run_ercot(&data, &cfg).unwrap();
        let b = run_ercot(&data, &cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.steps.len(), 3);
        assert_eq!(a.alphas()[0], None);
        assert!(a.alphas()[1..].iter().all(|x| x.is_some_and(|v| (0.0..=1.0).contains(&v))));
        for s in &a.steps {
            assert_eq!(s.evaluations, cfg.budget);
        }
        assert_eq!(a.steps[0].accumulation_evaluations, 0);
        assert_eq!(a.steps[1].accumulation_evaluations, 2 * cfg.population);
    }

    #[test]
    fn horizon_one_matches_static() {
        let data = blobs(1);
        let cfg = small_cfg();
        let a = run_ercot(&data, &cfg).unwrap();
        let b = run_static_ec(&data, &cfg).unwrap();
        let c = run_penalty_ec(&data, &cfg).unwrap();
        let json = |r: &RunResult| serde_json::to_string(&r.steps).unwrap();
        assert_eq!(json(&a), json(&b));
        assert_eq!(json(&a), json(&c));
    }

    #[test]
    fn penalty_objective_in_unit_range() {
        let data = blobs(2);
        let s = data.snapshots();
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pop = initialize(&Evaluator::plain(&s[0]), &cfg, &mut rng).unwrap();
        let prev_p = final_partition(&pop, &s[0]).unwrap();
        let eval = Evaluator::penalty(&s[1], &s[0], &prev_p);
        let pop = initialize(&eval, &cfg, &mut rng).unwrap();
        assert!(pop.iter().all(|i| (0.0..=1.0).contains(&i.objectives.f_sep)));
    }

    fn poly_cdf(d: f64, eta: f64) -> f64 {
        if d <= 0.0 {
            0.5 * (1.0 + d).powf(eta + 1.0)
        } else {
            1.0 - 0.5 * (1.0 - d).powf(eta + 1.0)
        }
    }

    #[test]
    fn polynomial_mutation_matches_cdf() {
        let mut rng = StdRng::seed_from_u64(11);
        let n = 100_000;
        let mut draws: Vec<f64> = (0..n).map(|_| polynomial_delta(rand::Rng::random::<f64>(&mut rng), 20.0)).collect();
        draws.sort_by(f64::total_cmp);
        let ks = draws
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                let f = poly_cdf(d, 20.0);
                (f - i as f64 / n as f64).abs().max((f - (i + 1) as f64 / n as f64).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "ks {ks}");
    }

    fn naive_fronts(objs: &[ObjectiveVector]) -> Vec<Vec<usize>> {
        let mut left: Vec<usize> = (0..objs.len()).collect();
        let mut fronts = Vec::new();
        while !left.is_empty() {
            let front: Vec<usize> = left
                .iter()
                .copied()
                .filter(|&i| !left.iter().any(|&j| objs[j].dominates(&objs[i])))
                .collect();
            left.retain(|i| !front.contains(i));
            fronts.push(front);
        }
        fronts
    }

    proptest! {
        #[test]
        fn sort_matches_naive(pts in prop::collection::vec((0u8..10, 0u8..10), 1..50)) {
            let objs: Vec<ObjectiveVector> =
                pts.iter().map(|&(a, b)| ObjectiveVector::plain(a as f64, b as f64)).collect();
            prop_assert_eq!(nondominated_fronts(&objs).unwrap(), naive_fronts(&objs));
        }
    }
}
