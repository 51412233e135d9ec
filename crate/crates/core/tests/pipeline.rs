use ercot_core::data::synthetic::named_dataset;
use ercot_core::engine::knee_point;
use ercot_core::harness::{read_partitions, run_runs, write_partitions, ExperimentConfig};
use ercot_core::metrics::score_partitions;
use ercot_core::{run_ercot, run_penalty_ec, EngineConfig, ObjectiveVector};

fn fast() -> EngineConfig {
    EngineConfig {
        population: 20,
        budget: 200,
        cv_folds: 20,
        seed: 7,
        ..EngineConfig::default()
    }
}

#[test]
fn syn1_run_has_one_partition_per_time_and_weights_after_the_first() {
    let data = named_dataset("syn1", 0).unwrap();
    let r = run_ercot(&data, &fast()).unwrap();
    assert_eq!(r.partitions().len(), 10);
    let alphas = r.alphas();
    assert!(alphas[0].is_none());
    assert_eq!(alphas.iter().flatten().count(), 9);
    assert!(alphas.iter().flatten().all(|a| (0.0..=1.0).contains(a)));
    for (p, s) in r.partitions().iter().zip(data.snapshots()) {
        assert_eq!(p.len(), s.len());
        assert!(p.n_clusters() >= 2 && p.n_clusters() <= 8);
    }
}

#[test]
fn written_partitions_score_the_same_after_reading_back() {
    let data = named_dataset("syn5", 3).unwrap();
    let r = run_penalty_ec(&data, &fast()).unwrap();
    let times: Vec<usize> = data.snapshots().iter().map(|s| s.time_index()).collect();
    let mut buf = Vec::new();
    write_partitions(&r.partitions(), &times, &mut buf).unwrap();
    let back = read_partitions(buf.as_slice()).unwrap();
    assert_eq!(back.iter().map(|b| b.0).collect::<Vec<_>>(), times);
    let parts: Vec<_> = back.into_iter().map(|b| b.1).collect();
    let a = score_partitions(&r.partitions(), &data).unwrap();
    let b = score_partitions(&parts, &data).unwrap();
    assert_eq!(a, b);
}

#[test]
fn knee_matches_distance_enumeration_on_a_convex_front() {
    // f_sep = 1 / f_cp sampled unevenly, a convex front
    let front: Vec<ObjectiveVector> = (0..30)
        .map(|i| {
            let x = 1.0 + (i as f64).powf(1.3);
            ObjectiveVector::plain(x, 1.0 / x)
        })
        .collect();
    let (lo_cp, hi_cp) = (front[0].f_cp, front[29].f_cp);
    let (lo_sep, hi_sep) = (front[29].f_sep, front[0].f_sep);
    let norm = |o: &ObjectiveVector| ((o.f_cp - lo_cp) / (hi_cp - lo_cp), (o.f_sep - lo_sep) / (hi_sep - lo_sep));
    // the extreme points are (0, 1) and (1, 0); distance to x + y = 1
    let expected = (0..30)
        .max_by(|&a, &b| {
            let d = |i: usize| {
                let (x, y) = norm(&front[i]);
                (1.0 - x - y).abs()
            };
            d(a).total_cmp(&d(b))
        })
        .unwrap();
    assert_eq!(knee_point(&front), expected);
}

#[test]
fn runs_use_consecutive_seeds() {
    let data = named_dataset("syn3", 1).unwrap();
    let cfg = ExperimentConfig {
        runs: 2,
        engine: fast(),
        ..ExperimentConfig::default()
    };
    let exp = run_runs(&data, &cfg).unwrap();
    let second = run_ercot(&data, &EngineConfig { seed: 8, ..fast() }).unwrap();
    assert_eq!(exp.results[1].seed, 8);
    assert_eq!(exp.results[1].partitions(), second.partitions());
}
