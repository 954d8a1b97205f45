use std::collections::BTreeMap;

use othpo::benchmarks::{synthetic_drift, BenchmarkSpec, Direction, NewsVendorParams};
use othpo::harness::{
    downstream_comparison, mean_rankings, read_jsonl, run_experiment, run_single, score_table, write_jsonl,
    ExperimentPlan, Traces,
};
use othpo::schedulers::{Method, SchedulerConfig};

fn newsvendor_plan(methods: &[Method], budget: usize, seeds: &[u64]) -> ExperimentPlan {
    ExperimentPlan {
        benchmark: BenchmarkSpec::Newsvendor { seed: 3, n_tasks: 4, params: NewsVendorParams::default() },
        methods: methods.to_vec(),
        budget,
        seeds: seeds.to_vec(),
        scheduler: SchedulerConfig::default(),
    }
}

#[test]
fn every_method_stays_in_bounds_and_is_reproducible() {
    let bench = synthetic_drift(1, 2, &[100.0, 300.0, 900.0, 2700.0]).unwrap();
    let cfg = SchedulerConfig::default();
    for m in Method::ALL {
        let a = run_single(&bench, m, 7, 8, &cfg).unwrap();
        let b = run_single(&bench, m, 7, 8, &cfg).unwrap();
        assert_eq!(a, b, "{m} not reproducible");
        assert_eq!(a.len(), 4 * 8);
        for r in &a {
            let cfg: Vec<f64> = bench.space.names().map(|n| r.config[n]).collect();
            assert!(bench.space.contains(&cfg.into()), "{m}: {:?} out of bounds", r.config);
        }
    }
}

#[test]
fn replay_methods_reuse_history_configurations() {
    let bench = synthetic_drift(2, 2, &[100.0, 200.0, 400.0]).unwrap();
    let recs = run_single(&bench, Method::SimplePrevious, 0, 10, &SchedulerConfig::default()).unwrap();
    for task in 2..=3 {
        let prev: Vec<_> = recs.iter().filter(|r| r.task == task - 1).map(|r| &r.config).collect();
        for r in recs.iter().filter(|r| r.task == task && r.iteration <= 5) {
            assert!(prev.contains(&&r.config), "task {task} iteration {} not replayed", r.iteration);
        }
    }
}

#[test]
fn maximization_is_tracked_in_native_units() {
    let table = run_experiment(&newsvendor_plan(&[Method::RandomSearch], 6, &[0]), Some(1)).unwrap();
    let mut best: BTreeMap<usize, f64> = BTreeMap::new();
    for r in &table.records {
        assert_eq!(r.direction, Direction::Maximize);
        let b = best.entry(r.task).or_insert(f64::NEG_INFINITY);
        *b = b.max(r.objective);
        assert_eq!(r.cum_best, *b);
    }
}

#[test]
fn metrics_on_a_real_study() {
    let methods = [Method::RandomSearch, Method::BO, Method::SimpleOrdered];
    let table = run_experiment(&newsvendor_plan(&methods, 6, &[0, 1, 2]), None).unwrap();
    assert!(table.aborted.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.jsonl");
    write_jsonl(std::fs::File::create(&path).unwrap(), &table.records).unwrap();
    let back = read_jsonl(&path).unwrap();
    assert_eq!(back, table.records);

    let traces = Traces::from_records(&back).unwrap();
    let rows = score_table(&traces, &[1, 6], None).unwrap();
    assert_eq!(rows.len(), 3 * 4 * 2);
    for r in rows.iter().filter(|r| r.iteration == 6 && r.method == Method::RandomSearch) {
        let rs_is_best = traces.mean_loss(Method::RandomSearch, r.task, 6).unwrap()
            == traces.best_reference(r.task).unwrap();
        assert_eq!(r.score, Some(if rs_is_best { 0.0 } else { 100.0 }));
    }
    for task in 1..=4 {
        let at_m: Vec<f64> = rows
            .iter()
            .filter(|r| r.task == task && r.iteration == 6)
            .filter_map(|r| r.score)
            .collect();
        assert_eq!(at_m.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
    }

    let ranks = mean_rankings(&traces, &methods, 6).unwrap();
    let total: f64 = ranks.iter().map(|r| r.mean_rank).sum();
    assert!((total - 6.0).abs() < 1e-12, "ranks {ranks:?}");

    let d = downstream_comparison(&traces, Method::SimpleOrdered, Method::BO, 1).unwrap();
    assert_eq!(d.rows.len() + d.excluded, 4);
}
