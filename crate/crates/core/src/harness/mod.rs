//! Sequential experiment protocol, result records and metrics.

mod metrics;
mod records;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use metrics::{
    aggregate, downstream_comparison, mean_rankings, normalize, normalized_score, score_table,
    write_csv, Downstream, DownstreamRow, RankRow, ScoreRow, Summary, Traces,
};
pub use records::{read_jsonl, write_jsonl, Record};

use crate::benchmarks::{Benchmark, BenchmarkSpec};
use crate::rng::{derive_rng, Stream};
use crate::schedulers::{
    Evaluation, Method, MethodScheduler, Scheduler, SchedulerConfig, SuggestContext, TaskHistory,
    TaskRecord,
};
use crate::{Error, Result};

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_budget() -> usize {
    25
}

fn default_seeds() -> Vec<u64> {
    (0..50).collect()
}

/// An experiment as described in a TOML config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub benchmark: BenchmarkSpec,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Evaluations per task.
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub scheduler: SchedulerConfig,
}

impl ExperimentPlan {
    pub fn new(benchmark: BenchmarkSpec) -> Self {
        Self {
            benchmark,
            methods: default_methods(),
            budget: default_budget(),
            seeds: default_seeds(),
            scheduler: SchedulerConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let plan: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Config("budget must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("no seeds selected".into()));
        }
        for (i, s) in self.seeds.iter().enumerate() {
            if self.seeds[..i].contains(s) {
                return Err(Error::Config(format!("seed {s} listed twice")));
            }
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::Config(format!("method {m} listed twice")));
            }
        }
        self.scheduler.validate()
    }
}

/// A `(method, seed)` run that stopped on an error; its records are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortedRun {
    pub method: Method,
    pub seed: u64,
    pub task: usize,
    pub iteration: usize,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultsTable {
    /// Sorted by method, seed, task, iteration.
    pub records: Vec<Record>,
    pub aborted: Vec<AbortedRun>,
}

/// Runs every `(method, seed)` pair of `plan`, using at most `parallelism`
/// worker threads (all available when `None`).
pub fn run_experiment(plan: &ExperimentPlan, parallelism: Option<usize>) -> Result<ResultsTable> {
    plan.validate()?;
    let bench = plan.benchmark.build()?;
    let jobs: Vec<(Method, u64)> = plan
        .methods
        .iter()
        .flat_map(|&m| plan.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let outcomes: Vec<((Method, u64), std::result::Result<Vec<Record>, AbortedRun>)> =
        pool.install(|| {
            jobs.par_iter()
                .map(|&(m, s)| ((m, s), run_single(&bench, m, s, plan.budget, &plan.scheduler)))
                .collect()
        });
    let mut sorted: BTreeMap<(Method, u64), _> = BTreeMap::new();
    for (key, out) in outcomes {
        sorted.insert(key, out);
    }
    let mut table = ResultsTable::default();
    for (_, out) in sorted {
        match out {
            Ok(recs) => table.records.extend(recs),
            Err(a) => table.aborted.push(a),
        }
    }
    Ok(table)
}

/// One method on one seed over all tasks of `bench`.
pub fn run_single(
    bench: &Benchmark,
    method: Method,
    seed: u64,
    budget: usize,
    config: &SchedulerConfig,
) -> std::result::Result<Vec<Record>, AbortedRun> {
    let mut scheduler = MethodScheduler::new(method, config.clone());
    let mut history = TaskHistory::new();
    let mut records = Vec::with_capacity(bench.n_tasks() * budget);
    let names: Vec<String> = bench.space.names().map(str::to_owned).collect();
    let dir = bench.direction;
    for (t, task) in bench.tasks.iter().enumerate() {
        let task_index = t + 1;
        let abort = |iteration: usize, e: Error| AbortedRun {
            method,
            seed,
            task: task_index,
            iteration,
            error: e.to_string(),
        };
        let normalized_feature = bench.normalized_feature(task_index).map_err(|e| abort(1, e))?;
        let mut current: Vec<Evaluation> = Vec::with_capacity(budget);
        let mut best_loss = f64::INFINITY;
        for iteration in 1..=budget {
            let ctx = SuggestContext {
                space: &bench.space,
                history: &history,
                current: &current,
                task_index,
                normalized_feature,
                budget,
            };
            let mut srng = derive_rng(seed, task_index, iteration, Stream::Scheduler);
            let config = scheduler.suggest(&ctx, &mut srng).map_err(|e| abort(iteration, e))?;
            let mut nrng = derive_rng(seed, task_index, iteration, Stream::Noise);
            let native = bench
                .evaluate(task_index, &config, &mut nrng)
                .map_err(|e| abort(iteration, e))?;
            if !native.is_finite() {
                return Err(abort(iteration, Error::Numeric(format!("objective {native}"))));
            }
            let loss = dir.to_loss(native);
            best_loss = best_loss.min(loss);
            records.push(Record {
                benchmark: bench.name.clone(),
                method,
                seed,
                task: task_index,
                iteration,
                context_feature: task.feature,
                config: names.iter().cloned().zip(config.values().iter().copied()).collect(),
                objective: native,
                cum_best: dir.from_loss(best_loss),
                direction: dir,
            });
            current.push(Evaluation {
                config,
                objective: loss,
                task_index,
                iteration,
                context_feature: task.feature,
            });
        }
        history.push(TaskRecord {
            index: task_index,
            context_feature: task.feature,
            normalized_feature,
            evaluations: current,
        });
    }
    Ok(records)
}
