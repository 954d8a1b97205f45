//! Ordered task sequences.

mod newsvendor;
mod synthetic;
mod tabular;

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use newsvendor::{newsvendor_sequence, NewsVendor, NewsVendorParams, NewsVendorState};
pub use synthetic::{synthetic_drift, SyntheticDrift, XGBOOST_SIZES};
pub use tabular::{tabular_benchmark, TabularTable};

use crate::rng::SeededRng;
use crate::space::{Configuration, SearchSpace};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Minimize,
    Maximize,
}

impl Direction {
    /// Maps a native objective to the minimization convention.
    pub fn to_loss(self, objective: f64) -> f64 {
        match self {
            Direction::Minimize => objective,
            Direction::Maximize => -objective,
        }
    }

    pub fn from_loss(self, loss: f64) -> f64 {
        self.to_loss(loss)
    }
}

/// How task features are interpreted when they feed a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextKind {
    /// Feature is the 1-based task index.
    Index,
    /// Feature is a positive size (e.g. training-set size), compared on a log scale.
    Size,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskContext {
    /// 1-based.
    pub index: usize,
    pub feature: f64,
}

/// A family of per-task objectives sharing one search space.
pub trait TaskObjective: fmt::Debug + Send + Sync {
    /// Native-direction objective of `config` on 1-based `task`.
    fn evaluate(&self, task: usize, config: &Configuration, noise: &mut SeededRng) -> Result<f64>;
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub name: String,
    pub space: SearchSpace,
    pub tasks: Vec<TaskContext>,
    pub direction: Direction,
    pub context_kind: ContextKind,
    objective: Arc<dyn TaskObjective>,
}

impl Benchmark {
    pub fn new(
        name: impl Into<String>,
        space: SearchSpace,
        tasks: Vec<TaskContext>,
        direction: Direction,
        context_kind: ContextKind,
        objective: Arc<dyn TaskObjective>,
    ) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::Validation("benchmark has no tasks".into()));
        }
        if context_kind == ContextKind::Size
            && (tasks.iter().any(|t| t.feature <= 0.0)
                || tasks.windows(2).any(|w| w[1].feature <= w[0].feature))
        {
            return Err(Error::Validation(
                "size contexts must be positive and strictly increasing".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            space,
            tasks,
            direction,
            context_kind,
            objective,
        })
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn task(&self, task: usize) -> Result<&TaskContext> {
        task.checked_sub(1)
            .and_then(|i| self.tasks.get(i))
            .ok_or_else(|| Error::Validation(format!("task {task} out of range 1..={}", self.n_tasks())))
    }

    /// Evaluates `config` on 1-based `task`, in the benchmark's native direction.
    pub fn evaluate(&self, task: usize, config: &Configuration, noise: &mut SeededRng) -> Result<f64> {
        self.task(task)?;
        self.space.validate(config)?;
        self.objective.evaluate(task, config, noise)
    }

    /// Task feature scaled to `[0, 1]`: `index / n_tasks` for index contexts,
    /// log-size min-max scaled for size contexts.
    pub fn normalized_feature(&self, task: usize) -> Result<f64> {
        let t = self.task(task)?;
        Ok(match self.context_kind {
            ContextKind::Index => t.index as f64 / self.n_tasks() as f64,
            ContextKind::Size => {
                let lo = self.tasks[0].feature.ln();
                let hi = self.tasks[self.n_tasks() - 1].feature.ln();
                if hi > lo {
                    (t.feature.ln() - lo) / (hi - lo)
                } else {
                    0.0
                }
            }
        })
    }
}

/// Benchmark definition as it appears in an experiment config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BenchmarkSpec {
    Newsvendor {
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_newsvendor_tasks")]
        n_tasks: usize,
        #[serde(default)]
        params: NewsVendorParams,
    },
    SyntheticDrift {
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_drift_dim")]
        dim: usize,
        /// Truncates the default size grid to its first `n_tasks` values.
        #[serde(default)]
        n_tasks: Option<usize>,
        #[serde(default)]
        sizes: Option<Vec<f64>>,
    },
    Tabular {
        path: PathBuf,
        #[serde(default)]
        space: Option<SearchSpace>,
        #[serde(default)]
        direction: Direction,
    },
}

fn default_newsvendor_tasks() -> usize {
    9
}

fn default_drift_dim() -> usize {
    2
}

impl BenchmarkSpec {
    pub fn build(&self) -> Result<Benchmark> {
        match self {
            BenchmarkSpec::Newsvendor {
                seed,
                n_tasks,
                params,
            } => newsvendor_sequence(*seed, *n_tasks, params.clone()),
            BenchmarkSpec::SyntheticDrift {
                seed,
                dim,
                n_tasks,
                sizes,
            } => {
                let mut sizes = sizes.clone().unwrap_or_else(|| XGBOOST_SIZES.to_vec());
                if let Some(n) = n_tasks {
                    if *n > sizes.len() {
                        return Err(Error::Config(format!(
                            "n_tasks {n} exceeds the {} available sizes",
                            sizes.len()
                        )));
                    }
                    sizes.truncate(*n);
                }
                synthetic_drift(*seed, *dim, &sizes)
            }
            BenchmarkSpec::Tabular {
                path,
                space,
                direction,
            } => tabular_benchmark(path, space.clone(), *direction),
        }
    }
}
