//! The ten tuning methods.
//!
//! Every method answers the same question: given the evaluations of all
//! previous tasks and those made so far on the current task, which
//! configuration should be evaluated next? Objectives are losses here
//! (minimization); the harness converts maximization benchmarks.

mod bo;
mod bounding_box;
mod cts;
mod transfer;
mod warm_start;
mod zeroshot;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use bo::{next_bo, next_random};
pub use bounding_box::{bounding_box, per_task_optima};
pub use cts::{mid_rank_quantiles, next_cts, probit_scores};
pub use transfer::{next_transfer_bo, transfer_design};
pub use warm_start::{ranked_distinct, simple_ordered_list, simple_previous_list};
pub use zeroshot::{build_zeroshot_portfolio, portfolio_objective, zeroshot_loss_matrix};

use crate::acquisition::AcquisitionConfig;
use crate::rng::SeededRng;
use crate::space::{Configuration, SearchSpace};
use crate::surrogate::{FitOptions, GpModel, Hyperparameters};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    RandomSearch,
    BO,
    BoundingBox,
    ZeroShot,
    CTS,
    TransferBO,
    SimpleOrdered,
    SimpleOrderedShuffled,
    SimplePrevious,
    SimplePreviousNoBO,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::RandomSearch,
        Method::BO,
        Method::BoundingBox,
        Method::ZeroShot,
        Method::CTS,
        Method::TransferBO,
        Method::SimpleOrdered,
        Method::SimpleOrderedShuffled,
        Method::SimplePrevious,
        Method::SimplePreviousNoBO,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::RandomSearch => "RandomSearch",
            Method::BO => "BO",
            Method::BoundingBox => "BoundingBox",
            Method::ZeroShot => "ZeroShot",
            Method::CTS => "CTS",
            Method::TransferBO => "TransferBO",
            Method::SimpleOrdered => "SimpleOrdered",
            Method::SimpleOrderedShuffled => "SimpleOrderedShuffled",
            Method::SimplePrevious => "SimplePrevious",
            Method::SimplePreviousNoBO => "SimplePreviousNoBO",
        }
    }

    /// Methods that consume previous-task evaluations.
    pub fn is_transfer(self) -> bool {
        !matches!(self, Method::RandomSearch | Method::BO)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownMethod {
                name: s.to_owned(),
                valid: Method::ALL.map(Method::name).join(", "),
            })
    }
}

/// GP fitting settings as exposed in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpConfig {
    pub restarts: usize,
    pub max_iter: usize,
    pub warp_prior_std: f64,
}

impl Default for GpConfig {
    fn default() -> Self {
        let f = FitOptions::default();
        Self {
            restarts: f.restarts,
            max_iter: f.max_iter,
            warp_prior_std: f.warp_prior_std,
        }
    }
}

impl From<&GpConfig> for FitOptions {
    fn from(c: &GpConfig) -> Self {
        FitOptions {
            restarts: c.restarts,
            max_iter: c.max_iter,
            warp_prior_std: c.warp_prior_std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    /// Warm-start length of the SimpleOrdered / SimplePrevious families.
    pub n_warm_start: usize,
    /// Uniform initial design of plain BO within a task.
    pub n_initial: usize,
    pub acquisition: AcquisitionConfig,
    pub gp: GpConfig,
    /// Uniform samples added to the CTS candidate pool.
    pub cts_candidate_pool: usize,
    /// Largest number of pooled observations TransferBO and CTS fit on.
    pub transfer_obs_cap: usize,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            n_warm_start: 5,
            n_initial: 3,
            acquisition: AcquisitionConfig::default(),
            gp: GpConfig::default(),
            cts_candidate_pool: 100,
            transfer_obs_cap: 200,
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_warm_start == 0 {
            return Err(Error::Config("n_warm_start must be >= 1".into()));
        }
        if self.acquisition.mc_samples == 0 || self.acquisition.candidate_pool_size == 0 {
            return Err(Error::Config(
                "mc_samples and candidate_pool_size must be >= 1".into(),
            ));
        }
        if self.transfer_obs_cap == 0 {
            return Err(Error::Config("transfer_obs_cap must be >= 1".into()));
        }
        Ok(())
    }

    pub(crate) fn fit_options(&self) -> FitOptions {
        (&self.gp).into()
    }
}

/// Fits a GP, starting a single local optimization from `warm` when set
/// and using the configured restarts otherwise; stores the result in `warm`.
pub(crate) fn fit_warm<R: rand::Rng + ?Sized>(
    inputs: &[Vec<f64>],
    targets: &[f64],
    config: &SchedulerConfig,
    warm: &mut Option<Hyperparameters>,
    rng: &mut R,
) -> Result<GpModel> {
    let mut opts = config.fit_options();
    if warm.is_some() {
        opts.restarts = 1;
    }
    let model = GpModel::fit_from(inputs, targets, &opts, warm.as_ref(), rng)?;
    if !model.is_constant() {
        *warm = Some(model.hyperparameters().clone());
    }
    Ok(model)
}

/// One evaluated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub config: Configuration,
    /// Loss (minimization convention).
    pub objective: f64,
    /// 1-based.
    pub task_index: usize,
    /// 1-based.
    pub iteration: usize,
    pub context_feature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskRecord {
    pub index: usize,
    pub context_feature: f64,
    /// Context feature scaled to `[0, 1]` for use as a model input.
    pub normalized_feature: f64,
    pub evaluations: Vec<Evaluation>,
}

/// Completed tasks in benchmark order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TaskHistory {
    pub tasks: Vec<TaskRecord>,
}

impl TaskHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: TaskRecord) {
        self.tasks.push(record);
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn last(&self) -> Option<&TaskRecord> {
        self.tasks.last()
    }

    /// Builds a history from per-task `(config, loss)` lists; features are
    /// task indices.
    pub fn from_losses(tasks: Vec<Vec<(Configuration, f64)>>) -> Self {
        let n = tasks.len().max(1) as f64;
        let tasks = tasks
            .into_iter()
            .enumerate()
            .map(|(t, evals)| TaskRecord {
                index: t + 1,
                context_feature: (t + 1) as f64,
                normalized_feature: (t + 1) as f64 / n,
                evaluations: evals
                    .into_iter()
                    .enumerate()
                    .map(|(m, (config, objective))| Evaluation {
                        config,
                        objective,
                        task_index: t + 1,
                        iteration: m + 1,
                        context_feature: (t + 1) as f64,
                    })
                    .collect(),
            })
            .collect();
        Self { tasks }
    }
}

/// Everything a scheduler may look at when choosing the next configuration.
#[derive(Debug, Clone, Copy)]
pub struct SuggestContext<'a> {
    pub space: &'a SearchSpace,
    /// Previous tasks only.
    pub history: &'a TaskHistory,
    pub current: &'a [Evaluation],
    pub task_index: usize,
    pub normalized_feature: f64,
    pub budget: usize,
}

impl SuggestContext<'_> {
    /// 1-based iteration about to be evaluated.
    pub fn iteration(&self) -> usize {
        self.current.len() + 1
    }
}

pub trait Scheduler: Send {
    fn method(&self) -> Method;

    fn suggest(&mut self, ctx: &SuggestContext<'_>, rng: &mut SeededRng) -> Result<Configuration>;
}

/// Per-task precomputation.
#[derive(Debug, Clone)]
enum TaskPlan {
    Replay(Vec<Configuration>),
    Box(Option<SearchSpace>),
}

/// Stateful scheduler for one `(method, benchmark, seed)` run.
#[derive(Debug, Clone)]
pub struct MethodScheduler {
    method: Method,
    config: SchedulerConfig,
    plan: Option<(usize, TaskPlan)>,
    /// Last fitted hyperparameters of TransferBO / CTS and their task.
    warm: Option<(usize, Hyperparameters)>,
}

impl MethodScheduler {
    pub fn new(method: Method, config: SchedulerConfig) -> Self {
        Self {
            method,
            config,
            plan: None,
            warm: None,
        }
    }

    fn plan_for(&mut self, ctx: &SuggestContext<'_>, rng: &mut SeededRng) -> Result<&TaskPlan> {
        let stale = !matches!(&self.plan, Some((t, _)) if *t == ctx.task_index);
        if stale {
            let n = self.config.n_warm_start;
            let plan = match self.method {
                Method::SimpleOrdered => TaskPlan::Replay(simple_ordered_list(ctx.history, n)),
                Method::SimpleOrderedShuffled => {
                    let mut list = simple_ordered_list(ctx.history, n);
                    list.shuffle(rng);
                    TaskPlan::Replay(list)
                }
                Method::SimplePrevious => TaskPlan::Replay(simple_previous_list(ctx.history, Some(n))),
                Method::SimplePreviousNoBO => TaskPlan::Replay(simple_previous_list(ctx.history, None)),
                Method::ZeroShot => TaskPlan::Replay(build_zeroshot_portfolio(
                    ctx.space,
                    ctx.history,
                    ctx.budget,
                )?),
                Method::BoundingBox => TaskPlan::Box(bounding_box(ctx.space, ctx.history)),
                m => unreachable!("{m} has no task plan"),
            };
            self.plan = Some((ctx.task_index, plan));
        }
        Ok(&self.plan.as_ref().expect("plan set above").1)
    }

    /// Replays the task plan for the first `limit` iterations, filling gaps
    /// with uniform samples; afterwards runs BO or uniform sampling.
    fn replay(
        &mut self,
        ctx: &SuggestContext<'_>,
        rng: &mut SeededRng,
        limit: Option<usize>,
        bo_after: bool,
    ) -> Result<Configuration> {
        let m = ctx.iteration();
        let TaskPlan::Replay(list) = self.plan_for(ctx, rng)? else {
            unreachable!("replay plan")
        };
        let limit = limit.unwrap_or(list.len());
        if m <= limit {
            return Ok(match list.get(m - 1) {
                Some(c) => c.clone(),
                None => next_random(ctx.space, rng),
            });
        }
        if bo_after {
            Ok(next_bo(ctx.space, ctx.current, &self.config, rng))
        } else {
            Ok(next_random(ctx.space, rng))
        }
    }
}

impl Scheduler for MethodScheduler {
    fn method(&self) -> Method {
        self.method
    }

    fn suggest(&mut self, ctx: &SuggestContext<'_>, rng: &mut SeededRng) -> Result<Configuration> {
        let cfg = &self.config;
        match self.method {
            Method::RandomSearch => return Ok(next_random(ctx.space, rng)),
            Method::BO => return Ok(next_bo(ctx.space, ctx.current, cfg, rng)),
            // transfer methods collect their first task with plain BO
            _ if ctx.history.is_empty() => return Ok(next_bo(ctx.space, ctx.current, cfg, rng)),
            _ => {}
        }
        let n = self.config.n_warm_start;
        match self.method {
            Method::SimpleOrdered | Method::SimpleOrderedShuffled | Method::SimplePrevious => {
                self.replay(ctx, rng, Some(n), true)
            }
            Method::SimplePreviousNoBO | Method::ZeroShot => self.replay(ctx, rng, None, false),
            Method::BoundingBox => {
                let TaskPlan::Box(b) = self.plan_for(ctx, rng)? else {
                    unreachable!("box plan")
                };
                let space = b.clone().unwrap_or_else(|| ctx.space.clone());
                Ok(next_bo(&space, ctx.current, &self.config, rng))
            }
            Method::CTS | Method::TransferBO => {
                // full restarts at the first fit of each task, warm starts after
                let mut warm = match self.warm.take() {
                    Some((t, h)) if t == ctx.task_index => Some(h),
                    _ => None,
                };
                let out = if self.method == Method::CTS {
                    Ok(cts::cts_step(ctx.space, ctx.history, ctx.current, &self.config, &mut warm, rng))
                } else {
                    transfer::transfer_step(ctx, &self.config, &mut warm, rng)
                };
                self.warm = warm.map(|h| (ctx.task_index, h));
                out
            }
            Method::RandomSearch | Method::BO => unreachable!(),
        }
    }
}
