//! Normalized scores, rankings and the downstream comparison.
//!
//! All metrics read cumulative-best traces in the minimization convention,
//! except the downstream comparison, which works on native objectives.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::Serialize;

use super::Record;
use crate::benchmarks::Direction;
use crate::schedulers::Method;
use crate::{Error, Result};

/// Cumulative-best losses indexed by method, task and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Traces {
    pub budget: usize,
    pub direction: Direction,
    pub methods: Vec<Method>,
    pub tasks: Vec<usize>,
    loss: BTreeMap<(Method, usize), BTreeMap<u64, Vec<f64>>>,
}

impl Traces {
    /// Requires every `(method, seed, task)` to have iterations `1..=M` for
    /// one common `M`.
    pub fn from_records(records: &[Record]) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::Validation("no records".into()))?;
        let direction = first.direction;
        let mut raw: BTreeMap<(Method, usize), BTreeMap<u64, BTreeMap<usize, f64>>> = BTreeMap::new();
        for r in records {
            if r.direction != direction {
                return Err(Error::Validation("records mix optimization directions".into()));
            }
            let slot = raw.entry((r.method, r.task)).or_default().entry(r.seed).or_default();
            if slot.insert(r.iteration, r.cum_best_loss()).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate record: {} seed {} task {} iteration {}",
                    r.method, r.seed, r.task, r.iteration
                )));
            }
        }
        let budget = records.iter().map(|r| r.iteration).max().unwrap_or(0);
        let mut loss = BTreeMap::new();
        for (key, seeds) in raw {
            let mut per_seed = BTreeMap::new();
            for (seed, iters) in seeds {
                if iters.len() != budget || iters.keys().copied().ne(1..=budget) {
                    return Err(Error::Validation(format!(
                        "{} seed {seed} task {} does not have iterations 1..={budget}",
                        key.0, key.1
                    )));
                }
                per_seed.insert(seed, iters.into_values().collect());
            }
            loss.insert(key, per_seed);
        }
        let methods: BTreeSet<Method> = loss.keys().map(|k| k.0).collect();
        let tasks: BTreeSet<usize> = loss.keys().map(|k| k.1).collect();
        Ok(Self {
            budget,
            direction,
            methods: methods.into_iter().collect(),
            tasks: tasks.into_iter().collect(),
            loss,
        })
    }

    fn check_iteration(&self, iteration: usize) -> Result<()> {
        if iteration == 0 || iteration > self.budget {
            return Err(Error::Validation(format!(
                "iteration {iteration} outside 1..={}",
                self.budget
            )));
        }
        Ok(())
    }

    /// Per-seed cumulative-best losses at `iteration`, in seed order.
    pub fn seed_losses(&self, method: Method, task: usize, iteration: usize) -> Result<Vec<f64>> {
        self.check_iteration(iteration)?;
        let seeds = self.loss.get(&(method, task)).ok_or_else(|| {
            Error::Validation(format!("no results for {method} on task {task}"))
        })?;
        Ok(seeds.values().map(|t| t[iteration - 1]).collect())
    }

    /// `L_{i,m}`: mean over seeds of the cumulative-best loss.
    pub fn mean_loss(&self, method: Method, task: usize, iteration: usize) -> Result<f64> {
        Ok(mean(&self.seed_losses(method, task, iteration)?))
    }

    /// `L^best_{i,M}`: lowest mean loss at the final iteration over all
    /// methods present.
    pub fn best_reference(&self, task: usize) -> Result<f64> {
        let mut best = f64::INFINITY;
        for &m in &self.methods {
            if self.loss.contains_key(&(m, task)) {
                best = best.min(self.mean_loss(m, task, self.budget)?);
            }
        }
        if best.is_finite() {
            Ok(best)
        } else {
            Err(Error::Validation(format!("no results on task {task}")))
        }
    }

    pub fn seeds(&self, method: Method, task: usize) -> Vec<u64> {
        self.loss
            .get(&(method, task))
            .map(|s| s.keys().copied().collect())
            .unwrap_or_default()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard error, `None` below two values.
fn standard_error(v: &[f64]) -> Option<f64> {
    let n = v.len();
    if n < 2 {
        return None;
    }
    let m = mean(v);
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    Some(var.sqrt() / (n as f64).sqrt())
}

/// Mean and two standard errors; fails below two values.
pub fn aggregate(values: &[f64]) -> Result<(f64, f64)> {
    let se = standard_error(values).ok_or_else(|| {
        Error::Validation(format!(
            "standard error needs at least 2 replications, got {}",
            values.len()
        ))
    })?;
    Ok((mean(values), 2.0 * se))
}

/// `100 (l - best) / (rs - best)`; 0 when `rs == best == l`.
pub fn normalize(l: f64, rs: f64, best: f64) -> Result<f64> {
    let denom = rs - best;
    if denom == 0.0 {
        if l == best {
            return Ok(0.0);
        }
        return Err(Error::UndefinedScore(format!(
            "RandomSearch mean equals the best mean ({best}) but loss is {l}"
        )));
    }
    Ok(100.0 * ((l - best) / denom))
}

/// Normalized score of the seed-mean loss of `method` on `task` at `iteration`.
pub fn normalized_score(traces: &Traces, method: Method, task: usize, iteration: usize) -> Result<f64> {
    let l = traces.mean_loss(method, task, iteration)?;
    let rs = traces.mean_loss(Method::RandomSearch, task, traces.budget)?;
    normalize(l, rs, traces.best_reference(task)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    /// `None` with fewer than two values.
    pub two_se: Option<f64>,
    pub n: usize,
}

impl Summary {
    fn of(values: &[f64]) -> Self {
        Self {
            mean: mean(values),
            two_se: standard_error(values).map(|s| 2.0 * s),
            n: values.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRow {
    pub method: Method,
    pub task: usize,
    pub iteration: usize,
    /// Score of the seed-mean loss; `None` where the zero-denominator rule
    /// leaves it undefined.
    pub score: Option<f64>,
    /// Two standard errors of the per-seed scores.
    pub two_se: Option<f64>,
    pub n_seeds: usize,
}

/// Score rows for every method, the given tasks (all when `None`) and
/// iterations, sorted by method, task, iteration. Requires RandomSearch
/// results on every task.
pub fn score_table(traces: &Traces, iterations: &[usize], tasks: Option<&[usize]>) -> Result<Vec<ScoreRow>> {
    for &it in iterations {
        traces.check_iteration(it)?;
    }
    let tasks = tasks.unwrap_or(&traces.tasks);
    let mut rows = Vec::new();
    for &method in &traces.methods {
        for &task in tasks {
            let rs = traces.mean_loss(Method::RandomSearch, task, traces.budget)?;
            let best = traces.best_reference(task)?;
            for &iteration in iterations {
                let per_seed = traces.seed_losses(method, task, iteration)?;
                let score = normalize(mean(&per_seed), rs, best).ok();
                let scores: Option<Vec<f64>> =
                    per_seed.iter().map(|&l| normalize(l, rs, best).ok()).collect();
                rows.push(ScoreRow {
                    method,
                    task,
                    iteration,
                    score,
                    two_se: scores.and_then(|s| standard_error(&s)).map(|s| 2.0 * s),
                    n_seeds: per_seed.len(),
                });
            }
        }
    }
    Ok(rows)
}

/// 1-based ranks, ties share the average rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        for &k in &order[i..=j] {
            ranks[k] = (i + j + 2) as f64 / 2.0;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankRow {
    pub method: Method,
    pub iteration: usize,
    pub mean_rank: f64,
    pub two_se: Option<f64>,
    pub n_tasks: usize,
}

/// Per task, ranks `methods` by mean cumulative-best loss at `iteration`;
/// returns each method's mean rank over tasks.
pub fn mean_rankings(traces: &Traces, methods: &[Method], iteration: usize) -> Result<Vec<RankRow>> {
    if methods.len() < 2 {
        return Err(Error::Validation("rankings need at least 2 methods".into()));
    }
    let mut per_method = vec![Vec::with_capacity(traces.tasks.len()); methods.len()];
    for &task in &traces.tasks {
        let means = methods
            .iter()
            .map(|&m| traces.mean_loss(m, task, iteration))
            .collect::<Result<Vec<f64>>>()?;
        for (slot, r) in per_method.iter_mut().zip(average_ranks(&means)) {
            slot.push(r);
        }
    }
    Ok(methods
        .iter()
        .zip(per_method)
        .map(|(&method, ranks)| {
            let s = Summary::of(&ranks);
            RankRow {
                method,
                iteration,
                mean_rank: s.mean,
                two_se: s.two_se,
                n_tasks: s.n,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DownstreamRow {
    pub task: usize,
    pub se_reduction_pct: Option<f64>,
    pub mean_improvement_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Downstream {
    pub method_a: Method,
    pub method_b: Method,
    pub iteration: usize,
    pub rows: Vec<DownstreamRow>,
    pub se_reduction: Option<Summary>,
    pub mean_improvement: Option<Summary>,
    /// Per-task values left out because `s_b` or `m_b` was zero (or `s`
    /// undefined).
    pub excluded: usize,
}

/// Native-unit comparison of `a` against `b` at `iteration`.
///
/// `se_reduction = 100 (1 - s_a / s_b)` with `s` the standard error over
/// seeds. `mean_improvement` is positive when `a` is better:
/// `100 (m_a / m_b - 1)` for maximization, `100 (1 - m_a / m_b)` for
/// minimization.
pub fn downstream_comparison(traces: &Traces, a: Method, b: Method, iteration: usize) -> Result<Downstream> {
    let dir = traces.direction;
    let native = |m: Method, task: usize| -> Result<Vec<f64>> {
        Ok(traces
            .seed_losses(m, task, iteration)?
            .into_iter()
            .map(|l| dir.from_loss(l))
            .collect())
    };
    let mut rows = Vec::new();
    let mut excluded = 0;
    for &task in &traces.tasks {
        let (va, vb) = (native(a, task)?, native(b, task)?);
        let (ma, mb) = (mean(&va), mean(&vb));
        let se = match (standard_error(&va), standard_error(&vb)) {
            (Some(sa), Some(sb)) if sb != 0.0 => Some(100.0 * (1.0 - sa / sb)),
            _ => None,
        };
        let imp = if mb != 0.0 {
            let ratio = ma / mb;
            Some(match dir {
                Direction::Maximize => 100.0 * (ratio - 1.0),
                Direction::Minimize => 100.0 * (1.0 - ratio),
            })
        } else {
            None
        };
        excluded += usize::from(se.is_none()) + usize::from(imp.is_none());
        rows.push(DownstreamRow {
            task,
            se_reduction_pct: se,
            mean_improvement_pct: imp,
        });
    }
    let summarize = |v: Vec<f64>| (!v.is_empty()).then(|| Summary::of(&v));
    Ok(Downstream {
        method_a: a,
        method_b: b,
        iteration,
        se_reduction: summarize(rows.iter().filter_map(|r| r.se_reduction_pct).collect()),
        mean_improvement: summarize(rows.iter().filter_map(|r| r.mean_improvement_pct).collect()),
        rows,
        excluded,
    })
}

/// Writes serializable rows as CSV with a header line.
pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Validation(format!("csv: {e}")))?;
    }
    w.flush()?;
    Ok(())
}
