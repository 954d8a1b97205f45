//! Replay of external evaluation dumps by nearest-neighbor lookup.
//!
//! CSV layout: a header row, one column per hyperparameter (named as in the
//! search space), a `context` column and an `objective` column. Each distinct
//! context value becomes one task, in ascending order.

use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use super::{Benchmark, ContextKind, Direction, TaskContext, TaskObjective};
use crate::rng::SeededRng;
use crate::space::{Configuration, Dimension, SearchSpace};
use crate::{Error, Result};

#[derive(Debug, Clone)]
struct Row {
    encoded: Vec<f64>,
    objective: f64,
}

#[derive(Debug, Clone)]
pub struct TabularTable {
    space: SearchSpace,
    contexts: Vec<f64>,
    rows: Vec<Vec<Row>>,
}

impl TabularTable {
    pub fn from_path(path: &Path, space: Option<SearchSpace>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(file, path, space)
    }

    /// `origin` is only used in error messages.
    pub fn from_reader<R: Read>(reader: R, origin: &Path, space: Option<SearchSpace>) -> Result<Self> {
        let parse_err = |line: usize, reason: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            reason,
        };
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let ctx_col = col("context").ok_or_else(|| parse_err(1, "missing `context` column".into()))?;
        let obj_col =
            col("objective").ok_or_else(|| parse_err(1, "missing `objective` column".into()))?;

        let hp_names: Vec<String> = match &space {
            Some(s) => s.names().map(str::to_owned).collect(),
            None => headers
                .iter()
                .filter(|h| *h != "context" && *h != "objective")
                .map(str::to_owned)
                .collect(),
        };
        if hp_names.is_empty() {
            return Err(parse_err(1, "no hyperparameter columns".into()));
        }
        let hp_cols = hp_names
            .iter()
            .map(|n| col(n).ok_or_else(|| parse_err(1, format!("missing hyperparameter column `{n}`"))))
            .collect::<Result<Vec<_>>>()?;

        let mut raw: Vec<(usize, Vec<f64>, f64, f64)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                parse_err(line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let num = |i: usize| -> Result<f64> {
                let field = rec.get(i).unwrap_or("");
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(line, format!("`{field}` in column `{}` is not a finite number", &headers[i])))
            };
            let values = hp_cols.iter().map(|&c| num(c)).collect::<Result<Vec<_>>>()?;
            raw.push((line, values, num(ctx_col)?, num(obj_col)?));
        }
        if raw.is_empty() {
            return Err(parse_err(2, "no data rows".into()));
        }

        let space = match space {
            Some(s) => s,
            None => {
                let dims = hp_names
                    .iter()
                    .enumerate()
                    .map(|(j, name)| {
                        let (lo, hi) = raw.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), r| {
                            (l.min(r.1[j]), h.max(r.1[j]))
                        });
                        Dimension::continuous(name.clone(), lo, hi).map_err(|e| {
                            parse_err(1, format!("cannot infer bounds for `{name}`: {e}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                SearchSpace::new(dims)?
            }
        };

        let mut contexts: Vec<f64> = raw.iter().map(|r| r.2).collect();
        contexts.sort_by(f64::total_cmp);
        contexts.dedup();
        let mut rows: Vec<Vec<Row>> = vec![Vec::new(); contexts.len()];
        for (line, values, ctx, obj) in raw {
            let config = Configuration(values);
            let encoded = space
                .encode(&config)
                .map_err(|e| parse_err(line, e.to_string()))?;
            let k = contexts
                .binary_search_by(|c| c.total_cmp(&ctx))
                .expect("context collected above");
            rows[k].push(Row {
                encoded,
                objective: obj,
            });
        }
        Ok(Self {
            space,
            contexts,
            rows,
        })
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn contexts(&self) -> &[f64] {
        &self.contexts
    }

    /// Objective of the nearest stored row (encoded Euclidean distance)
    /// within `context`; ties go to the earliest row.
    pub fn lookup(&self, context: f64, config: &Configuration) -> Result<f64> {
        let k = self
            .contexts
            .iter()
            .position(|&c| c == context)
            .ok_or(Error::UnknownContext(context))?;
        self.lookup_task(k + 1, config)
    }

    fn lookup_task(&self, task: usize, config: &Configuration) -> Result<f64> {
        let rows = self
            .rows
            .get(task.wrapping_sub(1))
            .ok_or_else(|| Error::Validation(format!("task {task} out of range")))?;
        let q = self.space.encode(config)?;
        let mut best = (f64::INFINITY, f64::NAN);
        for r in rows {
            let d: f64 = r.encoded.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum();
            if d < best.0 {
                best = (d, r.objective);
            }
        }
        Ok(best.1)
    }
}

impl TaskObjective for TabularTable {
    fn evaluate(&self, task: usize, config: &Configuration, _noise: &mut SeededRng) -> Result<f64> {
        self.lookup_task(task, config)
    }
}

/// Loads a tabular benchmark. Without an explicit space, each hyperparameter
/// becomes a linear continuous dimension spanning its observed range.
pub fn tabular_benchmark(path: &Path, space: Option<SearchSpace>, direction: Direction) -> Result<Benchmark> {
    let table = TabularTable::from_path(path, space)?;
    benchmark_from_table(table, direction, path.display().to_string())
}

pub(crate) fn benchmark_from_table(table: TabularTable, direction: Direction, name: String) -> Result<Benchmark> {
    let kind = if table.contexts.iter().all(|c| *c > 0.0) {
        ContextKind::Size
    } else {
        ContextKind::Index
    };
    let tasks = table
        .contexts
        .iter()
        .enumerate()
        .map(|(i, &c)| TaskContext {
            index: i + 1,
            feature: c,
        })
        .collect();
    let space = table.space.clone();
    Benchmark::new(format!("tabular:{name}"), space, tasks, direction, kind, Arc::new(table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn table(csv: &str, space: Option<SearchSpace>) -> Result<TabularTable> {
        TabularTable::from_reader(csv.as_bytes(), Path::new("inline.csv"), space)
    }

    #[test]
    fn exact_hit_and_nearest_row() {
        let t = table("x,y,context,objective\n0.1,0.1,56,3.5\n0.9,0.9,56,1.25\n0.5,0.5,72,7\n", None).unwrap();
        assert_eq!(t.lookup(56.0, &vec![0.9, 0.9].into()).unwrap(), 1.25);
        assert_eq!(t.lookup(56.0, &vec![0.2, 0.3].into()).unwrap(), 3.5);
        assert_eq!(t.lookup(72.0, &vec![0.1, 0.9].into()).unwrap(), 7.0);
        assert!(matches!(t.lookup(60.0, &vec![0.1, 0.1].into()), Err(Error::UnknownContext(_))));
    }

    #[test]
    fn contexts_sorted_ascending() {
        let mut csv = String::from("lr,context,objective\n");
        for (i, c) in super::super::XGBOOST_SIZES.iter().rev().enumerate() {
            csv.push_str(&format!("{},{c},{}\n", i as f64 / 27.0, i));
        }
        let t = table(&csv, None).unwrap();
        assert_eq!(t.contexts().len(), 28);
        assert!(t.contexts().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(t.contexts()[0], 56.0);
        let b = benchmark_from_table(t, Direction::Minimize, "x".into()).unwrap();
        assert_eq!(b.n_tasks(), 28);
        assert_eq!(b.context_kind, ContextKind::Size);
        assert_eq!(b.evaluate(28, &vec![0.0].into(), &mut seeded(0)).unwrap(), 0.0);
    }

    #[test]
    fn parse_error_reports_line() {
        let err = table("x,context,objective\n0.1,1,2\n0.2,1,oops\n", None).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
        assert!(table("x,objective\n0.1,1\n", None).is_err());
    }

    #[test]
    fn explicit_space_is_enforced() {
        let space = SearchSpace::new(vec![Dimension::continuous("x", 0.0, 1.0).unwrap()]).unwrap();
        let err = table("x,context,objective\n0.1,1,2\n1.5,1,3\n", Some(space)).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }
}
