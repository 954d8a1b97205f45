//! Search-space restriction to the hull of previous tasks' optima.

use super::TaskHistory;
use crate::space::{Configuration, SearchSpace};

/// Best configuration of each task (first evaluated among equal losses).
pub fn per_task_optima(history: &TaskHistory) -> Vec<Configuration> {
    history
        .tasks
        .iter()
        .filter_map(|t| {
            t.evaluations
                .iter()
                .fold(None::<&super::Evaluation>, |best, e| match best {
                    Some(b) if b.objective <= e.objective => Some(b),
                    _ => Some(e),
                })
                .map(|e| e.config.clone())
        })
        .collect()
}

/// Box used on the task following `history`, or `None` while fewer than two
/// distinct per-task optima exist.
///
/// The box after task `k` is the per-dimension hull of the optima of tasks
/// `1..=k`, intersected with the box after task `k - 1`, so it never grows.
pub fn bounding_box(space: &SearchSpace, history: &TaskHistory) -> Option<SearchSpace> {
    let optima = per_task_optima(history);
    let mut current: Option<SearchSpace> = None;
    for k in 1..=optima.len() {
        let seen = &optima[..k];
        let distinct = seen.iter().any(|c| !c.same_as(&seen[0]));
        if !distinct {
            continue;
        }
        let d = space.dim();
        let mut lows = vec![f64::INFINITY; d];
        let mut highs = vec![f64::NEG_INFINITY; d];
        for c in seen {
            for (j, &v) in c.values().iter().enumerate() {
                lows[j] = lows[j].min(v);
                highs[j] = highs[j].max(v);
            }
        }
        let base = current.as_ref().unwrap_or(space);
        // an empty intersection keeps the previous box
        if let Ok(next) = base.restrict(&lows, &highs) {
            current = Some(next);
        }
    }
    current
}
