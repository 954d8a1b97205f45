//! Warm-start lists of the SimpleOrdered and SimplePrevious families.

use super::{Evaluation, TaskHistory};
use crate::space::Configuration;

/// Distinct configurations of one task in ascending loss order.
///
/// Repeated configurations keep their first occurrence; equal losses keep
/// evaluation order.
pub fn ranked_distinct(evals: &[Evaluation]) -> Vec<(Configuration, f64)> {
    let mut out: Vec<(Configuration, f64)> = Vec::with_capacity(evals.len());
    for e in evals {
        if !out.iter().any(|(c, _)| c.same_as(&e.config)) {
            out.push((e.config.clone(), e.objective));
        }
    }
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    out
}

/// One task's ranking split into the regular ranked stream and the extra
/// joint optima (configurations tied with the first for the best loss).
fn split_joint_optima(evals: &[Evaluation]) -> (Vec<Configuration>, Vec<Configuration>) {
    let ranked = ranked_distinct(evals);
    let Some(best) = ranked.first().map(|r| r.1) else {
        return (Vec::new(), Vec::new());
    };
    let n_joint = ranked.iter().take_while(|r| r.1 == best).count();
    let mut stream = Vec::with_capacity(ranked.len());
    let mut extras = Vec::new();
    for (i, (c, _)) in ranked.into_iter().enumerate() {
        if i > 0 && i < n_joint {
            extras.push(c);
        } else {
            stream.push(c);
        }
    }
    (stream, extras)
}

/// SimpleOrdered warm-start list of length at most `n`.
///
/// Takes the top configuration of each previous task, most recent first,
/// skipping configurations already chosen. Extra joint optima go after the
/// tops of all tasks. If the list is still short, second-best
/// configurations of each task follow (most recent first), then third-best
/// and so on.
pub fn simple_ordered_list(history: &TaskHistory, n: usize) -> Vec<Configuration> {
    let per_task: Vec<(Vec<Configuration>, Vec<Configuration>)> = history
        .tasks
        .iter()
        .rev()
        .map(|t| split_joint_optima(&t.evaluations))
        .collect();

    let mut chosen: Vec<Configuration> = Vec::with_capacity(n);
    let offer = |c: &Configuration, chosen: &mut Vec<Configuration>| {
        if chosen.len() < n && !chosen.iter().any(|x| x.same_as(c)) {
            chosen.push(c.clone());
        }
    };

    for (stream, _) in &per_task {
        if let Some(top) = stream.first() {
            offer(top, &mut chosen);
        }
    }
    for (_, extras) in &per_task {
        for c in extras {
            offer(c, &mut chosen);
        }
    }
    let depth = per_task.iter().map(|(s, _)| s.len()).max().unwrap_or(0);
    for rank in 1..depth {
        if chosen.len() >= n {
            break;
        }
        for (stream, _) in &per_task {
            if let Some(c) = stream.get(rank) {
                offer(c, &mut chosen);
            }
        }
    }
    chosen
}

/// Distinct configurations of the most recent task by ascending loss,
/// truncated to `n` when given.
pub fn simple_previous_list(history: &TaskHistory, n: Option<usize>) -> Vec<Configuration> {
    let Some(last) = history.last() else {
        return Vec::new();
    };
    let ranked = ranked_distinct(&last.evaluations).into_iter().map(|(c, _)| c);
    match n {
        Some(n) => ranked.take(n).collect(),
        None => ranked.collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Configuration {
        vec![v].into()
    }

    #[test]
    fn previous_sorted_ascending() {
        let h = TaskHistory::from_losses(vec![vec![(c(1.0), 5.0), (c(2.0), 1.0), (c(3.0), 3.0)]]);
        assert_eq!(simple_previous_list(&h, Some(2)), vec![c(2.0), c(3.0)]);
        assert_eq!(simple_previous_list(&h, None), vec![c(2.0), c(3.0), c(1.0)]);
    }

    #[test]
    fn previous_deduplicates_first_occurrence() {
        let h = TaskHistory::from_losses(vec![vec![
            (c(1.0), 5.0),
            (c(2.0), 1.0),
            (c(1.0), 0.5),
            (c(3.0), 3.0),
        ]]);
        assert_eq!(simple_previous_list(&h, None), vec![c(2.0), c(3.0), c(1.0)]);
    }

    #[test]
    fn ordered_most_recent_first() {
        let tasks = (0..5)
            .map(|t| vec![(c(t as f64 * 10.0), 1.0), (c(t as f64 * 10.0 + 1.0), 2.0)])
            .collect();
        let h = TaskHistory::from_losses(tasks);
        assert_eq!(
            simple_ordered_list(&h, 5),
            vec![c(40.0), c(30.0), c(20.0), c(10.0), c(0.0)]
        );
    }

    #[test]
    fn ordered_single_task_uses_ranks() {
        let h = TaskHistory::from_losses(vec![vec![
            (c(1.0), 4.0),
            (c(2.0), 0.0),
            (c(3.0), 3.0),
            (c(4.0), 1.0),
            (c(5.0), 2.0),
            (c(6.0), 9.0),
        ]]);
        assert_eq!(
            simple_ordered_list(&h, 5),
            vec![c(2.0), c(4.0), c(5.0), c(3.0), c(1.0)]
        );
    }

    #[test]
    fn empty_history_gives_empty_list() {
        assert!(simple_ordered_list(&TaskHistory::new(), 5).is_empty());
        assert!(simple_previous_list(&TaskHistory::new(), Some(5)).is_empty());
    }
}
