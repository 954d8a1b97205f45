//! Copula Thompson sampling: per-task rank -> quantile -> probit targets,
//! one GP over the pooled transformed values, argmin of a posterior draw.

use rand::seq::index;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use super::{fit_warm, next_random, Evaluation, SchedulerConfig, TaskHistory};
use crate::space::{Configuration, SearchSpace};
use crate::surrogate::Hyperparameters;

/// `(average rank - 0.5) / n`, ascending (smallest loss gets the smallest
/// quantile); tied losses share their averaged rank.
pub fn mid_rank_quantiles(losses: &[f64]) -> Vec<f64> {
    let n = losses.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]));
    let mut q = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && losses[order[j + 1]] == losses[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 averaged
        let avg_rank = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            q[k] = (avg_rank - 0.5) / n as f64;
        }
        i = j + 1;
    }
    q
}

/// `Φ⁻¹` of [`mid_rank_quantiles`].
pub fn probit_scores(losses: &[f64]) -> Vec<f64> {
    let normal = Normal::standard();
    mid_rank_quantiles(losses)
        .into_iter()
        .map(|q| normal.inverse_cdf(q))
        .collect()
}

fn task_scores(evals: &[Evaluation]) -> Vec<f64> {
    let losses: Vec<f64> = evals.iter().map(|e| e.objective).collect();
    probit_scores(&losses)
}

/// Pooled `(encoded config, z)` pairs. Current-task pairs are always kept;
/// previous-task pairs are uniformly subsampled so the total stays within
/// `cap` when possible.
pub(crate) fn cts_design<R: Rng + ?Sized>(
    space: &SearchSpace,
    history: &TaskHistory,
    current: &[Evaluation],
    cap: usize,
    rng: &mut R,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut prev_x = Vec::new();
    let mut prev_z = Vec::new();
    for task in &history.tasks {
        for (e, z) in task.evaluations.iter().zip(task_scores(&task.evaluations)) {
            prev_x.push(space.encode_unchecked(&e.config));
            prev_z.push(z);
        }
    }
    let room = cap.saturating_sub(current.len());
    if prev_x.len() > room {
        let mut keep = index::sample(rng, prev_x.len(), room).into_vec();
        keep.sort_unstable();
        prev_x = keep.iter().map(|&i| prev_x[i].clone()).collect();
        prev_z = keep.iter().map(|&i| prev_z[i]).collect();
    }
    let cur_z = if current.len() >= 2 {
        task_scores(current)
    } else {
        vec![0.0; current.len()]
    };
    prev_x.extend(current.iter().map(|e| space.encode_unchecked(&e.config)));
    prev_z.extend(cur_z);
    (prev_x, prev_z)
}

/// Refits every call. Falls back to a uniform sample if the model cannot
/// be fitted or sampled.
pub fn next_cts<R: Rng + ?Sized>(
    space: &SearchSpace,
    history: &TaskHistory,
    current: &[Evaluation],
    config: &SchedulerConfig,
    rng: &mut R,
) -> Configuration {
    cts_step(space, history, current, config, &mut None, rng)
}

/// [`next_cts`] with a fit warm-started from `warm`, which is replaced by
/// the new fit's hyperparameters.
pub(crate) fn cts_step<R: Rng + ?Sized>(
    space: &SearchSpace,
    history: &TaskHistory,
    current: &[Evaluation],
    config: &SchedulerConfig,
    warm: &mut Option<Hyperparameters>,
    rng: &mut R,
) -> Configuration {
    let (xs, zs) = cts_design(space, history, current, config.transfer_obs_cap, rng);
    if xs.is_empty() {
        return next_random(space, rng);
    }
    let model = match fit_warm(&xs, &zs, config, warm, rng) {
        Ok(m) => m,
        Err(_) => return next_random(space, rng),
    };

    let mut candidates: Vec<Configuration> = Vec::new();
    for e in history.tasks.iter().flat_map(|t| &t.evaluations) {
        if !candidates.iter().any(|c| c.same_as(&e.config)) {
            candidates.push(e.config.clone());
        }
    }
    candidates.extend((0..config.cts_candidate_pool).map(|_| space.sample_uniform(rng)));
    let points: Vec<Vec<f64>> = candidates.iter().map(|c| space.encode_unchecked(c)).collect();
    let draw = match model.sample_posterior(&points, 1, rng) {
        Ok(mut d) => d.remove(0),
        Err(_) => return next_random(space, rng),
    };
    let best = draw
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("candidate pool is non-empty");
    candidates.swap_remove(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::space::Dimension;
    use statrs::distribution::ContinuousCDF;

    fn close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-12, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn quantiles_of_distinct_losses() {
        close(&mid_rank_quantiles(&[3.0, 1.0, 2.0]), &[5.0 / 6.0, 1.0 / 6.0, 0.5]);
    }

    #[test]
    fn quantiles_with_ties() {
        close(&mid_rank_quantiles(&[1.0, 1.0, 2.0]), &[1.0 / 3.0, 1.0 / 3.0, 5.0 / 6.0]);
        close(&mid_rank_quantiles(&[4.0, 4.0, 4.0, 4.0]), &[0.5; 4]);
    }

    #[test]
    fn mass_balance_and_equivariance() {
        let losses = [0.3, -1.0, 7.0, 0.3, 2.5, 0.3, 9.0];
        let z = probit_scores(&losses);
        let n = Normal::standard();
        let mass: f64 = z.iter().map(|v| n.cdf(*v)).sum();
        assert!((mass - losses.len() as f64 / 2.0).abs() < 1e-9);
        let perm = [6, 2, 0, 5, 1, 4, 3];
        let permuted: Vec<f64> = perm.iter().map(|&i| losses[i]).collect();
        let zp = probit_scores(&permuted);
        for (k, &i) in perm.iter().enumerate() {
            assert_eq!(zp[k], z[i]);
        }
    }

    fn c(v: f64) -> Configuration {
        vec![v].into()
    }

    #[test]
    fn design_respects_cap_and_keeps_current() {
        let space = SearchSpace::new(vec![Dimension::continuous("x", 0.0, 1.0).unwrap()]).unwrap();
        let h = TaskHistory::from_losses(vec![(0..150).map(|i| (c(i as f64 / 150.0), i as f64)).collect(); 2]);
        let cur = TaskHistory::from_losses(vec![vec![(c(0.5), 1.0)]]).tasks[0].evaluations.clone();
        let (xs, zs) = cts_design(&space, &h, &cur, 200, &mut seeded(0));
        assert_eq!(xs.len(), 200);
        assert_eq!(xs[199], vec![0.5]);
        assert_eq!(zs[199], 0.0);
    }

    #[test]
    fn proposal_in_bounds_and_deterministic() {
        let space = SearchSpace::new(vec![Dimension::continuous("x", 0.0, 1.0).unwrap()]).unwrap();
        let h = TaskHistory::from_losses(vec![
            (0..10).map(|i| (c(i as f64 / 10.0), (i as f64 / 10.0 - 0.3).powi(2))).collect(),
        ]);
        let cfg = SchedulerConfig::default();
        let a = next_cts(&space, &h, &[], &cfg, &mut seeded(4));
        let b = next_cts(&space, &h, &[], &cfg, &mut seeded(4));
        assert_eq!(a, b);
        assert!(space.contains(&a));
    }
}
