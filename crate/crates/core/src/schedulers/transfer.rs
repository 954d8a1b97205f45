//! BO over the joint (hyperparameters, task feature) input.

use rand::seq::index;
use rand::Rng;

use super::{fit_warm, next_bo, next_random, Evaluation, SchedulerConfig, SuggestContext, TaskHistory};
use crate::acquisition::{propose_with_context, AcquisitionState};
use crate::space::{Configuration, SearchSpace};
use crate::surrogate::Hyperparameters;
use crate::Result;

/// Pooled design: encoded config with the normalized task feature appended,
/// and losses. Uniformly subsampled (order kept) to at most `cap` rows.
pub fn transfer_design<R: Rng + ?Sized>(
    space: &SearchSpace,
    history: &TaskHistory,
    current: &[Evaluation],
    current_feature: f64,
    cap: usize,
    rng: &mut R,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let row = |e: &Evaluation, feature: f64| {
        let mut x = space.encode_unchecked(&e.config);
        x.push(feature);
        (x, e.objective)
    };
    let mut rows: Vec<(Vec<f64>, f64)> = history
        .tasks
        .iter()
        .flat_map(|t| t.evaluations.iter().map(move |e| (e, t.normalized_feature)))
        .chain(current.iter().map(|e| (e, current_feature)))
        .map(|(e, f)| row(e, f))
        .collect();
    if rows.len() > cap {
        let mut keep = index::sample(rng, rows.len(), cap).into_vec();
        keep.sort_unstable();
        rows = keep.into_iter().map(|i| rows[i].clone()).collect();
    }
    rows.into_iter().unzip()
}

/// Incumbent is the best current-task loss; before any current-task
/// evaluation it is the lowest predicted mean over the pooled designs moved
/// to the current task's feature.
pub fn next_transfer_bo<R: Rng + ?Sized>(
    ctx: &SuggestContext<'_>,
    config: &SchedulerConfig,
    rng: &mut R,
) -> Result<Configuration> {
    transfer_step(ctx, config, &mut None, rng)
}

/// [`next_transfer_bo`] with a fit warm-started from `warm`, which is
/// replaced by the new fit's hyperparameters.
pub(crate) fn transfer_step<R: Rng + ?Sized>(
    ctx: &SuggestContext<'_>,
    config: &SchedulerConfig,
    warm: &mut Option<Hyperparameters>,
    rng: &mut R,
) -> Result<Configuration> {
    if ctx.history.is_empty() {
        return Ok(next_bo(ctx.space, ctx.current, config, rng));
    }
    let f = ctx.normalized_feature;
    let (xs, ys) = transfer_design(ctx.space, ctx.history, ctx.current, f, config.transfer_obs_cap, rng);
    let model = match fit_warm(&xs, &ys, config, warm, rng) {
        Ok(m) => m,
        Err(_) => return Ok(next_random(ctx.space, rng)),
    };
    let incumbent = if ctx.current.is_empty() {
        let moved: Vec<Vec<f64>> = xs
            .iter()
            .map(|x| {
                let mut m = x.clone();
                *m.last_mut().expect("feature column") = f;
                m
            })
            .collect();
        model.predict(&moved).0.into_iter().fold(f64::INFINITY, f64::min)
    } else {
        ctx.current.iter().map(|e| e.objective).fold(f64::INFINITY, f64::min)
    };
    let state = AcquisitionState::new(incumbent, config.acquisition.clone());
    Ok(propose_with_context(&model, ctx.space, &state, &[f], rng))
}
