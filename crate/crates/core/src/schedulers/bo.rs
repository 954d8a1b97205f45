use rand::Rng;

use super::{Evaluation, SchedulerConfig};
use crate::acquisition::{propose, AcquisitionState};
use crate::space::{Configuration, SearchSpace};
use crate::surrogate::GpModel;

pub fn next_random<R: Rng + ?Sized>(space: &SearchSpace, rng: &mut R) -> Configuration {
    space.sample_uniform(rng)
}

/// GP-based BO on the current task's evaluations only.
///
/// The first `n_initial` iterations are uniform samples. A GP that cannot be
/// fitted falls back to a uniform sample for that iteration.
pub fn next_bo<R: Rng + ?Sized>(
    space: &SearchSpace,
    current: &[Evaluation],
    config: &SchedulerConfig,
    rng: &mut R,
) -> Configuration {
    if current.len() < config.n_initial.max(1) {
        return next_random(space, rng);
    }
    let inputs: Vec<Vec<f64>> = current.iter().map(|e| space.encode_unchecked(&e.config)).collect();
    let targets: Vec<f64> = current.iter().map(|e| e.objective).collect();
    let model = match GpModel::fit(&inputs, &targets, &config.fit_options(), rng) {
        Ok(m) => m,
        Err(_) => return next_random(space, rng),
    };
    let incumbent = targets.iter().cloned().fold(f64::INFINITY, f64::min);
    let state = AcquisitionState::new(incumbent, config.acquisition.clone());
    propose(&model, space, &state, rng)
}
