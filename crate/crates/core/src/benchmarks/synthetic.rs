//! Quadratic bowls whose minimizer drifts linearly in log training-set size.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

use super::{Benchmark, ContextKind, Direction, TaskContext, TaskObjective};
use crate::rng::{mix, SeededRng, Stream};
use crate::space::{Configuration, Dimension, SearchSpace};
use crate::{Error, Result};

/// The 28 training-set sizes of the XGBoost benchmark, 56 to 56000.
pub const XGBOOST_SIZES: [f64; 28] = [
    56.0, 72.0, 93.0, 120.0, 155.0, 201.0, 259.0, 335.0, 433.0, 560.0, 723.0, 934.0, 1206.0,
    1558.0, 2012.0, 2599.0, 3357.0, 4335.0, 5600.0, 7232.0, 9341.0, 12064.0, 15582.0, 20125.0,
    25992.0, 33571.0, 43358.0, 56000.0,
];

const NOISE_SCALE: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct SyntheticDrift {
    pub sizes: Vec<f64>,
    pub mu_start: Vec<f64>,
    pub mu_end: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SyntheticDrift {
    pub fn new(seed: u64, dim: usize, sizes: &[f64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("synthetic_drift needs dim >= 1".into()));
        }
        if sizes.is_empty()
            || sizes.iter().any(|s| !(*s > 0.0))
            || sizes.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::Config(
                "synthetic_drift sizes must be positive and strictly increasing".into(),
            ));
        }
        let mut rng = SeededRng::seed_from_u64(mix(&[seed, Stream::Benchmark as u64, 1]));
        let mu_start = (0..dim).map(|_| rng.random::<f64>()).collect();
        let mu_end = (0..dim).map(|_| rng.random::<f64>()).collect();
        let weights = (0..dim).map(|_| rng.random_range(0.5..2.0)).collect();
        Ok(Self {
            sizes: sizes.to_vec(),
            mu_start,
            mu_end,
            weights,
        })
    }

    /// Position of `task` along the log-size axis, in `[0, 1]`.
    fn progress(&self, task: usize) -> f64 {
        let lo = self.sizes[0].ln();
        let hi = self.sizes[self.sizes.len() - 1].ln();
        if hi > lo {
            (self.sizes[task - 1].ln() - lo) / (hi - lo)
        } else {
            0.0
        }
    }

    /// Minimizer of the noise-free objective on 1-based `task`.
    pub fn optimum(&self, task: usize) -> Vec<f64> {
        let t = self.progress(task);
        self.mu_start
            .iter()
            .zip(&self.mu_end)
            .map(|(a, b)| a + (b - a) * t)
            .collect()
    }

    pub fn noise_free(&self, task: usize, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.optimum(task))
            .zip(&self.weights)
            .map(|((xi, mi), w)| w * (xi - mi).powi(2))
            .sum()
    }

    /// Observation noise stddev; larger for small training sets.
    pub fn noise_std(&self, task: usize) -> f64 {
        NOISE_SCALE * (1.0 + self.sizes[0] / self.sizes[task - 1])
    }
}

impl TaskObjective for SyntheticDrift {
    fn evaluate(&self, task: usize, config: &Configuration, noise: &mut SeededRng) -> Result<f64> {
        let eps = Normal::new(0.0, self.noise_std(task))
            .map_err(|e| Error::Numeric(e.to_string()))?
            .sample(noise);
        Ok(self.noise_free(task, config.values()) + eps)
    }
}

pub fn synthetic_drift(seed: u64, dim: usize, sizes: &[f64]) -> Result<Benchmark> {
    let drift = SyntheticDrift::new(seed, dim, sizes)?;
    let dims = (1..=dim)
        .map(|j| Dimension::continuous(format!("x{j}"), 0.0, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let tasks = sizes
        .iter()
        .enumerate()
        .map(|(i, &s)| TaskContext {
            index: i + 1,
            feature: s,
        })
        .collect();
    Benchmark::new(
        "synthetic_drift",
        SearchSpace::new(dims)?,
        tasks,
        Direction::Minimize,
        ContextKind::Size,
        Arc::new(drift),
    )
}
