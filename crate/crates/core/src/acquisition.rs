//! Monte Carlo expected improvement and the inner acquisition optimizer.
//!
//! Everything here minimizes: improvement is `incumbent - f`.

use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use serde::{Deserialize, Serialize};

use crate::space::{Configuration, SearchSpace};
use crate::surrogate::GpModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcquisitionConfig {
    pub mc_samples: usize,
    pub candidate_pool_size: usize,
    pub local_search_steps: usize,
    pub local_search_step: f64,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            mc_samples: 256,
            candidate_pool_size: 1000,
            local_search_steps: 20,
            local_search_step: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AcquisitionState {
    /// Best observed objective so far.
    pub incumbent: f64,
    pub config: AcquisitionConfig,
}

impl AcquisitionState {
    pub fn new(incumbent: f64, config: AcquisitionConfig) -> Self {
        Self { incumbent, config }
    }
}

/// Standard normal draws in antithetic pairs `(z, -z)`, with `|z|`
/// stratified: pair `i` of `k` takes `Φ⁻¹(0.5 + (i + U) / 2k)`.
///
/// With pairs, the MC estimate of EI is non-decreasing in the posterior
/// stddev for a fixed mean below the incumbent.
pub fn antithetic_normals<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let n = n.max(1);
    let pairs = n.div_ceil(2);
    let normal = Normal::standard();
    let mut z = Vec::with_capacity(n);
    for i in 0..pairs {
        let u: f64 = rng.random();
        let v = normal.inverse_cdf(0.5 + 0.5 * (i as f64 + u) / pairs as f64);
        z.push(v);
        if z.len() < n {
            z.push(-v);
        }
    }
    z
}

/// `mean(max(0, incumbent - (mean + sd·z)))` over the given normal draws.
pub fn mc_ei_gaussian(mean: f64, sd: f64, incumbent: f64, normals: &[f64]) -> f64 {
    let total: f64 = normals
        .iter()
        .map(|z| (incumbent - (mean + sd * z)).max(0.0))
        .sum();
    total / normals.len() as f64
}

/// Monte Carlo EI at one unit-cube point (including any appended context
/// coordinates the model expects).
pub fn mc_ei<R: Rng + ?Sized>(
    model: &GpModel,
    point: &[f64],
    state: &AcquisitionState,
    rng: &mut R,
) -> f64 {
    let (m, v) = model.predict(&[point.to_vec()]);
    let normals = antithetic_normals(state.config.mc_samples, rng);
    mc_ei_gaussian(m[0], v[0].sqrt(), state.incumbent, &normals)
}

/// Maximizes MC-EI over `space` and returns the decoded best point.
pub fn propose<R: Rng + ?Sized>(
    model: &GpModel,
    space: &SearchSpace,
    state: &AcquisitionState,
    rng: &mut R,
) -> Configuration {
    propose_with_context(model, space, state, &[], rng)
}

/// As [`propose`], but every model input is the hyperparameter point followed
/// by the fixed `context` coordinates.
pub fn propose_with_context<R: Rng + ?Sized>(
    model: &GpModel,
    space: &SearchSpace,
    state: &AcquisitionState,
    context: &[f64],
    rng: &mut R,
) -> Configuration {
    let cfg = &state.config;
    // common random numbers across all candidates
    let normals = antithetic_normals(cfg.mc_samples, rng);
    let with_context = |p: &[f64]| {
        let mut v = p.to_vec();
        v.extend_from_slice(context);
        v
    };
    let ei_batch = |pts: &[Vec<f64>]| -> Vec<f64> {
        let inputs: Vec<Vec<f64>> = pts.iter().map(|p| with_context(p)).collect();
        let (means, vars) = model.predict(&inputs);
        means
            .iter()
            .zip(&vars)
            .map(|(m, v)| mc_ei_gaussian(*m, v.sqrt(), state.incumbent, &normals))
            .collect()
    };

    let candidates: Vec<Vec<f64>> = (0..cfg.candidate_pool_size.max(1))
        .map(|_| space.snap(&space.sample_unit(rng)))
        .collect();
    let scores = ei_batch(&candidates);
    let (best_idx, best_ei) = scores
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    if best_ei <= 0.0 {
        return space.sample_uniform(rng);
    }

    let mut x = candidates[best_idx].clone();
    let mut fx = best_ei;
    let mut step = cfg.local_search_step;
    for _ in 0..cfg.local_search_steps {
        let mut improved = false;
        'dims: for j in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[j] = (y[j] + sign * step).clamp(0.0, 1.0);
                let y = space.snap(&y);
                if y == x {
                    continue;
                }
                let fy = ei_batch(std::slice::from_ref(&y))[0];
                if fy > fx {
                    x = y;
                    fx = fy;
                    improved = true;
                    break 'dims;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    space
        .decode(&x)
        .expect("local search keeps points inside the unit cube")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::space::Dimension;
    use crate::surrogate::FitOptions;

    #[test]
    fn deterministic_improvement() {
        let z = antithetic_normals(64, &mut seeded(1));
        assert_eq!(mc_ei_gaussian(3.0, 0.0, 5.0, &z), 2.0);
    }

    #[test]
    fn no_improvement_mass() {
        let z = antithetic_normals(256, &mut seeded(2));
        assert!(mc_ei_gaussian(11.0, 1.0, 0.0, &z) < 1e-6);
    }

    #[test]
    fn antithetic_pairs() {
        let z = antithetic_normals(7, &mut seeded(3));
        assert_eq!(z.len(), 7);
        assert_eq!(z[0], -z[1]);
        assert_eq!(z[4], -z[5]);
        let phi = Normal::standard();
        for (i, v) in z.iter().step_by(2).enumerate() {
            let u = (phi.cdf(*v) - 0.5) * 8.0;
            assert!(u >= i as f64 - 1e-12 && u <= i as f64 + 1.0 + 1e-12, "pair {i}: {u}");
        }
    }

    #[test]
    fn monotone_in_sigma_with_common_numbers() {
        let z = antithetic_normals(256, &mut seeded(4));
        let mut prev = 0.0;
        for k in 0..50 {
            let sd = k as f64 * 0.1;
            let ei = mc_ei_gaussian(-0.3, sd, 0.0, &z);
            assert!(ei >= prev - 1e-12, "sd {sd}: {ei} < {prev}");
            assert!(ei >= 0.0);
            prev = ei;
        }
    }

    fn quadratic_model(seed: u64) -> (GpModel, SearchSpace, f64) {
        let space = SearchSpace::new(vec![Dimension::continuous("x", 0.0, 1.0).unwrap()]).unwrap();
        let mut rng = seeded(seed);
        let xs: Vec<Vec<f64>> = (0..8).map(|_| vec![rng.random::<f64>()]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x[0] - 0.3).powi(2)).collect();
        let inc = ys.iter().cloned().fold(f64::INFINITY, f64::min);
        let m = GpModel::fit(&xs, &ys, &FitOptions::default(), &mut rng).unwrap();
        (m, space, inc)
    }

    #[test]
    fn propose_is_deterministic_and_in_bounds() {
        let (m, space, inc) = quadratic_model(5);
        let st = AcquisitionState::new(inc, AcquisitionConfig::default());
        let a = propose(&m, &space, &st, &mut seeded(9));
        let b = propose(&m, &space, &st, &mut seeded(9));
        assert_eq!(a, b);
        assert!(space.contains(&a));
    }

    #[test]
    fn zero_ei_falls_back_to_uniform() {
        let space = SearchSpace::new(vec![Dimension::continuous("x", 0.0, 1.0).unwrap()]).unwrap();
        let xs = vec![vec![0.2], vec![0.8]];
        let m = GpModel::fit(&xs, &[1.0, 1.0], &FitOptions::default(), &mut seeded(0)).unwrap();
        let st = AcquisitionState::new(1.0, AcquisitionConfig::default());
        let got = propose(&m, &space, &st, &mut seeded(3));
        // replay the RNG consumption of propose up to the fallback draw
        let mut rng = seeded(3);
        let cfg = AcquisitionConfig::default();
        let _ = antithetic_normals(cfg.mc_samples, &mut rng);
        for _ in 0..cfg.candidate_pool_size {
            let _ = space.sample_unit(&mut rng);
        }
        assert_eq!(got, space.sample_uniform(&mut rng));
    }
}
