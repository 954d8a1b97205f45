//! Pricing under multinomial-logit demand with drifting item utilities.
//!
//! Each period, every customer sees one option per item category with
//! utility `u_c - sensitivity * price_c + gumbel` and an outside option with
//! utility `0 + gumbel`, and takes the best. Profit is the margin
//! `price_c - cost_c` summed over purchases. Tasks differ by the utility
//! vector, which follows a Gaussian random walk from task to task.

use std::sync::Arc;

use rand::SeedableRng;
use rand_distr::{Distribution, Gumbel, Normal};
use serde::{Deserialize, Serialize};

use super::{Benchmark, ContextKind, Direction, TaskContext, TaskObjective};
use crate::rng::{mix, SeededRng, Stream};
use crate::space::{Configuration, Dimension, SearchSpace};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewsVendorParams {
    pub initial_utilities: Vec<f64>,
    pub price_sensitivity: f64,
    pub unit_costs: Vec<f64>,
    pub customers_per_period: usize,
    pub rw_sigma: f64,
    pub max_price: u32,
}

impl Default for NewsVendorParams {
    fn default() -> Self {
        Self {
            initial_utilities: vec![10.0, 12.0, 8.0],
            price_sensitivity: 1.0,
            unit_costs: vec![2.0, 3.0, 1.0],
            customers_per_period: 200,
            rw_sigma: 1.5,
            max_price: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewsVendorState {
    pub utilities: Vec<f64>,
    pub price_sensitivity: f64,
    pub customers_per_period: usize,
    pub unit_cost: Vec<f64>,
    pub rw_sigma: f64,
    pub max_price: f64,
}

impl NewsVendorState {
    fn check_prices(&self, prices: &Configuration) -> Result<()> {
        if prices.len() != self.utilities.len() {
            return Err(Error::Validation(format!(
                "expected {} prices, got {}",
                self.utilities.len(),
                prices.len()
            )));
        }
        for (c, &p) in prices.values().iter().enumerate() {
            if !(0.0..=self.max_price).contains(&p) || p.fract() != 0.0 {
                return Err(Error::Dimension {
                    dimension: format!("price_{}", c + 1),
                    reason: format!("{p} is not an integer in [0, {}]", self.max_price),
                });
            }
        }
        Ok(())
    }

    fn option_utilities(&self, prices: &Configuration) -> Vec<f64> {
        self.utilities
            .iter()
            .zip(prices.values())
            .map(|(u, p)| u - self.price_sensitivity * p)
            .collect()
    }

    /// Simulated profit of one period.
    pub fn profit(&self, prices: &Configuration, noise: &mut SeededRng) -> Result<f64> {
        self.check_prices(prices)?;
        let gumbel = Gumbel::new(0.0, 1.0).expect("unit Gumbel");
        let utilities = self.option_utilities(prices);
        let margins: Vec<f64> = prices
            .values()
            .iter()
            .zip(&self.unit_cost)
            .map(|(p, c)| p - c)
            .collect();
        let mut profit = 0.0;
        for _ in 0..self.customers_per_period {
            let mut best = gumbel.sample(noise);
            let mut choice = None;
            for (c, u) in utilities.iter().enumerate() {
                let v = u + gumbel.sample(noise);
                if v > best {
                    best = v;
                    choice = Some(c);
                }
            }
            if let Some(c) = choice {
                profit += margins[c];
            }
        }
        Ok(profit)
    }

    /// Expected profit of one period under the logit choice probabilities.
    pub fn expected_profit(&self, prices: &Configuration) -> Result<f64> {
        self.check_prices(prices)?;
        let v = self.option_utilities(prices);
        let vmax = v.iter().cloned().fold(0.0f64, f64::max);
        let denom = (-vmax).exp() + v.iter().map(|x| (x - vmax).exp()).sum::<f64>();
        let per_customer: f64 = v
            .iter()
            .zip(prices.values().iter().zip(&self.unit_cost))
            .map(|(x, (p, c))| (p - c) * (x - vmax).exp() / denom)
            .sum();
        Ok(self.customers_per_period as f64 * per_customer)
    }
}

#[derive(Debug, Clone)]
pub struct NewsVendor {
    pub states: Vec<NewsVendorState>,
}

impl TaskObjective for NewsVendor {
    fn evaluate(&self, task: usize, config: &Configuration, noise: &mut SeededRng) -> Result<f64> {
        self.states[task - 1].profit(config, noise)
    }
}

impl NewsVendor {
    pub fn new(seed: u64, n_tasks: usize, params: &NewsVendorParams) -> Result<Self> {
        let k = params.initial_utilities.len();
        if k == 0 || params.unit_costs.len() != k {
            return Err(Error::Config(
                "newsvendor needs one unit cost per utility".into(),
            ));
        }
        if n_tasks == 0 || params.customers_per_period == 0 {
            return Err(Error::Config(
                "newsvendor needs n_tasks >= 1 and customers_per_period >= 1".into(),
            ));
        }
        if !(params.price_sensitivity > 0.0) || !(params.rw_sigma >= 0.0) || params.max_price == 0 {
            return Err(Error::Config(
                "newsvendor needs price_sensitivity > 0, rw_sigma >= 0, max_price >= 1".into(),
            ));
        }
        if params.unit_costs.iter().any(|c| *c < 0.0) {
            return Err(Error::Config("unit costs must be nonnegative".into()));
        }
        let mut rng = SeededRng::seed_from_u64(mix(&[seed, Stream::Benchmark as u64]));
        let step = Normal::new(0.0, params.rw_sigma)
            .map_err(|e| Error::Config(format!("rw_sigma: {e}")))?;
        let mut utilities = params.initial_utilities.clone();
        let mut states = Vec::with_capacity(n_tasks);
        for t in 0..n_tasks {
            if t > 0 && params.rw_sigma > 0.0 {
                utilities.iter_mut().for_each(|u| *u += step.sample(&mut rng));
            }
            states.push(NewsVendorState {
                utilities: utilities.clone(),
                price_sensitivity: params.price_sensitivity,
                customers_per_period: params.customers_per_period,
                unit_cost: params.unit_costs.clone(),
                rw_sigma: params.rw_sigma,
                max_price: params.max_price as f64,
            });
        }
        Ok(Self { states })
    }
}

pub fn newsvendor_sequence(seed: u64, n_tasks: usize, params: NewsVendorParams) -> Result<Benchmark> {
    let nv = NewsVendor::new(seed, n_tasks, &params)?;
    let dims = (1..=params.initial_utilities.len())
        .map(|c| Dimension::integer(format!("price_{c}"), 0.0, params.max_price as f64))
        .collect::<Result<Vec<_>>>()?;
    let tasks = (1..=n_tasks)
        .map(|i| TaskContext {
            index: i,
            feature: i as f64,
        })
        .collect();
    Benchmark::new(
        "newsvendor",
        SearchSpace::new(dims)?,
        tasks,
        Direction::Maximize,
        ContextKind::Index,
        Arc::new(nv),
    )
}
