//! Per-dimension Kumaraswamy-CDF input warping on the unit cube.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WarpParams {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl WarpParams {
    pub fn identity(dim: usize) -> Self {
        Self {
            a: vec![1.0; dim],
            b: vec![1.0; dim],
        }
    }

    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() || !a.iter().chain(&b).all(|&v| v.is_finite() && v > 0.0) {
            return Err(Error::Validation(format!(
                "warp parameters must be positive and of equal length: a={a:?} b={b:?}"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }
}

/// `1 - (1 - x^a)^b`, evaluated through `expm1`/`ln_1p` so it stays strictly
/// increasing where `x^a` is tiny.
#[inline]
pub fn kumaraswamy(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    -(b * (-x.powf(a)).ln_1p()).exp_m1()
}

/// Derivatives of the warp w.r.t. `log a` and `log b`.
#[inline]
pub(crate) fn kumaraswamy_log_grad(x: f64, a: f64, b: f64) -> (f64, f64) {
    if x <= 0.0 || x >= 1.0 {
        return (0.0, 0.0);
    }
    let xa = x.powf(a);
    let one_minus = 1.0 - xa;
    if one_minus <= 0.0 {
        return (0.0, 0.0);
    }
    let d_log_a = a * b * one_minus.powf(b - 1.0) * xa * x.ln();
    let log_one_minus = (-xa).ln_1p();
    let d_log_b = -b * (b * log_one_minus).exp() * log_one_minus;
    (d_log_a, d_log_b)
}

pub fn warp(point: &[f64], params: &WarpParams) -> Vec<f64> {
    point
        .iter()
        .zip(params.a.iter().zip(&params.b))
        .map(|(&x, (&a, &b))| kumaraswamy(x, a, b))
        .collect()
}
