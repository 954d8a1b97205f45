use crate::{Error, Result};

const SQRT5: f64 = 2.236_067_977_499_79;

/// Matérn 5/2 ARD kernel parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    pub signal_variance: f64,
    pub lengthscales: Vec<f64>,
    pub noise_variance: f64,
}

impl KernelParams {
    pub fn new(signal_variance: f64, lengthscales: Vec<f64>, noise_variance: f64) -> Result<Self> {
        let p = Self {
            signal_variance,
            lengthscales,
            noise_variance,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn isotropic(signal_variance: f64, lengthscale: f64, dim: usize, noise: f64) -> Result<Self> {
        Self::new(signal_variance, vec![lengthscale; dim], noise)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.signal_variance) || !ok(self.noise_variance) {
            return Err(Error::Validation(format!(
                "kernel variances must be positive (signal {}, noise {})",
                self.signal_variance, self.noise_variance
            )));
        }
        if self.lengthscales.is_empty() || !self.lengthscales.iter().all(|&l| ok(l)) {
            return Err(Error::Validation(format!(
                "lengthscales must be positive, got {:?}",
                self.lengthscales
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// ARD-scaled Euclidean distance.
    pub(crate) fn scaled_distance(&self, x1: &[f64], x2: &[f64]) -> f64 {
        x1.iter()
            .zip(x2)
            .zip(&self.lengthscales)
            .map(|((a, b), l)| {
                let d = (a - b) / l;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Kernel value as a function of scaled distance.
    #[inline]
    pub(crate) fn value_at(&self, r: f64) -> f64 {
        let sr = SQRT5 * r;
        self.signal_variance * (1.0 + sr + sr * sr / 3.0) * (-sr).exp()
    }

    /// `g(r)` with `dk/dr = -g(r) r`; finite at `r = 0`.
    #[inline]
    pub(crate) fn radial_factor(&self, r: f64) -> f64 {
        let sr = SQRT5 * r;
        self.signal_variance * (5.0 / 3.0) * (1.0 + sr) * (-sr).exp()
    }
}

/// Matérn 5/2 covariance between two (already warped) points.
pub fn matern52(x1: &[f64], x2: &[f64], params: &KernelParams) -> Result<f64> {
    params.validate()?;
    if x1.len() != x2.len() || x1.len() != params.dim() {
        return Err(Error::Validation(format!(
            "dimension mismatch: {} vs {} with {} lengthscales",
            x1.len(),
            x2.len(),
            params.dim()
        )));
    }
    Ok(params.value_at(params.scaled_distance(x1, x2)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_distance_is_signal() {
        let p = KernelParams::new(2.5, vec![0.3, 0.7], 1e-3).unwrap();
        assert_eq!(matern52(&[0.1, 0.2], &[0.1, 0.2], &p).unwrap(), 2.5);
    }

    #[test]
    fn unit_distance_closed_form() {
        let p = KernelParams::isotropic(1.0, 1.0, 1, 1e-3).unwrap();
        let s5 = 5f64.sqrt();
        let expected = (1.0 + s5 + 5.0 / 3.0) * (-s5).exp();
        let k = matern52(&[0.0], &[1.0], &p).unwrap();
        assert!((k - expected).abs() < 1e-15);
        assert!((k - 0.523_994).abs() < 1e-6, "{k}");
    }

    #[test]
    fn decays_monotonically() {
        let p = KernelParams::isotropic(1.0, 0.5, 1, 1e-3).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let k = matern52(&[0.0], &[i as f64 * 0.25], &p).unwrap();
            assert!(k < prev || (k == 0.0 && prev == 0.0));
            prev = k;
        }
        assert!(prev < 1e-40);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(KernelParams::new(0.0, vec![1.0], 1e-3).is_err());
        assert!(KernelParams::new(1.0, vec![-1.0], 1e-3).is_err());
        assert!(KernelParams::new(1.0, vec![1.0], 0.0).is_err());
        let p = KernelParams {
            signal_variance: -1.0,
            lengthscales: vec![1.0],
            noise_variance: 1.0,
        };
        assert!(matern52(&[0.0], &[0.0], &p).is_err());
    }
}
