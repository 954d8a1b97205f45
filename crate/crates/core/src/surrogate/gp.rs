//! Exact GP regression on unit-cube inputs.
//!
//! Targets are standardized to zero mean and unit variance before fitting;
//! the prior mean is zero in standardized space. Hyperparameters are fitted
//! by maximizing the log marginal likelihood plus a log-normal prior on the
//! warping parameters, over log-parameters, with random restarts.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::kernel::KernelParams;
use super::optimize::{minimize_box, MinimizeOptions};
use super::warp::{kumaraswamy, kumaraswamy_log_grad, WarpParams};
use crate::{Error, Result};

pub const JITTER_START: f64 = 1e-8;
pub const JITTER_MAX: f64 = 1e-4;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const DEGENERATE_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    pub kernel: KernelParams,
    pub warp: WarpParams,
}

impl Hyperparameters {
    /// Lengthscales 0.25, signal 1, noise 1e-3, identity warp.
    pub fn initial(dim: usize) -> Self {
        Self {
            kernel: KernelParams {
                signal_variance: 1.0,
                lengthscales: vec![0.25; dim],
                noise_variance: 1e-3,
            },
            warp: WarpParams::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    /// Layout: `[log signal, log lengthscales.., log noise, log a.., log b..]`.
    pub fn to_log_vec(&self) -> Vec<f64> {
        let k = &self.kernel;
        std::iter::once(k.signal_variance.ln())
            .chain(k.lengthscales.iter().map(|l| l.ln()))
            .chain(std::iter::once(k.noise_variance.ln()))
            .chain(self.warp.a.iter().map(|v| v.ln()))
            .chain(self.warp.b.iter().map(|v| v.ln()))
            .collect()
    }

    pub fn from_log_vec(v: &[f64], dim: usize) -> Self {
        assert_eq!(v.len(), 3 * dim + 2, "log-parameter vector length");
        let exp = |s: &[f64]| s.iter().map(|x| x.exp()).collect::<Vec<_>>();
        Self {
            kernel: KernelParams {
                signal_variance: v[0].exp(),
                lengthscales: exp(&v[1..=dim]),
                noise_variance: v[dim + 1].exp(),
            },
            warp: WarpParams {
                a: exp(&v[dim + 2..2 * dim + 2]),
                b: exp(&v[2 * dim + 2..]),
            },
        }
    }

    fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if self.warp.dim() != self.kernel.dim() {
            return Err(Error::Validation(
                "warp and kernel dimensionality differ".into(),
            ));
        }
        WarpParams::new(self.warp.a.clone(), self.warp.b.clone()).map(|_| ())
    }
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stddev of the zero-mean normal prior on `log a` and `log b`.
    pub warp_prior_std: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            max_iter: 100,
            warp_prior_std: 0.75,
        }
    }
}

/// Flat row-major n×d matrix of warped inputs.
struct Warped {
    data: Vec<f64>,
    dim: usize,
}

impl Warped {
    fn new(inputs: &[Vec<f64>], warp: &WarpParams) -> Self {
        let dim = warp.dim();
        let mut data = Vec::with_capacity(inputs.len() * dim);
        for x in inputs {
            for j in 0..dim {
                data.push(kumaraswamy(x[j], warp.a[j], warp.b[j]));
            }
        }
        Self { data, dim }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn len(&self) -> usize {
        self.data.len() / self.dim
    }
}

fn kernel_matrix(w: &Warped, kernel: &KernelParams) -> DMatrix<f64> {
    let n = w.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = kernel.signal_variance;
        for j in 0..i {
            let v = kernel.value_at(kernel.scaled_distance(w.row(i), w.row(j)));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Cholesky of `matrix`, adding diagonal jitter 1e-8, 1e-7, … 1e-4 on failure.
fn cholesky_with_jitter(matrix: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    if let Some(c) = Cholesky::new(matrix.clone()) {
        return Ok((c, 0.0));
    }
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX * (1.0 + 1e-9) {
        let mut m = matrix.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(m) {
            return Ok((c, jitter));
        }
        jitter *= 10.0;
    }
    Err(Error::Numeric(format!(
        "Cholesky failed with jitter up to {JITTER_MAX:e}"
    )))
}

struct Conditioned {
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    k_f: DMatrix<f64>,
    jitter: f64,
    lml: f64,
}

fn condition(w: &Warped, y: &DVector<f64>, kernel: &KernelParams) -> Result<Conditioned> {
    let k_f = kernel_matrix(w, kernel);
    let mut k = k_f.clone();
    for i in 0..k.nrows() {
        k[(i, i)] += kernel.noise_variance;
    }
    let (chol, jitter) = cholesky_with_jitter(&k)?;
    let alpha = chol.solve(y);
    let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
    let n = y.len() as f64;
    let lml = -0.5 * y.dot(&alpha) - log_det_half - 0.5 * n * LN_2PI;
    if !lml.is_finite() {
        return Err(Error::Numeric("non-finite log marginal likelihood".into()));
    }
    Ok(Conditioned {
        chol,
        alpha,
        k_f,
        jitter,
        lml,
    })
}

fn check_inputs(inputs: &[Vec<f64>], targets: &[f64], dim: usize) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::Validation("GP needs at least one observation".into()));
    }
    if inputs.len() != targets.len() {
        return Err(Error::Validation(format!(
            "{} inputs but {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    if let Some(x) = inputs.iter().find(|x| x.len() != dim) {
        return Err(Error::Validation(format!(
            "input of dimension {} but model dimension {dim}",
            x.len()
        )));
    }
    if !targets.iter().all(|t| t.is_finite()) {
        return Err(Error::Validation("non-finite GP target".into()));
    }
    Ok(())
}

/// Log marginal likelihood of `targets` (used as given, no standardization).
pub fn log_marginal_likelihood(
    inputs: &[Vec<f64>],
    targets: &[f64],
    hyper: &Hyperparameters,
) -> Result<f64> {
    hyper.validate()?;
    check_inputs(inputs, targets, hyper.dim())?;
    let w = Warped::new(inputs, &hyper.warp);
    let y = DVector::from_column_slice(targets);
    Ok(condition(&w, &y, &hyper.kernel)?.lml)
}

/// Log marginal likelihood and its analytic gradient w.r.t. the
/// log-parameters in [`Hyperparameters::to_log_vec`] order.
pub fn log_marginal_likelihood_grad(
    inputs: &[Vec<f64>],
    targets: &[f64],
    hyper: &Hyperparameters,
) -> Result<(f64, Vec<f64>)> {
    hyper.validate()?;
    check_inputs(inputs, targets, hyper.dim())?;
    let w = Warped::new(inputs, &hyper.warp);
    let y = DVector::from_column_slice(targets);
    let c = condition(&w, &y, &hyper.kernel)?;
    Ok((c.lml, lml_gradient(inputs, &w, hyper, &c)))
}

/// Lower triangle (and diagonal) of `(L Lᵀ)⁻¹` from the lower factor `L`;
/// the strict upper triangle is left zero. Only `wm[(i, k)]` with `k <= i`
/// is read by [`lml_gradient`].
fn spd_inverse_lower(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    // columns of L⁻¹ by forward substitution, skipping the known zeros
    let mut linv = DMatrix::<f64>::zeros(n, n);
    let ls = l.as_slice();
    for j in 0..n {
        let x = &mut linv.as_mut_slice()[j * n..(j + 1) * n];
        x[j] = 1.0;
        for m in j..n {
            let col = &ls[m * n..(m + 1) * n];
            x[m] /= col[m];
            let xm = x[m];
            for i in m + 1..n {
                x[i] -= col[i] * xm;
            }
        }
    }
    // K⁻¹[i, k] = Σ_{m ≥ i} L⁻¹[m, i] L⁻¹[m, k] for k ≤ i
    let mut out = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let ck = linv.column(k);
        for i in k..n {
            let ci = linv.column(i);
            out[(i, k)] = ci.rows_range(i..n).dot(&ck.rows_range(i..n));
        }
    }
    out
}

fn lml_gradient(inputs: &[Vec<f64>], w: &Warped, hyper: &Hyperparameters, c: &Conditioned) -> Vec<f64> {
    let n = w.len();
    let d = w.dim;
    let kernel = &hyper.kernel;
    // W = α αᵀ − K⁻¹; dL/dθ = ½ tr(W dK/dθ)
    let mut wm = spd_inverse_lower(c.chol.l_dirty());
    wm.iter_mut().for_each(|v| *v = -*v);
    wm.ger(1.0, &c.alpha, &c.alpha, 1.0);

    // warp derivatives per point and dimension
    let mut wa = vec![0.0; n * d];
    let mut wb = vec![0.0; n * d];
    for (i, x) in inputs.iter().enumerate() {
        for j in 0..d {
            let (ga, gb) = kumaraswamy_log_grad(x[j], hyper.warp.a[j], hyper.warp.b[j]);
            wa[i * d + j] = ga;
            wb[i * d + j] = gb;
        }
    }

    let inv_l2: Vec<f64> = kernel.lengthscales.iter().map(|l| 1.0 / (l * l)).collect();
    let mut grad = vec![0.0; 3 * d + 2];
    let mut trace_w = 0.0;
    for i in 0..n {
        let wii = wm[(i, i)];
        trace_w += wii;
        grad[0] += 0.5 * wii * c.k_f[(i, i)];
        let xi = w.row(i);
        for k in 0..i {
            // off-diagonal pairs appear twice in the trace
            let wik = wm[(i, k)];
            grad[0] += wik * c.k_f[(i, k)];
            let xk = w.row(k);
            let r = kernel.scaled_distance(xi, xk);
            let g = kernel.radial_factor(r);
            for j in 0..d {
                let delta = xi[j] - xk[j];
                grad[1 + j] += wik * g * delta * delta * inv_l2[j];
                let dk_du = -g * delta * inv_l2[j];
                grad[d + 2 + j] += wik * dk_du * (wa[i * d + j] - wa[k * d + j]);
                grad[2 * d + 2 + j] += wik * dk_du * (wb[i * d + j] - wb[k * d + j]);
            }
        }
    }
    grad[d + 1] = 0.5 * kernel.noise_variance * trace_w;
    grad
}

/// Log-space bounds for fitted hyperparameters (standardized targets).
fn log_bounds(dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![1e-3f64.ln()];
    let mut hi = vec![1e3f64.ln()];
    lo.extend(std::iter::repeat_n(1e-2f64.ln(), dim));
    hi.extend(std::iter::repeat_n(1e2f64.ln(), dim));
    lo.push(1e-6f64.ln());
    hi.push(10f64.ln());
    lo.extend(std::iter::repeat_n(0.1f64.ln(), 2 * dim));
    hi.extend(std::iter::repeat_n(10f64.ln(), 2 * dim));
    (lo, hi)
}

fn random_start<R: Rng + ?Sized>(dim: usize, prior_std: f64, rng: &mut R) -> Vec<f64> {
    let prior = Normal::new(0.0, prior_std).expect("positive prior std");
    let mut v = vec![rng.random_range(0.1f64.ln()..10f64.ln())];
    v.extend((0..dim).map(|_| rng.random_range(0.05f64.ln()..2f64.ln())));
    v.push(rng.random_range(1e-5f64.ln()..1e-1f64.ln()));
    v.extend((0..2 * dim).map(|_| prior.sample(rng)));
    v
}

#[derive(Debug, Clone)]
struct Posterior {
    train: Vec<Vec<f64>>,
    warped_train: Vec<f64>,
    l: DMatrix<f64>,
    alpha: DVector<f64>,
    jitter: f64,
}

/// A conditioned Gaussian-process posterior.
#[derive(Debug, Clone)]
pub struct GpModel {
    hyper: Hyperparameters,
    target_mean: f64,
    target_std: f64,
    /// Standardized targets.
    targets: Vec<f64>,
    /// `None` for constant targets: the posterior is the constant itself.
    posterior: Option<Posterior>,
    dim: usize,
    log_objective: f64,
}

fn standardize(targets: &[f64]) -> (f64, f64, bool) {
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let var = targets.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    if var < DEGENERATE_VARIANCE {
        (mean, 1.0, true)
    } else {
        (mean, var.sqrt(), false)
    }
}

impl GpModel {
    /// Conditions a GP with fixed hyperparameters (no fitting).
    pub fn with_hyperparameters(
        inputs: &[Vec<f64>],
        targets: &[f64],
        hyper: Hyperparameters,
    ) -> Result<Self> {
        hyper.validate()?;
        check_inputs(inputs, targets, hyper.dim())?;
        let (mean, std, degenerate) = standardize(targets);
        let dim = hyper.dim();
        let ys: Vec<f64> = targets.iter().map(|t| (t - mean) / std).collect();
        let mut model = Self {
            hyper,
            target_mean: mean,
            target_std: std,
            targets: ys,
            posterior: None,
            dim,
            log_objective: 0.0,
        };
        if !degenerate {
            model.condition(inputs)?;
        }
        Ok(model)
    }

    fn condition(&mut self, inputs: &[Vec<f64>]) -> Result<()> {
        let w = Warped::new(inputs, &self.hyper.warp);
        let y = DVector::from_column_slice(&self.targets);
        let c = condition(&w, &y, &self.hyper.kernel)?;
        self.log_objective = c.lml;
        self.posterior = Some(Posterior {
            train: inputs.to_vec(),
            warped_train: w.data,
            l: c.chol.l(),
            alpha: c.alpha,
            jitter: c.jitter,
        });
        Ok(())
    }

    /// Fits hyperparameters by MAP over log-parameters with `opts.restarts`
    /// starts (the first from [`Hyperparameters::initial`]).
    pub fn fit<R: Rng + ?Sized>(
        inputs: &[Vec<f64>],
        targets: &[f64],
        opts: &FitOptions,
        rng: &mut R,
    ) -> Result<Self> {
        Self::fit_from(inputs, targets, opts, None, rng)
    }

    /// As [`GpModel::fit`], with the first start at `start` (clamped to the
    /// fitting bounds) instead of the defaults.
    pub fn fit_from<R: Rng + ?Sized>(
        inputs: &[Vec<f64>],
        targets: &[f64],
        opts: &FitOptions,
        start: Option<&Hyperparameters>,
        rng: &mut R,
    ) -> Result<Self> {
        let dim = inputs
            .first()
            .map(|x| x.len())
            .ok_or_else(|| Error::Validation("GP needs at least one observation".into()))?;
        check_inputs(inputs, targets, dim)?;
        let (mean, std, degenerate) = standardize(targets);
        if degenerate {
            return Self::with_hyperparameters(inputs, targets, Hyperparameters::initial(dim));
        }
        let ys: Vec<f64> = targets.iter().map(|t| (t - mean) / std).collect();
        let (lo, hi) = log_bounds(dim);
        let prior_var = opts.warp_prior_std * opts.warp_prior_std;
        let warp_start = dim + 2;

        let objective = |theta: &[f64]| -> Option<(f64, Vec<f64>)> {
            let hyper = Hyperparameters::from_log_vec(theta, dim);
            let w = Warped::new(inputs, &hyper.warp);
            let y = DVector::from_column_slice(&ys);
            let c = condition(&w, &y, &hyper.kernel).ok()?;
            let mut grad = lml_gradient(inputs, &w, &hyper, &c);
            let mut value = c.lml;
            for (t, g) in theta[warp_start..].iter().zip(&mut grad[warp_start..]) {
                value -= 0.5 * t * t / prior_var;
                *g -= t / prior_var;
            }
            // minimize the negative
            Some((-value, grad.into_iter().map(|g| -g).collect()))
        };

        let mopts = MinimizeOptions {
            max_iter: opts.max_iter,
            ..Default::default()
        };
        let mut best: Option<(f64, Vec<f64>)> = None;
        let starts = opts.restarts.max(1);
        for r in 0..starts {
            let x0 = if r == 0 {
                match start {
                    Some(h) if h.dim() == dim => h.to_log_vec(),
                    _ => Hyperparameters::initial(dim).to_log_vec(),
                }
            } else {
                random_start(dim, opts.warp_prior_std, rng)
            };
            if let Some(m) = minimize_box(&objective, &x0, &lo, &hi, &mopts) {
                if best.as_ref().is_none_or(|(v, _)| m.value < *v) {
                    best = Some((m.value, m.x));
                }
            }
        }
        let (_, theta) = best.ok_or_else(|| {
            Error::Numeric("marginal likelihood could not be evaluated at any start".into())
        })?;
        Self::with_hyperparameters(inputs, targets, Hyperparameters::from_log_vec(&theta, dim))
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyper
    }

    pub fn target_mean(&self) -> f64 {
        self.target_mean
    }

    pub fn target_std(&self) -> f64 {
        self.target_std
    }

    pub fn input_dim(&self) -> usize {
        self.dim
    }

    /// True when targets were constant and no kernel posterior was formed.
    pub fn is_constant(&self) -> bool {
        self.posterior.is_none()
    }

    /// Lower Cholesky factor of `K + noise·I` (including any jitter).
    pub fn cholesky_factor(&self) -> Option<&DMatrix<f64>> {
        self.posterior.as_ref().map(|p| &p.l)
    }

    pub fn jitter(&self) -> f64 {
        self.posterior.as_ref().map_or(0.0, |p| p.jitter)
    }

    /// `K + noise·I` over the training inputs, in standardized units.
    pub fn train_covariance(&self) -> Option<DMatrix<f64>> {
        let p = self.posterior.as_ref()?;
        let w = Warped {
            data: p.warped_train.clone(),
            dim: self.dim,
        };
        let mut k = kernel_matrix(&w, &self.hyper.kernel);
        for i in 0..k.nrows() {
            k[(i, i)] += self.hyper.kernel.noise_variance;
        }
        Some(k)
    }

    /// Log marginal likelihood of the standardized targets at the current
    /// hyperparameters.
    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_objective
    }

    pub fn train_inputs(&self) -> Option<&[Vec<f64>]> {
        self.posterior.as_ref().map(|p| p.train.as_slice())
    }

    /// `K(train, points)` (n×p) and `L⁻¹ K(train, points)`.
    fn cross(&self, p: &Posterior, points: &Warped) -> DMatrix<f64> {
        let n = p.l.nrows();
        let k = &self.hyper.kernel;
        let train = Warped {
            data: p.warped_train.clone(),
            dim: self.dim,
        };
        let mut ks = DMatrix::zeros(n, points.len());
        for c in 0..points.len() {
            let x = points.row(c);
            for r in 0..n {
                ks[(r, c)] = k.value_at(k.scaled_distance(train.row(r), x));
            }
        }
        ks
    }

    /// Posterior mean and latent-function variance at each point, in native
    /// target units.
    pub fn predict(&self, points: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let Some(p) = &self.posterior else {
            return (vec![self.target_mean; points.len()], vec![0.0; points.len()]);
        };
        let w = Warped::new(points, &self.hyper.warp);
        let ks = self.cross(p, &w);
        let mean_std = ks.tr_mul(&p.alpha);
        let v = p
            .l
            .solve_lower_triangular(&ks)
            .expect("Cholesky factor has a positive diagonal");
        let s2 = self.target_std * self.target_std;
        let sig = self.hyper.kernel.signal_variance;
        let means = mean_std
            .iter()
            .map(|m| self.target_mean + self.target_std * m)
            .collect();
        let vars = v
            .column_iter()
            .map(|col| ((sig - col.norm_squared()) * s2).max(0.0))
            .collect();
        (means, vars)
    }

    /// Joint posterior covariance (native units) over `points`.
    pub fn posterior_covariance(&self, points: &[Vec<f64>]) -> DMatrix<f64> {
        let m = points.len();
        let Some(p) = &self.posterior else {
            return DMatrix::zeros(m, m);
        };
        let w = Warped::new(points, &self.hyper.warp);
        let mut kss = kernel_matrix(&w, &self.hyper.kernel);
        let ks = self.cross(p, &w);
        let v = p
            .l
            .solve_lower_triangular(&ks)
            .expect("Cholesky factor has a positive diagonal");
        kss -= v.tr_mul(&v);
        let s2 = self.target_std * self.target_std;
        kss.iter_mut().for_each(|c| *c *= s2);
        for i in 0..m {
            kss[(i, i)] = kss[(i, i)].max(0.0);
        }
        kss
    }

    /// `n_samples` joint draws of the latent function at `points`
    /// (one inner vector per draw).
    pub fn sample_posterior<R: Rng + ?Sized>(
        &self,
        points: &[Vec<f64>],
        n_samples: usize,
        rng: &mut R,
    ) -> Result<Vec<Vec<f64>>> {
        let (means, vars) = self.predict(points);
        if vars.iter().all(|&v| v <= 0.0) {
            return Ok(vec![means; n_samples]);
        }
        let s2 = self.target_std * self.target_std;
        // factor in standardized units so the jitter ladder is scale-free
        let mut cov = self.posterior_covariance(points);
        cov.iter_mut().for_each(|c| *c /= s2);
        let (chol, _) = cholesky_with_jitter(&cov)?;
        let l = chol.l();
        let m = points.len();
        let mut out = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            let z = DVector::from_iterator(m, (0..m).map(|_| StandardNormal.sample(rng)));
            let f = &l * z;
            out.push(
                means
                    .iter()
                    .zip(f.iter())
                    .map(|(mu, e)| mu + self.target_std * e)
                    .collect(),
            );
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn random_problem(rng: &mut impl Rng, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
            .collect();
        let y = x
            .iter()
            .map(|p| p.iter().map(|v| (6.0 * v).sin()).sum::<f64>() + 0.05 * rng.random::<f64>())
            .collect();
        (x, y)
    }

    fn random_hyper(rng: &mut impl Rng, d: usize) -> Hyperparameters {
        let v: Vec<f64> = (0..3 * d + 2).map(|_| rng.random_range(-1.0..0.5)).collect();
        Hyperparameters::from_log_vec(&v, d)
    }

    #[test]
    fn log_vec_roundtrip() {
        let h = random_hyper(&mut seeded(1), 3);
        let back = Hyperparameters::from_log_vec(&h.to_log_vec(), 3);
        for (a, b) in h.to_log_vec().iter().zip(back.to_log_vec()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = seeded(2);
        for _ in 0..10 {
            let (x, y) = random_problem(&mut rng, 10, 2);
            let h = random_hyper(&mut rng, 2);
            let (_, g) = log_marginal_likelihood_grad(&x, &y, &h).unwrap();
            let theta = h.to_log_vec();
            for k in 0..theta.len() {
                let eps = 1e-5;
                let mut tp = theta.clone();
                tp[k] += eps;
                let mut tm = theta.clone();
                tm[k] -= eps;
                let fp = log_marginal_likelihood(&x, &y, &Hyperparameters::from_log_vec(&tp, 2)).unwrap();
                let fm = log_marginal_likelihood(&x, &y, &Hyperparameters::from_log_vec(&tm, 2)).unwrap();
                let fd = (fp - fm) / (2.0 * eps);
                let rel = (g[k] - fd).abs() / fd.abs().max(1e-2);
                assert!(rel < 1e-4, "param {k}: analytic {} vs fd {fd}", g[k]);
            }
        }
    }

    #[test]
    fn unused_dimension_has_zero_lengthscale_gradient() {
        let mut rng = seeded(3);
        let (mut x, y) = random_problem(&mut rng, 10, 2);
        x.iter_mut().for_each(|p| p[1] = 0.4);
        let h = random_hyper(&mut rng, 2);
        let (_, g) = log_marginal_likelihood_grad(&x, &y, &h).unwrap();
        assert!(g[2].abs() < 1e-8, "{}", g[2]);
        // warp gradients of the constant dimension vanish too
        assert!(g[2 + 2 + 1].abs() < 1e-8 && g[2 + 4 + 1].abs() < 1e-8);
    }

    #[test]
    fn cholesky_reconstructs_covariance() {
        let mut rng = seeded(4);
        let (x, y) = random_problem(&mut rng, 15, 3);
        let m = GpModel::with_hyperparameters(&x, &y, random_hyper(&mut rng, 3)).unwrap();
        let l = m.cholesky_factor().unwrap();
        let k = m.train_covariance().unwrap();
        let diff = (l * l.transpose() - &k).norm() / k.norm();
        assert!(diff < 1e-8, "{diff}");
        // smallest eigenvalue bounded below by the noise
        let eig = k.symmetric_eigenvalues();
        let noise = m.hyperparameters().kernel.noise_variance;
        assert!(eig.min() >= noise - 1e-10);
    }

    #[test]
    fn single_observation_interpolates() {
        let m = GpModel::fit(&[vec![0.3, 0.6]], &[4.2], &FitOptions::default(), &mut seeded(5)).unwrap();
        let (mu, _) = m.predict(&[vec![0.3, 0.6]]);
        assert!((mu[0] - 4.2).abs() < 1e-6);
    }

    #[test]
    fn constant_targets_predict_constant() {
        let x = vec![vec![0.1], vec![0.5], vec![0.9]];
        let m = GpModel::fit(&x, &[2.0, 2.0, 2.0], &FitOptions::default(), &mut seeded(6)).unwrap();
        assert!(m.is_constant());
        let (mu, var) = m.predict(&[vec![0.0], vec![0.33], vec![1.0]]);
        assert!(mu.iter().all(|v| (v - 2.0).abs() < 1e-6));
        assert!(var.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn prediction_at_training_input_with_tiny_noise() {
        let x = vec![vec![0.1], vec![0.5], vec![0.9]];
        let y = [1.0, -2.0, 0.5];
        let h = Hyperparameters {
            kernel: KernelParams::new(1.0, vec![0.3], 1e-8).unwrap(),
            warp: WarpParams::identity(1),
        };
        let m = GpModel::with_hyperparameters(&x, &y, h).unwrap();
        let (mu, var) = m.predict(&x);
        for i in 0..3 {
            assert!((mu[i] - y[i]).abs() < 1e-5, "{} vs {}", mu[i], y[i]);
            assert!(var[i] <= 1e-6);
        }
    }

    #[test]
    fn far_from_data_reverts_to_prior() {
        let x = vec![vec![0.0], vec![0.05], vec![0.1]];
        let y = [1.0, 3.0, 2.0];
        let h = Hyperparameters {
            kernel: KernelParams::new(1.7, vec![0.01], 1e-4).unwrap(),
            warp: WarpParams::identity(1),
        };
        let m = GpModel::with_hyperparameters(&x, &y, h).unwrap();
        let (mu, var) = m.predict(&[vec![1.0]]);
        assert!((mu[0] - m.target_mean()).abs() < 1e-6);
        let prior = 1.7 * m.target_std().powi(2);
        assert!((var[0] - prior).abs() / prior < 0.01);
    }

    #[test]
    fn invariant_to_training_order() {
        let mut rng = seeded(7);
        let (x, y) = random_problem(&mut rng, 12, 2);
        let h = random_hyper(&mut rng, 2);
        let a = GpModel::with_hyperparameters(&x, &y, h.clone()).unwrap();
        let mut idx: Vec<usize> = (0..12).rev().collect();
        idx.swap(0, 5);
        let xr: Vec<_> = idx.iter().map(|&i| x[i].clone()).collect();
        let yr: Vec<_> = idx.iter().map(|&i| y[i]).collect();
        let b = GpModel::with_hyperparameters(&xr, &yr, h).unwrap();
        let q: Vec<Vec<f64>> = (0..7).map(|_| vec![rng.random(), rng.random()]).collect();
        let (ma, va) = a.predict(&q);
        let (mb, vb) = b.predict(&q);
        for i in 0..q.len() {
            assert!((ma[i] - mb[i]).abs() < 1e-8);
            assert!((va[i] - vb[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let (x, y) = random_problem(&mut seeded(8), 12, 2);
        let a = GpModel::fit(&x, &y, &FitOptions::default(), &mut seeded(9)).unwrap();
        let b = GpModel::fit(&x, &y, &FitOptions::default(), &mut seeded(9)).unwrap();
        assert_eq!(a.hyperparameters(), b.hyperparameters());
    }

    #[test]
    fn sampling_constant_model_returns_mean() {
        let x = vec![vec![0.2], vec![0.7]];
        let m = GpModel::fit(&x, &[1.5, 1.5], &FitOptions::default(), &mut seeded(10)).unwrap();
        let s = m.sample_posterior(&[vec![0.4], vec![0.9]], 5, &mut seeded(1)).unwrap();
        assert!(s.iter().all(|row| row == &vec![1.5, 1.5]));
    }
}
