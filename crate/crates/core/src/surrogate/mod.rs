//! Gaussian-process surrogate shared by BO, TransferBO and CTS.

mod gp;
mod kernel;
mod optimize;
mod warp;

pub use gp::{
    log_marginal_likelihood, log_marginal_likelihood_grad, FitOptions, GpModel, Hyperparameters,
    JITTER_MAX, JITTER_START,
};
pub use kernel::{matern52, KernelParams};
pub use optimize::{minimize_box, MinimizeOptions, Minimum};
pub use warp::{kumaraswamy, warp, WarpParams};
