//! Blind estimation of the correction filter from the LR image alone.
//!
//! The downscaling kernel is parameterized as a chain of four linearly
//! convolved factors and fitted by Adam to
//!
//! ```text
//! huber(y - S*_k f(H_k y)) + lambda_cen * |m_cen . k|_1 + lambda_sparse * |k|_1
//! ```
//!
//! where `H_k` is the regularized correction filter for `k` and `f` is the
//! built-in pseudo-inverse resolver. Gradients flow through both `H_k` and
//! `S*_k` (see [`objective`]).

mod adam;
mod objective;

pub use adam::{adam_step, adam_update};
pub use objective::{gradient, objective, Evaluation, GradientPaths, LossBreakdown, Problem};

use std::io::Write;

use ndarray::Array2;
use serde::Serialize;

use crate::correction::{bicubic_kernel, CorrectionFilter, DEFAULT_EPSILON};
use crate::error::{Error, Result};
use crate::image::{to_luma, Image};
use crate::spectral::{linear_convolve, Grid, Kernel};

/// Factor sizes; the composed kernel spans `33 + 33 + 33 + 32 - 3 = 128` taps.
pub const FACTOR_SIZES: [usize; 4] = [33, 33, 33, 32];

/// Optimizer and loss settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Hyper {
    /// Adam step size (gamma).
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub iterations: usize,
    pub huber_delta: f64,
    pub lambda_cen: f64,
    pub lambda_sparse: f64,
    /// Regularizer of the correction filter built at every iteration.
    pub filter_eps: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            iterations: 250,
            huber_delta: 1.0,
            lambda_cen: 1.0,
            lambda_sparse: 1.0,
            filter_eps: DEFAULT_EPSILON,
        }
    }
}

/// Kernel factors plus Adam moments.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimationState {
    pub factors: [Kernel; 4],
    pub adam_m: [Grid; 4],
    pub adam_v: [Grid; 4],
    pub iteration: usize,
    pub hyper: Hyper,
}

impl EstimationState {
    pub fn from_factors(factors: [Kernel; 4], hyper: Hyper) -> Self {
        let zeros = |i: usize| Array2::zeros(factors[i].dim());
        let adam_m = [zeros(0), zeros(1), zeros(2), zeros(3)];
        let adam_v = adam_m.clone();
        EstimationState {
            factors,
            adam_m,
            adam_v,
            iteration: 0,
            hyper,
        }
    }

    /// Standard initialization: three centered deltas and the bicubic kernel
    /// zero-padded into the last factor, so the composition is exactly
    /// `k_bicub` at iteration 0.
    pub fn bicubic_init(scale: usize, hyper: Hyper) -> Result<Self> {
        Self::bicubic_init_with_sizes(scale, FACTOR_SIZES, hyper)
    }

    pub fn bicubic_init_with_sizes(scale: usize, sizes: [usize; 4], hyper: Hyper) -> Result<Self> {
        let delta = |n: usize| -> Result<Kernel> {
            let c = n / 2;
            Kernel::delta().embed((n, n), (c, c))
        };
        let n3 = sizes[3];
        let last = bicubic_kernel(scale)?.embed((n3, n3), (n3 / 2, n3 / 2))?;
        Ok(Self::from_factors(
            [delta(sizes[0])?, delta(sizes[1])?, delta(sizes[2])?, last],
            hyper,
        ))
    }

    pub fn composed(&self) -> Kernel {
        compose_kernel(&self.factors)
    }
}

/// `k0 * k1 * k2 * k3`; the center is the sum of the factor centers.
pub fn compose_kernel(factors: &[Kernel; 4]) -> Kernel {
    let a = linear_convolve(&factors[0], &factors[1]);
    let b = linear_convolve(&a, &factors[2]);
    linear_convolve(&b, &factors[3])
}

/// Radial weight `1 - exp(-(x^2 + y^2) / (32 scale^2))` with `(x, y)` the
/// tap offset from the kernel center.
#[derive(Clone, Debug, PartialEq)]
pub struct CentralityMask {
    pub values: Grid,
}

pub fn centrality_mask(dims: (usize, usize), center: (usize, usize), scale: usize) -> CentralityMask {
    let denom = 32.0 * (scale * scale) as f64;
    let values = Array2::from_shape_fn(dims, |(i, j)| {
        let dy = i as f64 - center.0 as f64;
        let dx = j as f64 - center.1 as f64;
        1.0 - (-(dx * dx + dy * dy) / denom).exp()
    });
    CentralityMask { values }
}

/// Mean Huber penalty: `r^2/2` inside `|r| <= delta`, `delta (|r| - delta/2)` outside.
pub fn huber(residual: &Grid, delta: f64) -> f64 {
    residual.iter().map(|&r| huber_value(r, delta)).sum::<f64>() / residual.len() as f64
}

pub(crate) fn huber_value(r: f64, delta: f64) -> f64 {
    let a = r.abs();
    if a <= delta {
        0.5 * r * r
    } else {
        delta * (a - 0.5 * delta)
    }
}

pub(crate) fn huber_derivative(r: f64, delta: f64) -> f64 {
    r.clamp(-delta, delta)
}

/// Result of [`estimate_correction`].
#[derive(Clone, Debug)]
pub struct Estimate {
    /// Composed kernel after the final Adam update.
    pub kernel: Kernel,
    /// Filter of the last iteration (built from the kernel before the final update).
    pub filter: CorrectionFilter,
    pub trace: Vec<LossBreakdown>,
    pub hyper: Hyper,
    pub scale: usize,
}

impl Estimate {
    /// Unit-sum copy of the estimated kernel.
    pub fn normalized_kernel(&self) -> Result<Kernel> {
        self.kernel.normalized()
    }

    /// Per-iteration report: a commented header followed by
    /// `iter loss fidelity l1_cen l1_sparse` rows.
    pub fn write_report<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let h = &self.hyper;
        writeln!(
            out,
            "# scale={} eps={:e} lr={:e} iters={} beta1={} beta2={} adam_eps={:e} huber_delta={} lambda_cen={} lambda_sparse={}",
            self.scale, h.filter_eps, h.lr, h.iterations, h.beta1, h.beta2, h.adam_eps, h.huber_delta, h.lambda_cen, h.lambda_sparse
        )?;
        writeln!(
            out,
            "# resolver inside the loop: built-in linear pseudo-inverse R(R*R)^-1, not a pretrained network"
        )?;
        writeln!(out, "# iter loss fidelity l1_cen l1_sparse")?;
        for t in &self.trace {
            writeln!(
                out,
                "{} {:.6e} {:.6e} {:.6e} {:.6e}",
                t.iteration, t.total, t.fidelity, t.l1_cen, t.l1_sparse
            )?;
        }
        Ok(())
    }
}

/// Runs the estimation loop on the luma of `y` starting from the bicubic
/// initialization.
pub fn estimate_correction(y: &Image, scale: usize, hyper: Hyper) -> Result<Estimate> {
    let state = EstimationState::bicubic_init(scale, hyper)?;
    estimate_from(y, scale, state)
}

pub fn estimate_from(y: &Image, scale: usize, mut state: EstimationState) -> Result<Estimate> {
    let luma = to_luma(y)?;
    let problem = Problem::new(luma.channel(0), scale, state.composed().dim())?;
    let mut trace = Vec::with_capacity(state.hyper.iterations);
    let mut filter = None;
    for _ in 0..state.hyper.iterations {
        let eval = problem.evaluate(&state, GradientPaths::ALL)?;
        let iteration = state.iteration + 1;
        if !eval.loss.total.is_finite() {
            return Err(Error::Diverged {
                iteration,
                what: format!("loss is {}", eval.loss.total),
            });
        }
        if eval.grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::Diverged {
                iteration,
                what: "non-finite gradient".into(),
            });
        }
        trace.push(LossBreakdown { iteration, ..eval.loss });
        filter = Some(eval.filter);
        adam_step(&mut state, &eval.grads);
    }
    let filter = match filter {
        Some(f) => f,
        None => problem.filter_for(&state.composed(), state.hyper.filter_eps)?,
    };
    Ok(Estimate {
        kernel: state.composed(),
        filter,
        trace,
        hyper: state.hyper,
        scale,
    })
}


#[cfg(test)]
mod huber_tests {
    use super::{huber_derivative, huber_value};

    #[test]
    fn derivative_matches_central_differences() {
        let h = 1e-6;
        for delta in [0.1, 1.0] {
            for r in [-2.0, -0.7, -0.05, 0.0, 0.03, 0.4, 3.0] {
                let numeric = (huber_value(r + h, delta) - huber_value(r - h, delta)) / (2.0 * h);
                assert!((numeric - huber_derivative(r, delta)).abs() < 1e-6);
            }
        }
    }
}
