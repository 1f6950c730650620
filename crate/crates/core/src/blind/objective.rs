//! Forward evaluation of the blind objective and its exact reverse pass.
//!
//! Per iteration, for the composed kernel `k` on an LR grid of `N` pixels:
//!
//! ```text
//! c      = periodize((k * flip(k_b)) downsampled)          LR grid, linear in k
//! Fd     = DFT(c)
//! Hs     = Fn conj(Fd) / (|Fd|^2 + eps)                    correction filter
//! P      = DFT(y) Hs / Fn                                  (R*R)^-1 of H y
//! w      = IDFT(P)
//! x_h    = upsample_bicubic(w)                             HR estimate f(H y)
//! y_hat  = (x_h (*) k) downsampled                         S*_k
//! loss   = huber(y - y_hat) + l_cen |m k|_1 + l_sparse |k|_1
//! ```
//!
//! The backward pass runs the same chain in reverse. Complex quantities use
//! the gradient convention `G = dL/dRe + i dL/dIm`, under which
//! `x = Re IDFT(P)` pulls back as `G_P = DFT(g_x) / N` and a real grid
//! feeding `F = DFT(c)` receives `g_c = Re(N IDFT(G_F))`.

use ndarray::{s, Array2, Zip};
use num_complex::Complex64;
use serde::Serialize;

use super::{centrality_mask, compose_kernel, huber, huber_derivative, EstimationState, Hyper};
use crate::correction::{bicubic_kernel, cross_kernel_grid, CorrectionFilter, FilterVariant};
use crate::error::{Error, Result};
use crate::operators::{subsample_grid, zero_insert};
use crate::spectral::{center_shift, dft2_complex, idft2_complex, linear_convolve, Grid, Kernel, Spectrum};

type CGrid = Array2<Complex64>;

fn complex(g: &Grid) -> CGrid {
    g.mapv(|v| Complex64::new(v, 0.0))
}

fn real_part(c: CGrid) -> Grid {
    c.mapv(|z| z.re)
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Selects which `k`-dependences the gradient follows. Regularizer terms
/// are always included.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GradientPaths {
    /// Through the correction filter `H`.
    pub filter: bool,
    /// Through the re-downsampling `S*`.
    pub downsampler: bool,
}

impl GradientPaths {
    pub const ALL: GradientPaths = GradientPaths {
        filter: true,
        downsampler: true,
    };
}

/// Loss value and its parts. `l1_cen` and `l1_sparse` are unweighted norms;
/// `total` applies the lambda weights.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub iteration: usize,
    pub total: f64,
    pub fidelity: f64,
    pub l1_cen: f64,
    pub l1_sparse: f64,
    /// Tap sum of the composed kernel the loss was evaluated at.
    pub kernel_mass: f64,
}

/// Loss, factor gradients and the correction filter of one iteration.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub loss: LossBreakdown,
    pub grads: [Grid; 4],
    pub filter: CorrectionFilter,
}

struct Forward {
    fd: CGrid,
    hs: CGrid,
    xh_spec: CGrid,
    k_spec: CGrid,
    residual: Grid,
    mask: Grid,
    loss: LossBreakdown,
}

/// One LR image with everything that does not depend on `k` precomputed.
#[derive(Clone, Debug)]
pub struct Problem {
    y_spec: CGrid,
    y: Grid,
    scale: usize,
    bicubic: Kernel,
    numer: CGrid,
    gram_inv: CGrid,
    up_spec: CGrid,
}

impl Problem {
    /// `kernel_dims` is the composed kernel size, which must fit the HR grid.
    pub fn new(y: &Grid, scale: usize, kernel_dims: (usize, usize)) -> Result<Self> {
        if scale == 0 {
            return Err(Error::InvalidParameter("scale must be at least 1".into()));
        }
        let (h, w) = y.dim();
        let (hh, hw) = (h * scale, w * scale);
        if hh < kernel_dims.0 || hw < kernel_dims.1 {
            return Err(Error::ImageTooSmall {
                dims: (h, w),
                reason: format!(
                    "the {}x{} kernel needs an HR grid of at least that size (got {hh}x{hw})",
                    kernel_dims.0, kernel_dims.1
                ),
            });
        }
        let bicubic = bicubic_kernel(scale)?;
        let numer = dft2_complex(complex(&cross_kernel_grid(&bicubic, &bicubic, scale, (h, w))));
        if let Some(((u, v), z)) = numer.indexed_iter().find(|(_, z)| !(z.norm() > 0.0)) {
            return Err(Error::SingularDenominator {
                min_modulus: z.norm(),
                frequency: (u, v),
            });
        }
        let gram_inv = numer.mapv(|z| 1.0 / z);
        let up_spec = dft2_complex(complex(&center_shift(&bicubic.flip(), hh, hw)?));
        Ok(Problem {
            y_spec: dft2_complex(complex(y)),
            y: y.clone(),
            scale,
            bicubic,
            numer,
            gram_inv,
            up_spec,
        })
    }

    pub fn lr_dims(&self) -> (usize, usize) {
        self.y.dim()
    }

    pub fn hr_dims(&self) -> (usize, usize) {
        let (h, w) = self.y.dim();
        (h * self.scale, w * self.scale)
    }

    fn filter_spectrum(&self, fd: &CGrid, eps: f64) -> CGrid {
        Zip::from(&self.numer)
            .and(fd)
            .map_collect(|&n, &d| n * d.conj() / (d.norm_sqr() + eps))
    }

    /// Regularized correction filter for `k` on this LR grid.
    pub fn filter_for(&self, k: &Kernel, eps: f64) -> Result<CorrectionFilter> {
        let fd = dft2_complex(complex(&cross_kernel_grid(k, &self.bicubic, self.scale, self.lr_dims())));
        let hs = self.filter_spectrum(&fd, eps);
        Ok(CorrectionFilter::new(Spectrum::from_complex(&hs), eps, FilterVariant::RegularizedH))
    }

    fn forward(&self, k: &Kernel, hyper: &Hyper) -> Result<Forward> {
        let lr = self.lr_dims();
        let (hh, hw) = self.hr_dims();
        let fd = dft2_complex(complex(&cross_kernel_grid(k, &self.bicubic, self.scale, lr)));
        let hs = self.filter_spectrum(&fd, hyper.filter_eps);
        let p = &self.y_spec * &hs * &self.gram_inv;
        let w = real_part(idft2_complex(p));
        let xh_spec = dft2_complex(complex(&zero_insert(&w, self.scale, (0, 0)))) * &self.up_spec;
        let k_spec = dft2_complex(complex(&center_shift(k, hh, hw)?));
        let blurred = real_part(idft2_complex(&xh_spec * &k_spec));
        let y_hat = subsample_grid(&blurred, self.scale, (0, 0));
        let residual = &self.y - &y_hat;

        let mask = centrality_mask(k.dim(), k.center(), self.scale).values;
        let fidelity = huber(&residual, hyper.huber_delta);
        let l1_cen = Zip::from(&mask).and(k.taps()).fold(0.0, |acc, m, t| acc + (m * t).abs());
        let l1_sparse = k.taps().iter().map(|t| t.abs()).sum::<f64>();
        let total = fidelity + hyper.lambda_cen * l1_cen + hyper.lambda_sparse * l1_sparse;
        Ok(Forward {
            fd,
            hs,
            xh_spec,
            k_spec,
            residual,
            mask,
            loss: LossBreakdown {
                iteration: 0,
                total,
                fidelity,
                l1_cen,
                l1_sparse,
                kernel_mass: k.sum(),
            },
        })
    }

    /// Loss at the state's composed kernel.
    pub fn loss(&self, state: &EstimationState) -> Result<LossBreakdown> {
        Ok(self.forward(&state.composed(), &state.hyper)?.loss)
    }

    /// Loss and gradient with respect to the composed kernel taps.
    pub fn kernel_gradient(&self, k: &Kernel, hyper: &Hyper, paths: GradientPaths) -> Result<(LossBreakdown, Grid)> {
        let fwd = self.forward(k, hyper)?;
        let grad = self.backward(k, hyper, paths, &fwd);
        Ok((fwd.loss, grad))
    }

    fn backward(&self, k: &Kernel, hyper: &Hyper, paths: GradientPaths, fwd: &Forward) -> Grid {
        let (h, w) = self.lr_dims();
        let (hh, hw) = self.hr_dims();
        let n_lr = (h * w) as f64;
        let delta = hyper.huber_delta;

        // d loss / d y_hat
        let g_yhat = fwd.residual.mapv(|r| -huber_derivative(r, delta) / n_lr);
        let u_spec = dft2_complex(complex(&zero_insert(&g_yhat, self.scale, (0, 0))));
        let mut gk = Array2::zeros(k.dim());
        let (cy, cx) = (k.center().0 as isize, k.center().1 as isize);

        if paths.downsampler {
            // d/dk[d] of sum_i g[i] x_h[s i - d]: cyclic cross-correlation
            let corr = real_part(idft2_complex(Zip::from(&u_spec).and(&fwd.xh_spec).map_collect(|&u, &x| u * x.conj())));
            for ((a, b), g) in gk.indexed_iter_mut() {
                let i = (a as isize - cy).rem_euclid(hh as isize) as usize;
                let j = (b as isize - cx).rem_euclid(hw as isize) as usize;
                *g += corr[[i, j]];
            }
        }

        if paths.filter {
            // back through S*_k (adjoint: zero-insert then convolve with flip(k))
            let gxh_spec = Zip::from(&u_spec).and(&fwd.k_spec).map_collect(|&u, &kk| u * kk.conj());
            // back through the bicubic upsampler (adjoint: bicubic downsampling)
            let gw_full = real_part(idft2_complex(
                Zip::from(&gxh_spec).and(&self.up_spec).map_collect(|&g, &b| g * b.conj()),
            ));
            let gw = subsample_grid(&gw_full, self.scale, (0, 0));
            // w = Re IDFT(P), P = (Y / Fn) Hs
            let gp = dft2_complex(complex(&gw)).mapv(|z| z / n_lr);
            let ghs = Zip::from(&gp)
                .and(&self.y_spec)
                .and(&self.gram_inv)
                .map_collect(|&g, &y, &gi| (y * gi).conj() * g);
            let gfd = self.filter_pullback(&ghs, &fwd.fd, hyper.filter_eps);
            let gc = real_part(idft2_complex(gfd)).mapv(|v| v * n_lr);
            gk += &self.cross_kernel_adjoint(&gc, k);
        }

        // regularizers, with sign(0) = 0
        Zip::from(&mut gk)
            .and(&fwd.mask)
            .and(k.taps())
            .for_each(|g, &m, &t| *g += (hyper.lambda_cen * m + hyper.lambda_sparse) * sign(t));
        gk
    }

    /// Real/imaginary chain rule through `Hs = Fn conj(Fd) / (|Fd|^2 + eps)`.
    fn filter_pullback(&self, ghs: &CGrid, fd: &CGrid, eps: f64) -> CGrid {
        Zip::from(ghs).and(fd).and(&self.numer).map_collect(|&g, &d, &n| {
            let (p, q) = (n.re, n.im);
            let (a, b) = (d.re, d.im);
            let den = a * a + b * b + eps;
            let re_h = (p * a + q * b) / den;
            let im_h = (q * a - p * b) / den;
            let d_re_da = p / den - 2.0 * a * re_h / den;
            let d_im_da = q / den - 2.0 * a * im_h / den;
            let d_re_db = q / den - 2.0 * b * re_h / den;
            let d_im_db = -p / den - 2.0 * b * im_h / den;
            Complex64::new(g.re * d_re_da + g.im * d_im_da, g.re * d_re_db + g.im * d_im_db)
        })
    }

    /// Adjoint of `k -> periodize((k * flip(k_b)) downsampled)`.
    fn cross_kernel_adjoint(&self, gc: &Grid, k: &Kernel) -> Grid {
        let fkb = self.bicubic.flip();
        let full = linear_convolve(k, &fkb);
        let (h, w) = gc.dim();
        let (cy, cx) = (full.center().0 as isize, full.center().1 as isize);
        let s = self.scale as isize;
        let g_full = Array2::from_shape_fn(full.dim(), |(a, b)| {
            let (da, db) = (a as isize - cy, b as isize - cx);
            if da.rem_euclid(s) != 0 || db.rem_euclid(s) != 0 {
                return 0.0;
            }
            gc[[(da / s).rem_euclid(h as isize) as usize, (db / s).rem_euclid(w as isize) as usize]]
        });
        correlate_valid(&g_full, fkb.taps(), k.dim())
    }

    /// Loss, factor gradients and the filter for the state's current kernel.
    pub fn evaluate(&self, state: &EstimationState, paths: GradientPaths) -> Result<Evaluation> {
        let k = state.composed();
        let fwd = self.forward(&k, &state.hyper)?;
        let gk = self.backward(&k, &state.hyper, paths, &fwd);
        let grads = factor_gradients(&state.factors, &gk);
        let filter = CorrectionFilter::new(
            Spectrum::from_complex(&fwd.hs),
            state.hyper.filter_eps,
            FilterVariant::RegularizedH,
        );
        Ok(Evaluation {
            loss: fwd.loss,
            grads,
            filter,
        })
    }
}

/// `out[p] = sum_t g[p + t] b[t]`, the adjoint of full linear convolution
/// with `b` for an input of shape `out_dims`.
pub(crate) fn correlate_valid(g: &Grid, b: &Grid, out_dims: (usize, usize)) -> Grid {
    let (oh, ow) = out_dims;
    let mut out = Array2::zeros(out_dims);
    for ((t0, t1), &bv) in b.indexed_iter() {
        if bv != 0.0 {
            out.scaled_add(bv, &g.slice(s![t0..t0 + oh, t1..t1 + ow]));
        }
    }
    out
}

/// Pulls a composed-kernel gradient back onto the four factors.
pub(crate) fn factor_gradients(factors: &[Kernel; 4], gk: &Grid) -> [Grid; 4] {
    let p01 = linear_convolve(&factors[0], &factors[1]);
    let p23 = linear_convolve(&factors[2], &factors[3]);
    let rest = [
        linear_convolve(&factors[1], &p23),
        linear_convolve(&factors[0], &p23),
        linear_convolve(&p01, &factors[3]),
        linear_convolve(&p01, &factors[2]),
    ];
    std::array::from_fn(|i| correlate_valid(gk, rest[i].taps(), factors[i].dim()))
}

/// Loss of `state` on `y` (single channel).
pub fn objective(state: &EstimationState, y: &Grid, scale: usize) -> Result<LossBreakdown> {
    let k = state.composed();
    Problem::new(y, scale, k.dim())?.loss(state)
}

/// Factor gradients of [`objective`].
pub fn gradient(state: &EstimationState, y: &Grid, scale: usize) -> Result<[Grid; 4]> {
    let k = compose_kernel(&state.factors);
    let eval = Problem::new(y, scale, k.dim())?.evaluate(state, GradientPaths::ALL)?;
    Ok(eval.grads)
}
