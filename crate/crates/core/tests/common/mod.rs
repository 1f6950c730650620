//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::path::PathBuf;

use corrfilt::blind::{objective, EstimationState, GradientPaths, Hyper, Problem};
use corrfilt::{Grid, Kernel};
use nalgebra::DMatrix;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_grid(rng: &mut ChaCha8Rng, dims: (usize, usize)) -> Grid {
    Array2::from_shape_fn(dims, |_| rng.gen::<f64>())
}

pub fn random_kernel(rng: &mut ChaCha8Rng, dims: (usize, usize)) -> Kernel {
    Kernel::centered(Array2::from_shape_fn(dims, |_| rng.gen_range(-1.0..1.0))).unwrap()
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn norm(g: &Grid) -> f64 {
    g.mapv(|v| v * v).sum().sqrt()
}

pub fn rel_err(a: &Grid, b: &Grid) -> f64 {
    norm(&(a - b)) / norm(b)
}

pub fn flatten(g: &Grid) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_iterator(g.len(), g.iter().copied())
}

pub fn unflatten(v: &nalgebra::DVector<f64>, dims: (usize, usize)) -> Grid {
    Array2::from_shape_vec(dims, v.iter().copied().collect()).unwrap()
}

/// Matrix of a linear grid operator, probed column by column with basis grids.
pub fn probe_matrix<F>(op: F, input: (usize, usize), output: (usize, usize)) -> DMatrix<f64>
where
    F: Fn(&Grid) -> Grid,
{
    let n = input.0 * input.1;
    let mut m = DMatrix::zeros(output.0 * output.1, n);
    for c in 0..n {
        let mut e = Array2::zeros(input);
        e[[c / input.1, c % input.1]] = 1.0;
        let col = op(&e);
        assert_eq!(col.dim(), output);
        for (r, v) in col.iter().enumerate() {
            m[(r, c)] = *v;
        }
    }
    m
}

/// Blur-then-stride matrix built straight from the sampling model:
/// `y[i, j] = sum_o k(o) x[(scale*i - o) mod H, (scale*j - o) mod W]`.
pub fn downsample_matrix(k: &Kernel, scale: usize, hr: (usize, usize)) -> DMatrix<f64> {
    let (h, w) = hr;
    let (lh, lw) = (h / scale, w / scale);
    let mut m = DMatrix::zeros(lh * lw, h * w);
    for i in 0..lh {
        for j in 0..lw {
            for (oy, ox, v) in k.offsets() {
                let p = ((scale * i) as isize - oy).rem_euclid(h as isize) as usize;
                let q = ((scale * j) as isize - ox).rem_euclid(w as isize) as usize;
                m[(i * lw + j, p * w + q)] += v;
            }
        }
    }
    m
}

/// Direct wrap-around sum `sum_o k(o) g[p - o]`.
pub fn cyclic_direct(g: &Grid, k: &Kernel) -> Grid {
    let (h, w) = g.dim();
    Array2::from_shape_fn((h, w), |(i, j)| {
        k.offsets()
            .map(|(oy, ox, v)| {
                let p = (i as isize - oy).rem_euclid(h as isize) as usize;
                let q = (j as isize - ox).rem_euclid(w as isize) as usize;
                v * g[[p, q]]
            })
            .sum()
    })
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Shrunken factor sizes used by the finite-difference checks.
pub const FD_SIZES: [usize; 4] = [5, 5, 5, 4];
pub const FD_SCALE: usize = 2;

pub fn fd_hyper() -> Hyper {
    Hyper {
        filter_eps: 1e-3,
        huber_delta: 0.05,
        ..Hyper::default()
    }
}

/// Near-delta factors with random perturbations.
pub fn random_state(rng: &mut ChaCha8Rng, hyper: Hyper) -> EstimationState {
    let factors = FD_SIZES.map(|n| {
        let c = n / 2;
        let taps = Array2::from_shape_fn((n, n), |(i, j)| {
            let bump = if (i, j) == (c, c) { 1.0 } else { 0.0 };
            bump + rng.gen_range(-0.3..0.3)
        });
        Kernel::new(taps, (c, c)).unwrap()
    });
    EstimationState::from_factors(factors, hyper)
}

fn perturbed(state: &EstimationState, f: usize, idx: (usize, usize), step: f64) -> EstimationState {
    let mut s = state.clone();
    let mut taps = s.factors[f].taps().clone();
    taps[idx] += step;
    s.factors[f] = Kernel::new(taps, s.factors[f].center()).unwrap();
    s
}

pub struct FdReport {
    pub checked: usize,
    pub worst: f64,
    pub worst_at: (usize, usize, usize),
}

/// Compares every factor tap of the analytic gradient on a random 16x16 LR
/// problem with central differences (step 1e-5).
pub fn fd_gradient_check(seed: u64) -> FdReport {
    let mut rng = rng(seed);
    let state = random_state(&mut rng, fd_hyper());
    let y = random_grid(&mut rng, (16, 16));
    let problem = Problem::new(&y, FD_SCALE, state.composed().dim()).unwrap();
    let eval = problem.evaluate(&state, GradientPaths::ALL).unwrap();

    let step = 1e-5;
    let mut report = FdReport {
        checked: 0,
        worst: 0.0,
        worst_at: (0, 0, 0),
    };
    for f in 0..4 {
        for ((i, j), &analytic) in eval.grads[f].indexed_iter() {
            let plus = objective(&perturbed(&state, f, (i, j), step), &y, FD_SCALE).unwrap().total;
            let minus = objective(&perturbed(&state, f, (i, j), -step), &y, FD_SCALE).unwrap().total;
            let numeric = (plus - minus) / (2.0 * step);
            let rel = (numeric - analytic).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            if rel > report.worst {
                report.worst = rel;
                report.worst_at = (f, i, j);
            }
            report.checked += 1;
        }
    }
    report
}

/// Share of the data-term gradient lost when the filter or the downsampler
/// path is switched off.
pub fn path_contributions(seed: u64) -> (f64, f64) {
    let mut rng = rng(seed);
    let hyper = fd_hyper();
    let state = random_state(&mut rng, hyper);
    let y = random_grid(&mut rng, (16, 16));
    let problem = Problem::new(&y, FD_SCALE, state.composed().dim()).unwrap();
    let k = state.composed();
    let grad = |filter, downsampler| {
        problem
            .kernel_gradient(&k, &hyper, GradientPaths { filter, downsampler })
            .unwrap()
            .1
    };
    let all = grad(true, true);
    let data = norm(&(&all - &grad(false, false)));
    (norm(&(&all - &grad(false, true))) / data, norm(&(&all - &grad(true, false))) / data)
}

/// Max abs deviation of every linear operator from its explicit matrix on an
/// 8x8 HR grid at scale 2.
pub fn dense_operator_report(seed: u64) -> Vec<(&'static str, f64)> {
    use corrfilt::correction::{apply_correction_grid, bicubic_kernel, correction_filter};
    use corrfilt::image::Image;
    use corrfilt::operators::{downsample_grid, upsample_grid, SamplingConfig};
    use corrfilt::resolver::resolve_builtin;

    let scale = 2;
    let hr = (8, 8);
    let lr = (4, 4);
    let mut rng = rng(seed);
    let k = Kernel::centered(Array2::from_shape_fn((3, 3), |(i, j)| {
        let d = (i as f64 - 1.0).powi(2) + (j as f64 - 1.0).powi(2);
        (-d).exp() * (1.0 + 0.2 * rng.gen::<f64>())
    }))
    .unwrap()
    .normalized()
    .unwrap();
    let kb = bicubic_kernel(scale).unwrap();
    let cfg_k = SamplingConfig::new(k.clone(), scale).unwrap();
    let cfg_b = SamplingConfig::new(kb.clone(), scale).unwrap();

    let s_star = downsample_matrix(&k, scale, hr);
    let r_star = downsample_matrix(&kb, scale, hr);
    let r = r_star.transpose();

    let mut out = Vec::new();
    let dev = |a: &DMatrix<f64>, b: &DMatrix<f64>| max_abs(&(a - b));

    let m = probe_matrix(|x| downsample_grid(x, &cfg_k).unwrap(), hr, lr);
    out.push(("S*", dev(&m, &s_star)));
    let m = probe_matrix(|y| upsample_grid(y, &cfg_k).unwrap(), lr, hr);
    out.push(("S", dev(&m, &s_star.transpose())));
    let m = probe_matrix(|x| downsample_grid(x, &cfg_b).unwrap(), hr, lr);
    out.push(("R*", dev(&m, &r_star)));
    let m = probe_matrix(|y| upsample_grid(y, &cfg_b).unwrap(), lr, hr);
    out.push(("R", dev(&m, &r)));

    // H = (R*R) A^T (A A^T + eps)^-1 with A = S* R, all circulant on the LR grid
    let a = &s_star * &r;
    let gram = &r_star * &r;
    for eps in [1e-14, 1e-3] {
        let h = correction_filter(&k, scale, lr, eps).unwrap();
        let m = probe_matrix(|y| apply_correction_grid(y, &h).unwrap(), lr, lr);
        let n = lr.0 * lr.1;
        let inv = (&a * a.transpose() + DMatrix::identity(n, n) * eps).try_inverse().unwrap();
        let expected = &gram * a.transpose() * inv;
        out.push((if eps < 1e-6 { "H (eps=1e-14)" } else { "H (eps=1e-3)" }, dev(&m, &expected)));
    }

    let m = probe_matrix(
        |y| resolve_builtin(&Image::gray(y.clone()).unwrap(), scale).unwrap().channel(0).clone(),
        lr,
        hr,
    );
    let expected = &r * gram.clone().try_inverse().unwrap();
    out.push(("f = R (R*R)^-1", dev(&m, &expected)));
    let pinv = r_star.clone().pseudo_inverse(1e-12).unwrap();
    out.push(("f = pinv(R*)", dev(&m, &pinv)));
    out
}

pub mod strategies {
    use corrfilt::operators::SamplingConfig;
    use corrfilt::{Grid, Kernel};
    use ndarray::Array2;
    use proptest::prelude::*;

    pub fn grid(h: usize, w: usize) -> impl Strategy<Value = Grid> {
        prop::collection::vec(-1.0f64..1.0, h * w).prop_map(move |v| Array2::from_shape_vec((h, w), v).unwrap())
    }

    pub fn grid_any(max: usize) -> impl Strategy<Value = Grid> {
        (1..=max, 1..=max).prop_flat_map(|(h, w)| grid(h, w))
    }

    pub fn kernel(max: usize) -> impl Strategy<Value = Kernel> {
        (1..=max, 1..=max).prop_flat_map(|(h, w)| {
            (grid(h, w), 0..h, 0..w).prop_map(|(t, cy, cx)| Kernel::new(t, (cy, cx)).unwrap())
        })
    }

    /// Random scale, HR grid that it divides, kernel no larger than the grid, phase.
    pub fn sampling_case() -> impl Strategy<Value = (SamplingConfig, Grid, Grid)> {
        (1usize..=4, 1usize..=4, 1usize..=4).prop_flat_map(|(scale, lh, lw)| {
            let (h, w) = (scale * lh, scale * lw);
            (
                kernel(h.min(w).min(7)),
                0..scale,
                0..scale,
                grid(h, w),
                grid(lh, lw),
            )
                .prop_map(move |(k, py, px, x, y)| {
                    (SamplingConfig::with_phase(k, scale, (py, px)).unwrap(), x, y)
                })
        })
    }
}
