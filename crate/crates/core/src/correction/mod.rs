//! Closed-form correction filters.
//!
//! An observation `y = S* x` taken with kernel `k` is filtered on the
//! low-resolution grid so that it matches the bicubic observation `R* x`.
//! Everything lives in the DFT domain of the LR grid:
//!
//! * `F_denom = DFT{(k * flip(k_bicub)) downsampled}`
//! * `F_numer = DFT{(k_bicub * flip(k_bicub)) downsampled}`
//! * exact filter `h0 = 1 / F_denom` (recovers `x` through `R`)
//! * regularized filter `h = F_numer conj(F_denom) / (|F_denom|^2 + eps)`
//!   (feeds a resolver that already applies `(R* R)^-1`)

mod kernels;
mod kernfile;

pub use kernels::{bicubic_kernel, box_kernel, cubic, gaussian_kernel};
pub use kernfile::{read_filter, read_kernel, write_filter, write_kernel, FILTER_TAPS};

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::spectral::{center_shift, dft2, idft2, linear_convolve, periodize, Grid, Kernel, Spectrum};

/// Default regularizer for the regularized filter.
pub const DEFAULT_EPSILON: f64 = 1e-14;
/// Denominator modulus below which the exact filter is refused.
pub const EXACT_THRESHOLD: f64 = 1e-12;
/// Default pass threshold of [`invertibility_diagnostic`].
pub const DIAGNOSTIC_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterVariant {
    ExactH0,
    RegularizedH,
}

/// Frequency response of a correction filter on one LR grid size.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectionFilter {
    spectrum: Spectrum,
    epsilon: f64,
    variant: FilterVariant,
}

impl CorrectionFilter {
    pub fn new(spectrum: Spectrum, epsilon: f64, variant: FilterVariant) -> Self {
        CorrectionFilter {
            spectrum,
            epsilon,
            variant,
        }
    }

    /// All-pass filter (spatial delta).
    pub fn identity(grid: (usize, usize)) -> Self {
        Self::new(Spectrum::ones(grid.0, grid.1), 0.0, FilterVariant::RegularizedH)
    }

    /// Filter from spatial taps, e.g. read back from a filter file.
    pub fn from_spatial(taps: &Kernel, grid: (usize, usize), epsilon: f64) -> Result<Self> {
        let g = center_shift(taps, grid.0, grid.1)?;
        Ok(Self::new(dft2(&g), epsilon, FilterVariant::RegularizedH))
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn grid(&self) -> (usize, usize) {
        self.spectrum.dim()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn variant(&self) -> FilterVariant {
        self.variant
    }

    /// Spatial filter as a kernel with its origin at `(h/2, w/2)`.
    pub fn spatial(&self) -> Result<Kernel> {
        let g = idft2(&self.spectrum)?;
        let (h, w) = g.dim();
        let (cy, cx) = (h / 2, w / 2);
        let taps = Array2::from_shape_fn((h, w), |(i, j)| g[[(i + h - cy) % h, (j + w - cx) % w]]);
        Kernel::new(taps, (cy, cx))
    }
}

/// `DFT{(k * flip(target)) downsampled by scale}` on an LR grid, with the
/// subsampled kernel wrapped cyclically onto the grid.
pub fn cross_spectrum(k: &Kernel, target: &Kernel, scale: usize, grid: (usize, usize)) -> Spectrum {
    dft2(&cross_kernel_grid(k, target, scale, grid))
}

pub(crate) fn cross_kernel_grid(k: &Kernel, target: &Kernel, scale: usize, grid: (usize, usize)) -> Grid {
    let c = linear_convolve(k, &target.flip()).subsample(scale);
    periodize(&c, grid.0, grid.1)
}

/// `num * conj(den) / (|den|^2 + eps)` per frequency.
pub fn divide_regularized(num: &Spectrum, den: &Spectrum, eps: f64) -> Result<Spectrum> {
    if num.dim() != den.dim() {
        return Err(Error::DimensionMismatch {
            expected: num.dim(),
            found: den.dim(),
        });
    }
    let power = &den.re * &den.re + &den.im * &den.im + eps;
    if power.iter().any(|&p| !(p >= f64::MIN_POSITIVE)) {
        let (min_modulus, frequency) = den.min_modulus();
        return Err(Error::SingularDenominator {
            min_modulus,
            frequency,
        });
    }
    // num * conj(den)
    let re = &num.re * &den.re + &num.im * &den.im;
    let im = &num.im * &den.re - &num.re * &den.im;
    Spectrum::new(re / &power, im / &power)
}

fn check_scale(scale: usize) -> Result<()> {
    if scale == 0 {
        return Err(Error::InvalidParameter("scale must be at least 1".into()));
    }
    Ok(())
}

/// Exact correction `h0 = IDFT{1 / F_denom}`; refused when the denominator
/// nearly vanishes somewhere (the invertibility condition fails).
pub fn correction_filter_exact(k: &Kernel, scale: usize, grid: (usize, usize)) -> Result<CorrectionFilter> {
    check_scale(scale)?;
    let denom = cross_spectrum(k, &bicubic_kernel(scale)?, scale, grid);
    let (min_modulus, frequency) = denom.min_modulus();
    if !(min_modulus > EXACT_THRESHOLD) {
        return Err(Error::SingularDenominator {
            min_modulus,
            frequency,
        });
    }
    let spectrum = divide_regularized(&Spectrum::ones(grid.0, grid.1), &denom, 0.0)?;
    Ok(CorrectionFilter::new(spectrum, 0.0, FilterVariant::ExactH0))
}

/// Regularized correction toward the bicubic kernel.
pub fn correction_filter(k: &Kernel, scale: usize, grid: (usize, usize), eps: f64) -> Result<CorrectionFilter> {
    check_scale(scale)?;
    correction_filter_to(k, &bicubic_kernel(scale)?, scale, grid, eps)
}

/// Regularized correction that makes `k`-observations mimic `target`-observations.
pub fn correction_filter_to(
    k: &Kernel,
    target: &Kernel,
    scale: usize,
    grid: (usize, usize),
    eps: f64,
) -> Result<CorrectionFilter> {
    check_scale(scale)?;
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be >= 0, got {eps}")));
    }
    let numer = cross_spectrum(target, target, scale, grid);
    let denom = cross_spectrum(k, target, scale, grid);
    let spectrum = divide_regularized(&numer, &denom, eps)?;
    Ok(CorrectionFilter::new(spectrum, eps, FilterVariant::RegularizedH))
}

pub fn apply_correction_grid(y: &Grid, h: &CorrectionFilter) -> Result<Grid> {
    if y.dim() != h.grid() {
        return Err(Error::DimensionMismatch {
            expected: h.grid(),
            found: y.dim(),
        });
    }
    idft2(&dft2(y).mul(&h.spectrum))
}

/// Filters every channel with `h` (cyclic convolution on the LR grid).
pub fn apply_correction(y: &Image, h: &CorrectionFilter) -> Result<Image> {
    y.try_map(|c| apply_correction_grid(c, h))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub min_modulus: f64,
    pub argmin: (usize, usize),
    pub threshold: f64,
    pub pass: bool,
}

/// Checks numerically that `S* R` is invertible on the given LR grid, i.e.
/// that `F_denom` has no (near) zeros.
pub fn invertibility_diagnostic(
    k: &Kernel,
    scale: usize,
    grid: (usize, usize),
    threshold: f64,
) -> Result<Diagnostic> {
    check_scale(scale)?;
    let denom = cross_spectrum(k, &bicubic_kernel(scale)?, scale, grid);
    let (min_modulus, argmin) = denom.min_modulus();
    Ok(Diagnostic {
        min_modulus,
        argmin,
        threshold,
        pass: min_modulus > threshold,
    })
}
