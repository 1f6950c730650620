//! Downscaling kernel generators.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::spectral::Kernel;

/// Bicubic profile parameter.
pub const CUBIC_A: f64 = -0.5;

/// Cubic convolution profile with `a = -0.5`, zero outside `|t| < 2`.
pub fn cubic(t: f64) -> f64 {
    let a = CUBIC_A;
    let t = t.abs();
    if t <= 1.0 {
        (a + 2.0) * t.powi(3) - (a + 3.0) * t.powi(2) + 1.0
    } else if t < 2.0 {
        a * t.powi(3) - 5.0 * a * t.powi(2) + 8.0 * a * t - 4.0 * a
    } else {
        0.0
    }
}

/// Antialiased bicubic downscaling kernel for an integer factor: `4 * scale`
/// taps per axis sampled at `t = (i - 2 * scale) / scale`, unit sum.
pub fn bicubic_kernel(scale: usize) -> Result<Kernel> {
    if scale == 0 {
        return Err(Error::InvalidParameter("scale must be at least 1".into()));
    }
    let n = 4 * scale;
    let c = 2 * scale;
    let profile: Vec<f64> = (0..n)
        .map(|i| cubic((i as f64 - c as f64) / scale as f64))
        .collect();
    let total: f64 = profile.iter().sum();
    let taps = Array2::from_shape_fn((n, n), |(i, j)| profile[i] * profile[j] / (total * total));
    Kernel::new(taps, (c, c))
}

/// Isotropic Gaussian sampled at integer offsets, unit sum; `size` must be odd.
pub fn gaussian_kernel(sigma: f64, size: usize) -> Result<Kernel> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    if size % 2 == 0 {
        return Err(Error::InvalidParameter(format!("gaussian size must be odd, got {size}")));
    }
    let c = (size / 2) as f64;
    let taps = Array2::from_shape_fn((size, size), |(i, j)| {
        let r2 = (i as f64 - c).powi(2) + (j as f64 - c).powi(2);
        (-r2 / (2.0 * sigma * sigma)).exp()
    });
    let total = taps.sum();
    Kernel::centered(taps / total)
}

/// `width x width` uniform kernel centered at `(width/2, width/2)`.
pub fn box_kernel(width: usize) -> Result<Kernel> {
    if width == 0 {
        return Err(Error::InvalidParameter("box width must be at least 1".into()));
    }
    let v = 1.0 / (width * width) as f64;
    Kernel::centered(Array2::from_elem((width, width), v))
}
