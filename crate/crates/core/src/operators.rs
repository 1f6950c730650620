//! Downsampling `S*` (blur then stride), its adjoint upsampling `S`
//! (zero insertion then flipped blur) and the bicubic pseudo-inverse
//! reconstructor `R (R* R)^-1`.

use ndarray::{s, Array2};

use crate::correction::{bicubic_kernel, cross_spectrum, divide_regularized};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::spectral::{cyclic_convolve, dft2, idft2, Grid, Kernel};

/// Blur kernel, integer stride and subsampling phase of an acquisition.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingConfig {
    pub kernel: Kernel,
    pub scale: usize,
    pub phase: (usize, usize),
}

impl SamplingConfig {
    pub fn new(kernel: Kernel, scale: usize) -> Result<Self> {
        Self::with_phase(kernel, scale, (0, 0))
    }

    pub fn with_phase(kernel: Kernel, scale: usize, phase: (usize, usize)) -> Result<Self> {
        if scale == 0 {
            return Err(Error::InvalidParameter("scale must be at least 1".into()));
        }
        if phase.0 >= scale || phase.1 >= scale {
            return Err(Error::InvalidParameter(format!(
                "phase {phase:?} must be below scale {scale}"
            )));
        }
        Ok(SamplingConfig { kernel, scale, phase })
    }

    /// Bicubic acquisition at `scale`, i.e. the operator `R*`.
    pub fn bicubic(scale: usize) -> Result<Self> {
        Self::new(bicubic_kernel(scale)?, scale)
    }
}

/// Keeps samples `phase + scale * i` on both axes.
pub fn subsample_grid(g: &Grid, scale: usize, phase: (usize, usize)) -> Grid {
    g.slice(s![phase.0..;scale, phase.1..;scale]).to_owned()
}

/// Places `y` at `phase + scale * i` of an otherwise zero grid.
pub fn zero_insert(y: &Grid, scale: usize, phase: (usize, usize)) -> Grid {
    let (h, w) = y.dim();
    let mut out = Array2::zeros((h * scale, w * scale));
    out.slice_mut(s![phase.0..;scale, phase.1..;scale]).assign(y);
    out
}

pub fn downsample_grid(x: &Grid, cfg: &SamplingConfig) -> Result<Grid> {
    let (h, w) = x.dim();
    if h % cfg.scale != 0 || w % cfg.scale != 0 {
        return Err(Error::NotDivisible {
            dims: (h, w),
            scale: cfg.scale,
        });
    }
    let blurred = cyclic_convolve(x, &cfg.kernel)?;
    Ok(subsample_grid(&blurred, cfg.scale, cfg.phase))
}

pub fn upsample_grid(y: &Grid, cfg: &SamplingConfig) -> Result<Grid> {
    cyclic_convolve(&zero_insert(y, cfg.scale, cfg.phase), &cfg.kernel.flip())
}

/// `y = (x * k) downsampled by scale`, per channel. Dimensions must be
/// divisible by the scale; see [`reflect_pad_to_multiple`].
pub fn downsample(x: &Image, cfg: &SamplingConfig) -> Result<Image> {
    x.try_map(|c| downsample_grid(c, cfg))
}

/// Adjoint of [`downsample`].
pub fn upsample(y: &Image, cfg: &SamplingConfig) -> Result<Image> {
    y.try_map(|c| upsample_grid(c, cfg))
}

fn reflect_index(i: usize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * n - 2;
    let r = i % period;
    if r < n {
        r
    } else {
        period - r
    }
}

/// Mirror-pads the bottom and right edges up to the next multiple of `scale`.
pub fn reflect_pad_to_multiple(img: &Image, scale: usize) -> Result<Image> {
    let (h, w) = img.dim();
    let (ph, pw) = (h.div_ceil(scale) * scale, w.div_ceil(scale) * scale);
    img.try_map(|c| {
        Ok(Array2::from_shape_fn((ph, pw), |(i, j)| {
            c[[reflect_index(i, h), reflect_index(j, w)]]
        }))
    })
}

/// Top-left `h x w` region.
pub fn crop(img: &Image, h: usize, w: usize) -> Result<Image> {
    let (ih, iw) = img.dim();
    if h > ih || w > iw {
        return Err(Error::DimensionMismatch {
            expected: (h, w),
            found: (ih, iw),
        });
    }
    img.try_map(|c| Ok(c.slice(s![..h, ..w]).to_owned()))
}

/// Applies `(R* R)^-1` on the low-resolution grid: division by the spectrum of
/// the subsampled bicubic autocorrelation, regularized by `eps`.
pub(crate) fn gram_inverse_grid(y: &Grid, scale: usize, eps: f64) -> Result<Grid> {
    let (h, w) = y.dim();
    let kb = bicubic_kernel(scale)?;
    let gram = cross_spectrum(&kb, &kb, scale, (h, w));
    let inv = divide_regularized(&crate::spectral::Spectrum::ones(h, w), &gram, eps)?;
    idft2(&dft2(y).mul(&inv))
}

/// The built-in linear super-resolver `R (R* R)^-1 y`: exact on images that
/// lie in the range of the bicubic upsampler.
pub fn pseudo_inverse_reconstruct(y: &Image, scale: usize, eps: f64) -> Result<Image> {
    let cfg = SamplingConfig::bicubic(scale)?;
    y.try_map(|c| {
        let coeffs = gram_inverse_grid(c, scale, eps)?;
        upsample_grid(&coeffs, &cfg)
    })
}
