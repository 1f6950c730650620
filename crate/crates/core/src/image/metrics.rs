use ndarray::{s, Array2, ArrayView2};
use serde::Serialize;

use super::{to_luma, Image};
use crate::error::{Error, Result};
use crate::spectral::Grid;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    /// Decibels; `f64::INFINITY` for identical images.
    pub psnr: f64,
    pub ssim: f64,
    pub border_shaved: usize,
}

/// Luma planes of both images with `border` pixels removed from every side.
fn shaved_luma(a: &Image, b: &Image, border: usize) -> Result<(Grid, Grid)> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let (h, w) = a.dim();
    if 2 * border >= h || 2 * border >= w {
        return Err(Error::ImageTooSmall {
            dims: (h, w),
            reason: format!("border {border} leaves no pixels"),
        });
    }
    let crop = |img: &Image| -> Result<Grid> {
        let l = to_luma(img)?;
        Ok(l.channel(0)
            .slice(s![border..h - border, border..w - border])
            .to_owned())
    };
    Ok((crop(a)?, crop(b)?))
}

pub fn psnr(a: &Image, b: &Image, border: usize) -> Result<f64> {
    let (x, y) = shaved_luma(a, b, border)?;
    let mse = x
        .iter()
        .zip(y.iter())
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        / x.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

fn gaussian_window() -> Vec<f64> {
    let c = (SSIM_WINDOW / 2) as f64;
    let w: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Separable "valid" filtering with the 1-D window along both axes.
fn filter_valid(g: ArrayView2<f64>, win: &[f64]) -> Grid {
    let (h, w) = g.dim();
    let n = win.len();
    let rows: Grid = Array2::from_shape_fn((h, w - n + 1), |(i, j)| {
        win.iter().enumerate().map(|(t, c)| c * g[[i, j + t]]).sum::<f64>()
    });
    Array2::from_shape_fn((h - n + 1, w - n + 1), |(i, j)| {
        win.iter().enumerate().map(|(t, c)| c * rows[[i + t, j]]).sum()
    })
}

/// Mean structural similarity on luma with an 11x11 Gaussian window
/// (sigma 1.5), dynamic range 1.
pub fn ssim(a: &Image, b: &Image, border: usize) -> Result<f64> {
    let (x, y) = shaved_luma(a, b, border)?;
    if x.nrows() < SSIM_WINDOW || x.ncols() < SSIM_WINDOW {
        return Err(Error::ImageTooSmall {
            dims: a.dim(),
            reason: format!("needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels after shaving"),
        });
    }
    let win = gaussian_window();
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;

    let mu_x = filter_valid(x.view(), &win);
    let mu_y = filter_valid(y.view(), &win);
    let xx = filter_valid((&x * &x).view(), &win);
    let yy = filter_valid((&y * &y).view(), &win);
    let xy = filter_valid((&x * &y).view(), &win);

    let mut total = 0.0;
    for ((((&mx, &my), &sxx), &syy), &sxy) in mu_x
        .iter()
        .zip(mu_y.iter())
        .zip(xx.iter())
        .zip(yy.iter())
        .zip(xy.iter())
    {
        let vx = sxx - mx * mx;
        let vy = syy - my * my;
        let cov = sxy - mx * my;
        total += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
            / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    Ok(total / mu_x.len() as f64)
}

pub fn evaluate(a: &Image, b: &Image, border: usize) -> Result<MetricReport> {
    Ok(MetricReport {
        psnr: psnr(a, b, border)?,
        ssim: ssim(a, b, border)?,
        border_shaved: border,
    })
}
