//! Planar real-valued images, PNM file I/O and quality metrics.

mod metrics;
mod pnm;

pub use metrics::{evaluate, psnr, ssim, MetricReport};
pub use pnm::{load_image, save_image};

use crate::error::{Error, Result};
use crate::spectral::Grid;

/// BT.601 luma weights for (R, G, B).
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// A stack of equally sized channels. Values are nominally in `[0, 1]` but
/// are only clamped when written to disk.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    channels: Vec<Grid>,
}

impl Image {
    pub fn new(channels: Vec<Grid>) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::InvalidParameter("image needs at least one channel".into()))?;
        let dims = first.dim();
        if dims.0 == 0 || dims.1 == 0 {
            return Err(Error::ImageTooSmall {
                dims,
                reason: "zero-sized image".into(),
            });
        }
        for c in &channels {
            if c.dim() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    found: c.dim(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("non-finite pixel value".into()));
            }
        }
        Ok(Image { channels })
    }

    pub fn gray(g: Grid) -> Result<Self> {
        Self::new(vec![g])
    }

    pub fn height(&self) -> usize {
        self.channels[0].nrows()
    }

    pub fn width(&self) -> usize {
        self.channels[0].ncols()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.channels[0].dim()
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[Grid] {
        &self.channels
    }

    pub fn channel(&self, i: usize) -> &Grid {
        &self.channels[i]
    }

    pub fn into_channels(self) -> Vec<Grid> {
        self.channels
    }

    /// Applies a fallible per-channel transform.
    pub fn try_map<F>(&self, mut f: F) -> Result<Image>
    where
        F: FnMut(&Grid) -> Result<Grid>,
    {
        let channels = self.channels.iter().map(&mut f).collect::<Result<Vec<_>>>()?;
        Image::new(channels)
    }
}

/// Collapses an RGB image to BT.601 luma; single-channel images pass through.
pub fn to_luma(img: &Image) -> Result<Image> {
    match img.num_channels() {
        1 => Ok(img.clone()),
        3 => {
            let c = img.channels();
            let luma = &c[0] * LUMA_WEIGHTS[0] + &c[1] * LUMA_WEIGHTS[1] + &c[2] * LUMA_WEIGHTS[2];
            Image::gray(luma)
        }
        n => Err(Error::ChannelCount(n)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn rgb(r: f64, g: f64, b: f64) -> Image {
        Image::new(vec![
            Array2::from_elem((1, 1), r),
            Array2::from_elem((1, 1), g),
            Array2::from_elem((1, 1), b),
        ])
        .unwrap()
    }

    #[test]
    fn luma_of_white_is_one() {
        let l = to_luma(&rgb(1.0, 1.0, 1.0)).unwrap();
        assert!((l.channel(0)[[0, 0]] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn luma_of_red() {
        let l = to_luma(&rgb(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(l.channel(0)[[0, 0]], 0.299);
    }

    #[test]
    fn luma_passes_gray_through() {
        let g = Image::gray(Array2::from_shape_fn((3, 4), |(i, j)| (i * 4 + j) as f64 / 12.0)).unwrap();
        assert_eq!(to_luma(&g).unwrap(), g);
    }

    #[test]
    fn luma_rejects_two_channels() {
        let img = Image::new(vec![Array2::zeros((2, 2)), Array2::zeros((2, 2))]).unwrap();
        assert!(matches!(to_luma(&img), Err(Error::ChannelCount(2))));
    }

    #[test]
    fn channels_must_agree() {
        let r = Image::new(vec![Array2::zeros((2, 2)), Array2::zeros((2, 3))]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }
}
