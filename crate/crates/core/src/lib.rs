//! Correction filters for single-image super-resolution.
//!
//! Low-resolution images taken with an arbitrary downscaling kernel are
//! filtered so they look like bicubic-downscaled observations, which is what
//! off-the-shelf super-resolvers are trained on. The kernel can be given
//! ([`correction`]) or estimated blindly from the image itself ([`blind`]).
//!
//! All grids use cyclic boundary handling.

pub mod blind;
pub mod correction;
pub mod error;
pub mod image;
pub mod operators;
pub mod resolver;
pub mod spectral;

pub use error::{Error, Result};
pub use image::{Image, MetricReport};
pub use spectral::{Grid, Kernel, Spectrum};
