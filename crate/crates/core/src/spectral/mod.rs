//! Exact-size 2-D DFTs, kernels and cyclic/linear convolution.
//!
//! The forward transform is unnormalized; the inverse carries `1/(H*W)`.

mod fft;
mod kernel;

pub use fft::{dft2, idft2, Spectrum};
pub(crate) use fft::{dft2_complex, idft2_complex};
pub use kernel::{center_shift, cyclic_convolve, linear_convolve, periodize, Kernel};

/// Row-major real 2-D grid.
pub type Grid = ndarray::Array2<f64>;
