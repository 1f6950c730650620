use ndarray::{s, Array2};
use num_complex::Complex64;

use super::fft::{dft2_complex, idft2_complex};
use super::Grid;
use crate::error::{Error, Result};

/// Small 2-D tap grid with a designated origin tap.
///
/// Tap `(a, b)` sits at spatial offset `(a - center.0, b - center.1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    taps: Grid,
    center: (usize, usize),
}

impl Kernel {
    pub fn new(taps: Grid, center: (usize, usize)) -> Result<Self> {
        let (h, w) = taps.dim();
        if h == 0 || w == 0 {
            return Err(Error::InvalidParameter("kernel needs at least one tap".into()));
        }
        if center.0 >= h || center.1 >= w {
            return Err(Error::InvalidParameter(format!(
                "kernel center {center:?} outside {h}x{w} taps"
            )));
        }
        if taps.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite kernel tap".into()));
        }
        Ok(Kernel { taps, center })
    }

    /// Center at `(h/2, w/2)`; for even sizes this is the tap just past the middle.
    pub fn centered(taps: Grid) -> Result<Self> {
        let (h, w) = taps.dim();
        Self::new(taps, (h / 2, w / 2))
    }

    pub fn delta() -> Self {
        Kernel {
            taps: Array2::ones((1, 1)),
            center: (0, 0),
        }
    }

    pub fn taps(&self) -> &Grid {
        &self.taps
    }

    pub fn center(&self) -> (usize, usize) {
        self.center
    }

    pub fn dim(&self) -> (usize, usize) {
        self.taps.dim()
    }

    pub fn sum(&self) -> f64 {
        self.taps.sum()
    }

    /// Iterates `(row offset, col offset, value)` relative to the center.
    pub fn offsets(&self) -> impl Iterator<Item = (isize, isize, f64)> + '_ {
        let (cy, cx) = (self.center.0 as isize, self.center.1 as isize);
        self.taps
            .indexed_iter()
            .map(move |((a, b), &v)| (a as isize - cy, b as isize - cx, v))
    }

    /// Point reflection through the center: `flip(k)[d] = k[-d]`.
    pub fn flip(&self) -> Kernel {
        let (h, w) = self.dim();
        Kernel {
            taps: self.taps.slice(s![..;-1, ..;-1]).to_owned(),
            center: (h - 1 - self.center.0, w - 1 - self.center.1),
        }
    }

    pub fn scaled(&self, factor: f64) -> Kernel {
        Kernel {
            taps: &self.taps * factor,
            center: self.center,
        }
    }

    /// Copy with unit tap sum.
    pub fn normalized(&self) -> Result<Kernel> {
        let total = self.sum();
        if total == 0.0 || !total.is_finite() {
            return Err(Error::InvalidParameter("cannot normalize a zero-sum kernel".into()));
        }
        Ok(self.scaled(1.0 / total))
    }

    /// Keeps the taps whose offsets are multiples of `scale` on both axes;
    /// offset `d` maps to `d / scale`.
    pub fn subsample(&self, scale: usize) -> Kernel {
        assert!(scale >= 1);
        let axis = |len: usize, c: usize| -> (usize, usize, usize) {
            // first kept index, count, new center
            let first = c % scale;
            let count = (len - first).div_ceil(scale);
            (first, count, (c - first) / scale)
        };
        let (h, w) = self.dim();
        let (r0, nr, cy) = axis(h, self.center.0);
        let (c0, nc, cx) = axis(w, self.center.1);
        let taps = Array2::from_shape_fn((nr, nc), |(i, j)| self.taps[[r0 + i * scale, c0 + j * scale]]);
        Kernel {
            taps,
            center: (cy, cx),
        }
    }

    /// Zero-pads into a `(h, w)` tap grid whose center lands at `center`.
    pub fn embed(&self, dims: (usize, usize), center: (usize, usize)) -> Result<Kernel> {
        let (kh, kw) = self.dim();
        if center.0 < self.center.0
            || center.1 < self.center.1
            || dims.0 - center.0 < kh - self.center.0
            || dims.1 - center.1 < kw - self.center.1
        {
            return Err(Error::KernelTooLarge {
                kernel: (kh, kw),
                grid: dims,
            });
        }
        let (oy, ox) = (center.0 - self.center.0, center.1 - self.center.1);
        let mut taps = Array2::zeros(dims);
        taps.slice_mut(s![oy..oy + kh, ox..ox + kw]).assign(&self.taps);
        Kernel::new(taps, center)
    }

    /// Keeps at most `size` taps per axis around the center (`size` odd).
    pub fn crop_centered(&self, size: usize) -> Kernel {
        let half = size / 2;
        let (h, w) = self.dim();
        let (cy, cx) = self.center;
        let (r0, r1) = (cy.saturating_sub(half), (cy + half + 1).min(h));
        let (c0, c1) = (cx.saturating_sub(half), (cx + half + 1).min(w));
        Kernel {
            taps: self.taps.slice(s![r0..r1, c0..c1]).to_owned(),
            center: (cy - r0, cx - c0),
        }
    }
}

/// Embeds `k` in an `h x w` grid with its center tap at `(0, 0)`, wrapping
/// negative offsets around. The kernel must fit the grid.
pub fn center_shift(k: &Kernel, h: usize, w: usize) -> Result<Grid> {
    let (kh, kw) = k.dim();
    if kh > h || kw > w {
        return Err(Error::KernelTooLarge {
            kernel: (kh, kw),
            grid: (h, w),
        });
    }
    Ok(periodize(k, h, w))
}

/// Like [`center_shift`] but taps that wrap onto the same cell are summed,
/// which is the exact cyclic equivalent of a kernel larger than the grid.
pub fn periodize(k: &Kernel, h: usize, w: usize) -> Grid {
    let mut g = Array2::zeros((h, w));
    for (di, dj, v) in k.offsets() {
        let i = di.rem_euclid(h as isize) as usize;
        let j = dj.rem_euclid(w as isize) as usize;
        g[[i, j]] += v;
    }
    g
}

/// Circular convolution; the kernel center is aligned with the output pixel.
pub fn cyclic_convolve(g: &Grid, k: &Kernel) -> Result<Grid> {
    let (h, w) = g.dim();
    let shifted = center_shift(k, h, w)?;
    Ok(cyclic_convolve_grids(g, &shifted))
}

/// Circular convolution of two equally sized grids (origin at `(0, 0)`).
pub(crate) fn cyclic_convolve_grids(a: &Grid, b: &Grid) -> Grid {
    let fa = dft2_complex(a.mapv(|v| Complex64::new(v, 0.0)));
    let fb = dft2_complex(b.mapv(|v| Complex64::new(v, 0.0)));
    idft2_complex(fa * fb).mapv(|z| z.re)
}

/// Full linear convolution. Output size is `(Ha + Hb - 1, Wa + Wb - 1)` and
/// the output center is the sum of the input centers.
pub fn linear_convolve(a: &Kernel, b: &Kernel) -> Kernel {
    let (ah, aw) = a.dim();
    let (bh, bw) = b.dim();
    let mut out = Array2::zeros((ah + bh - 1, aw + bw - 1));
    for ((i, j), &va) in a.taps.indexed_iter() {
        if va == 0.0 {
            continue;
        }
        out.slice_mut(s![i..i + bh, j..j + bw]).scaled_add(va, &b.taps);
    }
    Kernel {
        taps: out,
        center: (a.center.0 + b.center.0, a.center.1 + b.center.1),
    }
}
