use std::cell::RefCell;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::Grid;
use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(h: usize, w: usize, dir: FftDirection) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft(w, dir), p.plan_fft(h, dir))
    })
}

/// Unnormalized 2-D transform in place (rows, then columns).
fn fft2_in_place(data: &mut Array2<Complex64>, dir: FftDirection) {
    let (h, w) = data.dim();
    let (row_fft, col_fft) = plans(h, w, dir);
    row_fft.process(data.as_slice_mut().expect("standard layout"));
    let mut cols = Array2::from_shape_fn((w, h), |(j, i)| data[[i, j]]);
    col_fft.process(cols.as_slice_mut().expect("standard layout"));
    for ((i, j), v) in data.indexed_iter_mut() {
        *v = cols[[j, i]];
    }
}

/// Complex spectrum held as separate real and imaginary planes.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub re: Grid,
    pub im: Grid,
}

impl Spectrum {
    pub fn new(re: Grid, im: Grid) -> Result<Self> {
        if re.dim() != im.dim() {
            return Err(Error::DimensionMismatch {
                expected: re.dim(),
                found: im.dim(),
            });
        }
        Ok(Spectrum { re, im })
    }

    pub fn ones(h: usize, w: usize) -> Self {
        Spectrum {
            re: Array2::ones((h, w)),
            im: Array2::zeros((h, w)),
        }
    }

    pub fn dim(&self) -> (usize, usize) {
        self.re.dim()
    }

    pub fn get(&self, u: usize, v: usize) -> Complex64 {
        Complex64::new(self.re[[u, v]], self.im[[u, v]])
    }

    pub(crate) fn from_complex(c: &Array2<Complex64>) -> Self {
        Spectrum {
            re: c.mapv(|z| z.re),
            im: c.mapv(|z| z.im),
        }
    }

    pub(crate) fn to_complex(&self) -> Array2<Complex64> {
        Array2::from_shape_fn(self.dim(), |(u, v)| self.get(u, v))
    }

    /// Pointwise complex product.
    pub fn mul(&self, other: &Spectrum) -> Spectrum {
        Spectrum {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    pub fn modulus(&self) -> Grid {
        Array2::from_shape_fn(self.dim(), |(u, v)| self.re[[u, v]].hypot(self.im[[u, v]]))
    }

    /// Smallest modulus and the frequency where it occurs.
    pub fn min_modulus(&self) -> (f64, (usize, usize)) {
        self.modulus()
            .indexed_iter()
            .fold((f64::INFINITY, (0, 0)), |best, (idx, &m)| if m < best.0 { (m, idx) } else { best })
    }

    /// Largest deviation from `S[u,v] = conj(S[-u,-v])`.
    pub fn hermitian_defect(&self) -> f64 {
        let (h, w) = self.dim();
        let mut worst: f64 = 0.0;
        for u in 0..h {
            for v in 0..w {
                let (nu, nv) = ((h - u) % h, (w - v) % w);
                worst = worst
                    .max((self.re[[u, v]] - self.re[[nu, nv]]).abs())
                    .max((self.im[[u, v]] + self.im[[nu, nv]]).abs());
            }
        }
        worst
    }
}

pub(crate) fn dft2_complex(mut data: Array2<Complex64>) -> Array2<Complex64> {
    fft2_in_place(&mut data, FftDirection::Forward);
    data
}

/// Normalized inverse transform without any symmetry assumption.
pub(crate) fn idft2_complex(mut data: Array2<Complex64>) -> Array2<Complex64> {
    let n = data.len() as f64;
    fft2_in_place(&mut data, FftDirection::Inverse);
    data.mapv_inplace(|z| z / n);
    data
}

/// Unnormalized forward DFT of a real grid.
pub fn dft2(g: &Grid) -> Spectrum {
    let data = g.mapv(|v| Complex64::new(v, 0.0));
    Spectrum::from_complex(&dft2_complex(data))
}

/// Inverse DFT (with `1/(H*W)`) of a spectrum that should come from a real
/// grid. Fails if the imaginary residue exceeds `1e-8` of the real magnitude.
pub fn idft2(s: &Spectrum) -> Result<Grid> {
    let z = idft2_complex(s.to_complex());
    let magnitude = z.iter().fold(0.0f64, |m, c| m.max(c.re.abs()));
    let residue = z.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
    if residue > 1e-8 * magnitude && residue > f64::MIN_POSITIVE {
        return Err(Error::NonHermitian { residue, magnitude });
    }
    Ok(z.mapv(|c| c.re))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_grid(h: usize, w: usize, seed: u64) -> Grid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((h, w), |_| rng.gen_range(-1.0..1.0))
    }

    fn naive_dft(g: &Array2<Complex64>, sign: f64) -> Array2<Complex64> {
        let (h, w) = g.dim();
        Array2::from_shape_fn((h, w), |(u, v)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for ((i, j), &x) in g.indexed_iter() {
                let phase = sign * 2.0 * PI * ((u * i) as f64 / h as f64 + (v * j) as f64 / w as f64);
                acc += x * Complex64::from_polar(1.0, phase);
            }
            acc
        })
    }

    #[test]
    fn delta_transforms_to_ones() {
        let mut g = Array2::zeros((4, 4));
        g[[0, 0]] = 1.0;
        let s = dft2(&g);
        assert!(s.re.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert!(s.im.iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn constant_transforms_to_dc() {
        let s = dft2(&Array2::ones((4, 4)));
        for ((u, v), &re) in s.re.indexed_iter() {
            let expect = if (u, v) == (0, 0) { 16.0 } else { 0.0 };
            assert!((re - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_matches_naive_dft() {
        let g = random_grid(8, 8, 11);
        let s = dft2(&g);
        let oracle = naive_dft(&g.mapv(|v| Complex64::new(v, 0.0)), -1.0);
        for ((u, v), z) in oracle.indexed_iter() {
            assert!((s.get(u, v) - z).norm() < 1e-9);
        }
    }

    #[test]
    fn odd_sizes_match_naive_dft() {
        let g = random_grid(7, 9, 12);
        let s = dft2(&g);
        let oracle = naive_dft(&g.mapv(|v| Complex64::new(v, 0.0)), -1.0);
        for ((u, v), z) in oracle.indexed_iter() {
            assert!((s.get(u, v) - z).norm() < 1e-9);
        }
    }

    #[test]
    fn ones_invert_to_delta() {
        let g = idft2(&Spectrum::ones(5, 6)).unwrap();
        for ((i, j), &v) in g.indexed_iter() {
            let expect = if (i, j) == (0, 0) { 1.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_matches_naive_on_hermitian_input() {
        let s = dft2(&random_grid(6, 5, 13));
        let oracle = naive_dft(&s.to_complex(), 1.0).mapv(|z| z / 30.0);
        let g = idft2(&s).unwrap();
        for ((i, j), z) in oracle.indexed_iter() {
            assert!((g[[i, j]] - z.re).abs() < 1e-9);
        }
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let mut s = Spectrum::ones(4, 4);
        s.im[[1, 2]] = 0.5;
        assert!(matches!(idft2(&s), Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn real_input_gives_hermitian_spectrum() {
        assert!(dft2(&random_grid(7, 10, 14)).hermitian_defect() < 1e-12);
    }
}
