//! Linear operators against explicitly constructed matrices.

mod common;

use common::{cyclic_direct, dense_operator_report, downsample_matrix, max_abs, probe_matrix, random_grid, random_kernel};
use corrfilt::operators::{downsample_grid, upsample_grid, SamplingConfig};
use corrfilt::spectral::{cyclic_convolve, linear_convolve};

#[test]
fn operators_match_dense_matrices() {
    for (name, dev) in dense_operator_report(3) {
        eprintln!("{name}: {dev:e}");
        assert!(dev < 1e-8, "{name}: {dev:e}");
    }
}

#[test]
fn downsample_matches_matrix_on_random_image() {
    let mut rng = common::rng(4);
    let x = random_grid(&mut rng, (8, 8));
    let k = random_kernel(&mut rng, (3, 3));
    let cfg = SamplingConfig::new(k.clone(), 2).unwrap();
    let dense = downsample_matrix(&k, 2, (8, 8)) * common::flatten(&x);
    let fast = downsample_grid(&x, &cfg).unwrap();
    assert!((common::flatten(&fast) - dense).amax() < 1e-10);
}

#[test]
fn down_after_up_is_lr_convolution_with_subsampled_autocorrelation() {
    let mut rng = common::rng(5);
    for (scale, hr, size) in [(2, (8, 8), 3), (2, (8, 12), 4), (3, (9, 12), 5)] {
        let k = random_kernel(&mut rng, (size, size));
        let cfg = SamplingConfig::new(k.clone(), scale).unwrap();
        let lr = (hr.0 / scale, hr.1 / scale);
        let composed = probe_matrix(|y| downsample_grid(&upsample_grid(y, &cfg).unwrap(), &cfg).unwrap(), lr, lr);
        let auto = linear_convolve(&k, &k.flip()).subsample(scale);
        // the subsampled autocorrelation may be wider than the LR grid
        let direct = probe_matrix(|y| cyclic_direct(y, &auto), lr, lr);
        assert!(max_abs(&(&composed - &direct)) < 1e-10, "scale {scale} grid {hr:?}");
        if auto.dim().0 <= lr.0 && auto.dim().1 <= lr.1 {
            let fft = probe_matrix(|y| cyclic_convolve(y, &auto).unwrap(), lr, lr);
            assert!(max_abs(&(&composed - &fft)) < 1e-10);
        }
    }
}
