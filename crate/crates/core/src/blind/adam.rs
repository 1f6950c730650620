use super::EstimationState;
use crate::spectral::Grid;

/// One bias-corrected Adam update of `params` at step `t` (1-based).
#[allow(clippy::too_many_arguments)]
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: usize,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    let bc1 = 1.0 - beta1.powi(t as i32);
    let bc2 = 1.0 - beta2.powi(t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// Applies one Adam step to every kernel factor and advances the counter.
pub fn adam_step(state: &mut EstimationState, grads: &[Grid; 4]) {
    state.iteration += 1;
    let t = state.iteration;
    let h = state.hyper;
    for (i, g) in grads.iter().enumerate() {
        let center = state.factors[i].center();
        let mut taps = state.factors[i].taps().clone();
        adam_update(
            taps.as_slice_mut().expect("standard layout"),
            g.as_standard_layout().as_slice().expect("standard layout"),
            state.adam_m[i].as_slice_mut().expect("standard layout"),
            state.adam_v[i].as_slice_mut().expect("standard layout"),
            t,
            h.lr,
            h.beta1,
            h.beta2,
            h.adam_eps,
        );
        state.factors[i] = crate::spectral::Kernel::new(taps, center).expect("finite taps");
    }
}
