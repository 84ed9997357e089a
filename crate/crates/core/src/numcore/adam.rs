//! Adam with bias correction. One state per parameter vector; callers pass
//! gradients of the mean loss per step.

use crate::error::{AuditError, Result};

#[derive(Debug, Clone)]
pub struct AdamState {
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n_params: usize, lr: f64) -> Self {
        AdamState {
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update in place. Errors on shape mismatch or non-finite
/// gradients so training loops surface divergence instead of poisoning the
/// moment estimates.
pub fn adam_step(params: &mut [f64], grads: &[f64], st: &mut AdamState) -> Result<()> {
    if params.len() != grads.len() || params.len() != st.m.len() {
        return Err(AuditError::Dimension(format!(
            "adam_step: {} params, {} grads, state sized {}",
            params.len(),
            grads.len(),
            st.m.len()
        )));
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(AuditError::Numeric("non-finite gradient in adam_step".into()));
    }
    st.step += 1;
    let t = st.step as i32;
    let bc1 = 1.0 - st.beta1.powi(t);
    let bc2 = 1.0 - st.beta2.powi(t);
    for i in 0..params.len() {
        st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grads[i];
        st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grads[i] * grads[i];
        let m_hat = st.m[i] / bc1;
        let v_hat = st.v[i] / bc2;
        params[i] -= st.lr * m_hat / (v_hat.sqrt() + st.eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        // Bias correction makes the very first update lr * g/|g| up to eps.
        let mut p = vec![0.0];
        let mut st = AdamState::new(1, 0.1);
        adam_step(&mut p, &[1.0], &mut st).unwrap();
        assert!((p[0] + 0.1).abs() < 1e-7, "got {}", p[0]);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut p = vec![0.0; 2];
        let mut st = AdamState::new(2, 0.1);
        assert!(adam_step(&mut p, &[1.0], &mut st).is_err());
    }

    #[test]
    fn non_finite_gradient_is_an_error() {
        let mut p = vec![0.0];
        let mut st = AdamState::new(1, 0.1);
        assert!(adam_step(&mut p, &[f64::NAN], &mut st).is_err());
    }

    #[test]
    fn fresh_state_update_opposes_gradient_sign() {
        let mut rng = crate::numcore::SeededRng::new(11);
        for _ in 0..200 {
            let n = 1 + rng.below(8);
            let grads: Vec<f64> = (0..n)
                .map(|_| {
                    let g = rng.normal() * 10f64.powf(rng.uniform_in(-6.0, 6.0));
                    if g == 0.0 {
                        1.0
                    } else {
                        g
                    }
                })
                .collect();
            let mut params = vec![0.0; n];
            let mut st = AdamState::new(n, 0.05);
            adam_step(&mut params, &grads, &mut st).unwrap();
            for (p, g) in params.iter().zip(&grads) {
                assert!(p * g < 0.0, "param moved with the gradient: p={p} g={g}");
            }
        }
    }

    #[test]
    fn converges_on_a_quadratic() {
        // min (p - 3)^2
        let mut p = vec![0.0];
        let mut st = AdamState::new(1, 0.05);
        for _ in 0..2000 {
            let g = 2.0 * (p[0] - 3.0);
            adam_step(&mut p, &[g], &mut st).unwrap();
        }
        assert!((p[0] - 3.0).abs() < 1e-3, "got {}", p[0]);
    }
}
