use crate::error::{FloraError, Result};

/// Adam optimizer state over a single flat parameter vector.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl OptimizerState {
    pub fn new(param_count: usize, lr: f64) -> Self {
        OptimizerState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    /// One Adam step, in place. Rejects non-finite gradients with the
    /// offending parameter index.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(FloraError::dim(self.m.len(), grads.len(), "optimizer params/grads"));
        }
        for (i, &g) in grads.iter().enumerate() {
            if !g.is_finite() {
                return Err(FloraError::NonFinite {
                    what: format!("gradient[{i}]"),
                    step: self.step + 1,
                });
            }
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_grad_leaves_params_unchanged() {
        let mut st = OptimizerState::new(3, 1e-3);
        let mut p = vec![1.0, -2.0, 0.5];
        st.step(&mut p, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn single_step_matches_hand_computed_update() {
        // grad 1 on a scalar: m=0.1, v=0.001, m̂=1, v̂=1, delta = lr·1/(1+eps)
        let mut st = OptimizerState::new(1, 1e-3);
        let mut p = vec![2.0];
        st.step(&mut p, &[1.0]).unwrap();
        let expected = 2.0 - 1e-3 * 1.0 / (1.0f64.sqrt() + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn identical_params_stay_identical() {
        let mut st = OptimizerState::new(2, 1e-3);
        let mut p = vec![0.7, 0.7];
        for _ in 0..10 {
            st.step(&mut p, &[0.3, 0.3]).unwrap();
        }
        assert_eq!(p[0], p[1]);
    }

    #[test]
    fn non_finite_gradient_rejected_with_diagnostic() {
        let mut st = OptimizerState::new(2, 1e-3);
        let mut p = vec![0.0, 0.0];
        let err = st.step(&mut p, &[0.0, f64::NAN]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gradient[1]"));
        assert!(msg.contains("step 1"));
    }
}
