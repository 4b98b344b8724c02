use crate::error::{NnError, Result};
use crate::param::{ParamStore, Parameter};

fn check_grads(store: &ParamStore, optimizer: &str) -> Result<()> {
    for p in store.iter() {
        if let Some((i, g)) = p.grad.data().iter().enumerate().find(|(_, g)| !g.is_finite()) {
            return Err(NnError::NonFinite {
                context: format!("{optimizer} step"),
                detail: format!("parameter '{}' element {i} has gradient {g}", p.name),
            });
        }
    }
    Ok(())
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    steps: u64,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Applies one update from the accumulated gradients. The store is left
    /// untouched if any gradient is non-finite.
    pub fn step(&mut self, store: &mut ParamStore) -> Result<()> {
        check_grads(store, "adam")?;
        self.steps += 1;
        let bc1 = 1.0 - self.beta1.powi(self.steps as i32);
        let bc2 = 1.0 - self.beta2.powi(self.steps as i32);
        for p in store.iter_mut() {
            self.update(p, bc1, bc2);
        }
        Ok(())
    }

    fn update(&self, p: &mut Parameter, bc1: f64, bc2: f64) {
        let Parameter {
            value,
            grad,
            first_moment,
            second_moment,
            ..
        } = p;
        for (((w, &g), m), v) in value
            .data_mut()
            .iter_mut()
            .zip(grad.data())
            .zip(first_moment.data_mut())
            .zip(second_moment.data_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *w -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// RMSProp without momentum; uses the second-moment slot.
#[derive(Debug, Clone)]
pub struct RmsProp {
    pub lr: f64,
    pub decay: f64,
    pub eps: f64,
}

impl RmsProp {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            decay: 0.9,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, store: &mut ParamStore) -> Result<()> {
        check_grads(store, "rmsprop")?;
        for p in store.iter_mut() {
            let Parameter {
                value,
                grad,
                second_moment,
                ..
            } = p;
            for ((w, &g), v) in value.data_mut().iter_mut().zip(grad.data()).zip(second_moment.data_mut()) {
                *v = self.decay * *v + (1.0 - self.decay) * g * g;
                *w -= self.lr * g / (v.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn scalar_store(w: f64) -> (ParamStore, crate::ParamId) {
        let mut s = ParamStore::new();
        let id = s.add("w", Tensor::scalar(w));
        (s, id)
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let (mut s, id) = scalar_store(0.7);
        Adam::new(0.1).step(&mut s).unwrap();
        assert_eq!(s.value(id).data()[0], 0.7);
        RmsProp::new(0.1).step(&mut s).unwrap();
        assert_eq!(s.value(id).data()[0], 0.7);
    }

    #[test]
    fn first_adam_step_moves_by_learning_rate_times_sign() {
        for g in [3.0, -0.25] {
            let (mut s, id) = scalar_store(1.0);
            s.get_mut(id).grad = Tensor::scalar(g);
            Adam::new(0.01).step(&mut s).unwrap();
            let moved = s.value(id).data()[0] - 1.0;
            // m_hat = g, v_hat = g^2 after bias correction
            let expected = -0.01 * g / (g.abs() + 1e-8);
            assert!((moved - expected).abs() < 1e-15, "{moved} vs {expected}");
            assert!((moved + 0.01 * g.signum()).abs() < 1e-9);
        }
    }

    #[test]
    fn adam_descends_quadratic_bowl() {
        let (mut s, id) = scalar_store(1.0);
        let mut opt = Adam::new(0.05);
        for _ in 0..200 {
            s.zero_grads();
            let w = s.value(id).data()[0];
            s.get_mut(id).grad = Tensor::scalar(2.0 * w);
            opt.step(&mut s).unwrap();
        }
        assert!(s.value(id).data()[0].abs() < 0.05);
    }

    #[test]
    fn nan_gradient_aborts_with_parameter_name() {
        let (mut s, id) = scalar_store(1.0);
        s.get_mut(id).grad = Tensor::scalar(f64::NAN);
        let err = Adam::new(0.1).step(&mut s).unwrap_err();
        assert!(err.to_string().contains("'w'"), "{err}");
        assert_eq!(s.value(id).data()[0], 1.0);
        assert!(RmsProp::new(0.1).step(&mut s).is_err());
    }
}
