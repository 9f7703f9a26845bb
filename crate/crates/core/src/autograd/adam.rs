use super::param::ParamStore;
use super::tensor::Real;

/// Adam with bias correction.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T: Real = f32> {
    pub step_count: u64,
    pub first_moment: Vec<Vec<T>>,
    pub second_moment: Vec<Vec<T>>,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Real> AdamState<T> {
    pub fn new(store: &ParamStore<T>) -> Self {
        Self::with_hyper(store, T::of(0.9), T::of(0.999), T::of(1e-8))
    }

    pub fn with_hyper(store: &ParamStore<T>, beta1: T, beta2: T, epsilon: T) -> Self {
        let zeros = || store.iter().map(|p| vec![T::zero(); p.tensor.numel()]).collect();
        AdamState {
            step_count: 0,
            first_moment: zeros(),
            second_moment: zeros(),
            beta1,
            beta2,
            epsilon,
        }
    }

    /// One update using each parameter's accumulated gradient. Parameters
    /// without a gradient buffer are treated as having zero gradient.
    pub fn step(&mut self, store: &mut ParamStore<T>, lr: T) {
        assert_eq!(self.first_moment.len(), store.len(), "optimizer/store mismatch");
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = T::one() - self.beta1.powi(t);
        let bc2 = T::one() - self.beta2.powi(t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        for ((p, m), v) in store
            .iter_mut()
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            let Some(grad) = p.tensor.grad.clone() else {
                continue;
            };
            for (((w, g), m), v) in p
                .tensor
                .data_mut()
                .iter_mut()
                .zip(grad)
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *m = b1 * *m + (T::one() - b1) * g;
                *v = b2 * *v + (T::one() - b2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *w = *w - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}
