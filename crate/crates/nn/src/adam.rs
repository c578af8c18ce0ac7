use crate::layers::Module;
use crate::{NnError, Real};

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Real> AdamState<T> {
    pub fn new(module: &impl Module<T>, lr: f64) -> Self {
        let mut m = Vec::new();
        module.visit(&mut |p| m.push(vec![T::zero(); p.value.len()]));
        AdamState { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, v: m.clone(), m }
    }

    /// Applies one update from the accumulated gradients. Nothing changes when
    /// any gradient is non-finite.
    pub fn update(&mut self, module: &mut impl Module<T>) -> Result<(), NnError> {
        let mut bad = None;
        module.visit(&mut |p| {
            if bad.is_none() && p.grad.iter().any(|g| !g.is_finite()) {
                bad = Some(p.name.clone());
            }
        });
        if let Some(name) = bad {
            return Err(NnError::NonFiniteGradient(name));
        }
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (T::lit(self.beta1), T::lit(self.beta2));
        let c1 = T::lit(1.0 - self.beta1.powi(t));
        let c2 = T::lit(1.0 - self.beta2.powi(t));
        let (lr, eps) = (T::lit(self.lr), T::lit(self.eps));
        let mut k = 0;
        let (ms, vs) = (&mut self.m, &mut self.v);
        module.visit_mut(&mut |p| {
            let (m, v) = (&mut ms[k], &mut vs[k]);
            for i in 0..p.grad.len() {
                let g = p.grad[i];
                m[i] = b1 * m[i] + (T::one() - b1) * g;
                v[i] = b2 * v[i] + (T::one() - b2) * g * g;
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p.value.data[i] -= lr * mh / (vh.sqrt() + eps);
            }
            k += 1;
        });
        Ok(())
    }
}
