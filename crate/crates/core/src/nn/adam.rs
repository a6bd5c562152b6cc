//! Adam optimizer with bias correction, keyed by parameter name so state
//! survives checkpoint/resume.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::nn::{Module, NnError};
use crate::scalar::Scalar;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

/// First/second moment estimates per parameter plus the shared step count.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Adam<T> {
    pub config: AdamConfig,
    step: u64,
    moments: BTreeMap<String, (Vec<T>, Vec<T>)>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            moments: BTreeMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over every trainable parameter of `module`, consuming and
    /// zeroing the accumulated gradients.
    pub fn step(&mut self, module: &mut dyn Module<T>) -> Result<(), NnError> {
        self.step += 1;
        let lr = T::from_f64_lit(self.config.lr);
        let b1 = T::from_f64_lit(self.config.beta1);
        let b2 = T::from_f64_lit(self.config.beta2);
        let eps = T::from_f64_lit(self.config.eps);
        let bc1 = T::one() - T::from_f64_lit(self.config.beta1.powi(self.step as i32));
        let bc2 = T::one() - T::from_f64_lit(self.config.beta2.powi(self.step as i32));

        let mut bad: Option<String> = None;
        let moments = &mut self.moments;
        module.visit_params_mut(&mut |name, p| {
            if bad.is_some() {
                return;
            }
            if !p.trainable {
                p.zero_grad();
                return;
            }
            let n = p.value.len();
            let (m, v) = moments
                .entry(name.to_string())
                .or_insert_with(|| (vec![T::zero(); n], vec![T::zero(); n]));
            if m.len() != n {
                bad = Some(format!(
                    "optimizer state for '{name}' has {} entries, parameter has {n}",
                    m.len()
                ));
                return;
            }
            let values = p.value.data_mut();
            let grads = p.grad.data();
            for i in 0..n {
                let g = grads[i];
                m[i] = b1 * m[i] + (T::one() - b1) * g;
                v[i] = b2 * v[i] + (T::one() - b2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                values[i] = values[i] - lr * m_hat / (v_hat.sqrt() + eps);
            }
            p.zero_grad();
        });
        match bad {
            Some(msg) => Err(NnError::Optimizer(msg)),
            None => Ok(()),
        }
    }
}
