//! Fully connected layer with explicit forward/backward rules.

use rand::Rng;

use crate::nn::{Module, NnError, Parameter, Tensor};
use crate::scalar::Scalar;

/// y = x W^T + b, over rows of x. Weight is stored [out, in].
#[derive(Clone, Debug)]
pub struct Dense<T> {
    pub weight: Parameter<T>,
    pub bias: Parameter<T>,
    in_dim: usize,
    out_dim: usize,
}

/// Saved forward state needed by the backward rule.
#[derive(Clone, Debug)]
pub struct DenseCtx<T> {
    input: Tensor<T>,
}

impl<T: Scalar> Dense<T> {
    /// Xavier-uniform initialization from the given RNG.
    pub fn new(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        let limit = T::from_f64_lit((6.0 / (in_dim + out_dim) as f64).sqrt());
        let mut w = Tensor::zeros(&[out_dim, in_dim]);
        for v in w.data_mut() {
            *v = rng.gen_range(-limit..limit);
        }
        Self {
            weight: Parameter::new(w),
            bias: Parameter::new(Tensor::zeros(&[out_dim])),
            in_dim,
            out_dim,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// x: [n, in] -> [n, out]
    pub fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, DenseCtx<T>), NnError> {
        let (_, cols) = x.dims2();
        if cols != self.in_dim {
            return Err(NnError::ShapeMismatch {
                op: "Dense::forward".into(),
                expected: format!("[_, {}]", self.in_dim),
                got: format!("{:?}", x.shape()),
            });
        }
        x.check_finite("Dense input")?;
        let mut y = x.matmul_nt(&self.weight.value);
        let (n, out) = y.dims2();
        let bias = self.bias.value.data();
        for i in 0..n {
            let row = &mut y.data_mut()[i * out..(i + 1) * out];
            for j in 0..out {
                row[j] += bias[j];
            }
        }
        Ok((y, DenseCtx { input: x.clone() }))
    }

    /// Accumulates weight/bias gradients and returns dL/dinput.
    pub fn backward(&mut self, ctx: &DenseCtx<T>, upstream: &Tensor<T>) -> Tensor<T> {
        let (n, out) = upstream.dims2();
        assert_eq!(out, self.out_dim, "Dense::backward upstream width");
        if self.weight.trainable {
            let dw = upstream.matmul_tn(&ctx.input);
            self.weight.grad.add_assign(&dw);
        }
        if self.bias.trainable {
            let db = self.bias.grad.data_mut();
            for i in 0..n {
                let row = &upstream.data()[i * out..(i + 1) * out];
                for j in 0..out {
                    db[j] += row[j];
                }
            }
        }
        upstream.matmul(&self.weight.value)
    }
}

impl<T: Scalar> Module<T> for Dense<T> {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Parameter<T>)) {
        f("weight", &self.weight);
        f("bias", &self.bias);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Parameter<T>)) {
        f("weight", &mut self.weight);
        f("bias", &mut self.bias);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_zero_bias_give_zero_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut layer = Dense::<f64>::new(3, 2, &mut rng);
        layer.weight.value.fill(0.0);
        layer.bias.value.fill(0.0);
        let x = Tensor::from_vec(&[2, 3], vec![1.0, -2.0, 3.0, 0.1, 0.2, 0.3]).unwrap();
        let (y, _) = layer.forward(&x).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_wrong_input_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let layer = Dense::<f64>::new(3, 2, &mut rng);
        let x = Tensor::<f64>::zeros(&[1, 4]);
        assert!(layer.forward(&x).is_err());
    }

    #[test]
    fn rejects_non_finite_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let layer = Dense::<f64>::new(2, 2, &mut rng);
        let x = Tensor::from_vec(&[1, 2], vec![f64::NAN, 0.0]).unwrap();
        assert!(matches!(layer.forward(&x), Err(NnError::NonFinite(_))));
    }

    #[test]
    fn frozen_layer_keeps_zero_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut layer = Dense::<f64>::new(3, 2, &mut rng);
        layer.weight.trainable = false;
        layer.bias.trainable = false;
        let x = Tensor::from_vec(&[1, 3], vec![1.0, 2.0, 3.0]).unwrap();
        let (_, ctx) = layer.forward(&x).unwrap();
        layer.backward(&ctx, &Tensor::filled(&[1, 2], 1.0));
        assert!(layer.weight.grad.data().iter().all(|&g| g == 0.0));
        assert!(layer.bias.grad.data().iter().all(|&g| g == 0.0));
    }
}
