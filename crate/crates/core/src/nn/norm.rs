//! Layer normalization over the last dimension.

use crate::nn::{Module, NnError, Parameter, Tensor};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct LayerNorm<T> {
    pub gamma: Parameter<T>,
    pub beta: Parameter<T>,
    dim: usize,
    eps: T,
}

#[derive(Clone, Debug)]
pub struct LayerNormCtx<T> {
    normalized: Tensor<T>,
    inv_std: Vec<T>,
}

impl<T: Scalar> LayerNorm<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            gamma: Parameter::new(Tensor::filled(&[dim], T::one())),
            beta: Parameter::new(Tensor::zeros(&[dim])),
            dim,
            eps: T::from_f64_lit(1e-5),
        }
    }

    /// x: [n, dim] -> [n, dim], each row normalized to zero mean / unit
    /// variance, then scaled and shifted.
    pub fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, LayerNormCtx<T>), NnError> {
        let (n, d) = x.dims2();
        if d != self.dim {
            return Err(NnError::ShapeMismatch {
                op: "LayerNorm::forward".into(),
                expected: format!("[_, {}]", self.dim),
                got: format!("{:?}", x.shape()),
            });
        }
        let inv_d = T::one() / T::from_f64_lit(d as f64);
        let mut normalized = Tensor::zeros(&[n, d]);
        let mut out = Tensor::zeros(&[n, d]);
        let mut inv_std = vec![T::zero(); n];
        let gamma = self.gamma.value.data();
        let beta = self.beta.value.data();
        for i in 0..n {
            let row = x.row(i);
            let mean = row.iter().copied().sum::<T>() * inv_d;
            let var = row
                .iter()
                .map(|&v| (v - mean) * (v - mean))
                .sum::<T>()
                * inv_d;
            let is = T::one() / (var + self.eps).sqrt();
            inv_std[i] = is;
            for j in 0..d {
                let xn = (row[j] - mean) * is;
                normalized.data_mut()[i * d + j] = xn;
                out.data_mut()[i * d + j] = gamma[j] * xn + beta[j];
            }
        }
        Ok((out, LayerNormCtx { normalized, inv_std }))
    }

    pub fn backward(&mut self, ctx: &LayerNormCtx<T>, upstream: &Tensor<T>) -> Tensor<T> {
        let (n, d) = upstream.dims2();
        let inv_d = T::one() / T::from_f64_lit(d as f64);
        let gamma = self.gamma.value.data();
        let mut dx = Tensor::zeros(&[n, d]);
        for i in 0..n {
            let up = upstream.row(i);
            let xn = ctx.normalized.row(i);
            // dxn = upstream * gamma; reduce terms for the mean/var paths
            let mut sum_dxn = T::zero();
            let mut sum_dxn_xn = T::zero();
            for j in 0..d {
                let dxn = up[j] * gamma[j];
                sum_dxn += dxn;
                sum_dxn_xn += dxn * xn[j];
            }
            for j in 0..d {
                let dxn = up[j] * gamma[j];
                dx.data_mut()[i * d + j] =
                    ctx.inv_std[i] * (dxn - inv_d * sum_dxn - xn[j] * inv_d * sum_dxn_xn);
            }
        }
        if self.gamma.trainable {
            let dg = self.gamma.grad.data_mut();
            for i in 0..n {
                let up = upstream.row(i);
                let xn = ctx.normalized.row(i);
                for j in 0..d {
                    dg[j] += up[j] * xn[j];
                }
            }
        }
        if self.beta.trainable {
            let db = self.beta.grad.data_mut();
            for i in 0..n {
                let up = upstream.row(i);
                for j in 0..d {
                    db[j] += up[j];
                }
            }
        }
        dx
    }
}

impl<T: Scalar> Module<T> for LayerNorm<T> {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Parameter<T>)) {
        f("gamma", &self.gamma);
        f("beta", &self.beta);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Parameter<T>)) {
        f("gamma", &mut self.gamma);
        f("beta", &mut self.beta);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_rows() {
        let ln = LayerNorm::<f64>::new(4);
        let x = Tensor::from_vec(&[2, 4], vec![1.0, 2.0, 3.0, 4.0, -1.0, 0.0, 1.0, 2.0]).unwrap();
        let (y, _) = ln.forward(&x).unwrap();
        for i in 0..2 {
            let row = y.row(i);
            let mean: f64 = row.iter().sum::<f64>() / 4.0;
            let var: f64 = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-4);
        }
    }
}
