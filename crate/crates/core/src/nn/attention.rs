//! Multi-head scaled dot-product attention with hand-derived backward.
//!
//! One layer serves both self-attention (`query` and `memory` are the same
//! sequence) and cross-attention (`memory` is a different sequence, e.g. a
//! single style token).

use rand::Rng;

use crate::nn::linear::{Dense, DenseCtx};
use crate::nn::{Module, NnError, Parameter, Tensor};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct MultiHeadAttention<T> {
    pub wq: Dense<T>,
    pub wk: Dense<T>,
    pub wv: Dense<T>,
    pub wo: Dense<T>,
    num_heads: usize,
    head_dim: usize,
    d_model: usize,
}

#[derive(Clone, Debug)]
pub struct AttentionCtx<T> {
    q_ctx: DenseCtx<T>,
    k_ctx: DenseCtx<T>,
    v_ctx: DenseCtx<T>,
    o_ctx: DenseCtx<T>,
    q: Tensor<T>,
    k: Tensor<T>,
    v: Tensor<T>,
    /// Per-head attention probabilities, each [tq, tk].
    probs: Vec<Tensor<T>>,
}

impl<T: Scalar> AttentionCtx<T> {
    pub fn probs(&self) -> &[Tensor<T>] {
        &self.probs
    }
}

/// In-place row softmax with max subtraction.
pub fn softmax_rows<T: Scalar>(x: &mut Tensor<T>) {
    let (n, d) = x.dims2();
    for i in 0..n {
        let row = &mut x.data_mut()[i * d..(i + 1) * d];
        let mut max = row[0];
        for &v in row.iter() {
            if v > max {
                max = v;
            }
        }
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v = *v / sum;
        }
    }
}

/// Backward of a row softmax: dy -> dx given y = softmax(x).
pub fn softmax_rows_backward<T: Scalar>(probs: &Tensor<T>, upstream: &Tensor<T>) -> Tensor<T> {
    let (n, d) = probs.dims2();
    let mut dx = Tensor::zeros(&[n, d]);
    for i in 0..n {
        let p = probs.row(i);
        let up = upstream.row(i);
        let mut dot = T::zero();
        for j in 0..d {
            dot += p[j] * up[j];
        }
        for j in 0..d {
            dx.data_mut()[i * d + j] = p[j] * (up[j] - dot);
        }
    }
    dx
}

fn extract_cols<T: Scalar>(x: &Tensor<T>, start: usize, width: usize) -> Tensor<T> {
    let (n, d) = x.dims2();
    let mut out = Tensor::zeros(&[n, width]);
    for i in 0..n {
        out.data_mut()[i * width..(i + 1) * width]
            .copy_from_slice(&x.data()[i * d + start..i * d + start + width]);
    }
    out
}

fn scatter_cols<T: Scalar>(dst: &mut Tensor<T>, src: &Tensor<T>, start: usize) {
    let (n, d) = dst.dims2();
    let (n2, w) = src.dims2();
    assert_eq!(n, n2);
    for i in 0..n {
        for j in 0..w {
            dst.data_mut()[i * d + start + j] += src.data()[i * w + j];
        }
    }
}

impl<T: Scalar> MultiHeadAttention<T> {
    pub fn new(d_model: usize, num_heads: usize, rng: &mut impl Rng) -> Self {
        assert!(
            num_heads > 0 && d_model % num_heads == 0,
            "d_model {d_model} must be a positive multiple of num_heads {num_heads}"
        );
        Self {
            wq: Dense::new(d_model, d_model, rng),
            wk: Dense::new(d_model, d_model, rng),
            wv: Dense::new(d_model, d_model, rng),
            wo: Dense::new(d_model, d_model, rng),
            num_heads,
            head_dim: d_model / num_heads,
            d_model,
        }
    }

    pub fn d_model(&self) -> usize {
        self.d_model
    }

    /// query: [tq, d_model], memory: [tk, d_model] -> [tq, d_model]
    pub fn forward(
        &self,
        query: &Tensor<T>,
        memory: &Tensor<T>,
    ) -> Result<(Tensor<T>, AttentionCtx<T>), NnError> {
        let (q, q_ctx) = self.wq.forward(query)?;
        let (k, k_ctx) = self.wk.forward(memory)?;
        let (v, v_ctx) = self.wv.forward(memory)?;
        let (tq, _) = q.dims2();
        let (tk, _) = k.dims2();
        let scale = T::from_f64_lit(1.0 / (self.head_dim as f64).sqrt());

        let mut concat = Tensor::zeros(&[tq, self.d_model]);
        let mut probs = Vec::with_capacity(self.num_heads);
        for h in 0..self.num_heads {
            let start = h * self.head_dim;
            let qh = extract_cols(&q, start, self.head_dim);
            let kh = extract_cols(&k, start, self.head_dim);
            let vh = extract_cols(&v, start, self.head_dim);
            let mut scores = qh.matmul_nt(&kh).scale(scale);
            debug_assert_eq!(scores.dims2(), (tq, tk));
            softmax_rows(&mut scores);
            let head_out = scores.matmul(&vh);
            scatter_cols(&mut concat, &head_out, start);
            probs.push(scores);
        }
        let (out, o_ctx) = self.wo.forward(&concat)?;
        Ok((
            out,
            AttentionCtx {
                q_ctx,
                k_ctx,
                v_ctx,
                o_ctx,
                q,
                k,
                v,
                probs,
            },
        ))
    }

    /// Returns (dL/dquery, dL/dmemory).
    pub fn backward(
        &mut self,
        ctx: &AttentionCtx<T>,
        upstream: &Tensor<T>,
    ) -> (Tensor<T>, Tensor<T>) {
        let d_concat = self.wo.backward(&ctx.o_ctx, upstream);
        let (tq, _) = ctx.q.dims2();
        let (tk, _) = ctx.k.dims2();
        let scale = T::from_f64_lit(1.0 / (self.head_dim as f64).sqrt());

        let mut dq = Tensor::zeros(&[tq, self.d_model]);
        let mut dk = Tensor::zeros(&[tk, self.d_model]);
        let mut dv = Tensor::zeros(&[tk, self.d_model]);
        for h in 0..self.num_heads {
            let start = h * self.head_dim;
            let qh = extract_cols(&ctx.q, start, self.head_dim);
            let kh = extract_cols(&ctx.k, start, self.head_dim);
            let vh = extract_cols(&ctx.v, start, self.head_dim);
            let d_head = extract_cols(&d_concat, start, self.head_dim);
            let probs = &ctx.probs[h];

            let d_probs = d_head.matmul_nt(&vh);
            let dvh = probs.matmul_tn(&d_head);
            let d_scores = softmax_rows_backward(probs, &d_probs);
            let dqh = d_scores.matmul(&kh).scale(scale);
            let dkh = d_scores.matmul_tn(&qh).scale(scale);

            scatter_cols(&mut dq, &dqh, start);
            scatter_cols(&mut dk, &dkh, start);
            scatter_cols(&mut dv, &dvh, start);
        }
        let d_query = self.wq.backward(&ctx.q_ctx, &dq);
        let mut d_memory = self.wk.backward(&ctx.k_ctx, &dk);
        d_memory.add_assign(&self.wv.backward(&ctx.v_ctx, &dv));
        (d_query, d_memory)
    }
}

impl<T: Scalar> Module<T> for MultiHeadAttention<T> {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Parameter<T>)) {
        crate::nn::param::visit_child(&self.wq, "wq", f);
        crate::nn::param::visit_child(&self.wk, "wk", f);
        crate::nn::param::visit_child(&self.wv, "wv", f);
        crate::nn::param::visit_child(&self.wo, "wo", f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Parameter<T>)) {
        crate::nn::param::visit_child_mut(&mut self.wq, "wq", f);
        crate::nn::param::visit_child_mut(&mut self.wk, "wk", f);
        crate::nn::param::visit_child_mut(&mut self.wv, "wv", f);
        crate::nn::param::visit_child_mut(&mut self.wo, "wo", f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut x = Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, -5.0, 0.0, 5.0]).unwrap();
        softmax_rows(&mut x);
        for i in 0..2 {
            let s: f64 = x.row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(x.row(i).iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn single_frame_attention_is_value_projection() {
        // With one query/key, softmax over the single logit is 1, so the
        // output must equal wo(wv(x)).
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let attn = MultiHeadAttention::<f64>::new(8, 1, &mut rng);
        let x = Tensor::from_vec(&[1, 8], (0..8).map(|i| 0.1 * i as f64 - 0.3).collect()).unwrap();
        let (out, ctx) = attn.forward(&x, &x).unwrap();
        let (v, _) = attn.wv.forward(&x).unwrap();
        let (expect, _) = attn.wo.forward(&v).unwrap();
        for (a, b) in out.data().iter().zip(expect.data()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((ctx.probs()[0].data()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn attention_probs_rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let attn = MultiHeadAttention::<f64>::new(6, 2, &mut rng);
        let mut q = Tensor::zeros(&[4, 6]);
        let mut m = Tensor::zeros(&[5, 6]);
        for v in q.data_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        for v in m.data_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let (_, ctx) = attn.forward(&q, &m).unwrap();
        for head in ctx.probs() {
            let (rows, _) = head.dims2();
            for i in 0..rows {
                let s: f64 = head.row(i).iter().sum();
                assert!((s - 1.0).abs() < 1e-6);
                assert!(head.row(i).iter().all(|&p| p >= 0.0));
            }
        }
    }
}
