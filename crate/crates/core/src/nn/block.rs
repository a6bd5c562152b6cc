//! Transformer building blocks: GELU feed-forward, pre-norm encoder block,
//! pre-norm decoder block with cross-attention, sinusoidal positions.

use rand::Rng;

use crate::nn::attention::{AttentionCtx, MultiHeadAttention};
use crate::nn::linear::{Dense, DenseCtx};
use crate::nn::norm::{LayerNorm, LayerNormCtx};
use crate::nn::{Module, NnError, Parameter, Tensor};
use crate::scalar::Scalar;

/// GELU, tanh approximation. Smooth everywhere, which keeps finite-difference
/// gradient checks clean.
pub fn gelu<T: Scalar>(x: T) -> T {
    let c = T::from_f64_lit(0.7978845608028654); // sqrt(2/pi)
    let a = T::from_f64_lit(0.044715);
    let u = c * (x + a * x * x * x);
    T::from_f64_lit(0.5) * x * (T::one() + u.tanh())
}

pub fn gelu_derivative<T: Scalar>(x: T) -> T {
    let c = T::from_f64_lit(0.7978845608028654);
    let a = T::from_f64_lit(0.044715);
    let half = T::from_f64_lit(0.5);
    let three = T::from_f64_lit(3.0);
    let u = c * (x + a * x * x * x);
    let t = u.tanh();
    let sech2 = T::one() - t * t;
    half * (T::one() + t) + half * x * sech2 * c * (T::one() + three * a * x * x)
}

#[derive(Clone, Debug)]
pub struct FeedForward<T> {
    pub expand: Dense<T>,
    pub contract: Dense<T>,
}

#[derive(Clone, Debug)]
pub struct FeedForwardCtx<T> {
    expand_ctx: DenseCtx<T>,
    pre_activation: Tensor<T>,
    contract_ctx: DenseCtx<T>,
}

impl<T: Scalar> FeedForward<T> {
    pub fn new(d_model: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        Self {
            expand: Dense::new(d_model, hidden, rng),
            contract: Dense::new(hidden, d_model, rng),
        }
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, FeedForwardCtx<T>), NnError> {
        let (pre, expand_ctx) = self.expand.forward(x)?;
        let activated = pre.map(gelu);
        let (out, contract_ctx) = self.contract.forward(&activated)?;
        Ok((
            out,
            FeedForwardCtx {
                expand_ctx,
                pre_activation: pre,
                contract_ctx,
            },
        ))
    }

    pub fn backward(&mut self, ctx: &FeedForwardCtx<T>, upstream: &Tensor<T>) -> Tensor<T> {
        let d_activated = self.contract.backward(&ctx.contract_ctx, upstream);
        let mut d_pre = d_activated;
        for (g, &x) in d_pre.data_mut().iter_mut().zip(ctx.pre_activation.data()) {
            *g = *g * gelu_derivative(x);
        }
        self.expand.backward(&ctx.expand_ctx, &d_pre)
    }
}

impl<T: Scalar> Module<T> for FeedForward<T> {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Parameter<T>)) {
        crate::nn::param::visit_child(&self.expand, "expand", f);
        crate::nn::param::visit_child(&self.contract, "contract", f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Parameter<T>)) {
        crate::nn::param::visit_child_mut(&mut self.expand, "expand", f);
        crate::nn::param::visit_child_mut(&mut self.contract, "contract", f);
    }
}

/// Pre-norm encoder block: x + attn(ln1(x)), then x + ffn(ln2(x)).
#[derive(Clone, Debug)]
pub struct TransformerBlock<T> {
    pub ln1: LayerNorm<T>,
    pub attn: MultiHeadAttention<T>,
    pub ln2: LayerNorm<T>,
    pub ffn: FeedForward<T>,
}

#[derive(Clone, Debug)]
pub struct TransformerBlockCtx<T> {
    ln1_ctx: LayerNormCtx<T>,
    attn_ctx: AttentionCtx<T>,
    ln2_ctx: LayerNormCtx<T>,
    ffn_ctx: FeedForwardCtx<T>,
}

impl<T: Scalar> TransformerBlockCtx<T> {
    pub fn attention(&self) -> &AttentionCtx<T> {
        &self.attn_ctx
    }
}

impl<T: Scalar> TransformerBlock<T> {
    pub fn new(d_model: usize, num_heads: usize, ffn_hidden: usize, rng: &mut impl Rng) -> Self {
        Self {
            ln1: LayerNorm::new(d_model),
            attn: MultiHeadAttention::new(d_model, num_heads, rng),
            ln2: LayerNorm::new(d_model),
            ffn: FeedForward::new(d_model, ffn_hidden, rng),
        }
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, TransformerBlockCtx<T>), NnError> {
        let (n1, ln1_ctx) = self.ln1.forward(x)?;
        let (attn_out, attn_ctx) = self.attn.forward(&n1, &n1)?;
        let x1 = x.add(&attn_out);
        let (n2, ln2_ctx) = self.ln2.forward(&x1)?;
        let (ffn_out, ffn_ctx) = self.ffn.forward(&n2)?;
        let out = x1.add(&ffn_out);
        Ok((
            out,
            TransformerBlockCtx {
                ln1_ctx,
                attn_ctx,
                ln2_ctx,
                ffn_ctx,
            },
        ))
    }

    pub fn backward(&mut self, ctx: &TransformerBlockCtx<T>, upstream: &Tensor<T>) -> Tensor<T> {
        // out = x1 + ffn(ln2(x1))
        let d_ffn_out = upstream;
        let d_n2 = self.ffn.backward(&ctx.ffn_ctx, d_ffn_out);
        let mut d_x1 = self.ln2.backward(&ctx.ln2_ctx, &d_n2);
        d_x1.add_assign(upstream);
        // x1 = x + attn(ln1(x), ln1(x))
        let (d_n1_q, d_n1_m) = self.attn.backward(&ctx.attn_ctx, &d_x1);
        let d_n1 = d_n1_q.add(&d_n1_m);
        let mut dx = self.ln1.backward(&ctx.ln1_ctx, &d_n1);
        dx.add_assign(&d_x1);
        dx
    }
}

impl<T: Scalar> Module<T> for TransformerBlock<T> {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Parameter<T>)) {
        crate::nn::param::visit_child(&self.ln1, "ln1", f);
        crate::nn::param::visit_child(&self.attn, "attn", f);
        crate::nn::param::visit_child(&self.ln2, "ln2", f);
        crate::nn::param::visit_child(&self.ffn, "ffn", f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Parameter<T>)) {
        crate::nn::param::visit_child_mut(&mut self.ln1, "ln1", f);
        crate::nn::param::visit_child_mut(&mut self.attn, "attn", f);
        crate::nn::param::visit_child_mut(&mut self.ln2, "ln2", f);
        crate::nn::param::visit_child_mut(&mut self.ffn, "ffn", f);
    }
}

/// Pre-norm decoder block: self-attention, cross-attention over an external
/// memory (here the style token), then feed-forward.
#[derive(Clone, Debug)]
pub struct DecoderBlock<T> {
    pub ln1: LayerNorm<T>,
    pub self_attn: MultiHeadAttention<T>,
    pub ln2: LayerNorm<T>,
    pub cross_attn: MultiHeadAttention<T>,
    pub ln3: LayerNorm<T>,
    pub ffn: FeedForward<T>,
}

#[derive(Clone, Debug)]
pub struct DecoderBlockCtx<T> {
    ln1_ctx: LayerNormCtx<T>,
    self_ctx: AttentionCtx<T>,
    ln2_ctx: LayerNormCtx<T>,
    cross_ctx: AttentionCtx<T>,
    ln3_ctx: LayerNormCtx<T>,
    ffn_ctx: FeedForwardCtx<T>,
}

impl<T: Scalar> DecoderBlock<T> {
    pub fn new(d_model: usize, num_heads: usize, ffn_hidden: usize, rng: &mut impl Rng) -> Self {
        Self {
            ln1: LayerNorm::new(d_model),
            self_attn: MultiHeadAttention::new(d_model, num_heads, rng),
            ln2: LayerNorm::new(d_model),
            cross_attn: MultiHeadAttention::new(d_model, num_heads, rng),
            ln3: LayerNorm::new(d_model),
            ffn: FeedForward::new(d_model, ffn_hidden, rng),
        }
    }

    pub fn forward(
        &self,
        x: &Tensor<T>,
        memory: &Tensor<T>,
    ) -> Result<(Tensor<T>, DecoderBlockCtx<T>), NnError> {
        let (n1, ln1_ctx) = self.ln1.forward(x)?;
        let (self_out, self_ctx) = self.self_attn.forward(&n1, &n1)?;
        let x1 = x.add(&self_out);
        let (n2, ln2_ctx) = self.ln2.forward(&x1)?;
        let (cross_out, cross_ctx) = self.cross_attn.forward(&n2, memory)?;
        let x2 = x1.add(&cross_out);
        let (n3, ln3_ctx) = self.ln3.forward(&x2)?;
        let (ffn_out, ffn_ctx) = self.ffn.forward(&n3)?;
        let out = x2.add(&ffn_out);
        Ok((
            out,
            DecoderBlockCtx {
                ln1_ctx,
                self_ctx,
                ln2_ctx,
                cross_ctx,
                ln3_ctx,
                ffn_ctx,
            },
        ))
    }

    /// Returns (dL/dx, dL/dmemory).
    pub fn backward(
        &mut self,
        ctx: &DecoderBlockCtx<T>,
        upstream: &Tensor<T>,
    ) -> (Tensor<T>, Tensor<T>) {
        let d_n3 = self.ffn.backward(&ctx.ffn_ctx, upstream);
        let mut d_x2 = self.ln3.backward(&ctx.ln3_ctx, &d_n3);
        d_x2.add_assign(upstream);

        let (d_n2, d_memory) = self.cross_attn.backward(&ctx.cross_ctx, &d_x2);
        let mut d_x1 = self.ln2.backward(&ctx.ln2_ctx, &d_n2);
        d_x1.add_assign(&d_x2);

        let (d_n1_q, d_n1_m) = self.self_attn.backward(&ctx.self_ctx, &d_x1);
        let d_n1 = d_n1_q.add(&d_n1_m);
        let mut dx = self.ln1.backward(&ctx.ln1_ctx, &d_n1);
        dx.add_assign(&d_x1);
        (dx, d_memory)
    }
}

impl<T: Scalar> Module<T> for DecoderBlock<T> {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Parameter<T>)) {
        crate::nn::param::visit_child(&self.ln1, "ln1", f);
        crate::nn::param::visit_child(&self.self_attn, "self_attn", f);
        crate::nn::param::visit_child(&self.ln2, "ln2", f);
        crate::nn::param::visit_child(&self.cross_attn, "cross_attn", f);
        crate::nn::param::visit_child(&self.ln3, "ln3", f);
        crate::nn::param::visit_child(&self.ffn, "ffn", f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Parameter<T>)) {
        crate::nn::param::visit_child_mut(&mut self.ln1, "ln1", f);
        crate::nn::param::visit_child_mut(&mut self.self_attn, "self_attn", f);
        crate::nn::param::visit_child_mut(&mut self.ln2, "ln2", f);
        crate::nn::param::visit_child_mut(&mut self.cross_attn, "cross_attn", f);
        crate::nn::param::visit_child_mut(&mut self.ln3, "ln3", f);
        crate::nn::param::visit_child_mut(&mut self.ffn, "ffn", f);
    }
}

/// Add fixed sinusoidal position signals to a [t, d] sequence.
/// Backward is the identity, so nothing is recorded.
pub fn add_positional_encoding<T: Scalar>(x: &mut Tensor<T>) {
    let (t_len, d) = x.dims2();
    for t in 0..t_len {
        for j in 0..d {
            let pair = (j / 2) as f64;
            let freq = 1.0 / 10000f64.powf(2.0 * pair / d as f64);
            let angle = t as f64 * freq;
            let pe = if j % 2 == 0 { angle.sin() } else { angle.cos() };
            x.data_mut()[t * d + j] += T::from_f64_lit(pe);
        }
    }
}
