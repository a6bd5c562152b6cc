//! The speech-to-animation generator: a self-attention pooling module that
//! summarizes a clip into one expression prompt, and an attention decoder
//! that predicts frames from speech features with the style embedding
//! injected through cross-attention as a single memory token.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::animgen::{AnimationClip, AnimGenError, SpeechFeatureSequence};
use crate::expclip::StyleEmbedding;
use crate::facs::{BlendshapeWeights, BLENDSHAPE_COUNT};
use crate::nn::attention::{softmax_rows, softmax_rows_backward};
use crate::nn::block::add_positional_encoding;
use crate::nn::linear::DenseCtx;
use crate::nn::norm::LayerNormCtx;
use crate::nn::{
    visit_child, visit_child_mut, DecoderBlock, DecoderBlockCtx, Dense, LayerNorm, Module,
    Parameter, Tensor, TransformerBlock, TransformerBlockCtx,
};
use crate::scalar::Scalar;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorModelConfig {
    pub d_model: usize,
    pub num_heads: usize,
    /// Decoder blocks.
    pub depth: usize,
    /// Attention blocks inside the pooling module.
    pub pooler_depth: usize,
    pub ffn_hidden: usize,
    /// Width of one speech feature frame.
    pub feature_dim: usize,
    /// Style embedding width; must match the alignment model.
    pub embed_dim: usize,
    pub seed: u64,
}

impl Default for GeneratorModelConfig {
    fn default() -> Self {
        Self {
            d_model: 24,
            num_heads: 2,
            depth: 2,
            pooler_depth: 1,
            ffn_hidden: 48,
            feature_dim: 16,
            embed_dim: 64,
            seed: 0,
        }
    }
}

/// Self-attention pooling: score each frame, softmax over the clip, return
/// the attention-weighted sum of the raw frames. The pooled prompt is a
/// convex combination, so it inherits the [0, 1] bounds of its inputs.
#[derive(Clone, Debug)]
pub struct ExpressionPooler<T> {
    pub in_proj: Dense<T>,
    blocks: Vec<TransformerBlock<T>>,
    out_ln: LayerNorm<T>,
    pub score_head: Dense<T>,
}

pub struct PoolerCtx<T> {
    frames: Tensor<T>,
    in_ctx: DenseCtx<T>,
    block_ctxs: Vec<TransformerBlockCtx<T>>,
    ln_ctx: LayerNormCtx<T>,
    score_ctx: DenseCtx<T>,
    /// softmaxed frame weights as a [1, t] row
    probs: Tensor<T>,
}

impl<T: Scalar> PoolerCtx<T> {
    pub fn frame_weights(&self) -> &[T] {
        self.probs.data()
    }
}

impl<T: Scalar> ExpressionPooler<T> {
    pub fn new(cfg: &GeneratorModelConfig, rng: &mut ChaCha8Rng) -> Self {
        Self {
            in_proj: Dense::new(BLENDSHAPE_COUNT, cfg.d_model, rng),
            blocks: (0..cfg.pooler_depth)
                .map(|_| TransformerBlock::new(cfg.d_model, cfg.num_heads, cfg.ffn_hidden, rng))
                .collect(),
            out_ln: LayerNorm::new(cfg.d_model),
            score_head: Dense::new(cfg.d_model, 1, rng),
        }
    }

    /// frames: [t, 52] -> pooled prompt [1, 52].
    pub fn forward(&self, frames: &Tensor<T>) -> Result<(Tensor<T>, PoolerCtx<T>), AnimGenError> {
        let (t, c) = frames.dims2();
        if c != BLENDSHAPE_COUNT {
            return Err(AnimGenError::ChannelCount(c));
        }
        let (mut x, in_ctx) = self.in_proj.forward(frames)?;
        add_positional_encoding(&mut x);
        let mut block_ctxs = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let (next, ctx) = block.forward(&x)?;
            x = next;
            block_ctxs.push(ctx);
        }
        let (normed, ln_ctx) = self.out_ln.forward(&x)?;
        let (scores, score_ctx) = self.score_head.forward(&normed)?; // [t, 1]
        let mut probs = Tensor::from_vec(&[1, t], scores.data().to_vec())?;
        softmax_rows(&mut probs);
        let pooled = probs.matmul(frames); // [1, 52]
        Ok((
            pooled,
            PoolerCtx {
                frames: frames.clone(),
                in_ctx,
                block_ctxs,
                ln_ctx,
                score_ctx,
                probs,
            },
        ))
    }

    /// Returns dL/dframes (both through the attention weights and through
    /// the direct convex-combination path).
    pub fn backward(&mut self, ctx: &PoolerCtx<T>, d_pooled: &Tensor<T>) -> Tensor<T> {
        let (t, _) = ctx.frames.dims2();
        // direct path: pooled = probs · frames
        let mut d_frames = ctx.probs.matmul_tn(d_pooled); // [t, 52]
        let d_probs = d_pooled.matmul_nt(&ctx.frames); // [1, t]
        let d_scores_row = softmax_rows_backward(&ctx.probs, &d_probs);
        let d_scores = Tensor::from_vec(&[t, 1], d_scores_row.data().to_vec())
            .expect("score reshape is exact");
        let d_normed = self.score_head.backward(&ctx.score_ctx, &d_scores);
        let mut dx = self.out_ln.backward(&ctx.ln_ctx, &d_normed);
        for (block, bctx) in self.blocks.iter_mut().zip(&ctx.block_ctxs).rev() {
            dx = block.backward(bctx, &dx);
        }
        // positional encoding backward is the identity
        let d_frames_attn = self.in_proj.backward(&ctx.in_ctx, &dx);
        d_frames.add_assign(&d_frames_attn);
        d_frames
    }

    /// Pool a clip into its expression prompt.
    pub fn pool_clip(&self, clip: &AnimationClip<T>) -> Result<BlendshapeWeights<T>, AnimGenError> {
        let (pooled, _) = self.forward(&clip.to_tensor())?;
        Ok(BlendshapeWeights::from_vec_clamped(pooled.data().to_vec())
            .expect("pooled prompt has 52 channels"))
    }
}

impl<T: Scalar> Module<T> for ExpressionPooler<T> {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Parameter<T>)) {
        visit_child(&self.in_proj, "in_proj", f);
        for (i, b) in self.blocks.iter().enumerate() {
            visit_child(b, &format!("block{i}"), f);
        }
        visit_child(&self.out_ln, "out_ln", f);
        visit_child(&self.score_head, "score_head", f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Parameter<T>)) {
        visit_child_mut(&mut self.in_proj, "in_proj", f);
        for (i, b) in self.blocks.iter_mut().enumerate() {
            visit_child_mut(b, &format!("block{i}"), f);
        }
        visit_child_mut(&mut self.out_ln, "out_ln", f);
        visit_child_mut(&mut self.score_head, "score_head", f);
    }
}

/// The full generator.
#[derive(Clone, Debug)]
pub struct GeneratorModel<T> {
    pub config: GeneratorModelConfig,
    pub pooler: ExpressionPooler<T>,
    speech_proj: Dense<T>,
    style_proj: Dense<T>,
    blocks: Vec<DecoderBlock<T>>,
    out_ln: LayerNorm<T>,
    head: Dense<T>,
}

pub struct GeneratorCtx<T> {
    speech_ctx: DenseCtx<T>,
    style_ctx: DenseCtx<T>,
    block_ctxs: Vec<DecoderBlockCtx<T>>,
    ln_ctx: LayerNormCtx<T>,
    head_ctx: DenseCtx<T>,
}

impl<T: Scalar> GeneratorModel<T> {
    pub fn new(config: GeneratorModelConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self {
            pooler: ExpressionPooler::new(&config, &mut rng),
            speech_proj: Dense::new(config.feature_dim, config.d_model, &mut rng),
            style_proj: Dense::new(config.embed_dim, config.d_model, &mut rng),
            blocks: (0..config.depth)
                .map(|_| DecoderBlock::new(config.d_model, config.num_heads, config.ffn_hidden, &mut rng))
                .collect(),
            out_ln: LayerNorm::new(config.d_model),
            head: Dense::new(config.d_model, BLENDSHAPE_COUNT, &mut rng),
            config,
        }
    }

    /// speech: [t, F], style: [1, embed_dim] -> raw frames [t, 52].
    pub fn forward_raw(
        &self,
        speech: &Tensor<T>,
        style: &Tensor<T>,
    ) -> Result<(Tensor<T>, GeneratorCtx<T>), AnimGenError> {
        let (_, f) = speech.dims2();
        if f != self.config.feature_dim {
            return Err(AnimGenError::FeatureWidth {
                expected: self.config.feature_dim,
                got: f,
            });
        }
        let (_, d) = style.dims2();
        if d != self.config.embed_dim {
            return Err(AnimGenError::EmbeddingDim {
                expected: self.config.embed_dim,
                got: d,
            });
        }
        let (mut x, speech_ctx) = self.speech_proj.forward(speech)?;
        add_positional_encoding(&mut x);
        let (memory, style_ctx) = self.style_proj.forward(style)?; // [1, d_model]
        let mut block_ctxs = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let (next, ctx) = block.forward(&x, &memory)?;
            x = next;
            block_ctxs.push(ctx);
        }
        let (normed, ln_ctx) = self.out_ln.forward(&x)?;
        let (raw, head_ctx) = self.head.forward(&normed)?;
        Ok((
            raw,
            GeneratorCtx {
                speech_ctx,
                style_ctx,
                block_ctxs,
                ln_ctx,
                head_ctx,
            },
        ))
    }

    /// Returns (dL/dspeech, dL/dstyle).
    pub fn backward(&mut self, ctx: &GeneratorCtx<T>, upstream: &Tensor<T>) -> (Tensor<T>, Tensor<T>) {
        let d_normed = self.head.backward(&ctx.head_ctx, upstream);
        let mut dx = self.out_ln.backward(&ctx.ln_ctx, &d_normed);
        let mut d_memory_total: Option<Tensor<T>> = None;
        for (block, bctx) in self.blocks.iter_mut().zip(&ctx.block_ctxs).rev() {
            let (next_dx, d_memory) = block.backward(bctx, &dx);
            dx = next_dx;
            match &mut d_memory_total {
                Some(acc) => acc.add_assign(&d_memory),
                None => d_memory_total = Some(d_memory),
            }
        }
        let d_memory = d_memory_total.expect("generator has at least one block");
        let d_style = self.style_proj.backward(&ctx.style_ctx, &d_memory);
        let d_speech = self.speech_proj.backward(&ctx.speech_ctx, &dx);
        (d_speech, d_style)
    }

    /// Generate a clip: one output frame per speech frame, clamped to [0, 1].
    pub fn generate(
        &self,
        speech: &SpeechFeatureSequence<T>,
        style: &StyleEmbedding<T>,
    ) -> Result<AnimationClip<T>, AnimGenError> {
        if style.dim() != self.config.embed_dim {
            return Err(AnimGenError::EmbeddingDim {
                expected: self.config.embed_dim,
                got: style.dim(),
            });
        }
        let style_row = Tensor::row_vector(style.values().to_vec());
        let (raw, _) = self.forward_raw(speech.features(), &style_row)?;
        AnimationClip::from_tensor_clamped(&raw, speech.fps())
    }
}

impl<T: Scalar> Module<T> for GeneratorModel<T> {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Parameter<T>)) {
        visit_child(&self.pooler, "pooler", f);
        visit_child(&self.speech_proj, "speech_proj", f);
        visit_child(&self.style_proj, "style_proj", f);
        for (i, b) in self.blocks.iter().enumerate() {
            visit_child(b, &format!("block{i}"), f);
        }
        visit_child(&self.out_ln, "out_ln", f);
        visit_child(&self.head, "head", f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Parameter<T>)) {
        visit_child_mut(&mut self.pooler, "pooler", f);
        visit_child_mut(&mut self.speech_proj, "speech_proj", f);
        visit_child_mut(&mut self.style_proj, "style_proj", f);
        for (i, b) in self.blocks.iter_mut().enumerate() {
            visit_child_mut(b, &format!("block{i}"), f);
        }
        visit_child_mut(&mut self.out_ln, "out_ln", f);
        visit_child_mut(&mut self.head, "head", f);
    }
}
