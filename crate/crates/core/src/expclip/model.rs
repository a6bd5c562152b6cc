//! The joint text/expression/image embedding model: a blendshape
//! autoencoder (attention encoder E, decoder D), the frozen text featurizer
//! with its trainable projector, and the image-feature projector.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expclip::featurize::TextFeaturizer;
use crate::expclip::ExpClipError;
use crate::facs::{BlendshapeWeights, BLENDSHAPE_COUNT};
use crate::nn::block::gelu;
use crate::nn::linear::DenseCtx;
use crate::nn::{
    visit_child, visit_child_mut, Dense, LayerNorm, LayerNormCtx, Module, Parameter, Tensor,
    TransformerBlock, TransformerBlockCtx,
};
use crate::scalar::{clamp01, Scalar};

/// A point in the joint style space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StyleEmbedding<T> {
    values: Vec<T>,
}

impl<T: Scalar> StyleEmbedding<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn cosine_similarity(&self, other: &Self) -> Result<T, ExpClipError> {
        Ok(crate::nn::losses::cosine_similarity(
            &self.values,
            &other.values,
        )?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpClipModelConfig {
    /// Width of the joint embedding space.
    pub embed_dim: usize,
    /// Width of the encoder/decoder attention blocks.
    pub d_model: usize,
    pub num_heads: usize,
    /// Attention blocks in the encoder and in the decoder.
    pub depth: usize,
    pub ffn_hidden: usize,
    pub text_feature_width: usize,
    pub text_proj_hidden: usize,
    pub image_feature_width: usize,
    pub image_proj_hidden: usize,
    pub seed: u64,
}

impl Default for ExpClipModelConfig {
    fn default() -> Self {
        Self {
            embed_dim: 64,
            d_model: 32,
            num_heads: 2,
            depth: 2,
            ffn_hidden: 64,
            text_feature_width: 512,
            text_proj_hidden: 128,
            image_feature_width: 128,
            image_proj_hidden: 64,
            seed: 0,
        }
    }
}

/// Attention encoder over the 52-channel weight vector: input projection to
/// one d_model token, a stack of attention blocks, a final norm and the
/// projection into the embedding space.
#[derive(Clone, Debug)]
pub struct ExprEncoder<T> {
    in_proj: Dense<T>,
    blocks: Vec<TransformerBlock<T>>,
    out_ln: LayerNorm<T>,
    out_proj: Dense<T>,
}

pub struct ExprEncoderCtx<T> {
    in_ctx: DenseCtx<T>,
    block_ctxs: Vec<TransformerBlockCtx<T>>,
    ln_ctx: LayerNormCtx<T>,
    out_ctx: DenseCtx<T>,
}

impl<T: Scalar> ExprEncoder<T> {
    fn new(cfg: &ExpClipModelConfig, rng: &mut ChaCha8Rng) -> Self {
        Self {
            in_proj: Dense::new(BLENDSHAPE_COUNT, cfg.d_model, rng),
            blocks: (0..cfg.depth)
                .map(|_| TransformerBlock::new(cfg.d_model, cfg.num_heads, cfg.ffn_hidden, rng))
                .collect(),
            out_ln: LayerNorm::new(cfg.d_model),
            out_proj: Dense::new(cfg.d_model, cfg.embed_dim, rng),
        }
    }

    /// weights as a [1, 52] row -> embedding as a [1, D] row.
    pub fn forward(&self, weights: &Tensor<T>) -> Result<(Tensor<T>, ExprEncoderCtx<T>), ExpClipError> {
        let (mut x, in_ctx) = self.in_proj.forward(weights)?;
        let mut block_ctxs = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let (next, ctx) = block.forward(&x)?;
            x = next;
            block_ctxs.push(ctx);
        }
        let (normed, ln_ctx) = self.out_ln.forward(&x)?;
        let (z, out_ctx) = self.out_proj.forward(&normed)?;
        Ok((
            z,
            ExprEncoderCtx {
                in_ctx,
                block_ctxs,
                ln_ctx,
                out_ctx,
            },
        ))
    }

    /// Returns dL/dweights.
    pub fn backward(&mut self, ctx: &ExprEncoderCtx<T>, upstream: &Tensor<T>) -> Tensor<T> {
        let d_normed = self.out_proj.backward(&ctx.out_ctx, upstream);
        let mut dx = self.out_ln.backward(&ctx.ln_ctx, &d_normed);
        for (block, bctx) in self.blocks.iter_mut().zip(&ctx.block_ctxs).rev() {
            dx = block.backward(bctx, &dx);
        }
        self.in_proj.backward(&ctx.in_ctx, &dx)
    }
}

impl<T: Scalar> Module<T> for ExprEncoder<T> {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Parameter<T>)) {
        visit_child(&self.in_proj, "in_proj", f);
        for (i, b) in self.blocks.iter().enumerate() {
            visit_child(b, &format!("block{i}"), f);
        }
        visit_child(&self.out_ln, "out_ln", f);
        visit_child(&self.out_proj, "out_proj", f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Parameter<T>)) {
        visit_child_mut(&mut self.in_proj, "in_proj", f);
        for (i, b) in self.blocks.iter_mut().enumerate() {
            visit_child_mut(b, &format!("block{i}"), f);
        }
        visit_child_mut(&mut self.out_ln, "out_ln", f);
        visit_child_mut(&mut self.out_proj, "out_proj", f);
    }
}

/// Mirror of the encoder: embedding in, raw 52-channel reconstruction out.
/// Public decoding clamps into [0, 1]; losses run on the raw head output so
/// gradients stay alive everywhere.
#[derive(Clone, Debug)]
pub struct ExprDecoder<T> {
    in_proj: Dense<T>,
    blocks: Vec<TransformerBlock<T>>,
    out_ln: LayerNorm<T>,
    head: Dense<T>,
}

pub struct ExprDecoderCtx<T> {
    in_ctx: DenseCtx<T>,
    block_ctxs: Vec<TransformerBlockCtx<T>>,
    ln_ctx: LayerNormCtx<T>,
    head_ctx: DenseCtx<T>,
}

impl<T: Scalar> ExprDecoder<T> {
    fn new(cfg: &ExpClipModelConfig, rng: &mut ChaCha8Rng) -> Self {
        Self {
            in_proj: Dense::new(cfg.embed_dim, cfg.d_model, rng),
            blocks: (0..cfg.depth)
                .map(|_| TransformerBlock::new(cfg.d_model, cfg.num_heads, cfg.ffn_hidden, rng))
                .collect(),
            out_ln: LayerNorm::new(cfg.d_model),
            head: Dense::new(cfg.d_model, BLENDSHAPE_COUNT, rng),
        }
    }

    pub fn forward_raw(
        &self,
        embedding: &Tensor<T>,
    ) -> Result<(Tensor<T>, ExprDecoderCtx<T>), ExpClipError> {
        let (mut x, in_ctx) = self.in_proj.forward(embedding)?;
        let mut block_ctxs = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let (next, ctx) = block.forward(&x)?;
            x = next;
            block_ctxs.push(ctx);
        }
        let (normed, ln_ctx) = self.out_ln.forward(&x)?;
        let (raw, head_ctx) = self.head.forward(&normed)?;
        Ok((
            raw,
            ExprDecoderCtx {
                in_ctx,
                block_ctxs,
                ln_ctx,
                head_ctx,
            },
        ))
    }

    /// Returns dL/dembedding.
    pub fn backward(&mut self, ctx: &ExprDecoderCtx<T>, upstream: &Tensor<T>) -> Tensor<T> {
        let d_normed = self.head.backward(&ctx.head_ctx, upstream);
        let mut dx = self.out_ln.backward(&ctx.ln_ctx, &d_normed);
        for (block, bctx) in self.blocks.iter_mut().zip(&ctx.block_ctxs).rev() {
            dx = block.backward(bctx, &dx);
        }
        self.in_proj.backward(&ctx.in_ctx, &dx)
    }
}

impl<T: Scalar> Module<T> for ExprDecoder<T> {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Parameter<T>)) {
        visit_child(&self.in_proj, "in_proj", f);
        for (i, b) in self.blocks.iter().enumerate() {
            visit_child(b, &format!("block{i}"), f);
        }
        visit_child(&self.out_ln, "out_ln", f);
        visit_child(&self.head, "head", f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Parameter<T>)) {
        visit_child_mut(&mut self.in_proj, "in_proj", f);
        for (i, b) in self.blocks.iter_mut().enumerate() {
            visit_child_mut(b, &format!("block{i}"), f);
        }
        visit_child_mut(&mut self.out_ln, "out_ln", f);
        visit_child_mut(&mut self.head, "head", f);
    }
}

/// Two-layer projector with a GELU in between.
#[derive(Clone, Debug)]
pub struct Projector<T> {
    expand: Dense<T>,
    contract: Dense<T>,
}

pub struct ProjectorCtx<T> {
    expand_ctx: DenseCtx<T>,
    pre_activation: Tensor<T>,
    contract_ctx: DenseCtx<T>,
}

impl<T: Scalar> Projector<T> {
    fn new(in_dim: usize, hidden: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            expand: Dense::new(in_dim, hidden, rng),
            contract: Dense::new(hidden, out_dim, rng),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.expand.in_dim()
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, ProjectorCtx<T>), ExpClipError> {
        let (pre, expand_ctx) = self.expand.forward(x)?;
        let activated = pre.map(gelu);
        let (out, contract_ctx) = self.contract.forward(&activated)?;
        Ok((
            out,
            ProjectorCtx {
                expand_ctx,
                pre_activation: pre,
                contract_ctx,
            },
        ))
    }

    pub fn backward(&mut self, ctx: &ProjectorCtx<T>, upstream: &Tensor<T>) -> Tensor<T> {
        let d_activated = self.contract.backward(&ctx.contract_ctx, upstream);
        let mut d_pre = d_activated;
        for (g, &x) in d_pre
            .data_mut()
            .iter_mut()
            .zip(ctx.pre_activation.data())
        {
            *g = *g * crate::nn::block::gelu_derivative(x);
        }
        self.expand.backward(&ctx.expand_ctx, &d_pre)
    }
}

impl<T: Scalar> Module<T> for Projector<T> {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Parameter<T>)) {
        visit_child(&self.expand, "expand", f);
        visit_child(&self.contract, "contract", f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Parameter<T>)) {
        visit_child_mut(&mut self.expand, "expand", f);
        visit_child_mut(&mut self.contract, "contract", f);
    }
}

/// The full alignment model.
#[derive(Clone, Debug)]
pub struct ExpClipModel<T> {
    pub config: ExpClipModelConfig,
    pub encoder: ExprEncoder<T>,
    pub decoder: ExprDecoder<T>,
    pub featurizer: TextFeaturizer,
    pub p_text: Projector<T>,
    pub p_img: Projector<T>,
}

impl<T: Scalar> ExpClipModel<T> {
    pub fn new(config: ExpClipModelConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self {
            encoder: ExprEncoder::new(&config, &mut rng),
            decoder: ExprDecoder::new(&config, &mut rng),
            featurizer: TextFeaturizer::new(config.text_feature_width),
            p_text: Projector::new(
                config.text_feature_width,
                config.text_proj_hidden,
                config.embed_dim,
                &mut rng,
            ),
            p_img: Projector::new(
                config.image_feature_width,
                config.image_proj_hidden,
                config.embed_dim,
                &mut rng,
            ),
            config,
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.config.embed_dim
    }

    fn weights_row(&self, weights: &BlendshapeWeights<T>) -> Tensor<T> {
        Tensor::row_vector(weights.values().to_vec())
    }

    /// Map an expression to its style embedding.
    pub fn encode_expression(&self, weights: &BlendshapeWeights<T>) -> StyleEmbedding<T> {
        let (z, _) = self
            .encoder
            .forward(&self.weights_row(weights))
            .expect("validated weights encode cleanly");
        StyleEmbedding::new(z.data().to_vec())
    }

    /// Decode a style embedding into blendshape weights, clamped to [0, 1].
    pub fn decode_expression(
        &self,
        embedding: &StyleEmbedding<T>,
    ) -> Result<BlendshapeWeights<T>, ExpClipError> {
        if embedding.dim() != self.config.embed_dim {
            return Err(ExpClipError::EmbeddingDim {
                expected: self.config.embed_dim,
                got: embedding.dim(),
            });
        }
        let (raw, _) = self
            .decoder
            .forward_raw(&Tensor::row_vector(embedding.values().to_vec()))?;
        Ok(BlendshapeWeights::from_vec(
            raw.data().iter().map(|&v| clamp01(v)).collect(),
        )
        .expect("clamped decode is valid"))
    }

    /// The frozen, deterministic text feature.
    pub fn featurize_text(&self, text: &str) -> Result<Vec<T>, ExpClipError> {
        self.featurizer.featurize(text)
    }

    /// Text -> style embedding via the frozen featurizer and the projector.
    pub fn encode_text(&self, text: &str) -> Result<StyleEmbedding<T>, ExpClipError> {
        let feature = self.featurize_text(text)?;
        let (z, _) = self.p_text.forward(&Tensor::row_vector(feature))?;
        Ok(StyleEmbedding::new(z.data().to_vec()))
    }

    /// Precomputed image feature -> style embedding via the image projector.
    pub fn encode_image_features(&self, feature: &[T]) -> Result<StyleEmbedding<T>, ExpClipError> {
        if feature.len() != self.config.image_feature_width {
            return Err(ExpClipError::FeatureWidth {
                expected: self.config.image_feature_width,
                got: feature.len(),
            });
        }
        let (z, _) = self.p_img.forward(&Tensor::row_vector(feature.to_vec()))?;
        Ok(StyleEmbedding::new(z.data().to_vec()))
    }

    /// Autoencoder reconstruction distance ‖D(E(b)) − b‖₂ on the raw decode.
    pub fn loss_ae(&self, weights: &BlendshapeWeights<T>) -> T {
        let row = self.weights_row(weights);
        let (z, _) = self.encoder.forward(&row).expect("encode");
        let (raw, _) = self.decoder.forward_raw(&z).expect("decode");
        crate::nn::losses::l2_distance(raw.data(), weights.values()).0
    }

    /// Alignment loss 1 − cos between two embeddings.
    pub fn loss_emb(
        &self,
        prompt: &StyleEmbedding<T>,
        expression: &StyleEmbedding<T>,
    ) -> Result<T, ExpClipError> {
        let (loss, _, _) =
            crate::nn::losses::cosine_embedding_loss(prompt.values(), expression.values())?;
        Ok(loss)
    }

    /// Cross-modal reconstruction ‖D(P_text(feat(text))) − b‖₂.
    pub fn loss_cross(&self, text: &str, weights: &BlendshapeWeights<T>) -> Result<T, ExpClipError> {
        let z = self.encode_text(text)?;
        let (raw, _) = self
            .decoder
            .forward_raw(&Tensor::row_vector(z.values().to_vec()))?;
        Ok(crate::nn::losses::l2_distance(raw.data(), weights.values()).0)
    }

    /// Weighted total over a batch of (text, expression) pairs:
    /// λ1·L_ae + λ2·L_emb + λ3·L_cross, each averaged over the batch.
    pub fn total_loss(
        &self,
        batch: &[(&str, &BlendshapeWeights<T>)],
        lambda_ae: T,
        lambda_emb: T,
        lambda_cross: T,
    ) -> Result<T, ExpClipError> {
        if batch.is_empty() {
            return Err(ExpClipError::EmptyDataset);
        }
        let mut sum = T::zero();
        for (text, weights) in batch {
            let z_e = self.encode_expression(weights);
            let z_t = self.encode_text(text)?;
            let ae = self.loss_ae(weights);
            let emb = self.loss_emb(&z_t, &z_e)?;
            let cross = self.loss_cross(text, weights)?;
            sum += lambda_ae * ae + lambda_emb * emb + lambda_cross * cross;
        }
        Ok(sum / T::from_f64_lit(batch.len() as f64))
    }

    /// Linear interpolation in embedding space, decoded stepwise. The
    /// endpoints decode the autoencoder reconstructions of `a` and `b`.
    pub fn interpolate_expressions(
        &self,
        a: &BlendshapeWeights<T>,
        b: &BlendshapeWeights<T>,
        steps: usize,
    ) -> Result<Vec<BlendshapeWeights<T>>, ExpClipError> {
        if steps < 2 {
            return Err(ExpClipError::TooFewSteps(steps));
        }
        let za = self.encode_expression(a);
        let zb = self.encode_expression(b);
        let mut out = Vec::with_capacity(steps);
        let denom = T::from_f64_lit((steps - 1) as f64);
        for i in 0..steps {
            // endpoints use the encoded vectors directly so they decode the
            // reconstructions bit-exactly; the x + t·(y−x) form keeps the
            // degenerate a == b case an exactly constant sequence
            let z: Vec<T> = if i == 0 {
                za.values().to_vec()
            } else if i == steps - 1 {
                zb.values().to_vec()
            } else {
                let t = T::from_f64_lit(i as f64) / denom;
                za.values()
                    .iter()
                    .zip(zb.values())
                    .map(|(&x, &y)| x + t * (y - x))
                    .collect()
            };
            out.push(self.decode_expression(&StyleEmbedding::new(z))?);
        }
        Ok(out)
    }

    /// Text stage trains E, D and P_text; the image projector stays put.
    pub fn set_text_stage_trainability(&mut self) {
        crate::nn::set_trainable(&mut self.encoder, true);
        crate::nn::set_trainable(&mut self.decoder, true);
        crate::nn::set_trainable(&mut self.p_text, true);
        crate::nn::set_trainable(&mut self.p_img, false);
    }

    /// Image stage finetunes only P_img; E, D and P_text are frozen.
    pub fn set_image_stage_trainability(&mut self) {
        crate::nn::set_trainable(&mut self.encoder, false);
        crate::nn::set_trainable(&mut self.decoder, false);
        crate::nn::set_trainable(&mut self.p_text, false);
        crate::nn::set_trainable(&mut self.p_img, true);
    }

    /// Freeze everything (inference, or use as a style oracle elsewhere).
    pub fn freeze_all(&mut self) {
        crate::nn::set_trainable(self, false);
    }
}

impl<T: Scalar> Module<T> for ExpClipModel<T> {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Parameter<T>)) {
        visit_child(&self.encoder, "encoder", f);
        visit_child(&self.decoder, "decoder", f);
        visit_child(&self.p_text, "p_text", f);
        visit_child(&self.p_img, "p_img", f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Parameter<T>)) {
        visit_child_mut(&mut self.encoder, "encoder", f);
        visit_child_mut(&mut self.decoder, "decoder", f);
        visit_child_mut(&mut self.p_text, "p_text", f);
        visit_child_mut(&mut self.p_img, "p_img", f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExpClipModelConfig {
        ExpClipModelConfig {
            embed_dim: 16,
            d_model: 8,
            num_heads: 2,
            depth: 2,
            ffn_hidden: 16,
            text_feature_width: 64,
            text_proj_hidden: 32,
            image_feature_width: 24,
            image_proj_hidden: 16,
            seed: 9,
        }
    }

    fn some_weights() -> BlendshapeWeights<f64> {
        BlendshapeWeights::from_vec((0..52).map(|i| (i as f64 * 0.31) % 1.0).collect()).unwrap()
    }

    #[test]
    fn encoding_is_deterministic_and_finite() {
        let model = ExpClipModel::<f64>::new(small_config());
        let b = some_weights();
        let z1 = model.encode_expression(&b);
        let z2 = model.encode_expression(&b);
        assert_eq!(z1.values(), z2.values());
        assert!(z1.values().iter().all(|v| v.is_finite()));
        assert_eq!(z1.dim(), 16);
    }

    #[test]
    fn encoding_is_locally_continuous() {
        // Estimate a local rate of change at a coarse scale, then require the
        // tiny perturbation to stay within a small multiple of it.
        let model = ExpClipModel::<f64>::new(small_config());
        let b = some_weights();
        let z = model.encode_expression(&b);

        let perturbed = |delta: f64| {
            let mut v = b.values().to_vec();
            v[10] = (v[10] + delta).clamp(0.0, 1.0);
            BlendshapeWeights::from_vec(v).unwrap()
        };
        let coarse = 1e-3;
        let z_coarse = model.encode_expression(&perturbed(coarse));
        let rate = z_coarse
            .values()
            .iter()
            .zip(z.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max)
            / coarse;

        let tiny = 1e-9;
        let z_tiny = model.encode_expression(&perturbed(tiny));
        let drift = z_tiny
            .values()
            .iter()
            .zip(z.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(
            drift <= 10.0 * rate * tiny + 1e-12,
            "drift {drift} vs local rate {rate}"
        );
    }

    #[test]
    fn decode_output_is_always_in_unit_interval() {
        let model = ExpClipModel::<f64>::new(small_config());
        let huge = StyleEmbedding::new(vec![1e4; 16]);
        let decoded = model.decode_expression(&huge).unwrap();
        assert!(decoded.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn decode_rejects_wrong_dimension() {
        let model = ExpClipModel::<f64>::new(small_config());
        let bad = StyleEmbedding::new(vec![0.0; 10]);
        assert!(matches!(
            model.decode_expression(&bad),
            Err(ExpClipError::EmbeddingDim { .. })
        ));
    }

    #[test]
    fn image_features_reject_wrong_width() {
        let model = ExpClipModel::<f64>::new(small_config());
        assert!(matches!(
            model.encode_image_features(&vec![0.1; 23]),
            Err(ExpClipError::FeatureWidth { .. })
        ));
        assert!(model.encode_image_features(&vec![0.1; 24]).is_ok());
    }

    #[test]
    fn total_loss_composes_from_components() {
        let model = ExpClipModel::<f64>::new(small_config());
        let b = some_weights();
        let texts = ["glad and warm", "heavy heart"];
        let batch: Vec<(&str, &BlendshapeWeights<f64>)> =
            texts.iter().map(|t| (*t, &b)).collect();
        let (l1, l2, l3) = (1.0, 10.0, 10.0);
        let total = model.total_loss(&batch, l1, l2, l3).unwrap();
        let mut manual = 0.0;
        for (text, w) in &batch {
            let z_e = model.encode_expression(w);
            let z_t = model.encode_text(text).unwrap();
            manual += l1 * model.loss_ae(w)
                + l2 * model.loss_emb(&z_t, &z_e).unwrap()
                + l3 * model.loss_cross(text, w).unwrap();
        }
        manual /= batch.len() as f64;
        assert!((total - manual).abs() < 1e-12);
    }

    #[test]
    fn interpolation_endpoints_are_the_reconstructions() {
        let model = ExpClipModel::<f64>::new(small_config());
        let a = some_weights();
        let b = BlendshapeWeights::from_vec(vec![0.9; 52]).unwrap();
        let seq = model.interpolate_expressions(&a, &b, 2).unwrap();
        assert_eq!(seq.len(), 2);
        let ra = model.decode_expression(&model.encode_expression(&a)).unwrap();
        let rb = model.decode_expression(&model.encode_expression(&b)).unwrap();
        assert_eq!(seq[0], ra);
        assert_eq!(seq[1], rb);
    }

    #[test]
    fn interpolation_of_identical_inputs_is_constant() {
        let model = ExpClipModel::<f64>::new(small_config());
        let a = some_weights();
        let seq = model.interpolate_expressions(&a, &a, 7).unwrap();
        for frame in &seq[1..] {
            assert_eq!(frame, &seq[0]);
        }
    }

    #[test]
    fn interpolation_rejects_fewer_than_two_steps() {
        let model = ExpClipModel::<f64>::new(small_config());
        let a = some_weights();
        assert!(matches!(
            model.interpolate_expressions(&a, &a, 1),
            Err(ExpClipError::TooFewSteps(1))
        ));
    }

    #[test]
    fn stage_trainability_flags() {
        let mut model = ExpClipModel::<f64>::new(small_config());
        model.set_image_stage_trainability();
        let mut frozen = 0;
        let mut trainable = 0;
        model.visit_params(&mut |name, p| {
            if name.starts_with("p_img.") {
                assert!(p.trainable, "{name} must train during the image stage");
                trainable += 1;
            } else {
                assert!(!p.trainable, "{name} must stay frozen during the image stage");
                frozen += 1;
            }
        });
        assert!(trainable > 0 && frozen > 0);
    }
}
