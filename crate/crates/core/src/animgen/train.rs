//! Generator training. Each step pools an expression prompt from the
//! ground-truth window, encodes it with the frozen alignment encoder, and
//! reconstructs the window from speech (L1). With configured probability the
//! step also runs the prompt-augmentation branch: blend in a dataset
//! expression with random weight, regenerate, and constrain lip motion plus
//! pooled style. The alignment model is never mutated — the trainer works on
//! a frozen clone of its encoder.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::animgen::losses::lip_loss_tensor;
use crate::animgen::{AnimationClip, AnimGenError, GeneratorModel, SpeechFeatureSequence};
use crate::expclip::ExpClipModel;
use crate::nn::losses::{l1_frame_mean, l2_distance};
use crate::nn::{set_trainable, zero_grads, Adam, AdamConfig, Checkpoint, Tensor};
use crate::scalar::Scalar;
use crate::tead::TeadStore;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenTrainConfig {
    /// Frames per training window.
    pub window: usize,
    /// Probability of running the prompt-augmentation branch on a step.
    pub epa_probability: f64,
    pub epa_enabled: bool,
    pub style_loss_enabled: bool,
    pub w_rec: f64,
    pub w_lip: f64,
    pub w_style: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for GenTrainConfig {
    fn default() -> Self {
        Self {
            window: 64,
            epa_probability: 0.5,
            epa_enabled: true,
            style_loss_enabled: true,
            w_rec: 1.0,
            w_lip: 1.0,
            w_style: 1.0,
            lr: 1e-3,
            batch_size: 8,
            epochs: 100,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenEpochLoss {
    pub epoch: usize,
    pub loss_rec: f64,
    pub loss_lip: f64,
    pub loss_style: f64,
    pub total: f64,
}

pub fn gen_history_to_csv(history: &[GenEpochLoss]) -> String {
    let mut out = String::from("epoch,loss_rec,loss_lip,loss_style,total\n");
    for e in history {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.epoch, e.loss_rec, e.loss_lip, e.loss_style, e.total
        ));
    }
    out
}

#[derive(Clone, Serialize, Deserialize)]
pub struct GenTrainState<T> {
    pub params: Checkpoint<T>,
    pub adam: Adam<T>,
    pub rng: ChaCha8Rng,
    pub epochs_done: usize,
    pub history: Vec<GenEpochLoss>,
}

/// Train the generator on paired (speech, clip) data against a frozen
/// alignment model. Deterministic under the config seed; resumable from a
/// saved state.
pub fn train_generator<T: Scalar>(
    model: &mut GeneratorModel<T>,
    data: &[(SpeechFeatureSequence<T>, AnimationClip<T>)],
    tead: &TeadStore<T>,
    expclip: &ExpClipModel<T>,
    cfg: &GenTrainConfig,
    resume: Option<GenTrainState<T>>,
) -> Result<GenTrainState<T>, AnimGenError> {
    if data.is_empty() {
        return Err(AnimGenError::EmptyDataset);
    }
    if cfg.window < 2 {
        return Err(AnimGenError::TooFewFrames(cfg.window));
    }
    if expclip.embed_dim() != model.config.embed_dim {
        return Err(AnimGenError::EmbeddingDim {
            expected: model.config.embed_dim,
            got: expclip.embed_dim(),
        });
    }
    if cfg.epa_enabled && tead.is_empty() {
        return Err(AnimGenError::EmptyStore);
    }
    for (speech, clip) in data {
        if speech.frame_count() != clip.frame_count() {
            return Err(AnimGenError::FrameCount {
                expected: clip.frame_count(),
                got: speech.frame_count(),
            });
        }
        if clip.frame_count() < cfg.window {
            return Err(AnimGenError::WindowOutOfRange {
                offset: 0,
                len: cfg.window,
                frames: clip.frame_count(),
            });
        }
        if speech.feature_dim() != model.config.feature_dim {
            return Err(AnimGenError::FeatureWidth {
                expected: model.config.feature_dim,
                got: speech.feature_dim(),
            });
        }
    }

    // Frozen working copy of the expression encoder; gradients flow through
    // it but its parameters never accumulate, and the alignment model passed
    // in stays untouched.
    let mut style_encoder = expclip.encoder.clone();
    set_trainable(&mut style_encoder, false);

    let (mut adam, mut rng, start_epoch, mut history) = match resume {
        Some(state) => {
            state.params.restore(model)?;
            (state.adam, state.rng, state.epochs_done, state.history)
        }
        None => (
            Adam::new(AdamConfig::with_lr(cfg.lr)),
            ChaCha8Rng::seed_from_u64(cfg.seed),
            0,
            Vec::new(),
        ),
    };

    let (w_rec, w_lip, w_style) = (
        T::from_f64_lit(cfg.w_rec),
        T::from_f64_lit(cfg.w_lip),
        T::from_f64_lit(cfg.w_style),
    );

    for epoch in start_epoch..cfg.epochs {
        let mut order: Vec<usize> = (0..data.len()).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);

        let mut rec_sum = 0.0f64;
        let mut lip_sum = 0.0f64;
        let mut style_sum = 0.0f64;
        let mut total_sum = 0.0f64;
        let mut epa_steps = 0usize;

        for batch in order.chunks(cfg.batch_size.max(1)) {
            zero_grads(model);
            let scale = T::one() / T::from_f64_lit(batch.len() as f64);
            for &idx in batch {
                let (speech, clip) = &data[idx];
                let t_total = clip.frame_count();
                let offset = if t_total > cfg.window {
                    rng.gen_range(0..=t_total - cfg.window)
                } else {
                    0
                };
                let truth = clip.window(offset, cfg.window)?.to_tensor();
                let speech_win = speech.window(offset, cfg.window)?;

                // clean branch
                let (pooled, pooler_ctx) = model.pooler.forward(&truth)?;
                let (z, enc_ctx) = style_encoder.forward(&pooled)?;
                let (pred_raw, gen_ctx) = model.forward_raw(speech_win.features(), &z)?;
                let (l_rec, d_pred) = l1_frame_mean(&pred_raw, &truth);
                rec_sum += l_rec.as_f64();
                let mut sample_total = cfg.w_rec * l_rec.as_f64();

                let mut d_pooled = Tensor::zeros(pooled.shape());

                // prompt-augmentation branch
                let run_epa = cfg.epa_enabled && rng.gen_bool(cfg.epa_probability.clamp(0.0, 1.0));
                if run_epa {
                    epa_steps += 1;
                    let sample_idx = rng.gen_range(0..tead.len());
                    let lambda: T = rng.gen_range(T::zero()..=T::one());
                    let aug_row =
                        Tensor::row_vector(tead.records()[sample_idx].blendshapes.values().to_vec());
                    let mut blended = pooled.scale(T::one() - lambda);
                    blended.add_assign_scaled(&aug_row, lambda);

                    let (z_aug, enc_aug_ctx) = style_encoder.forward(&blended)?;
                    let (pred_aug, gen_aug_ctx) = model.forward_raw(speech_win.features(), &z_aug)?;
                    let (l_lip, d_lip) = lip_loss_tensor(&pred_aug, &truth);
                    lip_sum += l_lip.as_f64();
                    sample_total += cfg.w_lip * l_lip.as_f64();
                    let mut d_pred_aug = d_lip.scale(w_lip * scale);

                    if cfg.style_loss_enabled {
                        let (pooled_out, pooler_out_ctx) = model.pooler.forward(&pred_aug)?;
                        let (z_out, enc_out_ctx) = style_encoder.forward(&pooled_out)?;
                        // the prompt branch is a constant target: only the
                        // generated branch receives gradients
                        let (l_style, d_z_out) = l2_distance(z_out.data(), z_aug.data());
                        style_sum += l_style.as_f64();
                        sample_total += cfg.w_style * l_style.as_f64();
                        let up = Tensor::from_vec(z_out.shape(), d_z_out)?.scale(w_style * scale);
                        let d_pooled_out = style_encoder.backward(&enc_out_ctx, &up);
                        let d_from_style = model.pooler.backward(&pooler_out_ctx, &d_pooled_out);
                        d_pred_aug.add_assign(&d_from_style);
                    }

                    let (_, d_z_aug) = model.backward(&gen_aug_ctx, &d_pred_aug);
                    let d_blended = style_encoder.backward(&enc_aug_ctx, &d_z_aug);
                    d_pooled.add_assign_scaled(&d_blended, T::one() - lambda);
                }

                // clean-branch backward
                let up_rec = d_pred.scale(w_rec * scale);
                let (_, d_z_clean) = model.backward(&gen_ctx, &up_rec);
                d_pooled.add_assign(&style_encoder.backward(&enc_ctx, &d_z_clean));
                // ground-truth frames are data; their gradient is discarded
                model.pooler.backward(&pooler_ctx, &d_pooled);

                total_sum += sample_total;
            }
            adam.step(model)?;
        }

        let n = data.len() as f64;
        history.push(GenEpochLoss {
            epoch,
            loss_rec: rec_sum / n,
            loss_lip: if epa_steps > 0 { lip_sum / epa_steps as f64 } else { 0.0 },
            loss_style: if epa_steps > 0 { style_sum / epa_steps as f64 } else { 0.0 },
            total: total_sum / n,
        });
    }

    Ok(GenTrainState {
        params: Checkpoint::capture(model),
        adam,
        rng,
        epochs_done: cfg.epochs,
        history,
    })
}
