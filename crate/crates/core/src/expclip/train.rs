//! Two-stage training. The text stage trains the autoencoder and the text
//! projector against three losses (reconstruction, embedding alignment,
//! cross-modal reconstruction); the image stage finetunes only the image
//! projector. Runs are deterministic under the configured seed, and the
//! optimizer/RNG state can be serialized for exact resume.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expclip::{ExpClipError, ExpClipModel};
use crate::facs::{perturb_blendshapes, BlendshapeWeights};
use crate::nn::{zero_grads, Adam, AdamConfig, Checkpoint, Tensor};
use crate::scalar::Scalar;
use crate::tead::{augment_text, sample_text_view, AugmentOp, StopwordList, SynonymTable, TeadStore};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpClipTrainConfig {
    pub lambda_ae: f64,
    pub lambda_emb: f64,
    pub lambda_cross: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub train_fraction: f64,
    pub text_aug: bool,
    pub bs_aug: bool,
    pub bs_aug_magnitude: f64,
    pub seed: u64,
}

impl Default for ExpClipTrainConfig {
    fn default() -> Self {
        Self {
            lambda_ae: 1.0,
            lambda_emb: 10.0,
            lambda_cross: 10.0,
            lr: 1e-5,
            batch_size: 256,
            epochs: 100,
            train_fraction: 0.9,
            text_aug: true,
            bs_aug: true,
            bs_aug_magnitude: 0.05,
            seed: 0,
        }
    }
}

impl ExpClipTrainConfig {
    /// Desk-scale settings sized for the shipped synthetic corpus.
    pub fn toy() -> Self {
        Self {
            lr: 1e-3,
            batch_size: 32,
            epochs: 200,
            ..Self::default()
        }
    }
}

/// Per-epoch mean losses, unweighted components plus the weighted total.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub loss_ae: f64,
    pub loss_emb: f64,
    pub loss_cross: f64,
    pub total: f64,
}

pub fn history_to_csv(history: &[EpochLoss]) -> String {
    let mut out = String::from("epoch,loss_ae,loss_emb,loss_cross,total\n");
    for e in history {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.epoch, e.loss_ae, e.loss_emb, e.loss_cross, e.total
        ));
    }
    out
}

/// Everything needed to continue a run exactly where it stopped.
#[derive(Clone, Serialize, Deserialize)]
pub struct ExpClipTrainState<T> {
    pub params: Checkpoint<T>,
    pub adam: Adam<T>,
    pub rng: ChaCha8Rng,
    pub epochs_done: usize,
    pub history: Vec<EpochLoss>,
}

const ALL_TEXT_OPS: [AugmentOp; 3] = [
    AugmentOp::StopwordRemoval,
    AugmentOp::SynonymReplace,
    AugmentOp::SentenceShuffle,
];

/// Train the text stage. When `resume` is given, continues that run (the
/// model must already hold the resumed parameters or they are restored from
/// the state); otherwise starts fresh from the config seed.
pub fn train_expclip_text<T: Scalar>(
    model: &mut ExpClipModel<T>,
    store: &TeadStore<T>,
    cfg: &ExpClipTrainConfig,
    resume: Option<ExpClipTrainState<T>>,
) -> Result<ExpClipTrainState<T>, ExpClipError> {
    let (train_ids, _) = store
        .split(cfg.train_fraction)
        .map_err(|e| ExpClipError::Dataset(e.to_string()))?;
    let train: Vec<&crate::tead::Quadruple<T>> = store.subset(&train_ids);
    if train.is_empty() {
        return Err(ExpClipError::EmptyDataset);
    }

    model.set_text_stage_trainability();

    let (mut adam, mut rng, start_epoch, mut history) = match resume {
        Some(state) => {
            state.params.restore(model)?;
            model.set_text_stage_trainability();
            (state.adam, state.rng, state.epochs_done, state.history)
        }
        None => (
            Adam::new(AdamConfig::with_lr(cfg.lr)),
            ChaCha8Rng::seed_from_u64(cfg.seed),
            0,
            Vec::new(),
        ),
    };

    let stopwords = StopwordList::shipped();
    let synonyms = SynonymTable::shipped();
    let magnitude = T::from_f64_lit(cfg.bs_aug_magnitude);
    let (l_ae_w, l_emb_w, l_cross_w) = (
        T::from_f64_lit(cfg.lambda_ae),
        T::from_f64_lit(cfg.lambda_emb),
        T::from_f64_lit(cfg.lambda_cross),
    );

    for epoch in start_epoch..cfg.epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);

        let mut sums = (0.0f64, 0.0f64, 0.0f64);
        for batch in order.chunks(cfg.batch_size.max(1)) {
            zero_grads(model);
            let scale = T::one() / T::from_f64_lit(batch.len() as f64);
            for &idx in batch {
                let q = train[idx];
                let b_input = if cfg.bs_aug {
                    perturb_blendshapes(&q.blendshapes, magnitude, &mut rng)?
                } else {
                    q.blendshapes.clone()
                };
                let view = sample_text_view(q, &mut rng);
                let text = if cfg.text_aug {
                    augment_text(&view, &mut rng, &ALL_TEXT_OPS, &stopwords, &synonyms)
                } else {
                    view
                };

                let (ae, emb, cross) = train_text_sample(
                    model,
                    &b_input,
                    &text,
                    scale,
                    (l_ae_w, l_emb_w, l_cross_w),
                )?;
                sums.0 += ae.as_f64();
                sums.1 += emb.as_f64();
                sums.2 += cross.as_f64();
            }
            adam.step(model)?;
        }

        let n = train.len() as f64;
        let (ae, emb, cross) = (sums.0 / n, sums.1 / n, sums.2 / n);
        history.push(EpochLoss {
            epoch,
            loss_ae: ae,
            loss_emb: emb,
            loss_cross: cross,
            total: cfg.lambda_ae * ae + cfg.lambda_emb * emb + cfg.lambda_cross * cross,
        });
    }

    Ok(ExpClipTrainState {
        params: Checkpoint::capture(model),
        adam,
        rng,
        epochs_done: cfg.epochs,
        history,
    })
}

/// One sample of the text stage: forward all three losses and accumulate
/// scaled gradients. Returns the unweighted component losses.
fn train_text_sample<T: Scalar>(
    model: &mut ExpClipModel<T>,
    weights: &BlendshapeWeights<T>,
    text: &str,
    scale: T,
    (l_ae_w, l_emb_w, l_cross_w): (T, T, T),
) -> Result<(T, T, T), ExpClipError> {
    let b_row = Tensor::row_vector(weights.values().to_vec());

    let (z_e, enc_ctx) = model.encoder.forward(&b_row)?;
    let (recon_raw, dec_ctx) = model.decoder.forward_raw(&z_e)?;
    let (loss_ae, d_recon) = crate::nn::losses::l2_distance(recon_raw.data(), weights.values());

    let feature = model.featurizer.featurize::<T>(text)?;
    let (z_t, proj_ctx) = model.p_text.forward(&Tensor::row_vector(feature))?;
    let (loss_emb, dz_t_emb, dz_e_emb) =
        crate::nn::losses::cosine_embedding_loss(z_t.data(), z_e.data())?;

    let (cross_raw, dec_ctx2) = model.decoder.forward_raw(&z_t)?;
    let (loss_cross, d_cross) = crate::nn::losses::l2_distance(cross_raw.data(), weights.values());

    // backward, scaled per-sample by λ/batch
    let up_cross = Tensor::from_vec(cross_raw.shape(), d_cross)?.scale(l_cross_w * scale);
    let mut dz_t = model.decoder.backward(&dec_ctx2, &up_cross);
    dz_t.add_assign(&Tensor::from_vec(z_t.shape(), dz_t_emb)?.scale(l_emb_w * scale));
    model.p_text.backward(&proj_ctx, &dz_t);

    let up_ae = Tensor::from_vec(recon_raw.shape(), d_recon)?.scale(l_ae_w * scale);
    let mut dz_e = model.decoder.backward(&dec_ctx, &up_ae);
    dz_e.add_assign(&Tensor::from_vec(z_e.shape(), dz_e_emb)?.scale(l_emb_w * scale));
    model.encoder.backward(&enc_ctx, &dz_e);

    Ok((loss_ae, loss_emb, loss_cross))
}

/// Image-stage finetuning on paired (image feature, expression) data. Only
/// the image projector trains; gradients still flow through the frozen
/// decoder for the cross-modal loss.
pub fn train_expclip_image<T: Scalar>(
    model: &mut ExpClipModel<T>,
    pairs: &[(Vec<T>, BlendshapeWeights<T>)],
    cfg: &ExpClipTrainConfig,
) -> Result<Vec<EpochLoss>, ExpClipError> {
    if pairs.is_empty() {
        return Err(ExpClipError::EmptyDataset);
    }
    model.set_image_stage_trainability();
    let mut adam = Adam::new(AdamConfig::with_lr(cfg.lr));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (l_emb_w, l_cross_w) = (
        T::from_f64_lit(cfg.lambda_emb),
        T::from_f64_lit(cfg.lambda_cross),
    );

    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);

        let mut sums = (0.0f64, 0.0f64, 0.0f64);
        for batch in order.chunks(cfg.batch_size.max(1)) {
            zero_grads(model);
            let scale = T::one() / T::from_f64_lit(batch.len() as f64);
            for &idx in batch {
                let (feature, weights) = &pairs[idx];
                if feature.len() != model.config.image_feature_width {
                    return Err(ExpClipError::FeatureWidth {
                        expected: model.config.image_feature_width,
                        got: feature.len(),
                    });
                }
                let z_e = model.encode_expression(weights);
                let (z_i, proj_ctx) = model.p_img.forward(&Tensor::row_vector(feature.clone()))?;
                let (loss_emb, dz_i_emb, _) =
                    crate::nn::losses::cosine_embedding_loss(z_i.data(), z_e.values())?;
                let (raw, dec_ctx) = model.decoder.forward_raw(&z_i)?;
                let (loss_cross, d_raw) =
                    crate::nn::losses::l2_distance(raw.data(), weights.values());

                let up_cross = Tensor::from_vec(raw.shape(), d_raw)?.scale(l_cross_w * scale);
                let mut dz_i = model.decoder.backward(&dec_ctx, &up_cross);
                dz_i.add_assign(&Tensor::from_vec(z_i.shape(), dz_i_emb)?.scale(l_emb_w * scale));
                model.p_img.backward(&proj_ctx, &dz_i);

                sums.0 += model.loss_ae(weights).as_f64();
                sums.1 += loss_emb.as_f64();
                sums.2 += loss_cross.as_f64();
            }
            adam.step(model)?;
        }
        let n = pairs.len() as f64;
        let (ae, emb, cross) = (sums.0 / n, sums.1 / n, sums.2 / n);
        history.push(EpochLoss {
            epoch,
            loss_ae: ae,
            loss_emb: emb,
            loss_cross: cross,
            total: cfg.lambda_ae * ae + cfg.lambda_emb * emb + cfg.lambda_cross * cross,
        });
    }
    Ok(history)
}
