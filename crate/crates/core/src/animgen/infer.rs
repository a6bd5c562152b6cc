//! Prompt-routed inference: text, precomputed image features, or an explicit
//! expression all map into the joint style space and condition the decoder.

use crate::animgen::{AnimationClip, AnimGenError, GeneratorModel, SpeechFeatureSequence};
use crate::expclip::{ExpClipModel, StyleEmbedding};
use crate::facs::BlendshapeWeights;
use crate::scalar::Scalar;

/// One of the three prompt modalities.
#[derive(Clone, Debug)]
pub enum StylePrompt<'a, T> {
    Text(&'a str),
    ImageFeatures(&'a [T]),
    Expression(&'a BlendshapeWeights<T>),
}

/// Resolve a prompt to its style embedding.
pub fn encode_prompt<T: Scalar>(
    prompt: &StylePrompt<'_, T>,
    expclip: &ExpClipModel<T>,
) -> Result<StyleEmbedding<T>, AnimGenError> {
    let embedding = match prompt {
        StylePrompt::Text(text) => expclip.encode_text(text)?,
        StylePrompt::ImageFeatures(features) => expclip.encode_image_features(features)?,
        StylePrompt::Expression(weights) => expclip.encode_expression(weights),
    };
    Ok(embedding)
}

/// Generate a clip from speech, styled by the prompt.
pub fn infer_from_prompt<T: Scalar>(
    speech: &SpeechFeatureSequence<T>,
    prompt: &StylePrompt<'_, T>,
    expclip: &ExpClipModel<T>,
    generator: &GeneratorModel<T>,
) -> Result<AnimationClip<T>, AnimGenError> {
    let style = encode_prompt(prompt, expclip)?;
    generator.generate(speech, &style)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::animgen::GeneratorModelConfig;
    use crate::expclip::ExpClipModelConfig;
    use crate::nn::Tensor;

    fn setup() -> (ExpClipModel<f64>, GeneratorModel<f64>, SpeechFeatureSequence<f64>) {
        let expclip = ExpClipModel::new(ExpClipModelConfig {
            embed_dim: 16,
            d_model: 8,
            num_heads: 2,
            depth: 1,
            ffn_hidden: 16,
            text_feature_width: 64,
            text_proj_hidden: 32,
            image_feature_width: 12,
            image_proj_hidden: 16,
            seed: 1,
        });
        let generator = GeneratorModel::new(GeneratorModelConfig {
            d_model: 8,
            num_heads: 2,
            depth: 1,
            pooler_depth: 1,
            ffn_hidden: 16,
            feature_dim: 4,
            embed_dim: 16,
            seed: 2,
        });
        let speech =
            SpeechFeatureSequence::new(Tensor::filled(&[6, 4], 0.3), 15.0).unwrap();
        (expclip, generator, speech)
    }

    #[test]
    fn all_three_prompt_routes_produce_clips() {
        let (expclip, generator, speech) = setup();
        let text = infer_from_prompt(&speech, &StylePrompt::Text("quiet joy"), &expclip, &generator)
            .unwrap();
        assert_eq!(text.frame_count(), 6);

        let features = vec![0.25; 12];
        let image = infer_from_prompt(
            &speech,
            &StylePrompt::ImageFeatures(&features),
            &expclip,
            &generator,
        )
        .unwrap();
        assert_eq!(image.frame_count(), 6);

        let weights = BlendshapeWeights::from_vec(vec![0.5; 52]).unwrap();
        let expr = infer_from_prompt(
            &speech,
            &StylePrompt::Expression(&weights),
            &expclip,
            &generator,
        )
        .unwrap();
        assert_eq!(expr.frame_count(), 6);
    }

    #[test]
    fn identical_inputs_give_identical_output() {
        let (expclip, generator, speech) = setup();
        let a = infer_from_prompt(&speech, &StylePrompt::Text("calm"), &expclip, &generator).unwrap();
        let b = infer_from_prompt(&speech, &StylePrompt::Text("calm"), &expclip, &generator).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_text_prompt_is_an_error() {
        let (expclip, generator, speech) = setup();
        assert!(infer_from_prompt(&speech, &StylePrompt::Text("  "), &expclip, &generator).is_err());
    }

    #[test]
    fn wrong_image_feature_width_is_an_error() {
        let (expclip, generator, speech) = setup();
        let features = vec![0.25; 11];
        assert!(infer_from_prompt(
            &speech,
            &StylePrompt::ImageFeatures(&features),
            &expclip,
            &generator
        )
        .is_err());
    }
}
