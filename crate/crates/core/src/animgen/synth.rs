//! Synthetic speech features and procedurally styled clips, so generator
//! training is fully self-contained. Speech features are band-limited noise
//! with a few envelope channels standing in for articulation energy; clips
//! combine those envelopes on the articulation channels with a constant
//! style expression on everything else.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::animgen::{AnimationClip, AnimGenError, SpeechFeatureSequence};
use crate::facs::{BlendshapeWeights, BLENDSHAPE_COUNT};
use crate::nn::Tensor;
use crate::scalar::Scalar;

/// Channels driven by speech articulation rather than emotional style, by
/// index in the shipped blendshape order: jawOpen, mouthClose, mouthFunnel,
/// mouthPucker, mouthLowerDownLeft, mouthLowerDownRight.
pub const ARTICULATION_CHANNELS: [usize; 6] = [17, 18, 19, 20, 37, 38];

/// How many leading feature channels carry articulation envelopes.
pub const ENVELOPE_CHANNELS: usize = 5;

/// (envelope index, articulation channel, gain) for clip synthesis.
const ENVELOPE_TO_CHANNEL: [(usize, usize, f64); 6] = [
    (0, 17, 0.8),  // jawOpen
    (1, 19, 0.55), // mouthFunnel
    (2, 20, 0.45), // mouthPucker
    (3, 18, 0.35), // mouthClose
    (4, 37, 0.4),  // mouthLowerDownLeft
    (4, 38, 0.4),  // mouthLowerDownRight
];

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub frames: usize,
    pub feature_dim: usize,
    pub fps: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            frames: 96,
            feature_dim: 16,
            fps: 15.0,
            seed: 0,
        }
    }
}

/// Band-limited noise in [0, 1]: white noise smoothed by a moving average.
fn envelope<T: Scalar>(frames: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    let window = 5usize;
    let raw: Vec<f64> = (0..frames + window).map(|_| rng.gen_range(0.0..1.0)).collect();
    (0..frames)
        .map(|t| {
            let mean = raw[t..t + window].iter().sum::<f64>() / window as f64;
            T::from_f64_lit(mean)
        })
        .collect()
}

/// One synthetic speech feature sequence: envelope channels first, the rest
/// low-amplitude band-limited distractor noise.
pub fn synth_speech_features<T: Scalar>(
    cfg: &SynthConfig,
    rng: &mut ChaCha8Rng,
) -> Result<SpeechFeatureSequence<T>, AnimGenError> {
    assert!(
        cfg.feature_dim > ENVELOPE_CHANNELS,
        "feature_dim must exceed the {ENVELOPE_CHANNELS} envelope channels"
    );
    let mut columns: Vec<Vec<T>> = Vec::with_capacity(cfg.feature_dim);
    for _ in 0..ENVELOPE_CHANNELS {
        columns.push(envelope(cfg.frames, rng));
    }
    let small = T::from_f64_lit(0.2);
    for _ in ENVELOPE_CHANNELS..cfg.feature_dim {
        columns.push(envelope::<T>(cfg.frames, rng).iter().map(|&v| v * small).collect());
    }
    let mut data = Vec::with_capacity(cfg.frames * cfg.feature_dim);
    for t in 0..cfg.frames {
        for col in &columns {
            data.push(col[t]);
        }
    }
    SpeechFeatureSequence::new(Tensor::from_vec(&[cfg.frames, cfg.feature_dim], data)?, cfg.fps)
}

/// Zero a style expression on the articulation channels so speech and style
/// drive disjoint parts of the face.
pub fn mask_articulation<T: Scalar>(style: &BlendshapeWeights<T>) -> BlendshapeWeights<T> {
    let mut v = style.values().to_vec();
    for &c in &ARTICULATION_CHANNELS {
        v[c] = T::zero();
    }
    BlendshapeWeights::from_vec(v).expect("masking keeps values valid")
}

/// The ground-truth clip paired with a speech sequence: articulation
/// channels follow the speech envelopes, every other channel holds the
/// masked style expression.
pub fn clip_for_speech<T: Scalar>(
    speech: &SpeechFeatureSequence<T>,
    style: &BlendshapeWeights<T>,
) -> Result<AnimationClip<T>, AnimGenError> {
    let masked = mask_articulation(style);
    let t = speech.frame_count();
    let mut frames = Tensor::zeros(&[t, BLENDSHAPE_COUNT]);
    for ti in 0..t {
        let row = frames.row_mut(ti);
        row.copy_from_slice(masked.values());
        let feat = speech.features().row(ti);
        for &(env, channel, gain) in &ENVELOPE_TO_CHANNEL {
            row[channel] = crate::scalar::clamp01(feat[env] * T::from_f64_lit(gain));
        }
    }
    AnimationClip::from_tensor_clamped(&frames, speech.fps())
}

/// Paired (speech, clip) data cycling through the given styles.
pub fn synth_paired_dataset<T: Scalar>(
    styles: &[BlendshapeWeights<T>],
    clips: usize,
    cfg: &SynthConfig,
) -> Result<Vec<(SpeechFeatureSequence<T>, AnimationClip<T>)>, AnimGenError> {
    assert!(!styles.is_empty(), "need at least one style");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(clips);
    for i in 0..clips {
        let speech = synth_speech_features(cfg, &mut rng)?;
        let clip = clip_for_speech(&speech, &styles[i % styles.len()])?;
        out.push((speech, clip));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facs::AuBlendshapeMap;
    use crate::tead::toy;

    #[test]
    fn synthetic_speech_has_declared_shape() {
        let cfg = SynthConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = synth_speech_features::<f32>(&cfg, &mut rng).unwrap();
        assert_eq!(s.frame_count(), 96);
        assert_eq!(s.feature_dim(), 16);
        assert_eq!(s.fps(), 15.0);
    }

    #[test]
    fn clip_articulation_follows_envelopes_and_style_elsewhere() {
        let map = AuBlendshapeMap::<f64>::shipped();
        let style = toy::cluster_centroid(0, &map); // happy: smile channels
        let cfg = SynthConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let speech = synth_speech_features::<f64>(&cfg, &mut rng).unwrap();
        let clip = clip_for_speech(&speech, &style).unwrap();
        // smile channels constant at the style value
        for frame in clip.frames() {
            assert_eq!(frame.get(23), style.get(23));
            assert_eq!(frame.get(24), style.get(24));
        }
        // jawOpen tracks envelope 0
        for (ti, frame) in clip.frames().iter().enumerate() {
            let expect = (speech.features().row(ti)[0] * 0.8).clamp(0.0, 1.0);
            assert!((frame.get(17) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn paired_dataset_is_deterministic() {
        let map = AuBlendshapeMap::<f32>::shipped();
        let styles: Vec<_> = (0..2).map(|c| toy::cluster_centroid(c, &map)).collect();
        let cfg = SynthConfig {
            frames: 32,
            ..Default::default()
        };
        let a = synth_paired_dataset(&styles, 4, &cfg).unwrap();
        let b = synth_paired_dataset(&styles, 4, &cfg).unwrap();
        for ((sa, ca), (sb, cb)) in a.iter().zip(&b) {
            assert_eq!(sa.features().data(), sb.features().data());
            assert_eq!(ca, cb);
        }
    }
}
