//! Animation clips and speech feature sequences, with their file formats.
//!
//! Speech features: CSV whose first line is the header `T,F,fps`, followed by
//! T rows of F comma-separated reals.
//! Animation: CSV with an `# fps=...` comment row, a header row of the 52
//! blendshape names, one frame per line; or a JSONL variant with a leading
//! metadata line and one `{"frame": i, "b": [...]}` object per frame.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::animgen::AnimGenError;
use crate::facs::{BlendshapeWeights, BLENDSHAPE_COUNT};
use crate::nn::Tensor;
use crate::scalar::Scalar;

/// A T x 52 blendshape sequence at a fixed frame rate.
#[derive(Clone, Debug, PartialEq)]
pub struct AnimationClip<T> {
    frames: Vec<BlendshapeWeights<T>>,
    fps: f64,
}

impl<T: Scalar> AnimationClip<T> {
    pub fn new(frames: Vec<BlendshapeWeights<T>>, fps: f64) -> Result<Self, AnimGenError> {
        if frames.is_empty() {
            return Err(AnimGenError::EmptyClip);
        }
        if !(fps > 0.0) {
            return Err(AnimGenError::BadFps(fps));
        }
        Ok(Self { frames, fps })
    }

    pub fn frames(&self) -> &[BlendshapeWeights<T>] {
        &self.frames
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    /// Frames as a [T, 52] tensor.
    pub fn to_tensor(&self) -> Tensor<T> {
        let mut data = Vec::with_capacity(self.frames.len() * BLENDSHAPE_COUNT);
        for f in &self.frames {
            data.extend_from_slice(f.values());
        }
        Tensor::from_vec(&[self.frames.len(), BLENDSHAPE_COUNT], data)
            .expect("frame data is rectangular")
    }

    /// Build from a [T, 52] tensor, clamping each entry into [0, 1].
    pub fn from_tensor_clamped(tensor: &Tensor<T>, fps: f64) -> Result<Self, AnimGenError> {
        let (t, c) = tensor.dims2();
        if c != BLENDSHAPE_COUNT {
            return Err(AnimGenError::ChannelCount(c));
        }
        let mut frames = Vec::with_capacity(t);
        for i in 0..t {
            frames.push(
                BlendshapeWeights::from_vec_clamped(tensor.row(i).to_vec())
                    .expect("row length checked"),
            );
        }
        Self::new(frames, fps)
    }

    /// Contiguous sub-clip starting at `offset`, `len` frames long.
    pub fn window(&self, offset: usize, len: usize) -> Result<Self, AnimGenError> {
        if offset + len > self.frames.len() {
            return Err(AnimGenError::WindowOutOfRange {
                offset,
                len,
                frames: self.frames.len(),
            });
        }
        Self::new(self.frames[offset..offset + len].to_vec(), self.fps)
    }

    pub fn save_csv(&self, path: &Path, bs_names: &[String]) -> Result<(), AnimGenError> {
        let file = fs::File::create(path).map_err(|e| AnimGenError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        let mut w = BufWriter::new(file);
        let write_err = |e: std::io::Error| AnimGenError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        };
        writeln!(w, "# fps={}", self.fps).map_err(write_err)?;
        writeln!(w, "{}", bs_names.join(",")).map_err(write_err)?;
        for frame in &self.frames {
            let row: Vec<String> = frame.values().iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", row.join(",")).map_err(write_err)?;
        }
        w.flush().map_err(write_err)
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<(), AnimGenError> {
        #[derive(Serialize)]
        struct Meta {
            fps: f64,
            frames: usize,
        }
        #[derive(Serialize)]
        struct Row<'a, T> {
            frame: usize,
            b: &'a [T],
        }
        let file = fs::File::create(path).map_err(|e| AnimGenError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        let mut w = BufWriter::new(file);
        let write_err = |e: std::io::Error| AnimGenError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        };
        let meta = serde_json::to_string(&Meta {
            fps: self.fps,
            frames: self.frames.len(),
        })
        .expect("meta serializes");
        writeln!(w, "{meta}").map_err(write_err)?;
        for (i, frame) in self.frames.iter().enumerate() {
            let row = serde_json::to_string(&Row {
                frame: i,
                b: frame.values(),
            })
            .expect("frame serializes");
            writeln!(w, "{row}").map_err(write_err)?;
        }
        w.flush().map_err(write_err)
    }
}

/// T x F contextualized speech features aligned to a frame rate.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeechFeatureSequence<T> {
    features: Tensor<T>,
    fps: f64,
}

impl<T: Scalar> SpeechFeatureSequence<T> {
    pub fn new(features: Tensor<T>, fps: f64) -> Result<Self, AnimGenError> {
        let (t, _) = features.dims2();
        if t == 0 {
            return Err(AnimGenError::EmptyClip);
        }
        if !(fps > 0.0) {
            return Err(AnimGenError::BadFps(fps));
        }
        features.check_finite("speech features")?;
        Ok(Self { features, fps })
    }

    pub fn features(&self) -> &Tensor<T> {
        &self.features
    }

    pub fn frame_count(&self) -> usize {
        self.features.dims2().0
    }

    pub fn feature_dim(&self) -> usize {
        self.features.dims2().1
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn window(&self, offset: usize, len: usize) -> Result<Self, AnimGenError> {
        let (t, f) = self.features.dims2();
        if offset + len > t {
            return Err(AnimGenError::WindowOutOfRange {
                offset,
                len,
                frames: t,
            });
        }
        let mut data = Vec::with_capacity(len * f);
        for i in offset..offset + len {
            data.extend_from_slice(self.features.row(i));
        }
        Ok(Self {
            features: Tensor::from_vec(&[len, f], data).expect("window is rectangular"),
            fps: self.fps,
        })
    }

    /// Linear-interpolation resample onto a target frame rate. The new frame
    /// count is round(T * target / source).
    pub fn resample(&self, target_fps: f64) -> Result<Self, AnimGenError> {
        if !(target_fps > 0.0) {
            return Err(AnimGenError::BadFps(target_fps));
        }
        if (target_fps - self.fps).abs() < 1e-12 {
            return Ok(self.clone());
        }
        let (t, f) = self.features.dims2();
        let new_t = ((t as f64) * target_fps / self.fps).round().max(1.0) as usize;
        let mut data = Vec::with_capacity(new_t * f);
        for i in 0..new_t {
            // position in source frames for the i-th resampled frame
            let src_pos = if new_t == 1 {
                0.0
            } else {
                (i as f64) * ((t - 1) as f64) / ((new_t - 1) as f64)
            };
            let lo = src_pos.floor() as usize;
            let hi = src_pos.ceil().min((t - 1) as f64) as usize;
            let frac = T::from_f64_lit(src_pos - lo as f64);
            let row_lo = self.features.row(lo);
            let row_hi = self.features.row(hi);
            for c in 0..f {
                data.push(row_lo[c] + frac * (row_hi[c] - row_lo[c]));
            }
        }
        Ok(Self {
            features: Tensor::from_vec(&[new_t, f], data).expect("resample is rectangular"),
            fps: target_fps,
        })
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), AnimGenError> {
        let file = fs::File::create(path).map_err(|e| AnimGenError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        let mut w = BufWriter::new(file);
        let write_err = |e: std::io::Error| AnimGenError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        };
        let (t, f) = self.features.dims2();
        writeln!(w, "{t},{f},{}", self.fps).map_err(write_err)?;
        for i in 0..t {
            let row: Vec<String> = self.features.row(i).iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", row.join(",")).map_err(write_err)?;
        }
        w.flush().map_err(write_err)
    }
}

/// Load a speech feature file, validating the declared shape.
pub fn load_speech_features<T: Scalar>(path: &Path) -> Result<SpeechFeatureSequence<T>, AnimGenError> {
    let text = fs::read_to_string(path).map_err(|e| AnimGenError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    parse_speech_features(&text).map_err(|e| match e {
        AnimGenError::Parse(detail) => AnimGenError::Io {
            path: path.display().to_string(),
            detail,
        },
        other => other,
    })
}

pub fn parse_speech_features<T: Scalar>(text: &str) -> Result<SpeechFeatureSequence<T>, AnimGenError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| AnimGenError::Parse("empty file".into()))?;
    let parts: Vec<&str> = header.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(AnimGenError::Parse(format!(
            "header must be 'T,F,fps', got '{header}'"
        )));
    }
    let t: usize = parts[0]
        .parse()
        .map_err(|_| AnimGenError::Parse(format!("bad frame count '{}'", parts[0])))?;
    let f: usize = parts[1]
        .parse()
        .map_err(|_| AnimGenError::Parse(format!("bad feature width '{}'", parts[1])))?;
    let fps: f64 = parts[2]
        .parse()
        .map_err(|_| AnimGenError::Parse(format!("bad fps '{}'", parts[2])))?;

    let mut data = Vec::with_capacity(t * f);
    let mut rows = 0usize;
    for line in lines {
        let values: Vec<&str> = line.split(',').map(str::trim).collect();
        if values.len() != f {
            return Err(AnimGenError::Parse(format!(
                "row {} has {} values, header declares {f}",
                rows + 1,
                values.len()
            )));
        }
        for v in values {
            let parsed: f64 = v
                .parse()
                .map_err(|_| AnimGenError::Parse(format!("bad number '{v}'")))?;
            data.push(T::from_f64_lit(parsed));
        }
        rows += 1;
    }
    if rows != t {
        return Err(AnimGenError::Parse(format!(
            "{rows} data rows, header declares {t}"
        )));
    }
    let features = Tensor::from_vec(&[t, f], data)?;
    SpeechFeatureSequence::new(features, fps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_features(t: usize, f: usize, fps: f64) -> SpeechFeatureSequence<f64> {
        let data: Vec<f64> = (0..t * f).map(|i| (i / f) as f64).collect();
        SpeechFeatureSequence::new(Tensor::from_vec(&[t, f], data).unwrap(), fps).unwrap()
    }

    #[test]
    fn speech_csv_round_trip() {
        let dir = tempfile::TempDir::new().unwrap();
        let path = dir.path().join("feat.csv");
        let seq = ramp_features(64, 32, 15.0);
        seq.save_csv(&path).unwrap();
        let loaded = load_speech_features::<f64>(&path).unwrap();
        assert_eq!(loaded.frame_count(), 64);
        assert_eq!(loaded.feature_dim(), 32);
        assert_eq!(loaded.fps(), 15.0);
        assert_eq!(loaded.features().data(), seq.features().data());
    }

    #[test]
    fn missing_header_is_an_error() {
        assert!(matches!(
            parse_speech_features::<f64>("0.5,0.25\n0.5,0.25\n"),
            Err(AnimGenError::Parse(_))
        ));
    }

    #[test]
    fn wrong_row_width_is_an_error() {
        let text = "2,3,15\n0,0,0\n0,0\n";
        assert!(matches!(
            parse_speech_features::<f64>(text),
            Err(AnimGenError::Parse(_))
        ));
    }

    #[test]
    fn resample_halves_frames_when_fps_halves() {
        let seq = ramp_features(64, 4, 30.0);
        let resampled = seq.resample(15.0).unwrap();
        assert_eq!(resampled.frame_count(), 32);
        assert_eq!(resampled.fps(), 15.0);
        // the ramp stays a ramp: endpoints preserved
        assert_eq!(resampled.features().row(0)[0], 0.0);
        assert_eq!(resampled.features().row(31)[0], 63.0);
    }

    #[test]
    fn resample_same_fps_is_identity() {
        let seq = ramp_features(10, 2, 15.0);
        let out = seq.resample(15.0).unwrap();
        assert_eq!(out.features().data(), seq.features().data());
    }

    #[test]
    fn clip_tensor_round_trip_clamps() {
        let mut t = Tensor::<f64>::zeros(&[3, 52]);
        t.data_mut()[0] = -0.5;
        t.data_mut()[53] = 1.5;
        let clip = AnimationClip::from_tensor_clamped(&t, 15.0).unwrap();
        assert_eq!(clip.frames()[0].get(0), 0.0);
        assert_eq!(clip.frames()[1].get(1), 1.0);
        assert_eq!(clip.frame_count(), 3);
    }

    #[test]
    fn clip_csv_has_fps_comment_and_names_header() {
        let dir = tempfile::TempDir::new().unwrap();
        let path = dir.path().join("anim.csv");
        let clip = AnimationClip::new(vec![BlendshapeWeights::<f64>::zeros(); 2], 15.0).unwrap();
        let names: Vec<String> = (0..52).map(|i| format!("bs{i}")).collect();
        clip.save_csv(&path, &names).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# fps=15");
        assert!(lines.next().unwrap().starts_with("bs0,bs1,"));
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn window_bounds_are_checked() {
        let clip = AnimationClip::new(vec![BlendshapeWeights::<f64>::zeros(); 10], 15.0).unwrap();
        assert!(clip.window(5, 6).is_err());
        assert_eq!(clip.window(5, 5).unwrap().frame_count(), 5);
    }
}
