//! Puts a test stream on the same footing as a reference stream: same body
//! scale, body-centered coordinates and the same number of frames.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::skeleton::{Frame, JointId, MotionStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizationConfig {
    pub origin_joint: JointId,
    pub scale_enabled: bool,
    pub recenter_enabled: bool,
    pub resample_enabled: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self {
            origin_joint: JointId::SpineBase,
            scale_enabled: true,
            recenter_enabled: true,
            resample_enabled: true,
        }
    }
}

/// Ratio of reference height to test height.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct ScaleFactor(f64);

impl ScaleFactor {
    pub fn new(sf: f64) -> Result<Self> {
        if sf > 0.0 && sf.is_finite() {
            Ok(Self(sf))
        } else {
            Err(Error::InvalidConfig(format!(
                "scale factor must be positive, got {sf}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn height_scale_factor(h_ref: f64, h_test: f64) -> Result<ScaleFactor> {
    for h in [h_ref, h_test] {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::NonPositiveHeight(h));
        }
    }
    ScaleFactor::new(h_ref / h_test)
}

/// Multiplies every coordinate by `sf`.
pub fn apply_scale(stream: &MotionStream, sf: ScaleFactor) -> MotionStream {
    let k = sf.value();
    let mut meta = stream.meta.clone();
    meta.provenance.push(format!("scale:{k}"));
    MotionStream::new(
        meta,
        stream
            .frames
            .iter()
            .map(|f| f.map_positions(|p| p * k))
            .collect(),
    )
}

/// Re-expresses every frame relative to the position of `origin_joint` in that frame.
pub fn recenter(stream: &MotionStream, origin_joint: JointId) -> Result<MotionStream> {
    let frames = stream
        .frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let origin = f.require(origin_joint).map_err(|e| e.at_frame(i))?;
            Ok(f.map_positions(|p| p - origin))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut meta = stream.meta.clone();
    meta.provenance.push(format!("recenter:{origin_joint}"));
    Ok(MotionStream::new(meta, frames))
}

/// Linearly interpolates the stream onto `target_count` uniformly spaced
/// timestamps spanning the original first and last timestamps.
///
/// First and last frames are copied verbatim. A joint missing from either
/// bracketing frame is missing from the interpolated frame.
pub fn resample(stream: &MotionStream, target_count: usize) -> Result<MotionStream> {
    let n = stream.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    if target_count < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: target_count,
        });
    }
    let first = &stream.frames[0];
    let last = &stream.frames[n - 1];
    let span = last.t - first.t;
    let step = span / (target_count - 1) as f64;

    let mut frames = Vec::with_capacity(target_count);
    frames.push(first.clone());
    // Index of the left bracketing frame; only ever moves forward.
    let mut left = 0usize;
    for k in 1..target_count - 1 {
        let t = first.t + step * k as f64;
        while left + 2 < n && stream.frames[left + 1].t <= t {
            left += 1;
        }
        let a = &stream.frames[left];
        let b = &stream.frames[left + 1];
        let alpha = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
        frames.push(interpolate(a, b, t, alpha));
    }
    frames.push(last.clone());

    let mut meta = stream.meta.clone();
    meta.provenance
        .push(format!("resample:{n}->{target_count}"));
    if span > 0.0 {
        meta.frame_rate_hz = (target_count - 1) as f64 / span;
    }
    Ok(MotionStream::new(meta, frames))
}

fn interpolate(a: &Frame, b: &Frame, t: f64, alpha: f64) -> Frame {
    let mut out = Frame::new(t);
    for joint in JointId::ALL {
        if let (Some(pa), Some(pb)) = (a.get(joint), b.get(joint)) {
            out.set(joint, pa.lerp(pb, alpha));
        }
    }
    out
}

/// Normalizes a reference/test pair.
///
/// The reference is only recentered. The test stream is scaled by the height
/// ratio, recentered, then resampled to the reference frame count. Each stage
/// can be switched off through `config`.
pub fn normalize_pair(
    reference: &MotionStream,
    test: &MotionStream,
    config: &NormalizationConfig,
) -> Result<(MotionStream, MotionStream)> {
    if reference.is_empty() || test.is_empty() {
        return Err(Error::EmptySeries);
    }

    let mut test_out = test.clone();
    if config.scale_enabled {
        let h_ref = reference
            .resolve_height()
            .map_err(|e| e.in_stage("scale"))?;
        let h_test = test.resolve_height().map_err(|e| e.in_stage("scale"))?;
        let sf = height_scale_factor(h_ref, h_test).map_err(|e| e.in_stage("scale"))?;
        test_out = apply_scale(&test_out, sf);
        test_out.meta.height_m = Some(h_ref);
    }

    let mut ref_out = reference.clone();
    if config.recenter_enabled {
        ref_out = recenter(&ref_out, config.origin_joint)
            .map_err(|e| e.in_stage("recenter reference"))?;
        test_out =
            recenter(&test_out, config.origin_joint).map_err(|e| e.in_stage("recenter test"))?;
    }

    if config.resample_enabled && test_out.len() != ref_out.len() {
        test_out = resample(&test_out, ref_out.len()).map_err(|e| e.in_stage("resample"))?;
    }
    Ok((ref_out, test_out))
}
