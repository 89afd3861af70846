//! Skeleton data model: the 25-joint body, frames, streams and their validation.
//!
//! Coordinates are meters with `y` vertical (up), `z` depth away from the
//! sensor and `x` lateral.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! joints {
    ($($name:ident),+ $(,)?) => {
        /// One of the 25 tracked body joints.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum JointId {
            $($name),+
        }

        impl JointId {
            pub const ALL: [JointId; 25] = [$(JointId::$name),+];

            /// Canonical name used in stream files. Case-sensitive.
            pub fn name(self) -> &'static str {
                match self {
                    $(JointId::$name => stringify!($name)),+
                }
            }
        }
    };
}

joints!(
    SpineBase,
    SpineMid,
    SpineShoulder,
    Neck,
    Head,
    ShoulderLeft,
    ElbowLeft,
    WristLeft,
    HandLeft,
    HandTipLeft,
    ThumbLeft,
    ShoulderRight,
    ElbowRight,
    WristRight,
    HandRight,
    HandTipRight,
    ThumbRight,
    HipLeft,
    KneeLeft,
    AnkleLeft,
    FootLeft,
    HipRight,
    KneeRight,
    AnkleRight,
    FootRight,
);

pub const JOINT_COUNT: usize = JointId::ALL.len();

impl JointId {
    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_name(name: &str) -> Option<JointId> {
        JointId::ALL.iter().copied().find(|j| j.name() == name)
    }
}

impl fmt::Display for JointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for JointId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        JointId::from_name(s).ok_or_else(|| format!("unknown joint name `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3 {
    pub const ORIGIN: Position3 = Position3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Position3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Position3) -> Position3 {
        Position3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Linear interpolation; `alpha = 0` gives `self`, `alpha = 1` gives `other`.
    pub fn lerp(self, other: Position3, alpha: f64) -> Position3 {
        Position3::new(
            self.x + (other.x - self.x) * alpha,
            self.y + (other.y - self.y) * alpha,
            self.z + (other.z - self.z) * alpha,
        )
    }
}

impl Add for Position3 {
    type Output = Position3;
    fn add(self, rhs: Position3) -> Position3 {
        Position3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Position3 {
    type Output = Position3;
    fn sub(self, rhs: Position3) -> Position3 {
        Position3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Position3 {
    type Output = Position3;
    fn mul(self, rhs: f64) -> Position3 {
        Position3::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

/// One time sample of joint positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    joints: [Option<Position3>; JOINT_COUNT],
    /// Joint names read from a file that are not part of the skeleton.
    pub unknown_joints: Vec<String>,
}

impl Frame {
    pub fn new(t: f64) -> Self {
        Self {
            t,
            joints: [None; JOINT_COUNT],
            unknown_joints: Vec::new(),
        }
    }

    pub fn with_joints(t: f64, joints: impl IntoIterator<Item = (JointId, Position3)>) -> Self {
        let mut frame = Frame::new(t);
        for (joint, pos) in joints {
            frame.set(joint, pos);
        }
        frame
    }

    #[inline]
    pub fn get(&self, joint: JointId) -> Option<Position3> {
        self.joints[joint.index()]
    }

    pub fn require(&self, joint: JointId) -> Result<Position3> {
        self.get(joint)
            .ok_or(Error::MissingJoint { joint, frame: None })
    }

    pub fn set(&mut self, joint: JointId, pos: Position3) {
        self.joints[joint.index()] = Some(pos);
    }

    pub fn remove(&mut self, joint: JointId) -> Option<Position3> {
        self.joints[joint.index()].take()
    }

    /// Present joints in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (JointId, Position3)> + '_ {
        JointId::ALL
            .iter()
            .filter_map(move |&j| self.joints[j.index()].map(|p| (j, p)))
    }

    /// Applies `f` to every present joint position.
    pub fn map_positions(&self, mut f: impl FnMut(Position3) -> Position3) -> Frame {
        let mut out = self.clone();
        for slot in out.joints.iter_mut().flatten() {
            *slot = f(*slot);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamMeta {
    pub subject_id: String,
    pub height_m: Option<f64>,
    /// Nominal only; timestamps are authoritative.
    pub frame_rate_hz: f64,
    pub exercise_tag: String,
    /// Transformations applied since the stream was recorded, oldest first.
    pub provenance: Vec<String>,
}

impl StreamMeta {
    pub fn new(subject_id: impl Into<String>, frame_rate_hz: f64) -> Self {
        Self {
            subject_id: subject_id.into(),
            height_m: None,
            frame_rate_hz,
            exercise_tag: String::new(),
            provenance: Vec::new(),
        }
    }
}

pub const MIN_HEIGHT_M: f64 = 0.5;
pub const MAX_HEIGHT_M: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MotionStream {
    pub meta: StreamMeta,
    pub frames: Vec<Frame>,
}

impl MotionStream {
    pub fn new(meta: StreamMeta, frames: Vec<Frame>) -> Self {
        Self { meta, frames }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.t).collect()
    }

    /// Subject height: the metadata value when present, otherwise estimated
    /// from the first frame.
    pub fn resolve_height(&self) -> Result<f64> {
        if let Some(h) = self.meta.height_m {
            return if h > 0.0 && h.is_finite() {
                Ok(h)
            } else {
                Err(Error::NonPositiveHeight(h))
            };
        }
        let first = self.frames.first().ok_or(Error::EmptySeries)?;
        let h = estimate_height(first)?;
        if h > 0.0 {
            Ok(h)
        } else {
            Err(Error::NonPositiveHeight(h))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IssueCode {
    EmptyStream,
    NonMonotoneTime,
    NegativeTime,
    MissingJoint,
    UnknownJoint,
    NonFiniteCoordinate,
    InvalidHeight,
    InvalidFrameRate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    /// `None` for stream-level issues.
    pub frame_index: Option<usize>,
    pub code: IssueCode,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    fn from_issues(issues: Vec<Issue>) -> Self {
        Self {
            ok: issues.is_empty(),
            issues,
        }
    }
}

/// Checks a stream against the full 25-joint skeleton.
pub fn validate_stream(stream: &MotionStream) -> ValidationReport {
    validate_stream_with(stream, &JointId::ALL)
}

/// Checks a stream, requiring only `required` joints in every frame.
pub fn validate_stream_with(stream: &MotionStream, required: &[JointId]) -> ValidationReport {
    let mut issues = Vec::new();
    let stream_issue = |code, detail: String| Issue {
        frame_index: None,
        code,
        detail,
    };

    if let Some(h) = stream.meta.height_m {
        if !(h > MIN_HEIGHT_M && h < MAX_HEIGHT_M) {
            issues.push(stream_issue(
                IssueCode::InvalidHeight,
                format!("height_m {h} outside ({MIN_HEIGHT_M}, {MAX_HEIGHT_M})"),
            ));
        }
    }
    if !(stream.meta.frame_rate_hz > 0.0 && stream.meta.frame_rate_hz.is_finite()) {
        issues.push(stream_issue(
            IssueCode::InvalidFrameRate,
            format!(
                "frame_rate_hz {} is not positive",
                stream.meta.frame_rate_hz
            ),
        ));
    }
    if stream.frames.is_empty() {
        issues.push(stream_issue(
            IssueCode::EmptyStream,
            "stream has no frames".into(),
        ));
    }

    let mut prev_t: Option<f64> = None;
    for (i, frame) in stream.frames.iter().enumerate() {
        let issue = |code, detail: String| Issue {
            frame_index: Some(i),
            code,
            detail,
        };
        if !frame.t.is_finite() {
            issues.push(issue(
                IssueCode::NonMonotoneTime,
                format!("t = {}", frame.t),
            ));
        } else {
            if frame.t < 0.0 {
                issues.push(issue(IssueCode::NegativeTime, format!("t = {}", frame.t)));
            }
            if let Some(p) = prev_t {
                if frame.t <= p {
                    issues.push(issue(
                        IssueCode::NonMonotoneTime,
                        format!("t = {} does not exceed previous {}", frame.t, p),
                    ));
                }
            }
            prev_t = Some(frame.t);
        }
        for &joint in required {
            if frame.get(joint).is_none() {
                issues.push(issue(IssueCode::MissingJoint, joint.name().to_string()));
            }
        }
        for (joint, pos) in frame.iter() {
            if !pos.is_finite() {
                issues.push(issue(
                    IssueCode::NonFiniteCoordinate,
                    joint.name().to_string(),
                ));
            }
        }
        for name in &frame.unknown_joints {
            issues.push(issue(IssueCode::UnknownJoint, name.clone()));
        }
    }
    ValidationReport::from_issues(issues)
}

/// Compensates for the Head joint sitting below the crown of the skull.
pub const CROWN_OFFSET_FACTOR: f64 = 1.06;

/// Standing height from head-to-lowest-foot vertical extent.
///
/// A degenerate pose (head level with the feet) yields `0.0`; callers treat
/// non-positive heights as invalid.
pub fn estimate_height(frame: &Frame) -> Result<f64> {
    let head = frame.require(JointId::Head)?;
    let left = frame.require(JointId::FootLeft)?;
    let right = frame.require(JointId::FootRight)?;
    let extent = head.y - left.y.min(right.y);
    Ok((extent * CROWN_OFFSET_FACTOR).max(0.0))
}

/// Per-frame `(t, position)` samples of one joint.
pub fn joint_series(stream: &MotionStream, joint: JointId) -> Result<Vec<(f64, Position3)>> {
    stream
        .frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            f.get(joint).map(|p| (f.t, p)).ok_or(Error::MissingJoint {
                joint,
                frame: Some(i),
            })
        })
        .collect()
}
