//! Deterministic synthetic exercise recordings with injectable form defects.
//!
//! Every generated stream has the full 25-joint skeleton. Only the arms
//! follow the exercise trajectory; the remaining joints hold a static
//! standing pose scaled to the subject height. The subject stands 2.5 m in
//! front of the sensor facing it, so "forward" is `-z`, and the left side
//! is `-x`.
//!
//! A repetition runs over the whole template duration. Its progress is a
//! raised cosine `s(u) = (1 - cos 2πu) / 2` of the phase `u`, which goes
//! 0 → 1 piecewise-linearly in time with the outbound half taking
//! `up_fraction` of the duration.
//!
//! `BenchPress` is expressed in the lifter's body frame (torso along `+y`),
//! so the bar path runs along `-z` like a standing chest press.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::skeleton::{
    Frame, JointId, MotionStream, Position3, StreamMeta, CROWN_OFFSET_FACTOR, MAX_HEIGHT_M,
    MIN_HEIGHT_M,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ExerciseKind {
    BicepCurl,
    PushPress,
    BenchPress,
}

impl ExerciseKind {
    pub const ALL: [ExerciseKind; 3] = [
        ExerciseKind::BicepCurl,
        ExerciseKind::PushPress,
        ExerciseKind::BenchPress,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ExerciseKind::BicepCurl => "bicep_curl",
            ExerciseKind::PushPress => "push_press",
            ExerciseKind::BenchPress => "bench_press",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        let normalized = tag.replace('-', "_");
        ExerciseKind::ALL
            .into_iter()
            .find(|k| k.tag() == normalized)
    }

    /// Joints whose errors are scored by default for this exercise.
    pub fn relevant_joints(self) -> BTreeSet<JointId> {
        use JointId::*;
        [
            ElbowLeft, ElbowRight, WristLeft, WristRight, HandLeft, HandRight,
        ]
        .into_iter()
        .collect()
    }
}

impl fmt::Display for ExerciseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExerciseTemplate {
    pub kind: ExerciseKind,
    pub duration_s: f64,
    pub frame_rate_hz: f64,
    pub subject_height_m: f64,
    pub subject_id: String,
    /// Elbow angle at the start and end of a curl.
    pub min_deg: f64,
    /// Elbow angle at the midpoint of a curl.
    pub max_deg: f64,
    /// Share of the repetition spent on the outbound half, in (0, 1).
    pub up_fraction: f64,
}

impl ExerciseTemplate {
    pub fn new(kind: ExerciseKind) -> Self {
        Self {
            kind,
            duration_s: 4.0,
            frame_rate_hz: 30.0,
            subject_height_m: 1.8,
            subject_id: "synthetic".to_string(),
            min_deg: 10.0,
            max_deg: 150.0,
            up_fraction: 0.5,
        }
    }

    pub fn bicep_curl() -> Self {
        Self::new(ExerciseKind::BicepCurl)
    }

    pub fn push_press() -> Self {
        Self::new(ExerciseKind::PushPress)
    }

    pub fn bench_press() -> Self {
        Self::new(ExerciseKind::BenchPress)
    }

    pub fn frame_count(&self) -> usize {
        (self.duration_s * self.frame_rate_hz).round() as usize
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidTemplate(msg));
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad(format!(
                "duration_s must be positive, got {}",
                self.duration_s
            ));
        }
        if !(self.frame_rate_hz > 0.0 && self.frame_rate_hz.is_finite()) {
            return bad(format!(
                "frame_rate_hz must be positive, got {}",
                self.frame_rate_hz
            ));
        }
        if !(self.subject_height_m > MIN_HEIGHT_M && self.subject_height_m < MAX_HEIGHT_M) {
            return bad(format!(
                "subject_height_m must lie in ({MIN_HEIGHT_M}, {MAX_HEIGHT_M}), got {}",
                self.subject_height_m
            ));
        }
        if !(0.0..=180.0).contains(&self.min_deg)
            || !(0.0..=180.0).contains(&self.max_deg)
            || self.min_deg >= self.max_deg
        {
            return bad(format!(
                "angle bounds must satisfy 0 <= min < max <= 180, got {}..{}",
                self.min_deg, self.max_deg
            ));
        }
        if !(self.up_fraction > 0.0 && self.up_fraction < 1.0) {
            return bad(format!(
                "up_fraction must lie in (0, 1), got {}",
                self.up_fraction
            ));
        }
        if self.frame_count() < 2 {
            return bad("template yields fewer than 2 frames".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DefectKind {
    /// Over-reach of the motion extreme, as a fraction of the nominal travel.
    Amplitude,
    /// Outward drift of the right hand off the motion plane, meters at the extreme.
    LateralDrift,
    /// Rushed outbound half: its share of the duration shrinks by this fraction.
    Tempo,
    /// Left shoulder raised by this many meters.
    Asymmetry,
}

impl DefectKind {
    pub const ALL: [DefectKind; 4] = [
        DefectKind::Amplitude,
        DefectKind::LateralDrift,
        DefectKind::Tempo,
        DefectKind::Asymmetry,
    ];

    /// The only joints this defect may move.
    pub fn affected_joints(self) -> BTreeSet<JointId> {
        use JointId::*;
        let set: &[JointId] = match self {
            DefectKind::Amplitude | DefectKind::Tempo => &ARM_CHAIN,
            DefectKind::LateralDrift => &[WristRight, HandRight, HandTipRight, ThumbRight],
            DefectKind::Asymmetry => &[ShoulderLeft],
        };
        set.iter().copied().collect()
    }
}

impl FromStr for DefectKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "amplitude" => Ok(DefectKind::Amplitude),
            "lateral-drift" | "drift" => Ok(DefectKind::LateralDrift),
            "tempo" => Ok(DefectKind::Tempo),
            "asymmetry" => Ok(DefectKind::Asymmetry),
            _ => Err(format!("unknown defect kind `{s}`")),
        }
    }
}

const ARM_CHAIN: [JointId; 10] = {
    use JointId::*;
    [
        ElbowLeft,
        WristLeft,
        HandLeft,
        HandTipLeft,
        ThumbLeft,
        ElbowRight,
        WristRight,
        HandRight,
        HandTipRight,
        ThumbRight,
    ]
};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DefectSpec {
    pub amplitude_error: f64,
    pub lateral_drift_m: f64,
    pub tempo_error: f64,
    pub asymmetry_m: f64,
    pub noise_sigma_m: f64,
}

impl DefectSpec {
    /// Sensor flicker used when a caller asks for "realistic" noise.
    pub const DEFAULT_NOISE_SIGMA_M: f64 = 0.005;

    pub fn none() -> Self {
        Self::default()
    }

    pub fn get(&self, kind: DefectKind) -> f64 {
        match kind {
            DefectKind::Amplitude => self.amplitude_error,
            DefectKind::LateralDrift => self.lateral_drift_m,
            DefectKind::Tempo => self.tempo_error,
            DefectKind::Asymmetry => self.asymmetry_m,
        }
    }

    pub fn with(mut self, kind: DefectKind, magnitude: f64) -> Self {
        match kind {
            DefectKind::Amplitude => self.amplitude_error = magnitude,
            DefectKind::LateralDrift => self.lateral_drift_m = magnitude,
            DefectKind::Tempo => self.tempo_error = magnitude,
            DefectKind::Asymmetry => self.asymmetry_m = magnitude,
        }
        self
    }

    fn validate(&self) -> Result<()> {
        let values = [
            ("amplitude_error", self.amplitude_error),
            ("lateral_drift_m", self.lateral_drift_m),
            ("tempo_error", self.tempo_error),
            ("asymmetry_m", self.asymmetry_m),
            ("noise_sigma_m", self.noise_sigma_m),
        ];
        for (name, v) in values {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidTemplate(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        if self.tempo_error >= 1.0 {
            return Err(Error::InvalidTemplate(format!(
                "tempo_error must be below 1, got {}",
                self.tempo_error
            )));
        }
        Ok(())
    }
}

/// Body proportions as fractions of standing height.
mod body {
    pub const HEAD_Y: f64 = 1.0 / super::CROWN_OFFSET_FACTOR;
    pub const NECK_Y: f64 = 0.860;
    pub const SPINE_SHOULDER_Y: f64 = 0.818;
    pub const SPINE_MID_Y: f64 = 0.680;
    pub const SPINE_BASE_Y: f64 = 0.530;
    pub const SHOULDER_X: f64 = 0.130;
    pub const HIP_X: f64 = 0.090;
    pub const HIP_Y: f64 = 0.520;
    pub const KNEE_Y: f64 = 0.285;
    pub const ANKLE_Y: f64 = 0.045;
    pub const FOOT_FORWARD: f64 = 0.07;
    pub const UPPER_ARM: f64 = 0.186;
    pub const FOREARM: f64 = 0.146;
    pub const HAND: f64 = 0.040;
    pub const HAND_TIP: f64 = 0.085;
    pub const THUMB_INWARD: f64 = 0.020;
    /// Subject distance from the sensor, meters.
    pub const DEPTH_M: f64 = 2.5;
}

/// Wrist endpoints relative to the shoulder, as fractions of height, `(y, z)`.
fn press_path(kind: ExerciseKind) -> ((f64, f64), (f64, f64)) {
    match kind {
        ExerciseKind::PushPress => ((0.02, -0.10), (0.25, -0.03)),
        ExerciseKind::BenchPress => ((-0.03, -0.06), (-0.01, -0.26)),
        ExerciseKind::BicepCurl => unreachable!("curls are angle-driven"),
    }
}

/// Phase in [0, 1] at normalized time `tau`, with the outbound half taking
/// `up_share` of the duration.
pub fn phase(tau: f64, up_share: f64) -> f64 {
    if tau < up_share {
        0.5 * tau / up_share
    } else {
        0.5 + 0.5 * (tau - up_share) / (1.0 - up_share)
    }
}

/// Raised-cosine progress: 0 at both ends of the repetition, 1 at mid-phase.
pub fn progress(u: f64) -> f64 {
    0.5 * (1.0 - (2.0 * PI * u).cos())
}

/// Elbow angle of a curl at time `t`, before clamping to [0, 180].
pub fn curl_angle_deg(template: &ExerciseTemplate, defects: &DefectSpec, t: f64) -> f64 {
    let s = progress(phase(
        t / template.duration_s,
        template.up_fraction * (1.0 - defects.tempo_error),
    ));
    template.min_deg + (template.max_deg - template.min_deg) * (1.0 + defects.amplitude_error) * s
}

/// Generates a full skeleton stream of `template`, perturbed by `defects`.
pub fn generate(
    template: &ExerciseTemplate,
    defects: &DefectSpec,
    seed: u64,
) -> Result<MotionStream> {
    template.validate()?;
    defects.validate()?;

    let h = template.subject_height_m;
    let count = template.frame_count();
    let up_share = template.up_fraction * (1.0 - defects.tempo_error);
    let rest = rest_pose(h);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    let mut frames = Vec::with_capacity(count);
    for i in 0..count {
        let t = i as f64 / template.frame_rate_hz;
        let s = progress(phase(t / template.duration_s, up_share));
        let mut frame = rest.clone();
        frame.t = t;

        for side in [Side::Left, Side::Right] {
            let shoulder = frame.get(side.shoulder()).expect("rest pose is complete");
            let arm = match template.kind {
                ExerciseKind::BicepCurl => {
                    let deg = curl_angle_deg(template, defects, t).clamp(0.0, 180.0);
                    curl_arm(shoulder, deg, h)
                }
                kind => {
                    let ((y0, z0), (y1, z1)) = press_path(kind);
                    let reach = (1.0 + defects.amplitude_error) * s;
                    let wrist = shoulder
                        + Position3::new(0.0, y0 + (y1 - y0) * reach, z0 + (z1 - z0) * reach) * h;
                    press_arm(shoulder, wrist, h)
                }
            };
            arm.write(&mut frame, side, h);
        }

        if defects.lateral_drift_m > 0.0 {
            let drift = Position3::new(defects.lateral_drift_m * s, 0.0, 0.0);
            for joint in DefectKind::LateralDrift.affected_joints() {
                let p = frame.get(joint).expect("rest pose is complete");
                frame.set(joint, p + drift);
            }
        }
        if defects.asymmetry_m > 0.0 {
            let p = frame
                .get(JointId::ShoulderLeft)
                .expect("rest pose is complete");
            frame.set(
                JointId::ShoulderLeft,
                p + Position3::new(0.0, defects.asymmetry_m, 0.0),
            );
        }
        if defects.noise_sigma_m > 0.0 {
            for joint in JointId::ALL {
                let jitter = Position3::new(
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                ) * defects.noise_sigma_m;
                let p = frame.get(joint).expect("rest pose is complete");
                frame.set(joint, p + jitter);
            }
        }
        frames.push(frame);
    }

    let mut meta = StreamMeta::new(template.subject_id.clone(), template.frame_rate_hz);
    meta.height_m = Some(h);
    meta.exercise_tag = template.kind.tag().to_string();
    Ok(MotionStream::new(meta, frames))
}

/// One stream per magnitude of `kind`, all sharing `base`'s other settings
/// and the same noise realization.
pub fn defect_ladder(
    template: &ExerciseTemplate,
    base: &DefectSpec,
    kind: DefectKind,
    magnitudes: &[f64],
    seed: u64,
) -> Result<Vec<MotionStream>> {
    if magnitudes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "defect magnitudes must be strictly increasing".into(),
        ));
    }
    magnitudes
        .iter()
        .map(|&m| generate(template, &base.with(kind, m), seed))
        .collect()
}

#[derive(Debug, Clone, Copy)]
enum Side {
    Left,
    Right,
}

impl Side {
    /// Sign of the lateral coordinate on this side.
    fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }

    fn shoulder(self) -> JointId {
        match self {
            Side::Left => JointId::ShoulderLeft,
            Side::Right => JointId::ShoulderRight,
        }
    }

    fn chain(self) -> [JointId; 5] {
        use JointId::*;
        match self {
            Side::Left => [ElbowLeft, WristLeft, HandLeft, HandTipLeft, ThumbLeft],
            Side::Right => [ElbowRight, WristRight, HandRight, HandTipRight, ThumbRight],
        }
    }
}

struct Arm {
    elbow: Position3,
    wrist: Position3,
    /// Unit direction from elbow toward wrist.
    forearm_dir: Position3,
}

impl Arm {
    fn write(&self, frame: &mut Frame, side: Side, h: f64) {
        let [elbow, wrist, hand, tip, thumb] = side.chain();
        let hand_pos = self.wrist + self.forearm_dir * (body::HAND * h);
        frame.set(elbow, self.elbow);
        frame.set(wrist, self.wrist);
        frame.set(hand, hand_pos);
        frame.set(tip, self.wrist + self.forearm_dir * (body::HAND_TIP * h));
        frame.set(
            thumb,
            hand_pos + Position3::new(-side.sign() * body::THUMB_INWARD * h, 0.0, 0.0),
        );
    }
}

/// Upper arm hangs straight down; the forearm swings forward so that the
/// elbow angle equals `deg`.
fn curl_arm(shoulder: Position3, deg: f64, h: f64) -> Arm {
    let elbow = shoulder - Position3::new(0.0, body::UPPER_ARM * h, 0.0);
    let r = deg.to_radians();
    let dir = Position3::new(0.0, r.cos(), -r.sin());
    Arm {
        elbow,
        wrist: elbow + dir * (body::FOREARM * h),
        forearm_dir: dir,
    }
}

/// Two-link placement of the elbow in the sagittal plane for a given wrist
/// position, bending the elbow downward.
fn press_arm(shoulder: Position3, wrist: Position3, h: f64) -> Arm {
    let upper = body::UPPER_ARM * h;
    let fore = body::FOREARM * h;
    let to_wrist = wrist - shoulder;
    let d = to_wrist.norm();
    let axis = to_wrist * (1.0 / d);
    // Perpendicular to the shoulder-wrist line in the y-z plane, pointing down.
    let mut normal = Position3::new(0.0, -axis.z, axis.y);
    if normal.y > 0.0 {
        normal = normal * -1.0;
    }
    let along = ((upper * upper - fore * fore + d * d) / (2.0 * d)).clamp(-upper, upper);
    let off = (upper * upper - along * along).max(0.0).sqrt();
    let elbow = shoulder + axis * along + normal * off;
    let forearm = wrist - elbow;
    Arm {
        elbow,
        wrist,
        forearm_dir: forearm * (1.0 / forearm.norm()),
    }
}

fn rest_pose(h: f64) -> Frame {
    use body::*;
    use JointId::*;
    let at = |x: f64, y: f64, z: f64| Position3::new(x * h, y * h, z * h + DEPTH_M);
    let mut f = Frame::with_joints(
        0.0,
        [
            (SpineBase, at(0.0, SPINE_BASE_Y, 0.0)),
            (SpineMid, at(0.0, SPINE_MID_Y, 0.0)),
            (SpineShoulder, at(0.0, SPINE_SHOULDER_Y, 0.0)),
            (Neck, at(0.0, NECK_Y, 0.0)),
            (Head, at(0.0, HEAD_Y, 0.0)),
        ],
    );
    for side in [Side::Left, Side::Right] {
        let sx = side.sign();
        let (hip, knee, ankle, foot) = match side {
            Side::Left => (HipLeft, KneeLeft, AnkleLeft, FootLeft),
            Side::Right => (HipRight, KneeRight, AnkleRight, FootRight),
        };
        f.set(side.shoulder(), at(sx * SHOULDER_X, SPINE_SHOULDER_Y, 0.0));
        f.set(hip, at(sx * HIP_X, HIP_Y, 0.0));
        f.set(knee, at(sx * HIP_X, KNEE_Y, -0.01));
        f.set(ankle, at(sx * HIP_X, ANKLE_Y, 0.0));
        f.set(foot, at(sx * HIP_X, 0.0, -FOOT_FORWARD));
        // Arms hang straight until the exercise places them.
        let shoulder = f.get(side.shoulder()).unwrap();
        curl_arm(shoulder, 180.0, h).write(&mut f, side, h);
    }
    f
}
