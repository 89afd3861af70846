//! Analysis modes: static pose matching, range of motion, balance, motion
//! comparison, and the weighted performance score.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinematics::{angle_series, joint_angle, speed_series, AdjacencyMap, FilterConfig};
use crate::normalization::{normalize_pair, NormalizationConfig};
use crate::skeleton::{joint_series, Frame, JointId, MotionStream};

// ---------------------------------------------------------------------------
// Static pose matching

#[derive(Debug, Clone, PartialEq)]
pub struct PoseMatchConfig {
    pub joints: BTreeSet<JointId>,
    pub tolerance_deg: f64,
}

impl PoseMatchConfig {
    pub const DEFAULT_TOLERANCE_DEG: f64 = 10.0;

    pub fn new(joints: impl IntoIterator<Item = JointId>, tolerance_deg: f64) -> Result<Self> {
        let joints: BTreeSet<_> = joints.into_iter().collect();
        if joints.is_empty() {
            return Err(Error::InvalidConfig(
                "pose match needs at least one joint".into(),
            ));
        }
        if !(tolerance_deg > 0.0 && tolerance_deg.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be positive, got {tolerance_deg}"
            )));
        }
        Ok(Self {
            joints,
            tolerance_deg,
        })
    }
}

impl Default for PoseMatchConfig {
    fn default() -> Self {
        use JointId::*;
        Self::new(
            [
                ElbowLeft,
                ElbowRight,
                ShoulderLeft,
                ShoulderRight,
                KneeLeft,
                KneeRight,
            ],
            Self::DEFAULT_TOLERANCE_DEG,
        )
        .expect("default pose config is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoseMatchResult {
    pub per_joint_error_deg: BTreeMap<JointId, f64>,
    pub matched: bool,
}

/// Compares joint angles of `frame` against `reference`; matched when every
/// configured joint lies within tolerance.
pub fn match_pose(
    frame: &Frame,
    reference: &Frame,
    adjacency: &AdjacencyMap,
    config: &PoseMatchConfig,
) -> Result<PoseMatchResult> {
    let mut per_joint_error_deg = BTreeMap::new();
    for &joint in &config.joints {
        let a = joint_angle(frame, joint, adjacency)?;
        let b = joint_angle(reference, joint, adjacency)?;
        per_joint_error_deg.insert(joint, (a - b).abs());
    }
    let matched = per_joint_error_deg
        .values()
        .all(|&e| e <= config.tolerance_deg);
    Ok(PoseMatchResult {
        per_joint_error_deg,
        matched,
    })
}

// ---------------------------------------------------------------------------
// Range of motion

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum JointRegion {
    LumbarSpine,
    Elbow,
    Shoulder,
    Ankle,
}

impl JointRegion {
    /// Region whose standards apply to the angle measured at `joint`.
    pub fn of_joint(joint: JointId) -> Option<JointRegion> {
        use JointId::*;
        match joint {
            SpineMid => Some(JointRegion::LumbarSpine),
            ElbowLeft | ElbowRight => Some(JointRegion::Elbow),
            ShoulderLeft | ShoulderRight => Some(JointRegion::Shoulder),
            AnkleLeft | AnkleRight => Some(JointRegion::Ankle),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum MotionType {
    LateralFlexion,
    HyperExtension,
    Flexion,
    Extension,
    Abduction,
    Adduction,
    Dorsiflexion,
    PlantarFlexion,
}

impl MotionType {
    pub const ALL: [MotionType; 8] = [
        MotionType::LateralFlexion,
        MotionType::HyperExtension,
        MotionType::Flexion,
        MotionType::Extension,
        MotionType::Abduction,
        MotionType::Adduction,
        MotionType::Dorsiflexion,
        MotionType::PlantarFlexion,
    ];
}

impl fmt::Display for MotionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for MotionType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MotionType::ALL
            .iter()
            .copied()
            .find(|m| m.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown motion type `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RomStandard {
    pub region: JointRegion,
    pub motion: MotionType,
    pub standard_deg: f64,
}

const fn rom(region: JointRegion, motion: MotionType, standard_deg: f64) -> RomStandard {
    RomStandard {
        region,
        motion,
        standard_deg,
    }
}

/// Ranges of motion of an average healthy adult (Hamilton, *Kinesiology*).
pub const ROM_STANDARDS: [RomStandard; 10] = {
    use JointRegion::*;
    use MotionType::*;
    [
        rom(LumbarSpine, LateralFlexion, 35.0),
        rom(LumbarSpine, HyperExtension, 20.0),
        rom(Elbow, Flexion, 140.0),
        rom(Elbow, HyperExtension, 10.0),
        rom(Shoulder, Abduction, 180.0),
        rom(Shoulder, Adduction, 50.0),
        rom(Shoulder, Flexion, 180.0),
        rom(Shoulder, Extension, 50.0),
        rom(Ankle, Dorsiflexion, 20.0),
        rom(Ankle, PlantarFlexion, 50.0),
    ]
};

pub fn rom_standard(region: JointRegion, motion: MotionType) -> Option<RomStandard> {
    ROM_STANDARDS
        .iter()
        .copied()
        .find(|s| s.region == region && s.motion == motion)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RomReport {
    pub joint: JointId,
    pub standard: RomStandard,
    pub observed_range_deg: f64,
    pub min_angle_deg: f64,
    pub max_angle_deg: f64,
    pub standard_deg: f64,
    /// Shortfall against the standard; exceeding it is not penalized.
    pub deviation_deg: f64,
}

pub fn rom_analyze(
    stream: &MotionStream,
    target: JointId,
    standard: RomStandard,
    adjacency: &AdjacencyMap,
    filter: FilterConfig,
) -> Result<RomReport> {
    let series = angle_series(stream, target, adjacency, filter)?;
    let (min, max) = series
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.deg), hi.max(s.deg))
        });
    let observed = (max - min).max(0.0);
    Ok(RomReport {
        joint: target,
        standard,
        observed_range_deg: observed,
        min_angle_deg: min,
        max_angle_deg: max,
        standard_deg: standard.standard_deg,
        deviation_deg: (standard.standard_deg - observed).max(0.0),
    })
}

// ---------------------------------------------------------------------------
// Balance

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum JointPair {
    Shoulders,
    Elbows,
    Hips,
    Knees,
    Ankles,
}

impl JointPair {
    pub const ALL: [JointPair; 5] = [
        JointPair::Shoulders,
        JointPair::Elbows,
        JointPair::Hips,
        JointPair::Knees,
        JointPair::Ankles,
    ];

    pub fn joints(self) -> (JointId, JointId) {
        use JointId::*;
        match self {
            JointPair::Shoulders => (ShoulderLeft, ShoulderRight),
            JointPair::Elbows => (ElbowLeft, ElbowRight),
            JointPair::Hips => (HipLeft, HipRight),
            JointPair::Knees => (KneeLeft, KneeRight),
            JointPair::Ankles => (AnkleLeft, AnkleRight),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairImbalance {
    pub pair: JointPair,
    pub vertical_imbalance_m: f64,
    pub depth_imbalance_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceReport {
    pub pairs: Vec<PairImbalance>,
    pub height_m: f64,
    /// Mean of all pair imbalances (vertical and depth) divided by height.
    pub e_b: f64,
}

impl BalanceReport {
    pub fn pair(&self, pair: JointPair) -> Option<&PairImbalance> {
        self.pairs.iter().find(|p| p.pair == pair)
    }

    fn from_pairs(pairs: Vec<PairImbalance>, height_m: f64) -> Self {
        let total: f64 = pairs
            .iter()
            .map(|p| p.vertical_imbalance_m + p.depth_imbalance_m)
            .sum();
        let e_b = total / (2 * pairs.len()) as f64 / height_m;
        Self {
            pairs,
            height_m,
            e_b,
        }
    }
}

fn check_height(height_m: f64) -> Result<()> {
    if height_m > 0.0 && height_m.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveHeight(height_m))
    }
}

/// Per-frame absolute height and depth differences of one left/right pair.
fn pair_offsets(stream: &MotionStream, pair: JointPair) -> Result<Vec<(f64, f64)>> {
    let (l, r) = pair.joints();
    stream
        .frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let a = f.require(l).map_err(|e| e.at_frame(i))?;
            let b = f.require(r).map_err(|e| e.at_frame(i))?;
            Ok(((a.y - b.y).abs(), (a.z - b.z).abs()))
        })
        .collect()
}

/// Mean left/right height (`y`) and depth (`z`) differences of paired joints.
pub fn balance_analyze(stream: &MotionStream, height_m: f64) -> Result<BalanceReport> {
    check_height(height_m)?;
    if stream.is_empty() {
        return Err(Error::EmptySeries);
    }
    let n = stream.len() as f64;
    let pairs = JointPair::ALL
        .iter()
        .map(|&pair| {
            let offsets = pair_offsets(stream, pair)?;
            let (dy, dz) = offsets
                .iter()
                .fold((0.0, 0.0), |(sy, sz), &(y, z)| (sy + y, sz + z));
            Ok(PairImbalance {
                pair,
                vertical_imbalance_m: dy / n,
                depth_imbalance_m: dz / n,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BalanceReport::from_pairs(pairs, height_m))
}

/// Balance error of `test` relative to `reference`: per pair, the mean over
/// frames of how far the test's left/right offsets depart from the
/// reference's offsets at the same frame. Both streams must have equal
/// frame counts (normalize them first).
pub fn balance_deviation(
    reference: &MotionStream,
    test: &MotionStream,
    height_m: f64,
) -> Result<BalanceReport> {
    check_height(height_m)?;
    if reference.is_empty() {
        return Err(Error::EmptySeries);
    }
    if reference.len() != test.len() {
        return Err(Error::FrameCountMismatch {
            reference: reference.len(),
            test: test.len(),
        });
    }
    let n = reference.len() as f64;
    let pairs = JointPair::ALL
        .iter()
        .map(|&pair| {
            let r = pair_offsets(reference, pair)?;
            let t = pair_offsets(test, pair)?;
            let (dy, dz) = r.iter().zip(&t).fold((0.0, 0.0), |(sy, sz), (a, b)| {
                (sy + (b.0 - a.0).abs(), sz + (b.1 - a.1).abs())
            });
            Ok(PairImbalance {
                pair,
                vertical_imbalance_m: dy / n,
                depth_imbalance_m: dz / n,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BalanceReport::from_pairs(pairs, height_m))
}

// ---------------------------------------------------------------------------
// Motion comparison

/// Error traces of one joint, one value per normalized frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointErrors {
    pub joint: JointId,
    pub err_x_m: Vec<f64>,
    pub err_y_m: Vec<f64>,
    pub err_z_m: Vec<f64>,
    /// `|dx| + |dy| + |dz|`.
    pub err_pos_m: Vec<f64>,
    pub err_speed_mps: Vec<f64>,
    pub ref_speed_mps: Vec<f64>,
    pub test_speed_mps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSeries {
    /// Reference timestamps; the common grid after normalization.
    pub t_s: Vec<f64>,
    pub joints: Vec<JointErrors>,
}

impl ErrorSeries {
    pub fn frame_count(&self) -> usize {
        self.t_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_s.is_empty() || self.joints.is_empty()
    }

    pub fn joint(&self, joint: JointId) -> Option<&JointErrors> {
        self.joints.iter().find(|j| j.joint == joint)
    }
}

/// Everything a comparison produces: the normalized pair, the error traces
/// and the balance deviation feeding the score.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub reference: MotionStream,
    pub test: MotionStream,
    pub errors: ErrorSeries,
    pub balance: BalanceReport,
}

/// Per-frame position and speed errors of `relevant_joints` between the
/// normalized reference and test streams.
pub fn compare_motion(
    reference: &MotionStream,
    test: &MotionStream,
    relevant_joints: &BTreeSet<JointId>,
    norm_config: &NormalizationConfig,
    filter: FilterConfig,
) -> Result<ErrorSeries> {
    let (r, t) = normalize_pair(reference, test, norm_config)?;
    errors_between(&r, &t, relevant_joints, filter)
}

/// Runs [`compare_motion`] and also computes the balance deviation on the
/// same normalized pair.
pub fn compare_full(
    reference: &MotionStream,
    test: &MotionStream,
    relevant_joints: &BTreeSet<JointId>,
    norm_config: &NormalizationConfig,
    filter: FilterConfig,
) -> Result<Comparison> {
    let (r, t) = normalize_pair(reference, test, norm_config)?;
    let errors = errors_between(&r, &t, relevant_joints, filter)?;
    let height = reference.resolve_height()?;
    let balance = balance_deviation(&r, &t, height)?;
    Ok(Comparison {
        reference: r,
        test: t,
        errors,
        balance,
    })
}

fn errors_between(
    r: &MotionStream,
    t: &MotionStream,
    relevant_joints: &BTreeSet<JointId>,
    filter: FilterConfig,
) -> Result<ErrorSeries> {
    if relevant_joints.is_empty() {
        return Err(Error::InvalidConfig("no relevant joints selected".into()));
    }
    if r.len() != t.len() {
        return Err(Error::FrameCountMismatch {
            reference: r.len(),
            test: t.len(),
        });
    }
    if r.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: r.len(),
        });
    }
    let joints = relevant_joints
        .iter()
        .map(|&joint| {
            let rs = joint_series(r, joint)?;
            let ts = joint_series(t, joint)?;
            let ref_speed: Vec<f64> = speed_series(&rs, filter)?.iter().map(|s| s.mps).collect();
            let test_speed: Vec<f64> = speed_series(&ts, filter)?.iter().map(|s| s.mps).collect();
            let n = rs.len();
            let mut e = JointErrors {
                joint,
                err_x_m: Vec::with_capacity(n),
                err_y_m: Vec::with_capacity(n),
                err_z_m: Vec::with_capacity(n),
                err_pos_m: Vec::with_capacity(n),
                err_speed_mps: Vec::with_capacity(n),
                ref_speed_mps: Vec::new(),
                test_speed_mps: Vec::new(),
            };
            for ((&(_, a), &(_, b)), (va, vb)) in
                rs.iter().zip(&ts).zip(ref_speed.iter().zip(&test_speed))
            {
                let d = b - a;
                let (dx, dy, dz) = (d.x.abs(), d.y.abs(), d.z.abs());
                e.err_x_m.push(dx);
                e.err_y_m.push(dy);
                e.err_z_m.push(dz);
                e.err_pos_m.push(dx + dy + dz);
                e.err_speed_mps.push((vb - va).abs());
            }
            e.ref_speed_mps = ref_speed;
            e.test_speed_mps = test_speed;
            Ok(e)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorSeries {
        t_s: r.timestamps(),
        joints,
    })
}

// ---------------------------------------------------------------------------
// Performance score

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreWeights {
    pub w_p: f64,
    pub w_s: f64,
    pub w_b: f64,
}

impl ScoreWeights {
    pub fn new(w_p: f64, w_s: f64, w_b: f64) -> Result<Self> {
        let all = [w_p, w_s, w_b];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "weights must be finite and non-negative, got {w_p},{w_s},{w_b}"
            )));
        }
        if all.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidConfig("weights must not all be zero".into()));
        }
        Ok(Self { w_p, w_s, w_b })
    }
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self {
            w_p: 1.0,
            w_s: 1.0,
            w_b: 1.0,
        }
    }
}

impl FromStr for ScoreWeights {
    type Err = String;

    /// Parses `wp,ws,wb`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [p, s, b] => ScoreWeights::new(p, s, b).map_err(|e| e.to_string()),
            _ => Err(format!("expected three comma-separated weights, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerformanceScore {
    pub e_p_m: f64,
    pub e_s_mps: f64,
    pub e_b: f64,
    pub weights: ScoreWeights,
    pub ps: f64,
}

impl PerformanceScore {
    /// Weighted sum of the three error means, divided by three.
    ///
    /// The divisor stays 3 whatever the weights; the terms carry mixed units
    /// (meters, m/s, dimensionless) and the weights are the only means of
    /// balancing them.
    pub fn from_components(e_p_m: f64, e_s_mps: f64, e_b: f64, weights: ScoreWeights) -> Self {
        let ps = (weights.w_p * e_p_m + weights.w_s * e_s_mps + weights.w_b * e_b) / 3.0;
        Self {
            e_p_m,
            e_s_mps,
            e_b,
            weights,
            ps,
        }
    }
}

pub fn performance_score(
    errors: &ErrorSeries,
    balance: &BalanceReport,
    weights: ScoreWeights,
) -> Result<PerformanceScore> {
    if errors.is_empty() {
        return Err(Error::EmptySeries);
    }
    let count = (errors.frame_count() * errors.joints.len()) as f64;
    let e_p: f64 = errors.joints.iter().flat_map(|j| &j.err_pos_m).sum::<f64>() / count;
    let e_s: f64 = errors
        .joints
        .iter()
        .flat_map(|j| &j.err_speed_mps)
        .sum::<f64>()
        / count;
    Ok(PerformanceScore::from_components(
        e_p,
        e_s,
        balance.e_b,
        weights,
    ))
}
