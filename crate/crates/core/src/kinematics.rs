//! Joint angles, joint speeds, and centered moving-average smoothing.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::skeleton::{Frame, JointId, MotionStream, Position3};

/// Limb vectors at or below this length (meters) make an angle undefined.
pub const MIN_LIMB_NORM_M: f64 = 1e-9;

/// Neighbouring joints used to form the two limb vectors at an angle-bearing joint.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMap {
    entries: BTreeMap<JointId, (JointId, JointId)>,
}

impl AdjacencyMap {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, target: JointId, upper: JointId, lower: JointId) -> Result<()> {
        if upper == lower || upper == target || lower == target {
            return Err(Error::InvalidConfig(format!(
                "adjacency for {target} needs three distinct joints, got ({upper}, {lower})"
            )));
        }
        self.entries.insert(target, (upper, lower));
        Ok(())
    }

    pub fn get(&self, target: JointId) -> Option<(JointId, JointId)> {
        self.entries.get(&target).copied()
    }

    pub fn joints(&self) -> impl Iterator<Item = JointId> + '_ {
        self.entries.keys().copied()
    }
}

impl Default for AdjacencyMap {
    fn default() -> Self {
        use JointId::*;
        let table = [
            (ElbowLeft, ShoulderLeft, WristLeft),
            (ElbowRight, ShoulderRight, WristRight),
            (KneeLeft, HipLeft, AnkleLeft),
            (KneeRight, HipRight, AnkleRight),
            (ShoulderLeft, SpineShoulder, ElbowLeft),
            (ShoulderRight, SpineShoulder, ElbowRight),
            (HipLeft, SpineBase, KneeLeft),
            (HipRight, SpineBase, KneeRight),
            (AnkleLeft, KneeLeft, FootLeft),
            (AnkleRight, KneeRight, FootRight),
            (SpineMid, SpineShoulder, SpineBase),
        ];
        let mut map = AdjacencyMap::empty();
        for (target, upper, lower) in table {
            map.insert(target, upper, lower)
                .expect("default adjacency joints are distinct");
        }
        map
    }
}

/// Centered moving average of width `2 * half_width + 1`, cascaded `passes` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FilterConfig {
    pub half_width: usize,
    pub passes: usize,
}

impl FilterConfig {
    pub const DEFAULT_HALF_WIDTH: usize = 2;
    pub const DEFAULT_PASSES: usize = 2;

    pub fn new(half_width: usize, passes: usize) -> Result<Self> {
        if passes == 0 {
            return Err(Error::InvalidConfig(
                "filter passes must be at least 1".into(),
            ));
        }
        Ok(Self { half_width, passes })
    }

    /// A filter that leaves every series untouched.
    pub fn identity() -> Self {
        Self {
            half_width: 0,
            passes: 1,
        }
    }
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            half_width: Self::DEFAULT_HALF_WIDTH,
            passes: Self::DEFAULT_PASSES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngleSample {
    pub t: f64,
    pub deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedSample {
    pub t: f64,
    pub mps: f64,
}

/// Angle in degrees at `target` between the vectors pointing to its upper and
/// lower neighbours.
pub fn joint_angle(frame: &Frame, target: JointId, adjacency: &AdjacencyMap) -> Result<f64> {
    let (upper, lower) = adjacency.get(target).ok_or(Error::NoAdjacency(target))?;
    let center = frame.require(target)?;
    let u = frame.require(upper)? - center;
    let v = frame.require(lower)? - center;
    vector_angle_deg(u, v).ok_or(Error::DegenerateGeometry {
        joint: target,
        frame: None,
    })
}

pub(crate) fn vector_angle_deg(u: Position3, v: Position3) -> Option<f64> {
    let nu = u.norm();
    let nv = v.norm();
    if nu <= MIN_LIMB_NORM_M || nv <= MIN_LIMB_NORM_M {
        return None;
    }
    // atan2 of (|u x v|, u . v) equals the arccos of the normalized dot
    // product but keeps full precision near 0 and 180 degrees.
    Some(u.cross(v).norm().atan2(u.dot(v)).to_degrees())
}

/// Smoothed per-frame angle series of one joint.
pub fn angle_series(
    stream: &MotionStream,
    target: JointId,
    adjacency: &AdjacencyMap,
    filter: FilterConfig,
) -> Result<Vec<AngleSample>> {
    if stream.is_empty() {
        return Err(Error::EmptySeries);
    }
    let raw = stream
        .frames
        .iter()
        .enumerate()
        .map(|(i, f)| joint_angle(f, target, adjacency).map_err(|e| e.at_frame(i)))
        .collect::<Result<Vec<_>>>()?;
    let smoothed = smooth_series(&raw, filter)?;
    Ok(stream
        .frames
        .iter()
        .zip(smoothed)
        .map(|(f, deg)| AngleSample { t: f.t, deg })
        .collect())
}

/// Speed magnitude from central differences (one-sided at the ends),
/// then smoothed.
pub fn speed_series(
    samples: &[(f64, Position3)],
    filter: FilterConfig,
) -> Result<Vec<SpeedSample>> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let rate = |a: usize, b: usize| {
        let (ta, pa) = samples[a];
        let (tb, pb) = samples[b];
        (pb - pa).norm() / (tb - ta)
    };
    let raw: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => rate(0, 1),
            i if i == n - 1 => rate(n - 2, n - 1),
            i => rate(i - 1, i + 1),
        })
        .collect();
    let smoothed = smooth_series(&raw, filter)?;
    Ok(samples
        .iter()
        .zip(smoothed)
        .map(|(&(t, _), mps)| SpeedSample { t, mps })
        .collect())
}

/// Centered moving average with the window clipped to the series bounds,
/// applied `config.passes` times. Output length equals input length.
pub fn smooth_series(values: &[f64], config: FilterConfig) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptySeries);
    }
    if config.passes == 0 {
        return Err(Error::InvalidConfig(
            "filter passes must be at least 1".into(),
        ));
    }
    let mut current = values.to_vec();
    if config.half_width == 0 {
        return Ok(current);
    }
    let mut next = vec![0.0; values.len()];
    for _ in 0..config.passes {
        moving_mean_pass(&current, config.half_width, &mut next);
        std::mem::swap(&mut current, &mut next);
    }
    Ok(current)
}

// Sliding-sum form: each step adds the sample entering the window and drops
// the one leaving it. The running sum is compensated so long series do not
// drift away from a direct summation.
fn moving_mean_pass(input: &[f64], half: usize, out: &mut [f64]) {
    let len = input.len();
    let mut sum = CompensatedSum::default();
    for &x in &input[..(half + 1).min(len)] {
        sum.add(x);
    }
    let mut hi = half.min(len - 1);
    let mut lo = 0usize;
    for (t, slot) in out.iter_mut().enumerate() {
        if t > 0 {
            if t + half < len {
                hi = t + half;
                sum.add(input[hi]);
            }
            if t > half {
                sum.add(-input[lo]);
                lo += 1;
            }
        }
        *slot = sum.value() / (hi - lo + 1) as f64;
    }
}

/// Neumaier summation.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::StreamMeta;

    /// Direct summation over the clipped window for every index and pass.
    fn oracle(values: &[f64], n: usize, passes: usize) -> Vec<f64> {
        let mut cur = values.to_vec();
        for _ in 0..passes {
            cur = (0..cur.len())
                .map(|t| {
                    let lo = t.saturating_sub(n);
                    let hi = (t + n).min(cur.len() - 1);
                    let mut acc = 0.0;
                    for x in &cur[lo..=hi] {
                        acc += x;
                    }
                    acc / (hi - lo + 1) as f64
                })
                .collect();
        }
        cur
    }

    fn arm(shoulder: Position3, elbow: Position3, wrist: Position3) -> Frame {
        Frame::with_joints(
            0.0,
            [
                (JointId::ShoulderLeft, shoulder),
                (JointId::ElbowLeft, elbow),
                (JointId::WristLeft, wrist),
            ],
        )
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn right_angle_straight_and_obtuse() {
        let adj = AdjacencyMap::default();
        let o = Position3::ORIGIN;
        let up = Position3::new(0.0, 1.0, 0.0);
        let f = arm(up, o, Position3::new(1.0, 0.0, 0.0));
        assert!((joint_angle(&f, JointId::ElbowLeft, &adj).unwrap() - 90.0).abs() < 1e-9);
        let f = arm(up, o, Position3::new(0.0, -1.0, 0.0));
        assert!((joint_angle(&f, JointId::ElbowLeft, &adj).unwrap() - 180.0).abs() < 1e-9);
        let f = arm(up, o, Position3::new(3f64.sqrt() / 2.0, -0.5, 0.0));
        assert!((joint_angle(&f, JointId::ElbowLeft, &adj).unwrap() - 120.0).abs() < 1e-9);
    }

    #[test]
    fn angle_errors() {
        let adj = AdjacencyMap::default();
        let o = Position3::ORIGIN;
        let f = arm(Position3::new(0.0, 1.0, 0.0), o, o);
        assert!(matches!(
            joint_angle(&f, JointId::ElbowLeft, &adj),
            Err(Error::DegenerateGeometry { .. })
        ));
        assert!(matches!(
            joint_angle(&f, JointId::Head, &adj),
            Err(Error::NoAdjacency(JointId::Head))
        ));
        assert!(matches!(
            joint_angle(&f, JointId::ElbowRight, &adj),
            Err(Error::MissingJoint { .. })
        ));
    }

    #[test]
    fn adjacency_rejects_repeated_joints() {
        let mut m = AdjacencyMap::empty();
        assert!(m
            .insert(JointId::ElbowLeft, JointId::ElbowLeft, JointId::WristLeft)
            .is_err());
        for target in AdjacencyMap::default().joints() {
            let (u, l) = AdjacencyMap::default().get(target).unwrap();
            assert!(u != l && u != target && l != target);
        }
    }

    #[test]
    fn smoothing_examples() {
        let cfg = |n, p| FilterConfig::new(n, p).unwrap();
        assert_eq!(smooth_series(&[5.0; 4], cfg(1, 1)).unwrap(), vec![5.0; 4]);
        assert_close(
            &smooth_series(&[1.0, 2.0, 3.0, 4.0, 5.0], cfg(1, 1)).unwrap(),
            &[1.5, 2.0, 3.0, 4.0, 4.5],
            1e-12,
        );
        assert_close(
            &smooth_series(&[0.0, 0.0, 3.0, 0.0, 0.0], cfg(1, 1)).unwrap(),
            &[0.0, 1.0, 1.0, 1.0, 0.0],
            1e-12,
        );
        assert_close(
            &smooth_series(&[0.0, 0.0, 3.0, 0.0, 0.0], cfg(1, 2)).unwrap(),
            &[0.5, 2.0 / 3.0, 1.0, 2.0 / 3.0, 0.5],
            1e-12,
        );
        assert!(matches!(
            smooth_series(&[], cfg(1, 1)),
            Err(Error::EmptySeries)
        ));
        assert!(FilterConfig::new(1, 0).is_err());
    }

    #[test]
    fn window_wider_than_series() {
        let v = [1.0, 4.0];
        let out = smooth_series(&v, FilterConfig::new(5, 1).unwrap()).unwrap();
        assert_close(&out, &[2.5, 2.5], 1e-12);
        assert_close(&out, &oracle(&v, 5, 1), 1e-12);
    }

    #[test]
    fn speed_examples() {
        let still: Vec<_> = (0..10)
            .map(|i| (i as f64 * 0.1, Position3::new(0.2, 1.0, 2.0)))
            .collect();
        assert!(speed_series(&still, FilterConfig::default())
            .unwrap()
            .iter()
            .all(|s| s.mps == 0.0));

        let uniform: Vec<_> = (0..4)
            .map(|i| (i as f64, Position3::new(i as f64, 0.0, 0.0)))
            .collect();
        let speeds = speed_series(&uniform, FilterConfig::default()).unwrap();
        assert_eq!(speeds.len(), 4);
        for s in speeds {
            assert!((s.mps - 1.0).abs() < 1e-12);
        }

        assert!(matches!(
            speed_series(&still[..1], FilterConfig::default()),
            Err(Error::TooFewSamples { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn curl_ramp_is_tracked_on_interior_points() {
        let frames = (0..100)
            .map(|i| {
                let deg = 10.0 + 140.0 * i as f64 / 99.0;
                let rad = deg.to_radians();
                let mut f = arm(
                    Position3::new(0.0, 0.3, 0.0),
                    Position3::ORIGIN,
                    Position3::new(0.0, 0.25 * rad.cos(), -0.25 * rad.sin()),
                );
                f.t = i as f64 / 30.0;
                f
            })
            .collect();
        let stream = MotionStream::new(StreamMeta::new("ramp", 30.0), frames);
        let filter = FilterConfig::default();
        let series = angle_series(
            &stream,
            JointId::ElbowLeft,
            &AdjacencyMap::default(),
            filter,
        )
        .unwrap();
        assert_eq!(series.len(), 100);
        let margin = filter.half_width * filter.passes;
        for (i, s) in series
            .iter()
            .enumerate()
            .skip(margin)
            .take(100 - 2 * margin)
        {
            let expected = 10.0 + 140.0 * i as f64 / 99.0;
            assert!((s.deg - expected).abs() < 0.5, "frame {i}: {}", s.deg);
        }
    }

    #[test]
    fn angle_series_reports_degenerate_frame() {
        let frames = (0..6)
            .map(|i| {
                let wrist = if i == 3 {
                    Position3::ORIGIN
                } else {
                    Position3::new(0.2, 0.0, 0.0)
                };
                let mut f = arm(Position3::new(0.0, 0.3, 0.0), Position3::ORIGIN, wrist);
                f.t = i as f64;
                f
            })
            .collect();
        let stream = MotionStream::new(StreamMeta::new("d", 1.0), frames);
        let err = angle_series(
            &stream,
            JointId::ElbowLeft,
            &AdjacencyMap::default(),
            FilterConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::DegenerateGeometry {
                joint: JointId::ElbowLeft,
                frame: Some(3)
            }
        ));
    }

    mod props {
        use super::*;
        use proptest::collection::vec;
        use proptest::prelude::*;

        fn point() -> impl Strategy<Value = Position3> {
            (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0).prop_map(|(x, y, z)| Position3::new(x, y, z))
        }

        proptest! {
            #[test]
            fn matches_direct_summation(
                values in vec(-100.0f64..100.0, 1..200), n in 0usize..6, passes in 1usize..4,
            ) {
                let fast = smooth_series(&values, FilterConfig::new(n, passes).unwrap()).unwrap();
                let slow = oracle(&values, n, passes);
                for (a, b) in fast.iter().zip(&slow) {
                    prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
                }
            }

            #[test]
            fn zero_width_is_identity(values in vec(-1e3f64..1e3, 1..50), passes in 1usize..5) {
                let out = smooth_series(&values, FilterConfig::new(0, passes).unwrap()).unwrap();
                prop_assert_eq!(out, values);
            }

            #[test]
            fn output_stays_within_input_bounds(
                values in vec(-50.0f64..50.0, 1..100), n in 0usize..6, passes in 1usize..4,
            ) {
                let out = smooth_series(&values, FilterConfig::new(n, passes).unwrap()).unwrap();
                let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                for y in out {
                    prop_assert!(y >= lo - 1e-12 && y <= hi + 1e-12);
                }
            }

            #[test]
            fn speed_is_symmetric_under_time_reversal(
                pts in vec(point(), 2..40), steps in vec(0.01f64..0.2, 40),
            ) {
                let mut t = 0.0;
                let samples: Vec<_> = pts.iter().enumerate().map(|(i, &p)| {
                    if i > 0 { t += steps[i]; }
                    (t, p)
                }).collect();
                let end = samples.last().unwrap().0;
                let reversed: Vec<_> = samples.iter().rev().map(|&(t, p)| (end - t, p)).collect();
                let fwd = speed_series(&samples, FilterConfig::default()).unwrap();
                let mut back = speed_series(&reversed, FilterConfig::default()).unwrap();
                back.reverse();
                for (a, b) in fwd.iter().zip(&back) {
                    prop_assert!((a.mps - b.mps).abs() <= 1e-9 * (1.0 + a.mps));
                    prop_assert!(a.mps >= 0.0);
                }
            }

            #[test]
            fn angle_invariant_under_similarity_transforms(
                upper in point(), center in point(), lower in point(),
                shift in point(), scale in 0.1f64..10.0,
                yaw in -3.2f64..3.2, pitch in -3.2f64..3.2,
            ) {
                let adj = AdjacencyMap::default();
                let base = arm(upper, center, lower);
                prop_assume!((upper - center).norm() > 1e-3 && (lower - center).norm() > 1e-3);
                let a0 = joint_angle(&base, JointId::ElbowLeft, &adj).unwrap();
                let (sy, cy) = yaw.sin_cos();
                let (sp, cp) = pitch.sin_cos();
                let rotate = |p: Position3| {
                    let q = Position3::new(cy * p.x + sy * p.z, p.y, -sy * p.x + cy * p.z);
                    Position3::new(q.x, cp * q.y - sp * q.z, sp * q.y + cp * q.z)
                };
                let moved = base.map_positions(|p| rotate(center + (p - center) * scale) + shift);
                let a1 = joint_angle(&moved, JointId::ElbowLeft, &adj).unwrap();
                prop_assert!((a0 - a1).abs() < 1e-6, "{} vs {}", a0, a1);
                prop_assert!((0.0..=180.0).contains(&a0));
            }
        }
    }
}
