//! JSON report envelopes. Field order is fixed by struct declaration order
//! and maps are sorted, so identical inputs give identical bytes.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::analysis::{BalanceReport, ErrorSeries, PerformanceScore, PoseMatchResult};
use crate::skeleton::JointId;

pub const REPORT_SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Serialize)]
pub struct Report<T> {
    pub schema_version: &'static str,
    pub kind: &'static str,
    pub inputs: Inputs,
    pub results: T,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Inputs {
    pub files: BTreeMap<String, String>,
    pub config: Value,
}

impl<T: Serialize> Report<T> {
    pub fn new(kind: &'static str, inputs: Inputs, results: T) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            kind,
            inputs,
            results,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PoseFrameResult {
    pub frame_index: usize,
    pub t_s: f64,
    pub matched: bool,
    pub max_error_deg: f64,
    pub per_joint_error_deg: BTreeMap<JointId, f64>,
}

impl PoseFrameResult {
    pub fn new(frame_index: usize, t_s: f64, result: PoseMatchResult) -> Self {
        let max_error_deg = result
            .per_joint_error_deg
            .values()
            .copied()
            .fold(0.0, f64::max);
        Self {
            frame_index,
            t_s,
            matched: result.matched,
            max_error_deg,
            per_joint_error_deg: result.per_joint_error_deg,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PoseMatchResults {
    pub reference_frame: usize,
    pub tolerance_deg: f64,
    pub matched_frames: Vec<usize>,
    pub frames: Vec<PoseFrameResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct JointSummary {
    pub joint: JointId,
    pub mean_err_pos_m: f64,
    pub max_err_pos_m: f64,
    pub mean_err_speed_mps: f64,
    pub max_err_speed_mps: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonResults {
    pub frame_count: usize,
    pub scale_factor: Option<f64>,
    pub joints: Vec<JointSummary>,
    pub balance: BalanceReport,
    pub score: PerformanceScore,
}

pub fn summarize(errors: &ErrorSeries) -> Vec<JointSummary> {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    errors
        .joints
        .iter()
        .map(|j| JointSummary {
            joint: j.joint,
            mean_err_pos_m: mean(&j.err_pos_m),
            max_err_pos_m: max(&j.err_pos_m),
            mean_err_speed_mps: mean(&j.err_speed_mps),
            max_err_speed_mps: max(&j.err_speed_mps),
        })
        .collect()
}
