//! Weight-training motion analysis over recorded 3-D skeleton streams.
//!
//! The pipeline ingests joint-position streams, computes joint angles and
//! speeds, normalizes a test recording against a reference recording, and
//! reports range of motion, balance, per-frame error traces and a weighted
//! performance score.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod io;
pub mod kinematics;
pub mod normalization;
pub mod skeleton;
pub mod synthgen;

pub use error::{Error, Result};
