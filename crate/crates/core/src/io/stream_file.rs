//! Newline-delimited JSON stream files.
//!
//! The first record is metadata:
//!
//! ```text
//! {"format_version":"1","subject_id":"s1","height_m":1.8,"frame_rate_hz":30.0,"exercise_tag":"bicep_curl"}
//! ```
//!
//! Every following record is one frame, with joint positions in meters
//! (`y` up, `z` depth, `x` lateral):
//!
//! ```text
//! {"t":0.0,"joints":{"SpineBase":[0.0,0.95,2.5],"SpineMid":[0.0,1.22,2.5]}}
//! ```
//!
//! Blank lines are skipped. Unknown fields are ignored with a warning;
//! unknown joint names are kept aside and flagged by validation.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::skeleton::{validate_stream, Frame, JointId, MotionStream, Position3, StreamMeta};

pub const FORMAT_VERSION: &str = "1";

const META_FIELDS: [&str; 6] = [
    "format_version",
    "subject_id",
    "height_m",
    "frame_rate_hz",
    "exercise_tag",
    "provenance",
];
const FRAME_FIELDS: [&str; 2] = ["t", "joints"];

#[derive(Serialize)]
struct MetaRecord<'a> {
    format_version: &'a str,
    subject_id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    height_m: Option<f64>,
    frame_rate_hz: f64,
    #[serde(skip_serializing_if = "str::is_empty")]
    exercise_tag: &'a str,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    provenance: &'a [String],
}

#[derive(Serialize)]
struct FrameRecord<'a> {
    t: f64,
    joints: JointsRecord<'a>,
}

struct JointsRecord<'a>(&'a Frame);

impl Serialize for JointsRecord<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        for (joint, p) in self.0.iter() {
            map.serialize_entry(joint.name(), &[p.x, p.y, p.z])?;
        }
        map.end()
    }
}

pub fn write_stream_to<W: Write>(stream: &MotionStream, mut w: W) -> std::io::Result<()> {
    let meta = MetaRecord {
        format_version: FORMAT_VERSION,
        subject_id: &stream.meta.subject_id,
        height_m: stream.meta.height_m,
        frame_rate_hz: stream.meta.frame_rate_hz,
        exercise_tag: &stream.meta.exercise_tag,
        provenance: &stream.meta.provenance,
    };
    serde_json::to_writer(&mut w, &meta)?;
    w.write_all(b"\n")?;
    for frame in &stream.frames {
        serde_json::to_writer(
            &mut w,
            &FrameRecord {
                t: frame.t,
                joints: JointsRecord(frame),
            },
        )?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_stream(stream: &MotionStream, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_stream_to(stream, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Parses a stream without validating it.
pub fn parse_stream<R: BufRead>(reader: R) -> Result<MotionStream> {
    let mut meta: Option<StreamMeta> = None;
    let mut frames = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            detail: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |detail: String| Error::Parse {
            line: line_no,
            detail,
        };
        let value: Value = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let Value::Object(obj) = value else {
            return Err(parse_err("record is not a JSON object".into()));
        };
        match meta {
            None => meta = Some(parse_meta(&obj, line_no).map_err(parse_err)?),
            Some(_) => frames.push(parse_frame(&obj, line_no).map_err(parse_err)?),
        }
    }
    let meta = meta.ok_or(Error::Parse {
        line: 1,
        detail: "missing metadata record".into(),
    })?;
    Ok(MotionStream::new(meta, frames))
}

/// Reads and validates a stream file. With `lenient`, validation issues are
/// logged instead of returned as an error.
pub fn read_stream(path: impl AsRef<Path>, lenient: bool) -> Result<MotionStream> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let stream = parse_stream(BufReader::new(file))?;
    let report = validate_stream(&stream);
    if !report.ok {
        if !lenient {
            return Err(Error::ValidationFailed(report));
        }
        for issue in &report.issues {
            log::warn!(
                "{}: frame {:?}: {:?} {}",
                path.display(),
                issue.frame_index,
                issue.code,
                issue.detail
            );
        }
    }
    Ok(stream)
}

fn warn_unknown_fields(obj: &Map<String, Value>, known: &[&str], line: usize) {
    for key in obj.keys().filter(|k| !known.contains(&k.as_str())) {
        log::warn!("line {line}: ignoring unknown field `{key}`");
    }
}

fn parse_meta(obj: &Map<String, Value>, line: usize) -> Result<StreamMeta, String> {
    warn_unknown_fields(obj, &META_FIELDS, line);
    match obj.get("format_version") {
        Some(Value::String(v)) if v == FORMAT_VERSION => {}
        Some(other) => return Err(format!("unsupported format_version {other}")),
        None => return Err("metadata record lacks format_version".into()),
    }
    let subject_id = match obj.get("subject_id") {
        Some(Value::String(s)) => s.clone(),
        _ => return Err("metadata subject_id must be a string".into()),
    };
    let frame_rate_hz = obj
        .get("frame_rate_hz")
        .and_then(Value::as_f64)
        .ok_or("metadata frame_rate_hz must be a number")?;
    let height_m = match obj.get("height_m") {
        None | Some(Value::Null) => None,
        Some(v) => Some(v.as_f64().ok_or("metadata height_m must be a number")?),
    };
    let exercise_tag = match obj.get("exercise_tag") {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err("metadata exercise_tag must be a string".into()),
    };
    let provenance = match obj.get("provenance") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| v.as_str().map(str::to_string))
            .collect::<Option<_>>()
            .ok_or("metadata provenance must be an array of strings")?,
        Some(_) => return Err("metadata provenance must be an array of strings".into()),
    };
    Ok(StreamMeta {
        subject_id,
        height_m,
        frame_rate_hz,
        exercise_tag,
        provenance,
    })
}

fn parse_frame(obj: &Map<String, Value>, line: usize) -> Result<Frame, String> {
    warn_unknown_fields(obj, &FRAME_FIELDS, line);
    let t = obj
        .get("t")
        .and_then(Value::as_f64)
        .ok_or("frame record needs a numeric `t`")?;
    let Some(Value::Object(joints)) = obj.get("joints") else {
        return Err("frame record needs a `joints` object".into());
    };
    let mut frame = Frame::new(t);
    for (name, value) in joints {
        let coords = value
            .as_array()
            .filter(|a| a.len() == 3)
            .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>())
            .ok_or_else(|| format!("joint `{name}` must be an array of three numbers"))?;
        match JointId::from_name(name) {
            Some(joint) => frame.set(joint, Position3::new(coords[0], coords[1], coords[2])),
            None => frame.unknown_joints.push(name.clone()),
        }
    }
    Ok(frame)
}
