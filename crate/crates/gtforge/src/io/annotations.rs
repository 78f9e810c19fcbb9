//! Box annotations and detection results as JSON.
//!
//! A file holds either one frame object
//! `{"timestamp_us": .., "boxes": [..]}` or an array of them.

use std::path::Path;

use gtforge_core::{Box3D, SemanticClass, Size3, Vec3};
use serde::{Deserialize, Serialize};

use super::{read_bytes, write_atomic};
use crate::error::{Error, Result, ResultExt};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track_id: Option<u32>,
    pub class: SemanticClass,
    pub center: [f64; 3],
    pub size: [f64; 3],
    pub yaw: f64,
    #[serde(default)]
    pub velocity: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl BoxRecord {
    pub fn to_box(&self) -> Result<Box3D> {
        let [x, y, z] = self.center;
        let [l, w, h] = self.size;
        let b = Box3D {
            center: Vec3::new(x, y, z),
            size: Size3::new(l, w, h),
            yaw: self.yaw,
            velocity: self.velocity,
            class: self.class,
            track_id: self.track_id,
            score: self.score,
        };
        Ok(b.validated()?)
    }
}

impl From<&Box3D> for BoxRecord {
    fn from(b: &Box3D) -> Self {
        BoxRecord {
            track_id: b.track_id,
            class: b.class,
            center: [b.center.x, b.center.y, b.center.z],
            size: b.size.into(),
            yaw: b.yaw,
            velocity: b.velocity,
            score: b.score,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub timestamp_us: i64,
    pub boxes: Vec<BoxRecord>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AnnotationFile {
    One(FrameRecord),
    Many(Vec<FrameRecord>),
}

/// Boxes per timestamp, in file order.
pub type FrameBoxes = Vec<(i64, Vec<Box3D>)>;

pub fn parse_annotations(text: &[u8]) -> Result<FrameBoxes> {
    let file: AnnotationFile = serde_json::from_slice(text).map_err(|e| Error::Parse(e.to_string()))?;
    let records = match file {
        AnnotationFile::One(f) => vec![f],
        AnnotationFile::Many(v) => v,
    };
    records
        .into_iter()
        .map(|f| Ok((f.timestamp_us, f.boxes.iter().map(BoxRecord::to_box).collect::<Result<Vec<_>>>()?)))
        .collect()
}

fn frame_record(t: i64, boxes: &[Box3D]) -> FrameRecord {
    FrameRecord { timestamp_us: t, boxes: boxes.iter().map(BoxRecord::from).collect() }
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("annotation records always serialize");
    out.push(b'\n');
    out
}

/// Array form.
pub fn encode_annotations(frames: &[(i64, Vec<Box3D>)]) -> Vec<u8> {
    let records: Vec<FrameRecord> = frames.iter().map(|(t, b)| frame_record(*t, b)).collect();
    to_json(&records)
}

/// Single-frame object form.
pub fn encode_frame_annotation(t: i64, boxes: &[Box3D]) -> Vec<u8> {
    to_json(&frame_record(t, boxes))
}

pub fn read_annotations(path: &Path) -> Result<FrameBoxes> {
    parse_annotations(&read_bytes(path)?).in_file(path)
}

pub fn write_annotations(path: &Path, frames: &[(i64, Vec<Box3D>)]) -> Result<()> {
    write_atomic(path, &encode_annotations(frames))
}

pub fn write_frame_annotation(path: &Path, t: i64, boxes: &[Box3D]) -> Result<()> {
    write_atomic(path, &encode_frame_annotation(t, boxes))
}
