//! Clip manifests (JSON). Paths are relative to the manifest's directory.

use std::path::{Path, PathBuf};

use gtforge_core::{classes::parse_label, Pose, Quat, Vec3};
use serde::{Deserialize, Serialize};

use super::{read_bytes, write_atomic};
use crate::error::{Error, Result, ResultExt};

pub const MAX_RADARS: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRecord {
    pub translation: [f64; 3],
    /// `[w, x, y, z]`.
    pub rotation: [f64; 4],
}

impl PoseRecord {
    pub fn to_pose(&self, timestamp_us: i64) -> Result<Pose> {
        let [w, x, y, z] = self.rotation;
        let q = Quat::new(w, x, y, z)
            .ok_or_else(|| Error::Manifest(format!("frame {timestamp_us}: degenerate rotation {:?}", self.rotation)))?;
        let [tx, ty, tz] = self.translation;
        Ok(Pose::new(Vec3::new(tx, ty, tz), q, timestamp_us)?)
    }
}

impl From<&Pose> for PoseRecord {
    fn from(p: &Pose) -> Self {
        let q = p.rotation;
        PoseRecord { translation: [p.translation.x, p.translation.y, p.translation.z], rotation: [q.w, q.x, q.y, q.z] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameEntry {
    pub timestamp_us: i64,
    pub lidar_path: PathBuf,
    #[serde(default)]
    pub radar_paths: Vec<PathBuf>,
    pub pose: PoseRecord,
    pub keyframe: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub static_label_path: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipManifest {
    pub clip_id: String,
    pub classes: Vec<String>,
    pub frames: Vec<FrameEntry>,
}

impl ClipManifest {
    pub fn validate(&self) -> Result<()> {
        for name in &self.classes {
            parse_label(name).map_err(|_| Error::Manifest(format!("unknown class `{name}`")))?;
        }
        for w in self.frames.windows(2) {
            if w[1].timestamp_us <= w[0].timestamp_us {
                return Err(gtforge_core::Error::NonMonotonicTimestamps(w[1].timestamp_us).into());
            }
        }
        for f in &self.frames {
            if f.keyframe && f.annotation_path.is_none() {
                return Err(Error::KeyframeMissingAnnotation(f.timestamp_us));
            }
            if !f.keyframe && f.annotation_path.is_some() {
                return Err(Error::Manifest(format!("non-keyframe {} references an annotation", f.timestamp_us)));
            }
            if f.radar_paths.len() > MAX_RADARS {
                return Err(Error::Manifest(format!("frame {} lists {} radars", f.timestamp_us, f.radar_paths.len())));
            }
            f.pose.to_pose(f.timestamp_us)?;
        }
        Ok(())
    }

    pub fn keyframe_count(&self) -> usize {
        self.frames.iter().filter(|f| f.keyframe).count()
    }
}

pub fn parse_manifest(text: &[u8]) -> Result<ClipManifest> {
    let m: ClipManifest = serde_json::from_slice(text).map_err(|e| Error::Parse(e.to_string()))?;
    m.validate()?;
    Ok(m)
}

pub fn read_manifest(path: &Path) -> Result<ClipManifest> {
    parse_manifest(&read_bytes(path)?).in_file(path)
}

pub fn encode_manifest(m: &ClipManifest) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(m).expect("manifest always serializes");
    out.push(b'\n');
    out
}

pub fn write_manifest(path: &Path, m: &ClipManifest) -> Result<()> {
    m.validate().in_file(path)?;
    write_atomic(path, &encode_manifest(m))
}
