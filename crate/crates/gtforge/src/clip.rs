//! Clips backed by a manifest on disk. Clouds load on demand.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gtforge_core::{FrameSource, PointCloud, PointKind, Pose};

use crate::error::{Error, Result};
use crate::io::annotations::{read_annotations, FrameBoxes};
use crate::io::labels::read_labels;
use crate::io::manifest::{read_manifest, ClipManifest};
use crate::io::pointcloud::read_point_cloud;

#[derive(Clone, Debug)]
pub struct FileClip {
    pub manifest: ClipManifest,
    base: PathBuf,
    poses: Vec<Pose>,
}

impl FileClip {
    pub fn open(manifest_path: &Path) -> Result<FileClip> {
        let manifest = read_manifest(manifest_path)?;
        let base = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
        let poses = manifest.frames.iter().map(|f| f.pose.to_pose(f.timestamp_us)).collect::<Result<_>>()?;
        Ok(FileClip { manifest, base, poses })
    }

    pub fn resolve(&self, rel: &Path) -> PathBuf {
        self.base.join(rel)
    }

    pub fn lidar_path(&self, frame: usize) -> PathBuf {
        self.resolve(&self.manifest.frames[frame].lidar_path)
    }

    pub fn read_radar(&self, frame: usize) -> Result<Vec<PointCloud>> {
        self.manifest.frames[frame].radar_paths.iter().map(|p| read_point_cloud(&self.resolve(p), PointKind::Radar)).collect()
    }

    /// Boxes of every keyframe, read from the referenced annotation files.
    pub fn keyframe_annotations(&self) -> Result<FrameBoxes> {
        let mut out = Vec::new();
        for f in self.manifest.frames.iter().filter(|f| f.keyframe) {
            let rel = f.annotation_path.as_ref().ok_or(Error::KeyframeMissingAnnotation(f.timestamp_us))?;
            let path = self.resolve(rel);
            let frames = read_annotations(&path)?;
            let boxes = match frames.iter().find(|(t, _)| *t == f.timestamp_us) {
                Some((_, b)) => b.clone(),
                None => {
                    return Err(Error::Manifest(format!("no frame with timestamp {} in the file", f.timestamp_us))
                        .in_file(path))
                }
            };
            out.push((f.timestamp_us, boxes));
        }
        Ok(out)
    }

    /// Full-frame label files `<dir>/<timestamp>.label` of the keyframes;
    /// keyframes without a file are left out.
    pub fn keyframe_labels(&self, dir: &Path) -> Result<BTreeMap<i64, Vec<u8>>> {
        let mut out = BTreeMap::new();
        for f in self.manifest.frames.iter().filter(|f| f.keyframe) {
            let path = dir.join(format!("{}.label", f.timestamp_us));
            if path.is_file() {
                out.insert(f.timestamp_us, read_labels(&path)?);
            }
        }
        Ok(out)
    }
}

impl FrameSource for FileClip {
    fn frame_count(&self) -> usize {
        self.manifest.frames.len()
    }

    fn timestamp_us(&self, frame: usize) -> i64 {
        self.manifest.frames[frame].timestamp_us
    }

    fn pose(&self, frame: usize) -> Pose {
        self.poses[frame]
    }

    fn is_keyframe(&self, frame: usize) -> bool {
        self.manifest.frames[frame].keyframe
    }

    fn load_cloud(&self, frame: usize) -> gtforge_core::Result<PointCloud> {
        read_point_cloud(&self.lidar_path(frame), PointKind::Lidar)
            .map_err(|e| gtforge_core::Error::Source { frame, message: e.to_string() })
    }
}
