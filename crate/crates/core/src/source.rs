//! Access to the frames of a clip without holding every cloud in memory.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Pose};

/// Time-ordered frames of one clip. Frame `i` has a timestamp, an ego pose
/// (ego frame to clip-global frame) and a LiDAR cloud in ego coordinates.
///
/// Implementations report load failures as [`Error::Source`].
pub trait FrameSource: Sync {
    fn frame_count(&self) -> usize;
    fn timestamp_us(&self, frame: usize) -> i64;
    fn pose(&self, frame: usize) -> Pose;
    fn is_keyframe(&self, frame: usize) -> bool;
    fn load_cloud(&self, frame: usize) -> Result<PointCloud>;

    fn keyframes(&self) -> Vec<usize> {
        (0..self.frame_count()).filter(|&i| self.is_keyframe(i)).collect()
    }

    fn frame_at(&self, timestamp_us: i64) -> Option<usize> {
        (0..self.frame_count()).find(|&i| self.timestamp_us(i) == timestamp_us)
    }
}

/// A clip whose clouds are already in memory.
#[derive(Clone, Debug, Default)]
pub struct MemoryClip {
    pub frames: Vec<MemoryFrame>,
}

#[derive(Clone, Debug)]
pub struct MemoryFrame {
    pub pose: Pose,
    pub keyframe: bool,
    pub cloud: PointCloud,
}

impl MemoryClip {
    /// Checks that timestamps strictly increase.
    pub fn new(frames: Vec<MemoryFrame>) -> Result<MemoryClip> {
        for w in frames.windows(2) {
            if w[1].pose.timestamp_us <= w[0].pose.timestamp_us {
                return Err(Error::NonMonotonicTimestamps(w[1].pose.timestamp_us));
            }
        }
        Ok(MemoryClip { frames })
    }
}

impl FrameSource for MemoryClip {
    fn frame_count(&self) -> usize {
        self.frames.len()
    }

    fn timestamp_us(&self, frame: usize) -> i64 {
        self.frames[frame].pose.timestamp_us
    }

    fn pose(&self, frame: usize) -> Pose {
        self.frames[frame].pose
    }

    fn is_keyframe(&self, frame: usize) -> bool {
        self.frames[frame].keyframe
    }

    fn load_cloud(&self, frame: usize) -> Result<PointCloud> {
        self.frames
            .get(frame)
            .map(|f| f.cloud.clone())
            .ok_or_else(|| Error::Source { frame, message: "frame index out of range".into() })
    }
}
