//! Occupancy scoring: per-class IoU, mIoU and scene-completion IoU.

use core::ops::AddAssign;

use crate::classes::{FREE, IGNORE};
use crate::error::{Error, Result};
use crate::voxel::VoxelGrid;

/// Number of semantic classes (codes `0..CLASS_COUNT`).
pub const CLASS_COUNT: usize = 11;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[cfg_attr(feature = "serde", serde(rename = "fn"))]
    pub fn_: u64,
}

impl Counts {
    /// `None` when the denominator is zero.
    pub fn iou(&self) -> Option<f64> {
        let d = self.tp + self.fp + self.fn_;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    /// True when the class occurs in the ground truth.
    pub fn in_ground_truth(&self) -> bool {
        self.tp + self.fn_ > 0
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionCounts {
    pub classes: [Counts; CLASS_COUNT],
    /// Occupied versus free.
    pub binary: Counts,
    /// Voxels not marked ignore in the ground truth.
    pub evaluated_voxels: u64,
    /// Evaluated voxels where the prediction held the ignore code; they are
    /// scored as free.
    pub prediction_ignore_voxels: u64,
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: ConfusionCounts) {
        for (a, b) in self.classes.iter_mut().zip(o.classes) {
            *a += b;
        }
        self.binary += o.binary;
        self.evaluated_voxels += o.evaluated_voxels;
        self.prediction_ignore_voxels += o.prediction_ignore_voxels;
    }
}

/// Counts over one grid pair. Ground-truth ignore voxels are skipped.
pub fn confusion(pred: &VoxelGrid, gt: &VoxelGrid) -> Result<ConfusionCounts> {
    if !pred.same_shape(gt) {
        return Err(Error::GridShapeMismatch);
    }
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.labels().iter().zip(gt.labels()) {
        if g == IGNORE {
            continue;
        }
        c.evaluated_voxels += 1;
        let p = if p == IGNORE {
            c.prediction_ignore_voxels += 1;
            FREE
        } else {
            p
        };
        if p == g {
            if p != FREE {
                c.classes[p as usize].tp += 1;
                c.binary.tp += 1;
            }
            continue;
        }
        if p != FREE {
            c.classes[p as usize].fp += 1;
        }
        if g != FREE {
            c.classes[g as usize].fn_ += 1;
        }
        match (p != FREE, g != FREE) {
            (true, true) => c.binary.tp += 1,
            (true, false) => c.binary.fp += 1,
            (false, true) => c.binary.fn_ += 1,
            (false, false) => {}
        }
    }
    Ok(c)
}

/// Which classes enter the mIoU mean.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MiouMode {
    /// Classes present in the ground truth.
    #[default]
    Exclude,
    /// All classes; a class with no voxels anywhere counts as 0.
    Strict,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OccMetrics {
    pub class_iou: [Option<f64>; CLASS_COUNT],
    /// `None` when no class qualifies for the mean.
    pub miou: Option<f64>,
    /// `None` when neither grid has an occupied voxel.
    pub sc_iou: Option<f64>,
}

pub fn occ_metrics(counts: &ConfusionCounts, mode: MiouMode) -> OccMetrics {
    let class_iou = counts.classes.map(|c| c.iou());
    let terms: alloc::vec::Vec<f64> = match mode {
        MiouMode::Exclude => counts.classes.iter().filter(|c| c.in_ground_truth()).map(|c| c.iou().unwrap_or(0.0)).collect(),
        MiouMode::Strict => counts.classes.iter().map(|c| c.iou().unwrap_or(0.0)).collect(),
    };
    let miou = (!terms.is_empty()).then(|| terms.iter().sum::<f64>() / terms.len() as f64);
    OccMetrics { class_iou, miou, sc_iou: counts.binary.iou() }
}
