//! Machine-readable reports. Field order is fixed by the struct layouts and
//! nothing time-dependent is recorded.

use gtforge_core::eval_occ::{ConfusionCounts, Counts, MiouMode, OccMetrics, CLASS_COUNT};
use gtforge_core::registration::IcpResult;
use gtforge_core::SemanticClass;
use serde::Serialize;

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("reports always serialize");
    out.push(b'\n');
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassIou {
    pub class: SemanticClass,
    pub iou: Option<f64>,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OccScores {
    pub miou: Option<f64>,
    pub sc_iou: Option<f64>,
    pub classes: Vec<ClassIou>,
    pub binary: Counts,
    pub evaluated_voxels: u64,
    pub prediction_ignore_voxels: u64,
}

impl OccScores {
    pub fn new(counts: &ConfusionCounts, metrics: &OccMetrics) -> OccScores {
        let classes = (0..CLASS_COUNT)
            .map(|k| {
                let c = counts.classes[k];
                ClassIou {
                    class: SemanticClass::ALL[k],
                    iou: metrics.class_iou[k],
                    tp: c.tp,
                    fp: c.fp,
                    fn_: c.fn_,
                }
            })
            .collect();
        OccScores {
            miou: metrics.miou,
            sc_iou: metrics.sc_iou,
            classes,
            binary: counts.binary,
            evaluated_voxels: counts.evaluated_voxels,
            prediction_ignore_voxels: counts.prediction_ignore_voxels,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FrameOccScores {
    pub timestamp_us: i64,
    #[serde(flatten)]
    pub scores: OccScores,
}

#[derive(Clone, Debug, Serialize)]
pub struct OccReport {
    pub miou_mode: MiouMode,
    pub frame_count: usize,
    /// Scores over the voxels of every frame pooled together.
    pub total: OccScores,
    pub frames: Vec<FrameOccScores>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransformRecord {
    pub translation: [f64; 3],
    /// `[w, x, y, z]`.
    pub rotation: [f64; 4],
}

#[derive(Clone, Debug, Serialize)]
pub struct IcpReport {
    pub transform: TransformRecord,
    pub rms: f64,
    pub confidence: f64,
    pub iterations: usize,
    pub converged: bool,
    pub rms_history: Vec<f64>,
}

impl From<&IcpResult> for IcpReport {
    fn from(r: &IcpResult) -> Self {
        let (t, q) = (r.transform.translation, r.transform.rotation);
        IcpReport {
            transform: TransformRecord { translation: [t.x, t.y, t.z], rotation: [q.w, q.x, q.y, q.z] },
            rms: r.rms,
            confidence: r.confidence,
            iterations: r.iterations,
            converged: r.converged,
            rms_history: r.rms_history.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AutolabelReport {
    pub frames: usize,
    pub keyframe_boxes: usize,
    pub accepted_boxes: usize,
    pub best_effort_boxes: usize,
    pub label_files: usize,
}
