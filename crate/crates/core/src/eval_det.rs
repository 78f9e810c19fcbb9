//! Detection scoring: BEV center-distance matching, 101-point AP, true
//! positive error metrics and the composite ODS score.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::classes::SemanticClass;
use crate::error::{Error, Result};
use crate::geometry::{bev_center_distance, Box3D};
use crate::math::angle_distance;

/// Number of points on the recall axis.
pub const RECALL_SAMPLES: usize = 101;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalConfig {
    /// Matching thresholds for AP, m, ascending.
    pub dist_thresholds: Vec<f64>,
    /// Matching threshold for the error metrics, m.
    pub tp_threshold: f64,
    pub min_recall: f64,
    pub min_precision: f64,
    /// Boxes are kept when `|x| ≤ max_x` and `|y| ≤ max_y`.
    pub max_x: f64,
    pub max_y: f64,
    pub classes: Vec<SemanticClass>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            dist_thresholds: vec![1.0, 2.0, 3.0, 4.0],
            tp_threshold: 3.0,
            min_recall: 0.1,
            min_precision: 0.1,
            max_x: 60.0,
            max_y: 40.0,
            classes: SemanticClass::DETECTION.to_vec(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        let sorted = self.dist_thresholds.windows(2).all(|w| w[0] < w[1]);
        let positive = self.dist_thresholds.iter().chain([&self.tp_threshold, &self.max_x, &self.max_y]).all(|v| v.is_finite() && *v > 0.0);
        let unit = [self.min_recall, self.min_precision].iter().all(|v| (0.0..1.0).contains(v));
        if self.dist_thresholds.is_empty() || !sorted || !positive || !unit || self.classes.is_empty() {
            return Err(Error::InvalidParams(format!("bad evaluation config: {self:?}")));
        }
        Ok(())
    }

    fn in_range(&self, b: &Box3D) -> bool {
        libm::fabs(b.center.x) <= self.max_x && libm::fabs(b.center.y) <= self.max_y
    }

    /// First recall sample strictly above `min_recall`.
    fn first_sample(&self) -> usize {
        libm::round(self.min_recall * 100.0) as usize + 1
    }
}

/// Outcome of matching one frame.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrameMatch {
    /// `(prediction index, ground-truth index, distance)` in processing
    /// order.
    pub pairs: Vec<(usize, usize, f64)>,
    pub unmatched_predictions: Vec<usize>,
    pub unmatched_ground_truths: Vec<usize>,
}

/// Descending score, then lower center x, then lower center y.
pub fn score_order(a: &Box3D, b: &Box3D) -> Ordering {
    let (sa, sb) = (a.score.unwrap_or(0.0), b.score.unwrap_or(0.0));
    sb.total_cmp(&sa).then(a.center.x.total_cmp(&b.center.x)).then(a.center.y.total_cmp(&b.center.y))
}

/// Greedy one-to-one matching: predictions in [`score_order`] each take the
/// nearest unmatched ground truth within `threshold` (ties: lower index).
pub fn match_frame(predictions: &[Box3D], ground_truths: &[Box3D], threshold: f64) -> FrameMatch {
    let mut order: Vec<usize> = (0..predictions.len()).collect();
    order.sort_by(|&a, &b| score_order(&predictions[a], &predictions[b]).then(a.cmp(&b)));
    let mut taken = vec![false; ground_truths.len()];
    let mut out = FrameMatch::default();
    for p in order {
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in ground_truths.iter().enumerate() {
            if taken[g] {
                continue;
            }
            let d = bev_center_distance(&predictions[p], gt);
            if d <= threshold && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((g, d));
            }
        }
        match best {
            Some((g, d)) => {
                taken[g] = true;
                out.pairs.push((p, g, d));
            }
            None => out.unmatched_predictions.push(p),
        }
    }
    out.unmatched_ground_truths = (0..ground_truths.len()).filter(|&g| !taken[g]).collect();
    out
}

/// Per-match errors of one true positive.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TpErrors {
    pub ate: f64,
    pub ase: f64,
    pub aoe: f64,
    pub ave: f64,
}

impl TpErrors {
    pub fn between(pred: &Box3D, gt: &Box3D) -> TpErrors {
        TpErrors {
            ate: bev_center_distance(pred, gt),
            ase: scale_error(pred, gt),
            aoe: angle_distance(pred.yaw, gt.yaw),
            ave: libm::hypot(pred.velocity[0] - gt.velocity[0], pred.velocity[1] - gt.velocity[1]),
        }
    }

    fn as_array(self) -> [f64; 4] {
        [self.ate, self.ase, self.aoe, self.ave]
    }

    fn from_array(a: [f64; 4]) -> TpErrors {
        TpErrors { ate: a[0], ase: a[1], aoe: a[2], ave: a[3] }
    }

    /// Penalty for classes that never reach the minimum recall.
    pub const PENALTY: TpErrors = TpErrors { ate: 1.0, ase: 1.0, aoe: 1.0, ave: 1.0 };
}

/// `1 − IoU` of the two boxes after aligning centers and orientation.
pub fn scale_error(pred: &Box3D, gt: &Box3D) -> f64 {
    let (a, b) = (pred.size, gt.size);
    let inter = a.length.min(b.length) * a.width.min(b.width) * a.height.min(b.height);
    let union = a.volume() + b.volume() - inter;
    1.0 - inter / union
}

/// One prediction after matching, in the global score order of a class.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Ranked {
    tp: bool,
    errors: TpErrors,
}

/// Sorted predictions of one class across frames, matched at one threshold.
fn rank(frames: &[(Vec<Box3D>, Vec<Box3D>)], threshold: f64) -> Vec<Ranked> {
    // (prediction box, frame, index in frame, result)
    let mut all: Vec<(&Box3D, usize, usize, Ranked)> = Vec::new();
    for (f, (gts, preds)) in frames.iter().enumerate() {
        let m = match_frame(preds, gts, threshold);
        for &(p, g, _) in &m.pairs {
            all.push((&preds[p], f, p, Ranked { tp: true, errors: TpErrors::between(&preds[p], &gts[g]) }));
        }
        for &p in &m.unmatched_predictions {
            all.push((&preds[p], f, p, Ranked { tp: false, errors: TpErrors::default() }));
        }
    }
    all.sort_by(|a, b| score_order(a.0, b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    all.into_iter().map(|r| r.3).collect()
}

/// Interpolated precision at the 101 recall samples. Sample `k` is the best
/// precision over operating points with recall of at least `k/100`, or 0
/// when no point reaches it.
pub fn precision_envelope(ranked_tp: &[bool], npos: usize) -> [f64; RECALL_SAMPLES] {
    let mut env = [0.0; RECALL_SAMPLES];
    if npos == 0 {
        return env;
    }
    let mut tp = 0usize;
    let mut best_at_level = vec![0.0f64; RECALL_SAMPLES];
    for (i, &is_tp) in ranked_tp.iter().enumerate() {
        tp += usize::from(is_tp);
        let precision = tp as f64 / (i + 1) as f64;
        // Highest sample this point reaches: tp·100 ≥ k·npos.
        let k = (tp * 100 / npos).min(RECALL_SAMPLES - 1);
        if precision > best_at_level[k] {
            best_at_level[k] = precision;
        }
    }
    let mut running = 0.0f64;
    for k in (0..RECALL_SAMPLES).rev() {
        running = running.max(best_at_level[k]);
        env[k] = running;
    }
    env
}

/// Normalized area above the minimum precision over recall samples
/// strictly above the minimum recall.
pub fn ap_from_envelope(env: &[f64; RECALL_SAMPLES], config: &EvalConfig) -> f64 {
    let start = config.first_sample();
    if start >= RECALL_SAMPLES {
        return 0.0;
    }
    let sum: f64 = env[start..].iter().map(|&p| (p - config.min_precision).max(0.0) / (1.0 - config.min_precision)).sum();
    sum / (RECALL_SAMPLES - start) as f64
}

/// Error metrics of one class from its ranked predictions at the error
/// threshold. Recall sample `k` uses the cumulative mean over the first
/// `ceil(k·npos/100)` true positives; samples from the first above the
/// minimum recall up to the achieved recall are averaged.
fn tp_metrics(ranked: &[Ranked], npos: usize, config: &EvalConfig) -> TpErrors {
    let errors: Vec<[f64; 4]> = ranked.iter().filter(|r| r.tp).map(|r| r.errors.as_array()).collect();
    if npos == 0 || errors.is_empty() {
        return TpErrors::PENALTY;
    }
    let last = (errors.len() * 100 / npos).min(RECALL_SAMPLES - 1);
    let first = config.first_sample();
    if last < first {
        return TpErrors::PENALTY;
    }
    let mut prefix = vec![[0.0; 4]; errors.len() + 1];
    for (i, e) in errors.iter().enumerate() {
        for j in 0..4 {
            prefix[i + 1][j] = prefix[i][j] + e[j];
        }
    }
    let mut acc = [0.0; 4];
    for k in first..=last {
        let m = (k * npos).div_ceil(100).max(1);
        for j in 0..4 {
            acc[j] += prefix[m][j] / m as f64;
        }
    }
    let n = (last - first + 1) as f64;
    TpErrors::from_array(acc.map(|v| v / n))
}

/// AP of one class at one threshold. `frames` pairs ground truths with
/// predictions per frame. `None` without ground truth.
pub fn class_ap(frames: &[(Vec<Box3D>, Vec<Box3D>)], threshold: f64, config: &EvalConfig) -> Option<(f64, [f64; RECALL_SAMPLES])> {
    let npos: usize = frames.iter().map(|(g, _)| g.len()).sum();
    if npos == 0 {
        return None;
    }
    let tps: Vec<bool> = rank(frames, threshold).iter().map(|r| r.tp).collect();
    let env = precision_envelope(&tps, npos);
    Some((ap_from_envelope(&env, config), env))
}

/// Error metrics of one class. `None` without ground truth.
pub fn class_tp_errors(frames: &[(Vec<Box3D>, Vec<Box3D>)], config: &EvalConfig) -> Option<TpErrors> {
    let npos: usize = frames.iter().map(|(g, _)| g.len()).sum();
    if npos == 0 {
        return None;
    }
    Some(tp_metrics(&rank(frames, config.tp_threshold), npos, config))
}

/// `(4·mAP + Σ (1 − min(1, mTP))) / 8`.
pub fn ods(map: f64, errors: &TpErrors) -> f64 {
    let tp: f64 = errors.as_array().iter().map(|&e| 1.0 - e.min(1.0)).sum();
    (4.0 * map + tp) / 8.0
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrCurve {
    pub threshold: f64,
    pub ap: f64,
    /// Interpolated precision at recall 0.00, 0.01, …, 1.00.
    pub precision: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassMetrics {
    pub class: SemanticClass,
    pub gt_count: usize,
    pub prediction_count: usize,
    /// Mean AP over the thresholds.
    pub ap: f64,
    pub errors: TpErrors,
    pub curves: Vec<PrCurve>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectionSummary {
    pub map: f64,
    pub mate: f64,
    pub mase: f64,
    pub maoe: f64,
    pub mave: f64,
    pub ods: f64,
    pub classes: Vec<ClassMetrics>,
    /// Configured classes without any ground truth; left out of every mean.
    pub skipped_classes: Vec<SemanticClass>,
}

/// Scores predictions against ground truth. Both inputs list boxes per
/// timestamp and must cover the same timestamps. With no ground truth for
/// any class, mAP is 0 and every error metric takes the penalty value.
pub fn evaluate_detections(
    ground_truth: &[(i64, Vec<Box3D>)],
    predictions: &[(i64, Vec<Box3D>)],
    config: &EvalConfig,
) -> Result<DetectionSummary> {
    config.validate()?;
    let gt = by_timestamp(ground_truth)?;
    let pred = by_timestamp(predictions)?;
    if !gt.keys().eq(pred.keys()) {
        return Err(Error::FrameSetMismatch);
    }
    for (t, boxes) in &pred {
        if boxes.iter().any(|b| b.score.is_none()) {
            return Err(Error::MissingScore(*t));
        }
    }

    let mut classes = Vec::new();
    let mut skipped = Vec::new();
    for &class in &config.classes {
        let pick = |boxes: &[&Box3D]| -> Vec<Box3D> {
            boxes.iter().filter(|b| b.class == class && config.in_range(b)).map(|b| **b).collect()
        };
        let frames: Vec<(Vec<Box3D>, Vec<Box3D>)> = gt.keys().map(|t| (pick(&gt[t]), pick(&pred[t]))).collect();
        let gt_count: usize = frames.iter().map(|f| f.0.len()).sum();
        if gt_count == 0 {
            skipped.push(class);
            continue;
        }
        let mut curves = Vec::new();
        for &th in &config.dist_thresholds {
            let (ap, env) = class_ap(&frames, th, config).expect("class has ground truth");
            curves.push(PrCurve { threshold: th, ap, precision: env.to_vec() });
        }
        let ap = curves.iter().map(|c| c.ap).sum::<f64>() / curves.len() as f64;
        classes.push(ClassMetrics {
            class,
            gt_count,
            prediction_count: frames.iter().map(|f| f.1.len()).sum(),
            ap,
            errors: class_tp_errors(&frames, config).expect("class has ground truth"),
            curves,
        });
    }

    let (map, mean) = if classes.is_empty() {
        (0.0, TpErrors::PENALTY)
    } else {
        let n = classes.len() as f64;
        let mut acc = [0.0; 4];
        for c in &classes {
            for (a, e) in acc.iter_mut().zip(c.errors.as_array()) {
                *a += e;
            }
        }
        (classes.iter().map(|c| c.ap).sum::<f64>() / n, TpErrors::from_array(acc.map(|v| v / n)))
    };
    Ok(DetectionSummary {
        map,
        mate: mean.ate,
        mase: mean.ase,
        maoe: mean.aoe,
        mave: mean.ave,
        ods: ods(map, &mean),
        classes,
        skipped_classes: skipped,
    })
}

fn by_timestamp(frames: &[(i64, Vec<Box3D>)]) -> Result<BTreeMap<i64, Vec<&Box3D>>> {
    let mut out: BTreeMap<i64, Vec<&Box3D>> = BTreeMap::new();
    for (t, boxes) in frames {
        if out.insert(*t, boxes.iter().collect()).is_some() {
            return Err(Error::InvalidParams(format!("duplicate frame timestamp {t}")));
        }
    }
    Ok(out)
}
