use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Box3D, PointCloud, Pose};
use crate::math::{Quat, Vec3};
use crate::registration::{confidence_against, icp_align_points, IcpParams};
use crate::source::FrameSource;
use crate::spatial::KdTree;
use crate::trajectory::{interpolate_track, motion_params, Track};

/// Refinement attempts per box before falling back to the best candidate.
pub const MAX_ATTEMPTS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RefineParams {
    /// Minimum registration confidence for a candidate to be considered.
    pub conf_threshold: f64,
    /// Peak acceleration allowed on the running track, m/s².
    pub a_thresh: f64,
    /// Peak yaw rate allowed on the running track, rad/s.
    pub w_thresh: f64,
    pub icp: IcpParams,
    /// Uniform jitter half-width applied to the ICP initial guess per
    /// attempt: translation (m) and yaw (degrees).
    pub jitter_translation: f64,
    pub jitter_yaw_deg: f64,
    pub seed: u64,
}

impl Default for RefineParams {
    fn default() -> Self {
        RefineParams {
            conf_threshold: 0.6,
            a_thresh: 10.0,
            w_thresh: 1.5,
            icp: IcpParams::default(),
            jitter_translation: 0.2,
            jitter_yaw_deg: 3.0,
            seed: 0,
        }
    }
}

impl RefineParams {
    fn validate(&self) -> Result<()> {
        self.icp.validate()?;
        let positive = [self.conf_threshold, self.a_thresh, self.w_thresh].iter().all(|v| v.is_finite() && *v > 0.0);
        let jitter = [self.jitter_translation, self.jitter_yaw_deg].iter().all(|v| v.is_finite() && *v >= 0.0);
        if positive && jitter {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("refinement thresholds must be positive: {self:?}")))
        }
    }
}

/// Aggregated object points of one track in its box frame.
#[derive(Clone, Debug)]
pub struct Template {
    tree: KdTree,
}

impl Template {
    pub fn new(points: &[Vec3]) -> Template {
        Template { tree: KdTree::new(points) }
    }

    pub fn points(&self) -> &[Vec3] {
        self.tree.points()
    }

    pub fn tree(&self) -> &KdTree {
        &self.tree
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }
}

/// Everything a refiner may look at for one attempt.
pub struct RefineContext<'a> {
    pub frame: usize,
    pub timestamp_us: i64,
    pub attempt: usize,
    /// Interpolated box in the frame's ego coordinates.
    pub seed: &'a Box3D,
    /// The frame's points in ego coordinates.
    pub cloud: &'a PointCloud,
    pub template: &'a Template,
    /// Jittered starting guess mapping seed-box coordinates to template
    /// coordinates.
    pub initial: Pose,
}

/// Proposes an improved box for one frame.
pub trait BoxRefiner {
    fn refine(&self, ctx: &RefineContext<'_>) -> Box3D;
}

/// Aligns the points inside the seed box to the track template with ICP and
/// moves the box by the inverse of the recovered transform.
#[derive(Clone, Copy, Debug, Default)]
pub struct IcpRefiner {
    pub params: IcpParams,
}

impl BoxRefiner for IcpRefiner {
    fn refine(&self, ctx: &RefineContext<'_>) -> Box3D {
        let crop = crop_local(ctx.cloud, ctx.seed);
        if crop.len() < 3 || ctx.template.len() < 3 {
            return *ctx.seed;
        }
        match icp_align_points(&crop, ctx.template.tree(), &self.params, &ctx.initial) {
            Ok(r) => {
                // r.transform: seed frame -> true box frame.
                let pose = ctx.seed.pose().compose(&r.transform.inverse());
                Box3D { center: pose.translation, yaw: crate::math::normalize_angle(pose.yaw()), ..*ctx.seed }
            }
            Err(_) => *ctx.seed,
        }
    }
}

fn crop_local(cloud: &PointCloud, bx: &Box3D) -> Vec<Vec3> {
    cloud.positions().iter().filter(|&&p| bx.contains(p)).map(|&p| bx.to_local(p)).collect()
}

/// Inlier fraction of the points inside `bx` against the template, with no
/// further alignment. Zero when the box holds no points.
pub fn box_confidence(bx: &Box3D, cloud: &PointCloud, template: &Template, inlier_threshold: f64) -> f64 {
    let crop = crop_local(cloud, bx);
    confidence_against(&crop, template.tree(), &Pose::IDENTITY, inlier_threshold)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoxOrigin {
    /// Copied from the keyframe annotations.
    Keyframe,
    /// A refinement attempt passed the confidence and motion checks.
    Accepted,
    /// Every attempt failed; the highest-confidence candidate was kept.
    BestEffort,
}

/// One emitted box with the bookkeeping of how it was produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinedBox {
    pub frame: usize,
    pub timestamp_us: i64,
    pub bbox: Box3D,
    pub origin: BoxOrigin,
    pub confidence: f64,
    pub attempts: usize,
}

#[derive(Clone, Debug, Default)]
pub struct RefineOutput {
    /// Boxes for every frame of the clip in ego coordinates, ordered by
    /// track id.
    pub frames: Vec<(i64, Vec<Box3D>)>,
    pub records: Vec<RefinedBox>,
}

struct TrackState {
    track: Track,
    /// Running track in the global frame: keyframes plus emitted boxes.
    running: Track,
    template: Template,
    annotated: BTreeSet<i64>,
}

/// Propagates keyframe annotations to every frame of the clip.
///
/// `keyframe_annotations` holds ego-frame boxes (with track ids) per
/// annotated timestamp. Tracks annotated on at least two frames are
/// propagated to every frame strictly between their first and last
/// annotation; single-frame tracks are passed through unchanged.
pub fn refine_boxes<S: FrameSource + ?Sized>(
    source: &S,
    keyframe_annotations: &[(i64, Vec<Box3D>)],
    params: &RefineParams,
    refiner: &dyn BoxRefiner,
) -> Result<RefineOutput> {
    params.validate()?;
    if keyframe_annotations.is_empty() {
        return Err(Error::MissingKeyframes("no annotated frames".into()));
    }
    let mut annotated_frames = BTreeMap::new();
    for (t, boxes) in keyframe_annotations {
        let frame = source
            .frame_at(*t)
            .ok_or_else(|| Error::MissingKeyframes(format!("annotation at {t} matches no frame")))?;
        annotated_frames.insert(frame, boxes);
    }

    // Templates from the annotated frames, global-frame tracks for motion.
    let mut global: Vec<(i64, Vec<Box3D>)> = Vec::new();
    let mut template_points: BTreeMap<u32, Vec<Vec3>> = BTreeMap::new();
    for (&frame, boxes) in &annotated_frames {
        let pose = source.pose(frame);
        let cloud = source.load_cloud(frame)?;
        for b in boxes.iter() {
            if let Some(id) = b.track_id {
                template_points.entry(id).or_default().extend(crop_local(&cloud, b));
            }
        }
        global.push((source.timestamp_us(frame), boxes.iter().map(|b| b.transformed(&pose)).collect()));
    }
    let mut states: BTreeMap<u32, TrackState> = BTreeMap::new();
    for track in Track::group(&global)? {
        let template = Template::new(template_points.get(&track.track_id).map(Vec::as_slice).unwrap_or(&[]));
        let annotated = track.samples().iter().map(|s| s.0).collect();
        states.insert(track.track_id, TrackState { running: track.clone(), track, template, annotated });
    }

    let mut records = Vec::new();
    let mut frames = Vec::with_capacity(source.frame_count());
    for frame in 0..source.frame_count() {
        let t = source.timestamp_us(frame);
        let pose = source.pose(frame);
        let to_ego = pose.inverse();
        let mut boxes: Vec<Box3D> = annotated_frames.get(&frame).map(|b| b.to_vec()).unwrap_or_default();
        for b in &boxes {
            records.push(RefinedBox {
                frame,
                timestamp_us: t,
                bbox: *b,
                origin: BoxOrigin::Keyframe,
                confidence: 1.0,
                attempts: 0,
            });
        }

        let pending: Vec<u32> = states
            .values()
            .filter(|s| s.track.samples().len() >= 2 && !s.annotated.contains(&t))
            .filter(|s| s.track.span().is_some_and(|(a, b)| a < t && t < b))
            .map(|s| s.track.track_id)
            .collect();
        if pending.is_empty() {
            boxes.sort_by_key(|b| b.track_id);
            frames.push((t, boxes));
            continue;
        }
        let cloud = source.load_cloud(frame)?;
        for id in pending {
            let state = states.get_mut(&id).expect("pending ids come from states");
            let (_, seed_global) = interpolate_track(&state.track, &[t])?[0];
            let seed = seed_global.transformed(&to_ego);
            let rec = refine_one(frame, t, &pose, &seed, &cloud, state, params, refiner)?;
            state.running.insert(t, rec.bbox.transformed(&pose));
            boxes.push(rec.bbox);
            records.push(rec);
        }
        boxes.sort_by_key(|b| b.track_id);
        frames.push((t, boxes));
    }

    check(&mut frames, &mut records, &states)?;
    Ok(RefineOutput { frames, records })
}

#[allow(clippy::too_many_arguments)]
fn refine_one(
    frame: usize,
    t: i64,
    pose: &Pose,
    seed: &Box3D,
    cloud: &PointCloud,
    state: &TrackState,
    params: &RefineParams,
    refiner: &dyn BoxRefiner,
) -> Result<RefinedBox> {
    let mut best = (0.0, *seed);
    for attempt in 0..MAX_ATTEMPTS {
        let initial = jitter(params, state.track.track_id, frame, attempt);
        let ctx = RefineContext { frame, timestamp_us: t, attempt, seed, cloud, template: &state.template, initial };
        let candidate = refiner.refine(&ctx);
        let conf = box_confidence(&candidate, cloud, &state.template, params.icp.inlier_threshold);
        if conf > best.0 {
            best = (conf, candidate);
        }
        if conf >= params.conf_threshold {
            let mut running = state.running.clone();
            running.insert(t, candidate.transformed(pose));
            let m = motion_params(&running)?;
            if m.a_cal <= params.a_thresh && m.w_cal <= params.w_thresh {
                return Ok(RefinedBox {
                    frame,
                    timestamp_us: t,
                    bbox: candidate,
                    origin: BoxOrigin::Accepted,
                    confidence: conf,
                    attempts: attempt + 1,
                });
            }
        }
    }
    Ok(RefinedBox {
        frame,
        timestamp_us: t,
        bbox: best.1,
        origin: BoxOrigin::BestEffort,
        confidence: best.0,
        attempts: MAX_ATTEMPTS,
    })
}

fn jitter(params: &RefineParams, track_id: u32, frame: usize, attempt: usize) -> Pose {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream((u64::from(track_id) << 32) ^ ((frame as u64) << 8) ^ attempt as u64);
    let j = params.jitter_translation;
    let y = params.jitter_yaw_deg.to_radians();
    let sample = |rng: &mut ChaCha8Rng, half: f64| if half > 0.0 { rng.random_range(-half..=half) } else { 0.0 };
    let dx = sample(&mut rng, j);
    let dy = sample(&mut rng, j);
    let dyaw = sample(&mut rng, y);
    Pose { translation: Vec3::new(dx, dy, 0.0), rotation: Quat::from_yaw(dyaw), timestamp_us: 0 }
}

/// Final consistency pass: one size per track (its earliest annotation's)
/// and strictly increasing timestamps per track.
fn check(frames: &mut [(i64, Vec<Box3D>)], records: &mut [RefinedBox], states: &BTreeMap<u32, TrackState>) -> Result<()> {
    let size_of = |b: &Box3D| b.track_id.and_then(|id| states.get(&id)).map(|s| s.track.samples()[0].1.size);
    for (_, boxes) in frames.iter_mut() {
        for b in boxes.iter_mut() {
            if let Some(size) = size_of(b) {
                b.size = size;
            }
        }
    }
    for r in records.iter_mut() {
        if let Some(size) = size_of(&r.bbox) {
            r.bbox.size = size;
        }
    }
    let mut last: BTreeMap<u32, i64> = BTreeMap::new();
    for (t, boxes) in frames.iter() {
        for b in boxes {
            if let Some(id) = b.track_id {
                if last.insert(id, *t).is_some_and(|prev| prev >= *t) {
                    return Err(Error::NonMonotonicTimestamps(*t));
                }
            }
        }
    }
    Ok(())
}
