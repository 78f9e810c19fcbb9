//! Dense semantic occupancy from annotated clips: objects are accumulated per
//! track in their box frame, the static scene is accumulated in the global
//! frame, and both are recombined and voxelized at every keyframe.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::classes::{FREE, IGNORE};
use crate::error::{Error, Result};
use crate::geometry::{transform_cloud, Box3D, PointCloud, Pose};
use crate::math::Vec3;
use crate::registration::{icp_align_points, IcpParams};
use crate::source::FrameSource;
use crate::spatial::KdTree;
use crate::trajectory::{interpolate_track, Track};
use crate::voxel::{cell_at, OccConfig, VoxelGrid};
use crate::SemanticClass;

/// Minimum registration confidence for a non-keyframe crop to join a
/// template.
pub const MERGE_CONFIDENCE: f64 = 0.5;

/// Accumulated points of one track in its box frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectAggregate {
    pub track_id: u32,
    pub class: SemanticClass,
    pub template: PointCloud,
    /// Frames that contributed at least one point.
    pub source_frame_count: usize,
}

/// One keyframe split into object points and static points.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparatedFrame {
    /// Indices of the points owned by each box, aligned with the box list.
    pub objects: Vec<Vec<usize>>,
    /// Indices of the points outside every box.
    pub static_indices: Vec<usize>,
}

/// Assigns every point to at most one box. A point inside several boxes
/// goes to the one with the nearest center, then the lower track id, then
/// the earlier box.
pub fn separate_frame(cloud: &PointCloud, boxes: &[Box3D]) -> SeparatedFrame {
    let mut objects = vec![Vec::new(); boxes.len()];
    let mut static_indices = Vec::new();
    for (i, &p) in cloud.positions().iter().enumerate() {
        let owner = boxes
            .iter()
            .enumerate()
            .filter(|(_, b)| b.contains(p))
            .min_by(|(ia, a), (ib, b)| {
                let da = a.center.distance_squared(p);
                let db = b.center.distance_squared(p);
                da.total_cmp(&db).then(a.track_id.cmp(&b.track_id)).then(ia.cmp(ib))
            })
            .map(|(k, _)| k);
        match owner {
            Some(k) => objects[k].push(i),
            None => static_indices.push(i),
        }
    }
    SeparatedFrame { objects, static_indices }
}

/// Ego-frame boxes per keyframe, keyed by frame index.
type FrameBoxes<'a> = BTreeMap<usize, &'a [Box3D]>;

fn annotated_frames<'a, S: FrameSource + ?Sized>(source: &S, annotations: &'a [(i64, Vec<Box3D>)]) -> Result<FrameBoxes<'a>> {
    let mut out = BTreeMap::new();
    for (t, boxes) in annotations {
        let frame = source
            .frame_at(*t)
            .ok_or_else(|| Error::MissingKeyframes(format!("annotation at {t} matches no frame")))?;
        if boxes.iter().any(|b| b.track_id.is_none()) {
            return Err(Error::InvalidBox(format!("annotation at {t} has a box without track id")));
        }
        out.insert(frame, boxes.as_slice());
    }
    Ok(out)
}

/// Builds one template per track.
///
/// Annotated frames contribute their box crops directly. When
/// `use_non_keyframes` is set, every other frame inside a track's span
/// contributes the crop of the interpolated box after ICP alignment to the
/// running template, provided the alignment converges with confidence of at
/// least [`MERGE_CONFIDENCE`]. Merged points are clipped to the largest box
/// extent of the track.
pub fn aggregate_objects<S: FrameSource + ?Sized>(
    source: &S,
    annotations: &[(i64, Vec<Box3D>)],
    icp: &IcpParams,
    use_non_keyframes: bool,
) -> Result<Vec<ObjectAggregate>> {
    icp.validate()?;
    let frames = annotated_frames(source, annotations)?;
    let mut global = Vec::new();
    for (&frame, boxes) in &frames {
        let pose = source.pose(frame);
        global.push((source.timestamp_us(frame), boxes.iter().map(|b| b.transformed(&pose)).collect::<Vec<_>>()));
    }
    let tracks = Track::group(&global)?;
    let mut points: BTreeMap<u32, Vec<Vec3>> = BTreeMap::new();
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    let mut extent: BTreeMap<u32, Vec3> = BTreeMap::new();
    for track in &tracks {
        if track.is_empty() {
            return Err(Error::EmptyTrack);
        }
        let mut half = Vec3::ZERO;
        for (_, b) in track.samples() {
            let h = b.size.half();
            half = Vec3::new(half.x.max(h.x), half.y.max(h.y), half.z.max(h.z));
        }
        extent.insert(track.track_id, half);
        points.insert(track.track_id, Vec::new());
        counts.insert(track.track_id, 0);
    }

    for (&frame, boxes) in &frames {
        let cloud = source.load_cloud(frame)?;
        let sep = separate_frame(&cloud, boxes);
        for (b, idx) in boxes.iter().zip(&sep.objects) {
            let id = b.track_id.expect("checked above");
            if idx.is_empty() {
                continue;
            }
            let pts = points.get_mut(&id).expect("track exists");
            pts.extend(idx.iter().map(|&i| b.to_local(cloud.positions()[i])));
            *counts.get_mut(&id).expect("track exists") += 1;
        }
    }

    if use_non_keyframes {
        for frame in 0..source.frame_count() {
            if frames.contains_key(&frame) {
                continue;
            }
            let t = source.timestamp_us(frame);
            let active: Vec<&Track> =
                tracks.iter().filter(|tr| tr.span().is_some_and(|(a, b)| a < t && t < b)).collect();
            if active.is_empty() {
                continue;
            }
            let to_ego = source.pose(frame).inverse();
            let cloud = source.load_cloud(frame)?;
            for track in active {
                let (_, fake) = interpolate_track(track, &[t])?[0];
                let fake = fake.transformed(&to_ego);
                let crop: Vec<Vec3> =
                    cloud.positions().iter().filter(|&&p| fake.contains(p)).map(|&p| fake.to_local(p)).collect();
                let template = &points[&track.track_id];
                if crop.len() < 3 || template.len() < 3 {
                    continue;
                }
                let tree = KdTree::new(template);
                let Ok(r) = icp_align_points(&crop, &tree, icp, &Pose::IDENTITY) else { continue };
                if !(r.converged && r.confidence >= MERGE_CONFIDENCE) {
                    continue;
                }
                let half = extent[&track.track_id];
                let merged: Vec<Vec3> = crop
                    .iter()
                    .map(|&p| r.transform.apply(p))
                    .filter(|p| p.x.abs() <= half.x && p.y.abs() <= half.y && p.z.abs() <= half.z)
                    .collect();
                if merged.is_empty() {
                    continue;
                }
                points.get_mut(&track.track_id).expect("track exists").extend(merged);
                *counts.get_mut(&track.track_id).expect("track exists") += 1;
            }
        }
    }

    tracks
        .iter()
        .map(|tr| {
            Ok(ObjectAggregate {
                track_id: tr.track_id,
                class: tr.class,
                template: PointCloud::plain(points.remove(&tr.track_id).unwrap_or_default())?,
                source_frame_count: counts[&tr.track_id],
            })
        })
        .collect()
}

/// Concatenates per-keyframe static clouds in the global frame. Each part
/// is `(ego pose, ego-frame cloud, one label per point)`.
pub fn build_static_scene(parts: &[(Pose, PointCloud, Vec<u8>)]) -> Result<PointCloud> {
    let mut out = PointCloud::default();
    for (pose, cloud, labels) in parts {
        let global = transform_cloud(pose, cloud).into_plain().with_labels(labels.clone())?;
        out.append(&global)?;
    }
    if out.labels().is_none() {
        out = out.with_labels(Vec::new())?;
    }
    Ok(out)
}

/// Builds the labeled ego-frame cloud of one frame: the global static scene
/// mapped back by `pose`, plus each box's track template placed at the box
/// and labeled with its class. Points outside the grid range are dropped.
pub fn compose_frame(
    static_scene: &PointCloud,
    pose: &Pose,
    aggregates: &[ObjectAggregate],
    frame_boxes: &[Box3D],
    config: &OccConfig,
) -> Result<PointCloud> {
    let dims = config.dims()?;
    let origin = config.origin();
    let labels = static_scene.labels().ok_or(Error::MissingLabels)?;
    let to_ego = pose.inverse();
    let mut positions = Vec::new();
    let mut out_labels = Vec::new();
    for (&p, &l) in static_scene.positions().iter().zip(labels) {
        let q = to_ego.apply(p);
        if cell_at(origin, config.voxel_size, dims, q).is_some() {
            positions.push(q);
            out_labels.push(l);
        }
    }
    for b in frame_boxes {
        let id = b.track_id.ok_or_else(|| Error::InvalidBox("frame box without track id".into()))?;
        let agg = aggregates.iter().find(|a| a.track_id == id).ok_or(Error::MissingAggregate(id))?;
        let code = b.class.code();
        for &p in agg.template.positions() {
            let q = b.to_parent(p);
            if cell_at(origin, config.voxel_size, dims, q).is_some() {
                positions.push(q);
                out_labels.push(code);
            }
        }
    }
    PointCloud::plain(positions)?.with_labels(out_labels)
}

/// Keeps the points that have at least `min_neighbors` other points within
/// `radius`, counted on the unfiltered cloud.
pub fn radius_filter(cloud: &PointCloud, radius: f64, min_neighbors: usize) -> Result<PointCloud> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParams(format!("filter radius {radius} must be positive")));
    }
    if min_neighbors == 0 {
        return Ok(cloud.clone());
    }
    let tree = KdTree::new(cloud.positions());
    let keep: Vec<bool> = cloud
        .positions()
        .iter()
        .enumerate()
        .map(|(i, &p)| tree.count_within(p, radius, Some(i), min_neighbors) >= min_neighbors)
        .collect();
    Ok(cloud.filter(&keep))
}

/// Grid of the configured extent where each cell holding points takes the
/// label of the point nearest its center (ties: lower label, then lower
/// point index). Cells won by an ignore point stay free.
pub fn voxelize_semantic(cloud: &PointCloud, config: &OccConfig) -> Result<VoxelGrid> {
    let labels = cloud.labels().ok_or(Error::MissingLabels)?;
    let mut grid = config.empty_grid()?;
    let n = grid.len();
    let mut best_d2 = vec![f64::INFINITY; n];
    let mut best_label = vec![FREE; n];
    for (&p, &l) in cloud.positions().iter().zip(labels) {
        let Some([x, y, z]) = grid.cell_at(p) else { continue };
        let i = grid.linear_index(x, y, z);
        let d2 = grid.center(x, y, z).distance_squared(p);
        if d2 < best_d2[i] || (d2 == best_d2[i] && l < best_label[i]) {
            best_d2[i] = d2;
            best_label[i] = l;
        }
    }
    for i in 0..n {
        if best_d2[i].is_finite() && best_label[i] != IGNORE {
            let [x, y, z] = grid.cell_of(i);
            grid.set(x, y, z, best_label[i]);
        }
    }
    Ok(grid)
}

/// Shared state of a clip once objects and the static scene are
/// accumulated. Individual keyframe grids can then be built independently.
#[derive(Clone, Debug)]
pub struct OccPipeline<'a> {
    pub config: OccConfig,
    pub aggregates: Vec<ObjectAggregate>,
    pub static_scene: PointCloud,
    frames: FrameBoxes<'a>,
}

impl<'a> OccPipeline<'a> {
    /// Validates that every keyframe has annotations and full-frame labels,
    /// then runs aggregation and builds the static scene.
    ///
    /// `frame_labels` maps keyframe timestamps to one label per point of
    /// the frame's cloud; the labels of object points are not used.
    pub fn prepare<S: FrameSource + ?Sized>(
        source: &S,
        annotations: &'a [(i64, Vec<Box3D>)],
        frame_labels: &BTreeMap<i64, Vec<u8>>,
        config: &OccConfig,
        icp: &IcpParams,
    ) -> Result<OccPipeline<'a>> {
        config.dims()?;
        if !(config.filter_radius.is_finite() && config.filter_radius > 0.0) {
            return Err(Error::InvalidParams(format!("filter radius {} must be positive", config.filter_radius)));
        }
        let keyframes = source.keyframes();
        if keyframes.is_empty() {
            return Err(Error::MissingKeyframes("clip has no keyframes".into()));
        }
        for &k in &keyframes {
            let t = source.timestamp_us(k);
            if !annotations.iter().any(|(at, _)| *at == t) {
                return Err(Error::MissingAnnotations(t));
            }
            if !frame_labels.contains_key(&t) {
                return Err(Error::MissingStaticLabels(t));
            }
        }
        let frames: FrameBoxes<'a> =
            annotated_frames(source, annotations)?.into_iter().filter(|(f, _)| source.is_keyframe(*f)).collect();
        let kf_annotations: Vec<(i64, Vec<Box3D>)> =
            frames.iter().map(|(&f, b)| (source.timestamp_us(f), b.to_vec())).collect();
        let aggregates = aggregate_objects(source, &kf_annotations, icp, config.use_non_keyframes)?;

        let mut parts = Vec::with_capacity(frames.len());
        for (&f, boxes) in &frames {
            let t = source.timestamp_us(f);
            let cloud = source.load_cloud(f)?;
            let labels = &frame_labels[&t];
            if labels.len() != cloud.len() {
                return Err(Error::LabelLengthMismatch { expected: cloud.len(), found: labels.len() });
            }
            let sep = separate_frame(&cloud, boxes);
            let static_labels = sep.static_indices.iter().map(|&i| labels[i]).collect();
            parts.push((source.pose(f), cloud.select(&sep.static_indices).into_plain(), static_labels));
        }
        let static_scene = build_static_scene(&parts)?;
        Ok(OccPipeline { config: *config, aggregates, static_scene, frames })
    }

    /// Keyframe indices in time order.
    pub fn keyframes(&self) -> Vec<usize> {
        self.frames.keys().copied().collect()
    }

    /// Grid of one keyframe in its ego coordinates.
    pub fn grid<S: FrameSource + ?Sized>(&self, source: &S, frame: usize) -> Result<VoxelGrid> {
        let boxes = self
            .frames
            .get(&frame)
            .ok_or_else(|| Error::MissingKeyframes(format!("frame {frame} is not an annotated keyframe")))?;
        let combined = compose_frame(&self.static_scene, &source.pose(frame), &self.aggregates, boxes, &self.config)?;
        let filtered = radius_filter(&combined, self.config.filter_radius, self.config.filter_min_neighbors)?;
        voxelize_semantic(&filtered, &self.config)
    }
}

/// Runs the whole pipeline sequentially and returns `(timestamp, grid)` per
/// keyframe.
pub fn generate_occupancy<S: FrameSource + ?Sized>(
    source: &S,
    annotations: &[(i64, Vec<Box3D>)],
    frame_labels: &BTreeMap<i64, Vec<u8>>,
    config: &OccConfig,
    icp: &IcpParams,
) -> Result<Vec<(i64, VoxelGrid)>> {
    let pipeline = OccPipeline::prepare(source, annotations, frame_labels, config, icp)?;
    pipeline.keyframes().into_iter().map(|f| Ok((source.timestamp_us(f), pipeline.grid(source, f)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Size3;
    use crate::source::{MemoryClip, MemoryFrame};
    use core::f64::consts::FRAC_PI_2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bx(center: Vec3, side: f64, id: u32) -> Box3D {
        Box3D::new(center, Size3::new(side, side, side), 0.0, SemanticClass::Car).unwrap().with_track(id)
    }

    fn cloud(points: Vec<Vec3>) -> PointCloud {
        PointCloud::plain(points).unwrap()
    }

    #[test]
    fn separate_simple() {
        let c = cloud(vec![Vec3::ZERO, Vec3::new(5.0, 0.0, 0.0)]);
        let s = separate_frame(&c, &[bx(Vec3::ZERO, 1.0, 1)]);
        assert_eq!(s.objects, vec![vec![0]]);
        assert_eq!(s.static_indices, vec![1]);
        let s = separate_frame(&c, &[]);
        assert_eq!(s.static_indices, vec![0, 1]);
    }

    #[test]
    fn separate_overlap_goes_to_nearest() {
        let c = cloud(vec![Vec3::new(0.4, 0.0, 0.0), Vec3::new(0.5, 0.0, 0.0)]);
        let a = bx(Vec3::ZERO, 2.0, 7);
        let b = bx(Vec3::new(1.0, 0.0, 0.0), 2.0, 3);
        let s = separate_frame(&c, &[a, b]);
        // 0.4 is nearer A; 0.5 is equidistant and goes to the lower id.
        assert_eq!(s.objects, vec![vec![0], vec![1]]);
    }

    #[test]
    fn static_scene_offsets() {
        let local = cloud(vec![Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0)]);
        let parts = vec![
            (Pose::IDENTITY, local.clone(), vec![7, 8]),
            (Pose::from_translation(Vec3::new(1.0, 0.0, 0.0)), local.clone(), vec![7, 8]),
        ];
        let s = build_static_scene(&parts).unwrap();
        assert_eq!(s.positions()[2], Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(s.labels().unwrap(), &[7, 8, 7, 8]);
        let bad = vec![(Pose::IDENTITY, local, vec![7])];
        assert!(matches!(build_static_scene(&bad), Err(Error::LabelLengthMismatch { .. })));
    }

    #[test]
    fn compose_places_templates() {
        let scene = cloud(vec![Vec3::new(1.0, 1.0, 0.0)]).with_labels(vec![7]).unwrap();
        let agg = ObjectAggregate {
            track_id: 4,
            class: SemanticClass::Car,
            template: cloud(vec![Vec3::new(1.0, 0.0, 0.0)]),
            source_frame_count: 1,
        };
        let cfg = OccConfig::default();
        let only = compose_frame(&scene, &Pose::IDENTITY, core::slice::from_ref(&agg), &[], &cfg).unwrap();
        assert_eq!(only.len(), 1);
        let b = Box3D::new(Vec3::new(10.0, 0.0, 0.0), Size3::new(4.0, 2.0, 1.5), FRAC_PI_2, SemanticClass::Car)
            .unwrap()
            .with_track(4);
        let out = compose_frame(&scene, &Pose::IDENTITY, core::slice::from_ref(&agg), &[b], &cfg).unwrap();
        let p = out.positions()[1];
        assert!((p.x - 10.0).abs() < 1e-9 && (p.y - 1.0).abs() < 1e-9 && p.z.abs() < 1e-9);
        assert_eq!(out.labels().unwrap(), &[7, 0]);
        let stranger = b.with_track(5);
        assert_eq!(compose_frame(&scene, &Pose::IDENTITY, &[agg], &[stranger], &cfg), Err(Error::MissingAggregate(5)));
    }

    #[test]
    fn radius_filter_cases() {
        let line = cloud((0..5).map(|i| Vec3::new(i as f64 * 0.2, 0.0, 0.0)).collect());
        let out = radius_filter(&line, 0.3, 2).unwrap();
        assert_eq!(out.positions(), &line.positions()[1..4]);
        assert_eq!(radius_filter(&line, 0.3, 0).unwrap(), line);
        let single = cloud(vec![Vec3::ZERO]);
        assert!(radius_filter(&single, 0.3, 1).unwrap().is_empty());
    }

    #[test]
    fn radius_filter_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vec3> =
            (0..400).map(|_| Vec3::new(rng.random_range(0.0..4.0), rng.random_range(0.0..4.0), 0.0)).collect();
        let c = cloud(pts.clone());
        let out = radius_filter(&c, 0.3, 3).unwrap();
        let expect: Vec<Vec3> = pts
            .iter()
            .enumerate()
            .filter(|(i, p)| pts.iter().enumerate().filter(|(j, q)| j != i && q.distance(**p) <= 0.3).count() >= 3)
            .map(|(_, p)| *p)
            .collect();
        assert_eq!(out.positions(), &expect[..]);
    }

    #[test]
    fn voxelize_cases() {
        let cfg = OccConfig::default();
        let c = cloud(vec![Vec3::new(0.05, 0.05, 0.05)]).with_labels(vec![3]).unwrap();
        let g = voxelize_semantic(&c, &cfg).unwrap();
        assert_eq!(g.get(150, 100, 7), 3);
        assert_eq!(g.occupied_count(), 1);
        let empty = PointCloud::default().with_labels(Vec::new()).unwrap();
        assert_eq!(voxelize_semantic(&empty, &cfg).unwrap().occupied_count(), 0);
        // Cell center is (0.2, 0.2, 0.0).
        let two = cloud(vec![Vec3::new(0.05, 0.05, 0.05), Vec3::new(0.19, 0.2, 0.0)]).with_labels(vec![0, 9]).unwrap();
        assert_eq!(voxelize_semantic(&two, &cfg).unwrap().get(150, 100, 7), 9);
        let ignored = cloud(vec![Vec3::new(0.2, 0.2, 0.0), Vec3::new(0.05, 0.05, 0.05)])
            .with_labels(vec![IGNORE, 0])
            .unwrap();
        assert_eq!(voxelize_semantic(&ignored, &cfg).unwrap().get(150, 100, 7), FREE);
        assert_eq!(voxelize_semantic(&cloud(vec![]), &cfg), Err(Error::MissingLabels));
    }

    #[test]
    fn voxelize_matches_brute_force() {
        let cfg = OccConfig {
            range: [0.0, 8.0, 0.0, 8.0, 0.0, 4.0],
            ..OccConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let codes = [0u8, 1, 7, 9, 10, IGNORE];
        let pts: Vec<Vec3> = (0..3000)
            .map(|_| {
                // Snap to a coarse lattice so exact distance ties occur.
                let s = |r: &mut ChaCha8Rng, hi: f64| libm::round(r.random_range(-0.5..hi) * 20.0) / 20.0;
                Vec3::new(s(&mut rng, 8.5), s(&mut rng, 8.5), s(&mut rng, 4.5))
            })
            .collect();
        let labels: Vec<u8> = (0..pts.len()).map(|_| codes[rng.random_range(0..codes.len())]).collect();
        let g = voxelize_semantic(&cloud(pts.clone()).with_labels(labels.clone()).unwrap(), &cfg).unwrap();
        let [nx, ny, nz] = cfg.dims().unwrap();
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    let c = g.center(x, y, z);
                    let best = (0..pts.len())
                        .filter(|&i| g.cell_at(pts[i]) == Some([x, y, z]))
                        .min_by(|&a, &b| {
                            pts[a].distance_squared(c).total_cmp(&pts[b].distance_squared(c)).then(labels[a].cmp(&labels[b]))
                        });
                    let expect = match best {
                        Some(i) if labels[i] != IGNORE => labels[i],
                        _ => FREE,
                    };
                    assert_eq!(g.get(x, y, z), expect);
                }
            }
        }
    }

    /// Parked car seen identically from five frames, keyframes 0 and 4.
    fn parked_clip() -> (MemoryClip, Vec<(i64, Vec<Box3D>)>, usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let car = Box3D::new(Vec3::new(8.0, 2.0, 0.8), Size3::new(4.0, 1.8, 1.6), 0.3, SemanticClass::Car)
            .unwrap()
            .with_track(1);
        let local: Vec<Vec3> = (0..300)
            .map(|k| {
                let (x, y, z) = (rng.random_range(-1.9..1.9), rng.random_range(-0.8..0.8), rng.random_range(-0.7..0.7));
                match k % 3 {
                    0 => Vec3::new(x, -0.8, z),
                    1 => Vec3::new(-1.9, y, z),
                    _ => Vec3::new(x, y, 0.7),
                }
            })
            .collect();
        let frames = (0..5)
            .map(|f| {
                let pose = Pose::from_translation(Vec3::new(0.5 * f as f64, 0.0, 0.0)).with_timestamp(f * 100_000);
                let ego_car = car.transformed(&pose.inverse());
                let mut pts: Vec<Vec3> = local.iter().map(|&p| ego_car.to_parent(p)).collect();
                pts.push(Vec3::new(-3.0, -3.0, 0.0));
                MemoryFrame { pose, keyframe: f % 4 == 0, cloud: cloud(pts) }
            })
            .collect();
        let clip = MemoryClip::new(frames).unwrap();
        let ann = [0usize, 4]
            .iter()
            .map(|&f| (clip.frames[f].pose.timestamp_us, vec![car.transformed(&clip.frames[f].pose.inverse())]))
            .collect();
        (clip, ann, local.len())
    }

    #[test]
    fn parked_car_aggregates_every_frame() {
        let (clip, ann, per_frame) = parked_clip();
        let aggs = aggregate_objects(&clip, &ann, &IcpParams::default(), true).unwrap();
        assert_eq!(aggs.len(), 1);
        assert_eq!(aggs[0].template.len(), 5 * per_frame);
        assert_eq!(aggs[0].source_frame_count, 5);
        let kf_only = aggregate_objects(&clip, &ann, &IcpParams::default(), false).unwrap();
        assert_eq!(kf_only[0].template.len(), 2 * per_frame);
    }

    #[test]
    fn empty_non_keyframe_crop_is_skipped() {
        let (mut clip, ann, per_frame) = parked_clip();
        clip.frames[2].cloud = PointCloud::default();
        let aggs = aggregate_objects(&clip, &ann, &IcpParams::default(), true).unwrap();
        assert_eq!(aggs[0].template.len(), 4 * per_frame);
    }

    #[test]
    fn pipeline_fails_fast_without_labels() {
        let (clip, ann, _) = parked_clip();
        let mut labels = BTreeMap::new();
        labels.insert(0, vec![IGNORE; clip.frames[0].cloud.len()]);
        let cfg = OccConfig::default();
        let r = generate_occupancy(&clip, &ann, &labels, &cfg, &IcpParams::default());
        assert_eq!(r.unwrap_err(), Error::MissingStaticLabels(400_000));
        labels.insert(400_000, vec![IGNORE; 3]);
        let r = generate_occupancy(&clip, &ann, &labels, &cfg, &IcpParams::default());
        assert!(matches!(r, Err(Error::LabelLengthMismatch { .. })));
    }

    #[test]
    fn pipeline_labels_objects() {
        let (clip, ann, _) = parked_clip();
        let labels = [0i64, 400_000].iter().map(|&t| (t, vec![7u8; 301])).collect();
        let grids = generate_occupancy(&clip, &ann, &labels, &OccConfig::default(), &IcpParams::default()).unwrap();
        assert_eq!(grids.len(), 2);
        for (_, g) in &grids {
            assert!(g.labels().iter().filter(|&&c| c == 0).count() > 10);
            // The lone static point has no neighbours and is filtered out.
            assert!(!g.labels().contains(&7));
        }
    }
}
