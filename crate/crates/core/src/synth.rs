//! Deterministic synthetic clips with exact ground truth.
//!
//! A scenario is a set of static surfaces (horizontal planes, vertical walls,
//! box obstacles) and constant-velocity actors seen by an ego vehicle that
//! follows piecewise-linear waypoints. Every frame samples all surfaces
//! with stratified random points; the same scenario and seed always give
//! the same points.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::classes::SemanticClass;
use crate::error::{Error, Result};
use crate::geometry::{Box3D, LidarAttrs, PointAttributes, PointCloud, Pose, Size3};
use crate::math::{angle_delta, normalize_angle, Vec3};
use crate::source::FrameSource;
use crate::voxel::{OccConfig, VoxelGrid};

/// Actor points are placed this far inside the box faces so that rounding
/// never moves them outside their annotation, even after f32 storage.
const ACTOR_INSET: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Waypoint {
    pub time_s: f64,
    /// BEV position in the global frame, m.
    pub position: [f64; 2],
    pub yaw: f64,
}

/// Static surface with a semantic label.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum Primitive {
    /// Horizontal rectangle `min..max` at height `z`.
    Plane { min: [f64; 2], max: [f64; 2], z: f64, label: SemanticClass },
    /// Vertical rectangle over the segment `start..end` between `z_min` and
    /// `z_max`.
    Wall { start: [f64; 2], end: [f64; 2], z_min: f64, z_max: f64, label: SemanticClass },
    /// Surface of a yaw-rotated box.
    Block { center: [f64; 3], size: Size3, yaw: f64, label: SemanticClass },
}

impl Primitive {
    pub fn label(&self) -> SemanticClass {
        match self {
            Primitive::Plane { label, .. } | Primitive::Wall { label, .. } | Primitive::Block { label, .. } => *label,
        }
    }

    /// Euclidean distance from `p` to the surface.
    pub fn distance(&self, p: Vec3) -> f64 {
        match *self {
            Primitive::Plane { min, max, z, .. } => {
                let dx = (min[0] - p.x).max(0.0).max(p.x - max[0]);
                let dy = (min[1] - p.y).max(0.0).max(p.y - max[1]);
                libm::sqrt(dx * dx + dy * dy + (p.z - z) * (p.z - z))
            }
            Primitive::Wall { start, end, z_min, z_max, .. } => {
                let (a, b) = (Vec3::new(start[0], start[1], 0.0), Vec3::new(end[0], end[1], 0.0));
                let ab = b - a;
                let q = Vec3::new(p.x, p.y, 0.0);
                let s = ((q - a).dot(ab) / ab.norm_squared()).clamp(0.0, 1.0);
                let horizontal = q.distance(a + ab.scale(s));
                let dz = (z_min - p.z).max(0.0).max(p.z - z_max);
                libm::hypot(horizontal, dz)
            }
            Primitive::Block { center, size, yaw, .. } => {
                let bx = block_box(center, size, yaw);
                let l = bx.to_local(p);
                let h = size.half();
                let d = Vec3::new(libm::fabs(l.x) - h.x, libm::fabs(l.y) - h.y, libm::fabs(l.z) - h.z);
                let outside = Vec3::new(d.x.max(0.0), d.y.max(0.0), d.z.max(0.0)).norm();
                let inside = d.x.max(d.y).max(d.z).min(0.0);
                outside - inside
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Primitive::Plane { min, max, z, .. } => min[0] < max[0] && min[1] < max[1] && z.is_finite(),
            Primitive::Wall { start, end, z_min, z_max, .. } => {
                z_min < z_max && libm::hypot(end[0] - start[0], end[1] - start[1]) > 0.0
            }
            Primitive::Block { center, size, yaw, .. } => {
                size.is_valid() && yaw.is_finite() && center.iter().all(|v| v.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!("degenerate primitive {self:?}")))
        }
    }
}

fn block_box(center: [f64; 3], size: Size3, yaw: f64) -> Box3D {
    Box3D {
        center: Vec3::new(center[0], center[1], center[2]),
        size,
        yaw: normalize_angle(yaw),
        velocity: [0.0, 0.0],
        class: SemanticClass::Manmade,
        track_id: None,
        score: None,
    }
}

/// Box-shaped object moving at constant BEV velocity.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Actor {
    /// Defaults to the actor's position in the list.
    #[cfg_attr(feature = "serde", serde(default))]
    pub track_id: Option<u32>,
    pub class: SemanticClass,
    pub size: Size3,
    /// Box center at time 0 in the global frame.
    pub start: [f64; 3],
    pub velocity: [f64; 2],
    #[cfg_attr(feature = "serde", serde(default))]
    pub yaw: f64,
    /// Point the box along its velocity instead of using `yaw`.
    #[cfg_attr(feature = "serde", serde(default))]
    pub yaw_follows_heading: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScenarioSpec {
    #[cfg_attr(feature = "serde", serde(default))]
    pub name: String,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
    pub duration_s: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_frame_rate"))]
    pub frame_rate_hz: u32,
    #[cfg_attr(feature = "serde", serde(default = "default_keyframe_rate"))]
    pub keyframe_rate_hz: u32,
    pub ego: Vec<Waypoint>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub primitives: Vec<Primitive>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub actors: Vec<Actor>,
    /// Points per m² of surface.
    pub density: f64,
    /// Standard deviation of isotropic position noise, m.
    #[cfg_attr(feature = "serde", serde(default))]
    pub noise_sigma: f64,
}

#[cfg(feature = "serde")]
fn default_frame_rate() -> u32 {
    10
}

#[cfg(feature = "serde")]
fn default_keyframe_rate() -> u32 {
    2
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad(format!("duration {} must be positive", self.duration_s));
        }
        if self.frame_rate_hz == 0 || self.keyframe_rate_hz == 0 || !self.frame_rate_hz.is_multiple_of(self.keyframe_rate_hz) {
            return bad(format!(
                "frame rate {} must be a positive multiple of keyframe rate {}",
                self.frame_rate_hz, self.keyframe_rate_hz
            ));
        }
        if 1_000_000 % self.frame_rate_hz != 0 {
            return bad(format!("frame rate {} must divide one second in microseconds", self.frame_rate_hz));
        }
        if !(self.density.is_finite() && self.density > 0.0) {
            return bad(format!("density {} must be positive", self.density));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise sigma {} must be non-negative", self.noise_sigma));
        }
        if self.ego.is_empty() {
            return bad("ego trajectory needs at least one waypoint".into());
        }
        if self.ego.windows(2).any(|w| !(w[0].time_s < w[1].time_s)) {
            return bad("ego waypoint times must strictly increase".into());
        }
        if self.ego.iter().any(|w| !(w.time_s.is_finite() && w.yaw.is_finite() && w.position.iter().all(|v| v.is_finite()))) {
            return bad("ego waypoints must be finite".into());
        }
        for p in &self.primitives {
            p.validate()?;
        }
        let mut ids = Vec::new();
        for (i, a) in self.actors.iter().enumerate() {
            if !a.size.is_valid() || !a.start.iter().chain(&a.velocity).all(|v| v.is_finite()) || !a.yaw.is_finite() {
                return bad(format!("actor {i} has invalid geometry"));
            }
            ids.push(self.track_id(i));
        }
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("actor track ids must be unique".into());
        }
        Ok(())
    }

    pub fn frame_count(&self) -> usize {
        libm::round(self.duration_s * f64::from(self.frame_rate_hz)) as usize
    }

    pub fn frame_period_us(&self) -> i64 {
        i64::from(1_000_000 / self.frame_rate_hz)
    }

    pub fn timestamp_us(&self, frame: usize) -> i64 {
        frame as i64 * self.frame_period_us()
    }

    pub fn is_keyframe(&self, frame: usize) -> bool {
        frame.is_multiple_of((self.frame_rate_hz / self.keyframe_rate_hz) as usize)
    }

    pub fn keyframes(&self) -> Vec<usize> {
        (0..self.frame_count()).filter(|&f| self.is_keyframe(f)).collect()
    }

    pub fn track_id(&self, actor: usize) -> u32 {
        self.actors[actor].track_id.unwrap_or(actor as u32)
    }

    /// Ego pose at `t` seconds: linear between waypoints, held before the
    /// first and after the last.
    pub fn ego_pose(&self, t: f64) -> Pose {
        let w = &self.ego;
        let i = w.partition_point(|p| p.time_s <= t);
        let (pos, yaw) = if i == 0 {
            (w[0].position, w[0].yaw)
        } else if i == w.len() {
            (w[i - 1].position, w[i - 1].yaw)
        } else {
            let (a, b) = (&w[i - 1], &w[i]);
            let f = (t - a.time_s) / (b.time_s - a.time_s);
            let lerp = |u: f64, v: f64| if f == 0.0 { u } else { u + f * (v - u) };
            (
                [lerp(a.position[0], b.position[0]), lerp(a.position[1], b.position[1])],
                a.yaw + f * angle_delta(a.yaw, b.yaw),
            )
        };
        Pose::from_yaw(Vec3::new(pos[0], pos[1], 0.0), yaw)
    }

    /// Exact global box of an actor at `t` seconds.
    pub fn actor_box(&self, actor: usize, t: f64) -> Box3D {
        let a = &self.actors[actor];
        let yaw = if a.yaw_follows_heading && (a.velocity[0] != 0.0 || a.velocity[1] != 0.0) {
            libm::atan2(a.velocity[1], a.velocity[0])
        } else {
            a.yaw
        };
        Box3D {
            center: Vec3::new(a.start[0] + a.velocity[0] * t, a.start[1] + a.velocity[1] * t, a.start[2]),
            size: a.size,
            yaw: normalize_angle(yaw),
            velocity: a.velocity,
            class: a.class,
            track_id: Some(self.track_id(actor)),
            score: None,
        }
    }

    fn frame_time(&self, frame: usize) -> f64 {
        self.timestamp_us(frame) as f64 / 1e6
    }
}

/// One generated frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthFrame {
    pub timestamp_us: i64,
    pub keyframe: bool,
    /// Ego to global, stamped with the frame time.
    pub pose: Pose,
    /// LiDAR points in ego coordinates.
    pub cloud: PointCloud,
    /// Semantic code of every point.
    pub labels: Vec<u8>,
    /// Exact actor boxes in ego coordinates, ordered by track id.
    pub boxes: Vec<Box3D>,
}

/// Generates frame `frame`. Each primitive and actor draws from its own
/// random stream keyed by `(seed, frame, item)`.
pub fn generate_frame(spec: &ScenarioSpec, frame: usize) -> Result<SynthFrame> {
    spec.validate()?;
    if frame >= spec.frame_count() {
        return Err(Error::OutOfRange { t: frame as i64, t0: 0, t1: spec.frame_count() as i64 - 1 });
    }
    let t = spec.frame_time(frame);
    let pose = spec.ego_pose(t).with_timestamp(spec.timestamp_us(frame));
    let to_ego = pose.inverse();
    let mut global: Vec<Vec3> = Vec::new();
    let mut labels = Vec::new();
    let items = spec.primitives.len() + spec.actors.len();
    for item in 0..items {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(((frame as u64) << 32) | item as u64);
        let start = global.len();
        let code = if item < spec.primitives.len() {
            let p = &spec.primitives[item];
            sample_primitive(p, spec.density, &mut rng, &mut global);
            p.label().code()
        } else {
            let b = spec.actor_box(item - spec.primitives.len(), t);
            sample_box_surface(&b, ACTOR_INSET, spec.density, &mut rng, &mut global);
            b.class.code()
        };
        if spec.noise_sigma > 0.0 {
            for p in &mut global[start..] {
                let n: [f64; 3] = [0; 3].map(|_| StandardNormal.sample(&mut rng));
                *p += Vec3::new(n[0], n[1], n[2]).scale(spec.noise_sigma);
            }
        }
        labels.resize(global.len(), code);
    }

    let positions: Vec<Vec3> = global.iter().map(|&p| to_ego.apply(p)).collect();
    let period = 1.0 / f64::from(spec.frame_rate_hz);
    let mut attrs = LidarAttrs::default();
    for (p, &code) in positions.iter().zip(&labels) {
        let azimuth = libm::atan2(p.y, p.x);
        let elevation = libm::atan2(p.z, libm::hypot(p.x, p.y)).to_degrees();
        attrs.intensity.push(0.2 + 0.05 * f32::from(code));
        attrs.ring.push(libm::floor(((elevation + 25.0) / 40.0 * 32.0).clamp(0.0, 31.0)) as u32);
        attrs.time_s.push(t + (azimuth + core::f64::consts::PI) / (2.0 * core::f64::consts::PI) * period);
    }
    let cloud = PointCloud::new(positions, PointAttributes::Lidar(attrs))?;

    let mut boxes: Vec<Box3D> = (0..spec.actors.len()).map(|a| spec.actor_box(a, t).transformed(&to_ego)).collect();
    boxes.sort_by_key(|b| b.track_id);
    Ok(SynthFrame { timestamp_us: spec.timestamp_us(frame), keyframe: spec.is_keyframe(frame), pose, cloud, labels, boxes })
}

/// One uniform point in each cell of a grid over the unit square whose cell
/// count matches `density` on an `a × b` m surface.
fn stratified(a: f64, b: f64, density: f64, rng: &mut ChaCha8Rng, mut emit: impl FnMut(f64, f64)) {
    let side = 1.0 / libm::sqrt(density);
    let nu = libm::ceil(a / side).max(1.0) as usize;
    let nv = libm::ceil(b / side).max(1.0) as usize;
    for i in 0..nu {
        for j in 0..nv {
            let u = (i as f64 + rng.random::<f64>()) / nu as f64;
            let v = (j as f64 + rng.random::<f64>()) / nv as f64;
            emit(u, v);
        }
    }
}

fn sample_primitive(p: &Primitive, density: f64, rng: &mut ChaCha8Rng, out: &mut Vec<Vec3>) {
    match *p {
        Primitive::Plane { min, max, z, .. } => {
            let (a, b) = (max[0] - min[0], max[1] - min[1]);
            stratified(a, b, density, rng, |u, v| out.push(Vec3::new(min[0] + u * a, min[1] + v * b, z)));
        }
        Primitive::Wall { start, end, z_min, z_max, .. } => {
            let len = libm::hypot(end[0] - start[0], end[1] - start[1]);
            stratified(len, z_max - z_min, density, rng, |u, v| {
                out.push(Vec3::new(
                    start[0] + u * (end[0] - start[0]),
                    start[1] + u * (end[1] - start[1]),
                    z_min + v * (z_max - z_min),
                ))
            });
        }
        Primitive::Block { center, size, yaw, .. } => {
            sample_box_surface(&block_box(center, size, yaw), 0.0, density, rng, out);
        }
    }
}

/// Samples all six faces of `b`, pulled `inset` metres towards the center.
fn sample_box_surface(b: &Box3D, inset: f64, density: f64, rng: &mut ChaCha8Rng, out: &mut Vec<Vec3>) {
    let h = b.size.half();
    let h = Vec3::new(h.x - inset, h.y - inset, h.z - inset);
    for axis in 0..3 {
        let (ua, va) = ((axis + 1) % 3, (axis + 2) % 3);
        let (eu, ev) = (2.0 * h.get(ua), 2.0 * h.get(va));
        for sign in [-1.0, 1.0] {
            stratified(eu, ev, density, rng, |u, v| {
                let mut c = [0.0; 3];
                c[axis] = sign * h.get(axis);
                c[ua] = -h.get(ua) + u * eu;
                c[va] = -h.get(va) + v * ev;
                out.push(b.to_parent(Vec3::new(c[0], c[1], c[2])));
            });
        }
    }
}

/// Exact grid of keyframe number `keyframe_index` (counted among
/// keyframes) in that keyframe's ego frame.
///
/// A cell whose center lies inside an actor box takes the actor class
/// (lowest track id on overlap). Otherwise a cell whose center is within
/// half a voxel of a primitive takes the nearest primitive's label (ties:
/// lower code).
pub fn analytic_occupancy(spec: &ScenarioSpec, keyframe_index: usize, config: &OccConfig) -> Result<VoxelGrid> {
    spec.validate()?;
    let keyframes = spec.keyframes();
    let &frame = keyframes.get(keyframe_index).ok_or(Error::OutOfRange {
        t: keyframe_index as i64,
        t0: 0,
        t1: keyframes.len() as i64 - 1,
    })?;
    let t = spec.frame_time(frame);
    let to_global = spec.ego_pose(t);
    let to_ego = to_global.inverse();
    let mut grid = config.empty_grid()?;
    let tau = config.voxel_size / 2.0;
    let mut actors: Vec<Box3D> = (0..spec.actors.len()).map(|a| spec.actor_box(a, t).transformed(&to_ego)).collect();
    actors.sort_by_key(|b| b.track_id);

    // Only cells near some primitive or actor can be occupied; scan the
    // bounding range of each item rather than the whole grid.
    let [nx, ny, nz] = grid.dims;
    let mut candidates: Vec<usize> = Vec::new();
    let mut mark = |lo: Vec3, hi: Vec3, grid: &VoxelGrid| {
        let range = |a: usize, n: u32| {
            let cell = |v: f64| libm::floor((v - grid.origin.get(a)) / grid.voxel_size);
            let l = cell(lo.get(a)).max(0.0) as i64;
            let h = cell(hi.get(a)).min(f64::from(n) - 1.0) as i64;
            l..=h
        };
        for x in range(0, nx) {
            for y in range(1, ny) {
                for z in range(2, nz) {
                    candidates.push(grid.linear_index(x as u32, y as u32, z as u32));
                }
            }
        }
    };
    for p in &spec.primitives {
        let (lo, hi) = ego_bounds(&primitive_corners(p), &to_ego, tau);
        mark(lo, hi, &grid);
    }
    for b in &actors {
        let (lo, hi) = ego_bounds(&box_corners(b), &Pose::IDENTITY, tau);
        mark(lo, hi, &grid);
    }
    candidates.sort_unstable();
    candidates.dedup();

    for i in candidates {
        let [x, y, z] = grid.cell_of(i);
        let c = grid.center(x, y, z);
        if let Some(b) = actors.iter().find(|b| b.contains(c)) {
            grid.set(x, y, z, b.class.code());
            continue;
        }
        let g = to_global.apply(c);
        let mut best: Option<(f64, u8)> = None;
        for p in &spec.primitives {
            let d = p.distance(g);
            let code = p.label().code();
            if d <= tau && best.is_none_or(|(bd, bc)| d < bd || (d == bd && code < bc)) {
                best = Some((d, code));
            }
        }
        if let Some((_, code)) = best {
            grid.set(x, y, z, code);
        }
    }
    Ok(grid)
}

fn box_corners(b: &Box3D) -> Vec<Vec3> {
    let h = b.size.half();
    let mut out = Vec::with_capacity(8);
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sz in [-1.0, 1.0] {
                out.push(b.to_parent(Vec3::new(sx * h.x, sy * h.y, sz * h.z)));
            }
        }
    }
    out
}

fn primitive_corners(p: &Primitive) -> Vec<Vec3> {
    match *p {
        Primitive::Plane { min, max, z, .. } => {
            alloc::vec![Vec3::new(min[0], min[1], z), Vec3::new(max[0], max[1], z), Vec3::new(min[0], max[1], z), Vec3::new(max[0], min[1], z)]
        }
        Primitive::Wall { start, end, z_min, z_max, .. } => alloc::vec![
            Vec3::new(start[0], start[1], z_min),
            Vec3::new(end[0], end[1], z_max),
            Vec3::new(start[0], start[1], z_max),
            Vec3::new(end[0], end[1], z_min),
        ],
        Primitive::Block { center, size, yaw, .. } => box_corners(&block_box(center, size, yaw)),
    }
}

fn ego_bounds(corners: &[Vec3], to_ego: &Pose, pad: f64) -> (Vec3, Vec3) {
    let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = -lo;
    for &c in corners {
        let q = to_ego.apply(c);
        lo = Vec3::new(lo.x.min(q.x), lo.y.min(q.y), lo.z.min(q.z));
        hi = Vec3::new(hi.x.max(q.x), hi.y.max(q.y), hi.z.max(q.z));
    }
    let pad = Vec3::new(pad, pad, pad);
    (lo - pad, hi + pad)
}

/// A scenario viewed as a clip; clouds are generated on demand.
#[derive(Clone, Debug)]
pub struct SynthClip {
    spec: ScenarioSpec,
}

impl SynthClip {
    pub fn new(spec: ScenarioSpec) -> Result<SynthClip> {
        spec.validate()?;
        Ok(SynthClip { spec })
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    /// Exact ego-frame boxes of every frame.
    pub fn annotations(&self) -> Vec<(i64, Vec<Box3D>)> {
        (0..self.spec.frame_count())
            .map(|f| {
                let t = self.spec.frame_time(f);
                let to_ego = self.spec.ego_pose(t).inverse();
                let mut boxes: Vec<Box3D> =
                    (0..self.spec.actors.len()).map(|a| self.spec.actor_box(a, t).transformed(&to_ego)).collect();
                boxes.sort_by_key(|b| b.track_id);
                (self.spec.timestamp_us(f), boxes)
            })
            .collect()
    }

    /// Annotations restricted to keyframes.
    pub fn keyframe_annotations(&self) -> Vec<(i64, Vec<Box3D>)> {
        let mut all = self.annotations();
        all.retain(|(t, _)| self.spec.is_keyframe((*t / self.spec.frame_period_us()) as usize));
        all
    }
}

impl FrameSource for SynthClip {
    fn frame_count(&self) -> usize {
        self.spec.frame_count()
    }

    fn timestamp_us(&self, frame: usize) -> i64 {
        self.spec.timestamp_us(frame)
    }

    fn pose(&self, frame: usize) -> Pose {
        self.spec.ego_pose(self.spec.frame_time(frame)).with_timestamp(self.spec.timestamp_us(frame))
    }

    fn is_keyframe(&self, frame: usize) -> bool {
        self.spec.is_keyframe(frame)
    }

    fn load_cloud(&self, frame: usize) -> Result<PointCloud> {
        generate_frame(&self.spec, frame)
            .map(|f| f.cloud)
            .map_err(|e| Error::Source { frame, message: format!("{e}") })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn road_spec() -> ScenarioSpec {
        ScenarioSpec {
            name: String::new(),
            seed: 1,
            duration_s: 3.0,
            frame_rate_hz: 10,
            keyframe_rate_hz: 2,
            ego: vec![
                Waypoint { time_s: 0.0, position: [0.0, 0.0], yaw: 0.0 },
                Waypoint { time_s: 3.0, position: [15.0, 0.0], yaw: 0.0 },
            ],
            primitives: vec![Primitive::Plane {
                min: [-10.0, -5.0],
                max: [30.0, 5.0],
                z: 0.0,
                label: SemanticClass::DriveableSurface,
            }],
            actors: vec![Actor {
                track_id: Some(4),
                class: SemanticClass::Car,
                size: Size3::new(4.2, 1.8, 1.6),
                start: [20.0, 3.0, 1.1],
                velocity: [0.0, 0.0],
                yaw: 0.0,
                yaw_follows_heading: false,
            }],
            density: 20.0,
            noise_sigma: 0.0,
        }
    }

    #[test]
    fn cadence_and_parked_car() {
        let spec = road_spec();
        assert_eq!(spec.frame_count(), 30);
        assert_eq!(spec.keyframes(), vec![0, 5, 10, 15, 20, 25]);
        for f in spec.keyframes() {
            let frame = generate_frame(&spec, f).unwrap();
            let b = frame.boxes[0];
            let ego_x = 5.0 * f as f64 / 10.0;
            assert!((b.center.x - (20.0 - ego_x)).abs() < 1e-9);
            assert!((b.center.y - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_and_on_surfaces() {
        let mut spec = road_spec();
        let a = generate_frame(&spec, 3).unwrap();
        assert_eq!(a, generate_frame(&spec, 3).unwrap());
        assert_ne!(a.cloud, generate_frame(&spec, 4).unwrap().cloud);
        let g: Vec<Vec3> = a.cloud.positions().iter().map(|&p| a.pose.apply(p)).collect();
        let car = spec.actor_box(0, 0.3);
        let mut in_car = 0;
        for (p, &l) in g.iter().zip(&a.labels) {
            if l == 7 {
                assert!(spec.primitives[0].distance(*p) < 1e-9);
            } else {
                in_car += usize::from(car.contains(*p));
            }
        }
        let car_points = a.labels.iter().filter(|&&l| l == 0).count();
        assert_eq!(in_car, car_points);

        spec.noise_sigma = 0.05;
        let n = generate_frame(&spec, 3).unwrap();
        for (p, &l) in n.cloud.positions().iter().zip(&n.labels) {
            if l == 7 {
                assert!(spec.primitives[0].distance(n.pose.apply(*p)) <= 4.0 * 0.05 * libm::sqrt(3.0));
            }
        }
    }

    #[test]
    fn plane_occupies_one_layer() {
        let mut spec = road_spec();
        spec.actors.clear();
        let g = analytic_occupancy(&spec, 0, &OccConfig::default()).unwrap();
        for i in 0..g.len() {
            let [x, y, z] = g.cell_of(i);
            let c = g.center(x, y, z);
            let dx = (-10.0 - c.x).max(0.0).max(c.x - 30.0);
            let dy = (-5.0 - c.y).max(0.0).max(c.y - 5.0);
            let inside = libm::hypot(dx, dy) <= 0.2;
            let expect = if z == 7 && inside { 7 } else { crate::FREE };
            assert_eq!(g.get(x, y, z), expect, "cell {x} {y} {z}");
        }
    }

    #[test]
    fn small_actor_and_empty_scene() {
        let mut spec = road_spec();
        spec.primitives.clear();
        spec.actors[0].size = Size3::new(0.1, 0.1, 0.1);
        spec.actors[0].start = [0.2, 0.2, 0.0];
        let g = analytic_occupancy(&spec, 0, &OccConfig::default()).unwrap();
        assert_eq!(g.get(150, 100, 7), 0);
        assert_eq!(g.occupied_count(), 1);
        spec.actors.clear();
        assert_eq!(analytic_occupancy(&spec, 0, &OccConfig::default()).unwrap().occupied_count(), 0);
        assert!(matches!(analytic_occupancy(&spec, 6, &OccConfig::default()), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn block_distance() {
        let b = Primitive::Block { center: [0.0, 0.0, 1.0], size: Size3::new(2.0, 2.0, 2.0), yaw: 0.3, label: SemanticClass::Vegetation };
        assert!(b.distance(Vec3::new(0.0, 0.0, 1.0)) - 1.0 < 1e-12);
        assert!((b.distance(Vec3::new(0.0, 0.0, 2.5)) - 0.5).abs() < 1e-12);
        let w = Primitive::Wall { start: [0.0, 0.0], end: [10.0, 0.0], z_min: 0.0, z_max: 2.0, label: SemanticClass::Manmade };
        assert!((w.distance(Vec3::new(5.0, 0.3, 1.0)) - 0.3).abs() < 1e-12);
        assert!((w.distance(Vec3::new(-3.0, 4.0, 1.0)) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_specs() {
        let mut s = road_spec();
        s.keyframe_rate_hz = 3;
        assert!(matches!(s.validate(), Err(Error::InvalidSpec(_))));
        let mut s = road_spec();
        s.density = 0.0;
        assert!(matches!(s.validate(), Err(Error::InvalidSpec(_))));
    }
}
