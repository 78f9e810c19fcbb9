//! Rigid poses, yaw-only 3D boxes and columnar point clouds.

use alloc::format;
use alloc::vec::Vec;

use crate::classes::SemanticClass;
use crate::error::{Error, Result};
use crate::math::{normalize_angle, Quat, Vec3};

/// SE(3) transform from a local frame into a parent frame, stamped with the
/// time it was observed.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Pose {
    pub translation: Vec3,
    pub rotation: Quat,
    pub timestamp_us: i64,
}

impl Pose {
    pub const IDENTITY: Pose = Pose { translation: Vec3::ZERO, rotation: Quat::IDENTITY, timestamp_us: 0 };

    /// Validates and normalizes the rotation.
    pub fn new(translation: Vec3, rotation: Quat, timestamp_us: i64) -> Result<Pose> {
        if !translation.is_finite() {
            return Err(Error::InvalidPose(format!("non-finite translation {translation:?}")));
        }
        let rotation = rotation
            .normalized()
            .ok_or_else(|| Error::InvalidPose(format!("degenerate rotation {rotation:?}")))?;
        Ok(Pose { translation, rotation, timestamp_us })
    }

    pub fn from_translation(t: Vec3) -> Pose {
        Pose { translation: t, ..Pose::IDENTITY }
    }

    /// Planar pose: rotation about +z by `yaw`, then translation.
    pub fn from_yaw(translation: Vec3, yaw: f64) -> Pose {
        Pose { translation, rotation: Quat::from_yaw(yaw), timestamp_us: 0 }
    }

    pub fn with_timestamp(mut self, timestamp_us: i64) -> Pose {
        self.timestamp_us = timestamp_us;
        self
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation.rotate(p) + self.translation
    }

    /// `self ∘ other`: applies `other` first. Keeps `self`'s timestamp.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            translation: self.apply(other.translation),
            rotation: self.rotation * other.rotation,
            timestamp_us: self.timestamp_us,
        }
    }

    pub fn inverse(&self) -> Pose {
        let r = self.rotation.conjugate();
        Pose {
            translation: -r.rotate(self.translation),
            rotation: r.normalized().unwrap_or(Quat::IDENTITY),
            timestamp_us: self.timestamp_us,
        }
    }

    pub fn yaw(&self) -> f64 {
        self.rotation.yaw()
    }
}

/// Inverse of a pose; `compose(invert(p), p)` is the identity.
pub fn invert_pose(pose: &Pose) -> Pose {
    pose.inverse()
}

/// Box extents along its own x (length), y (width) and z (height) axes.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(from = "[f64; 3]", into = "[f64; 3]"))]
pub struct Size3 {
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

impl Size3 {
    pub const fn new(length: f64, width: f64, height: f64) -> Self {
        Size3 { length, width, height }
    }

    pub fn volume(self) -> f64 {
        self.length * self.width * self.height
    }

    pub fn is_valid(self) -> bool {
        [self.length, self.width, self.height].iter().all(|v| v.is_finite() && *v > 0.0)
    }

    pub fn half(self) -> Vec3 {
        Vec3::new(self.length / 2.0, self.width / 2.0, self.height / 2.0)
    }
}

impl From<[f64; 3]> for Size3 {
    fn from(a: [f64; 3]) -> Self {
        Size3::new(a[0], a[1], a[2])
    }
}

impl From<Size3> for [f64; 3] {
    fn from(s: Size3) -> Self {
        [s.length, s.width, s.height]
    }
}

/// Oriented 3D box rotated about +z only.
///
/// Ground-truth boxes carry a `track_id` and no `score`; predictions carry a
/// `score` and usually no `track_id`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Box3D {
    pub center: Vec3,
    pub size: Size3,
    /// Radians in `(-π, π]`.
    pub yaw: f64,
    /// BEV velocity `(vx, vy)` in m/s.
    pub velocity: [f64; 2],
    pub class: SemanticClass,
    pub track_id: Option<u32>,
    pub score: Option<f64>,
}

impl Box3D {
    /// Validates the size and normalizes the yaw.
    pub fn new(center: Vec3, size: Size3, yaw: f64, class: SemanticClass) -> Result<Box3D> {
        Box3D { center, size, yaw, velocity: [0.0, 0.0], class, track_id: None, score: None }.validated()
    }

    pub fn with_track(mut self, id: u32) -> Box3D {
        self.track_id = Some(id);
        self
    }

    pub fn with_score(mut self, score: f64) -> Box3D {
        self.score = Some(score);
        self
    }

    pub fn with_velocity(mut self, vx: f64, vy: f64) -> Box3D {
        self.velocity = [vx, vy];
        self
    }

    /// Checks every invariant and returns the box with its yaw normalized.
    pub fn validated(mut self) -> Result<Box3D> {
        if !self.size.is_valid() {
            return Err(Error::InvalidBox(format!("size components must be positive, got {:?}", self.size)));
        }
        if !self.center.is_finite() || !self.yaw.is_finite() {
            return Err(Error::InvalidBox(format!("non-finite center or yaw in {:?}", self.center)));
        }
        if !self.velocity.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidBox(format!("non-finite velocity {:?}", self.velocity)));
        }
        if let Some(s) = self.score {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::InvalidBox(format!("score {s} outside [0, 1]")));
            }
        }
        self.yaw = normalize_angle(self.yaw);
        Ok(self)
    }

    /// Box frame to parent frame (rotate by yaw, translate by center).
    pub fn pose(&self) -> Pose {
        Pose::from_yaw(self.center, self.yaw)
    }

    /// Re-expresses the box in the parent frame of `pose`. The box stays
    /// yaw-only: any pitch/roll of `pose` is dropped from the orientation.
    /// Velocity is rotated with the heading.
    pub fn transformed(&self, pose: &Pose) -> Box3D {
        let dyaw = pose.yaw();
        let (s, c) = (libm::sin(dyaw), libm::cos(dyaw));
        let [vx, vy] = self.velocity;
        Box3D {
            center: pose.apply(self.center),
            yaw: normalize_angle(self.yaw + dyaw),
            velocity: [c * vx - s * vy, s * vx + c * vy],
            ..*self
        }
    }

    /// Point expressed in the box frame.
    pub fn to_local(&self, p: Vec3) -> Vec3 {
        let d = p - self.center;
        let (s, c) = (libm::sin(self.yaw), libm::cos(self.yaw));
        Vec3::new(c * d.x + s * d.y, -s * d.x + c * d.y, d.z)
    }

    /// Inverse of [`Box3D::to_local`].
    pub fn to_parent(&self, p: Vec3) -> Vec3 {
        let (s, c) = (libm::sin(self.yaw), libm::cos(self.yaw));
        Vec3::new(c * p.x - s * p.y, s * p.x + c * p.y, p.z) + self.center
    }

    /// Closed-interval containment test in the box frame.
    pub fn contains(&self, p: Vec3) -> bool {
        let l = self.to_local(p);
        let h = self.size.half();
        libm::fabs(l.x) <= h.x && libm::fabs(l.y) <= h.y && libm::fabs(l.z) <= h.z
    }
}

/// Euclidean distance between box centers on the ground plane; z ignored.
pub fn bev_center_distance(a: &Box3D, b: &Box3D) -> f64 {
    libm::hypot(a.center.x - b.center.x, a.center.y - b.center.y)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PointKind {
    Plain,
    Lidar,
    Radar,
}

/// Per-point LiDAR channels.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LidarAttrs {
    pub intensity: Vec<f32>,
    pub ring: Vec<u32>,
    /// Seconds since clip start.
    pub time_s: Vec<f64>,
}

/// Per-point 4D-radar feature channels.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RadarAttrs {
    pub power: Vec<f32>,
    pub snr: Vec<f32>,
    pub v_xr: Vec<f32>,
    pub v_yr: Vec<f32>,
    pub t_diff: Vec<f32>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PointAttributes {
    Plain,
    Lidar(LidarAttrs),
    Radar(RadarAttrs),
}

impl PointAttributes {
    pub fn kind(&self) -> PointKind {
        match self {
            PointAttributes::Plain => PointKind::Plain,
            PointAttributes::Lidar(_) => PointKind::Lidar,
            PointAttributes::Radar(_) => PointKind::Radar,
        }
    }

    fn empty_like(&self) -> PointAttributes {
        match self {
            PointAttributes::Plain => PointAttributes::Plain,
            PointAttributes::Lidar(_) => PointAttributes::Lidar(LidarAttrs::default()),
            PointAttributes::Radar(_) => PointAttributes::Radar(RadarAttrs::default()),
        }
    }

    fn check_len(&self, n: usize) -> Result<()> {
        let check = |column: &'static str, found: usize| {
            if found == n {
                Ok(())
            } else {
                Err(Error::AttributeLength { column, expected: n, found })
            }
        };
        match self {
            PointAttributes::Plain => Ok(()),
            PointAttributes::Lidar(a) => {
                check("intensity", a.intensity.len())?;
                check("ring", a.ring.len())?;
                check("time", a.time_s.len())
            }
            PointAttributes::Radar(a) => {
                check("power", a.power.len())?;
                check("snr", a.snr.len())?;
                check("v_xr", a.v_xr.len())?;
                check("v_yr", a.v_yr.len())?;
                check("t_diff", a.t_diff.len())
            }
        }
    }

    fn push_from(&mut self, other: &PointAttributes, i: usize) {
        match (self, other) {
            (PointAttributes::Lidar(d), PointAttributes::Lidar(s)) => {
                d.intensity.push(s.intensity[i]);
                d.ring.push(s.ring[i]);
                d.time_s.push(s.time_s[i]);
            }
            (PointAttributes::Radar(d), PointAttributes::Radar(s)) => {
                d.power.push(s.power[i]);
                d.snr.push(s.snr[i]);
                d.v_xr.push(s.v_xr[i]);
                d.v_yr.push(s.v_yr[i]);
                d.t_diff.push(s.t_diff[i]);
            }
            _ => {}
        }
    }

    fn extend_from(&mut self, other: &PointAttributes) {
        match (self, other) {
            (PointAttributes::Lidar(d), PointAttributes::Lidar(s)) => {
                d.intensity.extend_from_slice(&s.intensity);
                d.ring.extend_from_slice(&s.ring);
                d.time_s.extend_from_slice(&s.time_s);
            }
            (PointAttributes::Radar(d), PointAttributes::Radar(s)) => {
                d.power.extend_from_slice(&s.power);
                d.snr.extend_from_slice(&s.snr);
                d.v_xr.extend_from_slice(&s.v_xr);
                d.v_yr.extend_from_slice(&s.v_yr);
                d.t_diff.extend_from_slice(&s.t_diff);
            }
            _ => {}
        }
    }
}

/// Columnar point set. Every attribute column and the optional label column
/// hold exactly one entry per position, and positions are always finite.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    positions: Vec<Vec3>,
    attributes: PointAttributes,
    labels: Option<Vec<u8>>,
}

impl Default for PointCloud {
    fn default() -> Self {
        PointCloud::empty(PointKind::Plain)
    }
}

impl PointCloud {
    pub fn new(positions: Vec<Vec3>, attributes: PointAttributes) -> Result<PointCloud> {
        if let Some(i) = positions.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        attributes.check_len(positions.len())?;
        Ok(PointCloud { positions, attributes, labels: None })
    }

    pub fn plain(positions: Vec<Vec3>) -> Result<PointCloud> {
        PointCloud::new(positions, PointAttributes::Plain)
    }

    pub fn empty(kind: PointKind) -> PointCloud {
        let attributes = match kind {
            PointKind::Plain => PointAttributes::Plain,
            PointKind::Lidar => PointAttributes::Lidar(LidarAttrs::default()),
            PointKind::Radar => PointAttributes::Radar(RadarAttrs::default()),
        };
        PointCloud { positions: Vec::new(), attributes, labels: None }
    }

    pub fn with_labels(mut self, labels: Vec<u8>) -> Result<PointCloud> {
        if labels.len() != self.positions.len() {
            return Err(Error::LabelLengthMismatch { expected: self.positions.len(), found: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn without_labels(mut self) -> PointCloud {
        self.labels = None;
        self
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn kind(&self) -> PointKind {
        self.attributes.kind()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn attributes(&self) -> &PointAttributes {
        &self.attributes
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    /// Points at `indices`, in that order, with their attributes and labels.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        let mut attributes = self.attributes.empty_like();
        let mut positions = Vec::with_capacity(indices.len());
        for &i in indices {
            positions.push(self.positions[i]);
            attributes.push_from(&self.attributes, i);
        }
        let labels = self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect());
        PointCloud { positions, attributes, labels }
    }

    pub fn filter(&self, mask: &[bool]) -> PointCloud {
        let idx: Vec<usize> = mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect();
        self.select(&idx)
    }

    /// Applies `f` to every position; attributes and labels are carried.
    pub fn map_positions(&self, f: impl Fn(Vec3) -> Vec3) -> PointCloud {
        PointCloud {
            positions: self.positions.iter().map(|&p| f(p)).collect(),
            attributes: self.attributes.clone(),
            labels: self.labels.clone(),
        }
    }

    /// Appends `other`. Both clouds must share a kind and agree on whether
    /// they carry labels.
    pub fn append(&mut self, other: &PointCloud) -> Result<()> {
        if other.is_empty() {
            return Ok(());
        }
        if self.is_empty() && self.labels.is_none() {
            if self.kind() != other.kind() {
                self.attributes = other.attributes.empty_like();
            }
            if other.labels.is_some() {
                self.labels = Some(Vec::new());
            }
        }
        if self.kind() != other.kind() {
            return Err(Error::IncompatibleClouds("point kinds differ"));
        }
        match (&mut self.labels, &other.labels) {
            (Some(a), Some(b)) => a.extend_from_slice(b),
            (None, None) => {}
            _ => return Err(Error::IncompatibleClouds("only one cloud carries labels")),
        }
        self.positions.extend_from_slice(&other.positions);
        self.attributes.extend_from(&other.attributes);
        Ok(())
    }

    /// Drops every attribute column, keeping positions and labels.
    pub fn into_plain(self) -> PointCloud {
        PointCloud { positions: self.positions, attributes: PointAttributes::Plain, labels: self.labels }
    }
}

/// Maps every point by the pose's rotation, then translation.
pub fn transform_cloud(pose: &Pose, cloud: &PointCloud) -> PointCloud {
    let m = pose.rotation.to_matrix();
    let t = pose.translation;
    cloud.map_positions(|p| m.apply(p) + t)
}

/// Closed-interval membership mask of every point in `bx`.
pub fn points_in_box(cloud: &PointCloud, bx: &Box3D) -> Vec<bool> {
    cloud.positions().iter().map(|&p| bx.contains(p)).collect()
}
