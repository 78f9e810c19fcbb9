//! Keyframe box interpolation under constant velocity, and the motion
//! plausibility figures (peak acceleration and yaw rate) of a track.

use alloc::vec::Vec;

use crate::classes::SemanticClass;
use crate::error::{Error, Result};
use crate::geometry::Box3D;
use crate::math::{angle_delta, normalize_angle};

const US_PER_S: f64 = 1e6;

/// Time-ordered boxes of one object.
#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub track_id: u32,
    pub class: SemanticClass,
    samples: Vec<(i64, Box3D)>,
}

impl Track {
    /// Builds a track, enforcing strictly increasing timestamps and a shared
    /// track id and class across samples.
    pub fn new(track_id: u32, class: SemanticClass, samples: Vec<(i64, Box3D)>) -> Result<Track> {
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::NonMonotonicTimestamps(w[1].0));
            }
        }
        if samples.iter().any(|(_, b)| b.class != class || b.track_id.is_some_and(|id| id != track_id)) {
            return Err(Error::TrackMismatch);
        }
        Ok(Track { track_id, class, samples })
    }

    /// Groups boxes by track id; boxes without one are skipped. Samples are
    /// sorted by time. Tracks come back ordered by id.
    pub fn group(frames: &[(i64, Vec<Box3D>)]) -> Result<Vec<Track>> {
        let mut by_id: alloc::collections::BTreeMap<u32, Vec<(i64, Box3D)>> = Default::default();
        for (t, boxes) in frames {
            for b in boxes {
                if let Some(id) = b.track_id {
                    by_id.entry(id).or_default().push((*t, *b));
                }
            }
        }
        by_id
            .into_iter()
            .map(|(id, mut samples)| {
                samples.sort_by_key(|s| s.0);
                let class = samples[0].1.class;
                Track::new(id, class, samples)
            })
            .collect()
    }

    pub fn samples(&self) -> &[(i64, Box3D)] {
        &self.samples
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn span(&self) -> Option<(i64, i64)> {
        Some((self.samples.first()?.0, self.samples.last()?.0))
    }

    /// Inserts a sample, keeping time order. Replaces a sample at the same
    /// timestamp.
    pub fn insert(&mut self, t: i64, b: Box3D) {
        match self.samples.binary_search_by_key(&t, |s| s.0) {
            Ok(i) => self.samples[i] = (t, b),
            Err(i) => self.samples.insert(i, (t, b)),
        }
    }
}

/// Peak motion of a track, used to reject implausible refinements.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MotionParams {
    /// Peak BEV acceleration magnitude, m/s².
    pub a_cal: f64,
    /// Peak yaw-rate magnitude, rad/s.
    pub w_cal: f64,
}

/// Box at time `t` between `b0` (at `t0`) and `b1` (at `t1`) assuming
/// constant velocity.
///
/// The center moves linearly, yaw follows the shortest arc, size comes from
/// the nearer keyframe (`b0` on a tie) and velocity is the keyframe
/// displacement over the interval.
pub fn interpolate_box(b0: &Box3D, t0: i64, b1: &Box3D, t1: i64, t: i64) -> Result<Box3D> {
    if b0.track_id != b1.track_id || b0.class != b1.class {
        return Err(Error::TrackMismatch);
    }
    if t0 >= t1 || t < t0 || t > t1 {
        return Err(Error::OutOfRange { t, t0, t1 });
    }
    let dt = (t1 - t0) as f64 / US_PER_S;
    let velocity = [(b1.center.x - b0.center.x) / dt, (b1.center.y - b0.center.y) / dt];
    let (center, yaw) = if t == t0 {
        (b0.center, b0.yaw)
    } else if t == t1 {
        (b1.center, b1.yaw)
    } else {
        let f = (t - t0) as f64 / (t1 - t0) as f64;
        (b0.center.lerp(b1.center, f), normalize_angle(b0.yaw + f * angle_delta(b0.yaw, b1.yaw)))
    };
    let size = if t - t0 <= t1 - t { b0.size } else { b1.size };
    Ok(Box3D { center, yaw, size, velocity, ..*b0 })
}

/// Boxes for `targets` inside the track's time span ("fake boxes" for
/// frames between keyframes). Targets outside the span are skipped; there is
/// no extrapolation. Output keeps the order of `targets`.
pub fn interpolate_track(track: &Track, targets: &[i64]) -> Result<Vec<(i64, Box3D)>> {
    let samples = track.samples();
    if samples.is_empty() {
        return Err(Error::EmptyTrack);
    }
    let mut out = Vec::new();
    for &t in targets {
        let i = samples.partition_point(|s| s.0 < t);
        if i < samples.len() && samples[i].0 == t {
            out.push((t, samples[i].1));
        } else if i > 0 && i < samples.len() {
            let (t0, b0) = samples[i - 1];
            let (t1, b1) = samples[i];
            out.push((t, interpolate_box(&b0, t0, &b1, t1, t)?));
        }
    }
    Ok(out)
}

/// Peak acceleration from second differences of BEV centers (exact for
/// quadratic motion, uneven spacing allowed) and peak yaw rate from
/// shortest-arc yaw differences between consecutive samples.
///
/// Tracks with fewer than three samples report `a_cal = 0`; with fewer than
/// two, `w_cal = 0`.
pub fn motion_params(track: &Track) -> Result<MotionParams> {
    let s = track.samples();
    if s.is_empty() {
        return Err(Error::EmptyTrack);
    }
    let secs = |i: usize| s[i].0 as f64 / US_PER_S;
    let mut a_cal: f64 = 0.0;
    let mut w_cal: f64 = 0.0;
    for i in 1..s.len() {
        let dt = secs(i) - secs(i - 1);
        w_cal = w_cal.max(libm::fabs(angle_delta(s[i - 1].1.yaw, s[i].1.yaw)) / dt);
    }
    for i in 1..s.len().saturating_sub(1) {
        let (c0, c1, c2) = (s[i - 1].1.center, s[i].1.center, s[i + 1].1.center);
        let (dt0, dt1) = (secs(i) - secs(i - 1), secs(i + 1) - secs(i));
        let v0 = [(c1.x - c0.x) / dt0, (c1.y - c0.y) / dt0];
        let v1 = [(c2.x - c1.x) / dt1, (c2.y - c1.y) / dt1];
        let half_span = (dt0 + dt1) / 2.0;
        let a = libm::hypot((v1[0] - v0[0]) / half_span, (v1[1] - v0[1]) / half_span);
        a_cal = a_cal.max(a);
    }
    Ok(MotionParams { a_cal, w_cal })
}
