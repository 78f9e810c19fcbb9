//! Point-to-point ICP and the inlier-fraction registration confidence.
//!
//! Each iteration pairs every (downsampled) source point with its nearest
//! target point, keeps pairs within `max_correspondence_dist`, and solves the
//! least-squares rigid update in closed form (Horn's unit-quaternion method).
//!
//! The reported RMS is the truncated residual
//! `sqrt(mean_i min(d_i², D²))` over all source points, with `D` the
//! correspondence gate. Unlike the RMS over inliers only, this quantity can
//! never increase between iterations.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Pose};
use crate::math::{symmetric_eigen4, Quat, Vec3};
use crate::spatial::KdTree;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IcpParams {
    pub max_iterations: usize,
    /// Pairs farther apart than this (m) are ignored when solving.
    pub max_correspondence_dist: f64,
    /// Stop once the RMS changes by less than this between iterations (m).
    pub convergence_eps: f64,
    /// Distance (m) under which a source point counts as an inlier.
    pub inlier_threshold: f64,
    /// Source clouds larger than this are strided down before iterating.
    pub max_source_points: usize,
}

impl Default for IcpParams {
    fn default() -> Self {
        IcpParams {
            max_iterations: 50,
            max_correspondence_dist: 1.0,
            convergence_eps: 1e-5,
            inlier_threshold: 0.1,
            max_source_points: 20_000,
        }
    }
}

impl IcpParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iterations > 0
            && self.max_source_points > 0
            && [self.max_correspondence_dist, self.convergence_eps, self.inlier_threshold]
                .iter()
                .all(|v| v.is_finite() && *v > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(alloc::format!("ICP parameters must be strictly positive: {self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IcpResult {
    /// Maps source coordinates into the target frame.
    pub transform: Pose,
    pub rms: f64,
    /// Inlier fraction of the source after the final alignment.
    pub confidence: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Truncated RMS at the start of each iteration, then after the last.
    pub rms_history: Vec<f64>,
}

/// Aligns `source` onto `target` starting from `initial`.
pub fn icp_align(source: &PointCloud, target: &PointCloud, params: &IcpParams, initial: &Pose) -> Result<IcpResult> {
    params.validate()?;
    for c in [source, target] {
        if c.len() < 3 {
            return Err(Error::TooFewPoints { needed: 3, found: c.len() });
        }
    }
    let tree = KdTree::new(target.positions());
    icp_align_points(source.positions(), &tree, params, initial)
}

/// [`icp_align`] against a prebuilt target tree.
pub fn icp_align_points(source: &[Vec3], target: &KdTree, params: &IcpParams, initial: &Pose) -> Result<IcpResult> {
    params.validate()?;
    if source.len() < 3 || target.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, found: source.len().min(target.len()) });
    }
    let stride = source.len().div_ceil(params.max_source_points);
    let src: Vec<Vec3> = source.iter().step_by(stride).copied().collect();
    let gate2 = params.max_correspondence_dist * params.max_correspondence_dist;

    let mut transform = Pose { timestamp_us: 0, ..*initial };
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut moved: Vec<Vec3> = Vec::with_capacity(src.len());
    let mut pairs: Vec<(Vec3, Vec3)> = Vec::with_capacity(src.len());

    while iterations < params.max_iterations {
        moved.clear();
        moved.extend(src.iter().map(|&p| transform.apply(p)));
        pairs.clear();
        let mut cost = 0.0;
        for &p in &moved {
            let (j, d2) = target.nearest(p).expect("non-empty target");
            if d2 <= gate2 {
                pairs.push((p, target.points()[j]));
                cost += d2;
            } else {
                cost += gate2;
            }
        }
        if pairs.len() < 3 {
            return Err(Error::NoCorrespondences);
        }
        let rms = libm::sqrt(cost / src.len() as f64);
        if let Some(&prev) = history.last() {
            if libm::fabs(prev - rms) < params.convergence_eps {
                history.push(rms);
                converged = true;
                break;
            }
        }
        history.push(rms);
        let step = fit_rigid(&pairs);
        transform = step.compose(&transform);
        iterations += 1;
    }

    let (rms, inliers) = residual(&src, target, &transform, gate2, params.inlier_threshold);
    if !converged {
        if let Some(&prev) = history.last() {
            converged = libm::fabs(prev - rms) < params.convergence_eps;
        }
        history.push(rms);
    }
    Ok(IcpResult {
        transform,
        rms: *history.last().unwrap_or(&rms),
        confidence: inliers as f64 / src.len() as f64,
        iterations,
        converged,
        rms_history: history,
    })
}

fn residual(src: &[Vec3], target: &KdTree, transform: &Pose, gate2: f64, inlier: f64) -> (f64, usize) {
    let inlier2 = inlier * inlier;
    let mut cost = 0.0;
    let mut inliers = 0;
    for &p in src {
        let (_, d2) = target.nearest(transform.apply(p)).expect("non-empty target");
        cost += d2.min(gate2);
        if d2 <= inlier2 {
            inliers += 1;
        }
    }
    (libm::sqrt(cost / src.len() as f64), inliers)
}

/// Least-squares rigid transform taking each `pair.0` onto `pair.1`.
pub fn fit_rigid(pairs: &[(Vec3, Vec3)]) -> Pose {
    let n = pairs.len() as f64;
    let mut cs = Vec3::ZERO;
    let mut ct = Vec3::ZERO;
    for &(s, t) in pairs {
        cs += s;
        ct += t;
    }
    cs = cs.scale(1.0 / n);
    ct = ct.scale(1.0 / n);
    let mut m = [[0.0f64; 3]; 3];
    for &(s, t) in pairs {
        let (a, b) = ((s - cs).to_array(), (t - ct).to_array());
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += a[i] * b[j];
            }
        }
    }
    let [[sxx, sxy, sxz], [syx, syy, syz], [szx, szy, szz]] = m;
    let k = [
        [sxx + syy + szz, syz - szy, szx - sxz, sxy - syx],
        [syz - szy, sxx - syy - szz, sxy + syx, szx + sxz],
        [szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy],
        [sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz],
    ];
    let (vals, vecs) = symmetric_eigen4(k);
    let mut best = 0;
    for i in 1..4 {
        if vals[i] > vals[best] {
            best = i;
        }
    }
    let rotation = Quat::new(vecs[0][best], vecs[1][best], vecs[2][best], vecs[3][best]).unwrap_or(Quat::IDENTITY);
    let translation = ct - rotation.rotate(cs);
    Pose { translation, rotation, timestamp_us: 0 }
}

/// Fraction of `source` points that, after `transform`, have a `target`
/// point within `inlier_threshold`.
pub fn registration_confidence(source: &PointCloud, target: &PointCloud, transform: &Pose, inlier_threshold: f64) -> Result<f64> {
    if source.is_empty() || target.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let tree = KdTree::new(target.positions());
    Ok(confidence_against(source.positions(), &tree, transform, inlier_threshold))
}

/// [`registration_confidence`] against a prebuilt tree; 0 for an empty source.
pub fn confidence_against(source: &[Vec3], target: &KdTree, transform: &Pose, inlier_threshold: f64) -> f64 {
    if source.is_empty() || target.is_empty() {
        return 0.0;
    }
    let t2 = inlier_threshold * inlier_threshold;
    let hits = source
        .iter()
        .filter(|&&p| target.nearest(transform.apply(p)).is_some_and(|(_, d2)| d2 <= t2))
        .count();
    hits as f64 / source.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::transform_cloud;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blob(n: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = (0..n)
            .map(|_| Vec3::new(rng.random_range(-3.0..3.0), rng.random_range(-2.0..2.0), rng.random_range(0.0..1.5)))
            .collect();
        PointCloud::plain(pts).unwrap()
    }

    #[test]
    fn fit_rigid_recovers_exact_transform() {
        let c = blob(50, 1);
        let truth = Pose::new(Vec3::new(0.4, -1.0, 0.2), Quat::from_axis_angle(Vec3::new(0.2, 0.1, 1.0), 0.6), 0).unwrap();
        let pairs: Vec<_> = c.positions().iter().map(|&p| (p, truth.apply(p))).collect();
        let fit = fit_rigid(&pairs);
        assert!((fit.translation - truth.translation).norm() < 1e-12);
        assert!((fit.rotation.conjugate() * truth.rotation).angle() < 1e-12);
    }

    #[test]
    fn self_registration_is_identity() {
        let c = blob(2000, 2);
        let r = icp_align(&c, &c, &IcpParams::default(), &Pose::IDENTITY).unwrap();
        assert!(r.converged);
        assert_eq!(r.confidence, 1.0);
        assert!(r.transform.translation.norm() < 1e-9);
        assert!(r.transform.rotation.angle() < 1e-9);
    }

    #[test]
    fn disjoint_clouds_have_no_correspondences() {
        let a = blob(100, 3);
        let b = transform_cloud(&Pose::from_translation(Vec3::new(100.0, 0.0, 0.0)), &a);
        assert_eq!(icp_align(&a, &b, &IcpParams::default(), &Pose::IDENTITY), Err(Error::NoCorrespondences));
    }

    #[test]
    fn too_few_points() {
        let a = PointCloud::plain(alloc::vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)]).unwrap();
        let b = blob(10, 4);
        assert!(matches!(icp_align(&a, &b, &IcpParams::default(), &Pose::IDENTITY), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn confidence_half_overlap() {
        let c = blob(200, 5);
        let tau = 0.1;
        let shifted: Vec<Vec3> = c
            .positions()
            .iter()
            .enumerate()
            .map(|(i, &p)| if i % 2 == 0 { p } else { p + Vec3::new(0.0, 0.0, 10.0 * tau + 5.0) })
            .collect();
        let src = PointCloud::plain(shifted).unwrap();
        let conf = registration_confidence(&src, &c, &Pose::IDENTITY, tau).unwrap();
        assert_eq!(conf, 0.5);
        assert_eq!(registration_confidence(&c, &c, &Pose::IDENTITY, tau).unwrap(), 1.0);
        assert_eq!(registration_confidence(&c, &PointCloud::default(), &Pose::IDENTITY, tau), Err(Error::EmptyCloud));
    }

    #[test]
    fn rejects_bad_params() {
        let c = blob(10, 6);
        let p = IcpParams { inlier_threshold: 0.0, ..IcpParams::default() };
        assert!(matches!(icp_align(&c, &c, &p, &Pose::IDENTITY), Err(Error::InvalidParams(_))));
    }
}
