use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classes::{parse_label, SemanticClass, IGNORE};
use crate::error::{Error, Result};
use crate::geometry::{Box3D, PointCloud};
use crate::math::Vec3;
use crate::spatial::KdTree;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClusterParams {
    /// Max point-to-plane distance of a ground inlier, m.
    pub ground_dist_tol: f64,
    pub ransac_iters: usize,
    /// Largest tilt of the ground normal from +z, degrees.
    pub max_ground_tilt_deg: f64,
    /// Single-linkage radius, m.
    pub cluster_radius: f64,
    pub min_cluster_points: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            ground_dist_tol: 0.15,
            ransac_iters: 200,
            max_ground_tilt_deg: 30.0,
            cluster_radius: 0.5,
            min_cluster_points: 10,
        }
    }
}

impl ClusterParams {
    fn validate(&self) -> Result<()> {
        let ok = self.ransac_iters > 0
            && self.min_cluster_points > 0
            && [self.ground_dist_tol, self.cluster_radius, self.max_ground_tilt_deg].iter().all(|v| v.is_finite() && *v > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("cluster parameters must be positive: {self:?}")))
        }
    }
}

/// Points outside every box, with attributes and labels carried.
pub fn remove_objects(cloud: &PointCloud, boxes: &[Box3D]) -> PointCloud {
    let keep: Vec<bool> = cloud.positions().iter().map(|&p| !boxes.iter().any(|b| b.contains(p))).collect();
    cloud.filter(&keep)
}

/// Seeded RANSAC plane fit restricted to near-horizontal planes. Returns
/// `(ground indices, remaining indices)`, both ascending.
pub fn segment_ground(cloud: &PointCloud, params: &ClusterParams, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    params.validate()?;
    let pts = cloud.positions();
    if pts.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, found: pts.len() });
    }
    let min_nz = libm::cos(params.max_ground_tilt_deg.to_radians());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(usize, Vec3, f64)> = None;
    for _ in 0..params.ransac_iters {
        let i = rng.random_range(0..pts.len());
        let j = rng.random_range(0..pts.len());
        let k = rng.random_range(0..pts.len());
        if i == j || j == k || i == k {
            continue;
        }
        let Some((normal, offset)) = plane_through(pts[i], pts[j], pts[k]) else { continue };
        if normal.z < min_nz {
            continue;
        }
        let count = count_inliers(pts, normal, offset, params.ground_dist_tol);
        if best.is_none_or(|b| count > b.0) {
            best = Some((count, normal, offset));
        }
    }
    let (_, normal, offset) = best.ok_or(Error::NoGroundFound)?;
    let (ground, rest): (Vec<usize>, Vec<usize>) =
        (0..pts.len()).partition(|&i| libm::fabs(normal.dot(pts[i]) + offset) <= params.ground_dist_tol);
    Ok((ground, rest))
}

/// Unit normal (oriented towards +z) and offset `d` of the plane
/// `n·p + d = 0` through three points, or `None` when they are collinear.
pub fn plane_through(a: Vec3, b: Vec3, c: Vec3) -> Option<(Vec3, f64)> {
    let n = (b - a).cross(c - a);
    let len = n.norm();
    if !(len > 1e-12) {
        return None;
    }
    let mut n = n.scale(1.0 / len);
    if n.z < 0.0 {
        n = -n;
    }
    Some((n, -n.dot(a)))
}

pub fn count_inliers(pts: &[Vec3], normal: Vec3, offset: f64, tol: f64) -> usize {
    pts.iter().filter(|&&p| libm::fabs(normal.dot(p) + offset) <= tol).count()
}

/// Connected components under `distance ≤ cluster_radius`. Components
/// smaller than `min_cluster_points` are dropped. Each cluster lists its
/// point indices ascending; clusters are ordered by their smallest index.
pub fn cluster_points(cloud: &PointCloud, params: &ClusterParams) -> Vec<Vec<usize>> {
    let pts = cloud.positions();
    let tree = KdTree::new(pts);
    let mut parent: Vec<usize> = (0..pts.len()).collect();
    for (i, &p) in pts.iter().enumerate() {
        for j in tree.within_radius(p, params.cluster_radius) {
            if j > i {
                union(&mut parent, i, j);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..pts.len() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    let mut clusters: Vec<Vec<usize>> = groups.into_values().filter(|g| g.len() >= params.min_cluster_points).collect();
    clusters.sort_by_key(|c| c[0]);
    clusters
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        // Lowest index becomes the root.
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi] = lo;
    }
}

/// Cluster-to-label table with a mandatory fallback.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClusterRules {
    pub default_label: String,
    /// Label names keyed by cluster position in the clustering output.
    pub by_cluster: BTreeMap<usize, String>,
}

impl Default for ClusterRules {
    fn default() -> Self {
        ClusterRules { default_label: SemanticClass::Manmade.name().into(), by_cluster: BTreeMap::new() }
    }
}

/// Per-point codes for a static cloud of `point_count` points: ground points
/// get driveable_surface, clustered points their rule label, everything
/// else ignore.
pub fn label_clusters(point_count: usize, ground: &[usize], clusters: &[Vec<usize>], rules: &ClusterRules) -> Result<Vec<u8>> {
    let default = parse_label(&rules.default_label)?;
    let mut table = BTreeMap::new();
    for (&k, name) in &rules.by_cluster {
        table.insert(k, parse_label(name)?);
    }
    let mut labels = vec![IGNORE; point_count];
    for &i in ground {
        labels[i] = SemanticClass::DriveableSurface.code();
    }
    for (k, cluster) in clusters.iter().enumerate() {
        let code = table.get(&k).copied().unwrap_or(default);
        for &i in cluster {
            labels[i] = code;
        }
    }
    Ok(labels)
}

/// Result of labeling one static scene.
#[derive(Clone, Debug)]
pub struct StaticAnnotation {
    /// Indices (into the input cloud) of points outside every object box.
    pub static_indices: Vec<usize>,
    /// One code per static point, aligned with `static_indices`.
    pub static_labels: Vec<u8>,
    /// One code per input point: object points carry their box class.
    pub frame_labels: Vec<u8>,
}

/// Runs object removal, ground segmentation, clustering and labeling on one
/// cloud.
pub fn annotate_static_scene(
    cloud: &PointCloud,
    boxes: &[Box3D],
    params: &ClusterParams,
    rules: &ClusterRules,
    seed: u64,
) -> Result<StaticAnnotation> {
    let mut frame_labels = vec![IGNORE; cloud.len()];
    let mut static_indices = Vec::new();
    for (i, &p) in cloud.positions().iter().enumerate() {
        match boxes.iter().find(|b| b.contains(p)) {
            Some(b) => frame_labels[i] = b.class.code(),
            None => static_indices.push(i),
        }
    }
    let scene = cloud.select(&static_indices);
    let (ground, rest) = match segment_ground(&scene, params, seed) {
        Ok(split) => split,
        Err(Error::NoGroundFound | Error::TooFewPoints { .. }) => (Vec::new(), (0..scene.len()).collect()),
        Err(e) => return Err(e),
    };
    let non_ground = scene.select(&rest);
    let clusters: Vec<Vec<usize>> = cluster_points(&non_ground, params)
        .into_iter()
        .map(|c| c.into_iter().map(|i| rest[i]).collect())
        .collect();
    let static_labels = label_clusters(scene.len(), &ground, &clusters, rules)?;
    for (k, &i) in static_indices.iter().enumerate() {
        frame_labels[i] = static_labels[k];
    }
    Ok(StaticAnnotation { static_indices, static_labels, frame_labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Size3;

    fn cloud(points: Vec<Vec3>) -> PointCloud {
        PointCloud::plain(points).unwrap()
    }

    fn cube(center: Vec3, side: f64) -> Box3D {
        Box3D::new(center, Size3::new(side, side, side), 0.0, SemanticClass::Car).unwrap()
    }

    #[test]
    fn remove_objects_cases() {
        let c = cloud(vec![Vec3::ZERO, Vec3::new(5.0, 0.0, 0.0)]);
        let out = remove_objects(&c, &[cube(Vec3::ZERO, 1.0)]);
        assert_eq!(out.positions(), &[Vec3::new(5.0, 0.0, 0.0)]);
        assert_eq!(remove_objects(&c, &[]), c);
    }

    #[test]
    fn overlapping_boxes_remove_union() {
        let pts: Vec<Vec3> = (0..40).map(|i| Vec3::new(i as f64 * 0.1, 0.0, 0.0)).collect();
        let c = cloud(pts.clone());
        let boxes = [cube(Vec3::new(1.0, 0.0, 0.0), 1.0), cube(Vec3::new(1.4, 0.0, 0.0), 1.0)];
        let out = remove_objects(&c, &boxes);
        let expect: Vec<Vec3> = pts.into_iter().filter(|&p| !boxes.iter().any(|b| b.contains(p))).collect();
        assert_eq!(out.positions(), &expect[..]);
        assert!(out.len() < 40 - 10);
    }

    fn ground_fixture() -> PointCloud {
        let mut pts = Vec::new();
        for i in 0..40 {
            for j in 0..25 {
                pts.push(Vec3::new(i as f64 * 0.25, j as f64 * 0.25, 0.0));
            }
        }
        for k in 0..50 {
            pts.push(Vec3::new(2.0 + (k % 10) as f64 * 0.1, 3.0 + (k / 10) as f64 * 0.1, 2.0));
        }
        cloud(pts)
    }

    #[test]
    fn ground_plane_split() {
        let (ground, rest) = segment_ground(&ground_fixture(), &ClusterParams::default(), 0).unwrap();
        assert_eq!(ground, (0..1000).collect::<Vec<_>>());
        assert_eq!(rest, (1000..1050).collect::<Vec<_>>());
    }

    #[test]
    fn ground_is_deterministic_and_maximal() {
        let c = ground_fixture();
        let p = ClusterParams::default();
        assert_eq!(segment_ground(&c, &p, 9).unwrap(), segment_ground(&c, &p, 9).unwrap());
        let (ground, _) = segment_ground(&c, &p, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let pts = c.positions();
        let min_nz = libm::cos(p.max_ground_tilt_deg.to_radians());
        for _ in 0..1000 {
            let (i, j, k) = (rng.random_range(0..pts.len()), rng.random_range(0..pts.len()), rng.random_range(0..pts.len()));
            if let Some((n, d)) = plane_through(pts[i], pts[j], pts[k]) {
                if n.z >= min_nz {
                    assert!(ground.len() >= count_inliers(pts, n, d, p.ground_dist_tol));
                }
            }
        }
    }

    #[test]
    fn offset_plane_within_tolerance() {
        let pts: Vec<Vec3> = (0..200).map(|i| Vec3::new((i % 20) as f64 * 0.3, (i / 20) as f64 * 0.3, 0.1)).collect();
        let (ground, rest) = segment_ground(&cloud(pts), &ClusterParams::default(), 3).unwrap();
        assert_eq!(ground.len(), 200);
        assert!(rest.is_empty());
    }

    #[test]
    fn vertical_wall_has_no_ground() {
        let pts: Vec<Vec3> = (0..300).map(|i| Vec3::new(1.0, (i % 20) as f64 * 0.2, (i / 20) as f64 * 0.2)).collect();
        assert_eq!(segment_ground(&cloud(pts), &ClusterParams::default(), 0), Err(Error::NoGroundFound));
        let two = cloud(vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)]);
        assert!(matches!(segment_ground(&two, &ClusterParams::default(), 0), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn two_blobs() {
        let mut pts = Vec::new();
        for base in [0.0, 10.0] {
            for i in 0..20 {
                pts.push(Vec3::new(base + (i % 5) as f64 * 0.1, (i / 5) as f64 * 0.1, 0.0));
            }
        }
        let clusters = cluster_points(&cloud(pts), &ClusterParams::default());
        assert_eq!(clusters.len(), 2);
        assert_eq!(clusters[0], (0..20).collect::<Vec<_>>());
        assert_eq!(clusters[1], (20..40).collect::<Vec<_>>());
    }

    #[test]
    fn isolated_points_and_chains() {
        let iso: Vec<Vec3> = (0..5).map(|i| Vec3::new(i as f64 * 10.0, 0.0, 0.0)).collect();
        assert!(cluster_points(&cloud(iso), &ClusterParams::default()).is_empty());
        let chain: Vec<Vec3> = (0..30).map(|i| Vec3::new(i as f64 * 0.4, 0.0, 0.0)).collect();
        let clusters = cluster_points(&cloud(chain), &ClusterParams::default());
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].len(), 30);
    }

    #[test]
    fn cluster_labels() {
        let clusters = vec![vec![0, 1], vec![3]];
        let rules = ClusterRules {
            default_label: "manmade".into(),
            by_cluster: [(0, String::from("vegetation"))].into_iter().collect(),
        };
        let labels = label_clusters(5, &[4], &clusters, &rules).unwrap();
        assert_eq!(labels, [9, 9, IGNORE, 10, 7]);
        let bad = ClusterRules { default_label: "spaceship".into(), ..rules };
        assert!(matches!(label_clusters(5, &[], &clusters, &bad), Err(Error::UnknownLabelName(_))));
    }

    #[test]
    fn static_annotation_partitions() {
        let mut pts = ground_fixture().positions().to_vec();
        pts.push(Vec3::new(8.0, 1.0, 0.8));
        let c = cloud(pts);
        let boxes = [cube(Vec3::new(8.0, 1.0, 0.8), 1.0)];
        let ann = annotate_static_scene(&c, &boxes, &ClusterParams::default(), &ClusterRules::default(), 0).unwrap();
        // The object point plus every ground point sharing its box.
        let inside = c.positions().iter().filter(|&&p| boxes[0].contains(p)).count();
        assert_eq!(ann.static_indices.len() + inside, c.len());
        assert_eq!(ann.frame_labels[c.len() - 1], SemanticClass::Car.code());
        assert_eq!(ann.frame_labels[0], 7);
    }
}
