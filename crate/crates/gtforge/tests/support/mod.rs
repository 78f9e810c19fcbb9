//! Brute-force oracles and seeded generators shared by the integration
//! tests. Oracles are written for clarity, not speed, and never call the
//! scoring code they check.
#![allow(dead_code)]

use gtforge::core::eval_occ::{ConfusionCounts, Counts};
use gtforge::core::geometry::{LidarAttrs, RadarAttrs};
use gtforge::core::{Box3D, PointAttributes, PointCloud, Quat, SemanticClass, Size3, Vec3, VoxelGrid, FREE, IGNORE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Boxes per timestamp.
pub type Frames = Vec<(i64, Vec<Box3D>)>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// AP by exhaustive search. Predictions are ranked globally by score (ties:
/// center x, center y, frame, position), each one scans every unmatched
/// ground truth of its frame for the nearest within `threshold` (ties: lower
/// position). Precision at recall sample `k` is the maximum over all ranks
/// whose recall is at least `k/100`.
pub fn oracle_ap(frames: &[(Vec<Box3D>, Vec<Box3D>)], threshold: f64, min_recall: f64, min_precision: f64) -> f64 {
    let npos: usize = frames.iter().map(|f| f.0.len()).sum();
    let mut preds: Vec<(usize, usize)> =
        frames.iter().enumerate().flat_map(|(f, (_, p))| (0..p.len()).map(move |i| (f, i))).collect();
    preds.sort_by(|&(fa, ia), &(fb, ib)| {
        let (a, b) = (&frames[fa].1[ia], &frames[fb].1[ib]);
        b.score
            .unwrap()
            .partial_cmp(&a.score.unwrap())
            .unwrap()
            .then(a.center.x.partial_cmp(&b.center.x).unwrap())
            .then(a.center.y.partial_cmp(&b.center.y).unwrap())
            .then(fa.cmp(&fb))
            .then(ia.cmp(&ib))
    });
    let mut taken: Vec<Vec<bool>> = frames.iter().map(|f| vec![false; f.0.len()]).collect();
    let mut tp = Vec::new();
    for &(f, i) in &preds {
        let p = &frames[f].1[i];
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in frames[f].0.iter().enumerate() {
            let d = ((p.center.x - gt.center.x).powi(2) + (p.center.y - gt.center.y).powi(2)).sqrt();
            if taken[f][g] || d > threshold {
                continue;
            }
            match best {
                Some((_, bd)) if bd <= d => {}
                _ => best = Some((g, d)),
            }
        }
        if let Some((g, _)) = best {
            taken[f][g] = true;
        }
        tp.push(best.is_some());
    }
    // Operating points (true positives so far, predictions so far).
    let mut points = Vec::new();
    let mut count = 0usize;
    for (i, &t) in tp.iter().enumerate() {
        count += usize::from(t);
        points.push((count, i + 1));
    }
    let first = (min_recall * 100.0).round() as usize + 1;
    let mut sum = 0.0;
    for k in first..=100 {
        let mut best = 0.0f64;
        for &(t, n) in &points {
            if t * 100 >= k * npos {
                best = best.max(t as f64 / n as f64);
            }
        }
        sum += ((best - min_precision) / (1.0 - min_precision)).max(0.0);
    }
    sum / (101 - first) as f64
}

/// Confusion counts by walking every cell through its coordinates.
pub fn oracle_confusion(pred: &VoxelGrid, gt: &VoxelGrid) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    let [nx, ny, nz] = gt.dims;
    for ix in 0..nx {
        for iy in 0..ny {
            for iz in 0..nz {
                let g = gt.get(ix, iy, iz);
                if g == IGNORE {
                    continue;
                }
                c.evaluated_voxels += 1;
                let mut p = pred.get(ix, iy, iz);
                if p == IGNORE {
                    c.prediction_ignore_voxels += 1;
                    p = FREE;
                }
                for (k, counts) in c.classes.iter_mut().enumerate() {
                    let k = k as u8;
                    counts.tp += u64::from(p == k && g == k);
                    counts.fp += u64::from(p == k && g != k);
                    counts.fn_ += u64::from(g == k && p != k);
                }
                let (po, go) = (p != FREE, g != FREE);
                c.binary += Counts { tp: u64::from(po && go), fp: u64::from(po && !go), fn_: u64::from(!po && go) };
            }
        }
    }
    c
}

const CODES: [u8; 13] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, IGNORE, FREE];

/// A ground-truth grid and a prediction that agrees on roughly half of the
/// cells.
pub fn random_grid_pair(r: &mut ChaCha8Rng, dims: [u32; 3]) -> (VoxelGrid, VoxelGrid) {
    let n = dims.iter().product::<u32>() as usize;
    let gt: Vec<u8> = (0..n).map(|_| if r.random_bool(0.5) { FREE } else { CODES[r.random_range(0..CODES.len())] }).collect();
    let pred: Vec<u8> = gt.iter().map(|&g| if r.random_bool(0.5) { g } else { CODES[r.random_range(0..CODES.len())] }).collect();
    let origin = Vec3::new(-4.0, -4.0, -1.0);
    (
        VoxelGrid::from_labels(origin, 0.4, dims, pred).unwrap(),
        VoxelGrid::from_labels(origin, 0.4, dims, gt).unwrap(),
    )
}

fn random_box(r: &mut ChaCha8Rng, class: SemanticClass) -> Box3D {
    let c = Vec3::new(r.random_range(-65.0..65.0), r.random_range(-45.0..45.0), r.random_range(-1.0..2.0));
    let s = Size3::new(r.random_range(0.5..6.0), r.random_range(0.5..3.0), r.random_range(0.5..3.0));
    Box3D::new(c, s, r.random_range(-3.2..3.2), class)
        .unwrap()
        .with_velocity(r.random_range(-15.0..15.0), r.random_range(-15.0..15.0))
}

/// Ground truth with up to five boxes per detection class per frame, and
/// predictions mixing jittered copies, misses and false positives. Scores
/// are coarse so that ranking ties occur.
pub fn random_detection_frames(seed: u64, frames: usize) -> (Frames, Frames) {
    let mut r = rng(seed);
    let mut gt = Vec::new();
    let mut pred = Vec::new();
    for f in 0..frames {
        let mut g = Vec::new();
        let mut p = Vec::new();
        for class in SemanticClass::DETECTION {
            for i in 0..r.random_range(0..=5u32) {
                let b = random_box(&mut r, class).with_track(i);
                g.push(b);
                if r.random_bool(0.8) {
                    let jitter = r.random_range(0.0..4.5);
                    let a = r.random_range(0.0..std::f64::consts::TAU);
                    let mut q = b;
                    q.track_id = None;
                    q.center.x += jitter * a.cos();
                    q.center.y += jitter * a.sin();
                    p.push(q.with_score(f64::from(r.random_range(0..=20u32)) / 20.0));
                }
            }
            for _ in 0..r.random_range(0..=2u32) {
                p.push(random_box(&mut r, class).with_score(f64::from(r.random_range(0..=20u32)) / 20.0));
            }
        }
        gt.push((f as i64 * 100_000, g));
        pred.push((f as i64 * 100_000, p));
    }
    (gt, pred)
}

/// 2000 points: a paraboloid floor, two walls and a vertical cylinder.
/// None of the pieces is symmetric under the small motions ICP must undo.
pub fn icp_fixture(r: &mut ChaCha8Rng) -> Vec<Vec3> {
    let mut pts = Vec::with_capacity(2000);
    for _ in 0..1000 {
        let (x, y) = (r.random_range(-5.0..5.0), r.random_range(-5.0..5.0));
        pts.push(Vec3::new(x, y, 0.03 * (x * x + 0.5 * y * y)));
    }
    for _ in 0..300 {
        pts.push(Vec3::new(5.0, r.random_range(-5.0..5.0), r.random_range(0.0..3.0)));
    }
    for _ in 0..300 {
        pts.push(Vec3::new(r.random_range(-5.0..5.0), -5.0, r.random_range(0.0..2.0)));
    }
    for _ in 0..400 {
        let a: f64 = r.random_range(0.0..std::f64::consts::TAU);
        pts.push(Vec3::new(1.5 + 0.7 * a.cos(), 2.0 + 0.7 * a.sin(), r.random_range(0.0..2.5)));
    }
    pts
}

pub fn random_unit(r: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v.scale(1.0 / n);
        }
    }
}

/// Rotation angle between two unit quaternions, degrees.
pub fn quat_angle_deg(a: Quat, b: Quat) -> f64 {
    let d = (a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z).abs().min(1.0);
    2.0 * d.acos().to_degrees()
}

fn f32s(r: &mut ChaCha8Rng, n: usize, lo: f32, hi: f32) -> Vec<f32> {
    (0..n).map(|_| r.random_range(lo..hi)).collect()
}

fn positions(r: &mut ChaCha8Rng, n: usize) -> Vec<Vec3> {
    (0..n)
        .map(|_| {
            let c: [f32; 3] = [r.random_range(-80.0..80.0), r.random_range(-80.0..80.0), r.random_range(-5.0..10.0)];
            Vec3::new(c[0].into(), c[1].into(), c[2].into())
        })
        .collect()
}

/// f32-exact positions so the cloud survives storage unchanged.
pub fn random_lidar_cloud(r: &mut ChaCha8Rng) -> PointCloud {
    let n = r.random_range(0..400);
    let attrs = LidarAttrs {
        intensity: f32s(r, n, 0.0, 1.0),
        ring: (0..n).map(|_| r.random_range(0..128)).collect(),
        time_s: (0..n).map(|_| r.random_range(0.0..30.0)).collect(),
    };
    PointCloud::new(positions(r, n), PointAttributes::Lidar(attrs)).unwrap()
}

pub fn random_radar_cloud(r: &mut ChaCha8Rng) -> PointCloud {
    let n = r.random_range(0..200);
    let attrs = RadarAttrs {
        power: f32s(r, n, -20.0, 40.0),
        snr: f32s(r, n, 0.0, 30.0),
        v_xr: f32s(r, n, -30.0, 30.0),
        v_yr: f32s(r, n, -30.0, 30.0),
        t_diff: f32s(r, n, -0.1, 0.1),
    };
    PointCloud::new(positions(r, n), PointAttributes::Radar(attrs)).unwrap()
}

/// Boxes per frame; about half carry scores, all carry track ids or not
/// depending on the frame.
pub fn random_annotations(r: &mut ChaCha8Rng) -> Vec<(i64, Vec<Box3D>)> {
    (0..r.random_range(1..6))
        .map(|f| {
            let with_score = r.random_bool(0.5);
            let boxes = (0..r.random_range(0..8))
                .map(|i| {
                    let class = SemanticClass::ALL[r.random_range(0..11)];
                    let b = random_box(r, class);
                    if with_score {
                        b.with_score(r.random_range(0.0..=1.0))
                    } else {
                        b.with_track(i)
                    }
                })
                .collect();
            (f * 500_000, boxes)
        })
        .collect()
}

pub fn random_grid(r: &mut ChaCha8Rng) -> VoxelGrid {
    let dims = [r.random_range(1..30), r.random_range(1..30), r.random_range(1..10)];
    let n = dims.iter().product::<u32>() as usize;
    let labels = (0..n).map(|_| CODES[r.random_range(0..CODES.len())]).collect();
    let origin = Vec3::new(r.random_range(-60.0..0.0), r.random_range(-40.0..0.0), r.random_range(-3.0..0.0));
    VoxelGrid::from_labels(origin, r.random_range(0.05..1.0), dims, labels).unwrap()
}
