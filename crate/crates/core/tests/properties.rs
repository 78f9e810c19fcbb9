//! Randomized invariants of the pure algorithms.

use gtforge_core::eval_det::{precision_envelope, RECALL_SAMPLES};
use gtforge_core::eval_occ::{confusion, occ_metrics, MiouMode};
use gtforge_core::math::normalize_angle;
use gtforge_core::occgen::{radius_filter, separate_frame};
use gtforge_core::trajectory::interpolate_box;
use gtforge_core::{Box3D, PointCloud, Pose, Quat, SemanticClass, Size3, Vec3, VoxelGrid, FREE, IGNORE};
use proptest::prelude::*;

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn pose() -> impl Strategy<Value = Pose> {
    (vec3(50.0), vec3(1.0), -3.2f64..3.2).prop_map(|(t, axis, angle)| {
        Pose::new(t, Quat::from_axis_angle(axis, angle), 0).unwrap()
    })
}

fn bx() -> impl Strategy<Value = Box3D> {
    (vec3(20.0), 0.2f64..5.0, 0.2f64..3.0, 0.2f64..3.0, -10.0f64..10.0).prop_map(|(c, l, w, h, yaw)| {
        Box3D::new(c, Size3::new(l, w, h), yaw, SemanticClass::Car).unwrap()
    })
}

fn code() -> impl Strategy<Value = u8> {
    prop_oneof![0u8..=10, Just(IGNORE), Just(FREE)]
}

proptest! {
    #[test]
    fn pose_inverse_round_trips(p in pose(), x in vec3(100.0)) {
        let back = p.inverse().apply(p.apply(x));
        prop_assert!((back - x).norm() < 1e-9);
        let id = p.compose(&p.inverse());
        prop_assert!(id.translation.norm() < 1e-9);
        prop_assert!((id.rotation.w.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn composition_is_sequential_application(a in pose(), b in pose(), x in vec3(100.0)) {
        prop_assert!((a.compose(&b).apply(x) - a.apply(b.apply(x))).norm() < 1e-9);
    }

    #[test]
    fn normalized_angles(a in -100.0f64..100.0) {
        let n = normalize_angle(a);
        prop_assert!(n > -std::f64::consts::PI && n <= std::f64::consts::PI);
        let k = (a - n) / std::f64::consts::TAU;
        prop_assert!((k - k.round()).abs() < 1e-9);
    }

    #[test]
    fn interpolation_hits_endpoints(b0 in bx(), b1 in bx(), t0 in -1_000_000i64..1_000_000, dt in 1i64..2_000_000) {
        let (b0, b1) = (b0.with_track(4), b1.with_track(4));
        let t1 = t0 + dt;
        let at0 = interpolate_box(&b0, t0, &b1, t1, t0).unwrap();
        let at1 = interpolate_box(&b0, t0, &b1, t1, t1).unwrap();
        prop_assert_eq!((at0.center, at0.yaw, at0.size), (b0.center, b0.yaw, b0.size));
        prop_assert_eq!((at1.center, at1.yaw, at1.size), (b1.center, b1.yaw, b1.size));
        let mid = interpolate_box(&b0, t0, &b1, t1, t0 + dt / 2).unwrap();
        let f = (dt / 2) as f64 / dt as f64;
        let want = b0.center + (b1.center - b0.center).scale(f);
        prop_assert!((mid.center - want).norm() < 1e-9);
    }

    #[test]
    fn linear_index_law(nx in 1u32..20, ny in 1u32..20, nz in 1u32..20, pick in 0.0f64..1.0) {
        let g = VoxelGrid::free(Vec3::ZERO, 0.5, [nx, ny, nz]).unwrap();
        let i = ((g.len() - 1) as f64 * pick) as usize;
        let [ix, iy, iz] = g.cell_of(i);
        prop_assert_eq!(g.linear_index(ix, iy, iz), i);
        prop_assert_eq!(i, ((ix * ny + iy) * nz + iz) as usize);
        prop_assert_eq!(g.cell_at(g.center(ix, iy, iz)), Some([ix, iy, iz]));
    }

    #[test]
    fn confusion_totals(cells in prop::collection::vec((code(), code()), 1..300)) {
        let n = cells.len() as u32;
        let grid = |f: fn(&(u8, u8)) -> u8| VoxelGrid::from_labels(Vec3::ZERO, 1.0, [n, 1, 1], cells.iter().map(f).collect()).unwrap();
        let (pred, gt) = (grid(|c| c.0), grid(|c| c.1));
        let c = confusion(&pred, &gt).unwrap();
        let occupied_gt = cells.iter().filter(|c| c.1 <= 10).count() as u64;
        prop_assert_eq!(c.classes.iter().map(|k| k.tp + k.fn_).sum::<u64>(), occupied_gt);
        prop_assert_eq!(c.binary.tp + c.binary.fn_, occupied_gt);
        prop_assert_eq!(c.evaluated_voxels, cells.iter().filter(|c| c.1 != IGNORE).count() as u64);
        let m = occ_metrics(&c, MiouMode::Strict);
        for v in m.class_iou.iter().flatten().chain(m.miou.iter()).chain(m.sc_iou.iter()) {
            prop_assert!((0.0..=1.0).contains(v));
        }
        let same = confusion(&gt, &gt).unwrap();
        prop_assert!(same.classes.iter().all(|k| k.fp == 0 && k.fn_ == 0));
    }

    #[test]
    fn envelope_is_monotone(tps in prop::collection::vec(any::<bool>(), 0..200), extra in 0usize..20) {
        let npos = tps.iter().filter(|&&t| t).count() + extra;
        let env = precision_envelope(&tps, npos.max(1));
        prop_assert_eq!(env.len(), RECALL_SAMPLES);
        prop_assert!(env.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(env.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn separation_is_an_exclusive_partition(
        pts in prop::collection::vec(vec3(15.0), 0..300),
        boxes in prop::collection::vec(bx(), 0..5),
    ) {
        let boxes: Vec<Box3D> = boxes.into_iter().enumerate().map(|(i, b)| b.with_track(i as u32)).collect();
        let cloud = PointCloud::plain(pts.clone()).unwrap();
        let sep = separate_frame(&cloud, &boxes);
        let mut seen = vec![0u8; pts.len()];
        for (b, idx) in boxes.iter().zip(&sep.objects) {
            for &i in idx {
                prop_assert!(b.contains(pts[i]));
                seen[i] += 1;
            }
        }
        for &i in &sep.static_indices {
            prop_assert!(boxes.iter().all(|b| !b.contains(pts[i])));
            seen[i] += 1;
        }
        prop_assert!(seen.iter().all(|&s| s == 1));
    }

    #[test]
    fn radius_filter_matches_brute_force(pts in prop::collection::vec(vec3(2.0), 0..150), r in 0.1f64..1.0, n in 0usize..6) {
        let cloud = PointCloud::plain(pts.clone()).unwrap();
        let kept = radius_filter(&cloud, r, n).unwrap();
        let want: Vec<Vec3> = pts
            .iter()
            .filter(|p| pts.iter().filter(|q| (**q - **p).norm() <= r).count() > n)
            .copied()
            .collect();
        prop_assert_eq!(kept.positions(), &want[..]);
    }
}
