//! Static 3D kd-tree with deterministic tie-breaking.
//!
//! The tree is stored implicitly: `order` is a permutation of point indices
//! arranged so that every subrange `[lo, hi)` larger than a leaf splits at
//! its midpoint `m` along `axes[m]`.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::Vec3;

const LEAF_SIZE: usize = 8;

#[derive(Clone, Debug)]
pub struct KdTree {
    points: Vec<Vec3>,
    order: Vec<u32>,
    axes: Vec<u8>,
}

impl KdTree {
    pub fn new(points: &[Vec3]) -> KdTree {
        let points = points.to_vec();
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut axes = vec![0u8; points.len()];
        build(&points, &mut order, &mut axes, 0);
        KdTree { points, order, axes }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    /// Nearest point as `(index, squared distance)`. Equidistant candidates
    /// resolve to the lowest index.
    pub fn nearest(&self, q: Vec3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (f64::INFINITY, u32::MAX);
        self.nearest_in(q, 0, self.order.len(), &mut best);
        Some((best.1 as usize, best.0))
    }

    fn nearest_in(&self, q: Vec3, lo: usize, hi: usize, best: &mut (f64, u32)) {
        if hi - lo <= LEAF_SIZE {
            for &i in &self.order[lo..hi] {
                let d = self.points[i as usize].distance_squared(q);
                if d < best.0 || (d == best.0 && i < best.1) {
                    *best = (d, i);
                }
            }
            return;
        }
        let m = lo + (hi - lo) / 2;
        let axis = self.axes[m] as usize;
        let pivot = self.order[m];
        let diff = q.get(axis) - self.points[pivot as usize].get(axis);
        let (near, far) = if diff < 0.0 { ((lo, m), (m + 1, hi)) } else { ((m + 1, hi), (lo, m)) };
        self.nearest_in(q, near.0, near.1, best);
        let d = self.points[pivot as usize].distance_squared(q);
        if d < best.0 || (d == best.0 && pivot < best.1) {
            *best = (d, pivot);
        }
        if diff * diff <= best.0 {
            self.nearest_in(q, far.0, far.1, best);
        }
    }

    /// Indices of every point within `radius` (inclusive), ascending.
    pub fn within_radius(&self, q: Vec3, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit_radius(q, radius * radius, 0, self.order.len(), &mut |i| {
            out.push(i);
            true
        });
        out.sort_unstable();
        out
    }

    /// Counts points within `radius` of `q`, skipping index `exclude`, and
    /// stops as soon as `limit` is reached.
    pub fn count_within(&self, q: Vec3, radius: f64, exclude: Option<usize>, limit: usize) -> usize {
        let mut n = 0;
        if limit == 0 {
            return 0;
        }
        self.visit_radius(q, radius * radius, 0, self.order.len(), &mut |i| {
            if Some(i) != exclude {
                n += 1;
            }
            n < limit
        });
        n
    }

    /// Calls `f` for each point within the radius; `f` returns false to stop.
    /// Returns false when the walk was stopped early.
    fn visit_radius(&self, q: Vec3, r2: f64, lo: usize, hi: usize, f: &mut impl FnMut(usize) -> bool) -> bool {
        if hi - lo <= LEAF_SIZE {
            for &i in &self.order[lo..hi] {
                if self.points[i as usize].distance_squared(q) <= r2 && !f(i as usize) {
                    return false;
                }
            }
            return true;
        }
        let m = lo + (hi - lo) / 2;
        let axis = self.axes[m] as usize;
        let pivot = self.order[m] as usize;
        let diff = q.get(axis) - self.points[pivot].get(axis);
        if self.points[pivot].distance_squared(q) <= r2 && !f(pivot) {
            return false;
        }
        let (near, far) = if diff < 0.0 { ((lo, m), (m + 1, hi)) } else { ((m + 1, hi), (lo, m)) };
        if !self.visit_radius(q, r2, near.0, near.1, f) {
            return false;
        }
        if diff * diff <= r2 {
            return self.visit_radius(q, r2, far.0, far.1, f);
        }
        true
    }
}

fn build(points: &[Vec3], order: &mut [u32], axes: &mut [u8], offset: usize) {
    let n = order.len();
    if n <= LEAF_SIZE {
        return;
    }
    let axis = widest_axis(points, order);
    let m = n / 2;
    order.select_nth_unstable_by(m, |&a, &b| {
        points[a as usize]
            .get(axis)
            .total_cmp(&points[b as usize].get(axis))
            .then(a.cmp(&b))
    });
    axes[offset + m] = axis as u8;
    let (left, rest) = order.split_at_mut(m);
    build(points, left, axes, offset);
    build(points, &mut rest[1..], axes, offset + m + 1);
}

fn widest_axis(points: &[Vec3], order: &[u32]) -> usize {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in order {
        let p = points[i as usize];
        for a in 0..3 {
            lo[a] = lo[a].min(p.get(a));
            hi[a] = hi[a].max(p.get(a));
        }
    }
    let spread = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    if spread[0] >= spread[1] && spread[0] >= spread[2] {
        0
    } else if spread[1] >= spread[2] {
        1
    } else {
        2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, seed: u64) -> Vec<Vec3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Vec3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    fn brute_nearest(points: &[Vec3], q: Vec3) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d = p.distance_squared(q);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    #[test]
    fn nearest_matches_brute_force() {
        let pts = random_points(2000, 7);
        let tree = KdTree::new(&pts);
        for q in random_points(300, 8) {
            assert_eq!(tree.nearest(q).unwrap(), brute_nearest(&pts, q));
        }
    }

    #[test]
    fn ties_pick_lowest_index() {
        // Many duplicates of the same location, interleaved with others.
        let mut pts = Vec::new();
        for i in 0..100 {
            pts.push(if i % 3 == 0 { Vec3::new(1.0, 1.0, 1.0) } else { Vec3::new(i as f64, 0.0, 0.0) });
        }
        let tree = KdTree::new(&pts);
        assert_eq!(tree.nearest(Vec3::new(1.0, 1.0, 1.0)).unwrap().0, 0);
        // Equidistant between index 1 (x=1) and index 2 (x=2).
        assert_eq!(tree.nearest(Vec3::new(1.5, -10.0, 0.0)).map(|r| r.0), Some(1));
    }

    #[test]
    fn radius_query_matches_brute_force() {
        let pts = random_points(1500, 3);
        let tree = KdTree::new(&pts);
        for q in random_points(50, 4) {
            let brute: Vec<usize> = (0..pts.len()).filter(|&i| pts[i].distance_squared(q) <= 0.49).collect();
            assert_eq!(tree.within_radius(q, 0.7), brute);
            assert_eq!(tree.count_within(q, 0.7, None, usize::MAX), brute.len());
            assert_eq!(tree.count_within(q, 0.7, None, 2), brute.len().min(2));
        }
    }

    #[test]
    fn empty_tree() {
        let tree = KdTree::new(&[]);
        assert!(tree.nearest(Vec3::ZERO).is_none());
        assert!(tree.within_radius(Vec3::ZERO, 1.0).is_empty());
    }
}
