//! Exact nearest-neighbour queries and point-set distances.

use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Static 3-d tree over a point set.
#[derive(Clone, Debug)]
pub struct KdTree {
    points: Vec<Vec3>,
    /// Implicit balanced tree: node i splits on axis `axes[i]` at `points[order[i]]`.
    order: Vec<usize>,
    axes: Vec<u8>,
}

impl KdTree {
    pub fn new(points: &[Vec3]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut axes = vec![0u8; points.len()];
        build(points, &mut order, &mut axes, 0);
        KdTree {
            points: points.to_vec(),
            order,
            axes,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Squared distance to, and index of, the nearest point.
    pub fn nearest(&self, q: &Vec3) -> Option<(f64, usize)> {
        let mut best = (f64::INFINITY, usize::MAX);
        self.search(0, self.order.len(), q, &mut best);
        (best.1 != usize::MAX).then_some(best)
    }

    fn search(&self, lo: usize, hi: usize, q: &Vec3, best: &mut (f64, usize)) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let idx = self.order[mid];
        let p = &self.points[idx];
        let d2 = (p - q).norm_squared();
        if d2 < best.0 || (d2 == best.0 && idx < best.1) {
            *best = (d2, idx);
        }
        let axis = self.axes[mid] as usize;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff <= 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.search(near.0, near.1, q, best);
        if diff * diff <= best.0 {
            self.search(far.0, far.1, q, best);
        }
    }
}

fn build(points: &[Vec3], order: &mut [usize], axes: &mut [u8], depth: usize) {
    if order.len() <= 1 {
        if let Some(a) = axes.first_mut() {
            *a = (depth % 3) as u8;
        }
        return;
    }
    // Split on the widest axis of this node.
    let (mut lo, mut hi) = (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY));
    for &i in order.iter() {
        lo = lo.inf(&points[i]);
        hi = hi.sup(&points[i]);
    }
    let axis = (hi - lo).imax();
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| points[a][axis].total_cmp(&points[b][axis]));
    axes[mid] = axis as u8;
    let (left, right) = order.split_at_mut(mid);
    let (al, ar) = axes.split_at_mut(mid);
    build(points, left, al, depth + 1);
    build(points, &mut right[1..], &mut ar[1..], depth + 1);
}

/// Distance from each point of `from` to its nearest neighbour in `to`.
pub fn nearest_distances(from: &[Vec3], to: &KdTree) -> Vec<f64> {
    from.iter()
        .map(|p| to.nearest(p).map_or(f64::INFINITY, |(d2, _)| d2.sqrt()))
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// ½·(mean NN distance a→b + mean NN distance b→a), non-squared.
pub fn chamfer_distance(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("chamfer distance of an empty point set"));
    }
    let (ta, tb) = (KdTree::new(a), KdTree::new(b));
    Ok(0.5 * (mean(&nearest_distances(a, &tb)) + mean(&nearest_distances(b, &ta))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn brute_nn(p: &Vec3, set: &[Vec3]) -> f64 {
        set.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn examples() {
        let a = vec![Vec3::zeros()];
        let b = vec![Vec3::x()];
        assert_eq!(chamfer_distance(&a, &b).unwrap(), 1.0);
        assert_eq!(chamfer_distance(&b, &b).unwrap(), 0.0);
        assert!(chamfer_distance(&[], &b).is_err());
    }

    #[test]
    fn subset_sides_differ() {
        let mut g = rng(2);
        let b: Vec<Vec3> = (0..100).map(|_| Vec3::from_fn(|_, _| g.random_range(0.0..1.0))).collect();
        let a = b[..10].to_vec();
        let ab: f64 = a.iter().map(|p| brute_nn(p, &b)).sum::<f64>() / 10.0;
        let ba: f64 = b.iter().map(|p| brute_nn(p, &a)).sum::<f64>() / 100.0;
        assert_eq!(ab, 0.0);
        assert!(ba > 0.0);
        assert_eq!(chamfer_distance(&a, &b).unwrap(), 0.5 * (ab + ba));
    }

    proptest! {
        #[test]
        fn kdtree_matches_brute_force(seed in any::<u64>(), n in 1usize..150, m in 1usize..50) {
            let mut g = rng(seed);
            let pts: Vec<Vec3> = (0..n).map(|_| Vec3::from_fn(|_, _| g.random_range(-1.0..1.0))).collect();
            let tree = KdTree::new(&pts);
            for _ in 0..m {
                let q = Vec3::from_fn(|_, _| g.random_range(-1.5..1.5));
                let (d2, _) = tree.nearest(&q).unwrap();
                prop_assert_eq!(d2.sqrt(), brute_nn(&q, &pts));
            }
        }
    }
}
