//! Brute-force references. They use nothing but the point and disk
//! primitives of [`crate::geom`].

use crate::geom::{point_in_disk, Point, Radius};
use crate::partition::Mode;

/// Points of `p` inside (or outside) the closed disk of `radius` about `q`.
pub fn brute_count(p: &[Point], q: Point, radius: Radius, mode: Mode) -> u64 {
    let c = radius.rescale(q);
    let inside = p.iter().filter(|x| point_in_disk(radius.rescale(**x), c)).count() as u64;
    match mode {
        Mode::Inside => inside,
        Mode::Outside => p.len() as u64 - inside,
    }
}

/// Inside counts for every center of `q`.
pub fn brute_batched(p: &[Point], q: &[Point], radius: Radius) -> Vec<u64> {
    let ps: Vec<Point> = p.iter().map(|x| radius.rescale(*x)).collect();
    q.iter()
        .map(|c| {
            let c = radius.rescale(*c);
            ps.iter().filter(|x| point_in_disk(**x, c)).count() as u64
        })
        .collect()
}

/// Unordered pairs of `p` at distance at most `lambda`.
pub fn brute_pairs_within(p: &[Point], lambda: f64) -> u64 {
    let l2 = lambda * lambda;
    let mut c = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i].dist2(&p[j]) <= l2 {
                c += 1;
            }
        }
    }
    c
}

/// All pairwise distances in increasing order.
pub fn brute_distances(p: &[Point]) -> Vec<f64> {
    let mut d = Vec::with_capacity(p.len() * p.len().saturating_sub(1) / 2);
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            d.push(p[i].dist2(&p[j]));
        }
    }
    d.sort_by(f64::total_cmp);
    d.into_iter().map(f64::sqrt).collect()
}

/// The k-th smallest pairwise distance, 1-based.
pub fn brute_kth_distance(p: &[Point], k: u64) -> Option<f64> {
    let d = brute_distances(p);
    let k = usize::try_from(k).ok()?;
    if k == 0 {
        return None;
    }
    d.get(k - 1).copied()
}

/// Unordered pairs of circles of radius `rc` about `centers` that meet.
pub fn brute_circle_pairs(centers: &[Point], rc: f64) -> u64 {
    let Ok(r) = Radius::new(2.0 * rc) else {
        return 0;
    };
    let s: Vec<Point> = centers.iter().map(|c| r.rescale(*c)).collect();
    let mut c = 0;
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            if point_in_disk(s[i], s[j]) {
                c += 1;
            }
        }
    }
    c
}

/// Whether some pair is at distance within `tol` of 1.
pub fn brute_unit_distance(p: &[Point], tol: f64) -> bool {
    brute_pairs_within(p, 1.0 + tol) > brute_pairs_within(p, 1.0 - tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_examples() {
        let r = Radius::default();
        assert_eq!(brute_count(&[], Point::new(0.0, 0.0), r, Mode::Inside), 0);
        let four = [Point::new(0.1, 0.1), Point::new(0.2, 0.3), Point::new(0.5, 0.2), Point::new(0.3, 0.6)];
        let q = Point::new(0.2, -0.5);
        assert_eq!(brute_count(&four, q, r, Mode::Inside), 3);
        assert_eq!(brute_count(&four, q, r, Mode::Outside), 1);
        assert_eq!(brute_batched(&four, &[], r), Vec::<u64>::new());
        let tri = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        assert_eq!(brute_distances(&tri), vec![1.0, 1.0, 2f64.sqrt()]);
        assert_eq!(brute_kth_distance(&tri, 3), Some(2f64.sqrt()));
        assert_eq!(brute_kth_distance(&tri, 4), None);
        assert_eq!(brute_kth_distance(&[tri[0], tri[0], tri[1]], 1), Some(0.0));
        let circles = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(10.0, 10.0)];
        assert_eq!(brute_circle_pairs(&circles, 1.0), 1);
        assert_eq!(brute_circle_pairs(&circles[..1], 1.0), 0);
        assert_eq!(brute_circle_pairs(&[circles[0]; 5], 1.0), 10);
        assert!(brute_unit_distance(&[Point::new(0.0, 0.0), Point::new(1.0, 0.0)], 1e-9));
        assert!(!brute_unit_distance(&[Point::new(0.0, 0.0), Point::new(0.5, 0.0)], 1e-9));
    }

    #[test]
    fn batched_is_symmetric_for_equal_sets() {
        let p: Vec<Point> = (0..30).map(|i| Point::new((i * 7 % 11) as f64 * 0.3, (i * 5 % 13) as f64 * 0.2)).collect();
        let r = Radius::new(0.85).unwrap();
        for (j, &c) in brute_batched(&p, &p, r).iter().enumerate() {
            assert_eq!(c, brute_count(&p, p[j], r, Mode::Inside));
        }
        let total: u64 = brute_batched(&p, &p, r).iter().sum();
        assert_eq!(total, 2 * brute_pairs_within(&p, 0.85) + 30);
    }
}
