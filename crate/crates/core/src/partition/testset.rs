//! Test sets: few arcs whose crossing numbers control those of all arcs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PartitionError;
use crate::cutting::{hierarchical_cutting, CuttingConfig, CuttingError, HierarchicalCutting};
use crate::geom::{CellPairFrame, Point};
use crate::ops::Ops;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestSet {
    /// Arc centers in the frame's local coordinates (inside the enlarged
    /// query-side cell).
    pub centers: Vec<Point>,
    pub r: usize,
    /// Cutting parameter that produced the vertices.
    pub t: usize,
}

/// Maps points of the target cell (local coordinates of `frame`) into the
/// dual frame, where they become arc centers below the query cell.
pub fn to_dual(frame: &CellPairFrame, dual: &CellPairFrame, pts: &[Point]) -> Vec<Point> {
    pts.iter().map(|p| dual.to_local(frame.to_world(*p))).collect()
}

/// Distinct corners of the leaves of a cutting.
pub fn cutting_vertices(cut: &HierarchicalCutting) -> Vec<Point> {
    let mut v: Vec<(u64, u64)> = cut
        .leaves()
        .iter()
        .flat_map(|c| c.trap.corners())
        .map(|p| (p.x.to_bits(), p.y.to_bits()))
        .collect();
    v.sort_unstable();
    v.dedup();
    v.into_iter()
        .map(|(x, y)| Point::new(f64::from_bits(x), f64::from_bits(y)))
        .collect()
}

/// Builds a test set of at most `r` arcs for the points `pts` (local
/// coordinates of `frame`, inside the target cell).
///
/// The points are dualized to arcs in the enlarged query cell, a cutting
/// with parameter about `sqrt(r)` is built for them, and the cutting's
/// vertices become the centers of the test arcs. The parameter is lowered
/// until the cutting has at most `r` vertices.
pub fn build_test_set<R: Rng + ?Sized>(
    pts: &[Point],
    frame: &CellPairFrame,
    r: usize,
    cfg: &CuttingConfig,
    rng: &mut R,
) -> Result<(TestSet, HierarchicalCutting), PartitionError> {
    if r == 0 {
        return Err(PartitionError::InvalidParameter("test set size 0".into()));
    }
    let dual = frame.dual();
    let arcs = to_dual(frame, &dual, pts);
    let region = dual.enlarged_target();
    let mut t = ((r as f64).sqrt().ceil() as usize).max(1);
    loop {
        // near-concurrent arcs make fine cuttings blow up; treat that as too many vertices
        let mut ops = if t > 1 {
            Ops::with_limit(16 * (arcs.len() as u64 + 64) * (t * t) as u64)
        } else {
            Ops::new()
        };
        let cut = match hierarchical_cutting(&region, &arcs, None, t as f64, cfg, rng, &mut ops) {
            Ok(cut) => cut,
            Err(CuttingError::Budget(_)) => {
                t = (t / 2).max(1);
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let verts = cutting_vertices(&cut);
        if verts.len() <= r || t == 1 {
            let mut centers: Vec<Point> = verts.iter().map(|v| frame.to_local(dual.to_world(*v))).collect();
            centers.truncate(r);
            return Ok((TestSet { centers, r, t }, cut));
        }
        // vertex count grows roughly quadratically in t
        let shrink = ((t as f64) * (r as f64 / verts.len() as f64).sqrt()).floor() as usize;
        t = shrink.clamp(1, t - 1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Square, CELL_SIDE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frame() -> CellPairFrame {
        let s = CELL_SIDE;
        CellPairFrame::new(
            Square { x_lo: 0.0, y_lo: -s, side: s },
            Square { x_lo: 0.0, y_lo: 0.0, side: s },
        )
        .unwrap()
    }

    fn points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point> {
        (0..n)
            .map(|_| Point::new(rng.gen_range(0.0..CELL_SIDE), rng.gen_range(0.0..CELL_SIDE)))
            .collect()
    }

    #[test]
    fn small_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = frame();
        let p = points(&mut rng, 6);
        let (q, _) = build_test_set(&p, &f, 6, &CuttingConfig::default(), &mut rng).unwrap();
        assert!(q.centers.len() <= 6);
        let c_bar = f.enlarged_source();
        for c in &q.centers {
            assert!(c_bar.violation(*c) < 1e-9, "{c:?}");
        }
    }

    #[test]
    fn vertices_come_from_the_cutting() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = frame();
        let p = points(&mut rng, 4);
        let (q, cut) = build_test_set(&p, &f, 4, &CuttingConfig::default(), &mut rng).unwrap();
        let dual = f.dual();
        let verts = cutting_vertices(&cut);
        for c in &q.centers {
            let v = dual.to_local(f.to_world(*c));
            assert!(verts.iter().any(|w| w.dist2(&v) < 1e-20), "{v:?}");
            assert!(dual.enlarged_target().violation(v) < 1e-9);
        }
    }

    #[test]
    fn cardinality_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = frame();
        let p = points(&mut rng, 1024);
        let (q, _) = build_test_set(&p, &f, 64, &CuttingConfig::default(), &mut rng).unwrap();
        assert!(q.centers.len() <= 64);
        assert!(q.centers.len() >= 4);
    }
}
