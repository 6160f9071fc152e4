//! Whole-plane index: the grid plus one structure per neighbouring cell
//! pair.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tradeoff::TradeoffIndex;
use super::tree::PartitionTree;
use super::{Mode, PartitionConfig, PartitionError};
use crate::geom::{GeomError, Point, Radius};
use crate::grid::{CellId, GridIndex};
use crate::par::{self, Parallelism};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum IndexKind {
    PartitionTree,
    Tradeoff { r: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PairStructure {
    Tree(PartitionTree),
    Tradeoff(TradeoffIndex),
}

impl PairStructure {
    /// `(inside, outside)` for a query center in local coordinates.
    pub fn counts(&self, q: Point) -> (u64, u64) {
        match self {
            PairStructure::Tree(t) => {
                let (i, o, _) = t.query_unchecked(q);
                (i, o)
            }
            PairStructure::Tradeoff(t) => {
                let (i, o, _) = t.query_unchecked(q);
                (i, o)
            }
        }
    }

    pub fn frame(&self) -> &crate::geom::CellPairFrame {
        match self {
            PairStructure::Tree(t) => &t.frame,
            PairStructure::Tradeoff(t) => &t.frame,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalIndex {
    pub grid: GridIndex,
    pub kind: IndexKind,
    /// Aligned with the grid's flat neighbour list; `None` for `C == C'`.
    pairs: Vec<Option<PairStructure>>,
    n: u64,
}

impl GlobalIndex {
    /// Builds the index for `pts` (world coordinates). Per-pair builds run
    /// in parallel when allowed; the result does not depend on it.
    pub fn build(
        pts: &[Point],
        radius: Radius,
        kind: IndexKind,
        cfg: &PartitionConfig,
        seed: u64,
        parallelism: Parallelism,
    ) -> Result<Self, PartitionError> {
        let grid = GridIndex::build(pts, radius)?;
        let mut jobs: Vec<(CellId, CellId)> = Vec::with_capacity(grid.total_neighbor_entries());
        for c in 0..grid.num_cells() as CellId {
            for &d in grid.neighbors(c) {
                jobs.push((c, d));
            }
        }
        let built: Vec<Result<Option<PairStructure>, PartitionError>> = par::map(parallelism, &jobs, |&(c, d)| {
            if c == d {
                return Ok(None);
            }
            let frame = grid.frame(c, d)?;
            let local: Vec<Point> = grid.cell_points(d).iter().map(|p| frame.to_local(*p)).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(par::pair_seed(seed, c, d));
            Ok(Some(match kind {
                IndexKind::PartitionTree => PairStructure::Tree(PartitionTree::build(&local, frame, cfg, &mut rng)?),
                IndexKind::Tradeoff { r } => {
                    PairStructure::Tradeoff(TradeoffIndex::build(&local, frame, r, cfg, &mut rng)?)
                }
            }))
        });
        let pairs = built.into_iter().collect::<Result<Vec<_>, _>>()?;
        Ok(GlobalIndex {
            n: pts.len() as u64,
            grid,
            kind,
            pairs,
        })
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn radius(&self) -> Radius {
        self.grid.radius()
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.iter().filter(|p| p.is_some()).count()
    }

    /// Counts points inside (or outside) the closed disk of the index radius
    /// about `q` (world coordinates).
    pub fn query(&self, q: Point, mode: Mode) -> Result<u64, GeomError> {
        if !q.is_finite() {
            return Err(GeomError::NonFinite);
        }
        let (i, o) = self.counts(q);
        Ok(match mode {
            Mode::Inside => i,
            Mode::Outside => o,
        })
    }

    /// `(inside, outside)` for a world-coordinate center.
    pub fn counts(&self, q: Point) -> (u64, u64) {
        let qs = self.grid.radius().rescale(q);
        let Some(c) = self.grid.locate_scaled(qs) else {
            return (0, self.n);
        };
        let base = self.grid.neighbor_offset(c);
        let mut inside = 0;
        let mut outside = 0;
        let mut covered = 0;
        for (k, &d) in self.grid.neighbors(c).iter().enumerate() {
            let size = self.grid.cell_len(d) as u64;
            covered += size;
            match &self.pairs[base + k] {
                None => inside += size,
                Some(p) => {
                    let (i, o) = p.counts(p.frame().to_local(qs));
                    inside += i;
                    outside += o;
                }
            }
        }
        (inside, outside + self.n - covered)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn brute(pts: &[Point], q: Point) -> u64 {
        pts.iter().filter(|p| p.dist2(&q) <= 1.0).count() as u64
    }

    #[test]
    fn global_queries_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Point> = (0..600)
            .map(|_| Point::new(rng.gen_range(0.0..6.0), rng.gen_range(0.0..6.0)))
            .collect();
        for kind in [IndexKind::PartitionTree, IndexKind::Tradeoff { r: 4.0 }] {
            let idx = GlobalIndex::build(&pts, Radius::default(), kind, &PartitionConfig::default(), 1, Parallelism::Sequential).unwrap();
            for _ in 0..300 {
                let q = Point::new(rng.gen_range(-2.0..8.0), rng.gen_range(-2.0..8.0));
                let want = brute(&pts, q);
                assert_eq!(idx.counts(q), (want, 600 - want));
            }
        }
    }

    #[test]
    fn far_query_and_single_cluster() {
        let pts: Vec<Point> = (0..10).map(|i| Point::new(0.01 * i as f64, 0.0)).collect();
        let idx = GlobalIndex::build(&pts, Radius::default(), IndexKind::PartitionTree, &PartitionConfig::default(), 0, Parallelism::Sequential).unwrap();
        assert_eq!(idx.query(Point::new(100.0, 100.0), Mode::Inside).unwrap(), 0);
        assert_eq!(idx.query(Point::new(0.05, 0.0), Mode::Inside).unwrap(), 10);
    }
}
