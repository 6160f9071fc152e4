//! Space/time trade-off: a cutting of the dual arcs with canonical counts
//! on every edge, and partition trees below its leaves.
//!
//! In the dual frame each data point is an upper arc over the enlarged
//! query cell, and a query center is a point there. Walking down the
//! cutting from the root, an arc stops crossing the current cell at some
//! edge; from then on its disk either contains the whole cell (so it holds
//! the query) or avoids it. Those arcs are charged in bulk per edge. Arcs
//! still crossing the leaf are handled by the leaf's partition tree.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::PartitionTree;
use super::{Mode, PartitionConfig, PartitionError};
use crate::cutting::{hierarchical_cutting, sorted_difference, HierarchicalCutting};
use crate::geom::{classify_disk, CellPairFrame, CellRelation, GeomError, Point};
use crate::ops::Ops;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffIndex {
    pub frame: CellPairFrame,
    dual: CellPairFrame,
    /// Cutting of the dual arcs, with crossing lists removed after build.
    cutting: HierarchicalCutting,
    base_inside: u64,
    base_outside: u64,
    /// Per level and cell: arcs that stop crossing at the edge into the
    /// cell and whose disks contain it (`h1`) or avoid it (`h2`).
    h1: Vec<Vec<u32>>,
    h2: Vec<Vec<u32>>,
    secondary: Vec<Option<PartitionTree>>,
    n: u64,
    pub r: f64,
}

impl TradeoffIndex {
    /// Builds the structure for `pts` (local coordinates of `frame`, inside
    /// its target cell) with cutting parameter `r`.
    pub fn build<R: Rng + ?Sized>(
        pts: &[Point],
        frame: CellPairFrame,
        r: f64,
        cfg: &PartitionConfig,
        rng: &mut R,
    ) -> Result<Self, PartitionError> {
        let dual = frame.dual();
        let arcs = super::testset::to_dual(&frame, &dual, pts);
        let region = dual.enlarged_target();
        let r_eff = r.clamp(1.0, (pts.len() as f64).max(1.0));
        let mut cutting = hierarchical_cutting(&region, &arcs, None, r_eff, &cfg.cutting, rng, &mut Ops::new())?;

        let mut base_inside = 0;
        let mut base_outside = 0;
        {
            let root = cutting.root();
            let mut crossing = root.crossing.iter().peekable();
            for (i, c) in arcs.iter().enumerate() {
                if crossing.peek() == Some(&&(i as u32)) {
                    crossing.next();
                    continue;
                }
                match classify_disk(*c, &root.trap) {
                    CellRelation::Contains => base_inside += 1,
                    _ => base_outside += 1,
                }
            }
        }

        let mut h1 = vec![vec![0u32]];
        let mut h2 = vec![vec![0u32]];
        for lvl in 1..cutting.levels.len() {
            let mut a = Vec::with_capacity(cutting.levels[lvl].len());
            let mut b = Vec::with_capacity(cutting.levels[lvl].len());
            for cell in &cutting.levels[lvl] {
                let parent = &cutting.levels[lvl - 1][cell.parent as usize];
                let (mut x, mut y) = (0u32, 0u32);
                for &h in sorted_difference(&parent.crossing, &cell.crossing).iter() {
                    match classify_disk(arcs[h as usize], &cell.trap) {
                        CellRelation::Contains => x += 1,
                        _ => y += 1,
                    }
                }
                a.push(x);
                b.push(y);
            }
            h1.push(a);
            h2.push(b);
        }

        let mut secondary = Vec::with_capacity(cutting.leaves().len());
        for leaf in cutting.leaves() {
            if leaf.crossing.is_empty() {
                secondary.push(None);
                continue;
            }
            let sub: Vec<Point> = leaf.crossing.iter().map(|&h| pts[h as usize]).collect();
            secondary.push(Some(PartitionTree::build(&sub, frame, cfg, rng)?));
        }
        for level in cutting.levels.iter_mut() {
            for cell in level.iter_mut() {
                cell.crossing = Vec::new();
            }
        }
        Ok(TradeoffIndex {
            frame,
            dual,
            cutting,
            base_inside,
            base_outside,
            h1,
            h2,
            secondary,
            n: pts.len() as u64,
            r,
        })
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn cutting(&self) -> &HierarchicalCutting {
        &self.cutting
    }

    /// Sum of the sizes of all secondary trees.
    pub fn secondary_size(&self) -> usize {
        self.secondary.iter().flatten().map(|t| t.len()).sum()
    }

    pub fn query(&self, q: Point, mode: Mode) -> Result<u64, GeomError> {
        if !q.is_finite() {
            return Err(GeomError::NonFinite);
        }
        if !self.frame.source_local().contains(q, 1e-9) {
            return Err(GeomError::OutsideCell(q.x, q.y));
        }
        let (i, o, _) = self.query_unchecked(q);
        Ok(match mode {
            Mode::Inside => i,
            Mode::Outside => o,
        })
    }

    /// Inside count, outside count and the number of nodes visited.
    pub fn query_unchecked(&self, q: Point) -> (u64, u64, u64) {
        let qd = self.dual.to_local(self.frame.to_world(q));
        let mut ops = Ops::new();
        let path = self.cutting.locate(qd, &mut ops);
        let mut inside = self.base_inside;
        let mut outside = self.base_outside;
        for (lvl, &k) in path.iter().enumerate().skip(1) {
            inside += self.h1[lvl][k as usize] as u64;
            outside += self.h2[lvl][k as usize] as u64;
        }
        let mut visits = ops.count + path.len() as u64;
        if let Some(t) = &self.secondary[*path.last().unwrap() as usize] {
            let (i, o, st) = t.query_unchecked(q);
            inside += i;
            outside += o;
            visits += st.visits;
        }
        (inside, outside, visits)
    }

    /// Recounts the canonical split of every edge against the given points:
    /// the arcs leaving the crossing set at an edge are exactly those
    /// counted in `h1` plus `h2`, and the disks in `h1` contain the child.
    pub fn verify_canonical(&self, pts: &[Point]) -> bool {
        let arcs = super::testset::to_dual(&self.frame, &self.dual, pts);
        let crossing = |t: &crate::geom::PseudoTrapezoid| -> Vec<u32> {
            (0..arcs.len() as u32)
                .filter(|&i| !crate::geom::crossing_intervals(arcs[i as usize], t).is_empty())
                .collect()
        };
        for lvl in 1..self.cutting.levels.len() {
            for (k, cell) in self.cutting.levels[lvl].iter().enumerate() {
                let parent = &self.cutting.levels[lvl - 1][cell.parent as usize];
                let left = sorted_difference(&crossing(&parent.trap), &crossing(&cell.trap));
                let contain = left
                    .iter()
                    .filter(|&&h| classify_disk(arcs[h as usize], &cell.trap) == CellRelation::Contains)
                    .count() as u32;
                if contain != self.h1[lvl][k] || left.len() as u32 - contain != self.h2[lvl][k] {
                    return false;
                }
            }
        }
        true
    }
}
