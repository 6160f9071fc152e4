//! Partition trees: recursive pseudo-trapezoidal partitions with counts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{build_partition, Mode, PartitionConfig, PartitionError};
use crate::geom::{classify_disk, point_in_disk, CellPairFrame, CellRelation, GeomError, Point, PseudoTrapezoid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub trap: PseudoTrapezoid,
    pub count: u32,
    /// Children range in `nodes` for inner nodes, point range in `points`
    /// for leaves.
    pub range: (u32, u32),
    pub leaf: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionTree {
    pub frame: CellPairFrame,
    nodes: Vec<TreeNode>,
    /// Points in local coordinates, grouped by leaf.
    points: Vec<Point>,
    height: usize,
}

/// Per-query counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct QueryStats {
    pub visits: u64,
    pub scanned: u64,
}

impl PartitionTree {
    /// Builds the tree for `pts`, given in the local coordinates of `frame`
    /// and lying in its target cell.
    pub fn build<R: Rng + ?Sized>(
        pts: &[Point],
        frame: CellPairFrame,
        cfg: &PartitionConfig,
        rng: &mut R,
    ) -> Result<Self, PartitionError> {
        let mut tree = PartitionTree {
            frame,
            nodes: vec![TreeNode {
                trap: frame.enlarged_target(),
                count: pts.len() as u32,
                range: (0, 0),
                leaf: true,
            }],
            points: Vec::with_capacity(pts.len()),
            height: 0,
        };
        let leaf_size = cfg.leaf_size.max(1);
        // (node, points, depth)
        let mut stack: Vec<(usize, Vec<Point>, usize)> = vec![(0, pts.to_vec(), 0)];
        while let Some((id, set, depth)) = stack.pop() {
            tree.height = tree.height.max(depth);
            if set.len() <= leaf_size {
                let a = tree.points.len() as u32;
                tree.points.extend_from_slice(&set);
                tree.nodes[id].range = (a, tree.points.len() as u32);
                tree.nodes[id].leaf = true;
                continue;
            }
            let s = ((set.len() as f64).sqrt().ceil() as usize).max(2);
            let part = build_partition(&set, &frame, s, cfg, rng)?;
            let first = tree.nodes.len() as u32;
            for class in &part.classes {
                tree.nodes.push(TreeNode {
                    trap: class.trap,
                    count: class.members.len() as u32,
                    range: (0, 0),
                    leaf: true,
                });
            }
            tree.nodes[id].range = (first, tree.nodes.len() as u32);
            tree.nodes[id].leaf = false;
            for (k, class) in part.classes.into_iter().enumerate() {
                let sub: Vec<Point> = class.members.iter().map(|&m| set[m as usize]).collect();
                stack.push((first as usize + k, sub, depth + 1));
            }
        }
        Ok(tree)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn leaf_points(&self, node: usize) -> &[Point] {
        let n = &self.nodes[node];
        assert!(n.leaf);
        &self.points[n.range.0 as usize..n.range.1 as usize]
    }

    /// Counts points inside or outside the closed unit disk about `q`
    /// (local coordinates, inside the source cell).
    pub fn query(&self, q: Point, mode: Mode) -> Result<u64, GeomError> {
        if !q.is_finite() {
            return Err(GeomError::NonFinite);
        }
        if !self.frame.source_local().contains(q, 1e-9) {
            return Err(GeomError::OutsideCell(q.x, q.y));
        }
        let (inside, outside, _) = self.query_unchecked(q);
        Ok(match mode {
            Mode::Inside => inside,
            Mode::Outside => outside,
        })
    }

    /// Inside and outside counts plus traversal counters; `q` is trusted to
    /// lie in the (enlarged) source cell.
    pub fn query_unchecked(&self, q: Point) -> (u64, u64, QueryStats) {
        let mut inside = 0u64;
        let mut outside = 0u64;
        let mut stats = QueryStats::default();
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            stats.visits += 1;
            let node = &self.nodes[id];
            if node.count == 0 {
                continue;
            }
            match classify_disk(q, &node.trap) {
                CellRelation::Contains => inside += node.count as u64,
                CellRelation::Disjoint => outside += node.count as u64,
                CellRelation::Crosses if node.leaf => {
                    let pts = &self.points[node.range.0 as usize..node.range.1 as usize];
                    stats.scanned += pts.len() as u64;
                    let k = pts.iter().filter(|p| point_in_disk(**p, q)).count() as u64;
                    inside += k;
                    outside += pts.len() as u64 - k;
                }
                CellRelation::Crosses => stack.extend(node.range.0 as usize..node.range.1 as usize),
            }
        }
        (inside, outside, stats)
    }
}
