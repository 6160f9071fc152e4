//! Pseudo-trapezoidal partitions and the query structures built on them.
//!
//! All structures here live in the local frame of one cell pair: data
//! points sit in the target cell, query centers in the source cell.

pub mod global;
pub mod testset;
pub mod tradeoff;
pub mod tree;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cutting::{hierarchical_cutting, CuttingConfig, CuttingError};
use crate::geom::{crossing_intervals, CellPairFrame, GeomError, Point, PseudoTrapezoid};
use crate::ops::Ops;

pub use global::{GlobalIndex, IndexKind, PairStructure};
pub use testset::{build_test_set, TestSet};
pub use tradeoff::TradeoffIndex;
pub use tree::PartitionTree;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error(transparent)]
    Cutting(#[from] CuttingError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Which side of the query disk to count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Inside,
    Outside,
}

#[derive(Clone, Copy, Debug)]
pub struct PartitionConfig {
    /// Nodes with at most this many points become leaves.
    pub leaf_size: usize,
    /// Constant `c` of the per-round cutting parameter `c * sqrt(n_i / s)`.
    pub t_const: f64,
    pub cutting: CuttingConfig,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig {
            leaf_size: 32,
            t_const: 1.0,
            cutting: CuttingConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionClass {
    /// Indices into the point list the partition was built for.
    pub members: Vec<u32>,
    pub trap: PseudoTrapezoid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapezoidalPartition {
    pub classes: Vec<PartitionClass>,
    pub s: usize,
}

impl TrapezoidalPartition {
    /// Number of class cells crossed by the upper arc about `c`.
    pub fn crossings(&self, c: Point) -> usize {
        self.classes
            .iter()
            .filter(|k| !crossing_intervals(c, &k.trap).is_empty())
            .count()
    }

    /// Largest [`Self::crossings`] over `centers`.
    pub fn crossing_number(&self, centers: &[Point]) -> usize {
        centers.iter().map(|c| self.crossings(*c)).max().unwrap_or(0)
    }
}

/// Splits `pts` (local coordinates, inside the target cell) into classes of
/// `s` to `2s - 1` points, each with a cell of the enlarged target
/// containing it, such that every arc crosses few cells.
///
/// Classes are taken one at a time. Each round builds a cutting for the
/// test set in which arcs are weighted by 2 to the number of earlier class
/// cells they cross, as fine as possible while some cell still holds `s`
/// remaining points. The fullest such cell gives the next class.
pub fn build_partition<R: Rng + ?Sized>(
    pts: &[Point],
    frame: &CellPairFrame,
    s: usize,
    cfg: &PartitionConfig,
    rng: &mut R,
) -> Result<TrapezoidalPartition, PartitionError> {
    let n = pts.len();
    if s < 2 || s >= n {
        return Err(PartitionError::InvalidParameter(format!("s = {s} for n = {n}")));
    }
    let region = frame.enlarged_target();
    let all: Vec<u32> = (0..n as u32).collect();
    if n < 2 * s {
        return Ok(TrapezoidalPartition {
            classes: vec![PartitionClass { members: all, trap: region }],
            s,
        });
    }
    let r = n / s;
    let (test, _) = build_test_set(pts, frame, r, &cfg.cutting, rng)?;
    let q = test.centers;
    let mut log_w = vec![0u32; q.len()];
    let mut taken = vec![false; n];
    let mut remaining = n;
    let mut classes = Vec::new();
    let mut hint = usize::MAX;

    while remaining >= 2 * s {
        let max_k = log_w.iter().copied().max().unwrap_or(0);
        let weights: Vec<f64> = log_w.iter().map(|&k| (k as f64 - max_k as f64).exp2()).collect();
        let mut t = ((cfg.t_const * (remaining as f64 / s as f64).sqrt()).ceil() as usize)
            .max(1)
            .min(hint.saturating_add(1));
        let mut ops = Ops::new();
        let (cut, bins) = loop {
            let cut = hierarchical_cutting(&region, &q, Some(&weights), t as f64, &cfg.cutting, rng, &mut Ops::new())?;
            let mut bins: Vec<Vec<u32>> = vec![Vec::new(); cut.leaves().len()];
            for i in 0..n {
                if !taken[i] {
                    bins[cut.locate_leaf(pts[i], &mut ops) as usize].push(i as u32);
                }
            }
            let fullest = bins.iter().map(Vec::len).max().unwrap_or(0);
            if fullest >= s || t == 1 {
                break (cut, bins);
            }
            let shrink = ((t as f64) * (fullest as f64 / s as f64).sqrt()).floor() as usize;
            t = shrink.clamp(1, t - 1);
        };
        hint = t;
        let leaves = cut.leaves();
        let best = (0..bins.len())
            .max_by(|&a, &b| bins[a].len().cmp(&bins[b].len()).then(b.cmp(&a)))
            .expect("at least one leaf");
        debug_assert!(bins[best].len() >= s);
        let members: Vec<u32> = bins[best].iter().copied().take(s).collect();
        for &m in &members {
            taken[m as usize] = true;
        }
        remaining -= members.len();
        let trap = leaves[best].trap;
        for (k, c) in q.iter().enumerate() {
            if !crossing_intervals(*c, &trap).is_empty() {
                log_w[k] += 1;
            }
        }
        classes.push(PartitionClass { members, trap });
    }
    let rest: Vec<u32> = (0..n as u32).filter(|&i| !taken[i as usize]).collect();
    classes.push(PartitionClass { members: rest, trap: region });
    Ok(TrapezoidalPartition { classes, s })
}
