//! Hierarchical cuttings of upper unit arcs inside a pseudo-trapezoid.
//!
//! Level `i` of a cutting is a set of interior-disjoint cells covering the
//! root region, each crossed by arcs of total weight at most `W / rho^i`.
//! Each level refines the previous one: an over-full cell is decomposed by
//! the vertical decomposition of a weighted random sample of the arcs that
//! cross it, and the sample is redrawn until every child meets the bound.

pub mod sample;
pub mod vd;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{crossing_intervals, Point, PseudoTrapezoid};
use crate::ops::{BudgetExhausted, Ops};
pub use sample::ApproxConfig;
pub use vd::{vertical_decomposition, SlabArrangement, Sweep};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CuttingError {
    #[error("no valid refinement for cell {cell} of level {level} within {attempts} attempts")]
    RetryBudget { level: usize, cell: usize, attempts: u32 },
    #[error(transparent)]
    Budget(#[from] BudgetExhausted),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Clone, Copy, Debug)]
pub struct CuttingConfig {
    /// Branching factor between consecutive levels.
    pub rho: u32,
    /// Sample redraws allowed per cell before giving up.
    pub retry_budget: u32,
    /// Refinements with more children are redrawn while a smaller sample
    /// is still possible.
    pub max_children: usize,
    pub approx: ApproxConfig,
}

impl Default for CuttingConfig {
    fn default() -> Self {
        CuttingConfig {
            rho: 2,
            retry_budget: 64,
            max_children: 64,
            approx: ApproxConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutCell {
    pub trap: PseudoTrapezoid,
    /// Index of the parent in the previous level (0 for the root).
    pub parent: u32,
    /// Half-open range of children in the next level.
    pub children: (u32, u32),
    /// Arcs crossing the interior, ascending.
    pub crossing: Vec<u32>,
    /// Total weight of `crossing`.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalCutting {
    pub levels: Vec<Vec<CutCell>>,
    pub rho: u32,
    pub r: f64,
    pub total_weight: f64,
    /// Largest number of children of any cell.
    pub c_max: usize,
    /// Whether the last level is a full decomposition of the one before.
    pub finished: bool,
}

impl HierarchicalCutting {
    pub fn root(&self) -> &CutCell {
        &self.levels[0][0]
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn leaves(&self) -> &[CutCell] {
        self.levels.last().expect("root level")
    }

    pub fn num_cells(&self) -> usize {
        self.levels.iter().map(|l| l.len()).sum()
    }

    /// Crossing bound of level `i`.
    pub fn bound(&self, level: usize) -> f64 {
        if self.finished && level == self.depth() {
            return 0.0;
        }
        self.total_weight / (self.rho as f64).powi(level as i32)
    }

    /// Cell index at every level for a point of the root region. Points on
    /// shared boundaries go to the first containing child; points slightly
    /// outside (rounding) go to the least-violated child.
    pub fn locate(&self, p: Point, ops: &mut Ops) -> Vec<u32> {
        let mut path = Vec::with_capacity(self.levels.len());
        path.push(0u32);
        let mut cur = 0usize;
        for lvl in 0..self.depth() {
            let (a, b) = self.levels[lvl][cur].children;
            let next = &self.levels[lvl + 1];
            let mut best = a as usize;
            let mut best_v = f64::INFINITY;
            for (k, cell) in next.iter().enumerate().take(b as usize).skip(a as usize) {
                ops.add(1);
                let v = cell.trap.violation(p);
                if v == 0.0 {
                    best = k;
                    break;
                }
                if v < best_v {
                    best_v = v;
                    best = k;
                }
            }
            cur = best;
            path.push(cur as u32);
        }
        path
    }

    pub fn locate_leaf(&self, p: Point, ops: &mut Ops) -> u32 {
        *self.locate(p, ops).last().expect("non-empty path")
    }
}

/// Arcs among `candidates` that cross the interior of `t`.
pub fn crossing_subset(t: &PseudoTrapezoid, centers: &[Point], candidates: &[u32], ops: &mut Ops) -> Result<Vec<u32>, BudgetExhausted> {
    ops.charge(candidates.len() as u64)?;
    Ok(candidates
        .iter()
        .copied()
        .filter(|&i| !crossing_intervals(centers[i as usize], t).is_empty())
        .collect())
}

/// Elements of sorted `a` missing from sorted `b`.
pub fn sorted_difference(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len().saturating_sub(b.len()));
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j >= b.len() || b[j] != x {
            out.push(x);
        }
    }
    out
}

fn weight_of(ids: &[u32], weights: Option<&[f64]>) -> f64 {
    match weights {
        None => ids.len() as f64,
        Some(w) => ids.iter().map(|&i| w[i as usize]).sum(),
    }
}

/// Builds a hierarchical (1/r)-cutting of `region` for the upper arcs about
/// `centers`, optionally weighted. `ops` may carry a budget; exhausting it
/// aborts the construction.
pub fn hierarchical_cutting<R: Rng + ?Sized>(
    region: &PseudoTrapezoid,
    centers: &[Point],
    weights: Option<&[f64]>,
    r: f64,
    cfg: &CuttingConfig,
    rng: &mut R,
    ops: &mut Ops,
) -> Result<HierarchicalCutting, CuttingError> {
    if !(r.is_finite() && r >= 1.0) {
        return Err(CuttingError::InvalidParameter(format!("r = {r}")));
    }
    if cfg.rho < 2 {
        return Err(CuttingError::InvalidParameter(format!("rho = {}", cfg.rho)));
    }
    if let Some(w) = weights {
        if w.len() != centers.len() || w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(CuttingError::InvalidParameter("weights".into()));
        }
    }
    let n = centers.len();
    let all: Vec<u32> = (0..n as u32).collect();
    let total_weight = weight_of(&all, weights);
    let root_cross = crossing_subset(region, centers, &all, ops)?;
    let root = CutCell {
        trap: *region,
        parent: 0,
        children: (0, 0),
        weight: weight_of(&root_cross, weights),
        crossing: root_cross,
    };
    let mut cut = HierarchicalCutting {
        levels: vec![vec![root]],
        rho: cfg.rho,
        r,
        total_weight,
        c_max: 1,
        finished: false,
    };
    if n == 0 || total_weight <= 0.0 {
        return Ok(cut);
    }

    let finishing = n >= 8 && r > n as f64 / 8.0;
    let target = if finishing { (n as f64 / 8.0).max(1.0) } else { r };
    let rho = cfg.rho as f64;
    let mut k = 0usize;
    while rho.powi(k as i32) < target * (1.0 - 1e-12) {
        k += 1;
    }

    for level in 1..=k {
        let bound = total_weight / rho.powi(level as i32);
        let parents = std::mem::take(cut.levels.last_mut().unwrap());
        let mut next: Vec<CutCell> = Vec::new();
        let mut parents_out = parents;
        for (pi, parent) in parents_out.iter_mut().enumerate() {
            let start = next.len() as u32;
            let kids = refine(parent, pi, level, bound, centers, weights, cfg, rng, ops)?;
            cut.c_max = cut.c_max.max(kids.len());
            next.extend(kids);
            parent.children = (start, next.len() as u32);
        }
        *cut.levels.last_mut().unwrap() = parents_out;
        cut.levels.push(next);
    }

    if finishing {
        let parents = cut.levels.last_mut().unwrap();
        let mut next = Vec::new();
        for (pi, parent) in parents.iter_mut().enumerate() {
            let start = next.len() as u32;
            let traps = vertical_decomposition(&parent.trap, centers, &parent.crossing, ops)?;
            for t in traps {
                let crossing = crossing_subset(&t, centers, &parent.crossing, ops)?;
                next.push(CutCell {
                    trap: t,
                    parent: pi as u32,
                    children: (0, 0),
                    weight: weight_of(&crossing, weights),
                    crossing,
                });
            }
            cut.c_max = cut.c_max.max(next.len() - start as usize);
            parent.children = (start, next.len() as u32);
        }
        cut.levels.push(next);
        cut.finished = true;
    }
    Ok(cut)
}

#[allow(clippy::too_many_arguments)]
fn refine<R: Rng + ?Sized>(
    parent: &CutCell,
    parent_idx: usize,
    level: usize,
    bound: f64,
    centers: &[Point],
    weights: Option<&[f64]>,
    cfg: &CuttingConfig,
    rng: &mut R,
    ops: &mut Ops,
) -> Result<Vec<CutCell>, CuttingError> {
    let slack = bound * (1.0 + 1e-12);
    if parent.weight <= slack {
        return Ok(vec![CutCell {
            trap: parent.trap,
            parent: parent_idx as u32,
            children: (0, 0),
            crossing: parent.crossing.clone(),
            weight: parent.weight,
        }]);
    }
    let rho0 = parent.weight / bound;
    let eps = 1.0 / (8.0 * rho0);
    let (pool, pool_w) = sample::sample_epsilon_approximation(&parent.crossing, weights, eps, cfg.approx, rng);
    let distinct = vd::dedup_centers(centers, &pool).len();
    let mut size = ((2.0 * rho0).ceil() as usize + 1).min(pool.len());
    for attempt in 0..cfg.retry_budget {
        if attempt > 0 && attempt % 4 == 0 {
            size = ((size as f64 * 1.5).ceil() as usize).min(pool.len());
        }
        let net = sample::weighted_subset(&pool, &pool_w, size, rng);
        let full = size >= pool.len() || vd::dedup_centers(centers, &net).len() >= distinct;
        let traps = vertical_decomposition(&parent.trap, centers, &net, ops)?;
        if traps.len() > cfg.max_children && !full {
            continue;
        }
        let mut kids = Vec::with_capacity(traps.len());
        let mut ok = true;
        for t in traps {
            let crossing = crossing_subset(&t, centers, &parent.crossing, ops)?;
            let weight = weight_of(&crossing, weights);
            if weight > slack {
                ok = false;
                break;
            }
            kids.push(CutCell {
                trap: t,
                parent: parent_idx as u32,
                children: (0, 0),
                crossing,
                weight,
            });
        }
        if ok {
            return Ok(kids);
        }
    }
    Err(CuttingError::RetryBudget {
        level,
        cell: parent_idx,
        attempts: cfg.retry_budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{CellPairFrame, Square, CELL_SIDE};
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

    fn centers(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point> {
        let src = frame().source_local();
        (0..n)
            .map(|_| Point::new(rng.gen_range(src.x_lo..src.x_hi()), rng.gen_range(src.y_lo..src.y_hi())))
            .collect()
    }

    #[test]
    fn difference_of_sorted_lists() {
        assert_eq!(sorted_difference(&[1, 2, 4, 7], &[2, 7]), vec![1, 4]);
        assert_eq!(sorted_difference(&[], &[1]), Vec::<u32>::new());
    }

    #[test]
    fn r_one_is_the_root() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = centers(&mut rng, 50);
        let region = frame().enlarged_target();
        let cut = hierarchical_cutting(&region, &c, None, 1.0, &CuttingConfig::default(), &mut rng, &mut Ops::new()).unwrap();
        assert_eq!(cut.levels.len(), 1);
        let want: Vec<u32> = (0..50).filter(|&i| !crossing_intervals(c[i as usize], &region).is_empty()).collect();
        assert_eq!(cut.root().crossing, want);
    }

    #[test]
    fn levels_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = centers(&mut rng, 512);
        let region = frame().enlarged_target();
        let cut = hierarchical_cutting(&region, &c, None, 8.0, &CuttingConfig::default(), &mut rng, &mut Ops::new()).unwrap();
        assert_eq!(cut.depth(), 3);
        for (i, level) in cut.levels.iter().enumerate() {
            for cell in level {
                assert!(cell.crossing.len() as f64 <= 512.0 / 2f64.powi(i as i32));
                let all: Vec<u32> = (0..512).collect();
                let recount = crossing_subset(&cell.trap, &c, &all, &mut Ops::new()).unwrap();
                assert_eq!(recount, cell.crossing);
            }
        }
        assert!(cut.c_max <= 64, "c_max = {}", cut.c_max);
    }

    #[test]
    fn finishing_step_empties_leaves() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = centers(&mut rng, 40);
        let region = frame().enlarged_target();
        let cut = hierarchical_cutting(&region, &c, None, 20.0, &CuttingConfig::default(), &mut rng, &mut Ops::new()).unwrap();
        assert!(cut.finished);
        assert!(cut.leaves().iter().all(|l| l.crossing.is_empty()));
    }

    #[test]
    fn locate_follows_containment() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = centers(&mut rng, 256);
        let region = frame().enlarged_target();
        let cut = hierarchical_cutting(&region, &c, None, 16.0, &CuttingConfig::default(), &mut rng, &mut Ops::new()).unwrap();
        for _ in 0..2000 {
            let p = Point::new(rng.gen_range(0.0..CELL_SIDE), rng.gen_range(0.0..CELL_SIDE));
            let path = cut.locate(p, &mut Ops::new());
            for (lvl, &k) in path.iter().enumerate() {
                assert!(cut.levels[lvl][k as usize].trap.contains(p));
            }
        }
    }

    #[test]
    fn budget_aborts() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = centers(&mut rng, 256);
        let region = frame().enlarged_target();
        let err = hierarchical_cutting(&region, &c, None, 16.0, &CuttingConfig::default(), &mut rng, &mut Ops::with_limit(100));
        assert!(matches!(err, Err(CuttingError::Budget(_))));
    }
}
