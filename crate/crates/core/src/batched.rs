//! Batched unit-disk range counting: for every center of `Q`, the number of
//! points of `P` in the closed disk about it.
//!
//! The grid splits the work into cell pairs. Within a pair, a point `p` is
//! in the disk about `q` iff it lies below the upper arc of `q` over the
//! point cell, or dually iff `q` lies below the upper arc of `p` over the
//! center cell. A primal step cuts the arcs of `Q`, locates `P` and charges
//! whole cells inside a disk at once; a dual step does the same with the
//! roles swapped. Each leaf leaves a smaller subproblem. Balanced
//! subproblems alternate the two steps; lopsided ones take one step that
//! balances them; very lopsided ones build the arrangement of the smaller
//! side; small ones are scanned.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cutting::vd::group_centers;
use crate::distsel::count_pairs_within;
use crate::cutting::{hierarchical_cutting, sorted_difference, CuttingConfig, CuttingError, HierarchicalCutting, SlabArrangement};
use crate::geom::{classify_disk, point_in_disk, CellPairFrame, CellRelation, GeomError, Point, PseudoTrapezoid, Radius};
use crate::grid::{CellId, GridIndex};
use crate::ops::Ops;
use crate::par::{self, Parallelism};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algo {
    /// Alternating primal and dual cutting steps.
    PrimalDual,
    /// One cutting of the disk arcs, sized by a doubling guess of the
    /// number of arc crossings, then [`Algo::PrimalDual`] on the leaves.
    Chi,
    /// Scan of all pairs.
    Brute,
}

#[derive(Clone, Copy, Debug)]
pub struct BatchConfig {
    /// Subproblems with at most this many points plus centers are scanned.
    pub base: usize,
    /// Cutting parameter of balanced steps.
    pub r0: f64,
    /// Exponent `delta` in the crossing-sensitive cutting size.
    pub delta: f64,
    /// Constant of the operation budget of a crossing-count guess.
    pub chi_const: f64,
    /// First crossing-count guess.
    pub chi_start: f64,
    /// Recursion depth after which subproblems are scanned.
    pub max_depth: usize,
    pub cutting: CuttingConfig,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            base: 256,
            r0: 4.0,
            delta: 0.125,
            chi_const: 8.0,
            chi_start: 1.0,
            max_depth: 48,
            cutting: CuttingConfig::default(),
        }
    }
}

/// Counters collected over a run. All are deterministic.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchStats {
    /// Elementary operations: distance checks, arc tests, location steps.
    pub ops: u64,
    /// Cutting cells created.
    pub cells: u64,
    /// Deepest subproblem.
    pub depth: u32,
    /// Subproblems processed.
    pub subproblems: u64,
    /// Point-center pairs checked by scanning.
    pub scanned_pairs: u64,
    /// Largest scanned subproblem, points plus centers.
    pub max_base: u64,
    /// Subproblems solved by an arrangement.
    pub arrangements: u64,
    /// Cutting failures answered by scanning instead.
    pub fallbacks: u64,
    /// Sum over cell pairs of the accepted crossing-count guess.
    pub chi_guess: u64,
    /// Guesses rejected for exceeding their budget.
    pub chi_restarts: u64,
}

impl BatchStats {
    pub fn merge(&mut self, o: &BatchStats) {
        self.ops += o.ops;
        self.cells += o.cells;
        self.depth = self.depth.max(o.depth);
        self.subproblems += o.subproblems;
        self.scanned_pairs += o.scanned_pairs;
        self.max_base = self.max_base.max(o.max_base);
        self.arrangements += o.arrangements;
        self.fallbacks += o.fallbacks;
        self.chi_guess += o.chi_guess;
        self.chi_restarts += o.chi_restarts;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountReport {
    pub counts: Vec<u64>,
    pub stats: BatchStats,
}

/// Counts, for every center in `q`, the points of `p` in the closed disk
/// of the given radius about it.
pub fn batched_count(
    p: &[Point],
    q: &[Point],
    radius: Radius,
    algo: Algo,
    cfg: &BatchConfig,
    seed: u64,
    parallelism: Parallelism,
) -> Result<CountReport, GeomError> {
    if p.iter().chain(q).any(|x| !x.is_finite()) {
        return Err(GeomError::NonFinite);
    }
    let qs: Vec<Point> = q.iter().map(|x| radius.rescale(*x)).collect();
    if algo == Algo::Brute {
        let ps: Vec<Point> = p.iter().map(|x| radius.rescale(*x)).collect();
        let counts = qs
            .iter()
            .map(|c| ps.iter().filter(|x| point_in_disk(**x, *c)).count() as u64)
            .collect();
        let n = (p.len() * q.len()) as u64;
        let stats = BatchStats {
            ops: n,
            scanned_pairs: n,
            max_base: (p.len() + q.len()) as u64,
            subproblems: 1,
            ..Default::default()
        };
        return Ok(CountReport { counts, stats });
    }

    let grid = GridIndex::build(p, radius)?;
    let mut by_cell: Vec<Vec<u32>> = vec![Vec::new(); grid.num_cells()];
    for (j, c) in qs.iter().enumerate() {
        if let Some(cell) = grid.locate_scaled(*c) {
            by_cell[cell as usize].push(j as u32);
        }
    }
    let mut counts = vec![0u64; q.len()];
    let mut stats = BatchStats::default();
    let mut jobs: Vec<(CellId, CellId)> = Vec::new();
    for (c, members) in by_cell.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        for &d in grid.neighbors(c as CellId) {
            if d as usize == c {
                let k = grid.cell_len(d) as u64;
                for &j in members {
                    counts[j as usize] += k;
                }
            } else {
                jobs.push((c as CellId, d));
            }
        }
    }
    let results = par::map(parallelism, &jobs, |&(c, d)| {
        let centers: Vec<Point> = by_cell[c as usize].iter().map(|&j| qs[j as usize]).collect();
        let frame = grid.frame(c, d)?;
        let mut solver = PairSolver::new(frame, grid.cell_points(d), &centers, cfg, par::pair_seed(seed, c, d));
        match algo {
            Algo::Chi => solver.run_chi(),
            _ => solver.run(),
        }
        Ok::<_, GeomError>((solver.counts, solver.stats))
    });
    for (&(c, _), res) in jobs.iter().zip(results) {
        let (local, st) = res?;
        for (k, &j) in by_cell[c as usize].iter().enumerate() {
            counts[j as usize] += local[k];
        }
        stats.merge(&st);
    }
    Ok(CountReport { counts, stats })
}

/// Crossing-sensitive variant; see [`Algo::Chi`].
pub fn batched_count_chi(
    p: &[Point],
    q: &[Point],
    radius: Radius,
    cfg: &BatchConfig,
    seed: u64,
    parallelism: Parallelism,
) -> Result<CountReport, GeomError> {
    batched_count(p, q, radius, Algo::Chi, cfg, seed, parallelism)
}

/// Number of unordered pairs of circles of radius `rc` about `centers` that
/// meet (tangent circles and coincident centers included).
pub fn count_circle_intersections(centers: &[Point], rc: f64, seed: u64, parallelism: Parallelism) -> Result<u64, GeomError> {
    let radius = Radius::new(2.0 * rc)?;
    let rep = batched_count(centers, centers, radius, Algo::PrimalDual, &BatchConfig::default(), seed, parallelism)?;
    let total: u64 = rep.counts.iter().sum();
    Ok((total - centers.len() as u64) / 2)
}

/// Tolerance of [`unit_distance_detect`].
pub const UNIT_DISTANCE_TOL: f64 = 1e-9;

/// Result of a unit-distance check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitDistance {
    pub exists: bool,
    /// Pairs at distance at most `1 + tol`.
    pub within_upper: u64,
    /// Pairs at distance at most `1 - tol`.
    pub within_lower: u64,
}

/// Whether some pair of `p` is at distance 1 up to [`UNIT_DISTANCE_TOL`].
pub fn unit_distance_detect(p: &[Point], seed: u64, parallelism: Parallelism) -> Result<UnitDistance, GeomError> {
    let within_upper = count_pairs_within(p, 1.0 + UNIT_DISTANCE_TOL, seed, parallelism)?;
    let within_lower = count_pairs_within(p, 1.0 - UNIT_DISTANCE_TOL, seed, parallelism)?;
    Ok(UnitDistance {
        exists: within_upper > within_lower,
        within_upper,
        within_lower,
    })
}

/// For every circle of radius `radius` about a center of `q`, the points of
/// `p` on it up to a relative tolerance `tol`.
pub fn count_incidences(
    p: &[Point],
    q: &[Point],
    radius: f64,
    tol: f64,
    seed: u64,
    parallelism: Parallelism,
) -> Result<Vec<u64>, GeomError> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(GeomError::InvalidRadius(tol));
    }
    let cfg = BatchConfig::default();
    let outer = batched_count(p, q, Radius::new(radius * (1.0 + tol))?, Algo::PrimalDual, &cfg, seed, parallelism)?;
    let inner = batched_count(p, q, Radius::new(radius * (1.0 - tol))?, Algo::PrimalDual, &cfg, seed, parallelism)?;
    Ok(outer.counts.iter().zip(&inner.counts).map(|(a, b)| a - b).collect())
}

/// Splits `v` into the fewest groups of at most `cap` elements, with sizes
/// differing by at most one.
fn split_even(v: &[u32], cap: usize) -> impl Iterator<Item = &[u32]> {
    let groups = v.len().div_ceil(cap.max(1)).max(1);
    let (base, extra) = (v.len() / groups, v.len() % groups);
    (0..groups).scan(0usize, move |at, g| {
        let len = base + usize::from(g < extra);
        let out = &v[*at..*at + len];
        *at += len;
        Some(out)
    })
}

/// A subproblem: points `ps` inside `rp` (primal frame), centers `qs`
/// inside `rd` (dual frame).
struct Sub {
    ps: Vec<u32>,
    qs: Vec<u32>,
    rp: PseudoTrapezoid,
    rd: PseudoTrapezoid,
    dual_next: bool,
    depth: u32,
}

/// One cell pair. `p*` arrays hold the points of the target cell, `q*`
/// the centers of the source cell, in world (`w`), primal-local (`f`) and
/// dual-local (`d`) coordinates.
struct PairSolver<'a> {
    cfg: &'a BatchConfig,
    rng: ChaCha8Rng,
    pw: &'a [Point],
    pf: Vec<Point>,
    pd: Vec<Point>,
    qw: &'a [Point],
    qf: Vec<Point>,
    qd: Vec<Point>,
    root_p: PseudoTrapezoid,
    root_d: PseudoTrapezoid,
    counts: Vec<u64>,
    stats: BatchStats,
}

impl<'a> PairSolver<'a> {
    fn new(frame: CellPairFrame, pw: &'a [Point], qw: &'a [Point], cfg: &'a BatchConfig, seed: u64) -> Self {
        let dual = frame.dual();
        PairSolver {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pw,
            pf: pw.iter().map(|x| frame.to_local(*x)).collect(),
            pd: pw.iter().map(|x| dual.to_local(*x)).collect(),
            qw,
            qf: qw.iter().map(|x| frame.to_local(*x)).collect(),
            qd: qw.iter().map(|x| dual.to_local(*x)).collect(),
            root_p: frame.enlarged_target(),
            root_d: dual.enlarged_target(),
            counts: vec![0; qw.len()],
            stats: BatchStats::default(),
        }
    }

    fn root(&self) -> Sub {
        let n = self.pw.len();
        let m = self.qw.len();
        Sub {
            ps: (0..n as u32).collect(),
            qs: (0..m as u32).collect(),
            rp: self.root_p,
            rd: self.root_d,
            dual_next: true,
            depth: 0,
        }
    }

    fn run(&mut self) {
        let root = self.root();
        self.drain(vec![root]);
    }

    fn drain(&mut self, mut stack: Vec<Sub>) {
        while let Some(sub) = stack.pop() {
            self.solve(sub, &mut stack);
        }
    }

    fn solve(&mut self, sub: Sub, stack: &mut Vec<Sub>) {
        let (n, m) = (sub.ps.len(), sub.qs.len());
        if n == 0 || m == 0 {
            return;
        }
        self.stats.subproblems += 1;
        self.stats.depth = self.stats.depth.max(sub.depth);
        if n + m <= self.cfg.base || sub.depth as usize >= self.cfg.max_depth {
            self.scan(&sub.ps, &sub.qs);
            return;
        }
        let arranged = if m >= n.saturating_mul(n) {
            Some(self.dual_arrangement(&sub))
        } else if n >= m.saturating_mul(m) {
            Some(self.primal_arrangement(&sub))
        } else {
            None
        };
        match arranged {
            Some(Ok(())) => {
                self.stats.arrangements += 1;
                return;
            }
            Some(Err(_)) => {
                self.stats.fallbacks += 1;
                self.scan(&sub.ps, &sub.qs);
                return;
            }
            None => {}
        }
        let r0 = self.cfg.r0;
        let (dual, r) = if m as f64 >= r0 * n as f64 {
            (true, m as f64 / n as f64)
        } else if n as f64 >= r0 * m as f64 {
            (false, n as f64 / m as f64)
        } else {
            (sub.dual_next, r0)
        };
        let res = if dual { self.dual_step(&sub, r) } else { self.primal_step(&sub, r) };
        match res {
            Ok(children) => {
                for mut c in children {
                    if c.ps.len() + c.qs.len() >= n + m {
                        self.stats.subproblems += 1;
                        self.scan(&c.ps, &c.qs);
                    } else {
                        c.dual_next = !dual;
                        c.depth = sub.depth + 1;
                        stack.push(c);
                    }
                }
            }
            Err(_) => {
                self.stats.fallbacks += 1;
                self.scan(&sub.ps, &sub.qs);
            }
        }
    }

    fn scan(&mut self, ps: &[u32], qs: &[u32]) {
        let k = (ps.len() * qs.len()) as u64;
        self.stats.ops += k;
        self.stats.scanned_pairs += k;
        self.stats.max_base = self.stats.max_base.max((ps.len() + qs.len()) as u64);
        for &j in qs {
            let c = self.qw[j as usize];
            let hits = ps.iter().filter(|&&i| point_in_disk(self.pw[i as usize], c)).count() as u64;
            self.counts[j as usize] += hits;
        }
    }

    fn cut(&mut self, region: &PseudoTrapezoid, centers: &[Point], r: f64, ops: &mut Ops) -> Result<HierarchicalCutting, CuttingError> {
        let r = r.clamp(1.0, centers.len().max(1) as f64);
        let res = hierarchical_cutting(region, centers, None, r, &self.cfg.cutting, &mut self.rng, ops);
        self.stats.ops += ops.count;
        if let Ok(c) = &res {
            self.stats.cells += c.num_cells() as u64;
        }
        res
    }

    /// A cutting step may cost at most what scanning the subproblem costs.
    fn step_budget(sub: &Sub) -> Ops {
        Ops::with_limit((sub.ps.len() * sub.qs.len()) as u64)
    }

    /// Cuts the arcs of the centers over `rp` and locates the points.
    fn primal_step(&mut self, sub: &Sub, r: f64) -> Result<Vec<Sub>, CuttingError> {
        let centers: Vec<Point> = sub.qs.iter().map(|&j| self.qf[j as usize]).collect();
        let cut = self.cut(&sub.rp, &centers, r, &mut Self::step_budget(sub))?;
        let chunk = ((sub.ps.len() as f64 / (r * r)).ceil() as usize).max(1);
        Ok(self.primal_apply(sub, &cut, &centers, chunk))
    }

    /// Charges cells inside each disk to it and returns the leaf
    /// subproblems, with the points of each leaf split into groups of at
    /// most `chunk`.
    fn primal_apply(&mut self, sub: &Sub, cut: &HierarchicalCutting, centers: &[Point], chunk: usize) -> Vec<Sub> {
        let n = sub.ps.len() as u64;
        let root = cut.root();
        let mut crossing = root.crossing.iter().peekable();
        for (h, c) in centers.iter().enumerate() {
            if crossing.peek() == Some(&&(h as u32)) {
                crossing.next();
                continue;
            }
            self.stats.ops += 1;
            if classify_disk(*c, &sub.rp) == CellRelation::Contains {
                self.counts[sub.qs[h] as usize] += n;
            }
        }
        let mut ops = Ops::new();
        let mut per_cell: Vec<Vec<u64>> = cut.levels.iter().map(|l| vec![0; l.len()]).collect();
        let mut leaf_pts: Vec<Vec<u32>> = vec![Vec::new(); cut.leaves().len()];
        for &i in &sub.ps {
            let path = cut.locate(self.pf[i as usize], &mut ops);
            for (lvl, &k) in path.iter().enumerate() {
                per_cell[lvl][k as usize] += 1;
            }
            leaf_pts[*path.last().unwrap() as usize].push(i);
        }
        for (lvl, (level, weights)) in cut.levels.iter().zip(&per_cell).enumerate().skip(1) {
            for (k, cell) in level.iter().enumerate() {
                let w = weights[k];
                if w == 0 {
                    continue;
                }
                let parent = &cut.levels[lvl - 1][cell.parent as usize];
                for h in sorted_difference(&parent.crossing, &cell.crossing) {
                    ops.add(1);
                    if classify_disk(centers[h as usize], &cell.trap) == CellRelation::Contains {
                        self.counts[sub.qs[h as usize] as usize] += w;
                    }
                }
            }
        }
        self.stats.ops += ops.count;
        let mut out = Vec::new();
        for (leaf, pts) in cut.leaves().iter().zip(leaf_pts) {
            if leaf.crossing.is_empty() || pts.is_empty() {
                continue;
            }
            let qs: Vec<u32> = leaf.crossing.iter().map(|&h| sub.qs[h as usize]).collect();
            for group in split_even(&pts, chunk) {
                out.push(Sub {
                    ps: group.to_vec(),
                    qs: qs.clone(),
                    rp: leaf.trap,
                    rd: sub.rd,
                    dual_next: true,
                    depth: 0,
                });
            }
        }
        out
    }

    /// Cuts the arcs of the points over `rd` and locates the centers.
    fn dual_step(&mut self, sub: &Sub, r: f64) -> Result<Vec<Sub>, CuttingError> {
        let centers: Vec<Point> = sub.ps.iter().map(|&i| self.pd[i as usize]).collect();
        let cut = self.cut(&sub.rd, &centers, r, &mut Self::step_budget(sub))?;
        let mut ops = Ops::new();
        let root = cut.root();
        let mut base = 0u64;
        let mut crossing = root.crossing.iter().peekable();
        for (h, c) in centers.iter().enumerate() {
            if crossing.peek() == Some(&&(h as u32)) {
                crossing.next();
                continue;
            }
            ops.add(1);
            if classify_disk(*c, &sub.rd) == CellRelation::Contains {
                base += 1;
            }
        }
        let paths: Vec<Vec<u32>> = sub.qs.iter().map(|&j| cut.locate(self.qd[j as usize], &mut ops)).collect();
        let mut used: Vec<Vec<bool>> = cut.levels.iter().map(|l| vec![false; l.len()]).collect();
        for path in &paths {
            for (lvl, &k) in path.iter().enumerate() {
                used[lvl][k as usize] = true;
            }
        }
        // arcs leaving the crossing set at an edge whose disks contain the child
        let mut inside: Vec<Vec<u64>> = cut.levels.iter().map(|l| vec![0; l.len()]).collect();
        for lvl in 1..cut.levels.len() {
            for (k, cell) in cut.levels[lvl].iter().enumerate() {
                if !used[lvl][k] {
                    continue;
                }
                let parent = &cut.levels[lvl - 1][cell.parent as usize];
                for h in sorted_difference(&parent.crossing, &cell.crossing) {
                    ops.add(1);
                    if classify_disk(centers[h as usize], &cell.trap) == CellRelation::Contains {
                        inside[lvl][k] += 1;
                    }
                }
            }
        }
        let leaves = cut.leaves().len();
        let mut leaf_qs: Vec<Vec<u32>> = vec![Vec::new(); leaves];
        for (path, &j) in paths.iter().zip(&sub.qs) {
            let mut acc = base;
            for (lvl, &k) in path.iter().enumerate().skip(1) {
                acc += inside[lvl][k as usize];
            }
            self.counts[j as usize] += acc;
            leaf_qs[*path.last().unwrap() as usize].push(j);
        }
        self.stats.ops += ops.count;
        let chunk = ((sub.qs.len() as f64 / (r * r)).ceil() as usize).max(1);
        let mut out = Vec::new();
        for (leaf, qs) in cut.leaves().iter().zip(leaf_qs) {
            if leaf.crossing.is_empty() || qs.is_empty() {
                continue;
            }
            let ps: Vec<u32> = leaf.crossing.iter().map(|&h| sub.ps[h as usize]).collect();
            for group in split_even(&qs, chunk) {
                out.push(Sub {
                    ps: ps.clone(),
                    qs: group.to_vec(),
                    rp: sub.rp,
                    rd: leaf.trap,
                    dual_next: true,
                    depth: 0,
                });
            }
        }
        Ok(out)
    }

    /// Arrangement of the point arcs over `rd`; each center is located in it.
    fn dual_arrangement(&mut self, sub: &Sub) -> Result<(), CuttingError> {
        let centers: Vec<Point> = sub.ps.iter().map(|&i| self.pd[i as usize]).collect();
        let (uniq, mult, _) = group_centers(&centers);
        let mut ops = Ops::new();
        let arr = SlabArrangement::build(&sub.rd, uniq, mult, &mut ops)?;
        for &j in &sub.qs {
            self.counts[j as usize] += arr.count_containing(self.qd[j as usize], &mut ops);
        }
        self.stats.ops += ops.count;
        Ok(())
    }

    /// Arrangement of the center arcs over `rp`; each point is located in it.
    fn primal_arrangement(&mut self, sub: &Sub) -> Result<(), CuttingError> {
        let centers: Vec<Point> = sub.qs.iter().map(|&j| self.qf[j as usize]).collect();
        let (uniq, mult, rep) = group_centers(&centers);
        let mut ops = Ops::new();
        let arr = SlabArrangement::build(&sub.rp, uniq, mult, &mut ops)?;
        let pts: Vec<Point> = sub.ps.iter().map(|&i| self.pf[i as usize]).collect();
        let per = arr.counts_per_arc(&pts, None, &mut ops);
        for (k, &j) in sub.qs.iter().enumerate() {
            self.counts[j as usize] += per[rep[k] as usize];
        }
        self.stats.ops += ops.count;
        Ok(())
    }

    /// One cutting of the center arcs with a parameter derived from a
    /// doubling guess of their crossing count. A guess is rejected when the
    /// construction exceeds its operation budget.
    fn run_chi(&mut self) {
        let n = self.pw.len();
        let m = self.qw.len();
        if m < 16 || n + m <= self.cfg.base {
            self.run();
            return;
        }
        let centers = self.qf.clone();
        let mf = m as f64;
        let d = self.cfg.delta;
        let mut chi = self.cfg.chi_start.max(1.0);
        let (cut, r) = loop {
            let r = (mf / 8.0).min((mf * mf / chi).powf(1.0 / (1.0 - d))).max(1.0);
            let unlimited = chi >= mf * mf;
            let budget = self.cfg.chi_const * (mf * r.powf(d) + chi * r / mf + n as f64 * mf.log2());
            let mut ops = if unlimited { Ops::new() } else { Ops::with_limit(budget as u64) };
            let region = self.root_p;
            match self.cut(&region, &centers, r, &mut ops) {
                Ok(cut) => break (cut, r),
                Err(CuttingError::Budget(_)) => {
                    self.stats.chi_restarts += 1;
                    chi *= 2.0;
                }
                Err(_) => {
                    self.stats.fallbacks += 1;
                    self.run();
                    return;
                }
            }
        };
        let _ = r;
        self.stats.chi_guess += chi as u64;
        let root = self.root();
        let k = cut.leaves().len().max(1);
        let chunk = n.div_ceil(k).max(1);
        let subs = self.primal_apply(&root, &cut, &centers, chunk);
        self.stats.subproblems += 1;
        let subs: Vec<Sub> = subs
            .into_iter()
            .map(|mut s| {
                s.depth = 1;
                s
            })
            .collect();
        self.drain(subs);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn brute(p: &[Point], q: &[Point]) -> Vec<u64> {
        q.iter()
            .map(|c| p.iter().filter(|x| x.dist2(c) <= 1.0).count() as u64)
            .collect()
    }

    fn uniform(rng: &mut ChaCha8Rng, n: usize, side: f64) -> Vec<Point> {
        (0..n)
            .map(|_| Point::new(rng.gen_range(0.0..side), rng.gen_range(0.0..side)))
            .collect()
    }

    #[test]
    fn empty_centers() {
        let p = [Point::new(0.0, 0.0)];
        let rep = batched_count(&p, &[], Radius::default(), Algo::PrimalDual, &BatchConfig::default(), 0, Parallelism::Sequential).unwrap();
        assert!(rep.counts.is_empty());
    }

    #[test]
    fn three_point_example() {
        let p = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(3.0, 0.0)];
        let q = [Point::new(0.0, 0.0)];
        assert_eq!(brute(&p, &q), vec![2]);
        for algo in [Algo::PrimalDual, Algo::Chi, Algo::Brute] {
            let rep = batched_count(&p, &q, Radius::default(), algo, &BatchConfig::default(), 0, Parallelism::Sequential).unwrap();
            assert_eq!(rep.counts, vec![2]);
        }
    }

    #[test]
    fn dense_pair_exercises_recursion() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = uniform(&mut rng, 3000, 1.5);
        let q = uniform(&mut rng, 3000, 1.5);
        let want = brute(&p, &q);
        for algo in [Algo::PrimalDual, Algo::Chi] {
            let rep = batched_count(&p, &q, Radius::default(), algo, &BatchConfig::default(), 1, Parallelism::Sequential).unwrap();
            assert_eq!(rep.counts, want, "{algo:?}");
            assert!(rep.stats.scanned_pairs < 3000 * 3000 / 2, "{:?}", rep.stats);
            assert!(rep.stats.depth >= 1);
        }
    }

    #[test]
    fn lopsided_sizes_use_arrangements() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = uniform(&mut rng, 4000, 1.4);
        let q = uniform(&mut rng, 20, 1.4);
        let rep = batched_count(&p, &q, Radius::default(), Algo::PrimalDual, &BatchConfig::default(), 2, Parallelism::Sequential).unwrap();
        assert_eq!(rep.counts, brute(&p, &q));
        assert!(rep.stats.arrangements > 0);
        let rep = batched_count(&q, &p, Radius::default(), Algo::PrimalDual, &BatchConfig::default(), 2, Parallelism::Sequential).unwrap();
        assert_eq!(rep.counts, brute(&q, &p));
        assert!(rep.stats.arrangements > 0);
    }

    #[test]
    fn even_split_sizes() {
        let v: Vec<u32> = (0..10).collect();
        let sizes: Vec<usize> = split_even(&v, 4).map(|g| g.len()).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
        assert_eq!(split_even(&v, 20).count(), 1);
        assert_eq!(split_even(&[], 3).count(), 1);
    }

    #[test]
    fn identical_centers_and_far_disks() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = uniform(&mut rng, 2000, 1.4);
        let q = vec![Point::new(0.7, 0.3); 1500];
        for algo in [Algo::PrimalDual, Algo::Chi] {
            let rep = batched_count(&p, &q, Radius::default(), algo, &BatchConfig::default(), 4, Parallelism::Sequential).unwrap();
            assert_eq!(rep.counts, brute(&p, &q), "{algo:?}");
        }
        let far: Vec<Point> = (0..40).flat_map(|i| (0..40).map(move |j| Point::new(3.0 * i as f64, 3.0 * j as f64))).collect();
        let pts: Vec<Point> = far.iter().flat_map(|c| (0..3).map(move |k| Point::new(c.x + 0.2 * k as f64, c.y))).collect();
        let rep = batched_count(&pts, &far, Radius::default(), Algo::Chi, &BatchConfig::default(), 4, Parallelism::Sequential).unwrap();
        assert_eq!(rep.counts, brute(&pts, &far));
        assert!(rep.stats.chi_restarts <= 1);
    }

    #[test]
    fn radius_is_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = uniform(&mut rng, 800, 6.0);
        let q = uniform(&mut rng, 800, 6.0);
        let want: Vec<u64> = q
            .iter()
            .map(|c| p.iter().filter(|x| x.dist2(c) <= 2.5 * 2.5).count() as u64)
            .collect();
        let rep = batched_count(&p, &q, Radius::new(2.5).unwrap(), Algo::PrimalDual, &BatchConfig::default(), 3, Parallelism::Sequential).unwrap();
        assert_eq!(rep.counts, want);
    }

    #[test]
    fn circle_and_pair_counts() {
        let c = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(10.0, 10.0)];
        assert_eq!(count_circle_intersections(&c, 1.0, 0, Parallelism::Sequential).unwrap(), 1);
        assert_eq!(count_circle_intersections(&c[..1], 1.0, 0, Parallelism::Sequential).unwrap(), 0);
        let p = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(3.0, 0.0)];
        assert!(unit_distance_detect(&p, 0, Parallelism::Sequential).unwrap().exists);
        let h = [Point::new(0.0, 0.0), Point::new(0.5, 0.0)];
        assert!(!unit_distance_detect(&h, 0, Parallelism::Sequential).unwrap().exists);
    }

    #[test]
    fn incidences_on_circles() {
        let p = [Point::new(1.0, 0.0), Point::new(0.0, 1.0), Point::new(0.5, 0.0), Point::new(-1.0, 0.0)];
        let q = [Point::new(0.0, 0.0), Point::new(2.0, 0.0)];
        assert_eq!(count_incidences(&p, &q, 1.0, 1e-9, 0, Parallelism::Sequential).unwrap(), vec![3, 1]);
    }
}
