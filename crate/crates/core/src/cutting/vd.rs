//! Slab sweeps over upper unit arcs inside a pseudo-trapezoid.
//!
//! Cutting the region at every arc endpoint and every pairwise crossing
//! gives vertical slabs in which the arcs present are totally ordered.
//! Merging horizontally adjacent slab regions bounded by the same pair of
//! curves yields the vertical decomposition; keeping the slabs as they are
//! gives a point-location structure for the arrangement.

use crate::geom::{
    circle_intersections, crossing_intervals, half_circle_y, point_in_disk, ArcKind, Boundary,
    Point, PseudoTrapezoid,
};
use crate::ops::{BudgetExhausted, Ops};

const BOTTOM: u32 = u32::MAX - 1;
const TOP: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Piece {
    arc: u32,
    x_lo: f64,
    x_hi: f64,
}

/// Where an arc sits relative to the region within one slab.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Active,
    Above,
    Other,
}

/// Slab decomposition of `region` by a set of upper arcs.
#[derive(Clone, Debug)]
pub struct Sweep {
    pub region: PseudoTrapezoid,
    /// Slab boundaries, ascending; `xs.len() == slabs + 1`.
    pub xs: Vec<f64>,
    offsets: Vec<u32>,
    /// Arc ids per slab, bottom to top.
    order: Vec<u32>,
    /// Arcs whose piece starts or ends at `xs[k]`, as `(k, arc)`.
    touches: Vec<(u32, u32)>,
}

impl Sweep {
    /// Sweeps `region` with the upper arcs about `centers[i]` for `i` in
    /// `ids`. Centers must be pairwise distinct.
    pub fn build(
        region: &PseudoTrapezoid,
        centers: &[Point],
        ids: &[u32],
        ops: &mut Ops,
    ) -> Result<Sweep, BudgetExhausted> {
        let mut pieces: Vec<Piece> = Vec::new();
        for &id in ids {
            ops.charge(1)?;
            for (a, b) in crossing_intervals(centers[id as usize], region) {
                pieces.push(Piece {
                    arc: id,
                    x_lo: a,
                    x_hi: b,
                });
            }
        }
        let mut xs = vec![region.x_lo, region.x_hi];
        let mut touches: Vec<(f64, u32)> = Vec::with_capacity(2 * pieces.len());
        for p in &pieces {
            xs.push(p.x_lo);
            xs.push(p.x_hi);
            touches.push((p.x_lo, p.arc));
            touches.push((p.x_hi, p.arc));
        }
        ops.charge((pieces.len() * pieces.len() / 2) as u64)?;
        for i in 0..pieces.len() {
            for j in i + 1..pieces.len() {
                let (p, q) = (&pieces[i], &pieces[j]);
                let lo = p.x_lo.max(q.x_lo);
                let hi = p.x_hi.min(q.x_hi);
                if lo >= hi || p.arc == q.arc {
                    continue;
                }
                let (c, d) = (centers[p.arc as usize], centers[q.arc as usize]);
                if let Some(hits) = circle_intersections(c, d) {
                    for h in hits {
                        if h.x > lo && h.x < hi && h.y >= c.y && h.y >= d.y {
                            xs.push(h.x);
                        }
                    }
                }
            }
        }
        xs.sort_by(|a, b| a.total_cmp(b));
        xs.dedup();

        let slabs = xs.len() - 1;
        pieces.sort_by(|a, b| a.x_lo.total_cmp(&b.x_lo));
        let mut offsets = Vec::with_capacity(slabs + 1);
        let mut order = Vec::new();
        let mut active: Vec<Piece> = Vec::new();
        let mut next = 0;
        offsets.push(0u32);
        for k in 0..slabs {
            let (x0, x1) = (xs[k], xs[k + 1]);
            active.retain(|p| p.x_hi > x0);
            while next < pieces.len() && pieces[next].x_lo <= x0 {
                if pieces[next].x_hi > x0 {
                    active.push(pieces[next]);
                }
                next += 1;
            }
            let xm = 0.5 * (x0 + x1);
            let mut keyed: Vec<(f64, u32)> = active
                .iter()
                .map(|p| (half_circle_y(centers[p.arc as usize], ArcKind::Upper, xm), p.arc))
                .collect();
            ops.add(keyed.len() as u64);
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            order.extend(keyed.iter().map(|e| e.1));
            offsets.push(order.len() as u32);
        }

        let mut touch_idx: Vec<(u32, u32)> = touches
            .into_iter()
            .map(|(x, arc)| {
                let k = xs.partition_point(|v| *v < x);
                (k as u32, arc)
            })
            .collect();
        touch_idx.sort_unstable();
        touch_idx.dedup();

        Ok(Sweep {
            region: *region,
            xs,
            offsets,
            order,
            touches: touch_idx,
        })
    }

    pub fn num_slabs(&self) -> usize {
        self.xs.len() - 1
    }

    /// Arcs present in slab `k`, bottom to top.
    pub fn slab(&self, k: usize) -> &[u32] {
        &self.order[self.offsets[k] as usize..self.offsets[k + 1] as usize]
    }

    /// Slab containing abscissa `x` (clamped to the region's x-range).
    pub fn slab_of(&self, x: f64) -> usize {
        let k = self.xs.partition_point(|v| *v <= x);
        k.saturating_sub(1).min(self.num_slabs() - 1)
    }

    fn status(&self, c: Point, k: usize, present: bool) -> Status {
        if present {
            return Status::Active;
        }
        let xm = 0.5 * (self.xs[k] + self.xs[k + 1]);
        if (xm - c.x).abs() < 1.0 && half_circle_y(c, ArcKind::Upper, xm) >= self.region.top_at(xm) {
            Status::Above
        } else {
            Status::Other
        }
    }

    /// Calls `f(k, arc, above)` whenever an arc starts (`above == true`) or
    /// stops (`above == false`) lying entirely above the region, with `k`
    /// the first slab of the new state. Slab 0 reports every arc above it.
    fn above_transitions(&self, centers: &[Point], ids: &[u32], mut f: impl FnMut(usize, u32, bool)) {
        let mut state = vec![Status::Other; centers.len()];
        let first = self.slab(0);
        for &id in ids {
            let s = self.status(centers[id as usize], 0, first.contains(&id));
            if s == Status::Above {
                f(0, id, true);
            }
            state[id as usize] = s;
        }
        let mut t = self.touches.partition_point(|e| e.0 == 0);
        for k in 1..self.num_slabs() {
            let here = self.slab(k);
            while t < self.touches.len() && self.touches[t].0 as usize == k {
                let id = self.touches[t].1;
                t += 1;
                let s = self.status(centers[id as usize], k, here.contains(&id));
                let old = std::mem::replace(&mut state[id as usize], s);
                if old == Status::Above && s != Status::Above {
                    f(k, id, false);
                } else if old != Status::Above && s == Status::Above {
                    f(k, id, true);
                }
            }
        }
    }
}

/// Vertical decomposition of `region` by the arcs `ids` (duplicates of the
/// same center are ignored).
pub fn vertical_decomposition(
    region: &PseudoTrapezoid,
    centers: &[Point],
    ids: &[u32],
    ops: &mut Ops,
) -> Result<Vec<PseudoTrapezoid>, BudgetExhausted> {
    let ids = dedup_centers(centers, ids);
    let sweep = Sweep::build(region, centers, &ids, ops)?;
    let boundary = |id: u32| match id {
        BOTTOM => region.bottom,
        TOP => region.top,
        _ => Boundary::upper(centers[id as usize]),
    };
    let mut cells: Vec<PseudoTrapezoid> = Vec::new();
    // (lower, upper) curve pairs of the previous slab, sorted, with their cell
    let mut open: Vec<((u32, u32), usize)> = Vec::new();
    let mut now: Vec<((u32, u32), usize)> = Vec::new();
    for k in 0..sweep.num_slabs() {
        let (x0, x1) = (sweep.xs[k], sweep.xs[k + 1]);
        let mut curves = Vec::with_capacity(sweep.slab(k).len() + 2);
        curves.push(BOTTOM);
        curves.extend_from_slice(sweep.slab(k));
        curves.push(TOP);
        now.clear();
        for w in curves.windows(2) {
            let key = (w[0], w[1]);
            let idx = match open.binary_search_by_key(&key, |e| e.0) {
                Ok(j) => {
                    let i = open[j].1;
                    cells[i].x_hi = x1;
                    i
                }
                Err(_) => {
                    cells.push(PseudoTrapezoid {
                        x_lo: x0,
                        x_hi: x1,
                        top: boundary(w[1]),
                        bottom: boundary(w[0]),
                    });
                    cells.len() - 1
                }
            };
            now.push((key, idx));
        }
        now.sort_unstable_by_key(|e| e.0);
        std::mem::swap(&mut open, &mut now);
    }
    Ok(cells)
}

/// Drops later ids whose center repeats an earlier one.
pub fn dedup_centers(centers: &[Point], ids: &[u32]) -> Vec<u32> {
    let mut keyed: Vec<(u64, u64, u32)> = ids
        .iter()
        .map(|&i| {
            let c = centers[i as usize];
            (c.x.to_bits(), c.y.to_bits(), i)
        })
        .collect();
    keyed.sort_unstable();
    keyed.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    let mut out: Vec<u32> = keyed.into_iter().map(|e| e.2).collect();
    out.sort_unstable();
    out
}

/// Groups equal centers: returns distinct centers and their multiplicities,
/// plus, for each input, the index of its distinct representative.
pub fn group_centers(centers: &[Point]) -> (Vec<Point>, Vec<u64>, Vec<u32>) {
    let mut idx: Vec<u32> = (0..centers.len() as u32).collect();
    idx.sort_unstable_by_key(|&i| {
        let c = centers[i as usize];
        (c.x.to_bits(), c.y.to_bits())
    });
    let mut uniq: Vec<Point> = Vec::new();
    let mut mult: Vec<u64> = Vec::new();
    let mut rep = vec![0u32; centers.len()];
    for &i in &idx {
        let c = centers[i as usize];
        match uniq.last() {
            Some(u) if u.x.to_bits() == c.x.to_bits() && u.y.to_bits() == c.y.to_bits() => {
                *mult.last_mut().unwrap() += 1;
            }
            _ => {
                uniq.push(c);
                mult.push(1);
            }
        }
        rep[i as usize] = (uniq.len() - 1) as u32;
    }
    (uniq, mult, rep)
}

/// Arrangement of weighted upper arcs inside a region, with slab-based
/// point location.
#[derive(Clone, Debug)]
pub struct SlabArrangement {
    sweep: Sweep,
    centers: Vec<Point>,
    weights: Vec<u64>,
    /// Prefix sums of weights along each slab's order, aligned with it
    /// (one extra leading zero per slab).
    prefix: Vec<u64>,
    /// Weight of arcs lying entirely above the region, per slab.
    above: Vec<u64>,
}

impl SlabArrangement {
    /// `centers` must be distinct; `weights` gives their multiplicities.
    pub fn build(
        region: &PseudoTrapezoid,
        centers: Vec<Point>,
        weights: Vec<u64>,
        ops: &mut Ops,
    ) -> Result<Self, BudgetExhausted> {
        let ids: Vec<u32> = (0..centers.len() as u32).collect();
        let sweep = Sweep::build(region, &centers, &ids, ops)?;
        let slabs = sweep.num_slabs();
        let mut prefix = Vec::with_capacity(sweep.order.len() + slabs);
        for k in 0..slabs {
            let mut acc = 0;
            prefix.push(0);
            for &a in sweep.slab(k) {
                acc += weights[a as usize];
                prefix.push(acc);
            }
        }
        let mut delta = vec![0i64; slabs + 1];
        sweep.above_transitions(&centers, &ids, |k, a, on| {
            let w = weights[a as usize] as i64;
            delta[k] += if on { w } else { -w };
        });
        let mut above = Vec::with_capacity(slabs);
        let mut run = 0i64;
        for d in delta.iter().take(slabs) {
            run += d;
            above.push(run as u64);
        }
        ops.add(slabs as u64);
        Ok(SlabArrangement {
            sweep,
            centers,
            weights,
            prefix,
            above,
        })
    }

    pub fn num_slabs(&self) -> usize {
        self.sweep.num_slabs()
    }

    /// Total weight of arcs whose closed disk contains `p` (a point of the
    /// region).
    pub fn count_containing(&self, p: Point, ops: &mut Ops) -> u64 {
        let k = self.sweep.slab_of(p.x);
        let arcs = self.sweep.slab(k);
        // arcs below p come first; p lies inside every arc above it
        let below = arcs.partition_point(|&a| !point_in_disk(p, self.centers[a as usize]));
        ops.add((usize::BITS - arcs.len().leading_zeros()) as u64 + 1);
        let base = self.sweep.offsets[k] as usize + k;
        let total = self.prefix[base + arcs.len()];
        total - self.prefix[base + below] + self.above[k]
    }

    /// For every arc, the total weight of `pts` inside its closed disk.
    /// Points must lie in the region.
    pub fn counts_per_arc(&self, pts: &[Point], pt_weights: Option<&[u64]>, ops: &mut Ops) -> Vec<u64> {
        let slabs = self.num_slabs();
        let mut hist: Vec<u64> = vec![0; self.sweep.order.len() + slabs];
        let mut per_slab = vec![0u64; slabs];
        for (i, p) in pts.iter().enumerate() {
            let w = pt_weights.map_or(1, |w| w[i]);
            let k = self.sweep.slab_of(p.x);
            let arcs = self.sweep.slab(k);
            let below = arcs.partition_point(|&a| !point_in_disk(*p, self.centers[a as usize]));
            ops.add((usize::BITS - arcs.len().leading_zeros()) as u64 + 1);
            hist[self.sweep.offsets[k] as usize + k + below] += w;
            per_slab[k] += w;
        }
        let mut out = vec![0u64; self.centers.len()];
        for k in 0..slabs {
            let base = self.sweep.offsets[k] as usize + k;
            let mut acc = 0;
            for (t, &a) in self.sweep.slab(k).iter().enumerate() {
                acc += hist[base + t];
                out[a as usize] += acc;
            }
        }
        // arcs above the region collect whole slabs
        let mut cum = vec![0u64; slabs + 1];
        for k in 0..slabs {
            cum[k + 1] = cum[k] + per_slab[k];
        }
        let ids: Vec<u32> = (0..self.centers.len() as u32).collect();
        let mut start: Vec<Option<u64>> = vec![None; ids.len()];
        self.sweep.above_transitions(&self.centers, &ids, |k, a, on| {
            if on {
                start[a as usize] = Some(cum[k]);
            } else if let Some(s) = start[a as usize].take() {
                out[a as usize] += cum[k] - s;
            }
        });
        for (a, s) in start.into_iter().enumerate() {
            if let Some(s) = s {
                out[a] += cum[slabs] - s;
            }
        }
        ops.add(slabs as u64);
        out
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{CellPairFrame, Square, CELL_SIDE};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn frame() -> CellPairFrame {
        let s = CELL_SIDE;
        CellPairFrame::new(
            Square { x_lo: 0.0, y_lo: -s, side: s },
            Square { x_lo: 0.0, y_lo: 0.0, side: s },
        )
        .unwrap()
    }

    fn random_centers(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point> {
        let src = frame().source_local();
        (0..n)
            .map(|_| Point::new(rng.gen_range(src.x_lo..src.x_hi()), rng.gen_range(src.y_lo..src.y_hi())))
            .collect()
    }

    fn sample_region(rng: &mut ChaCha8Rng, t: &PseudoTrapezoid) -> Point {
        loop {
            let (x0, y0, x1, y1) = t.bbox();
            let p = Point::new(rng.gen_range(x0..x1), rng.gen_range(y0..y1));
            if t.contains(p) {
                return p;
            }
        }
    }

    #[test]
    fn empty_set_gives_region() {
        let region = frame().enlarged_target();
        let cells = vertical_decomposition(&region, &[], &[], &mut Ops::new()).unwrap();
        assert_eq!(cells, vec![region]);
    }

    #[test]
    fn single_arc_through_bottom_and_top() {
        let region = PseudoTrapezoid {
            x_lo: 0.0,
            x_hi: 1.0,
            top: Boundary::Horizontal(0.3),
            bottom: Boundary::Horizontal(0.0),
        };
        // the arc rises through the bottom edge at x = 1.2 - sqrt(0.75) and
        // leaves through the top edge at x = 0.6
        let c = Point::new(1.2, -0.5);
        let ivs = crossing_intervals(c, &region);
        assert_eq!(ivs.len(), 1);
        let (a, b) = ivs[0];
        assert!((a - (1.2 - 0.75f64.sqrt())).abs() < 1e-12 && (b - 0.6).abs() < 1e-12, "{a} {b}");
        let cells = vertical_decomposition(&region, &[c], &[0], &mut Ops::new()).unwrap();
        // left slab, below and above the arc in the middle, right slab
        assert_eq!(cells.len(), 4);
        let area: f64 = cells.iter().map(|t| t.area()).sum();
        assert!((area - region.area()).abs() < 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut hits = [0usize; 4];
        let n = 20_000;
        for _ in 0..n {
            let p = sample_region(&mut rng, &region);
            let inside: Vec<usize> = (0..4).filter(|&i| cells[i].contains(p)).collect();
            assert_eq!(inside.len(), 1);
            hits[inside[0]] += 1;
        }
        for i in 0..4 {
            let frac = hits[i] as f64 / n as f64;
            assert!((frac - cells[i].area() / region.area()).abs() < 0.02);
        }
    }

    #[test]
    fn decomposition_is_a_disjoint_cover() {
        let region = frame().enlarged_target();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [2, 5, 12] {
            let centers = random_centers(&mut rng, n);
            let ids: Vec<u32> = (0..n as u32).collect();
            let cells = vertical_decomposition(&region, &centers, &ids, &mut Ops::new()).unwrap();
            for _ in 0..20_000 {
                let p = sample_region(&mut rng, &region);
                let k = cells.iter().filter(|t| t.contains(p)).count();
                assert_eq!(k, 1, "{p:?}");
            }
            for t in &cells {
                for &c in &centers {
                    assert!(crossing_intervals(c, t).is_empty(), "cell crossed");
                }
            }
        }
    }

    #[test]
    fn arrangement_counts_match_brute_force() {
        let region = frame().enlarged_target();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut centers = random_centers(&mut rng, 30);
        centers.push(centers[3]);
        let (uniq, mult, _) = group_centers(&centers);
        let arr = SlabArrangement::build(&region, uniq.clone(), mult.clone(), &mut Ops::new()).unwrap();
        let pts: Vec<Point> = (0..2000).map(|_| sample_region(&mut rng, &region)).collect();
        let mut ops = Ops::new();
        for p in &pts {
            let want = centers.iter().filter(|c| point_in_disk(*p, **c)).count() as u64;
            assert_eq!(arr.count_containing(*p, &mut ops), want);
        }
        let per_arc = arr.counts_per_arc(&pts, None, &mut ops);
        for (i, c) in uniq.iter().enumerate() {
            let want = pts.iter().filter(|p| point_in_disk(**p, *c)).count() as u64;
            assert_eq!(per_arc[i], want);
        }
    }

    #[test]
    fn group_centers_counts_duplicates() {
        let c = [Point::new(1.0, 2.0), Point::new(0.0, 0.0), Point::new(1.0, 2.0)];
        let (u, m, rep) = group_centers(&c);
        assert_eq!(u.len(), 2);
        assert_eq!(m.iter().sum::<u64>(), 3);
        assert_eq!(rep[0], rep[2]);
        assert_eq!(u[rep[1] as usize], c[1]);
    }
}
