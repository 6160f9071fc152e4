//! Pair counting by distance and selection of the k-th smallest pairwise
//! distance.
//!
//! `count_pairs_within` runs the batched counter with `Q = P` and disks of
//! radius `lambda`; every point counts itself once, every close pair
//! twice. Selection keeps an interval `(lo, hi]` of squared distances whose
//! pair counts bracket `k`, shrinks it with thresholds drawn from random
//! pairs, and resolves the rank by listing the pairs left inside it.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::batched::{batched_count, Algo, BatchConfig};
use crate::geom::{GeomError, Point, Radius};
use crate::grid::GridIndex;
use crate::par::Parallelism;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectError {
    #[error("k = {k} outside [1, {max}]")]
    KOutOfRange { k: u64, max: u64 },
    #[error("at least two points are needed")]
    TooFewPoints,
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Number of unordered pairs of `p` at distance at most `lambda`.
pub fn count_pairs_within(p: &[Point], lambda: f64, seed: u64, parallelism: Parallelism) -> Result<u64, GeomError> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(GeomError::InvalidRadius(lambda));
    }
    if p.iter().any(|x| !x.is_finite()) {
        return Err(GeomError::NonFinite);
    }
    if lambda == 0.0 {
        return Ok(coincident_pairs(p));
    }
    let total: u64 = self_counts(p, lambda, seed, parallelism)?.iter().sum();
    Ok((total - p.len() as u64) / 2)
}

/// Whether at least `k` pairs are at distance at most `lambda`, that is,
/// whether `lambda` is at least the k-th smallest distance.
pub fn decide(p: &[Point], lambda: f64, k: u64, seed: u64, parallelism: Parallelism) -> Result<bool, SelectError> {
    check_k(p, k)?;
    Ok(count_pairs_within(p, lambda, seed, parallelism)? >= k)
}

fn self_counts(p: &[Point], lambda: f64, seed: u64, parallelism: Parallelism) -> Result<Vec<u64>, GeomError> {
    let rep = batched_count(p, p, Radius::new(lambda)?, Algo::PrimalDual, &BatchConfig::default(), seed, parallelism)?;
    Ok(rep.counts)
}

fn coincident_pairs(p: &[Point]) -> u64 {
    let mut keys: Vec<(u64, u64)> = p.iter().map(|x| ((x.x + 0.0).to_bits(), (x.y + 0.0).to_bits())).collect();
    keys.sort_unstable();
    let mut pairs = 0u64;
    let mut run = 0u64;
    for i in 1..keys.len() {
        if keys[i] == keys[i - 1] {
            run += 1;
            pairs += run;
        } else {
            run = 0;
        }
    }
    pairs
}

fn num_pairs(n: usize) -> u64 {
    n as u64 * (n as u64).saturating_sub(1) / 2
}

fn check_k(p: &[Point], k: u64) -> Result<(), SelectError> {
    if p.len() < 2 {
        return Err(SelectError::TooFewPoints);
    }
    let max = num_pairs(p.len());
    if k == 0 || k > max {
        return Err(SelectError::KOutOfRange { k, max });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug)]
pub struct SelectConfig {
    /// Random pairs drawn per round: `sample_const * n^(2/3) * k^(1/3)`.
    pub sample_const: f64,
    /// The interval is resolved directly once it holds fewer than
    /// `resolve_factor * n` pairs.
    pub resolve_factor: u64,
    pub parallelism: Parallelism,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig {
            sample_const: 4.0,
            resolve_factor: 4,
            parallelism: Parallelism::Parallel,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub value: f64,
    /// Shrinking rounds.
    pub rounds: u32,
    /// Calls of the pair counter.
    pub decisions: u32,
    /// Whether the result came from sorting all pairs.
    pub exhaustive: bool,
}

/// The k-th smallest of the `n (n - 1) / 2` pairwise distances (1-based,
/// with multiplicity).
pub fn select_distance<R: Rng + ?Sized>(p: &[Point], k: u64, rng: &mut R) -> Result<f64, SelectError> {
    Ok(select_distance_with(p, k, &SelectConfig::default(), rng)?.value)
}

/// A threshold on squared distances with its pair count. `None` stands for
/// minus infinity (lower end) or plus infinity (upper end).
#[derive(Clone, Copy, Debug)]
struct Bound {
    d2: Option<f64>,
    count: u64,
}

pub fn select_distance_with<R: Rng + ?Sized>(
    p: &[Point],
    k: u64,
    cfg: &SelectConfig,
    rng: &mut R,
) -> Result<Selection, SelectError> {
    check_k(p, k)?;
    if p.iter().any(|x| !x.is_finite()) {
        return Err(GeomError::NonFinite.into());
    }
    let n = p.len();
    let total = num_pairs(n);
    let resolve_below = cfg.resolve_factor.max(1) * n as u64;
    let mut lo = Bound { d2: None, count: 0 };
    let mut hi = Bound { d2: None, count: total };
    let mut out = Selection {
        value: 0.0,
        rounds: 0,
        decisions: 0,
        exhaustive: false,
    };
    let base_samples = (cfg.sample_const * (n as f64).powf(2.0 / 3.0) * (k as f64).cbrt()).ceil().max(16.0) as u64;
    let mut samples = base_samples;
    while hi.count - lo.count >= resolve_below {
        if samples > 4 * total {
            break;
        }
        out.rounds += 1;
        let mut cand: Vec<f64> = Vec::new();
        for _ in 0..samples {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let d2 = p[i].dist2(&p[j]);
            if lo.d2.is_none_or(|l| d2 > l) && hi.d2.is_none_or(|h| d2 <= h) {
                cand.push(d2);
            }
        }
        cand.sort_unstable_by(f64::total_cmp);
        cand.dedup();
        // thresholds halfway between consecutive distinct candidates
        let mids: Vec<f64> = cand.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0).filter(|&m| m > 0.0).collect();
        if mids.is_empty() {
            samples *= 2;
            continue;
        }
        samples = base_samples;
        let frac = (k - lo.count) as f64 / (hi.count - lo.count) as f64;
        let at = frac * mids.len() as f64;
        let spread = (mids.len() as f64).sqrt();
        let a = ((at - spread).floor().max(0.0) as usize).min(mids.len() - 1);
        let b = ((at + spread).ceil() as usize).min(mids.len() - 1);
        let mut thresholds = vec![mids[a]];
        if b != a {
            thresholds.push(mids[b]);
        }
        for t in thresholds {
            if lo.d2.is_some_and(|l| t <= l) || hi.d2.is_some_and(|h| t >= h) {
                continue;
            }
            out.decisions += 1;
            let c = count_pairs_within(p, t.sqrt(), rng.gen(), cfg.parallelism)?;
            if c < k {
                lo = Bound { d2: Some(t), count: c.max(lo.count) };
            } else {
                hi = Bound { d2: Some(t), count: c.min(hi.count) };
            }
        }
    }
    match resolve(p, k, lo, hi, rng.gen(), cfg.parallelism)? {
        Some(v) => out.value = v,
        None => {
            out.exhaustive = true;
            out.value = exhaustive_kth(p, k);
        }
    }
    Ok(out)
}

/// Lists the pairs with squared distance in `(lo, hi]` and picks rank `k`
/// among them. Returns `None` when the listing disagrees with the counts,
/// which happens only if rounding put a pair on different sides of a
/// threshold in the two computations.
fn resolve(p: &[Point], k: u64, lo: Bound, hi: Bound, seed: u64, parallelism: Parallelism) -> Result<Option<f64>, GeomError> {
    let (Some(hd2), expected) = (hi.d2, hi.count - lo.count) else {
        return Ok(None);
    };
    let upper = self_counts(p, hd2.sqrt(), seed, parallelism)?;
    let lower = match lo.d2 {
        Some(l) => self_counts(p, l.sqrt(), seed ^ 1, parallelism)?,
        None => vec![1; p.len()],
    };
    let grid = GridIndex::build(p, Radius::new(hd2.sqrt() * (1.0 + 1e-9))?)?;
    let mut band: Vec<f64> = Vec::new();
    for (j, q) in p.iter().enumerate() {
        if upper[j] == lower[j] {
            continue;
        }
        let Some(c) = grid.locate(*q) else { continue };
        for &d in grid.neighbors(c) {
            for &i in grid.cell_ids(d) {
                if (i as usize) <= j {
                    continue;
                }
                let d2 = p[i as usize].dist2(q);
                if lo.d2.is_none_or(|l| d2 > l) && d2 <= hd2 {
                    band.push(d2);
                }
            }
        }
        if band.len() as u64 > expected {
            return Ok(None);
        }
    }
    if band.len() as u64 != expected || k <= lo.count || k > hi.count {
        return Ok(None);
    }
    let idx = (k - lo.count - 1) as usize;
    let (_, v, _) = band.select_nth_unstable_by(idx, f64::total_cmp);
    Ok(Some(v.sqrt()))
}

fn exhaustive_kth(p: &[Point], k: u64) -> f64 {
    let mut all = Vec::with_capacity(num_pairs(p.len()) as usize);
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            all.push(p[i].dist2(&p[j]));
        }
    }
    let (_, v, _) = all.select_nth_unstable_by((k - 1) as usize, f64::total_cmp);
    v.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn brute_pairs(p: &[Point], lambda: f64) -> u64 {
        let mut c = 0;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                if p[i].dist2(&p[j]) <= lambda * lambda {
                    c += 1;
                }
            }
        }
        c
    }

    fn brute_kth(p: &[Point], k: u64) -> f64 {
        let mut d: Vec<f64> = Vec::new();
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                d.push(p[i].dist2(&p[j]));
            }
        }
        d.sort_by(f64::total_cmp);
        d[(k - 1) as usize].sqrt()
    }

    #[test]
    fn three_point_counts() {
        let p = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(3.0, 0.0)];
        let seq = Parallelism::Sequential;
        assert_eq!(count_pairs_within(&p, 1.0, 0, seq).unwrap(), 1);
        assert_eq!(count_pairs_within(&p, 0.0, 0, seq).unwrap(), 0);
        assert_eq!(count_pairs_within(&p, 10.0, 0, seq).unwrap(), 3);
        assert_eq!(count_pairs_within(&[p[0], p[0], p[0]], 0.0, 0, seq).unwrap(), 3);
        assert!(count_pairs_within(&p, -1.0, 0, seq).is_err());
    }

    #[test]
    fn unit_square_decisions() {
        let p = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 1.0)];
        let seq = Parallelism::Sequential;
        assert!(!decide(&p, 1.0, 5, 0, seq).unwrap());
        assert!(decide(&p, 1.5, 5, 0, seq).unwrap());
        assert!(decide(&p, 1.0, 4, 0, seq).unwrap());
        assert!(decide(&p, 1.0, 7, 0, seq).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_distance(&p, 5, &mut rng).unwrap(), 2f64.sqrt());
    }

    #[test]
    fn triangle_and_duplicates() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        assert_eq!(select_distance(&t, 1, &mut rng).unwrap(), 1.0);
        assert_eq!(select_distance(&t, 3, &mut rng).unwrap(), 2f64.sqrt());
        let d = [Point::new(0.5, 0.5); 6];
        assert_eq!(select_distance(&d, 7, &mut rng).unwrap(), 0.0);
        assert_eq!(select_distance(&t[..1], 1, &mut rng), Err(SelectError::TooFewPoints));
        assert!(matches!(select_distance(&t, 4, &mut rng), Err(SelectError::KOutOfRange { .. })));
    }

    #[test]
    fn random_selection_matches_sorting() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p: Vec<Point> = (0..400).map(|_| Point::new(rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0))).collect();
        let total = num_pairs(p.len());
        let cfg = SelectConfig {
            parallelism: Parallelism::Sequential,
            ..Default::default()
        };
        let mut shrunk = 0;
        for k in [1, 2, 17, 400, 5000, total / 2, total - 1, total] {
            let s = select_distance_with(&p, k, &cfg, &mut rng).unwrap();
            assert_eq!(s.value.to_bits(), brute_kth(&p, k).to_bits(), "k = {k}");
            if s.rounds > 0 && !s.exhaustive {
                shrunk += 1;
            }
        }
        assert!(shrunk >= 4);
        for lambda in [0.1, 0.5, 1.0, 2.5] {
            assert_eq!(count_pairs_within(&p, lambda, 3, Parallelism::Sequential).unwrap(), brute_pairs(&p, lambda));
        }
    }
}
