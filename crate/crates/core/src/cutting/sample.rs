//! Random ε-approximations and ε-nets for arc sets.

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, WeightedAliasIndex};

/// Constants of the ε-approximation sample size
/// `c_a * eps^-2 * ln(1/eps) + c_b * eps^-2`.
#[derive(Clone, Copy, Debug)]
pub struct ApproxConfig {
    pub c_a: f64,
    pub c_b: f64,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        ApproxConfig { c_a: 4.0, c_b: 16.0 }
    }
}

pub fn approximation_size(n: usize, eps: f64, cfg: ApproxConfig) -> usize {
    let inv = 1.0 / eps;
    let want = cfg.c_a * inv * inv * inv.ln().max(0.0) + cfg.c_b * inv * inv;
    if want >= n as f64 {
        n
    } else {
        want.ceil() as usize
    }
}

/// Weighted random subset of `ids`. When the requested size covers the
/// set, the set itself is returned with its own weights. Otherwise
/// unweighted sets are sampled uniformly without replacement, weighted sets
/// with replacement proportionally to weight, and each sampled arc carries
/// an equal share of the total weight.
pub fn sample_epsilon_approximation<R: Rng + ?Sized>(
    ids: &[u32],
    weights: Option<&[f64]>,
    eps: f64,
    cfg: ApproxConfig,
    rng: &mut R,
) -> (Vec<u32>, Vec<f64>) {
    let n = ids.len();
    let weight = |i: u32| weights.map_or(1.0, |w| w[i as usize]);
    let size = approximation_size(n, eps, cfg);
    if size >= n {
        return (ids.to_vec(), ids.iter().map(|&i| weight(i)).collect());
    }
    match weights {
        None => {
            let share = n as f64 / size as f64;
            let picked: Vec<u32> = index::sample(rng, n, size).into_iter().map(|k| ids[k]).collect();
            let w = vec![share; picked.len()];
            (picked, w)
        }
        Some(_) => {
            let ws: Vec<f64> = ids.iter().map(|&i| weight(i)).collect();
            let total: f64 = ws.iter().sum();
            let share = total / size as f64;
            let dist = match WeightedAliasIndex::new(ws) {
                Ok(d) => d,
                Err(_) => return (Vec::new(), Vec::new()),
            };
            let mut picked: Vec<u32> = (0..size).map(|_| ids[dist.sample(rng)]).collect();
            picked.sort_unstable();
            let mut out: Vec<u32> = Vec::new();
            let mut w: Vec<f64> = Vec::new();
            for id in picked {
                if out.last() == Some(&id) {
                    *w.last_mut().unwrap() += share;
                } else {
                    out.push(id);
                    w.push(share);
                }
            }
            (out, w)
        }
    }
}

/// Net size `min(ceil(5 eps^-1 ln n), n)`.
pub fn net_size(n: usize, eps: f64) -> usize {
    if n == 0 {
        return 0;
    }
    let want = (5.0 / eps * (n as f64).ln()).ceil();
    if eps >= 1.0 || want >= n as f64 {
        n
    } else {
        want.max(1.0) as usize
    }
}

/// Random ε-net candidate of size [`net_size`], drawn without replacement
/// with probability proportional to weight. Whether it is sparse and a net
/// for a given cell is checked by the caller.
pub fn sample_epsilon_net_sparse<R: Rng + ?Sized>(
    ids: &[u32],
    weights: &[f64],
    eps: f64,
    rng: &mut R,
) -> Vec<u32> {
    weighted_subset(ids, weights, net_size(ids.len(), eps), rng)
}

/// `size` distinct elements of `ids`, drawn proportionally to `weights`
/// (parallel to `ids`). Zero-weight elements are only taken once every
/// positive-weight element has been.
pub fn weighted_subset<R: Rng + ?Sized>(ids: &[u32], weights: &[f64], size: usize, rng: &mut R) -> Vec<u32> {
    if size >= ids.len() {
        return ids.to_vec();
    }
    let positions: Vec<usize> = (0..ids.len()).collect();
    let chosen = positions
        .choose_multiple_weighted(rng, size, |&k| weights[k])
        .map(|it| it.map(|&k| ids[k]).collect::<Vec<u32>>());
    let mut out = match chosen {
        Ok(v) => v,
        Err(_) => index::sample(rng, ids.len(), size).into_iter().map(|k| ids[k]).collect(),
    };
    if out.len() < size {
        let mut rest: Vec<u32> = ids.iter().copied().filter(|i| !out.contains(i)).collect();
        rest.shuffle(rng);
        out.extend(rest.into_iter().take(size - out.len()));
    }
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn whole_set_when_size_covers_it() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ids: Vec<u32> = (0..10).collect();
        let (a, w) = sample_epsilon_approximation(&ids, None, 0.5, ApproxConfig::default(), &mut rng);
        assert_eq!(a, ids);
        assert!(w.iter().all(|&x| x == 1.0));
        let (a, w) = sample_epsilon_approximation(&[7], None, 0.5, ApproxConfig::default(), &mut rng);
        assert_eq!((a, w), (vec![7], vec![1.0]));
        assert_eq!(net_size(0, 0.1), 0);
        assert_eq!(net_size(50, 1.0), 50);
    }

    #[test]
    fn small_constants_give_weighted_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ids: Vec<u32> = (0..1000).collect();
        let cfg = ApproxConfig { c_a: 0.0, c_b: 0.25 };
        let (a, w) = sample_epsilon_approximation(&ids, None, 0.1, cfg, &mut rng);
        assert_eq!(a.len(), 25);
        assert!((w.iter().sum::<f64>() - 1000.0).abs() < 1e-9);
        let weights: Vec<f64> = (0..1000).map(|i| if i == 0 { 1e6 } else { 1.0 }).collect();
        let (a, w) = sample_epsilon_approximation(&ids, Some(&weights), 0.1, cfg, &mut rng);
        assert_eq!(a[0], 0);
        assert!(w[0] > 20.0);
    }

    #[test]
    fn weighted_subset_is_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ids: Vec<u32> = (100..140).collect();
        let w: Vec<f64> = (0..40).map(|i| if i < 5 { 0.0 } else { 1.0 }).collect();
        let s = weighted_subset(&ids, &w, 38, &mut rng);
        assert_eq!(s.len(), 38);
        let mut d = s.clone();
        d.dedup();
        assert_eq!(d.len(), 38);
    }
}
