//! Ranks, pseudo-observations and the sample Kendall's tau.

use alloc::vec;
use alloc::vec::Vec;

use super::PseudoSample;
use crate::error::{Error, Result};
#[allow(unused_imports)] // std inherents shadow it when std is linked
use num_traits::Float;

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        let r = 0.5 * ((i + 1) + j) as f64;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Maps each margin to `rank / (n + 1)`.
pub fn pseudo_observations(x: &[f64], y: &[f64]) -> Result<PseudoSample> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Precondition("observations must be finite".into()));
    }
    let scale = 1.0 / (x.len() as f64 + 1.0);
    let u = average_ranks(x).into_iter().map(|r| r * scale).collect();
    let v = average_ranks(y).into_iter().map(|r| r * scale).collect();
    Ok(PseudoSample { u, v })
}

fn tie_pairs(sorted: impl Iterator<Item = (f64, f64)>, joint: bool) -> u64 {
    let mut total = 0u64;
    let mut run = 0u64;
    let mut prev: Option<(f64, f64)> = None;
    for cur in sorted {
        let same = match prev {
            Some(p) => {
                if joint {
                    p == cur
                } else {
                    p.0 == cur.0
                }
            }
            None => false,
        };
        if same {
            run += 1;
        } else {
            total += run * (run + 1) / 2;
            run = 0;
        }
        prev = Some(cur);
    }
    total + run * (run + 1) / 2
}

fn merge_count(a: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = a.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut a[..mid], &mut buf[..mid]);
    swaps += merge_count(&mut a[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if a[j] < a[i] {
            buf[k] = a[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = a[i];
            i += 1;
        }
        k += 1;
    }
    while i < mid {
        buf[k] = a[i];
        i += 1;
        k += 1;
    }
    while j < n {
        buf[k] = a[j];
        j += 1;
        k += 1;
    }
    a.copy_from_slice(&buf[..n]);
    swaps
}

/// Kendall's tau in O(n log n) (Knight's algorithm). Equals the plain
/// `(concordant - discordant) / (n choose 2)` when there are no ties and
/// applies the tau-b correction otherwise.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let ties_x = tie_pairs(pairs.iter().copied(), false);
    let ties_xy = tie_pairs(pairs.iter().copied(), true);
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);
    let ties_y = tie_pairs(ys.iter().map(|&v| (v, 0.0)), false);
    let total = (n as u64) * (n as u64 - 1) / 2;
    let numer = total as f64 - ties_x as f64 - ties_y as f64 + ties_xy as f64 - 2.0 * swaps as f64;
    let denom = ((total - ties_x) as f64 * (total - ties_y) as f64).sqrt();
    if denom == 0.0 {
        return Err(Error::Degenerate("a margin is constant"));
    }
    Ok((numer / denom).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_tau_b(x: &[f64], y: &[f64]) -> f64 {
        let (mut c, mut d, mut tx, mut ty) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                let s = (x[i] - x[j]).signum() * (y[i] - y[j]).signum();
                let dx = x[i] == x[j];
                let dy = y[i] == y[j];
                if dx && !dy {
                    tx += 1.0;
                } else if dy && !dx {
                    ty += 1.0;
                } else if !dx && !dy {
                    if s > 0.0 {
                        c += 1.0
                    } else {
                        d += 1.0
                    }
                }
            }
        }
        (c - d) / ((c + d + tx) * (c + d + ty)).sqrt()
    }

    #[test]
    fn four_point_enumeration() {
        let x = [0.1, 0.2, 0.3, 0.4];
        let y = [0.2, 0.1, 0.4, 0.3];
        assert!((kendall_tau(&x, &y).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn monotone_extremes() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        assert_eq!(kendall_tau(&x, &x).unwrap(), 1.0);
        assert_eq!(kendall_tau(&x, &rev).unwrap(), -1.0);
    }

    #[test]
    fn too_few_points() {
        assert!(kendall_tau(&[0.5], &[0.5]).is_err());
    }

    #[test]
    fn pseudo_observation_ranks() {
        let s = pseudo_observations(&[3.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.u, vec![0.75, 0.25, 0.5]);
        assert!(pseudo_observations(&[1.0, 2.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn knight_matches_brute_force(
            pts in proptest::collection::vec((0i32..12, 0i32..12), 2..60)
        ) {
            let x: Vec<f64> = pts.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.1 as f64).collect();
            let brute = brute_tau_b(&x, &y);
            match kendall_tau(&x, &y) {
                Ok(t) => prop_assert!((t - brute).abs() < 1e-12, "{} vs {}", t, brute),
                Err(_) => prop_assert!(!brute.is_finite()),
            }
        }

        #[test]
        fn pseudo_observations_bounds_and_rank_invariance(
            x in proptest::collection::vec(-1e3f64..1e3, 10..80)
        ) {
            let n = x.len() as f64;
            let y = x.clone();
            let s = pseudo_observations(&x, &y).unwrap();
            let lo = s.u.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = s.u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo >= 1.0 / (n + 1.0) - 1e-15);
            prop_assert!(hi <= n / (n + 1.0) + 1e-15);
            let tx: Vec<f64> = x.iter().map(|v| (v / 100.0).exp()).collect();
            let t = pseudo_observations(&tx, &y).unwrap();
            prop_assert_eq!(s.u, t.u);
        }
    }
}
