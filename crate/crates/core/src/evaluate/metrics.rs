//! Metric kernels on column-major numeric views.

use std::collections::HashMap;

use crate::rng::Rng;

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut worst: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        worst = worst.max((i as f64 / na - j as f64 / nb).abs());
    }
    worst
}

/// Ordinal ranks (ties broken by position).
pub fn ranks(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&x, &y| values[x].total_cmp(&values[y]).then(x.cmp(&y)));
    let mut rank = vec![0; values.len()];
    for (r, i) in order.into_iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// Mean `|rank − rank̂| / (n − 1)` over the records of one column pair.
pub fn rank_displacement(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    if n < 2 {
        return 0.0;
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let total: usize = ra.iter().zip(&rb).map(|(x, y)| x.abs_diff(*y)).sum();
    total as f64 / (n as f64 * (n - 1) as f64)
}

pub fn variance(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Fraction of columns whose position in the by-variance ordering moved.
pub fn variance_rank_change(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let neg = |cols: &[Vec<f64>]| cols.iter().map(|c| -variance(c)).collect::<Vec<_>>();
    let (ra, rb) = (ranks(&neg(a)), ranks(&neg(b)));
    ra.iter().zip(&rb).filter(|(x, y)| x != y).count() as f64 / a.len() as f64
}

/// Sample covariance of column-major data (`cols[attr][record]`).
pub fn covariance(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = cols.len();
    let n = cols.first().map_or(0, Vec::len);
    let means: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / n as f64).collect();
    let mut out = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i..d {
            let s: f64 = (0..n)
                .map(|r| (cols[i][r] - means[i]) * (cols[j][r] - means[j]))
                .sum();
            out[i][j] = s / (n as f64 - 1.0);
            out[j][i] = out[i][j];
        }
    }
    out
}

pub fn frobenius_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn frobenius(a: &[Vec<f64>]) -> f64 {
    a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

/// `(i, j)` with `i < j` for the `p`-th pair in row-major order.
fn unrank_pair(mut p: u64, n: u64) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if p < row {
            return (i as usize, (i + 1 + p) as usize);
        }
        p -= row;
        i += 1;
    }
}

/// First `min(limit, n(n−1)/2)` record pairs of a seeded shuffle of all
/// pairs. The shuffle is a partial Fisher–Yates over the pair index space,
/// so nothing of size `n²` is materialized.
pub fn sample_pairs(n: usize, limit: usize, rng: &mut Rng) -> Vec<(usize, usize)> {
    let total = (n as u64) * (n as u64).saturating_sub(1) / 2;
    let take = (limit as u64).min(total);
    let mut swapped: HashMap<u64, u64> = HashMap::new();
    let mut out = Vec::with_capacity(take as usize);
    for i in 0..take {
        let j = i + (rng.uniform() * (total - i) as f64) as u64;
        let j = j.min(total - 1);
        let at_j = *swapped.get(&j).unwrap_or(&j);
        let at_i = *swapped.get(&i).unwrap_or(&i);
        swapped.insert(j, at_i);
        out.push(unrank_pair(at_j, n as u64));
    }
    out
}

pub fn record_distance(cols: &[Vec<f64>], i: usize, j: usize) -> f64 {
    cols.iter().map(|c| (c[i] - c[j]).powi(2)).sum::<f64>().sqrt()
}

pub fn record_dot(cols: &[Vec<f64>], i: usize, j: usize) -> f64 {
    cols.iter().map(|c| c[i] * c[j]).sum()
}

/// Relative distance changes `|d̂ − d| / d` over the pairs, skipping pairs
/// at distance zero in the original.
pub fn relative_distance_changes(a: &[Vec<f64>], b: &[Vec<f64>], pairs: &[(usize, usize)]) -> Vec<f64> {
    pairs
        .iter()
        .filter_map(|&(i, j)| {
            let d = record_distance(a, i, j);
            (d > 0.0).then(|| (record_distance(b, i, j) - d).abs() / d)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_known_values() {
        assert_eq!(ks_statistic(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]), 0.0);
        assert_eq!(ks_statistic(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert!((ks_statistic(&[1.0, 2.0, 3.0, 4.0], &[3.0, 4.0]) - 0.5).abs() < 1e-15);
    }

    /// Brute force: evaluate both ECDFs at every sample point.
    #[test]
    fn ks_matches_brute_force() {
        let mut rng = Rng::new(1, "test/ks");
        for _ in 0..20 {
            let a: Vec<f64> = (0..30).map(|_| (rng.uniform() * 10.0).floor()).collect();
            let b: Vec<f64> = (0..17).map(|_| (rng.uniform() * 10.0).floor()).collect();
            let ecdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
            let brute = a
                .iter()
                .chain(&b)
                .map(|&x| (ecdf(&a, x) - ecdf(&b, x)).abs())
                .fold(0.0, f64::max);
            assert!((ks_statistic(&a, &b) - brute).abs() < 1e-15);
        }
    }

    #[test]
    fn rank_displacement_extremes() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(rank_displacement(&a, &[10.0, 20.0, 30.0, 40.0]), 0.0);
        // full reversal: displacements 3,1,1,3 over n(n−1) = 12
        assert!((rank_displacement(&a, &[4.0, 3.0, 2.0, 1.0]) - 8.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn pairs_are_distinct_and_cover_small_sets() {
        let mut rng = Rng::new(2, "pairs");
        let mut all = sample_pairs(6, 500, &mut rng);
        assert_eq!(all.len(), 15);
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 15);
        assert!(all.iter().all(|&(i, j)| i < j && j < 6));

        let big = sample_pairs(10_000, 500, &mut Rng::new(3, "pairs"));
        let mut uniq = big.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), 500);
        assert_eq!(big, sample_pairs(10_000, 500, &mut Rng::new(3, "pairs")));
    }

    #[test]
    fn variance_rank_change_detects_swaps() {
        let a = vec![vec![0.0, 10.0], vec![0.0, 1.0], vec![0.0, 0.1]];
        let b = vec![vec![0.0, 1.0], vec![0.0, 10.0], vec![0.0, 0.1]];
        assert!((variance_rank_change(&a, &b) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(variance_rank_change(&a, &a), 0.0);
    }
}
