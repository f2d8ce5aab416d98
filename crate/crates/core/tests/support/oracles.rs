//! Reference computations kept independent of the library code paths they
//! check. Shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

/// Composite Simpson rule with `steps` (even) sub-intervals.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> f64 {
    let h = (hi - lo) / steps as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

pub fn gaussian_pdf(y: f64, std: f64) -> f64 {
    (-0.5 * (y / std).powi(2)).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
}

/// Bayes-rule density iterate evaluated with quadrature: the noise density
/// is integrated over each bin by Simpson's rule rather than via its CDF.
/// Starts from the moment-matched normal and runs `iterations` steps.
pub fn bayes_iterate_by_quadrature(
    w: &[f64],
    noise_std: f64,
    edges: &[f64],
    iterations: usize,
) -> Vec<f64> {
    let bins = edges.len() - 1;
    let n = w.len() as f64;
    let table: Vec<Vec<f64>> = w
        .iter()
        .map(|&wi| {
            (0..bins)
                .map(|b| simpson(|z| gaussian_pdf(wi - z, noise_std), edges[b], edges[b + 1], 8))
                .collect()
        })
        .collect();

    let mean = w.iter().sum::<f64>() / n;
    let var_w = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let range = edges[bins] - edges[0];
    let var0 = (var_w - noise_std * noise_std).max(1e-6 * range * range);
    let mut p: Vec<f64> = (0..bins)
        .map(|b| {
            let c = 0.5 * (edges[b] + edges[b + 1]);
            (-0.5 * (c - mean).powi(2) / var0).exp()
        })
        .collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);

    for _ in 0..iterations {
        let mut next = vec![0.0; bins];
        for row in &table {
            let denom: f64 = row.iter().zip(&p).map(|(k, q)| k * q).sum();
            for b in 0..bins {
                next[b] += row[b] * p[b] / denom / n;
            }
        }
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= s);
        p = next;
    }
    p
}

/// Mass of U(a, b) falling in each bin.
pub fn uniform_bin_masses(edges: &[f64], a: f64, b: f64) -> Vec<f64> {
    edges
        .windows(2)
        .map(|e| (e[1].min(b) - e[0].max(a)).max(0.0) / (b - a))
        .collect()
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// All pairwise Euclidean distances between columns of a row-major
/// `d × n` buffer.
pub fn all_pair_distances(x: &[f64], d: usize, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut s = 0.0;
            for r in 0..d {
                let diff = x[r * n + i] - x[r * n + j];
                s += diff * diff;
            }
            out.push(s.sqrt());
        }
    }
    out
}
