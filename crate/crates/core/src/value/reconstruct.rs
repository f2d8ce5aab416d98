//! Recovery of the original value distribution from noise-perturbed samples
//! by the iterative Bayes-rule (EM) fixed point on a binned domain.
//!
//! With bin centers `a_b` and current bin probabilities `p_b`, one step is
//!
//! ```text
//! p_b ← (1/n) Σᵢ  f_Y(wᵢ − a_b) · p_b  /  Σ_c f_Y(wᵢ − a_c) · p_c
//! ```
//!
//! starting from a normal density whose variance is the observed variance
//! minus the noise variance. `f_Y(wᵢ − a_b)` is taken as the noise density
//! averaged over bin `b` rather than sampled at its center; the two agree as
//! bins shrink, and the average stays meaningful when the noise is much
//! narrower than a bin.

use serde::{Deserialize, Serialize};

use super::noise::NoiseSpec;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionConfig {
    pub bins: usize,
    /// Stop once the L1 change between successive iterates drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            bins: 100,
            tol: 1e-4,
            max_iter: 500,
        }
    }
}

/// Binned probability density over `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub lo: f64,
    pub hi: f64,
    pub bin_edges: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub last_l1_change: f64,
}

impl DensityEstimate {
    pub fn bins(&self) -> usize {
        self.probabilities.len()
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.bins() as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }

    /// Piecewise-constant density value at `x` (0 outside the support).
    pub fn density_at(&self, x: f64) -> f64 {
        if !(self.lo..=self.hi).contains(&x) {
            return 0.0;
        }
        let b = (((x - self.lo) / self.bin_width()) as usize).min(self.bins() - 1);
        self.probabilities[b] / self.bin_width()
    }

    /// Probability mass of the estimate inside `[a, b]`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        self.bin_edges
            .windows(2)
            .zip(&self.probabilities)
            .map(|(e, p)| {
                let overlap = (e[1].min(b) - e[0].max(a)).max(0.0);
                p * overlap / (e[1] - e[0])
            })
            .sum()
    }

    /// Normalized histogram of `values` on this estimate's bins.
    pub fn histogram_of(&self, values: &[f64]) -> Vec<f64> {
        let mut counts = vec![0.0; self.bins()];
        let w = self.bin_width();
        let mut total = 0.0;
        for &v in values {
            if (self.lo..=self.hi).contains(&v) {
                let b = (((v - self.lo) / w) as usize).min(self.bins() - 1);
                counts[b] += 1.0;
                total += 1.0;
            }
        }
        if total > 0.0 {
            counts.iter_mut().for_each(|c| *c /= total);
        }
        counts
    }
}

pub(crate) struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
    pub bins: usize,
}

impl Grid {
    pub fn edges(&self) -> Vec<f64> {
        (0..=self.bins)
            .map(|b| {
                if b == self.bins {
                    self.hi
                } else {
                    self.lo + b as f64 * self.width
                }
            })
            .collect()
    }

    fn center_offset(&self, b: usize) -> f64 {
        (b as f64 + 0.5) * self.width
    }
}

/// Likelihood table (bin-averaged `f_Y(wᵢ − a_b)`, up to the constant bin
/// width) over records with non-zero total
/// likelihood, flattened row-major.
pub(crate) struct Likelihood {
    pub table: Vec<f64>,
    pub rows: usize,
    pub bins: usize,
}

impl Likelihood {
    fn build(w: &[f64], noise: &NoiseSpec, grid: &Grid) -> Self {
        let mut table = Vec::with_capacity(w.len() * grid.bins);
        let mut rows = 0;
        let mut row = vec![0.0; grid.bins];
        for &wi in w {
            let rel = wi - grid.lo;
            let mut any = false;
            for (b, slot) in row.iter_mut().enumerate() {
                let left = b as f64 * grid.width;
                *slot = noise.interval_mass(rel - left - grid.width, rel - left);
                any |= *slot > 0.0;
            }
            if any {
                table.extend_from_slice(&row);
                rows += 1;
            }
        }
        Self {
            table,
            rows,
            bins: grid.bins,
        }
    }

    /// One Bayes-rule update; returns the renormalized next iterate.
    pub fn step(&self, p: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.bins];
        for row in self.table.chunks_exact(self.bins) {
            let denom: f64 = row.iter().zip(p).map(|(k, q)| k * q).sum();
            if denom > 0.0 {
                let inv = 1.0 / denom;
                for (a, k) in acc.iter_mut().zip(row) {
                    *a += k * inv;
                }
            }
        }
        let mut next: Vec<f64> = p.iter().zip(&acc).map(|(q, a)| q * a).collect();
        let total: f64 = next.iter().sum();
        if total > 0.0 {
            next.iter_mut().for_each(|v| *v /= total);
        }
        next
    }
}

fn mean_var(w: &[f64]) -> (f64, f64) {
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

pub(crate) fn prepare(
    perturbed: &[f64],
    noise: &NoiseSpec,
    config: &ReconstructionConfig,
) -> Result<(Grid, Likelihood, Vec<f64>)> {
    let noise = noise.validated()?;
    if perturbed.len() < 10 {
        return Err(Error::InvalidParameter(format!(
            "reconstruction needs at least 10 samples, got {}",
            perturbed.len()
        )));
    }
    if config.bins < 2 {
        return Err(Error::InvalidParameter("reconstruction needs at least 2 bins".into()));
    }
    if perturbed.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("perturbed values must be finite".into()));
    }
    let min = perturbed.iter().copied().fold(f64::INFINITY, f64::min);
    let max = perturbed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let margin = noise.support_margin();
    let (lo, hi) = (min - margin, max + margin);
    let grid = Grid {
        lo,
        hi,
        width: (hi - lo) / config.bins as f64,
        bins: config.bins,
    };

    let likelihood = Likelihood::build(perturbed, &noise, &grid);
    if likelihood.rows == 0 {
        return Err(Error::Degenerate(
            "noise support excludes every perturbed value from the reconstruction grid".into(),
        ));
    }

    let (mean, var_w) = mean_var(perturbed);
    let range = hi - lo;
    let var0 = (var_w - noise.variance()).max(1e-6 * range * range);
    let mut p: Vec<f64> = (0..grid.bins)
        .map(|b| {
            let z = lo + grid.center_offset(b) - mean;
            (-0.5 * z * z / var0).exp()
        })
        .collect();
    let total: f64 = p.iter().sum();
    if total > 0.0 && total.is_finite() {
        p.iter_mut().for_each(|v| *v /= total);
    } else {
        p.fill(1.0 / grid.bins as f64);
    }
    Ok((grid, likelihood, p))
}

/// Estimate the density of the original values from `perturbed = x + noise`.
///
/// Running out of iterations is not an error; the last iterate comes back
/// with `converged == false`.
pub fn reconstruct_distribution(
    perturbed: &[f64],
    noise: &NoiseSpec,
    config: &ReconstructionConfig,
) -> Result<DensityEstimate> {
    let (grid, likelihood, mut p) = prepare(perturbed, noise, config)?;
    let mut converged = false;
    let mut iterations = 0;
    let mut change = f64::INFINITY;
    while iterations < config.max_iter {
        let next = likelihood.step(&p);
        change = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        p = next;
        iterations += 1;
        if change < config.tol {
            converged = true;
            break;
        }
    }
    Ok(DensityEstimate {
        lo: grid.lo,
        hi: grid.hi,
        bin_edges: grid.edges(),
        probabilities: p,
        iterations,
        converged,
        last_l1_change: change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use crate::value::add_noise;

    fn uniform_sample(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = Rng::new(seed, "test/x");
        (0..n).map(|_| rng.uniform()).collect()
    }

    #[test]
    fn rejects_small_inputs() {
        let g = NoiseSpec::gaussian(1.0).unwrap();
        let cfg = ReconstructionConfig::default();
        assert!(reconstruct_distribution(&[1.0; 9], &g, &cfg).is_err());
        let cfg1 = ReconstructionConfig { bins: 1, ..cfg };
        assert!(reconstruct_distribution(&[1.0; 20], &g, &cfg1).is_err());
    }

    #[test]
    fn identical_values_are_fine_when_noise_covers_them() {
        let g = NoiseSpec::gaussian(0.5).unwrap();
        let est = reconstruct_distribution(&[2.0; 30], &g, &ReconstructionConfig::default()).unwrap();
        assert!((est.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(est.mass_between(1.0, 3.0) > 0.9);
    }

    #[test]
    fn every_iterate_is_normalized() {
        let x = uniform_sample(2000, 1);
        let noise = NoiseSpec::gaussian(0.25).unwrap();
        let w = add_noise(&x, &noise, &mut Rng::new(1, "noise")).unwrap();
        let (_, lik, mut p) = prepare(&w, &noise, &ReconstructionConfig::default()).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for _ in 0..50 {
            p = lik.step(&p);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(p.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn no_noise_limit_matches_histogram() {
        let x = uniform_sample(5000, 2);
        let range = 1.0;
        let noise = NoiseSpec::gaussian(range / 1e6).unwrap();
        let w = add_noise(&x, &noise, &mut Rng::new(2, "noise")).unwrap();
        let est = reconstruct_distribution(&w, &noise, &ReconstructionConfig::default()).unwrap();
        let hist = est.histogram_of(&w);
        let l1: f64 = hist.iter().zip(&est.probabilities).map(|(a, b)| (a - b).abs()).sum();
        assert!(l1 < 0.01, "l1 = {l1}");
    }

    #[test]
    fn shift_invariance() {
        let x = uniform_sample(1000, 3);
        let noise = NoiseSpec::gaussian(0.2).unwrap();
        let w = add_noise(&x, &noise, &mut Rng::new(3, "noise")).unwrap();
        let c = 3.0;
        let shifted: Vec<f64> = w.iter().map(|v| v + c).collect();
        let cfg = ReconstructionConfig::default();
        let a = reconstruct_distribution(&w, &noise, &cfg).unwrap();
        let b = reconstruct_distribution(&shifted, &noise, &cfg).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert!((a.lo + c - b.lo).abs() < 1e-12);
        for (p, q) in a.probabilities.iter().zip(&b.probabilities) {
            assert!((p - q).abs() < 1e-12, "{p} vs {q}");
        }
    }

    #[test]
    fn uniform_noise_reconstruction() {
        let x = uniform_sample(4000, 4);
        let noise = NoiseSpec::uniform(0.3).unwrap();
        let w = add_noise(&x, &noise, &mut Rng::new(4, "noise")).unwrap();
        let est = reconstruct_distribution(&w, &noise, &ReconstructionConfig::default()).unwrap();
        assert!(est.mass_between(-0.05, 1.05) > 0.85, "{}", est.mass_between(-0.05, 1.05));
    }

    #[test]
    fn budget_exhaustion_is_flagged_not_an_error() {
        let x = uniform_sample(500, 5);
        let noise = NoiseSpec::gaussian(0.3).unwrap();
        let w = add_noise(&x, &noise, &mut Rng::new(5, "noise")).unwrap();
        let cfg = ReconstructionConfig {
            bins: 50,
            tol: 0.0,
            max_iter: 3,
        };
        let est = reconstruct_distribution(&w, &noise, &cfg).unwrap();
        assert!(!est.converged);
        assert_eq!(est.iterations, 3);
    }
}
