use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

const SQRT_2PI: f64 = 2.506_628_274_631_000_2;

/// Additive noise distribution with known density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    /// N(0, std²)
    Gaussian { std: f64 },
    /// U(−half_width, half_width)
    Uniform { half_width: f64 },
}

impl NoiseSpec {
    pub fn gaussian(std: f64) -> Result<Self> {
        Self::Gaussian { std }.validated()
    }

    pub fn uniform(half_width: f64) -> Result<Self> {
        Self::Uniform { half_width }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let p = match self {
            NoiseSpec::Gaussian { std } => std,
            NoiseSpec::Uniform { half_width } => half_width,
        };
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be positive (got scale {p})"
            )));
        }
        Ok(self)
    }

    pub fn variance(&self) -> f64 {
        match *self {
            NoiseSpec::Gaussian { std } => std * std,
            NoiseSpec::Uniform { half_width } => half_width * half_width / 3.0,
        }
    }

    pub fn std(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn density(&self, y: f64) -> f64 {
        match *self {
            NoiseSpec::Gaussian { std } => {
                let z = y / std;
                (-0.5 * z * z).exp() / (std * SQRT_2PI)
            }
            NoiseSpec::Uniform { half_width } => {
                if y.abs() <= half_width {
                    0.5 / half_width
                } else {
                    0.0
                }
            }
        }
    }

    /// `P(lo ≤ Y ≤ hi)`.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        match *self {
            NoiseSpec::Gaussian { std } => {
                let s = std * std::f64::consts::SQRT_2;
                let (a, b) = (lo / s, hi / s);
                // evaluate in the tail that avoids cancellation
                if a >= 0.0 {
                    0.5 * (libm::erfc(a) - libm::erfc(b))
                } else if b <= 0.0 {
                    0.5 * (libm::erfc(-b) - libm::erfc(-a))
                } else {
                    1.0 - 0.5 * (libm::erfc(-a) + libm::erfc(b))
                }
            }
            NoiseSpec::Uniform { half_width } => {
                let overlap = hi.min(half_width) - lo.max(-half_width);
                overlap.max(0.0) / (2.0 * half_width)
            }
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match *self {
            NoiseSpec::Gaussian { std } => std * rng.standard_normal(),
            NoiseSpec::Uniform { half_width } => half_width * (2.0 * rng.uniform() - 1.0),
        }
    }

    /// Half-width added on each side of the observed range when building
    /// the reconstruction support: 3σ for Gaussian noise, the full
    /// half-width for uniform noise.
    pub fn support_margin(&self) -> f64 {
        match *self {
            NoiseSpec::Gaussian { std } => 3.0 * std,
            NoiseSpec::Uniform { half_width } => half_width,
        }
    }
}

/// `wᵢ = xᵢ + yᵢ` with independent noise draws.
pub fn add_noise(column: &[f64], noise: &NoiseSpec, rng: &mut Rng) -> Result<Vec<f64>> {
    let noise = noise.validated()?;
    if column.is_empty() {
        return Err(Error::InvalidParameter("add_noise needs at least one value".into()));
    }
    Ok(column.iter().map(|x| x + noise.sample(rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson over [lo, hi].
    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> f64 {
        let h = (hi - lo) / steps as f64;
        let mut acc = f(lo) + f(hi);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn densities_integrate_to_one() {
        let g = NoiseSpec::gaussian(0.7).unwrap();
        let mass = simpson(|y| g.density(y), -6.0 * 0.7, 6.0 * 0.7, 20_000);
        assert!((mass - 1.0).abs() < 1e-6, "{mass}");
        let u = NoiseSpec::uniform(2.0).unwrap();
        let mass = simpson(|y| u.density(y), -2.0, 2.0, 20_000);
        assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    }

    #[test]
    fn interval_mass_matches_quadrature() {
        let g = NoiseSpec::gaussian(0.4).unwrap();
        for (lo, hi) in [(-3.0, -2.9), (-0.1, 0.3), (0.5, 0.52), (2.0, 9.0), (-1e-9, 1e-9)] {
            let q = simpson(|y| g.density(y), lo, hi, 2000);
            assert!((g.interval_mass(lo, hi) - q).abs() < 1e-12 + 1e-9 * q, "{lo} {hi}");
        }
        let u = NoiseSpec::uniform(1.0).unwrap();
        assert!((u.interval_mass(-2.0, 0.5) - 0.75).abs() < 1e-15);
        assert_eq!(u.interval_mass(1.5, 2.0), 0.0);
    }

    #[test]
    fn rejects_non_positive_variance() {
        assert!(NoiseSpec::gaussian(0.0).is_err());
        assert!(NoiseSpec::gaussian(-1.0).is_err());
        assert!(NoiseSpec::uniform(f64::NAN).is_err());
        let bad = NoiseSpec::Gaussian { std: 0.0 };
        assert!(add_noise(&[1.0], &bad, &mut Rng::new(0, "noise")).is_err());
    }

    #[test]
    fn near_zero_noise_is_identity() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.3).collect();
        let w = add_noise(&x, &NoiseSpec::gaussian(1e-12).unwrap(), &mut Rng::new(1, "noise")).unwrap();
        assert!(x.iter().zip(&w).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn gaussian_noise_variance_concentrates() {
        let n = 100_000;
        let x = vec![5.0; n];
        let w = add_noise(&x, &NoiseSpec::gaussian(2.0).unwrap(), &mut Rng::new(2, "noise/col0")).unwrap();
        let diffs: Vec<f64> = w.iter().zip(&x).map(|(a, b)| a - b).collect();
        let mean = diffs.iter().sum::<f64>() / n as f64;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((3.8..=4.2).contains(&var), "{var}");
        assert!(mean.abs() < 0.05);
    }

    #[test]
    fn uniform_noise_stays_in_support() {
        let u = NoiseSpec::uniform(0.5).unwrap();
        let w = add_noise(&vec![0.0; 10_000], &u, &mut Rng::new(3, "noise")).unwrap();
        assert!(w.iter().all(|v| v.abs() <= 0.5));
        let var = w.iter().map(|v| v * v).sum::<f64>() / w.len() as f64;
        assert!((var - u.variance()).abs() < 0.01);
    }

    #[test]
    fn deterministic_for_same_stream() {
        let x = [1.0, 2.0, 3.0];
        let g = NoiseSpec::gaussian(1.0).unwrap();
        let a = add_noise(&x, &g, &mut Rng::new(9, "noise/a")).unwrap();
        let b = add_noise(&x, &g, &mut Rng::new(9, "noise/a")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn spec_json_shape() {
        let g: NoiseSpec = serde_json::from_str(r#"{"family":"gaussian","std":0.25}"#).unwrap();
        assert_eq!(g, NoiseSpec::Gaussian { std: 0.25 });
        let u: NoiseSpec = serde_json::from_str(r#"{"family":"uniform","half_width":1}"#).unwrap();
        assert_eq!(u.support_margin(), 1.0);
    }
}
