//! Related-question randomized response.
//!
//! Each respondent answers the sensitive question truthfully with
//! probability θ and its negation otherwise, so the observed "yes" rate is
//! `P* = P·θ + (1 − P)·(1 − θ)`. The collector inverts that relation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidParameter(format!("theta={theta} outside [0, 1]")));
    }
    Ok(())
}

/// Keep each bit with probability `theta`, flip it otherwise.
pub fn randomize_response(column: &[bool], theta: f64, rng: &mut Rng) -> Result<Vec<bool>> {
    check_theta(theta)?;
    if column.is_empty() {
        return Err(Error::InvalidParameter("randomized response needs at least one answer".into()));
    }
    Ok(column
        .iter()
        .map(|&bit| if rng.uniform() < theta { bit } else { !bit })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProportionEstimate {
    /// Estimated true P(yes), clamped into [0, 1].
    pub proportion: f64,
    /// Unclamped inversion result.
    pub raw: f64,
    pub std_error: f64,
    pub clamped: bool,
    /// Observed fraction of "yes" answers.
    pub observed: f64,
    pub n: usize,
}

pub fn estimate_true_proportion(scrambled: &[bool], theta: f64) -> Result<ProportionEstimate> {
    check_theta(theta)?;
    let denom = 2.0 * theta - 1.0;
    if denom.abs() < 1e-12 {
        return Err(Error::NonIdentifiable { theta });
    }
    if scrambled.is_empty() {
        return Err(Error::InvalidParameter("no answers to estimate from".into()));
    }
    let n = scrambled.len();
    let observed = scrambled.iter().filter(|&&b| b).count() as f64 / n as f64;
    Ok(estimate_from_observed(observed, n, theta))
}

/// Inversion given an observed "yes" fraction; `theta` must already be
/// valid and different from 0.5.
pub fn estimate_from_observed(observed: f64, n: usize, theta: f64) -> ProportionEstimate {
    let denom = 2.0 * theta - 1.0;
    let raw = (observed - (1.0 - theta)) / denom;
    let proportion = raw.clamp(0.0, 1.0);
    ProportionEstimate {
        proportion,
        raw,
        std_error: (observed * (1.0 - observed) / n as f64).sqrt() / denom.abs(),
        clamped: proportion != raw,
        observed,
        n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(n: usize, p: f64, seed: u64) -> Vec<bool> {
        let mut r = Rng::new(seed, "test/truth");
        (0..n).map(|_| r.uniform() < p).collect()
    }

    #[test]
    fn theta_one_and_zero() {
        let x = bits(200, 0.4, 1);
        let same = randomize_response(&x, 1.0, &mut Rng::new(1, "rr")).unwrap();
        assert_eq!(same, x);
        let neg = randomize_response(&x, 0.0, &mut Rng::new(1, "rr")).unwrap();
        assert!(neg.iter().zip(&x).all(|(a, b)| a != b));
    }

    #[test]
    fn theta_out_of_range() {
        assert!(randomize_response(&[true], 1.2, &mut Rng::new(0, "rr")).is_err());
        assert!(estimate_true_proportion(&[true], -0.1).is_err());
    }

    #[test]
    fn flip_rate_concentrates() {
        let x = bits(100_000, 0.5, 2);
        let y = randomize_response(&x, 0.7, &mut Rng::new(2, "rr")).unwrap();
        let flipped = x.iter().zip(&y).filter(|(a, b)| a != b).count() as f64 / 1e5;
        assert!((0.29..=0.31).contains(&flipped), "{flipped}");
    }

    #[test]
    fn identity_model_estimate() {
        let est = estimate_from_observed(0.42, 100, 1.0);
        assert!((est.proportion - 0.42).abs() < 1e-15);
        assert!(!est.clamped);
    }

    #[test]
    fn inversion_example() {
        // 0.6 = 0.7 P + 0.3 (1 − P)  ⇒  P = 0.75
        let est = estimate_from_observed(0.6, 1000, 0.7);
        assert!((est.proportion - 0.75).abs() < 1e-12);
        // same answer from a concrete scrambled column with 60% yes
        let mut col = vec![true; 600];
        col.extend(vec![false; 400]);
        let est = estimate_true_proportion(&col, 0.7).unwrap();
        assert!((est.proportion - 0.75).abs() < 1e-12);
        assert!((est.std_error - (0.24f64 / 1000.0).sqrt() / 0.4).abs() < 1e-15);
    }

    /// Monte Carlo check of the 0.75 example: scramble a true-P = 0.75 column.
    #[test]
    fn inversion_example_by_simulation() {
        let truth = bits(100_000, 0.75, 3);
        let y = randomize_response(&truth, 0.7, &mut Rng::new(3, "rr")).unwrap();
        let est = estimate_true_proportion(&y, 0.7).unwrap();
        assert!((est.observed - 0.6).abs() < 0.01);
        assert!((est.proportion - 0.75).abs() < 4.0 * est.std_error);
    }

    #[test]
    fn half_is_non_identifiable() {
        let err = estimate_true_proportion(&[true, false], 0.5).unwrap_err();
        assert_eq!(err.to_string(), "theta=0.5 non-identifiable");
    }

    #[test]
    fn out_of_range_estimate_is_clamped() {
        let est = estimate_from_observed(0.95, 50, 0.8);
        assert!(est.raw > 1.0);
        assert_eq!(est.proportion, 1.0);
        assert!(est.clamped);
    }
}
