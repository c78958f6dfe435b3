//! Performance-ratio statistics for an (easy, hard) algorithm pair.
//!
//! Per run i the ratio is P(A1_i)/P(A2_i) after flooring non-positive
//! performances at epsilon. The plain fitness is the mean ratio; the
//! discounting fitness subtracts k_alpha sample standard deviations from it,
//! trading expected gap for reliability.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solvers::SolverRunResult;

/// Default infeasibility floor for best performances.
pub const DEFAULT_EPSILON: f64 = 1e-2;

/// One-sided standard normal quantile for confidence 0.90.
pub const K_ALPHA_090: f64 = 1.2816;
/// One-sided standard normal quantile for confidence 0.99.
pub const K_ALPHA_099: f64 = 2.3263;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    C90,
    C99,
    /// Explicit multiplier, for reproducing other conventions.
    Explicit(f64),
}

impl Confidence {
    pub fn k_alpha(self) -> f64 {
        match self {
            Confidence::C90 => K_ALPHA_090,
            Confidence::C99 => K_ALPHA_099,
            Confidence::Explicit(k) => k,
        }
    }

    pub fn parse(s: &str) -> Result<Confidence> {
        match s {
            "0.90" | "0.9" => Ok(Confidence::C90),
            "0.99" => Ok(Confidence::C99),
            other => Err(Error::Config(format!(
                "confidence {other:?} not supported (use 0.90 or 0.99, or --k-alpha)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub per_run_ratios: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub k_alpha: f64,
    /// mean - k_alpha * std
    pub discounted: f64,
    pub epsilon: f64,
}

/// Replace non-positive best performances with the floor. A best of exactly 0
/// (nothing covered) counts as not-solved too, which keeps ratios finite.
pub fn floor_performance(p: f64, epsilon: f64) -> f64 {
    debug_assert!(epsilon > 0.0);
    if p > 0.0 {
        p
    } else {
        epsilon
    }
}

/// Run-index-paired ratios floor(P1_i)/floor(P2_i).
pub fn paired_ratios(
    easy: &[SolverRunResult],
    hard: &[SolverRunResult],
    epsilon: f64,
) -> Result<Vec<f64>> {
    if easy.len() != hard.len() {
        return Err(Error::Dimension {
            expected: easy.len(),
            got: hard.len(),
        });
    }
    Ok(easy
        .iter()
        .zip(hard)
        .map(|(a, b)| {
            floor_performance(a.best_fitness, epsilon) / floor_performance(b.best_fitness, epsilon)
        })
        .collect())
}

/// Mean of the per-run ratios (the plain approximation-ratio fitness).
pub fn ratio_fitness(ratios: &[f64]) -> Result<f64> {
    if ratios.is_empty() {
        return Err(Error::Config("empty ratio list".into()));
    }
    Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

/// Sample standard deviation with divisor n-1; 0 for a single observation.
fn sample_std(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// The discounting fitness mean - k_alpha * std, with full statistics.
pub fn discounted_fitness(
    ratios: &[f64],
    confidence: Confidence,
    epsilon: f64,
) -> Result<RatioStats> {
    let mean = ratio_fitness(ratios)?;
    let std = sample_std(ratios, mean);
    let k_alpha = confidence.k_alpha();
    Ok(RatioStats {
        per_run_ratios: ratios.to_vec(),
        mean,
        std,
        k_alpha,
        discounted: mean - k_alpha * std,
        epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::BitSolution;

    fn result(fitness: f64) -> SolverRunResult {
        SolverRunResult {
            best_fitness: fitness,
            best_solution: BitSolution::zeros(1),
            evals_used: 1,
            trajectory: None,
        }
    }

    #[test]
    fn floor_hand_values() {
        assert_eq!(floor_performance(42.0, 0.01), 42.0);
        assert_eq!(floor_performance(-687.64, 0.01), 0.01);
        assert_eq!(floor_performance(0.0, 0.01), 0.01);
    }

    #[test]
    fn paired_ratio_hand_values() {
        let easy = [result(100.0), result(110.0)];
        let hard = [result(100.0), result(100.0)];
        let r = paired_ratios(&easy, &hard, 0.01).unwrap();
        assert_eq!(r, vec![1.0, 1.1]);

        let r = paired_ratios(&[result(50.0)], &[result(-3.0)], 0.01).unwrap();
        assert_eq!(r, vec![5000.0]);

        let same = [result(7.0), result(9.0)];
        let r = paired_ratios(&same, &same, 0.01).unwrap();
        assert!(r.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn paired_ratios_length_mismatch() {
        assert!(paired_ratios(&[result(1.0)], &[], 0.01).is_err());
    }

    #[test]
    fn ratio_fitness_hand_values() {
        assert_eq!(ratio_fitness(&[1.0, 1.1]).unwrap(), 1.05);
        assert_eq!(ratio_fitness(&[1.7]).unwrap(), 1.7);
        assert!(ratio_fitness(&[]).is_err());
    }

    #[test]
    fn discounted_hand_values() {
        let stats = discounted_fitness(&[1.0, 1.2], Confidence::C99, 0.01).unwrap();
        assert!((stats.mean - 1.1).abs() < 1e-12);
        assert!((stats.std - 0.141421).abs() < 1e-6);
        assert!((stats.discounted - 0.7710).abs() < 1e-4);

        let stats = discounted_fitness(&[1.0, 1.2], Confidence::C90, 0.01).unwrap();
        assert!((stats.discounted - 0.9187).abs() < 1e-4);
    }

    #[test]
    fn zero_variance_means_no_discount() {
        let stats = discounted_fitness(&[1.3; 5], Confidence::C99, 0.01).unwrap();
        assert_eq!(stats.std, 0.0);
        assert_eq!(stats.discounted, 1.3);
    }

    #[test]
    fn single_ratio_has_zero_std() {
        let stats = discounted_fitness(&[1.5], Confidence::C99, 0.01).unwrap();
        assert_eq!(stats.std, 0.0);
        assert_eq!(stats.discounted, 1.5);
    }

    #[test]
    fn k_zero_reduces_to_plain_ratio() {
        let ratios = [0.9, 1.1, 1.4, 1.0];
        let stats = discounted_fitness(&ratios, Confidence::Explicit(0.0), 0.01).unwrap();
        assert_eq!(stats.discounted, ratio_fitness(&ratios).unwrap());
    }

    #[test]
    fn discount_is_monotone_in_k() {
        let ratios = [0.9, 1.1, 1.4];
        let lo = discounted_fitness(&ratios, Confidence::Explicit(1.0), 0.01).unwrap();
        let hi = discounted_fitness(&ratios, Confidence::Explicit(2.0), 0.01).unwrap();
        assert!(hi.discounted < lo.discounted);
        assert!(lo.discounted < lo.mean);
    }

    #[test]
    fn scaling_invariance_without_floor() {
        let easy: Vec<_> = [40.0, 55.0, 70.0].map(result).into();
        let hard: Vec<_> = [35.0, 60.0, 50.0].map(result).into();
        let base = paired_ratios(&easy, &hard, 0.01).unwrap();
        let easy2: Vec<_> = [80.0, 110.0, 140.0].map(result).into();
        let hard2: Vec<_> = [70.0, 120.0, 100.0].map(result).into();
        let scaled = paired_ratios(&easy2, &hard2, 0.01).unwrap();
        for (a, b) in base.iter().zip(&scaled) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
