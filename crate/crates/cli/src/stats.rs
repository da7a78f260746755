//! Interval and goodness-of-fit statistics for Monte-Carlo reports.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Wilson score interval for `successes` out of `n` at `z` standard deviations.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

/// Pearson statistic of `observed` counts against `probabilities`. Cells with
/// zero expected probability are skipped.
pub fn chi_square(observed: &[u64], probabilities: &[f64]) -> ChiSquare {
    let n: u64 = observed.iter().sum();
    let mut statistic = 0.0;
    let mut cells = 0usize;
    for (&o, &p) in observed.iter().zip(probabilities) {
        if p <= 0.0 {
            continue;
        }
        let e = p * n as f64;
        statistic += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    let degrees_of_freedom = cells.saturating_sub(1);
    let p_value = match ChiSquared::new(degrees_of_freedom as f64) {
        Ok(d) if degrees_of_freedom > 0 => d.sf(statistic),
        _ => 1.0,
    };
    ChiSquare {
        statistic,
        degrees_of_freedom,
        p_value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_brackets_rate() {
        let (lo, hi) = wilson_interval(36_000, 100_000, 3.0);
        assert!(lo < 0.36 && 0.36 < hi);
        assert!(hi - lo < 0.01);
        assert_eq!(wilson_interval(10, 10, 3.0).1, 1.0);
    }

    #[test]
    fn chi_square_exact_fit() {
        let c = chi_square(&[25, 25, 25, 25], &[0.25; 4]);
        assert_eq!(c.statistic, 0.0);
        assert_eq!(c.degrees_of_freedom, 3);
        assert!((c.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_known_value() {
        // (60-50)²/50 + (40-50)²/50 = 4 on one degree of freedom
        let c = chi_square(&[60, 40], &[0.5, 0.5]);
        assert!((c.statistic - 4.0).abs() < 1e-12);
        assert!((c.p_value - 0.0455).abs() < 1e-3);
    }
}
