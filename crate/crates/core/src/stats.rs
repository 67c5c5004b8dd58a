//! Frequency counting and chi-square goodness-of-fit testing.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Bins whose expected count is below this are pooled.
pub const MIN_EXPECTED: f64 = 5.0;

pub fn frequency_counts(samples: &[usize], n: usize) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; n];
    for &s in samples {
        match counts.get_mut(s) {
            Some(c) => *c += 1,
            None => return Err(Error::IndexOutOfRange { index: s, n }),
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub critical: f64,
    pub pass: bool,
}

/// Upper quantile of the chi-square distribution with `df` degrees of
/// freedom at tail probability `significance` (Wilson-Hilferty).
pub fn chi_square_critical(df: usize, significance: f64) -> f64 {
    let z = Normal::standard().inverse_cdf(1.0 - significance);
    let k = df as f64;
    let c = 2.0 / (9.0 * k);
    k * (1.0 - c + z * c.sqrt()).powi(3)
}

/// Pearson's test of `observed` against `expected_probs`.
///
/// Bins with an expected count below 5 are merged into one pooled bin; if
/// that pooled bin is itself below 5 it is folded into the smallest retained
/// bin.
pub fn chi_square_test(observed: &[u64], expected_probs: &[f64], significance: f64) -> Result<ChiSquare> {
    if observed.len() != expected_probs.len() {
        return Err(Error::SizeMismatch {
            table: observed.len(),
            weights: expected_probs.len(),
        });
    }
    let psum: f64 = expected_probs.iter().sum();
    if (psum - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized(psum));
    }
    let total: u64 = observed.iter().sum();
    let total = total as f64;

    let mut bins: Vec<(f64, f64)> = Vec::with_capacity(observed.len());
    let mut pooled = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(expected_probs) {
        let e = p * total;
        if e < MIN_EXPECTED {
            pooled.0 += o as f64;
            pooled.1 += e;
        } else {
            bins.push((o as f64, e));
        }
    }
    if pooled.1 >= MIN_EXPECTED || (bins.is_empty() && pooled.1 > 0.0) {
        bins.push(pooled);
    } else if pooled.1 > 0.0 || pooled.0 > 0.0 {
        let smallest = bins
            .iter_mut()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("bins is non-empty here");
        smallest.0 += pooled.0;
        smallest.1 += pooled.1;
    }
    if bins.len() < 2 {
        return Err(Error::DegenerateBins);
    }

    let statistic = bins.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let df = bins.len() - 1;
    let critical = chi_square_critical(df, significance);
    Ok(ChiSquare {
        statistic,
        df,
        critical,
        pass: statistic <= critical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(frequency_counts(&[0, 0, 1], 2).unwrap(), vec![2, 1]);
        assert_eq!(frequency_counts(&[], 3).unwrap(), vec![0, 0, 0]);
        assert!(matches!(frequency_counts(&[3], 3), Err(Error::IndexOutOfRange { index: 3, n: 3 })));
    }

    #[test]
    fn proportional_observation_passes() {
        let r = chi_square_test(&[300, 100, 200, 200], &[0.375, 0.125, 0.25, 0.25], 0.001).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.df, 3);
        assert!(r.pass);
    }

    #[test]
    fn two_bin_boundary_case() {
        // (10-5)^2/5 + (0-5)^2/5 = 10. Exact critical value at df 1 is
        // 10.828; Wilson-Hilferty overshoots to about 11.16.
        let r = chi_square_test(&[10, 0], &[0.5, 0.5], 0.001).unwrap();
        assert_eq!(r.statistic, 10.0);
        assert_eq!(r.df, 1);
        assert!((r.critical - 11.157).abs() < 0.01, "{}", r.critical);
        assert!(r.pass);
    }

    #[test]
    fn lopsided_observation_fails() {
        let r = chi_square_test(&[1000, 0, 0, 0], &[0.25; 4], 0.001).unwrap();
        assert_eq!(r.statistic, 3000.0);
        assert!(!r.pass);
    }

    #[test]
    fn critical_values_close_to_tables() {
        // Reference quantiles at 0.001: df 10 -> 29.588, df 100 -> 149.449.
        assert!((chi_square_critical(10, 0.001) - 29.588).abs() < 0.2);
        assert!((chi_square_critical(100, 0.001) - 149.449).abs() < 0.2);
    }

    #[test]
    fn pooling_small_bins() {
        // 100 samples; the three 1% bins pool to an expected count of 3,
        // which then folds into the smallest retained bin.
        let r = chi_square_test(&[49, 48, 1, 1, 1], &[0.49, 0.48, 0.01, 0.01, 0.01], 0.001).unwrap();
        assert_eq!(r.df, 1);
        assert!(r.statistic.abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_invalid() {
        assert!(matches!(chi_square_test(&[3, 1], &[0.5, 0.5], 0.001), Err(Error::DegenerateBins)));
        assert!(matches!(chi_square_test(&[3, 1], &[0.5, 0.6], 0.001), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn scaling_keeps_decisive_failures() {
        let obs = [60u64, 40];
        let r1 = chi_square_test(&obs, &[0.5, 0.5], 0.001).unwrap();
        let r10 = chi_square_test(&[600, 400], &[0.5, 0.5], 0.001).unwrap();
        assert!((r10.statistic - 10.0 * r1.statistic).abs() < 1e-9);
        assert!(!r10.pass);
    }
}
