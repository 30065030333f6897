//! Goodness-of-fit tests and closed-form oracles used to check simulated laws.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::rng::UniformSource;
use crate::{Error, Result};

/// Smallest sample size accepted by [`ks_two_sample`]; below it the
/// asymptotic critical values are unreliable.
pub const KS_MIN_SAMPLES: usize = 25;

/// Default significance level of [`chi_square_gof`].
pub const CHI_SQUARE_ALPHA: f64 = 0.001;

/// Serializable outcome of any test.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TestReport {
    pub test: String,
    pub statistic: f64,
    pub threshold: f64,
    pub alpha: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    /// `sup |F_a − F_b|`.
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

impl KsResult {
    pub fn report(&self, alpha: f64) -> TestReport {
        TestReport {
            test: "ks_two_sample".into(),
            statistic: self.statistic,
            threshold: self.critical,
            alpha,
            pass: self.pass,
        }
    }
}

/// `c(α) = sqrt(−ln(α/2) / 2)`, the asymptotic Kolmogorov quantile.
pub fn ks_coefficient(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

/// The two-sample KS statistic `D = sup_x |F_a(x) − F_b(x)|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::InvalidParams("samples contain NaN".into()));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::TooFewSamples {
            needed: 1,
            got: a.len().min(b.len()),
        });
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        // Step past every copy of the smallest remaining value in both samples
        // before comparing, so ties never produce a spurious gap.
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Two-sample Kolmogorov–Smirnov test; passes iff `D < c(α)·sqrt((n+m)/(nm))`.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<KsResult> {
    let got = a.len().min(b.len());
    if got < KS_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: KS_MIN_SAMPLES,
            got,
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParams(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let statistic = ks_statistic(a, b)?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let critical = ks_coefficient(alpha) * ((n + m) / (n * m)).sqrt();
    Ok(KsResult {
        statistic,
        critical,
        pass: statistic < critical,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    /// The `1 − α` quantile of χ²(dof).
    pub critical: f64,
    pub pass: bool,
}

impl ChiSquareResult {
    pub fn report(&self, alpha: f64) -> TestReport {
        TestReport {
            test: "chi_square_gof".into(),
            statistic: self.statistic,
            threshold: self.critical,
            alpha,
            pass: self.pass,
        }
    }
}

/// Pearson goodness of fit at `α = 0.001`.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> Result<ChiSquareResult> {
    chi_square_gof_at(counts, probs, CHI_SQUARE_ALPHA)
}

pub fn chi_square_gof_at(counts: &[u64], probs: &[f64], alpha: f64) -> Result<ChiSquareResult> {
    if counts.len() != probs.len() || counts.len() < 2 {
        return Err(Error::InvalidParams(
            "need matching counts and probabilities over at least two bins".into(),
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParams(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    crate::models::check_law(probs.iter().copied())?;
    let total: u64 = counts.iter().sum();
    let mut statistic = 0.0;
    for (bin, (&c, &p)) in counts.iter().zip(probs).enumerate() {
        let expected = total as f64 * p;
        if expected < 5.0 {
            return Err(Error::UnderpopulatedBin { bin, expected });
        }
        statistic += (c as f64 - expected).powi(2) / expected;
    }
    let dof = counts.len() - 1;
    let critical = ChiSquared::new(dof as f64)
        .map_err(|e| Error::InvalidParams(e.to_string()))?
        .inverse_cdf(1.0 - alpha);
    Ok(ChiSquareResult {
        statistic,
        dof,
        critical,
        pass: statistic <= critical,
    })
}

/// The first `k` GEM(θ) weights `w_i = B_i Π_{j<i} (1 − B_j)`, with
/// `B_j ~ Beta(1, θ)` drawn by inversion as `1 − (1 − U)^{1/θ}`.
pub fn gem_stick_breaking(theta: f64, k: usize, src: &mut impl UniformSource) -> Result<Vec<f64>> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::InvalidParams(format!("theta must be positive, got {theta}")));
    }
    if k == 0 {
        return Err(Error::InvalidParams("k must be at least 1".into()));
    }
    let mut rest = 1.0;
    Ok((0..k)
        .map(|_| {
            let b = 1.0 - (1.0 - src.uniform()).powf(1.0 / theta);
            let w = rest * b;
            rest -= w;
            w
        })
        .collect())
}

/// `E[#distinct colours among n draws] = Σ_{i<n} θ/(θ+i)` for the
/// Blackwell–MacQueen urn started from `θ` times a diffuse measure.
pub fn expected_distinct(theta: f64, n: usize) -> f64 {
    (0..n).fold(0.0, |acc, i| acc + theta / (theta + i as f64))
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomnessStream;
    use proptest::prelude::*;

    fn uniforms(seed: u64, n: usize) -> Vec<f64> {
        let mut s = RandomnessStream::new(seed, 0);
        (0..n).map(|_| s.next_uniform()).collect()
    }

    /// Beta(2,2) by the median of three uniforms.
    fn beta22(seed: u64, n: usize) -> Vec<f64> {
        let mut s = RandomnessStream::new(seed, 1);
        (0..n)
            .map(|_| {
                let mut v = [s.next_uniform(), s.next_uniform(), s.next_uniform()];
                v.sort_by(f64::total_cmp);
                v[1]
            })
            .collect()
    }

    #[test]
    fn coefficients() {
        assert!((ks_coefficient(0.01) - 1.628).abs() < 5e-4);
        assert!((ks_coefficient(0.05) - 1.358).abs() < 5e-4);
    }

    #[test]
    fn identical_samples() {
        let a = uniforms(1, 100);
        let r = ks_two_sample(&a, &a, 0.01).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn ks_against_hand_computed_value() {
        // F_a − F_b peaks at 1 − 0 just below 3: a = {1, 2}, b = {3, 4}.
        assert_eq!(ks_statistic(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 1.0);
        // Ties across samples: both empirical CDFs jump together at 1.
        assert_eq!(ks_statistic(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]).unwrap(), 1.0 / 3.0);
        assert_eq!(ks_statistic(&[0.0; 3], &[0.0; 5]).unwrap(), 0.0);
    }

    #[test]
    fn too_few_samples() {
        let a = uniforms(2, 24);
        assert!(matches!(
            ks_two_sample(&a, &uniforms(3, 100), 0.01),
            Err(Error::TooFewSamples { needed: 25, got: 24 })
        ));
    }

    #[test]
    fn null_calibration() {
        let passes = (0..100)
            .filter(|&t| {
                ks_two_sample(&uniforms(2 * t, 5000), &uniforms(2 * t + 1, 5000), 0.01)
                    .unwrap()
                    .pass
            })
            .count();
        assert!(passes >= 95, "{passes}/100");
    }

    #[test]
    fn uniform_vs_beta22_rejected() {
        let r = ks_two_sample(&uniforms(4, 5000), &beta22(4, 5000), 0.01).unwrap();
        assert!(!r.pass, "D = {}", r.statistic);
    }

    #[test]
    fn chi_square_examples() {
        let exact = chi_square_gof(&[250, 500, 250], &[0.25, 0.5, 0.25]).unwrap();
        assert_eq!(exact.statistic, 0.0);
        assert_eq!(exact.dof, 2);
        assert!(exact.pass);
        // χ²(1) 0.999 quantile is 10.828.
        let coin = chi_square_gof(&[1, 1], &[0.5, 0.5]);
        assert!(matches!(coin, Err(Error::UnderpopulatedBin { bin: 0, .. })));

        let mut s = RandomnessStream::new(5, 0);
        let heads = (0..100_000).filter(|_| s.next_uniform() < 0.5).count() as u64;
        let r = chi_square_gof(&[heads, 100_000 - heads], &[0.5, 0.5]).unwrap();
        assert!((r.critical - 10.828).abs() < 1e-3);
        assert!(r.pass);

        let skewed = [0.7, 0.2, 0.1];
        let reversed = [100, 200, 700];
        assert!(!chi_square_gof(&reversed, &skewed).unwrap().pass);
        assert!(chi_square_gof(&[10, 10], &[0.5, 0.6]).is_err());
    }

    #[test]
    fn gem_first_weight_is_uniform_for_theta_one() {
        let mut s = RandomnessStream::new(6, 0);
        let w1: Vec<f64> = (0..5000)
            .map(|_| gem_stick_breaking(1.0, 1, &mut s).unwrap()[0])
            .collect();
        assert!(ks_two_sample(&w1, &uniforms(7, 5000), 0.01).unwrap().pass);
        let (mean, se) = mean_and_se(&w1);
        assert!((mean - 0.5).abs() < 3.0 * se);
    }

    #[test]
    fn gem_mean_matches_beta_mean() {
        // E[B] = 1/(1+θ).
        let mut s = RandomnessStream::new(8, 0);
        let w1: Vec<f64> = (0..5000)
            .map(|_| gem_stick_breaking(3.0, 1, &mut s).unwrap()[0])
            .collect();
        let (mean, se) = mean_and_se(&w1);
        assert!((mean - 0.25).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn expected_distinct_values() {
        assert_eq!(expected_distinct(1.0, 0), 0.0);
        assert_eq!(expected_distinct(1.0, 2), 1.5);
        assert!((expected_distinct(1.0, 3) - 11.0 / 6.0).abs() < 1e-15);
        assert!((expected_distinct(1.0, 100) - 5.187).abs() < 1e-3);
    }

    #[test]
    fn expected_distinct_by_enumeration() {
        // Sequential seating: draw i opens a new colour w.p. θ/(θ+i). Enumerate
        // all 2^n open/join patterns for n = 5 and average the counts.
        let theta = 2.0;
        let n = 5;
        let mut expected = 0.0;
        for mask in 0u32..(1 << n) {
            let mut prob = 1.0;
            for i in 0..n {
                let p_new = theta / (theta + i as f64);
                prob *= if mask >> i & 1 == 1 { p_new } else { 1.0 - p_new };
            }
            expected += prob * mask.count_ones() as f64;
        }
        assert!((expected_distinct(theta, n) - expected).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn ks_is_symmetric_and_bounded(
            a in prop::collection::vec(-5.0f64..5.0, 1..60),
            b in prop::collection::vec(-5.0f64..5.0, 1..60),
        ) {
            let d = ks_statistic(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d, ks_statistic(&b, &a).unwrap());
        }

        #[test]
        fn ks_zero_iff_same_empirical_cdf(a in prop::collection::vec(-5i32..5, 1..40), k in 1usize..4) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let repeated: Vec<f64> = a.iter().flat_map(|&x| std::iter::repeat(x).take(k)).collect();
            prop_assert_eq!(ks_statistic(&a, &repeated).unwrap(), 0.0);
            let mut shifted = a.clone();
            shifted[0] += 0.5;
            prop_assert!(ks_statistic(&a, &shifted).unwrap() > 0.0);
        }

        #[test]
        fn gem_weights_are_a_partial_stick(theta in 0.1f64..10.0, k in 1usize..50, seed in any::<u64>()) {
            let w = gem_stick_breaking(theta, k, &mut RandomnessStream::new(seed, 0)).unwrap();
            let mut partial = 0.0;
            for x in w {
                prop_assert!((0.0..1.0).contains(&x));
                partial += x;
                prop_assert!(partial < 1.0 + 1e-15);
            }
        }

        #[test]
        fn expected_distinct_is_increasing_and_concave(theta in 0.1f64..20.0, n in 1usize..200) {
            let f = |n| expected_distinct(theta, n);
            prop_assert!(f(n) > f(n - 1));
            prop_assert!(f(n + 1) - f(n) <= f(n) - f(n - 1));
        }
    }
}
