/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Wilson score interval for `hits` successes out of `n`.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    // keep p inside the interval despite rounding
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

/// Normal-equivalent standard deviation of a 95% interval.
pub fn interval_sigma(lo: f64, hi: f64) -> f64 {
    (hi - lo) / (2.0 * Z95)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn wilson_known_values() {
        // 50/100: center 0.5, half-width z·sqrt(0.25/100 + z²/4e4)/(1 + z²/100)
        let (lo, hi) = wilson_interval(50, 100, Z95);
        let z2 = Z95 * Z95;
        let half = Z95 * (0.0025 + z2 / 40_000.0).sqrt() / (1.0 + z2 / 100.0);
        assert_relative_eq!(lo, 0.5 - half, max_relative = 1e-12);
        assert_relative_eq!(hi, 0.5 + half, max_relative = 1e-12);
        // zero hits: the lower end is exactly 0, the upper z²/(n + z²)
        let (lo, hi) = wilson_interval(0, 1000, Z95);
        assert_eq!(lo, 0.0);
        assert_relative_eq!(hi, z2 / (1000.0 + z2), max_relative = 1e-12);
        let (lo, hi) = wilson_interval(1000, 1000, Z95);
        assert_relative_eq!(lo, 1000.0 / (1000.0 + z2), max_relative = 1e-12);
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn sigma_of_wide_sample_matches_binomial() {
        let n = 1_000_000u64;
        let (lo, hi) = wilson_interval(n / 4, n, Z95);
        let binomial = (0.25f64 * 0.75 / n as f64).sqrt();
        assert_relative_eq!(interval_sigma(lo, hi), binomial, max_relative = 1e-3);
    }

    proptest::proptest! {
        #[test]
        fn interval_contains_estimate(n in 1u64..100_000, frac in 0.0f64..=1.0) {
            let hits = ((n as f64) * frac).floor() as u64;
            let (lo, hi) = wilson_interval(hits, n, Z95);
            let p = hits as f64 / n as f64;
            proptest::prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
        }
    }
}
