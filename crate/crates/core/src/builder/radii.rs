use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Terms summed explicitly before the Euler–Maclaurin tail takes over.
const EXPLICIT_TERMS: u64 = 100_000;

fn term(x: f64) -> f64 {
    let l = x.ln();
    1.0 / (x * l * l)
}

fn term_derivative(x: f64) -> f64 {
    let l = x.ln();
    -(l + 2.0) / (x * x * l * l * l)
}

/// `Σ_{j≥k} 1/(j log²j)` for `k ≥ 2`.
///
/// The first terms are summed directly (smallest first); the rest is the
/// integral `1/log J` plus the first Euler–Maclaurin corrections, whose
/// error is far below `10⁻¹²` at `J ≥ 10⁵`.
pub fn tail_sum(k: u64) -> Result<f64> {
    if k < 2 {
        return Err(Error::domain(format!("tail sum needs k ≥ 2, got {k}")));
    }
    let j_end = k.saturating_add(EXPLICIT_TERMS);
    let jf = j_end as f64;
    let mut sum = 1.0 / jf.ln() + 0.5 * term(jf) - term_derivative(jf) / 12.0;
    for j in (k..j_end).rev() {
        sum += term(j as f64);
    }
    Ok(sum)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiiRule {
    /// `R_k = 1 − 2^(−k−1)`.
    Geometric,
    /// `R_k = 1 − Σ_{j≥k+k₁−1} 1/(j log²j)`, with `k₁` the first index whose
    /// tail is below `1/2`.
    Log2,
}

impl RadiiRule {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(RadiiRule::Geometric),
            "log2" => Ok(RadiiRule::Log2),
            other => Err(Error::invalid(format!(
                "unknown radii rule '{other}' (expected geometric or log2)"
            ))),
        }
    }

    /// `R_0 = 1/2, R_1, …, R_{layers+1}`.
    pub fn radii(self, layers: usize) -> Result<Vec<f64>> {
        match self {
            RadiiRule::Geometric => Ok(geometric_radii(layers)),
            RadiiRule::Log2 => log2_radii(layers),
        }
    }
}

pub fn geometric_radii(layers: usize) -> Vec<f64> {
    let mut v = vec![0.5];
    v.extend((1..=layers + 1).map(|k| 1.0 - 0.5f64.powi(k as i32 + 1)));
    v
}

pub fn log2_radii(layers: usize) -> Result<Vec<f64>> {
    let mut k1 = 2u64;
    let mut tail = tail_sum(k1)?;
    while tail >= 0.5 {
        tail -= term(k1 as f64);
        k1 += 1;
    }
    let mut v = vec![0.5, 1.0 - tail];
    for j in 0..layers as u64 {
        tail -= term((k1 + j) as f64);
        v.push(1.0 - tail);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tail_sum_matches_long_direct_sum() {
        // direct summation to 10^8 plus the integral bound for the rest
        let k = 10u64;
        let n = 100_000_000u64;
        let mut direct = 0.0;
        for j in (k..n).rev() {
            direct += term(j as f64);
        }
        let rest_low = 1.0 / ((n as f64).ln());
        let rest_high = 1.0 / ((n as f64 - 1.0).ln());
        let t = tail_sum(k).unwrap();
        assert!(t >= direct + rest_low - 1e-12 && t <= direct + rest_high + 1e-12);
    }

    #[test]
    fn tail_is_decreasing_and_consistent() {
        let mut prev = tail_sum(2).unwrap();
        for k in 3..200 {
            let t = tail_sum(k).unwrap();
            assert!(t < prev);
            assert_relative_eq!(prev - t, term((k - 1) as f64), max_relative = 1e-9);
            prev = t;
        }
        assert!(tail_sum(1).is_err());
    }

    #[test]
    fn rules_are_increasing_in_unit_interval() {
        for rule in [RadiiRule::Geometric, RadiiRule::Log2] {
            let r = rule.radii(8).unwrap();
            assert_eq!(r.len(), 10);
            assert_eq!(r[0], 0.5);
            assert!(r.windows(2).all(|w| w[0] < w[1]));
            assert!(*r.last().unwrap() < 1.0);
        }
        assert_eq!(geometric_radii(1), vec![0.5, 0.75, 0.875]);
    }
}
