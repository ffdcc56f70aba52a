//! Kernel and capacity functions, user gauges, and closed-form hitting
//! probabilities used as oracles elsewhere in the crate.
//!
//! `N(t)` is `log(1/t)` in the plane and `t^(2-d)` otherwise, so that
//! `N(|x - y|)` is the global Green function, and `φ = 1/N`. Everything that
//! may be asked about extremely small radii also has a `*_log` variant taking
//! `ln t` instead of `t`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::check_dim;

/// Lower end of the majorant evaluation grid.
pub const MAJORANT_GRID_FLOOR: f64 = 1e-12;
pub const MAJORANT_GRID_POINTS: usize = 4096;

pub fn kernel_n(t: f64, d: usize) -> Result<f64> {
    check_dim(d)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("N(t) needs t > 0, got {t}")));
    }
    Ok(kernel_n_log(t.ln(), d))
}

/// `N` evaluated at `t = exp(log_t)`. Dimension must already be valid.
#[inline]
pub fn kernel_n_log(log_t: f64, d: usize) -> f64 {
    if d == 2 {
        -log_t
    } else {
        (-(d as f64 - 2.0) * log_t).exp()
    }
}

pub fn capacity_phi(t: f64, d: usize) -> Result<f64> {
    check_dim(d)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("φ(t) needs t > 0, got {t}")));
    }
    if d == 2 && t >= 1.0 {
        return Err(Error::domain(format!(
            "φ(t) in the plane needs t < 1, got {t}"
        )));
    }
    Ok(phi_log(t.ln(), d))
}

/// `φ` evaluated at `t = exp(log_t)`; in the plane the caller guarantees
/// `log_t < 0`.
#[inline]
pub fn phi_log(log_t: f64, d: usize) -> f64 {
    if d == 2 {
        debug_assert!(log_t < 0.0);
        -1.0 / log_t
    } else {
        ((d as f64 - 2.0) * log_t).exp()
    }
}

/// `ln φ(t)` from `ln t`.
#[inline]
pub fn ln_phi_log(log_t: f64, d: usize) -> f64 {
    if d == 2 {
        -(-log_t).ln()
    } else {
        (d as f64 - 2.0) * log_t
    }
}

/// Probability that Brownian motion started at distance `start` from the
/// origin hits `B̄(0, inner)` before leaving `B(0, outer)`.
pub fn annulus_hit(inner: f64, start: f64, outer: f64, d: usize) -> Result<f64> {
    check_dim(d)?;
    if !(inner > 0.0 && inner < outer) {
        return Err(Error::domain(format!(
            "annulus needs 0 < inner < outer, got inner={inner}, outer={outer}"
        )));
    }
    if !(start >= inner && start <= outer) {
        return Err(Error::domain(format!(
            "start radius {start} outside [{inner}, {outer}]"
        )));
    }
    if start == inner {
        return Ok(1.0);
    }
    if start == outer {
        return Ok(0.0);
    }
    let p = if d == 2 {
        (outer / start).ln() / (outer / inner).ln()
    } else {
        let k = d as f64 - 2.0;
        // (s^-k - o^-k) / (i^-k - o^-k), written with ratios to keep precision
        let num = (outer / start).powf(k) - 1.0;
        let den = (outer / inner).powf(k) - 1.0;
        num / den
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Hitting probability of `B̄(0, s)` from `|z| = z_norm` inside the unit ball.
pub fn annulus_hit_exact(s: f64, z_norm: f64, d: usize) -> Result<f64> {
    if !(s < 1.0) {
        return Err(Error::domain(format!("inner radius must be < 1, got {s}")));
    }
    annulus_hit(s, z_norm, 1.0, d)
}

/// Hitting probability of `B̄(0,1/7)` from `|z| = 1/2` in the unit ball.
pub fn eta(d: usize) -> Result<f64> {
    annulus_hit_exact(1.0 / 7.0, 0.5, d)
}

/// Green potential, with respect to `B(0, R + 2ρ)`, of normalized surface
/// measure on `∂B(0, R)`, at a point of norm `y_norm`.
pub fn equilibrium_potential_sigma(y_norm: f64, big_r: f64, rho: f64, d: usize) -> Result<f64> {
    check_dim(d)?;
    if !(big_r > 0.0 && rho > 0.0) {
        return Err(Error::domain(format!(
            "need R > 0 and ρ > 0, got R={big_r}, ρ={rho}"
        )));
    }
    let outer = big_r + 2.0 * rho;
    if !(y_norm >= 0.0) || y_norm > outer {
        return Err(Error::domain(format!(
            "|y| = {y_norm} outside [0, R + 2ρ = {outer}]"
        )));
    }
    if y_norm == outer {
        return Ok(0.0);
    }
    let n_outer = kernel_n_log(outer.ln(), d);
    let plateau = kernel_n_log(big_r.ln(), d) - n_outer;
    if y_norm <= big_r {
        return Ok(plateau);
    }
    let g0 = kernel_n_log(y_norm.ln(), d) - n_outer;
    Ok(g0.min(plateau))
}

/// Smallest `c₃` with `c₃⁻¹ρ ≤ Gσ(y) ≤ c₃ρ` over a grid of
/// `R ∈ (1/2, 1)`, `ρ ∈ (0, 1/3)` and `||y| − R| ≤ ρ`.
pub fn measure_c3(d: usize, steps: usize) -> Result<f64> {
    check_dim(d)?;
    let steps = steps.max(2);
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for i in 0..steps {
        // includes the closure points R = 1/2 and ρ = 1/3 where the extremes sit
        let big_r = 0.5 + 0.5 * i as f64 / steps as f64;
        for j in 0..steps {
            // log-spaced ρ down to 1e-6
            let frac = j as f64 / (steps - 1) as f64;
            let rho = (1.0 / 3.0) * (1e-6f64).powf(frac);
            for k in 0..=steps {
                let y = big_r - rho + 2.0 * rho * k as f64 / steps as f64;
                let ratio = equilibrium_potential_sigma(y, big_r, rho, d)? / rho;
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
        }
    }
    Ok(hi.max(1.0 / lo))
}

pub type GaugeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The user gauge `h : (0,1) → (0,1)` with `h(t) → 0` as `t → 0`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gauge {
    /// `h = φ^ε`.
    PhiPower { eps: f64 },
    /// `h = 1 / log log (1/φ)`, capped at 1 where the double log is below 1.
    LogLog,
    /// Piecewise linear in `ln t` through `(t, h)` knots, constant beyond the
    /// first and last knot.
    Tabulated { knots: Vec<(f64, f64)> },
    #[serde(skip)]
    Custom {
        name: String,
        f: GaugeFn,
        monotone: bool,
    },
}

impl fmt::Debug for Gauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gauge::PhiPower { eps } => write!(f, "phi-eps:{eps}"),
            Gauge::LogLog => write!(f, "loglog"),
            Gauge::Tabulated { knots } => write!(f, "tabulated({} knots)", knots.len()),
            Gauge::Custom { name, .. } => write!(f, "custom:{name}"),
        }
    }
}

impl PartialEq for Gauge {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Gauge::PhiPower { eps: a }, Gauge::PhiPower { eps: b }) => a.to_bits() == b.to_bits(),
            (Gauge::LogLog, Gauge::LogLog) => true,
            (Gauge::Tabulated { knots: a }, Gauge::Tabulated { knots: b }) => a == b,
            (Gauge::Custom { name: a, f: fa, .. }, Gauge::Custom { name: b, f: fb, .. }) => {
                a == b && Arc::ptr_eq(fa, fb)
            }
            _ => false,
        }
    }
}

impl Gauge {
    pub fn custom(
        name: impl Into<String>,
        monotone: bool,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Gauge::Custom {
            name: name.into(),
            f: Arc::new(f),
            monotone,
        }
    }

    /// Parses `phi-eps:<ε>`, `loglog`, or `file:<path>` (CSV of `t,h` rows).
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "loglog" {
            return Ok(Gauge::LogLog);
        }
        if let Some(eps) = spec.strip_prefix("phi-eps:") {
            let eps: f64 = eps
                .parse()
                .map_err(|_| Error::invalid(format!("bad exponent in gauge '{spec}'")))?;
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::invalid(format!("gauge exponent must be > 0, got {eps}")));
            }
            return Ok(Gauge::PhiPower { eps });
        }
        if let Some(path) = spec.strip_prefix("file:") {
            return Gauge::from_csv(Path::new(path));
        }
        Err(Error::invalid(format!(
            "unknown gauge '{spec}' (expected phi-eps:<ε>, loglog or file:<path>)"
        )))
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut knots = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',').map(str::trim);
            let (t, h) = match (parts.next(), parts.next()) {
                (Some(t), Some(h)) => (t.parse::<f64>(), h.parse::<f64>()),
                _ => {
                    return Err(Error::Format {
                        path: path.into(),
                        message: format!("line {}: expected 't,h'", lineno + 1),
                    })
                }
            };
            match (t, h) {
                (Ok(t), Ok(h)) => knots.push((t, h)),
                // header row
                _ if knots.is_empty() && lineno == 0 => continue,
                _ => {
                    return Err(Error::Format {
                        path: path.into(),
                        message: format!("line {}: non-numeric value", lineno + 1),
                    })
                }
            }
        }
        Gauge::tabulated(knots)
    }

    pub fn tabulated(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::invalid("tabulated gauge needs at least one knot"));
        }
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(t, h) in &knots {
            if !(t > 0.0 && t < 1.0) || !(h > 0.0) || !h.is_finite() {
                return Err(Error::invalid(format!(
                    "gauge knot ({t}, {h}) outside (0,1) × (0,∞)"
                )));
            }
        }
        if knots.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("duplicate t in tabulated gauge"));
        }
        Ok(Gauge::Tabulated { knots })
    }

    /// Whether `h` is known to be nondecreasing, so that `ĥ = h`.
    pub fn is_monotone(&self) -> bool {
        match self {
            Gauge::PhiPower { .. } | Gauge::LogLog => true,
            Gauge::Tabulated { knots } => knots.windows(2).all(|w| w[0].1 <= w[1].1),
            Gauge::Custom { monotone, .. } => *monotone,
        }
    }

    pub fn label(&self) -> String {
        format!("{self:?}")
    }

    fn eval_log(&self, log_t: f64, d: usize) -> f64 {
        match self {
            Gauge::PhiPower { eps } => (eps * ln_phi_log(log_t, d)).exp(),
            Gauge::LogLog => {
                // ln(1/φ) = ln N
                let ln_n = if d == 2 {
                    (-log_t).ln()
                } else {
                    -(d as f64 - 2.0) * log_t
                };
                let ll = if ln_n > 0.0 { ln_n.ln() } else { f64::NEG_INFINITY };
                1.0 / ll.max(1.0)
            }
            Gauge::Tabulated { knots } => {
                let first = knots[0];
                let last = knots[knots.len() - 1];
                if log_t <= first.0.ln() {
                    return first.1;
                }
                if log_t >= last.0.ln() {
                    return last.1;
                }
                let idx = knots.partition_point(|k| k.0.ln() <= log_t);
                let (t0, h0) = knots[idx - 1];
                let (t1, h1) = knots[idx];
                let w = (log_t - t0.ln()) / (t1.ln() - t0.ln());
                h0 + w * (h1 - h0)
            }
            Gauge::Custom { f, .. } => f(log_t.exp()),
        }
    }
}

/// Dimension plus gauge, with the evaluation rule for the increasing
/// majorant `ĥ(t) = sup{h(s) : 0 < s ≤ t}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeSet {
    d: usize,
    gauge: Gauge,
    grid_points: usize,
}

impl GaugeSet {
    pub fn new(d: usize, gauge: Gauge) -> Result<Self> {
        check_dim(d)?;
        if let Gauge::PhiPower { eps } = gauge {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::invalid(format!("gauge exponent must be > 0, got {eps}")));
            }
        }
        Ok(GaugeSet {
            d,
            gauge,
            grid_points: MAJORANT_GRID_POINTS,
        })
    }

    pub fn with_grid_points(mut self, n: usize) -> Self {
        self.grid_points = n.max(2);
        self
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn gauge(&self) -> &Gauge {
        &self.gauge
    }

    pub fn h(&self, t: f64) -> Result<f64> {
        Ok(self.h_log(Self::check_t(t)?))
    }

    /// `h(exp(log_t))`; `log_t` must be negative.
    pub fn h_log(&self, log_t: f64) -> f64 {
        self.gauge.eval_log(log_t, self.d)
    }

    pub fn majorant(&self, t: f64) -> Result<f64> {
        Ok(self.majorant_log(Self::check_t(t)?))
    }

    /// `ĥ(exp(log_t))`, exact for monotone gauges and a sup over a
    /// log-spaced grid on `[min(10⁻¹², t), t]` otherwise.
    pub fn majorant_log(&self, log_t: f64) -> f64 {
        let at_t = self.h_log(log_t);
        if self.gauge.is_monotone() {
            return at_t;
        }
        let lo = MAJORANT_GRID_FLOOR.ln();
        if log_t <= lo {
            return at_t;
        }
        let n = self.grid_points;
        let mut best = at_t;
        for i in 0..n {
            let s = lo + (log_t - lo) * i as f64 / (n - 1) as f64;
            best = best.max(self.h_log(s));
        }
        best
    }

    /// `φ(t)·h(t)` and `φ(t)·ĥ(t)` from `ln t`.
    pub fn weighted_terms_log(&self, log_t: f64) -> (f64, f64) {
        let phi = phi_log(log_t, self.d);
        (phi * self.h_log(log_t), phi * self.majorant_log(log_t))
    }

    fn check_t(t: f64) -> Result<f64> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::domain(format!("gauge argument must be in (0,1), got {t}")));
        }
        Ok(t.ln())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_n(1.0, 2).unwrap(), 0.0);
        assert_eq!(kernel_n(1.0, 5).unwrap(), 1.0);
        assert_relative_eq!(kernel_n(0.1, 3).unwrap(), 10.0, max_relative = 1e-12);
        assert!(kernel_n(0.0, 3).is_err());
        assert!(kernel_n(-1.0, 2).is_err());
        // evaluation is allowed beyond t = 1 in the plane
        assert!(kernel_n(2.0, 2).unwrap() < 0.0);
    }

    #[test]
    fn capacity_examples() {
        assert_relative_eq!(capacity_phi((-5.0f64).exp(), 2).unwrap(), 0.2, max_relative = 1e-12);
        assert_relative_eq!(capacity_phi(0.1, 3).unwrap(), 0.1, max_relative = 1e-12);
        assert_relative_eq!(capacity_phi(0.5, 4).unwrap(), 0.25, max_relative = 1e-12);
        assert!(capacity_phi(1.0, 2).is_err());
        assert!(capacity_phi(1.5, 2).is_err());
    }

    #[test]
    fn annulus_examples() {
        let p2 = annulus_hit_exact(1.0 / 7.0, 0.5, 2).unwrap();
        assert_relative_eq!(p2, 2f64.ln() / 7f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(p2, 0.356207, epsilon = 5e-7);
        assert_relative_eq!(annulus_hit_exact(1.0 / 7.0, 0.5, 3).unwrap(), 1.0 / 6.0, max_relative = 1e-12);
        assert_eq!(annulus_hit_exact(1.0 / 7.0, 1.0 / 7.0, 3).unwrap(), 1.0);
        assert_eq!(annulus_hit_exact(0.2, 1.0, 2).unwrap(), 0.0);
        assert!(annulus_hit_exact(1.0, 1.0, 3).is_err());
        assert!(annulus_hit_exact(0.3, 0.2, 3).is_err());
        assert!(annulus_hit_exact(0.3, 1.2, 3).is_err());
        // (2^{d-2}-1)/(7^{d-2}-1)
        for d in 3..=5 {
            let k = d as i32 - 2;
            let want = (2f64.powi(k) - 1.0) / (7f64.powi(k) - 1.0);
            assert_relative_eq!(eta(d).unwrap(), want, max_relative = 1e-12);
        }
    }

    #[test]
    fn potential_examples() {
        let (big_r, rho) = (0.6, 0.1);
        assert_eq!(equilibrium_potential_sigma(0.8, big_r, rho, 3).unwrap(), 0.0);
        let plateau = 1.0 / 0.6 - 1.0 / 0.8;
        assert_relative_eq!(
            equilibrium_potential_sigma(0.5, big_r, rho, 3).unwrap(),
            plateau,
            max_relative = 1e-12
        );
        assert_relative_eq!(plateau, 0.41667, epsilon = 1e-5);
        // origin takes the constant branch (N(0) = ∞)
        assert_relative_eq!(
            equilibrium_potential_sigma(0.0, big_r, rho, 2).unwrap(),
            (0.8f64 / 0.6).ln(),
            max_relative = 1e-12
        );
        assert!(equilibrium_potential_sigma(0.81, big_r, rho, 3).is_err());
        assert!(equilibrium_potential_sigma(-0.1, big_r, rho, 3).is_err());
    }

    #[test]
    fn c3_sandwich_is_bounded() {
        for d in 2..=4 {
            let c3 = measure_c3(d, 24).unwrap();
            assert!(c3.is_finite() && c3 >= 1.0);
            // a denser random check against the measured constant, with a
            // small allowance for grid points not covering the extremes
            let c3 = c3 * 1.05;
            let mut state = 12345u64;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            for _ in 0..20_000 {
                let big_r = 0.5 + 0.5 * next();
                let rho = (1.0 / 3.0) * (1e-6f64).powf(next());
                let y = big_r - rho + 2.0 * rho * next();
                let g = equilibrium_potential_sigma(y, big_r, rho, d).unwrap();
                assert!(g >= rho / c3 && g <= c3 * rho, "d={d} R={big_r} ρ={rho} y={y}");
            }
        }
    }

    #[test]
    fn majorant_of_monotone_gauge_is_identity() {
        let g = GaugeSet::new(2, Gauge::PhiPower { eps: 0.5 }).unwrap();
        for &t in &[1e-9, 1e-3, 0.2, 0.9] {
            assert_eq!(g.majorant(t).unwrap(), g.h(t).unwrap());
        }
    }

    #[test]
    fn majorant_of_oscillating_gauge() {
        let g = GaugeSet::new(3, Gauge::custom("sin", false, |s: f64| (1.0 / s).sin().abs())).unwrap();
        let t = 0.5;
        assert!(g.majorant(t).unwrap() >= g.h(t).unwrap());
        assert!(g.majorant(t).unwrap() > 0.99);
    }

    #[test]
    fn majorant_of_step_gauge_matches_brute_force() {
        let h = |s: f64| if s < 0.1 { s } else { 0.05 };
        let g = GaugeSet::new(2, Gauge::custom("step", false, h)).unwrap();
        // dense linear grid over (0, 0.5]
        let n = 1_000_000;
        let brute = (1..=n).map(|i| h(0.5 * i as f64 / n as f64)).fold(0.0, f64::max);
        assert_relative_eq!(brute, 0.1, max_relative = 1e-5);
        let got = g.majorant(0.5).unwrap();
        assert!(got <= 0.1);
        assert_relative_eq!(got, brute, max_relative = 1e-2);
    }

    #[test]
    fn loglog_gauge_is_in_unit_interval_and_vanishes() {
        for d in 2..=3 {
            let g = GaugeSet::new(d, Gauge::LogLog).unwrap();
            let mut prev = 0.0;
            for k in (1..200).rev() {
                let log_t = -(k as f64).exp2();
                let h = g.h_log(log_t);
                assert!(h > 0.0 && h <= 1.0);
                assert!(h >= prev);
                prev = h;
            }
            assert!(g.h_log(-1e300) < 0.2);
        }
    }

    #[test]
    fn tabulated_gauge_interpolates_in_log_t() {
        let g = Gauge::tabulated(vec![(1e-4, 0.1), (1e-2, 0.3)]).unwrap();
        let gs = GaugeSet::new(3, g).unwrap();
        assert_relative_eq!(gs.h(1e-3).unwrap(), 0.2, max_relative = 1e-12);
        assert_eq!(gs.h(1e-9).unwrap(), 0.1);
        assert_eq!(gs.h(0.5).unwrap(), 0.3);
    }

    #[test]
    fn gauge_parsing() {
        assert_eq!(Gauge::parse("phi-eps:0.5").unwrap(), Gauge::PhiPower { eps: 0.5 });
        assert_eq!(Gauge::parse("loglog").unwrap(), Gauge::LogLog);
        assert!(Gauge::parse("phi-eps:-1").is_err());
        assert!(Gauge::parse("cubic").is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        std::fs::write(&path, "t,h\n0.001,0.01\n0.1,0.2\n").unwrap();
        let g = Gauge::parse(&format!("file:{}", path.display())).unwrap();
        assert!(matches!(g, Gauge::Tabulated { ref knots } if knots.len() == 2));
    }

    proptest! {
        #[test]
        fn phi_times_n_is_one(t in 1e-300f64..0.999, d in 2usize..=5) {
            let prod = capacity_phi(t, d).unwrap() * kernel_n(t, d).unwrap();
            prop_assert!((prod - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn annulus_monotone(s in 0.01f64..0.9, a in 0.0f64..1.0, b in 0.0f64..1.0, d in 2usize..=4) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let z1 = s + (1.0 - s) * lo;
            let z2 = s + (1.0 - s) * hi;
            let p1 = annulus_hit_exact(s, z1, d).unwrap();
            let p2 = annulus_hit_exact(s, z2, d).unwrap();
            prop_assert!(p1 >= p2);
            // larger inner ball cannot lower the probability
            let s2 = s.min(z1) * 0.5 + s * 0.5;
            prop_assert!(annulus_hit_exact(s2.min(s), z1, d).unwrap() <= p1 + 1e-15);
        }
    }
}
