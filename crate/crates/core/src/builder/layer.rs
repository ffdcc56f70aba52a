use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::{kernel_n_log, ln_phi_log, GaugeSet};
use crate::point::{check_dim, Point};
use crate::sphere_design::{design_sphere_points, SpherePointSet};

/// Largest radius bound below which `r < β/3` holds for a layer with gap `ρ`.
pub fn rho0_threshold(rho: f64, d: usize) -> Result<f64> {
    check_dim(d)?;
    if !(rho > 0.0 && rho < 1.0 / 3.0) {
        return Err(Error::domain(format!("ρ must lie in (0, 1/3), got {rho}")));
    }
    let second = if d == 2 {
        rho * rho / 18.0
    } else {
        3f64.powi(1 - d as i32) * rho
    };
    Ok(second.min(rho / 3.0))
}

/// `β = (φ(r)ρ)^(1/(d−1))` from `ln r`.
pub fn beta_from_log_r(log_r: f64, rho: f64, d: usize) -> f64 {
    if d == 2 {
        rho / -log_r
    } else {
        ((ln_phi_log(log_r, d) + rho.ln()) / (d as f64 - 1.0)).exp()
    }
}

/// Seed for layer `k` derived from the build seed.
pub fn layer_seed(seed: u64, k: u64) -> u64 {
    seed ^ (k.wrapping_add(1)).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    UnitBall,
    OneBubble,
    Annulus,
}

/// Bubbles `B̄(center + scale·x, scale·r)` for `x` in a design on
/// `∂B(0, R)`.
///
/// `R`, `ρ`, `r` and `β` are in the layer's own coordinates, where the
/// construction lives in the unit ball; `center` and `scale` place it in the
/// domain. The capacity sums use the placed radius `scale·r`. The radius is
/// stored as `ln r` because admissible radii can be far below the smallest
/// positive double.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereLayer {
    pub index: u32,
    pub kind: LayerKind,
    pub center: Point,
    pub scale: f64,
    pub radius: f64,
    pub rho: f64,
    pub log_r: f64,
    pub beta: f64,
    /// Sphere on which this layer's hitting probability is probed, and the
    /// sphere where walks are killed (both in layer coordinates).
    pub probe_radius: f64,
    pub kill_radius: f64,
    pub points: SpherePointSet,
    /// `#X·φ(s)`, `#X·φ(s)h(s)` and `#X·φ(s)ĥ(s)` with `s = scale·r`.
    pub capacity_sum: f64,
    pub weighted_sum: f64,
    pub majorant_sum: f64,
    /// Budget the majorant sum was required to stay below, if any.
    pub budget: Option<f64>,
}

impl SphereLayer {
    pub fn d(&self) -> usize {
        self.points.d
    }

    pub fn count(&self) -> u128 {
        self.points.count
    }

    /// `ln` of the placed bubble radius.
    pub fn log_s(&self) -> f64 {
        self.scale.ln() + self.log_r
    }

    /// Placed bubble radius (0 if it underflows).
    pub fn bubble_radius(&self) -> f64 {
        self.log_s().exp()
    }

    /// Placed sphere radius.
    pub fn placed_radius(&self) -> f64 {
        self.scale * self.radius
    }

    /// Recomputes the three sums from the count and radius.
    pub(crate) fn refresh_sums(&mut self, gauges: &GaugeSet) {
        let (capacity, weighted, majorant) = layer_sums(self.points.count, self.log_s(), gauges);
        self.capacity_sum = capacity;
        self.weighted_sum = weighted;
        self.majorant_sum = majorant;
    }

    /// Placed bubble centers.
    pub fn centers(&self, limit: u128) -> Result<Vec<Point>> {
        let pts = self.points.materialize(limit)?;
        Ok(pts
            .into_iter()
            .map(|x| self.center + x * self.scale)
            .collect())
    }
}

pub(crate) fn layer_sums(count: u128, log_s: f64, gauges: &GaugeSet) -> (f64, f64, f64) {
    let d = gauges.dim();
    let n = count as f64;
    let phi = 1.0 / kernel_n_log(log_s, d);
    let h = gauges.h_log(log_s);
    let hh = gauges.majorant_log(log_s);
    (n * phi, n * phi * h, n * phi * hh)
}

/// Everything needed to build one layer except the gauge and seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerSpec {
    pub index: u32,
    pub kind: LayerKind,
    pub center: Point,
    pub scale: f64,
    pub radius: f64,
    pub rho: f64,
    pub log_r: f64,
    pub probe_radius: f64,
    pub kill_radius: f64,
    pub budget: Option<f64>,
}

/// Builds the layer `(R, ρ, r)` centered at the origin with unit scale.
pub fn build_layer(radius: f64, rho: f64, r: f64, gauges: &GaugeSet, seed: u64) -> Result<SphereLayer> {
    if !(r > 0.0) {
        return Err(Error::invalid(format!("bubble radius must be > 0, got {r}")));
    }
    let d = gauges.dim();
    build_layer_log(
        &LayerSpec {
            index: 0,
            kind: LayerKind::UnitBall,
            center: Point::origin(d),
            scale: 1.0,
            radius,
            rho,
            log_r: r.ln(),
            probe_radius: radius + rho,
            kill_radius: radius + 2.0 * rho,
            budget: None,
        },
        gauges,
        seed,
    )
}

/// Builds a layer from its specification, checking `r < ρ₀(ρ)` (and hence
/// `r < β/3`).
pub fn build_layer_log(spec: &LayerSpec, gauges: &GaugeSet, seed: u64) -> Result<SphereLayer> {
    let d = gauges.dim();
    let rho0 = rho0_threshold(spec.rho, d)?;
    if !(spec.radius > 0.0) {
        return Err(Error::invalid(format!("layer radius must be > 0, got {}", spec.radius)));
    }
    if !(spec.log_r < rho0.ln()) {
        return Err(Error::invalid(format!(
            "bubble radius r = exp({}) is not below ρ₀ = {rho0} (ρ = {}, d = {d})",
            spec.log_r, spec.rho
        )));
    }
    let beta = beta_from_log_r(spec.log_r, spec.rho, d);
    if !(spec.log_r < beta.ln() - 3f64.ln()) {
        return Err(Error::Invariant(format!(
            "r < β/3 fails for r = exp({}), β = {beta}",
            spec.log_r
        )));
    }
    let points = design_sphere_points(spec.radius, beta, d, seed)?;
    let mut layer = SphereLayer {
        index: spec.index,
        kind: spec.kind,
        center: spec.center,
        scale: spec.scale,
        radius: spec.radius,
        rho: spec.rho,
        log_r: spec.log_r,
        beta,
        probe_radius: spec.probe_radius,
        kill_radius: spec.kill_radius,
        points,
        capacity_sum: 0.0,
        weighted_sum: 0.0,
        majorant_sum: 0.0,
        budget: spec.budget,
    };
    layer.refresh_sums(gauges);
    Ok(layer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::{capacity_phi, Gauge};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gauges(d: usize) -> GaugeSet {
        GaugeSet::new(d, Gauge::PhiPower { eps: 0.5 }).unwrap()
    }

    #[test]
    fn threshold_examples() {
        assert_relative_eq!(rho0_threshold(0.3, 3).unwrap(), 0.3 / 9.0, max_relative = 1e-15);
        assert_relative_eq!(rho0_threshold(0.3, 2).unwrap(), 0.005, max_relative = 1e-12);
        assert!(rho0_threshold(1.0 / 3.0, 2).is_err());
        assert!(rho0_threshold(0.0, 3).is_err());
    }

    #[test]
    fn threshold_is_sufficient() {
        // brute force: β recomputed from its definition for r below ρ₀
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 2..=5 {
            for _ in 0..1000 {
                let rho = rng.random_range(1e-4..(1.0 / 3.0));
                let r0 = rho0_threshold(rho, d).unwrap();
                let r = r0 * rng.random_range(1e-6..1.0);
                let beta = (capacity_phi(r, d).unwrap() * rho).powf(1.0 / (d as f64 - 1.0));
                assert!(r < beta / 3.0, "d={d} ρ={rho} r={r} β={beta}");
            }
        }
    }

    #[test]
    fn beta_matches_definition() {
        for d in 2..=4 {
            let r: f64 = 1e-4;
            let want = (capacity_phi(r, d).unwrap() * 0.1).powf(1.0 / (d as f64 - 1.0));
            assert_relative_eq!(beta_from_log_r(r.ln(), 0.1, d), want, max_relative = 1e-12);
        }
    }

    #[test]
    fn planar_layer_example() {
        let r = (-20.0f64).exp();
        let layer = build_layer(0.6, 0.1, r, &gauges(2), 1).unwrap();
        assert_relative_eq!(layer.beta, 0.005, max_relative = 1e-12);
        assert_eq!(layer.count(), (std::f64::consts::PI * 0.6 / 0.005).ceil() as u128);
        // capacity sum close to 1/ρ up to the design constant
        assert!(layer.capacity_sum > 1.0 / 0.1 && layer.capacity_sum < 5.0 / 0.1);
    }

    #[test]
    fn spatial_layer_example() {
        let layer = build_layer(0.6, 0.1, 1e-4, &gauges(3), 1).unwrap();
        assert_relative_eq!(layer.beta, 1e-5f64.sqrt(), max_relative = 1e-12);
        assert!(1e-4 < layer.beta / 3.0);
        assert!(layer.points.satisfies_invariants());
    }

    #[test]
    fn radius_at_threshold_is_rejected() {
        let r0 = rho0_threshold(0.1, 3).unwrap();
        let err = build_layer(0.6, 0.1, r0, &gauges(3), 0).unwrap_err();
        assert!(err.to_string().contains("ρ₀"));
        assert!(build_layer(0.6, 0.1, r0 * 0.999, &gauges(3), 0).is_ok());
    }
}
