use serde::{Deserialize, Serialize};

use super::layer::{layer_seed, rho0_threshold, LayerKind, LayerSpec, SphereLayer};
use super::unit_ball::build_budgeted_layer;
use crate::error::{Error, Result};
use crate::gauge::GaugeSet;
use crate::point::Point;

pub const DEFAULT_MAX_LAYERS: usize = 64;

/// Inputs of an annulus fill around `center`: bubbles go in
/// `B(center, a) ∖ B̄(center, a′)` and must be hit with probability at least
/// `γ` from `B̄(center, a′)` before leaving `B(center, a)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnulusRequest {
    pub center: Point,
    pub a: f64,
    pub a_prime: f64,
    pub gamma: f64,
    pub delta_y: f64,
    /// Per-layer hitting probability to plan with (a lower confidence bound).
    pub kappa_hat: f64,
    pub max_layers: usize,
}

/// A filled annulus. Its layers are `first_layer..first_layer + layer_count`
/// in the owning configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusGroup {
    pub level: u32,
    pub center: Point,
    pub a: f64,
    pub a_prime: f64,
    pub gamma: f64,
    pub delta_y: f64,
    pub kappa_hat: f64,
    pub first_layer: usize,
    pub layer_count: usize,
    #[serde(with = "crate::serde_u128")]
    pub bubble_count: u128,
    pub weighted_sum: f64,
    pub majorant_sum: f64,
}

/// Smallest `L ≥ 1` with `(1 − κ̂)^L ≤ 1 − γ`.
pub fn layer_count_for(gamma: f64, kappa_hat: f64, max_layers: usize) -> Result<usize> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("γ must lie in (0,1), got {gamma}")));
    }
    if !(kappa_hat > 0.0 && kappa_hat <= 1.0) {
        return Err(Error::invalid(format!("κ̂ must lie in (0,1], got {kappa_hat}")));
    }
    if kappa_hat >= 1.0 {
        return Ok(1);
    }
    let need = ((-gamma).ln_1p() / (-kappa_hat).ln_1p()).ceil().max(1.0);
    if need > max_layers as f64 {
        return Err(Error::infeasible(format!(
            "κ̂ = {kappa_hat} needs {need} layers to reach γ = {gamma} (cap {max_layers})"
        )));
    }
    Ok(need as usize)
}

/// Layer stack for `B(0,1) ∖ B̄(0,τ)` placed at scale `a` around the origin.
/// The `L` spheres `R_j = τ + g(j + 1/2)`, `g = (1 − τ)/(L + 1)`, have gap
/// `ρ = g/2`, so each layer is killed exactly on the next sphere.
pub fn reference_stack(
    tau: f64,
    layers: usize,
    a: f64,
    delta_y: f64,
    gauges: &GaugeSet,
    seed: u64,
) -> Result<Vec<SphereLayer>> {
    let d = gauges.dim();
    let g = (1.0 - tau) / (layers as f64 + 1.0);
    let rho = g / 2.0;
    let rho0 = rho0_threshold(rho, d)?;
    let mut out = Vec::with_capacity(layers);
    for j in 0..layers {
        let big_r = tau + g * (j as f64 + 0.5);
        let cap = rho0.min(rho).min((1.0 - big_r) / 6.0);
        let budget = delta_y * 0.5f64.powi(j as i32 + 1);
        let spec = LayerSpec {
            index: j as u32,
            kind: LayerKind::Annulus,
            center: Point::origin(d),
            scale: a,
            radius: big_r,
            rho,
            log_r: f64::NAN,
            probe_radius: big_r + rho,
            kill_radius: big_r + 2.0 * rho,
            budget: Some(budget),
        };
        out.push(build_budgeted_layer(
            spec,
            cap.ln(),
            budget,
            gauges,
            layer_seed(seed, j as u64),
            &format!("annulus layer {j}"),
        )?);
    }
    Ok(out)
}

pub(crate) fn validate_request(req: &AnnulusRequest, d: usize) -> Result<()> {
    if req.center.dim() != d {
        return Err(Error::invalid("annulus center has the wrong dimension"));
    }
    if !(req.a_prime > 0.0 && req.a_prime < req.a && req.a <= 1.0) {
        return Err(Error::invalid(format!(
            "need 0 < a′ < a ≤ 1, got a′ = {}, a = {}",
            req.a_prime, req.a
        )));
    }
    if !(req.delta_y > 0.0) {
        return Err(Error::invalid(format!("δ_y must be > 0, got {}", req.delta_y)));
    }
    Ok(())
}

pub(crate) fn place(stack: &[SphereLayer], center: Point) -> Vec<SphereLayer> {
    stack
        .iter()
        .map(|l| SphereLayer {
            center,
            ..l.clone()
        })
        .collect()
}

pub(crate) fn group_record(req: &AnnulusRequest, level: u32, first_layer: usize, layers: &[SphereLayer]) -> AnnulusGroup {
    AnnulusGroup {
        level,
        center: req.center,
        a: req.a,
        a_prime: req.a_prime,
        gamma: req.gamma,
        delta_y: req.delta_y,
        kappa_hat: req.kappa_hat,
        first_layer,
        layer_count: layers.len(),
        bubble_count: layers.iter().map(SphereLayer::count).sum(),
        weighted_sum: layers.iter().map(|l| l.weighted_sum).sum(),
        majorant_sum: layers.iter().map(|l| l.majorant_sum).sum(),
    }
}

/// Fills one annulus. Layer `j` gets the budget `2^(−(j+1))·δ_y`, so the
/// group's weighted sum stays below `δ_y`.
pub fn fill_annulus(req: &AnnulusRequest, gauges: &GaugeSet, seed: u64) -> Result<(AnnulusGroup, Vec<SphereLayer>)> {
    validate_request(req, gauges.dim())?;
    let count = layer_count_for(req.gamma, req.kappa_hat, req.max_layers)?;
    let stack = reference_stack(req.a_prime / req.a, count, req.a, req.delta_y, gauges, seed)?;
    let layers = place(&stack, req.center);
    Ok((group_record(req, 0, 0, &layers), layers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::Gauge;

    #[test]
    fn layer_counts() {
        assert_eq!(layer_count_for(0.5, 0.2, 64).unwrap(), 4);
        assert_eq!(layer_count_for(1e-12, 0.2, 64).unwrap(), 1);
        assert_eq!(layer_count_for(0.5, 1.0, 64).unwrap(), 1);
        let err = layer_count_for(0.999, 1e-4, 64).unwrap_err();
        assert!(err.to_string().contains("layers"), "{err}");
        assert!(layer_count_for(0.5, 0.0, 64).is_err());
    }

    fn request(center: Point) -> AnnulusRequest {
        AnnulusRequest {
            center,
            a: 0.1,
            a_prime: 0.1 * 6.0 / 7.0,
            gamma: 0.5,
            delta_y: 0.01,
            kappa_hat: 0.2,
            max_layers: DEFAULT_MAX_LAYERS,
        }
    }

    #[test]
    fn fill_invariants() {
        for d in [2, 3] {
            let g = GaugeSet::new(d, Gauge::PhiPower { eps: 2.0 }).unwrap();
            let req = request(Point::origin(d));
            let (group, layers) = fill_annulus(&req, &g, 3).unwrap();
            assert_eq!(group.layer_count, 4);
            assert!(group.weighted_sum < req.delta_y);
            let mut prev = req.a_prime;
            for l in &layers {
                assert!(l.placed_radius() > prev);
                prev = l.placed_radius();
                let s = l.bubble_radius();
                assert!(s < (req.a - l.placed_radius()) / 6.0);
            }
            assert!(prev < req.a);
        }
    }

    #[test]
    fn translation_invariance() {
        let g = GaugeSet::new(2, Gauge::PhiPower { eps: 2.0 }).unwrap();
        let y = Point::from_slice(&[0.3, -1.2]).unwrap();
        let (_, at_origin) = fill_annulus(&request(Point::origin(2)), &g, 3).unwrap();
        let (_, at_y) = fill_annulus(&request(y), &g, 3).unwrap();
        for (l0, ly) in at_origin.iter().zip(&at_y) {
            assert_eq!(l0.log_r, ly.log_r);
            let c0 = l0.centers(1 << 20).unwrap();
            let cy = ly.centers(1 << 20).unwrap();
            for (p, q) in c0.iter().zip(&cy) {
                assert!((*p + y).dist(q) < 1e-12);
            }
        }
    }
}
