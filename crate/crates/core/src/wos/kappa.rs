use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::walk::{wos_hit_probability, WosEstimate, WosParams};
use crate::builder::{ChampagneConfig, LayerKind, SphereLayer, MATERIALIZE_LIMIT};
use crate::error::{Error, Result};
use crate::gauge::{kernel_n_log, phi_log};
use crate::geometry::{Bubble, BubbleSet, Domain};
use crate::point::Point;
use crate::sphere_design::{fibonacci_sphere, gaussian_direction};

/// Hitting estimate at one probe point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeEstimate {
    pub point: Point,
    pub estimate: WosEstimate,
}

/// Per-layer hitting probability measured on the layer's probe sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaEstimate {
    pub layer: usize,
    /// Smallest lower confidence bound over the probes.
    pub kappa_hat: f64,
    /// Estimate and upper bound at the probe attaining `kappa_hat`.
    pub kappa_point: f64,
    pub kappa_high: f64,
    /// Standard deviation at that probe.
    pub sigma: f64,
    pub probes: Vec<ProbeEstimate>,
}

impl KappaEstimate {
    fn from_probes(layer: usize, probes: Vec<ProbeEstimate>) -> Self {
        let worst = probes
            .iter()
            .min_by(|a, b| a.estimate.ci_low.total_cmp(&b.estimate.ci_low))
            .map(|p| p.estimate);
        let (kappa_hat, kappa_point, kappa_high, sigma) = match worst {
            Some(e) => (e.ci_low, e.p_hat, e.ci_high, e.sigma()),
            None => (0.0, 0.0, 0.0, 0.0),
        };
        KappaEstimate {
            layer,
            kappa_hat,
            kappa_point,
            kappa_high,
            sigma,
            probes,
        }
    }
}

/// `count` deterministic unit directions in dimension `d`.
pub fn probe_directions(d: usize, count: usize, seed: u64) -> Vec<Point> {
    match d {
        2 => (0..count)
            .map(|i| {
                let a = 2.0 * PI * (i as f64 + 0.5) / count as f64;
                Point::padded(&[a.cos(), a.sin()], 2)
            })
            .collect(),
        3 => fibonacci_sphere(count),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count).map(|_| gaussian_direction(&mut rng, d)).collect()
        }
    }
}

/// Estimates the probability of hitting `obstacles` before leaving
/// `B(center, kill)` from probe points on `∂B(center, probe)`. A probe inside
/// a bubble is replaced by a random point of the same sphere.
pub fn probe_kappa(
    center: &Point,
    probe: f64,
    kill: f64,
    obstacles: &BubbleSet,
    probes: usize,
    params: &WosParams,
) -> Result<Vec<ProbeEstimate>> {
    let d = center.dim();
    if !(probe > 0.0 && probe < kill) {
        return Err(Error::invalid(format!("need 0 < probe radius {probe} < kill radius {kill}")));
    }
    let domain = Domain::ball(*center, kill)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0xa5a5);
    let mut out = Vec::with_capacity(probes);
    for (i, dir) in probe_directions(d, probes, params.seed).into_iter().enumerate() {
        let mut z = center.offset(&dir, probe);
        let mut tries = 0;
        while obstacles.nearest(&z).is_some_and(|(dist, _)| dist <= 0.0) {
            tries += 1;
            if tries > 1000 {
                return Err(Error::infeasible("could not place a probe outside the bubbles"));
            }
            z = center.offset(&gaussian_direction(&mut rng, d), probe);
        }
        let estimate = wos_hit_probability(&domain, obstacles, &z, &params.with_seed(params.seed.wrapping_add(i as u64)))?;
        out.push(ProbeEstimate { point: z, estimate });
    }
    Ok(out)
}

/// Bubbles of a single layer.
pub fn layer_bubbles(layer: &SphereLayer, layer_id: usize) -> Result<BubbleSet> {
    let s = layer.bubble_radius();
    if !(s > 0.0) {
        return Err(Error::infeasible(format!("layer {layer_id} has a bubble radius below the smallest double")));
    }
    let centers = layer.centers(MATERIALIZE_LIMIT)?;
    Ok(BubbleSet::new(
        centers
            .into_iter()
            .map(|c| Bubble {
                center: c,
                radius: s,
                layer_id: layer_id as u32,
                clearance: f64::NAN,
            })
            .collect(),
    ))
}

/// `κ̂` of one layer, alone: walks start on its probe sphere and are killed
/// on its kill sphere.
pub fn kappa_for_layer(layer: &SphereLayer, layer_id: usize, probes: usize, params: &WosParams) -> Result<KappaEstimate> {
    let obstacles = layer_bubbles(layer, layer_id)?;
    let p = probe_kappa(
        &layer.center,
        layer.scale * layer.probe_radius,
        layer.scale * layer.kill_radius,
        &obstacles,
        probes,
        params,
    )?;
    Ok(KappaEstimate::from_probes(layer_id, p))
}

pub fn layer_kappa_estimate(cfg: &ChampagneConfig, layer: usize, probes: usize, params: &WosParams) -> Result<KappaEstimate> {
    let l = cfg
        .layers
        .get(layer)
        .ok_or_else(|| Error::invalid(format!("config has no layer {layer}")))?;
    kappa_for_layer(l, layer, probes, params)
}

/// `κ̂` of a layer from which every bubble has been removed.
pub fn empty_layer_kappa(layer: &SphereLayer, probes: usize, params: &WosParams) -> Result<KappaEstimate> {
    let p = probe_kappa(
        &layer.center,
        layer.scale * layer.probe_radius,
        layer.scale * layer.kill_radius,
        &BubbleSet::default(),
        probes,
        params,
    )?;
    Ok(KappaEstimate::from_probes(usize::MAX, p))
}

/// Smallest `κ̂` over the layers of a reference annulus stack.
pub fn stack_kappa(stack: &[SphereLayer], probes: usize, params: &WosParams) -> Result<(f64, Vec<KappaEstimate>)> {
    let mut all = Vec::with_capacity(stack.len());
    for (i, l) in stack.iter().enumerate() {
        all.push(kappa_for_layer(l, i, probes, &params.with_seed(params.seed.wrapping_add(1000 * i as u64)))?);
    }
    let min = all.iter().map(|k| k.kappa_hat).fold(f64::INFINITY, f64::min);
    Ok((min, all))
}

/// A walk estimate next to a bubble of a one-bubble layer together with the
/// two analytic lower bounds for it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinorantProbe {
    pub point: Point,
    /// `|z − x|` to the bubble center.
    pub distance: f64,
    /// `φ(r)(N(|z − x|) − N(3β))`.
    pub minorant: f64,
    /// `(2/3)k^(−1)`.
    pub floor: f64,
    pub estimate: WosEstimate,
}

impl MinorantProbe {
    pub fn dominates_floor(&self, sigmas: f64) -> bool {
        self.estimate.p_hat + sigmas * self.estimate.sigma() >= self.floor
    }

    pub fn dominates_minorant(&self, sigmas: f64) -> bool {
        self.estimate.p_hat + sigmas * self.estimate.sigma() >= self.minorant
    }
}

/// Walks started at `probes` points within `β` of the first bubble of a
/// one-bubble layer, killed on the layer's kill sphere.
pub fn one_bubble_minorant(cfg: &ChampagneConfig, layer: usize, probes: usize, params: &WosParams) -> Result<Vec<MinorantProbe>> {
    let l = cfg
        .layers
        .get(layer)
        .ok_or_else(|| Error::invalid(format!("config has no layer {layer}")))?;
    if l.kind != LayerKind::OneBubble {
        return Err(Error::invalid(format!("layer {layer} is not a one-bubble layer")));
    }
    let d = l.d();
    let k = l.index as f64;
    let obstacles = layer_bubbles(l, layer)?;
    let x = obstacles.get(0).center;
    let r = l.bubble_radius();
    let beta = l.beta * l.scale;
    let domain = Domain::ball(l.center, l.kill_radius * l.scale)?;
    let n3b = kernel_n_log((3.0 * beta).ln(), d);
    let phi = phi_log(l.log_s(), d);
    let dirs = probe_directions(d, probes, params.seed);
    let mut out = Vec::with_capacity(probes);
    for (i, dir) in dirs.iter().enumerate() {
        // distances spread over (2r, β)
        let t = (i as f64 + 0.5) / probes as f64;
        let dist = 2.0 * r + (0.95 * beta - 2.0 * r) * t;
        let z = x.offset(dir, dist);
        let minorant = phi * (kernel_n_log(dist.ln(), d) - n3b);
        let estimate = wos_hit_probability(&domain, &obstacles, &z, &params.with_seed(params.seed.wrapping_add(i as u64)))?;
        out.push(MinorantProbe {
            point: z,
            distance: dist,
            minorant,
            floor: 2.0 / (3.0 * k),
            estimate,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{build_layer, build_one_bubble_sequence, OneBubbleParams};
    use crate::gauge::{Gauge, GaugeSet};

    fn params() -> WosParams {
        WosParams::new(1e-4, 2000, 3)
    }

    #[test]
    fn layer_kappa_is_positive_and_empty_layer_zero() {
        let g = GaugeSet::new(2, Gauge::PhiPower { eps: 1.0 }).unwrap();
        let layer = build_layer(0.6, 0.1, 1e-4, &g, 1).unwrap();
        let k = kappa_for_layer(&layer, 0, 4, &params()).unwrap();
        assert_eq!(k.probes.len(), 4);
        assert!(k.kappa_hat > 0.0);
        assert!(k.kappa_hat <= k.kappa_point && k.kappa_point <= k.kappa_high);
        for p in &k.probes {
            assert!((p.point.norm() - 0.7).abs() < 1e-12);
        }
        let empty = empty_layer_kappa(&layer, 4, &params()).unwrap();
        assert_eq!(empty.kappa_hat, 0.0);
    }

    #[test]
    fn probe_directions_are_unit() {
        for d in 2..=5 {
            let dirs = probe_directions(d, 16, 1);
            assert_eq!(dirs.len(), 16);
            for u in dirs {
                assert!((u.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn walks_dominate_the_superharmonic_minorant() {
        let cfg = build_one_bubble_sequence(2, &OneBubbleParams { k_start: 10, k_end: 10, eps: 1.0, seed: 0 }).unwrap();
        let probes = one_bubble_minorant(&cfg, 0, 6, &WosParams::new(1e-4, 4000, 8)).unwrap();
        for p in &probes {
            assert!(p.distance < cfg.layers[0].beta);
            if p.minorant > 0.0 && p.minorant < 1.0 {
                assert!(p.dominates_minorant(3.0), "{p:?}");
            }
            assert!(p.dominates_floor(3.0), "{p:?}");
        }
    }
}
