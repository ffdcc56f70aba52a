use serde::{Deserialize, Serialize};

use super::kappa::{layer_kappa_estimate, KappaEstimate};
use super::walk::{wos_hit_probability, WosEstimate, WosParams};
use crate::builder::{ladder_bound, BuildKind, ChampagneConfig};
use crate::error::{Error, Result};
use crate::point::Point;

#[derive(Clone, Debug, PartialEq)]
pub struct ReportOptions {
    /// Layers whose `κ̂` is measured; `None` measures all of them.
    pub layers: Option<Vec<usize>>,
    pub probes_per_layer: usize,
    pub layer_params: WosParams,
    pub direct_params: WosParams,
    /// Start points of the full-configuration runs.
    pub starts: Vec<Point>,
    /// Repeat each direct run with `ε/2` to expose the band bias.
    pub sensitivity: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectEstimate {
    pub start: Point,
    pub estimate: WosEstimate,
    pub halved_epsilon: Option<WosEstimate>,
    /// `3σ` of the direct estimate combined with the propagated `κ̂` errors.
    pub margin: f64,
    /// Whether `p̂ ≥ ladder − margin`, when a ladder bound applies.
    pub ladder_holds: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnavoidabilityReport {
    pub layers: Vec<KappaEstimate>,
    /// `1 − ∏(1 − κ̂_k)` over the measured layers, for configurations whose
    /// layers are nested around one center and all measured.
    pub ladder_bound: Option<f64>,
    pub direct: Vec<DirectEstimate>,
}

impl UnavoidabilityReport {
    /// False if any direct estimate falls below the ladder bound by more than
    /// its margin.
    pub fn passed(&self) -> bool {
        self.direct.iter().all(|d| d.ladder_holds != Some(false))
    }
}

/// Combined standard deviation of `p̂ − (1 − ∏(1 − κ_k))`: the ladder's
/// error is propagated to first order through `∂/∂κ_k = ∏_{j≠k}(1 − κ_j)`.
pub fn combined_sigma(direct_sigma: f64, kappas: &[f64], sigmas: &[f64]) -> f64 {
    let mut total = direct_sigma * direct_sigma;
    for k in 0..kappas.len() {
        let others: f64 = kappas
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, &kj)| 1.0 - kj)
            .product();
        total += (others * sigmas[k]).powi(2);
    }
    total.sqrt()
}

/// Deepest point of the domain on a grid, used when no start is given.
pub fn default_starts(cfg: &ChampagneConfig) -> Vec<Point> {
    if cfg.kind != BuildKind::General {
        return vec![Point::origin(cfg.d)];
    }
    let bb = cfg.domain.bounding_box();
    let d = cfg.d;
    let res: usize = if d == 2 { 64 } else { 16 };
    let mut best = (f64::NEG_INFINITY, Point::origin(d));
    let total = res.pow(d as u32);
    for idx in 0..total {
        let mut p = Point::origin(d);
        let mut rest = idx;
        for i in 0..d {
            let t = (rest % res) as f64 + 0.5;
            rest /= res;
            p.set(i, bb.min.get(i) + (bb.max.get(i) - bb.min.get(i)) * t / res as f64);
        }
        let depth = -cfg.domain.signed_distance(&p);
        if depth > best.0 {
            best = (depth, p);
        }
    }
    vec![best.1]
}

/// Per-layer `κ̂`, the ladder bound over them, and direct walks in the full
/// configuration compared against it.
pub fn unavoidability_report(cfg: &mut ChampagneConfig, opts: &ReportOptions) -> Result<UnavoidabilityReport> {
    let all: Vec<usize> = (0..cfg.layers.len()).collect();
    let which = opts.layers.clone().unwrap_or(all);
    let mut layers = Vec::with_capacity(which.len());
    for &k in &which {
        let params = opts.layer_params.with_seed(opts.layer_params.seed.wrapping_add(7919 * k as u64));
        layers.push(layer_kappa_estimate(cfg, k, opts.probes_per_layer, &params)?);
    }
    let kappas: Vec<f64> = layers.iter().map(|k| k.kappa_hat).collect();
    let sigmas: Vec<f64> = layers.iter().map(|k| k.sigma).collect();
    let nested = cfg.kind != BuildKind::General && opts.layers.is_none() && !layers.is_empty();
    let ladder = nested.then(|| ladder_bound(&kappas));

    let domain = cfg.domain.clone();
    let starts = if opts.starts.is_empty() {
        default_starts(cfg)
    } else {
        opts.starts.clone()
    };
    let obstacles = cfg.bubble_set()?;
    let mut direct = Vec::with_capacity(starts.len());
    for (i, z) in starts.iter().enumerate() {
        if z.dim() != domain.dim() {
            return Err(Error::invalid("start point has the wrong dimension"));
        }
        let params = opts.direct_params.with_seed(opts.direct_params.seed.wrapping_add(i as u64));
        let estimate = wos_hit_probability(&domain, obstacles, z, &params)?;
        let halved_epsilon = if opts.sensitivity {
            Some(wos_hit_probability(&domain, obstacles, z, &params.with_epsilon(params.epsilon / 2.0))?)
        } else {
            None
        };
        let margin = 3.0 * combined_sigma(estimate.sigma(), &kappas, &sigmas);
        let ladder_holds = ladder.map(|b| estimate.p_hat >= b - margin);
        direct.push(DirectEstimate {
            start: *z,
            estimate,
            halved_epsilon,
            margin,
            ladder_holds,
        });
    }
    Ok(UnavoidabilityReport {
        layers,
        ladder_bound: ladder,
        direct,
    })
}
