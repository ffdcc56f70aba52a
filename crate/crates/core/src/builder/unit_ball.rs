use std::f64::consts::LN_2;

use serde_json::json;

use super::config::{BuildKind, ChampagneConfig};
use super::layer::{beta_from_log_r, build_layer_log, layer_seed, rho0_threshold, LayerKind, LayerSpec, SphereLayer};
use super::radii::RadiiRule;
use crate::error::{Error, Result};
use crate::gauge::{kernel_n_log, GaugeSet};
use crate::geometry::Domain;
use crate::point::Point;
use crate::sphere_design::design_count_upper;

/// Steps of the halving search tried one by one before galloping.
const LINEAR_STEPS: u64 = 64;

/// First `j ≥ 1` with `accept(log_cap − j·ln 2)`, assuming acceptance is
/// monotone in `j`. Returns `ln r` and `j`.
pub fn search_log_radius(log_cap: f64, accept: impl Fn(f64) -> bool) -> Option<(f64, u64)> {
    let at = |j: u64| log_cap - j as f64 * LN_2;
    for j in 1..=LINEAR_STEPS {
        if accept(at(j)) {
            return Some((at(j), j));
        }
    }
    let mut lo = LINEAR_STEPS;
    let mut hi = LINEAR_STEPS * 2;
    loop {
        if accept(at(hi)) {
            break;
        }
        lo = hi;
        hi = hi.checked_mul(2)?;
        if hi > 1 << 62 {
            return None;
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if accept(at(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some((at(hi), hi))
}

/// Predicted `#X·φ(s)·ĥ(s)` for a layer on `∂B(0,R)` with gap `ρ`,
/// radius `exp(log_r)` and placement scale `scale`, using the exact count for
/// deterministic designs and the packing upper bound otherwise.
pub(crate) fn predicted_majorant_sum(radius: f64, rho: f64, log_r: f64, scale: f64, gauges: &GaugeSet) -> f64 {
    let d = gauges.dim();
    let beta = beta_from_log_r(log_r, rho, d);
    if !(beta > 0.0 && beta < radius) {
        return f64::INFINITY;
    }
    let count = design_count_upper(radius, beta, d);
    let log_s = scale.ln() + log_r;
    count / kernel_n_log(log_s, d) * gauges.majorant_log(log_s)
}

/// Builds the smallest-index admissible layer for `spec` (whose `log_r` is
/// ignored) below `log_cap` with majorant sum under `budget`.
pub(crate) fn build_budgeted_layer(
    spec: LayerSpec,
    log_cap: f64,
    budget: f64,
    gauges: &GaugeSet,
    seed: u64,
    what: &str,
) -> Result<SphereLayer> {
    let mut cap = log_cap;
    loop {
        let found = search_log_radius(cap, |log_r| {
            predicted_majorant_sum(spec.radius, spec.rho, log_r, spec.scale, gauges) < budget
        });
        let Some((log_r, _)) = found else {
            return Err(Error::infeasible(format!(
                "{what}: no bubble radius above exp(−2^62) meets the budget {budget:e}"
            )));
        };
        let layer = build_layer_log(
            &LayerSpec {
                log_r,
                budget: Some(budget),
                ..spec
            },
            gauges,
            seed,
        )?;
        if layer.majorant_sum < budget {
            return Ok(layer);
        }
        // the prediction was optimistic; continue halving below this radius
        cap = log_r;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnitBallParams {
    pub delta: f64,
    pub layers: usize,
    pub rule: RadiiRule,
    pub seed: u64,
}

impl UnitBallParams {
    pub fn build(&self, gauges: &GaugeSet) -> Result<ChampagneConfig> {
        let radii = self.rule.radii(self.layers)?;
        let mut cfg = build_unit_ball(gauges, self.delta, &radii[1..], self.seed)?;
        cfg.metadata.insert("radii_rule".into(), json!(self.rule));
        Ok(cfg)
    }
}

/// Layers `k = 1..K` on the spheres `∂B(0,R_k)` given `radii = [R_1, …,
/// R_{K+1}]` (with `R_0 = 1/2`). Layer `k` uses `ρ_k = (R_{k+1} − R_k)/2`
/// and the largest radius `r_k = cap·2^(−j)`, `j ≥ 1`, with
/// `cap = min{ρ₀(ρ_k), (R_k − R_{k−1})/2}` and `#X_k·φ(r_k)ĥ(r_k) < 2^(−k)δ`.
pub fn build_unit_ball(gauges: &GaugeSet, delta: f64, radii: &[f64], seed: u64) -> Result<ChampagneConfig> {
    let d = gauges.dim();
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("budget δ must be > 0, got {delta}")));
    }
    if radii.len() < 2 {
        return Err(Error::invalid("need radii R_1..R_{K+1} for at least one layer"));
    }
    if radii.iter().any(|&r| !(r > 0.5 && r < 1.0)) {
        return Err(Error::invalid("layer radii must lie in (1/2, 1)"));
    }
    if radii.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("layer radii must be strictly increasing"));
    }
    let k_total = radii.len() - 1;
    let mut cfg = ChampagneConfig::new(BuildKind::UnitBall, Domain::unit_ball(d)?, gauges, delta, seed);
    for k in 1..=k_total {
        let big_r = radii[k - 1];
        let prev = if k == 1 { 0.5 } else { radii[k - 2] };
        let rho = (radii[k] - big_r) / 2.0;
        let cap = rho0_threshold(rho, d)?.min((big_r - prev) / 2.0);
        let budget = delta * 0.5f64.powi(k as i32);
        let spec = LayerSpec {
            index: k as u32,
            kind: LayerKind::UnitBall,
            center: Point::origin(d),
            scale: 1.0,
            radius: big_r,
            rho,
            log_r: f64::NAN,
            probe_radius: big_r + rho,
            kill_radius: big_r + 2.0 * rho,
            budget: Some(budget),
        };
        let layer = build_budgeted_layer(spec, cap.ln(), budget, gauges, layer_seed(seed, k as u64), &format!("layer {k}"))?;
        cfg.layers.push(layer);
    }
    cfg.recompute_totals();
    cfg.metadata.insert("radii".into(), json!(radii));
    cfg.materialize_if_small()?;
    Ok(cfg)
}
