use serde_json::json;

use super::config::{BuildKind, ChampagneConfig};
use super::layer::{build_layer_log, layer_seed, LayerKind, LayerSpec};
use super::radii::tail_sum;
use crate::error::{Error, Result};
use crate::gauge::{phi_log, Gauge, GaugeSet};
use crate::geometry::Domain;
use crate::point::{check_dim, Point};

/// Checks that `k` can start a one-bubble sequence: `k ≥ 3^(d−1)`,
/// `Σ_{j≥k} 1/(j log²j) < 1/2` and `e^(−j) < 1/(9j log²j)` for all `j ≥ k`.
/// The last function `9j log²j·e^(−j)` is decreasing for `j ≥ 3`, so it is
/// enough to test `j = k`.
pub fn check_k0(k: u64, d: usize) -> Result<()> {
    check_dim(d)?;
    let min_k = 3u64.pow(d as u32 - 1);
    if k < min_k.max(3) {
        return Err(Error::invalid(format!(
            "k = {k} is below 3^(d−1) = {min_k} (d = {d})"
        )));
    }
    let tail = tail_sum(k)?;
    if !(tail < 0.5) {
        return Err(Error::invalid(format!(
            "k = {k}: tail Σ_{{j≥k}} 1/(j log²j) = {tail} is not below 1/2"
        )));
    }
    let kf = k as f64;
    let log_lhs = 9f64.ln() + kf.ln() + 2.0 * kf.ln().ln() - kf;
    if !(log_lhs < 0.0) {
        return Err(Error::invalid(format!(
            "k = {k}: e^(−k) < 1/(9k log²k) fails"
        )));
    }
    Ok(())
}

/// `(ρ, β, ln r)` for index `k`: `ρ = 1/(3 log²k)`, `β = ρ/k`, and
/// `r = e^(−k)` (d = 2) or `k^(−(d−1)/(d−2))·ρ` (d ≥ 3).
pub fn one_bubble_layer_params(k: u64, d: usize) -> (f64, f64, f64) {
    let kf = k as f64;
    let l = kf.ln();
    let rho = 1.0 / (3.0 * l * l);
    let beta = rho / kf;
    let log_r = if d == 2 {
        -kf
    } else {
        let df = d as f64;
        -(df - 1.0) / (df - 2.0) * l + rho.ln()
    };
    (rho, beta, log_r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OneBubbleParams {
    pub k_start: u64,
    pub k_end: u64,
    /// Exponent `ε` of the reported sum `Σ φ(r_x)^(1+ε)`.
    pub eps: f64,
    pub seed: u64,
}

/// Layers `k = K..K_max` with `R_k = 1 − Σ_{j≥k} 1/(j log²j)`. Each layer is
/// probed on `∂U_k` and killed on `∂U_{k+1}`. The config's gauge is
/// `h = φ^ε`, so its weighted sum is `Σ #X_k φ(r_k)^(1+ε)`; `δ` is recorded
/// as the sum itself.
pub fn build_one_bubble_sequence(d: usize, params: &OneBubbleParams) -> Result<ChampagneConfig> {
    check_dim(d)?;
    let OneBubbleParams { k_start, k_end, eps, seed } = *params;
    if k_end < k_start {
        return Err(Error::invalid(format!("empty range [{k_start}, {k_end}]")));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("ε must be > 0, got {eps}")));
    }
    check_k0(k_start, d)?;
    let gauges = GaugeSet::new(d, Gauge::PhiPower { eps })?;
    let mut cfg = ChampagneConfig::new(BuildKind::OneBubble, Domain::unit_ball(d)?, &gauges, 0.0, seed);
    let mut tail = tail_sum(k_start)?;
    for k in k_start..=k_end {
        let kf = k as f64;
        let next_tail = tail - 1.0 / (kf * kf.ln() * kf.ln());
        let (big_r, r_next) = (1.0 - tail, 1.0 - next_tail);
        let (rho, beta, log_r) = one_bubble_layer_params(k, d);
        let layer = build_layer_log(
            &LayerSpec {
                index: k as u32,
                kind: LayerKind::OneBubble,
                center: Point::origin(d),
                scale: 1.0,
                radius: big_r,
                rho,
                log_r,
                probe_radius: big_r,
                kill_radius: r_next,
                budget: None,
            },
            &gauges,
            layer_seed(seed, k),
        )?;
        if ((layer.beta - beta) / beta).abs() > 1e-12 {
            return Err(Error::Invariant(format!(
                "layer {k}: β = {} differs from ρ/k = {beta}",
                layer.beta
            )));
        }
        let r = log_r.exp();
        if !(r / (1.0 - big_r) < 1.0 / 9.0) {
            return Err(Error::Invariant(format!(
                "layer {k}: r/(1 − R) = {} is not below 1/9",
                r / (1.0 - big_r)
            )));
        }
        if phi_log(log_r, d) > kf.powi(1 - d as i32) * (1.0 + 1e-12) {
            return Err(Error::Invariant(format!("layer {k}: φ(r) exceeds k^(1−d)")));
        }
        cfg.layers.push(layer);
        tail = next_tail;
    }
    cfg.recompute_totals();
    cfg.delta = cfg.totals.weighted_sum;
    cfg.metadata.insert("k_start".into(), json!(k_start));
    cfg.metadata.insert("k_end".into(), json!(k_end));
    cfg.metadata.insert("eps".into(), json!(eps));
    cfg.materialize_if_small()?;
    Ok(cfg)
}
