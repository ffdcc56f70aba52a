use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{BuildKind, ChampagneConfig};
use super::layer::{beta_from_log_r, layer_sums, rho0_threshold, LayerKind};
use crate::error::Result;
use crate::gauge::{kernel_n_log, phi_log};
use crate::geometry::{Bubble, BubbleSet};
use crate::sphere_design::cardinality_check;

/// Below this many bubbles the index-based overlap search is cross-checked
/// against an all-pairs scan.
const BRUTE_FORCE_LIMIT: usize = 3000;
const REL_TOL: f64 = 1e-12;
const SUM_TOL: f64 = 1e-9;

/// Outcome of one named family of checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditCheck {
    pub name: String,
    pub checked: u64,
    pub failures: u64,
    /// First failure, or a summary value when all passed.
    pub detail: String,
}

impl AuditCheck {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(AuditCheck::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditCheck> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn get(&self, name: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Default)]
struct Tally {
    map: BTreeMap<&'static str, AuditCheck>,
}

impl Tally {
    fn record(&mut self, name: &'static str, ok: bool, detail: impl FnOnce() -> String) {
        let c = self.map.entry(name).or_insert_with(|| AuditCheck {
            name: name.to_string(),
            checked: 0,
            failures: 0,
            detail: String::new(),
        });
        c.checked += 1;
        if !ok {
            if c.failures == 0 {
                c.detail = detail();
            }
            c.failures += 1;
        }
    }

    fn note(&mut self, name: &'static str, summary: String) {
        if let Some(c) = self.map.get_mut(name) {
            if c.failures == 0 {
                c.detail = summary;
            }
        }
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()) || a == b
}

/// Recomputes every stored quantity of `cfg` and checks the construction's
/// invariants: the layer relations, sphere designs, budgets, clearance,
/// pairwise disjointness and totals.
pub fn audit(cfg: &ChampagneConfig) -> Result<AuditReport> {
    let gauges = cfg.gauges()?;
    let d = cfg.d;
    let mut t = Tally::default();
    let unit_ball_like = matches!(cfg.kind, BuildKind::UnitBall | BuildKind::OneBubble);

    for (li, l) in cfg.layers.iter().enumerate() {
        let beta = beta_from_log_r(l.log_r, l.rho, d);
        t.record("layer_beta_relation", rel_close(beta, l.beta, REL_TOL), || {
            format!("layer {li}: stored β = {}, (φ(r)ρ)^(1/(d−1)) = {beta}", l.beta)
        });
        t.record("layer_r_below_beta_over_3", l.log_r < l.beta.ln() - 3f64.ln(), || {
            format!("layer {li}: r = exp({}) vs β/3 = {}", l.log_r, l.beta / 3.0)
        });
        let rho0_ok = rho0_threshold(l.rho, d).map(|r0| l.log_r < r0.ln()).unwrap_or(false);
        t.record("layer_r_below_rho0", rho0_ok, || {
            format!("layer {li}: r = exp({}) not below ρ₀(ρ = {})", l.log_r, l.rho)
        });
        let ps = &l.points;
        let design_ok = ps.satisfies_invariants()
            && ps.d == d
            && rel_close(ps.radius, l.radius, REL_TOL)
            && rel_close(ps.beta, l.beta, REL_TOL);
        t.record("layer_design_cover_pack", design_ok, || {
            format!(
                "layer {li}: covering {} (≤ β = {}), separation {} (≥ 2β/3)",
                ps.covering_radius, ps.beta, ps.min_pairwise_distance
            )
        });
        let card = cardinality_check(ps, l.rho);
        t.record("layer_cardinality_band", card.within_band, || {
            format!(
                "layer {li}: #X·β^(d−1) = {} outside [{}, {}]",
                card.count_beta, card.band_low, card.band_high
            )
        });
        let (cap, w, m) = layer_sums(l.count(), l.log_s(), &gauges);
        let sums_ok = rel_close(cap, l.capacity_sum, SUM_TOL) && rel_close(w, l.weighted_sum, SUM_TOL) && rel_close(m, l.majorant_sum, SUM_TOL);
        t.record("layer_sums", sums_ok, || {
            format!("layer {li}: stored sums ({}, {}, {}) vs recomputed ({cap}, {w}, {m})", l.capacity_sum, l.weighted_sum, l.majorant_sum)
        });
        if let Some(b) = l.budget {
            t.record("layer_budget", m < b, || format!("layer {li}: #X·φ·ĥ = {m} ≥ budget {b}"));
        }
        let s = l.bubble_radius();
        let sep_ok = ps.min_pairwise_distance * l.scale > 2.0 * s;
        t.record("layer_bubbles_disjoint", sep_ok, || {
            format!("layer {li}: separation {} ≤ 2s = {}", ps.min_pairwise_distance * l.scale, 2.0 * s)
        });
        if unit_ball_like {
            // every center has norm R exactly
            t.record("clearance_factor_6", 6.0 * s < 1.0 - l.placed_radius(), || {
                format!("layer {li}: s = {s} not below (1 − R)/6 = {}", (1.0 - l.placed_radius()) / 6.0)
            });
            t.record("locally_finite", l.placed_radius() + s < 1.0, || {
                format!("layer {li} reaches the boundary")
            });
        }
        if l.kind == LayerKind::OneBubble {
            let r = l.log_r.exp();
            t.record("one_bubble_r_over_gap", r / (1.0 - l.radius) < 1.0 / 9.0, || {
                format!("layer {li}: r/(1 − R) = {}", r / (1.0 - l.radius))
            });
            let k = l.index as f64;
            t.record("one_bubble_phi_bound", phi_log(l.log_r, d) <= k.powi(1 - d as i32) * (1.0 + REL_TOL), || {
                format!("layer {li}: φ(r) > k^(1−d)")
            });
        }
    }

    // consecutive spheres around the same center must not let bubbles meet
    if unit_ball_like {
        let mut order: Vec<usize> = (0..cfg.layers.len()).collect();
        order.sort_by(|&a, &b| cfg.layers[a].placed_radius().total_cmp(&cfg.layers[b].placed_radius()));
        for w in order.windows(2) {
            let (a, b) = (&cfg.layers[w[0]], &cfg.layers[w[1]]);
            let ok = b.placed_radius() - a.placed_radius() > a.bubble_radius() + b.bubble_radius();
            t.record("layers_disjoint", ok, || format!("layers {} and {} overlap", w[0], w[1]));
        }
    }

    if cfg.kind == BuildKind::General {
        audit_general(cfg, &mut t);
    }

    // totals
    let mut weighted = 0.0;
    let mut count: u128 = 0;
    for l in &cfg.layers {
        weighted += l.weighted_sum;
        count += l.count();
    }
    t.record("totals_match_layers", count == cfg.totals.bubble_count && rel_close(weighted, cfg.totals.weighted_sum, SUM_TOL), || {
        format!("stored totals ({}, {}) vs layers ({count}, {weighted})", cfg.totals.bubble_count, cfg.totals.weighted_sum)
    });
    if cfg.kind != BuildKind::OneBubble {
        t.record("weighted_sum_below_delta", cfg.totals.weighted_sum < cfg.delta, || {
            format!("Σφ(r)h(r) = {} ≥ δ = {}", cfg.totals.weighted_sum, cfg.delta)
        });
        t.note("weighted_sum_below_delta", format!("Σφ(r)h(r) = {:e} < δ = {:e}", cfg.totals.weighted_sum, cfg.delta));
    }

    if let Some(set) = &cfg.bubbles {
        audit_bubbles(cfg, set, &gauges, &mut t);
    }

    Ok(AuditReport {
        checks: t.map.into_values().collect(),
    })
}

fn audit_general(cfg: &ChampagneConfig, t: &mut Tally) {
    for grp in &cfg.groups {
        let lvl = cfg.levels.get(grp.level as usize - 1);
        let Some(lvl) = lvl else {
            t.record("annulus_budget", false, || format!("group at {:?} has unknown level {}", grp.center, grp.level));
            continue;
        };
        let want = cfg.delta / (lvl.y_count as f64 * 2f64.powi(lvl.n as i32));
        t.record("annulus_delta_rule", rel_close(grp.delta_y, want, REL_TOL) && rel_close(lvl.delta_y, want, REL_TOL), || {
            format!("level {}: δ_y = {} but δ/(#Y_n·2^n) = {want}", lvl.n, grp.delta_y)
        });
        let layers = &cfg.layers[grp.first_layer..grp.first_layer + grp.layer_count];
        let w: f64 = layers.iter().map(|l| l.weighted_sum).sum();
        t.record("annulus_budget", w < grp.delta_y, || {
            format!("annulus at {:?}: Σφh = {w} ≥ δ_y = {}", grp.center, grp.delta_y)
        });
        let geometry_ok = rel_close(grp.a, lvl.gap / 6.0, REL_TOL) && rel_close(grp.a_prime, lvl.gap / 7.0, REL_TOL);
        t.record("annulus_radii", geometry_ok, || format!("annulus at {:?}: a, a′ differ from d_n/6, d_n/7", grp.center));
        let host = -cfg.domain.signed_distance(&grp.center);
        for l in layers {
            let s = l.bubble_radius();
            let rr = l.placed_radius();
            let inside = l.center == grp.center && rr > grp.a_prime && rr + s < grp.a && 6.0 * s < grp.a - rr;
            t.record("annulus_clearance_factor_6", inside, || {
                format!("annulus at {:?}: sphere {rr} with s = {s} not inside (a′, a) with factor 6", grp.center)
            });
            // distance to the complement is at least host − rr (1-Lipschitz)
            t.record("clearance_factor_18", 18.0 * s < host - rr, || {
                format!("annulus at {:?}: s = {s}, lower bound on dist(x, ∂U) = {}", grp.center, host - rr)
            });
        }
    }
    for lvl in &cfg.levels {
        let groups = cfg.groups.iter().filter(|g| g.level == lvl.n).count();
        t.record("level_y_count", groups == lvl.y_count && lvl.y_count > 0, || {
            format!("level {}: {groups} annuli for #Y_n = {}", lvl.n, lvl.y_count)
        });
        t.record("level_y_cover", lvl.y_covering < lvl.gap / 2.0, || {
            format!("level {}: B(y, d_n/2) leave a boundary point at distance {}", lvl.n, lvl.y_covering)
        });
        t.record("level_y_separation", lvl.y_separation >= lvl.gap / 3.0, || {
            format!("level {}: two centers at distance {} < d_n/3", lvl.n, lvl.y_separation)
        });
    }
    // the closed balls B̄(y, a) around different centers must be disjoint
    let balls: Vec<Bubble> = cfg
        .groups
        .iter()
        .map(|g| Bubble {
            center: g.center,
            radius: g.a,
            layer_id: g.level,
            clearance: 0.0,
        })
        .collect();
    let overlaps = BubbleSet::new(balls).overlaps(1);
    t.record("annuli_disjoint", overlaps.is_empty(), || {
        let o = overlaps[0];
        format!("annuli {} and {} overlap", o.a, o.b)
    });
}

fn audit_bubbles(cfg: &ChampagneConfig, set: &BubbleSet, gauges: &crate::gauge::GaugeSet, t: &mut Tally) {
    let d = cfg.d;
    let overlaps = set.overlaps(16);
    t.record("bubbles_disjoint", overlaps.is_empty(), || {
        let o = overlaps[0];
        format!("bubbles {} and {} overlap (gap {:e})", o.a, o.b, o.gap)
    });
    let bubbles = set.bubbles();
    if bubbles.len() <= BRUTE_FORCE_LIMIT {
        let mut brute = Vec::new();
        for i in 0..bubbles.len() {
            for j in i + 1..bubbles.len() {
                if bubbles[i].center.dist(&bubbles[j].center) <= bubbles[i].radius + bubbles[j].radius {
                    brute.push((i, j));
                }
            }
        }
        let indexed: Vec<(usize, usize)> = set.overlaps(usize::MAX).iter().map(|o| (o.a, o.b)).collect();
        t.record("disjointness_index_matches_brute_force", brute == indexed, || {
            format!("index reports {} overlapping pairs, all-pairs scan {}", indexed.len(), brute.len())
        });
    }
    let factor = if cfg.kind == BuildKind::General { 18.0 } else { 6.0 };
    let mut direct = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for (i, b) in bubbles.iter().enumerate() {
        let host = -cfg.domain.signed_distance(&b.center);
        let ok = b.radius > 0.0 && factor * b.radius < host;
        worst_ratio = worst_ratio.max(b.radius / host);
        t.record("bubble_clearance", ok, || {
            format!("bubble {i}: radius {} vs dist to boundary {host} (factor {factor})", b.radius)
        });
        let log_s = b.radius.ln();
        direct += gauges.h_log(log_s) / kernel_n_log(log_s, d);
    }
    t.note("bubble_clearance", format!("max r/dist(x, ∂U) = {worst_ratio:.4e} (< 1/{factor})"));
    t.record("bubbles_match_layers", bubbles.len() as u128 == cfg.totals.bubble_count, || {
        format!("{} bubbles stored, layers describe {}", bubbles.len(), cfg.totals.bubble_count)
    });
    t.record("direct_sum_matches_totals", rel_close(direct, cfg.totals.weighted_sum, 1e-9), || {
        format!("direct Σφ(r)h(r) = {direct} vs layer totals {}", cfg.totals.weighted_sum)
    });
    if cfg.kind != BuildKind::OneBubble {
        t.record("direct_sum_below_delta", direct < cfg.delta, || {
            format!("direct Σφ(r)h(r) = {direct} ≥ δ = {}", cfg.delta)
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{build_unit_ball, geometric_radii};
    use crate::gauge::{Gauge, GaugeSet};
    use crate::point::Point;

    fn config() -> ChampagneConfig {
        let g = GaugeSet::new(2, Gauge::PhiPower { eps: 4.0 }).unwrap();
        build_unit_ball(&g, 1.0, &geometric_radii(2)[1..], 5).unwrap()
    }

    #[test]
    fn built_config_passes() {
        let report = audit(&config()).unwrap();
        assert!(report.passed(), "{:?}", report.failures().collect::<Vec<_>>());
        assert!(report.get("bubbles_disjoint").is_some());
    }

    #[test]
    fn planted_overlap_is_named() {
        let mut cfg = config();
        let mut bubbles = cfg.bubbles.take().unwrap().into_bubbles();
        let first = bubbles[0];
        let twin = Bubble {
            center: first.center + Point::from_slice(&[first.radius, 0.0]).unwrap(),
            ..first
        };
        bubbles.push(twin);
        let n = bubbles.len() - 1;
        cfg.bubbles = Some(BubbleSet::new(bubbles));
        let report = audit(&cfg).unwrap();
        let c = report.get("bubbles_disjoint").unwrap();
        assert!(!c.passed());
        assert!(c.detail.contains(&format!("bubbles 0 and {n}")), "{}", c.detail);
    }

    #[test]
    fn tampered_sum_is_caught() {
        let mut cfg = config();
        cfg.layers[0].weighted_sum *= 0.5;
        let report = audit(&cfg).unwrap();
        assert!(!report.get("layer_sums").unwrap().passed());
    }

    #[test]
    fn tampered_beta_is_caught() {
        let mut cfg = config();
        cfg.layers[1].beta *= 1.0 + 1e-9;
        assert!(!audit(&cfg).unwrap().get("layer_beta_relation").unwrap().passed());
    }
}
