use serde_json::json;

use super::annulus::{group_record, layer_count_for, place, reference_stack, AnnulusRequest};
use super::config::{BuildKind, ChampagneConfig, LevelRecord};
use super::layer::layer_seed;
use crate::error::{Error, Result};
use crate::gauge::GaugeSet;
use crate::geometry::{sample_boundary, Domain, Exhaustion};
use crate::point::Point;
use crate::sphere_design::GridHash;

#[derive(Clone, Debug, PartialEq)]
pub struct GeneralParams {
    pub delta: f64,
    pub kappa_hat: f64,
    pub gamma: f64,
    pub max_layers: usize,
    /// Boundary samples per `diam(V_n)/d_n` (raised to `d − 1`).
    pub sample_density: f64,
    pub seed: u64,
}

impl Default for GeneralParams {
    fn default() -> Self {
        GeneralParams {
            delta: 1e-2,
            kappa_hat: 0.2,
            gamma: 0.5,
            max_layers: super::annulus::DEFAULT_MAX_LAYERS,
            sample_density: 400.0,
            seed: 0,
        }
    }
}

const MAX_BOUNDARY_SAMPLES: f64 = 4e6;

/// Greedy maximal subset of `samples` with pairwise distances `≥ sep`.
fn separated_subset(samples: &[Point], sep: f64, d: usize) -> Vec<Point> {
    let mut grid = GridHash::new(sep, d);
    let mut out: Vec<Point> = Vec::new();
    let sep_sq = sep * sep;
    for p in samples {
        let mut ok = true;
        grid.for_each_near(p, 1, |i| {
            if ok && out[i as usize].dist_sq(p) < sep_sq {
                ok = false;
            }
        });
        if ok {
            grid.insert(p, out.len() as u32);
            out.push(*p);
        }
    }
    out
}

/// Largest distance from a sample to the nearest point of `ys`, searched
/// within two grid cells of size `cell` (farther counts as infinite).
fn covering_radius(samples: &[Point], ys: &[Point], cell: f64, d: usize) -> f64 {
    let mut grid = GridHash::new(cell, d);
    for (i, y) in ys.iter().enumerate() {
        grid.insert(y, i as u32);
    }
    let mut worst: f64 = 0.0;
    for s in samples {
        let mut near = f64::INFINITY;
        grid.for_each_near(s, 2, |i| near = near.min(ys[i as usize].dist_sq(s)));
        worst = worst.max(near.sqrt());
    }
    worst
}

fn min_pair_distance(ys: &[Point], cell: f64, d: usize) -> f64 {
    crate::sphere_design::min_separation(ys, cell, d)
}

/// For each exhaustion level `n`: a `d_n/3`-separated set `Y_n ⊂ ∂V_n` and
/// an annulus fill around each `y ∈ Y_n` with `a′ = d_n/7`, `a = d_n/6`,
/// `γ` (normally 1/2) and `δ_y = δ/(#Y_n·2^n)`.
pub fn build_general(domain: &Domain, exhaustion: &Exhaustion, gauges: &GaugeSet, params: &GeneralParams) -> Result<ChampagneConfig> {
    domain.validate()?;
    let d = gauges.dim();
    if domain.dim() != d {
        return Err(Error::invalid(format!(
            "domain has dimension {}, gauges {d}",
            domain.dim()
        )));
    }
    if !(params.delta > 0.0) {
        return Err(Error::invalid(format!("budget δ must be > 0, got {}", params.delta)));
    }
    if exhaustion.is_empty() || exhaustion.levels.len() != exhaustion.gaps.len() + 1 {
        return Err(Error::invalid("exhaustion must carry one more level than gaps"));
    }
    for (i, g) in exhaustion.gaps.iter().enumerate() {
        if !(*g > 0.0) {
            return Err(Error::invalid(format!("exhaustion gap d_{} is zero", i + 1)));
        }
    }
    let layer_total = layer_count_for(params.gamma, params.kappa_hat, params.max_layers)?;
    let mut cfg = ChampagneConfig::new(BuildKind::General, domain.clone(), gauges, params.delta, params.seed);

    for (i, &gap) in exhaustion.gaps.iter().enumerate() {
        let n = i + 1;
        let level = &exhaustion.levels[i];
        let diam = level.bounding_box().diagonal();
        let count = (params.sample_density * (diam / gap).powi(d as i32 - 1)).min(MAX_BOUNDARY_SAMPLES);
        let level_seed = layer_seed(params.seed, 1_000_000 + n as u64);
        let samples = sample_boundary(level, count as usize, level_seed);
        if samples.is_empty() {
            return Err(Error::infeasible(format!("no boundary samples on level {n}")));
        }
        let ys = separated_subset(&samples, gap / 3.0, d);
        let check = sample_boundary(level, count as usize, level_seed ^ 0x5555);
        let y_covering = covering_radius(&check, &ys, gap / 3.0, d);
        let y_separation = min_pair_distance(&ys, gap / 3.0, d);

        let a = gap / 6.0;
        let a_prime = gap / 7.0;
        let delta_y = params.delta / (ys.len() as f64 * 2f64.powi(n as i32));
        let stack = reference_stack(a_prime / a, layer_total, a, delta_y, gauges, level_seed)?;
        for y in &ys {
            let req = AnnulusRequest {
                center: *y,
                a,
                a_prime,
                gamma: params.gamma,
                delta_y,
                kappa_hat: params.kappa_hat,
                max_layers: params.max_layers,
            };
            let layers = place(&stack, *y);
            let first = cfg.layers.len();
            cfg.groups.push(group_record(&req, n as u32, first, &layers));
            cfg.layers.extend(layers);
        }
        cfg.levels.push(LevelRecord {
            n: n as u32,
            offset: exhaustion.offsets[i],
            gap,
            level_domain: level.clone(),
            y_count: ys.len(),
            delta_y,
            y_covering,
            y_separation,
        });
    }
    cfg.recompute_totals();
    cfg.metadata.insert("kappa_hat".into(), json!(params.kappa_hat));
    cfg.metadata.insert("gamma".into(), json!(params.gamma));
    cfg.metadata.insert("layers_per_annulus".into(), json!(layer_total));
    cfg.metadata.insert("exhaustion_offsets".into(), json!(exhaustion.offsets));
    cfg.materialize_if_small()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::Gauge;
    use crate::geometry::{make_exhaustion, make_exhaustion_with, ExhaustionParams};

    fn params() -> GeneralParams {
        GeneralParams {
            delta: 1e-2,
            kappa_hat: 0.3,
            ..Default::default()
        }
    }

    #[test]
    fn concentric_balls() {
        let g = GaugeSet::new(2, Gauge::PhiPower { eps: 8.0 }).unwrap();
        let u = Domain::unit_ball(2).unwrap();
        let e = make_exhaustion(&u, 2).unwrap();
        let cfg = build_general(&u, &e, &g, &params()).unwrap();
        assert!(cfg.totals.weighted_sum < 1e-2);
        for lvl in &cfg.levels {
            assert!(lvl.y_covering < lvl.gap / 2.0);
            assert!(lvl.y_separation >= lvl.gap / 3.0);
        }
        let bubbles = cfg.bubbles.as_ref().unwrap();
        for b in bubbles.bubbles() {
            assert!(18.0 * b.radius < b.clearance);
        }
        assert!(bubbles.overlaps(1).is_empty());
    }

    #[test]
    fn l_shape() {
        let g = GaugeSet::new(2, Gauge::PhiPower { eps: 8.0 }).unwrap();
        let u = Domain::l_shape();
        let e = make_exhaustion_with(&u, 2, ExhaustionParams { first_offset: Some(0.3), ..Default::default() }).unwrap();
        let cfg = build_general(&u, &e, &g, &params()).unwrap();
        assert!(cfg.totals.weighted_sum < 1e-2);
        for grp in &cfg.groups {
            let lvl = &cfg.levels[grp.level as usize - 1];
            assert!(grp.weighted_sum < lvl.delta_y);
        }
    }

    #[test]
    fn tiny_boundary_budget() {
        // one sample point: δ_y = δ/2^n
        let ys = separated_subset(&[Point::origin(2)], 0.1, 2);
        assert_eq!(ys.len(), 1);
    }
}
