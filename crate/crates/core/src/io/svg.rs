//! Static SVG renderings: domain outline, exhaustion surfaces, layer spheres
//! and bubbles to scale. Three-dimensional configurations are cut by the
//! plane `x₃ = 0`.

use std::fmt::Write as _;

use crate::builder::ChampagneConfig;
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::point::Point;

const GRID: usize = 400;
/// Bubbles beyond this many are left out of the picture.
pub const MAX_DRAWN_BUBBLES: usize = 200_000;

struct View {
    x0: f64,
    y1: f64,
    scale: f64,
}

impl View {
    fn x(&self, x: f64) -> f64 {
        (x - self.x0) * self.scale
    }

    fn y(&self, y: f64) -> f64 {
        (self.y1 - y) * self.scale
    }
}

fn slice_point(x: f64, y: f64, d: usize) -> Point {
    Point::padded(&[x, y], d)
}

/// Zero contour of the signed distance on the `x₃ = 0` plane by marching
/// squares, as one SVG path.
fn contour_path(domain: &Domain, lo: (f64, f64), hi: (f64, f64), view: &View) -> String {
    let d = domain.dim();
    let n = GRID;
    let hx = (hi.0 - lo.0) / n as f64;
    let hy = (hi.1 - lo.1) / n as f64;
    let mut vals = vec![0.0; (n + 1) * (n + 1)];
    for j in 0..=n {
        for i in 0..=n {
            let p = slice_point(lo.0 + i as f64 * hx, lo.1 + j as f64 * hy, d);
            vals[j * (n + 1) + i] = domain.signed_distance(&p);
        }
    }
    let at = |i: usize, j: usize| vals[j * (n + 1) + i];
    let mut path = String::new();
    for j in 0..n {
        for i in 0..n {
            let c = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            let xs = [lo.0 + i as f64 * hx, lo.0 + (i + 1) as f64 * hx];
            let ys = [lo.1 + j as f64 * hy, lo.1 + (j + 1) as f64 * hy];
            let corner = |k: usize| match k {
                0 => (xs[0], ys[0]),
                1 => (xs[1], ys[0]),
                2 => (xs[1], ys[1]),
                _ => (xs[0], ys[1]),
            };
            // crossing points on the four edges, in order
            let mut pts = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (c[e], c[(e + 1) % 4]);
                if (a < 0.0) != (b < 0.0) {
                    let t = a / (a - b);
                    let (pa, pb) = (corner(e), corner((e + 1) % 4));
                    pts.push((pa.0 + t * (pb.0 - pa.0), pa.1 + t * (pb.1 - pa.1)));
                }
            }
            for seg in pts.chunks_exact(2) {
                let _ = write!(
                    path,
                    "M{:.3} {:.3}L{:.3} {:.3}",
                    view.x(seg[0].0),
                    view.y(seg[0].1),
                    view.x(seg[1].0),
                    view.y(seg[1].1)
                );
            }
        }
    }
    path
}

/// Deterministic SVG picture of `cfg`, `size` pixels wide.
pub fn render_svg(cfg: &ChampagneConfig, size: u32) -> Result<String> {
    if cfg.d < 2 {
        return Err(Error::invalid("nothing to render in one dimension"));
    }
    let bb = cfg.domain.bounding_box();
    let (w, h) = (bb.max.get(0) - bb.min.get(0), bb.max.get(1) - bb.min.get(1));
    let pad = 0.05 * w.max(h);
    let lo = (bb.min.get(0) - pad, bb.min.get(1) - pad);
    let hi = (bb.max.get(0) + pad, bb.max.get(1) + pad);
    let scale = size as f64 / (hi.0 - lo.0);
    let view = View {
        x0: lo.0,
        y1: hi.1,
        scale,
    };
    let height = ((hi.1 - lo.1) * scale).ceil() as u32;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{height}\" viewBox=\"0 0 {size} {height}\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    for lvl in &cfg.levels {
        let _ = writeln!(
            out,
            "<path d=\"{}\" fill=\"none\" stroke=\"#4a7fb5\" stroke-width=\"0.6\" stroke-dasharray=\"3 2\"/>",
            contour_path(&lvl.level_domain, lo, hi, &view)
        );
    }
    let _ = writeln!(
        out,
        "<path d=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.2\"/>",
        contour_path(&cfg.domain, lo, hi, &view)
    );
    if cfg.groups.is_empty() {
        for l in &cfg.layers {
            if l.center.coords()[2..].iter().any(|&c| c != 0.0) {
                continue;
            }
            let _ = writeln!(
                out,
                "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"{:.3}\" fill=\"none\" stroke=\"#bbbbbb\" stroke-width=\"0.4\"/>",
                view.x(l.center.get(0)),
                view.y(l.center.get(1)),
                l.placed_radius() * scale
            );
        }
    }
    if let Some(set) = &cfg.bubbles {
        let mut drawn = 0;
        let _ = writeln!(out, "<g fill=\"#c0392b\">");
        for b in set.bubbles() {
            // radius of the cross-section by x₃ = 0
            let off: f64 = b.center.coords()[2..].iter().map(|c| c * c).sum();
            let r2 = b.radius * b.radius - off;
            if r2 <= 0.0 {
                continue;
            }
            if drawn == MAX_DRAWN_BUBBLES {
                break;
            }
            drawn += 1;
            let _ = writeln!(
                out,
                "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"{:.4}\"/>",
                view.x(b.center.get(0)),
                view.y(b.center.get(1)),
                r2.sqrt() * scale
            );
        }
        let _ = writeln!(out, "</g>");
    }
    let _ = writeln!(out, "</svg>");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{build_unit_ball, geometric_radii};
    use crate::gauge::{Gauge, GaugeSet};

    #[test]
    fn render_is_deterministic_and_complete() {
        let g = GaugeSet::new(2, Gauge::PhiPower { eps: 4.0 }).unwrap();
        let cfg = build_unit_ball(&g, 1.0, &geometric_radii(2)[1..], 3).unwrap();
        let a = render_svg(&cfg, 600).unwrap();
        let b = render_svg(&cfg, 600).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
        let circles = a.matches("<circle").count();
        assert_eq!(circles as u128, cfg.bubble_count() + cfg.layers.len() as u128);
    }

    #[test]
    fn spatial_configs_render_a_cross_section() {
        let g = GaugeSet::new(3, Gauge::PhiPower { eps: 4.0 }).unwrap();
        let cfg = build_unit_ball(&g, 1.0, &geometric_radii(1)[1..], 3).unwrap();
        let svg = render_svg(&cfg, 400).unwrap();
        // only bubbles meeting the plane are drawn
        let bubbles = svg.matches("<circle").count() - cfg.layers.len();
        assert!((bubbles as u128) < cfg.bubble_count());
        assert!(svg.contains("<path d=\"M"));
    }
}
