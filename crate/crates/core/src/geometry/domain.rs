use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{check_dim, Point};

/// A bounded open set described by balls, boxes, and their unions and
/// intersections.
///
/// The signed distance is negative inside. Composites use `min`/`max`, which
/// is exact outside a union and for disjoint parts; inside overlapping unions
/// it can only underestimate the true distance, which is what walk on
/// spheres needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Ball { center: Point, radius: f64 },
    Box { min: Point, max: Point },
    Union { parts: Vec<Domain> },
    Intersection { parts: Vec<Domain> },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingBox {
    pub min: Point,
    pub max: Point,
}

impl BoundingBox {
    pub fn diagonal(&self) -> f64 {
        self.min.dist(&self.max)
    }

    fn hull(&self, other: &BoundingBox) -> BoundingBox {
        let (mut lo, mut hi) = (self.min, self.max);
        for i in 0..lo.dim() {
            lo.set(i, lo.get(i).min(other.min.get(i)));
            hi.set(i, hi.get(i).max(other.max.get(i)));
        }
        BoundingBox { min: lo, max: hi }
    }

    fn meet(&self, other: &BoundingBox) -> BoundingBox {
        let (mut lo, mut hi) = (self.min, self.max);
        for i in 0..lo.dim() {
            lo.set(i, lo.get(i).max(other.min.get(i)));
            hi.set(i, hi.get(i).min(other.max.get(i)));
        }
        BoundingBox { min: lo, max: hi }
    }
}

pub fn distance_to_boundary(domain: &Domain, p: &Point) -> f64 {
    domain.signed_distance(p)
}

impl Domain {
    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        check_dim(center.dim())?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("ball radius must be > 0, got {radius}")));
        }
        Ok(Domain::Ball { center, radius })
    }

    pub fn unit_ball(d: usize) -> Result<Self> {
        check_dim(d)?;
        Domain::ball(Point::origin(d), 1.0)
    }

    pub fn cuboid(min: Point, max: Point) -> Result<Self> {
        check_dim(min.dim())?;
        if min.dim() != max.dim() {
            return Err(Error::invalid("box corners have different dimensions"));
        }
        if (0..min.dim()).any(|i| !(min.get(i) < max.get(i))) {
            return Err(Error::invalid(format!("box corners {min:?}, {max:?} are not ordered")));
        }
        Ok(Domain::Box { min, max })
    }

    /// `[0,2]×[0,1] ∪ [0,1]×[0,2]`.
    pub fn l_shape() -> Self {
        let a = Domain::Box {
            min: Point::padded(&[0.0, 0.0], 2),
            max: Point::padded(&[2.0, 1.0], 2),
        };
        let b = Domain::Box {
            min: Point::padded(&[0.0, 0.0], 2),
            max: Point::padded(&[1.0, 2.0], 2),
        };
        Domain::Union { parts: vec![a, b] }
    }

    /// Named domains accepted on the command line.
    pub fn preset(name: &str, d: usize) -> Result<Self> {
        check_dim(d)?;
        match name {
            "ball" => Domain::unit_ball(d),
            "box" => {
                let mut hi = Point::origin(d);
                for i in 0..d {
                    hi.set(i, 1.0);
                }
                hi.set(0, 2.0);
                Domain::cuboid(Point::origin(d), hi)
            }
            "lshape" if d == 2 => Ok(Domain::l_shape()),
            "lshape" => Err(Error::invalid("the L-shaped domain is planar (d = 2)")),
            other => Err(Error::invalid(format!(
                "unknown domain '{other}' (expected ball, box or lshape)"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Ball { center, .. } => center.dim(),
            Domain::Box { min, .. } => min.dim(),
            Domain::Union { parts } | Domain::Intersection { parts } => {
                parts.first().map_or(0, Domain::dim)
            }
        }
    }

    /// Checks dimensions agree and every leaf is nondegenerate.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        check_dim(d)?;
        self.validate_dim(d)
    }

    fn validate_dim(&self, d: usize) -> Result<()> {
        match self {
            Domain::Ball { center, radius } => {
                if center.dim() != d || !(*radius > 0.0) || !center.is_finite() {
                    return Err(Error::invalid("malformed ball in domain"));
                }
            }
            Domain::Box { min, max } => {
                if min.dim() != d || max.dim() != d || (0..d).any(|i| !(min.get(i) < max.get(i))) {
                    return Err(Error::invalid("malformed box in domain"));
                }
            }
            Domain::Union { parts } | Domain::Intersection { parts } => {
                if parts.is_empty() {
                    return Err(Error::invalid("empty union or intersection in domain"));
                }
                for p in parts {
                    p.validate_dim(d)?;
                }
            }
        }
        Ok(())
    }

    pub fn signed_distance(&self, p: &Point) -> f64 {
        match self {
            Domain::Ball { center, radius } => p.dist(center) - radius,
            Domain::Box { min, max } => {
                let mut outside = 0.0;
                let mut inside = f64::NEG_INFINITY;
                for i in 0..min.dim() {
                    let c = 0.5 * (min.get(i) + max.get(i));
                    let h = 0.5 * (max.get(i) - min.get(i));
                    let q = (p.get(i) - c).abs() - h;
                    if q > 0.0 {
                        outside += q * q;
                    }
                    inside = inside.max(q);
                }
                if outside > 0.0 {
                    outside.sqrt()
                } else {
                    inside
                }
            }
            Domain::Union { parts } => parts
                .iter()
                .map(|d| d.signed_distance(p))
                .fold(f64::INFINITY, f64::min),
            Domain::Intersection { parts } => parts
                .iter()
                .map(|d| d.signed_distance(p))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.signed_distance(p) < 0.0
    }

    /// The set `{signed distance < −eps}`, pushed down to the leaves.
    pub fn offset(&self, eps: f64) -> Result<Domain> {
        if !(eps >= 0.0) {
            return Err(Error::invalid(format!("offset must be ≥ 0, got {eps}")));
        }
        Ok(match self {
            Domain::Ball { center, radius } => {
                if eps >= *radius {
                    return Err(Error::invalid(format!(
                        "offset {eps} empties a ball of radius {radius}"
                    )));
                }
                Domain::Ball {
                    center: *center,
                    radius: radius - eps,
                }
            }
            Domain::Box { min, max } => {
                let (mut lo, mut hi) = (*min, *max);
                for i in 0..min.dim() {
                    lo.set(i, min.get(i) + eps);
                    hi.set(i, max.get(i) - eps);
                    if lo.get(i) >= hi.get(i) {
                        return Err(Error::invalid(format!("offset {eps} empties a box")));
                    }
                }
                Domain::Box { min: lo, max: hi }
            }
            Domain::Union { parts } => {
                // parts thinner than 2·eps drop out of the union
                let kept: Vec<Domain> = parts.iter().filter_map(|p| p.offset(eps).ok()).collect();
                if kept.is_empty() {
                    return Err(Error::invalid(format!("offset {eps} empties the domain")));
                }
                Domain::Union { parts: kept }
            }
            Domain::Intersection { parts } => Domain::Intersection {
                parts: parts.iter().map(|p| p.offset(eps)).collect::<Result<_>>()?,
            },
        })
    }

    pub fn bounding_box(&self) -> BoundingBox {
        match self {
            Domain::Ball { center, radius } => {
                let (mut lo, mut hi) = (*center, *center);
                for i in 0..center.dim() {
                    lo.set(i, center.get(i) - radius);
                    hi.set(i, center.get(i) + radius);
                }
                BoundingBox { min: lo, max: hi }
            }
            Domain::Box { min, max } => BoundingBox { min: *min, max: *max },
            Domain::Union { parts } => {
                let mut it = parts.iter().map(Domain::bounding_box);
                let first = it.next().expect("validated union is nonempty");
                it.fold(first, |a, b| a.hull(&b))
            }
            Domain::Intersection { parts } => {
                let mut it = parts.iter().map(Domain::bounding_box);
                let first = it.next().expect("validated intersection is nonempty");
                it.fold(first, |a, b| a.meet(&b))
            }
        }
    }

    /// Largest signed depth found on a grid of `res` cells per axis; a lower
    /// bound for the inradius.
    pub fn inradius_estimate(&self, res: usize) -> f64 {
        let mut best: f64 = 0.0;
        self.for_each_grid_cell(res, |_, p| best = best.max(-self.signed_distance(&p)));
        best
    }

    /// Number of connected pieces of the grid cells whose centers lie inside.
    pub fn grid_components(&self, res: usize) -> usize {
        let d = self.dim();
        let total = res.pow(d as u32);
        let mut inside = vec![false; total];
        self.for_each_grid_cell(res, |idx, p| inside[idx] = self.contains(&p));
        let mut seen = vec![false; total];
        let mut components = 0;
        let mut stack = Vec::new();
        for start in 0..total {
            if !inside[start] || seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(cur) = stack.pop() {
                let mut stride = 1;
                for _ in 0..d {
                    let coord = (cur / stride) % res;
                    if coord > 0 {
                        let nb = cur - stride;
                        if inside[nb] && !seen[nb] {
                            seen[nb] = true;
                            stack.push(nb);
                        }
                    }
                    if coord + 1 < res {
                        let nb = cur + stride;
                        if inside[nb] && !seen[nb] {
                            seen[nb] = true;
                            stack.push(nb);
                        }
                    }
                    stride *= res;
                }
            }
        }
        components
    }

    fn for_each_grid_cell(&self, res: usize, mut f: impl FnMut(usize, Point)) {
        let d = self.dim();
        let bb = self.bounding_box();
        let total = res.pow(d as u32);
        for idx in 0..total {
            let mut p = Point::origin(d);
            let mut c = idx;
            for i in 0..d {
                let k = c % res;
                c /= res;
                let lo = bb.min.get(i);
                let hi = bb.max.get(i);
                p.set(i, lo + (hi - lo) * (k as f64 + 0.5) / res as f64);
            }
            f(idx, p);
        }
    }
}

/// Grid resolution used for connectivity checks in dimension `d`.
pub(crate) fn connectivity_resolution(d: usize) -> usize {
    match d {
        2 => 256,
        3 => 48,
        _ => 16,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pt(c: &[f64]) -> Point {
        Point::from_slice(c).unwrap()
    }

    #[test]
    fn ball_and_box_examples() {
        let b = Domain::unit_ball(2).unwrap();
        assert_eq!(b.signed_distance(&pt(&[0.0, 0.0])), -1.0);
        let bx = Domain::cuboid(pt(&[0.0, 0.0]), pt(&[2.0, 1.0])).unwrap();
        assert_eq!(bx.signed_distance(&pt(&[1.0, 0.5])), -0.5);
        assert_relative_eq!(bx.signed_distance(&pt(&[3.0, 2.0])), 2f64.sqrt());
        assert_eq!(bx.signed_distance(&pt(&[2.0, 0.3])), 0.0);
    }

    fn box_sd_brute(lo: &[f64], hi: &[f64], p: &Point) -> f64 {
        // distance to the complement or to the box, by clamping
        let inside = (0..lo.len()).all(|i| p.get(i) > lo[i] && p.get(i) < hi[i]);
        if inside {
            -(0..lo.len())
                .map(|i| (p.get(i) - lo[i]).min(hi[i] - p.get(i)))
                .fold(f64::INFINITY, f64::min)
        } else {
            (0..lo.len())
                .map(|i| {
                    let c = p.get(i).clamp(lo[i], hi[i]);
                    (p.get(i) - c).powi(2)
                })
                .sum::<f64>()
                .sqrt()
        }
    }

    #[test]
    fn l_shape_matches_component_brute_force() {
        let l = Domain::l_shape();
        let mut state = 99u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..10_000 {
            let p = pt(&[-0.5 + 3.0 * next(), -0.5 + 3.0 * next()]);
            let a = box_sd_brute(&[0.0, 0.0], &[2.0, 1.0], &p);
            let b = box_sd_brute(&[0.0, 0.0], &[1.0, 2.0], &p);
            assert_relative_eq!(l.signed_distance(&p), a.min(b), epsilon = 1e-12);
        }
    }

    #[test]
    fn offsets() {
        let b = Domain::unit_ball(3).unwrap().offset(0.25).unwrap();
        assert_eq!(b, Domain::Ball { center: Point::origin(3), radius: 0.75 });
        let bx = Domain::cuboid(pt(&[0.0, 0.0]), pt(&[2.0, 1.0])).unwrap().offset(0.1).unwrap();
        assert_eq!(bx, Domain::Box { min: pt(&[0.1, 0.1]), max: pt(&[1.9, 0.9]) });
        assert!(Domain::unit_ball(2).unwrap().offset(1.0).is_err());
        let l = Domain::l_shape().offset(0.2).unwrap();
        assert!(l.contains(&pt(&[1.5, 0.5])));
        assert!(!l.contains(&pt(&[1.5, 0.9])));
    }

    #[test]
    fn connectivity() {
        assert_eq!(Domain::l_shape().grid_components(128), 1);
        let two = Domain::Union {
            parts: vec![
                Domain::ball(pt(&[0.0, 0.0]), 0.5).unwrap(),
                Domain::ball(pt(&[2.0, 0.0]), 0.5).unwrap(),
            ],
        };
        assert_eq!(two.grid_components(128), 2);
        assert!(Domain::l_shape().inradius_estimate(128) > 0.49);
    }

    #[test]
    fn presets() {
        assert!(Domain::preset("lshape", 2).is_ok());
        assert!(Domain::preset("lshape", 3).is_err());
        assert_eq!(Domain::preset("box", 3).unwrap().dim(), 3);
        assert!(Domain::preset("torus", 2).is_err());
    }

    proptest! {
        #[test]
        fn signed_distance_is_lipschitz(
            a in prop::array::uniform2(-1.0f64..3.0),
            b in prop::array::uniform2(-1.0f64..3.0),
        ) {
            let (p, q) = (pt(&a), pt(&b));
            for dom in [Domain::l_shape(), Domain::unit_ball(2).unwrap(), Domain::l_shape().offset(0.3).unwrap()] {
                let diff = (dom.signed_distance(&p) - dom.signed_distance(&q)).abs();
                prop_assert!(diff <= p.dist(&q) * (1.0 + 1e-12) + 1e-15);
            }
        }
    }
}
