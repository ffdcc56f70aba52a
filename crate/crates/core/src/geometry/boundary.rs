use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Domain;
use crate::point::Point;

/// Target accuracy of projected boundary points.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;
const NEWTON_STEPS: usize = 60;
const GRADIENT_STEP: f64 = 1e-7;

/// Quasi-uniform points on `∂U`: uniform samples from a thin band around the
/// boundary, projected by Newton steps along the numerical gradient of the
/// signed distance. Every returned point has `|signed distance| < 1e-9`.
pub fn sample_boundary(domain: &Domain, count: usize, seed: u64) -> Vec<Point> {
    let d = domain.dim();
    let bb = domain.bounding_box();
    let band = 0.02 * bb.diagonal();
    let mut lo = bb.min;
    let mut hi = bb.max;
    for i in 0..d {
        lo.set(i, lo.get(i) - band);
        hi.set(i, hi.get(i) + band);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count && attempts < count.saturating_mul(10_000).max(1_000_000) {
        attempts += 1;
        let mut p = Point::origin(d);
        for i in 0..d {
            p.set(i, rng.random_range(lo.get(i)..hi.get(i)));
        }
        if domain.signed_distance(&p).abs() >= band {
            continue;
        }
        if let Some(q) = project(domain, p) {
            out.push(q);
        }
    }
    out
}

fn project(domain: &Domain, mut p: Point) -> Option<Point> {
    let d = p.dim();
    for _ in 0..NEWTON_STEPS {
        let s = domain.signed_distance(&p);
        if s.abs() < BOUNDARY_TOLERANCE {
            return Some(p);
        }
        let mut g = Point::origin(d);
        for i in 0..d {
            let e = Point::axis(d, i);
            let fwd = domain.signed_distance(&p.offset(&e, GRADIENT_STEP));
            let back = domain.signed_distance(&p.offset(&e, -GRADIENT_STEP));
            g.set(i, (fwd - back) / (2.0 * GRADIENT_STEP));
        }
        let gn = g.norm_sq();
        if !(gn > 1e-12) {
            return None;
        }
        p = p.offset(&g, -s / gn);
    }
    (domain.signed_distance(&p).abs() < BOUNDARY_TOLERANCE).then_some(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ball_samples_lie_on_sphere() {
        let b = Domain::ball(Point::from_slice(&[0.5, 0.0, -0.5]).unwrap(), 0.7).unwrap();
        let pts = sample_boundary(&b, 500, 1);
        assert_eq!(pts.len(), 500);
        let c = Point::from_slice(&[0.5, 0.0, -0.5]).unwrap();
        for p in &pts {
            assert_relative_eq!(p.dist(&c), 0.7, epsilon = 1e-9);
        }
    }

    #[test]
    fn box_samples_lie_on_faces() {
        let bx = Domain::preset("box", 2).unwrap();
        let pts = sample_boundary(&bx, 500, 2);
        assert_eq!(pts.len(), 500);
        for p in &pts {
            let (x, y) = (p.get(0), p.get(1));
            let on_face = (x.abs() < 1e-9 || (x - 2.0).abs() < 1e-9) && (-1e-9..=1.0 + 1e-9).contains(&y)
                || (y.abs() < 1e-9 || (y - 1.0).abs() < 1e-9) && (-1e-9..=2.0 + 1e-9).contains(&x);
            assert!(on_face, "{p:?}");
        }
    }

    #[test]
    fn l_shape_samples_validated_by_oracle() {
        let l = Domain::l_shape();
        let pts = sample_boundary(&l, 2000, 3);
        assert_eq!(pts.len(), 2000);
        for p in &pts {
            assert!(l.signed_distance(p).abs() < 1e-9);
        }
        // both arms and the reflex edges get samples
        assert!(pts.iter().any(|p| p.get(0) > 1.5));
        assert!(pts.iter().any(|p| p.get(1) > 1.5));
        assert!(pts.iter().any(|p| (p.get(1) - 1.0).abs() < 1e-9 && p.get(0) > 1.0));
    }

    #[test]
    fn deterministic() {
        let l = Domain::l_shape();
        assert_eq!(sample_boundary(&l, 50, 9), sample_boundary(&l, 50, 9));
    }
}
