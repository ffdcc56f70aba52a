use serde::{Deserialize, Serialize};

use super::domain::connectivity_resolution;
use super::{sample_boundary, Domain};
use crate::error::{Error, Result};

/// Nested levels `V_1 ⊂ V_2 ⊂ …` of a domain, with the gaps
/// `d_n = min{dist(∂V_n, ∂V_{n−1} ∪ ∂V_{n+1}), 1/n}` (`V_0 = ∅`).
///
/// `levels` holds one more surface than there are gaps, since `d_n` needs
/// `∂V_{n+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exhaustion {
    pub levels: Vec<Domain>,
    pub offsets: Vec<f64>,
    pub gaps: Vec<f64>,
}

impl Exhaustion {
    pub fn len(&self) -> usize {
        self.gaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionParams {
    /// First inward offset `ε_1`; `None` uses a quarter of the inradius.
    pub first_offset: Option<f64>,
    /// `ε_{n+1} = ratio · ε_n`.
    pub ratio: f64,
    /// Boundary samples per level used to measure distances between levels.
    pub samples: usize,
    pub seed: u64,
}

impl Default for ExhaustionParams {
    fn default() -> Self {
        ExhaustionParams {
            first_offset: None,
            ratio: 0.5,
            samples: 4000,
            seed: 0,
        }
    }
}

pub fn make_exhaustion(domain: &Domain, levels: usize) -> Result<Exhaustion> {
    make_exhaustion_with(domain, levels, ExhaustionParams::default())
}

/// Levels `V_n = {signed distance < −ε_n}` with geometrically decreasing
/// offsets.
pub fn make_exhaustion_with(domain: &Domain, levels: usize, params: ExhaustionParams) -> Result<Exhaustion> {
    domain.validate()?;
    if levels == 0 {
        return Err(Error::invalid("an exhaustion needs at least one level"));
    }
    if !(params.ratio > 0.0 && params.ratio < 1.0) {
        return Err(Error::invalid(format!("offset ratio must be in (0,1), got {}", params.ratio)));
    }
    let d = domain.dim();
    let res = connectivity_resolution(d);
    let eps1 = match params.first_offset {
        Some(e) => e,
        None => match domain {
            Domain::Ball { radius, .. } => radius / 4.0,
            _ => domain.inradius_estimate(res) / 4.0,
        },
    };
    if !(eps1 > 0.0) {
        return Err(Error::invalid(format!("first offset must be > 0, got {eps1}")));
    }
    let components = domain.grid_components(res);
    let mut offsets = Vec::with_capacity(levels + 1);
    let mut surfaces = Vec::with_capacity(levels + 1);
    for n in 0..=levels {
        let eps = eps1 * params.ratio.powi(n as i32);
        let v = domain.offset(eps)?;
        let pieces = v.grid_components(res);
        if pieces != components {
            return Err(Error::invalid(format!(
                "offset level {} (ε = {eps}) splits the domain into {pieces} pieces",
                n + 1
            )));
        }
        offsets.push(eps);
        surfaces.push(v);
    }

    let samples: Vec<_> = surfaces
        .iter()
        .enumerate()
        .map(|(i, v)| sample_boundary(v, params.samples, params.seed.wrapping_add(i as u64)))
        .collect();
    // distance from ∂V_i to ∂V_j, measured on samples of ∂V_i
    let dist = |i: usize, j: usize| -> f64 {
        samples[i]
            .iter()
            .map(|p| surfaces[j].signed_distance(p).abs())
            .fold(f64::INFINITY, f64::min)
    };
    for i in 0..levels {
        let worst = samples[i]
            .iter()
            .map(|p| surfaces[i + 1].signed_distance(p))
            .fold(f64::NEG_INFINITY, f64::max);
        if !(worst < 0.0) {
            return Err(Error::invalid(format!(
                "level {} is not compactly inside level {}",
                i + 1,
                i + 2
            )));
        }
    }
    let mut gaps = Vec::with_capacity(levels);
    for n in 1..=levels {
        let i = n - 1;
        let mut g = dist(i, i + 1).min(dist(i + 1, i));
        if i > 0 {
            g = g.min(dist(i, i - 1)).min(dist(i - 1, i));
        }
        g = g.min(1.0 / n as f64);
        if !(g > 0.0) {
            return Err(Error::invalid(format!("exhaustion gap d_{n} is zero")));
        }
        gaps.push(g);
    }
    Ok(Exhaustion {
        levels: surfaces,
        offsets,
        gaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::Point;
    use approx::assert_relative_eq;

    #[test]
    fn concentric_balls() {
        let e = make_exhaustion(&Domain::unit_ball(2).unwrap(), 5).unwrap();
        assert_eq!(e.len(), 5);
        for n in 1..=5 {
            assert_relative_eq!(e.offsets[n - 1], 2f64.powi(-(n as i32) - 1), max_relative = 1e-12);
            let want = (2f64.powi(-(n as i32) - 2)).min(1.0 / n as f64);
            assert_relative_eq!(e.gaps[n - 1], want, max_relative = 1e-6);
        }
    }

    #[test]
    fn single_level_uses_outer_side_only() {
        let e = make_exhaustion(&Domain::unit_ball(3).unwrap(), 1).unwrap();
        assert_eq!(e.levels.len(), 2);
        assert_relative_eq!(e.gaps[0], 0.125, max_relative = 1e-6);
    }

    #[test]
    fn box_levels_shrink() {
        let bx = Domain::preset("box", 2).unwrap();
        let e = make_exhaustion_with(&bx, 2, ExhaustionParams { first_offset: Some(0.2), ..Default::default() }).unwrap();
        assert_eq!(
            e.levels[0],
            Domain::Box {
                min: Point::from_slice(&[0.2, 0.2]).unwrap(),
                max: Point::from_slice(&[1.8, 0.8]).unwrap()
            }
        );
        assert_relative_eq!(e.gaps[0], 0.1, max_relative = 1e-6);
        assert_relative_eq!(e.gaps[1], 0.05, max_relative = 1e-6);
    }

    #[test]
    fn l_shape_nested() {
        let params = ExhaustionParams {
            first_offset: Some(0.3),
            ..Default::default()
        };
        let e = make_exhaustion_with(&Domain::l_shape(), 4, params).unwrap();
        for n in 0..4 {
            assert!(e.gaps[n] > 0.0);
            let eps_diff = e.offsets[n] - e.offsets[n + 1];
            assert!(e.gaps[n] <= eps_diff * (1.0 + 1e-6));
        }
    }

    #[test]
    fn disconnecting_offset_is_rejected() {
        // two balls joined by a thin box
        let dumbbell = Domain::Union {
            parts: vec![
                Domain::ball(Point::from_slice(&[0.0, 0.0]).unwrap(), 0.5).unwrap(),
                Domain::ball(Point::from_slice(&[2.0, 0.0]).unwrap(), 0.5).unwrap(),
                Domain::cuboid(Point::from_slice(&[0.0, -0.05]).unwrap(), Point::from_slice(&[2.0, 0.05]).unwrap()).unwrap(),
            ],
        };
        let params = ExhaustionParams {
            first_offset: Some(0.2),
            ..Default::default()
        };
        let err = make_exhaustion_with(&dumbbell, 2, params).unwrap_err();
        assert!(err.to_string().contains("splits"), "{err}");
    }
}
