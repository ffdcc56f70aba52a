use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{interval_sigma, wilson_interval, Z95};
use crate::error::{Error, Result};
use crate::geometry::{BubbleSet, Domain};
use crate::point::Point;
use crate::sphere_design::gaussian_direction;

/// A walk reaching a bubble within this fraction of its radius counts as a
/// hit even when `ε` is larger than the bubble.
pub const RELATIVE_HIT_BAND: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WosParams {
    pub epsilon: f64,
    pub samples: u64,
    pub seed: u64,
    /// Walks still running after this many steps are counted as exits.
    pub max_steps: u64,
}

impl WosParams {
    pub fn new(epsilon: f64, samples: u64, seed: u64) -> Self {
        WosParams {
            epsilon,
            samples,
            seed,
            max_steps: 1_000_000,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        WosParams { seed, ..self }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        WosParams { epsilon, ..self }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("ε must be > 0, got {}", self.epsilon)));
        }
        if self.samples == 0 {
            return Err(Error::invalid("need at least one sample"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WosEstimate {
    pub p_hat: f64,
    pub hits: u64,
    pub n_samples: u64,
    pub epsilon: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_steps: f64,
    pub seed: u64,
    /// Walks stopped by the step cap (counted as exits).
    pub truncated: u64,
}

impl WosEstimate {
    fn from_counts(hits: u64, n: u64, steps: u64, truncated: u64, params: &WosParams) -> Self {
        let (ci_low, ci_high) = wilson_interval(hits, n, Z95);
        WosEstimate {
            p_hat: hits as f64 / n as f64,
            hits,
            n_samples: n,
            epsilon: params.epsilon,
            ci_low,
            ci_high,
            mean_steps: steps as f64 / n as f64,
            seed: params.seed,
            truncated,
        }
    }

    /// Standard deviation implied by the 95% interval.
    pub fn sigma(&self) -> f64 {
        interval_sigma(self.ci_low, self.ci_high)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Hit,
    Exit,
    Truncated,
}

/// One walk from `start`; returns the outcome and the number of steps.
pub fn walk_once(
    domain: &Domain,
    obstacles: &BubbleSet,
    start: &Point,
    epsilon: f64,
    max_steps: u64,
    rng: &mut ChaCha8Rng,
) -> (Outcome, u64) {
    let d = start.dim();
    let mut p = *start;
    for step in 0..max_steps {
        let to_domain = -domain.signed_distance(&p);
        let mut radius = to_domain;
        if let Some((to_bubble, id)) = obstacles.nearest_below(&p, to_domain) {
            let band = epsilon.min(RELATIVE_HIT_BAND * obstacles.get(id).radius);
            if to_bubble < band {
                return (Outcome::Hit, step);
            }
            radius = to_bubble;
        }
        if to_domain < epsilon {
            return (Outcome::Exit, step);
        }
        p = p.offset(&gaussian_direction(rng, d), radius);
    }
    (Outcome::Truncated, max_steps)
}

/// Probability that Brownian motion from `start` reaches a bubble of
/// `obstacles` before leaving `domain`, by walk on spheres.
///
/// Sample `i` draws from stream `i` of a ChaCha8 generator keyed by the seed,
/// so the result does not depend on the number of threads.
pub fn wos_hit_probability(domain: &Domain, obstacles: &BubbleSet, start: &Point, params: &WosParams) -> Result<WosEstimate> {
    params.validate()?;
    if start.dim() != domain.dim() {
        return Err(Error::invalid("start point has the wrong dimension"));
    }
    if !(domain.signed_distance(start) < 0.0) {
        return Err(Error::domain(format!("start {:?} is not inside the domain", start.coords())));
    }
    if let Some((dist, id)) = obstacles.nearest(start) {
        if dist <= 0.0 {
            return Err(Error::domain(format!(
                "start {:?} lies in bubble {id}",
                start.coords()
            )));
        }
    }
    let (hits, steps, truncated) = (0..params.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(i);
            let (outcome, steps) = walk_once(domain, obstacles, start, params.epsilon, params.max_steps, &mut rng);
            (
                (outcome == Outcome::Hit) as u64,
                steps,
                (outcome == Outcome::Truncated) as u64,
            )
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    Ok(WosEstimate::from_counts(hits, params.samples, steps, truncated, params))
}
