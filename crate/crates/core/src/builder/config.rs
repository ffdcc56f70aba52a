use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::annulus::AnnulusGroup;
use super::layer::SphereLayer;
use crate::error::{Error, Result};
use crate::gauge::{Gauge, GaugeSet};
use crate::geometry::{Bubble, BubbleSet, Domain};

/// Materialized bubble sets up to this size are stored in config files.
pub const BUBBLE_EMIT_LIMIT: usize = 100_000;

fn omit_bubbles(b: &Option<BubbleSet>) -> bool {
    b.as_ref().is_none_or(|s| s.len() > BUBBLE_EMIT_LIMIT)
}

/// Configurations with at most this many bubbles are materialized (and can
/// be walked on); larger ones keep only their layer descriptions.
pub const MATERIALIZE_LIMIT: u128 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildKind {
    UnitBall,
    OneBubble,
    General,
}

/// Per-level record of a general build.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub n: u32,
    pub offset: f64,
    pub gap: f64,
    pub level_domain: Domain,
    pub y_count: usize,
    pub delta_y: f64,
    /// Largest distance from a boundary sample of `V_n` to the nearest `y`.
    pub y_covering: f64,
    /// Smallest distance between two points of `Y_n`.
    pub y_separation: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    #[serde(with = "crate::serde_u128")]
    pub bubble_count: u128,
    pub capacity_sum: f64,
    pub weighted_sum: f64,
    pub majorant_sum: f64,
}

/// A built configuration: the host domain, its layers (and annulus groups
/// for general builds), and the bubbles when they fit in memory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChampagneConfig {
    pub version: u32,
    pub kind: BuildKind,
    pub d: usize,
    pub domain: Domain,
    pub gauge: Gauge,
    pub delta: f64,
    pub seed: u64,
    pub layers: Vec<SphereLayer>,
    #[serde(default)]
    pub groups: Vec<AnnulusGroup>,
    #[serde(default)]
    pub levels: Vec<LevelRecord>,
    pub totals: Totals,
    /// Parameters of the build, for the record.
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
    /// Written to files only up to [`BUBBLE_EMIT_LIMIT`] bubbles; larger
    /// sets are regenerated from the layers on load.
    #[serde(default, skip_serializing_if = "omit_bubbles")]
    pub bubbles: Option<BubbleSet>,
}

impl ChampagneConfig {
    pub(crate) fn new(kind: BuildKind, domain: Domain, gauges: &GaugeSet, delta: f64, seed: u64) -> Self {
        ChampagneConfig {
            version: 1,
            kind,
            d: gauges.dim(),
            domain,
            gauge: gauges.gauge().clone(),
            delta,
            seed,
            layers: Vec::new(),
            groups: Vec::new(),
            levels: Vec::new(),
            totals: Totals::default(),
            metadata: BTreeMap::new(),
            bubbles: None,
        }
    }

    pub fn gauges(&self) -> Result<GaugeSet> {
        GaugeSet::new(self.d, self.gauge.clone())
    }

    pub fn bubble_count(&self) -> u128 {
        self.layers.iter().map(SphereLayer::count).sum()
    }

    pub(crate) fn recompute_totals(&mut self) {
        let mut t = Totals::default();
        for l in &self.layers {
            t.bubble_count += l.count();
            t.capacity_sum += l.capacity_sum;
            t.weighted_sum += l.weighted_sum;
            t.majorant_sum += l.majorant_sum;
        }
        self.totals = t;
    }

    pub fn is_materialized(&self) -> bool {
        self.bubbles.is_some()
    }

    /// Generates the bubbles from the layers if there are at most
    /// [`MATERIALIZE_LIMIT`] of them; otherwise leaves the config implicit.
    pub fn materialize_if_small(&mut self) -> Result<()> {
        if self.bubbles.is_none() && self.bubble_count() <= MATERIALIZE_LIMIT {
            self.bubbles = Some(self.generate_bubbles()?);
        }
        Ok(())
    }

    /// The bubbles, generated from the layers if not already present.
    pub fn bubble_set(&mut self) -> Result<&BubbleSet> {
        if self.bubbles.is_none() {
            if self.bubble_count() > MATERIALIZE_LIMIT {
                return Err(Error::infeasible(format!(
                    "configuration has {} bubbles, more than can be materialized ({MATERIALIZE_LIMIT})",
                    self.bubble_count()
                )));
            }
            self.bubbles = Some(self.generate_bubbles()?);
        }
        Ok(self.bubbles.as_ref().expect("just generated"))
    }

    pub fn generate_bubbles(&self) -> Result<BubbleSet> {
        let mut out: Vec<Bubble> = Vec::with_capacity(self.bubble_count() as usize);
        for (li, layer) in self.layers.iter().enumerate() {
            let s = layer.bubble_radius();
            if !(s > 0.0) {
                return Err(Error::infeasible(format!(
                    "layer {li} has bubble radius exp({}) below the smallest double",
                    layer.log_s()
                )));
            }
            for c in layer.centers(MATERIALIZE_LIMIT)? {
                out.push(Bubble {
                    center: c,
                    radius: s,
                    layer_id: li as u32,
                    clearance: -self.domain.signed_distance(&c),
                });
            }
        }
        Ok(BubbleSet::new(out))
    }

    /// Copy restricted to the first `k` layers (unit-ball and one-bubble
    /// builds).
    pub fn truncated(&self, k: usize) -> Result<ChampagneConfig> {
        if self.kind == BuildKind::General {
            return Err(Error::invalid("general builds cannot be truncated by layer"));
        }
        if k == 0 || k > self.layers.len() {
            return Err(Error::invalid(format!(
                "truncation to {k} layers out of {}",
                self.layers.len()
            )));
        }
        let mut c = self.clone();
        c.layers.truncate(k);
        c.recompute_totals();
        c.bubbles = match &self.bubbles {
            Some(b) => Some(BubbleSet::new(
                b.bubbles().iter().filter(|x| (x.layer_id as usize) < k).copied().collect(),
            )),
            None => None,
        };
        Ok(c)
    }

    /// Restores derived state after deserialization: regenerates stored
    /// greedy designs.
    pub fn restore(&mut self) -> Result<()> {
        for l in &mut self.layers {
            l.points.restore()?;
        }
        Ok(())
    }
}
