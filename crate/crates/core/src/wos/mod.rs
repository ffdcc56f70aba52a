//! Walk-on-spheres estimates of hitting probabilities.

mod kappa;
mod report;
mod stats;
mod walk;

pub use kappa::{
    empty_layer_kappa, kappa_for_layer, layer_bubbles, layer_kappa_estimate, one_bubble_minorant, probe_directions,
    probe_kappa, stack_kappa, KappaEstimate, MinorantProbe, ProbeEstimate,
};
pub use report::{combined_sigma, default_starts, unavoidability_report, DirectEstimate, ReportOptions, UnavoidabilityReport};
pub use stats::{interval_sigma, wilson_interval, Z95};
pub use walk::{walk_once, wos_hit_probability, Outcome, WosEstimate, WosParams, RELATIVE_HIT_BAND};
