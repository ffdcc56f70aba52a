//! Champagne constructions: single layers of bubbles on a sphere, the unit
//! ball and one-bubble sequences, annulus fillers, and general domains.

mod annulus;
mod audit;
mod config;
mod general;
mod ladder;
mod layer;
mod one_bubble;
mod radii;
mod unit_ball;

pub use annulus::{fill_annulus, layer_count_for, reference_stack, AnnulusGroup, AnnulusRequest, DEFAULT_MAX_LAYERS};
pub use audit::{audit, AuditCheck, AuditReport};
pub use config::{BuildKind, ChampagneConfig, LevelRecord, Totals, MATERIALIZE_LIMIT, BUBBLE_EMIT_LIMIT};
pub use general::{build_general, GeneralParams};
pub use ladder::ladder_bound;
pub use layer::{
    beta_from_log_r, build_layer, build_layer_log, layer_seed, rho0_threshold, LayerKind, LayerSpec,
    SphereLayer,
};
pub use one_bubble::{build_one_bubble_sequence, check_k0, one_bubble_layer_params, OneBubbleParams};
pub use radii::{geometric_radii, log2_radii, tail_sum, RadiiRule};
pub use unit_ball::{build_unit_ball, search_log_radius, UnitBallParams};
