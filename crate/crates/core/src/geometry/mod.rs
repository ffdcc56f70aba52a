//! Domains, bubble sets and exhaustions.

mod boundary;
mod domain;
mod exhaustion;
mod index;

pub use boundary::sample_boundary;
pub use domain::{distance_to_boundary, BoundingBox, Domain};
pub use exhaustion::{make_exhaustion, make_exhaustion_with, Exhaustion, ExhaustionParams};
pub use index::{nearest_bubble_brute, Bubble, BubbleSet, Overlap};
