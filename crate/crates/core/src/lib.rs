//! Champagne subdomain constructions and their walk-on-spheres verification.
//!
//! A champagne subdomain is a domain with a locally finite family of small,
//! pairwise disjoint closed balls (bubbles) removed. The builders here choose
//! bubbles so that the total weighted capacity `Σ φ(r_x) h(r_x)` stays below
//! a budget while every layer is hit by Brownian motion with a probability
//! bounded below. The verifier estimates those probabilities by walk on
//! spheres.

pub mod builder;
pub mod error;
pub mod gauge;
pub mod geometry;
pub mod io;
pub mod point;
mod serde_u128;
pub mod sphere_design;
pub mod wos;

pub use error::{Error, Result};
pub use point::Point;
