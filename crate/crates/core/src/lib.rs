//! Simulation and certification toolkit for Schmidt's (α,β)-game and the
//! k-dimensional β-absolute game.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: exact rational balls, affine subspaces and the
//!   containment/avoidance predicates the game rules are stated in.
//! * [`engine`]: the game state machines, legality checks and the `play`
//!   loop driving pluggable strategies.
//! * [`strategies`]: explicit Alice strategies (badly approximable vectors,
//!   C¹ pullback, toral orbits, digit games) and adversarial Bobs.
//! * [`fractals`]: closed-set oracles, packing counts, diffuseness and
//!   microset-width estimation.
//! * [`measures`]: mass-distribution trees and sampled decay, Federer and
//!   Ahlfors tests.
//! * [`certify`]: strategy-agnostic finite certificates and closed-form
//!   dimension bounds.
//! * [`config`]: declarative experiment configs used by the `schmidt` CLI.

pub mod certify;
pub mod config;
pub mod engine;
pub mod error;
pub mod fractals;
pub mod geometry;
pub mod measures;
pub mod strategies;

pub use error::{Error, Result};
