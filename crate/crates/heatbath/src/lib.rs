//! Collision-based diffusion toolkit.
//!
//! A heavy tracer exchanges momentum with light heat-bath particles through
//! elastic collisions timed by a second-order Gamma clock. This crate builds
//! the pieces needed to simulate and audit that picture end to end:
//!
//! - [`params`]: the mass-ratio parameter set and its derived constants.
//! - [`collision`]: elastic-collision transfer matrices, scattering
//!   ensembles, and per-event energy bookkeeping.
//! - [`clock`]: the Gamma inter-collision clock and correlated
//!   forward/backward shock sampling.
//! - [`path`]: piecewise-linear collision paths, their diffusion limit, and
//!   drift statistics estimated from path ensembles.
//! - [`wave`]: a Crank–Nicolson Schrödinger field, Gaussian packets, and the
//!   forward/backward drifts a wave function induces.
//! - [`energy`]: conservation audits tying collision, path, and wave
//!   energies together.
//! - [`relativity`]: the Minkowski-like invariant satisfied by collision
//!   paths and the boost algebra that preserves it.
//!
//! Ensemble computations run data-parallel under the default `parallel`
//! feature and fall back to sequential loops without it; per-path seeded
//! RNG streams make the two modes produce identical output.

pub mod clock;
pub mod collision;
pub mod energy;
pub mod error;
pub mod params;
pub mod path;
pub mod relativity;
pub mod wave;

pub use error::{Error, Result};
pub use params::{derive_params, HeatbathParams};
