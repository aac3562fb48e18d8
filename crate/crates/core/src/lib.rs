//! Simulation core for direct water-to-air optical wireless links.
//!
//! The crate is `no_std` (with `alloc`) and covers the whole numerical path:
//!
//! - [`spectrum`]: JONSWAP frequency spectrum and directional spreading.
//! - [`surface`]: harmonic-superposition sea surface with analytic slopes.
//! - [`optics`]: Snell refraction, Fresnel transmittance and the four
//!   multiplicative channel-gain factors.
//! - [`tracer`]: receiver-screen centroid ray tracer and the TX→RX link
//!   path solver.
//! - [`env`]: episodic beam-alignment environment (reset/step).
//! - [`ddpg`]: actor/critic networks, replay buffer and the DDPG learner.
//! - [`bench`]: oracle and heuristic baseline policies plus evaluation metrics.
//!
//! IO, configuration files and the command line live in the `hydrolink` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bench;
pub mod ddpg;
pub mod env;
mod error;
pub mod math;
pub mod optics;
pub mod spectrum;
pub mod surface;
pub mod tracer;

pub use error::{Error, Result};
pub use math::{EulerZxz, Vec3};

/// Seeded generator used everywhere randomness enters the simulation.
///
/// ChaCha with 8 rounds, seeded through `SeedableRng::seed_from_u64`
/// (PCG32 seed expansion). Both algorithms are fixed, so a seed reproduces
/// the same stream on every platform.
pub type SimRng = rand_chacha::ChaCha8Rng;
