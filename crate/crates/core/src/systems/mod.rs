//! Generators for the synthetic spatiotemporal test systems: a lattice of
//! coupled Hénon maps, the Lorenz-96 ring and the Kuramoto-Sivashinsky PDE,
//! plus a synthetic butterfly-diagram grid for exercising the file-based path.
//!
//! Every generator is a pure function of its config. Random initial conditions
//! come from [`seeded_rng`], a ChaCha8 stream keyed by a `u64` seed, so grids
//! are reproducible across platforms.

mod butterfly;
mod henon;
mod ks;
mod lorenz96;

pub use butterfly::{synthetic_butterfly, ButterflyConfig};
pub use henon::{henon_local_update, simulate_henon, HenonLatticeConfig};
pub use ks::{simulate_ks, Etdrk4Coefficients, KsConfig, KsInit, KsSolver};
pub use lorenz96::{lorenz96_rhs, rk4_step, simulate_lorenz96, Lorenz96Config, Lorenz96Init};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Magnitude beyond which a trajectory is declared divergent.
pub const DIVERGENCE_BOUND: f64 = 1e6;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn diverged(state: &[f64]) -> bool {
    state.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_BOUND)
}
