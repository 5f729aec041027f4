//! Classical n-body scattering with long-range pair potentials.
//!
//! The library is organized around three layers:
//!
//! - problem definition and pairwise machinery ([`system`]),
//! - the three dynamics — numerical n-body flow, closed-form free flow and
//!   time-dependent Dollard comparison flow ([`flows`], [`integrate`]),
//! - asymptotic analysis: the finally free region with its membership
//!   inequalities ([`free_region`]), asymptotic-velocity extraction and the
//!   Møller / Dollard–Møller transform suite ([`scattering`]), backed by
//!   closed-form oracles ([`oracles`]).
//!
//! Everything downstream of the integrator works on dyadic time checkpoints
//! `t_k = t0 * 2^k`; limits `t -> ∞` are extracted by power-law Richardson
//! extrapolation with the decay exponents predicted by the theory
//! ([`extrapolate`]).

// mod dop853_tableau;
// pub mod cli;
pub mod error;
pub mod extrapolate;
pub mod flows;
// pub mod free_region;
pub mod integrate;
// pub mod oracles;
pub mod pchip;
pub mod quad;
pub mod radial;
pub mod rng;
// pub mod scattering;
pub mod system;
// pub mod verify;

pub use error::{Error, Result};
pub use flows::{dollard_flow, dollard_w, f_alpha, free_flow, nbody_flow};
// tmp
pub use integrate::{IntegratorConfig, Termination, Trajectory};
pub use system::{PairStats, PhaseState, PotentialModel, SeminormEstimate, SystemSpec};
