//! Numerical laboratory for the Blasius boundary layer as the downstream
//! attractor of the 2D stationary Prandtl equations.
//!
//! The crate builds the self-similar Blasius profile by shooting
//! ([`blasius`]), certifies the global nonnegativity of the structural
//! quantity Ω ([`omega`]), marches the Prandtl system downstream in von Mises
//! variables w = u² with an independent physical-variable marcher as a
//! cross-check ([`march`], [`physical`]), evaluates weighted norms, the
//! energy/division ledgers and the Nash ratio at every recorded station
//! ([`ledger`]), and fits decay exponents of u − ū and v − v̄ against their
//! predicted rates, calibrating the fitting pipeline on closed-form heat
//! kernels ([`decay`]).
//!
//! Experiments are driven by a line-oriented plan file ([`plan`]) and the
//! `prandtl-lab` binary; [`runner`] ties the stages into reproducible,
//! manifest-tracked runs.

// stencil and quadrature kernels index several arrays per loop
#![allow(clippy::needless_range_loop)]

pub mod blasius;
pub mod csvio;
pub mod decay;
pub mod grid;
pub mod ledger;
pub mod march;
pub mod omega;
pub mod physical;
pub mod plan;
pub mod runner;

pub use blasius::{BlasiusError, BlasiusProfile, ShootConfig};
pub use march::{History, MarchConfig, MarchError, Station};
pub use plan::{Plan, PlanError};
