//! Pilot-wave dynamics for closed-form quantum states.
//!
//! Two laws of motion share the same wave functions: de Broglie's
//! first-order guidance law `m dq/dt = grad S` and Bohm's second-order law
//! `m d^2q/dt^2 = -grad(V + Q)`. On the surface `p = grad S` they produce the
//! same trajectories; off it, Bohm's law allows momenta that never relax.

pub mod special_functions;
pub mod quantum_state;
pub mod ode;
pub mod dynamics;
pub mod ensemble;
pub mod asymptotics;
pub mod field_mode;
pub mod criteria;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
