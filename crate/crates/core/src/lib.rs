//! Quasistatic force-velocity models of valve-controlled hydraulic cylinders
//! and their coupling to rigid-body simulations.
//!
//! The central object is the set-valued map `f ∈ Γ(v)` from rod velocity to
//! actuator force ([`actuator::gamma`]) and its single-valued resolvent
//! `v = Λ(β, f̄)` ([`actuator::lambda`]), which solves `β v + f̄ ∈ Γ(v)` in
//! closed form. [`coupling`] turns the resolvent into a time-stepping scheme
//! through a virtual spring-damper, [`regen`] and [`multipump`] extend the
//! circuit, and [`oracle`] is a slow brute-force reference used in tests.

pub mod actuator;
pub mod coupling;
pub mod error;
pub mod mbs;
pub mod multipump;
pub mod nonsmooth;
pub mod oracle;
pub mod regen;
pub mod rootfind;
pub mod scenario;

pub use actuator::{
    gamma, gamma_bounds_at_zero, lambda, normalize, valve_states, ActuatorParams, NormalizedInputs,
    Regime, ValveCommand,
};
pub use error::{Error, Result};
pub use nonsmooth::Interval;
