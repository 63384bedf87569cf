//! Scheduled time evolution in a fixed-number sector.

pub mod hamiltonian;
pub mod propagate;
pub mod protocol;
pub mod schedule;

pub use hamiltonian::{Coefficients, ParametricHamiltonian};
pub use propagate::{coefficients_at, expm_krylov, fidelity, propagate, propagate_observed, Method, PropagatorConfig};
pub use protocol::{adiabatic_prepare, preparation_schedule, ramp_down, unit_filling_state, PrepTarget, PrepTimes, Prepared};
pub use schedule::{Drive, Params, RampSchedule, Shape};
