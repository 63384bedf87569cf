//! Desk-scale numerical laboratory for the disordered Bose-Hubbard model.
//!
//! Everything is built on fixed-particle-number Fock bases and a small
//! bosonic term algebra. Frequencies are angular (rad/ns) and times are in ns
//! throughout; conversion from linear MHz happens only at the edges
//! (see [`units`]).
//!
//! Module map:
//! - [`lattice`], [`basis`], [`terms`], [`sparse`], [`disorder`]: lattices, Fock
//!   sectors, Hamiltonian term lists and their sparse assembly.
//! - [`spectra`], [`observables`]: eigensolvers and static observables.
//! - [`dynamics`]: scheduled time evolution and adiabatic preparation.
//! - [`probes`]: compressibility and Bragg-spectroscopy protocols.
//! - [`tomography`]: qutrit correlator tomography emulation.
//! - [`meanfield`]: Gutzwiller statics and excitation spectrum.
//! - [`devicemodel`]: bare transmon model, exact Schrieffer-Wolff and
//!   linked-cluster expansion.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod devicemodel;
pub mod disorder;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod meanfield;
pub mod observables;
pub mod probes;
pub mod sparse;
pub mod spectra;
pub mod terms;
pub mod tomography;
pub mod units;

pub use basis::FockBasis;
pub use disorder::{sample_disorder, DisorderRealization};
pub use error::{Error, Result};
pub use lattice::Lattice;
pub use num_complex::Complex64;
pub use sparse::CsrMatrix;
pub use spectra::{solve_low_spectrum, EigenSolution, StateVector};
pub use terms::{BoseOp, BoseTermList, Factor, Term};
