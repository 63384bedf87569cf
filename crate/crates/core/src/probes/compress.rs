//! Field-cooled and zero-field-cooled compressibility runs.

use rayon::prelude::*;

use super::tilt::{applied_tilt_amplitude, compressibility, tilt_pattern, TiltSpec};
use crate::basis::build_basis;
use crate::disorder::sample_disorder;
use crate::dynamics::{
    adiabatic_prepare, propagate, ParametricHamiltonian, Params, PrepTarget, PrepTimes, PropagatorConfig, Shape,
};
use crate::error::{domain, Result};
use crate::lattice::Lattice;
use crate::observables::densities;
use crate::spectra::StateVector;

/// Order in which tilt and couplings are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Tilt ramps in together with the couplings.
    FieldCooled,
    /// Couplings first, tilt ramped on afterwards over `t_field`.
    ZeroFieldCooled,
}

/// Everything except the disorder seed.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressibilitySetup {
    pub u: f64,
    pub j: f64,
    /// Disorder width `W`.
    pub width: f64,
    pub tilt: TiltSpec,
    pub times: PrepTimes,
    /// Duration of the tilt ramp in the zero-field-cooled order (ns).
    pub t_field: f64,
    pub nmax: usize,
    pub propagator: PropagatorConfig,
}

impl CompressibilitySetup {
    pub fn new(u: f64, j: f64, width: f64, tilt: TiltSpec) -> Self {
        CompressibilitySetup {
            u,
            j,
            width,
            tilt,
            times: PrepTimes::default(),
            t_field: 250.0,
            nmax: 2,
            propagator: PropagatorConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompressibilityRun {
    pub seed: u64,
    pub kappa: f64,
    pub densities: Vec<f64>,
    pub state: StateVector,
}

/// One disorder realization through the chosen protocol.
pub fn run_compressibility_protocol(
    lattice: &Lattice,
    protocol: Protocol,
    setup: &CompressibilitySetup,
    seed: u64,
) -> Result<CompressibilityRun> {
    let n = lattice.nsites();
    let ham = ParametricHamiltonian::new(lattice, build_basis(lattice, n, setup.nmax)?)?;
    run_with(&ham, lattice, protocol, setup, seed)
}

fn run_with(
    ham: &ParametricHamiltonian,
    lattice: &Lattice,
    protocol: Protocol,
    setup: &CompressibilitySetup,
    seed: u64,
) -> Result<CompressibilityRun> {
    if setup.tilt.amplitude == 0.0 {
        return domain("compressibility needs a nonzero tilt");
    }
    let n = lattice.nsites();
    let mu = sample_disorder(setup.width, 0.0, n, seed)?.mu;
    let tilt = applied_tilt_amplitude(&mu, &setup.tilt, lattice)?;
    let mut target = PrepTarget::new(setup.u, setup.j, mu);
    target.tilt_pattern = tilt_pattern(lattice)?;
    let state = match protocol {
        Protocol::FieldCooled => {
            target.params.tilt = tilt;
            adiabatic_prepare(ham, &target, &setup.times, &setup.propagator)?.state
        }
        Protocol::ZeroFieldCooled => {
            let prepared = adiabatic_prepare(ham, &target, &setup.times, &setup.propagator)?;
            let t0 = prepared.schedule.end_time();
            let tilted: Params = target.params.clone().with_tilt(tilt);
            let schedule = prepared.schedule.then(setup.t_field, tilted, Shape::Smoothstep)?;
            propagate(ham, &prepared.state, &schedule, t0, schedule.end_time(), &setup.propagator)?
        }
    };
    let dens = densities(&state, ham.basis());
    Ok(CompressibilityRun {
        seed,
        kappa: compressibility(&dens, setup.tilt.amplitude, lattice)?,
        densities: dens,
        state,
    })
}

/// Mean and standard error over realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStat {
    pub mean: f64,
    pub sem: f64,
    pub values: Vec<f64>,
}

impl EnsembleStat {
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sem = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        EnsembleStat { mean, sem, values }
    }
}

/// `κ` over a list of disorder seeds, evaluated in parallel; results keep
/// the order of `seeds`.
pub fn compressibility_ensemble(
    lattice: &Lattice,
    protocol: Protocol,
    setup: &CompressibilitySetup,
    seeds: &[u64],
) -> Result<(EnsembleStat, Vec<CompressibilityRun>)> {
    if seeds.is_empty() {
        return domain("ensemble needs at least one seed");
    }
    let n = lattice.nsites();
    let ham = ParametricHamiltonian::new(lattice, build_basis(lattice, n, setup.nmax)?)?;
    let runs = seeds
        .par_iter()
        .map(|&s| run_with(&ham, lattice, protocol, setup, s))
        .collect::<Result<Vec<_>>>()?;
    let stat = EnsembleStat::from_values(runs.iter().map(|r| r.kappa).collect());
    Ok((stat, runs))
}
