//! Preparation and readout sequences.
//!
//! Preparation starts from the unit-filling product state with couplings off,
//! brings every site onto resonance, ramps hopping and chemical potentials
//! to their targets together, then holds.

use nalgebra::DVector;
use num_complex::Complex64;

use super::hamiltonian::ParametricHamiltonian;
use super::propagate::{coefficients_at, fidelity, propagate, PropagatorConfig};
use super::schedule::{Params, RampSchedule, Shape};
use crate::error::{domain, Result};
use crate::spectra::{solve_low_spectrum, StateVector};

/// Durations (ns) of the preparation stages.
#[derive(Debug, Clone, PartialEq)]
pub struct PrepTimes {
    pub resonance: f64,
    pub ramp: f64,
    pub hold: f64,
    pub shape: Shape,
}

impl Default for PrepTimes {
    fn default() -> Self {
        PrepTimes {
            resonance: 5.0,
            ramp: 100.0,
            hold: 10.0,
            shape: Shape::Smoothstep,
        }
    }
}

/// What to prepare.
#[derive(Debug, Clone, PartialEq)]
pub struct PrepTarget {
    pub u: f64,
    /// Final hopping, chemical potentials and tilt amplitude.
    pub params: Params,
    pub tilt_pattern: Vec<f64>,
    /// Chemical potentials while parked before the sequence.
    pub idle_mu: Vec<f64>,
}

impl PrepTarget {
    /// Target with no tilt, parked on resonance.
    pub fn new(u: f64, j: f64, mu: Vec<f64>) -> Self {
        let n = mu.len();
        PrepTarget {
            u,
            params: Params::new(j, mu),
            tilt_pattern: vec![0.0; n],
            idle_mu: vec![0.0; n],
        }
    }
}

/// A prepared state with its energy bookkeeping.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub state: StateVector,
    pub schedule: RampSchedule,
    /// `⟨H⟩` at the end of the hold.
    pub energy: f64,
    /// Exact ground energy of the held Hamiltonian.
    pub ground_energy: f64,
    /// Overlap with the exact ground state.
    pub ground_fidelity: f64,
}

/// `|1…1⟩` in a unit-filling sector.
pub fn unit_filling_state(ham: &ParametricHamiltonian) -> Result<StateVector> {
    let b = ham.basis();
    if b.ntotal() != b.nsites() {
        return domain("product initial state needs one particle per site");
    }
    let ones = vec![1u8; b.nsites()];
    let mut v = DVector::zeros(b.dim());
    v[b.index(&ones).expect("unit filling lies in the sector")] = Complex64::new(1.0, 0.0);
    Ok(v)
}

/// Schedule of the preparation sequence, starting at `t = 0`.
pub fn preparation_schedule(target: &PrepTarget, times: &PrepTimes) -> Result<RampSchedule> {
    let n = target.params.mu.len();
    if target.idle_mu.len() != n || target.tilt_pattern.len() != n {
        return domain("preparation target vectors disagree on the number of sites");
    }
    RampSchedule::new(target.u, Params::new(0.0, target.idle_mu.clone()), 0.0)
        .with_tilt_pattern(target.tilt_pattern.clone())?
        .then(times.resonance, Params::new(0.0, vec![0.0; n]), Shape::Linear)?
        .then(times.ramp, target.params.clone(), times.shape)?
        .hold(times.hold)
}

/// Run the preparation sequence from `|1…1⟩`.
pub fn adiabatic_prepare(
    ham: &ParametricHamiltonian,
    target: &PrepTarget,
    times: &PrepTimes,
    config: &PropagatorConfig,
) -> Result<Prepared> {
    let schedule = preparation_schedule(target, times)?;
    let psi0 = unit_filling_state(ham)?;
    let t_end = schedule.end_time();
    let state = propagate(ham, &psi0, &schedule, 0.0, t_end, config)?;
    let h = ham.matrix(&coefficients_at(&schedule, t_end));
    let energy = h.expectation(&state).re;
    let ground = solve_low_spectrum(&h, 1)?;
    Ok(Prepared {
        ground_fidelity: fidelity(&state, ground.ground_state()),
        ground_energy: ground.ground_energy(),
        energy,
        state,
        schedule,
    })
}

/// Linear ramp from the prepared parameters of `from` to zero hopping and
/// the idle chemical potentials, with tilt and drive switched off, over
/// `duration` ns.
pub fn ramp_down(
    ham: &ParametricHamiltonian,
    state: &StateVector,
    from: &PrepTarget,
    duration: f64,
    config: &PropagatorConfig,
) -> Result<StateVector> {
    if duration == 0.0 {
        return Ok(state.clone());
    }
    let schedule = RampSchedule::new(from.u, from.params.clone(), 0.0)
        .with_tilt_pattern(from.tilt_pattern.clone())?
        .then(duration, Params::new(0.0, from.idle_mu.clone()), Shape::Linear)?;
    propagate(ham, state, &schedule, 0.0, duration, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_basis;
    use crate::lattice::Lattice;
    use crate::observables::doublon_fraction;

    fn ham(n: usize) -> ParametricHamiltonian {
        let l = Lattice::chain(n).unwrap();
        ParametricHamiltonian::new(&l, build_basis(&l, n, 2).unwrap()).unwrap()
    }

    #[test]
    fn atomic_limit_is_trivial() {
        let h = ham(3);
        let p = adiabatic_prepare(&h, &PrepTarget::new(1.0, 0.0, vec![0.0; 3]), &PrepTimes::default(), &Default::default())
            .unwrap();
        assert!((p.ground_fidelity - 1.0).abs() < 1e-12);
        assert!((fidelity(&p.state, &unit_filling_state(&h).unwrap()) - 1.0).abs() < 1e-12);
        assert_eq!(p.schedule.end_time(), 115.0);
    }

    #[test]
    fn slow_dimer_preparation() {
        let h = ham(2);
        let times = PrepTimes {
            ramp: 400.0,
            ..Default::default()
        };
        let p = adiabatic_prepare(&h, &PrepTarget::new(1.0, 0.02, vec![0.0; 2]), &times, &Default::default()).unwrap();
        assert!(p.ground_fidelity > 0.999, "{}", p.ground_fidelity);
        assert!(p.energy >= p.ground_energy - 1e-12);
    }

    #[test]
    fn ramp_down_zero_duration_is_identity() {
        let h = ham(2);
        let s = unit_filling_state(&h).unwrap();
        let t = PrepTarget::new(1.0, 0.1, vec![0.0; 2]);
        let out = ramp_down(&h, &s, &t, 0.0, &Default::default()).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn slow_ramp_down_returns_to_product_state() {
        let h = ham(2);
        let times = PrepTimes {
            ramp: 200.0,
            ..Default::default()
        };
        let target = PrepTarget::new(1.0, 0.05, vec![0.0; 2]);
        let p = adiabatic_prepare(&h, &target, &times, &Default::default()).unwrap();
        assert!(doublon_fraction(&p.state, h.basis()) > 1e-3);
        let down = ramp_down(&h, &p.state, &target, 300.0, &Default::default()).unwrap();
        assert!(doublon_fraction(&down, h.basis()) < 1e-4);
    }

    #[test]
    fn rejects_non_unit_filling() {
        let l = Lattice::chain(2).unwrap();
        let h = ParametricHamiltonian::new(&l, build_basis(&l, 1, 2).unwrap()).unwrap();
        assert!(unit_filling_state(&h).is_err());
    }
}
