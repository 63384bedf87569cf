//! Time stepping under a [`RampSchedule`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::hamiltonian::{Coefficients, ParametricHamiltonian};
use super::schedule::RampSchedule;
use crate::error::{domain, Error, Result};
use crate::spectra::StateVector;

/// Stepping scheme for time-dependent Hamiltonians.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// One exponential per step at the midpoint Hamiltonian (second order).
    #[default]
    Midpoint,
    /// Two exponentials per step built from Gauss-node Hamiltonians
    /// (fourth-order commutator-free).
    CommutatorFree4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorConfig {
    pub method: Method,
    /// Upper bound on the step in ns.
    pub max_dt: f64,
    /// Krylov subspace dimension for each exponential.
    pub krylov_dim: usize,
    /// Local error bound per step, covering both the Krylov exponentials
    /// and, when adaptive, the time discretization.
    pub tolerance: f64,
    /// Shrink steps below `max_dt` to meet `tolerance`.
    pub adaptive: bool,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig {
            method: Method::Midpoint,
            max_dt: 0.1,
            krylov_dim: 20,
            tolerance: 1e-9,
            adaptive: true,
        }
    }
}

impl PropagatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_dt > 0.0) || !(self.tolerance > 0.0) {
            return domain("propagator needs max_dt > 0 and tolerance > 0");
        }
        if self.krylov_dim < 2 {
            return domain("Krylov dimension must be at least 2");
        }
        Ok(())
    }
}

/// Hamiltonian coefficients of a schedule at time `t`.
pub fn coefficients_at(schedule: &RampSchedule, t: f64) -> Coefficients {
    let p = schedule.at(t);
    Coefficients {
        j: p.j,
        u: schedule.u,
        onsite: schedule.onsite(t, &p),
    }
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> f64 {
    a.dotc(b).norm_sqr()
}

/// Evolve `state` from `t0` to `t1` (either direction).
pub fn propagate(
    ham: &ParametricHamiltonian,
    state: &StateVector,
    schedule: &RampSchedule,
    t0: f64,
    t1: f64,
    config: &PropagatorConfig,
) -> Result<StateVector> {
    propagate_observed(ham, state, schedule, &[t0, t1], config, |_, _| {})
}

/// Evolve through a monotone time grid, calling `observer` at every grid
/// point (the first included). Returns the state at the last point.
pub fn propagate_observed(
    ham: &ParametricHamiltonian,
    state: &StateVector,
    schedule: &RampSchedule,
    times: &[f64],
    config: &PropagatorConfig,
    mut observer: impl FnMut(f64, &StateVector),
) -> Result<StateVector> {
    config.validate()?;
    if state.len() != ham.dim() {
        return domain(format!("state has length {}, basis has {}", state.len(), ham.dim()));
    }
    if schedule.nsites() != ham.basis().nsites() {
        return domain("schedule and basis disagree on the number of sites");
    }
    let Some(&first) = times.first() else {
        return Ok(state.clone());
    };
    let increasing = times.windows(2).all(|w| w[1] > w[0]);
    let decreasing = times.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return domain("time grid must be strictly monotone");
    }
    let mut psi = state.clone();
    observer(first, &psi);
    let mut h = config.max_dt;
    for w in times.windows(2) {
        let (a, b) = (w[0], w[1]);
        if config.adaptive {
            psi = adaptive_interval(ham, psi, schedule, a, b, &mut h, config)?;
        } else {
            let nsteps = ((b - a).abs() / config.max_dt - 1e-9).ceil().max(1.0) as usize;
            let dt = (b - a) / nsteps as f64;
            for s in 0..nsteps {
                let t = a + s as f64 * dt;
                psi = step(ham, &psi, schedule, t, dt, config.method, config)?;
            }
        }
        observer(b, &psi);
    }
    Ok(psi)
}

/// Error-controlled stepping from `a` to `b`. `h` carries the step size
/// between calls.
fn adaptive_interval(
    ham: &ParametricHamiltonian,
    mut psi: StateVector,
    schedule: &RampSchedule,
    a: f64,
    b: f64,
    h: &mut f64,
    cfg: &PropagatorConfig,
) -> Result<StateVector> {
    let dir = (b - a).signum();
    let span = (b - a).abs();
    let mut t = a;
    let mut rejections = 0;
    while (b - t) * dir > 1e-12 * span.max(1.0) {
        let left = (b - t).abs();
        // Avoid leaving a sliver at the end of the interval.
        let mut size = h.min(cfg.max_dt);
        if size >= left || left - size < 0.1 * size {
            size = left;
        }
        let dt = dir * size;
        let (next, err, order) = match cfg.method {
            Method::Midpoint => {
                let low = step(ham, &psi, schedule, t, dt, Method::Midpoint, cfg)?;
                let high = step(ham, &psi, schedule, t, dt, Method::CommutatorFree4, cfg)?;
                let err = (&low - &high).norm();
                (low, err, 2.0)
            }
            Method::CommutatorFree4 => {
                let full = step(ham, &psi, schedule, t, dt, Method::CommutatorFree4, cfg)?;
                let half = step(ham, &psi, schedule, t, dt / 2.0, Method::CommutatorFree4, cfg)?;
                let two = step(ham, &half, schedule, t + dt / 2.0, dt / 2.0, Method::CommutatorFree4, cfg)?;
                let err = (&full - &two).norm() / 15.0;
                (two, err, 4.0)
            }
        };
        let factor = if err == 0.0 {
            2.0
        } else {
            (0.9 * (cfg.tolerance / err).powf(1.0 / (order + 1.0))).clamp(0.2, 2.0)
        };
        if err <= cfg.tolerance {
            psi = next;
            t += dt;
            rejections = 0;
            *h = (size * factor).min(cfg.max_dt);
        } else {
            rejections += 1;
            *h = size * factor;
            if rejections > 40 || *h < 1e-12 * span.max(1.0) {
                return Err(Error::StepRejection { last_accepted: t });
            }
        }
    }
    Ok(psi)
}

fn step(
    ham: &ParametricHamiltonian,
    psi: &StateVector,
    schedule: &RampSchedule,
    t: f64,
    dt: f64,
    method: Method,
    cfg: &PropagatorConfig,
) -> Result<StateVector> {
    match method {
        Method::Midpoint => {
            let c = coefficients_at(schedule, t + dt / 2.0);
            expm_krylov(ham, &c, psi, dt, cfg, t)
        }
        Method::CommutatorFree4 => {
            let r3 = 3f64.sqrt();
            let a1 = (3.0 - 2.0 * r3) / 12.0;
            let a2 = (3.0 + 2.0 * r3) / 12.0;
            let h1 = coefficients_at(schedule, t + (0.5 - r3 / 6.0) * dt);
            let h2 = coefficients_at(schedule, t + (0.5 + r3 / 6.0) * dt);
            let first = h1.combine(a2, &h2, a1);
            let second = h1.combine(a1, &h2, a2);
            let mid = expm_krylov(ham, &first, psi, dt, cfg, t)?;
            expm_krylov(ham, &second, &mid, dt, cfg, t)
        }
    }
}

/// `exp(−iτH)x` for constant coefficients, sub-stepping until the Lanczos
/// error estimate is within tolerance. `t` only labels errors.
pub fn expm_krylov(
    ham: &ParametricHamiltonian,
    c: &Coefficients,
    x: &StateVector,
    tau: f64,
    cfg: &PropagatorConfig,
    t: f64,
) -> Result<StateVector> {
    let diag = ham.diagonal(c);
    let mut psi = x.clone();
    let mut done = 0.0f64;
    let mut h = tau;
    while done.abs() < tau.abs() {
        let remaining = tau - done;
        if h.abs() > remaining.abs() {
            h = remaining;
        }
        let lz = lanczos(ham, c.j, &diag, &psi, cfg.krylov_dim);
        let mut halvings = 0;
        loop {
            let (coef, err) = lz.exp_coefficients(h);
            if err <= 0.1 * cfg.tolerance || lz.exact {
                psi = lz.combine(&coef);
                done += h;
                break;
            }
            halvings += 1;
            h /= 2.0;
            if halvings > 60 || h.abs() < 1e-14 * tau.abs().max(1e-300) {
                return Err(Error::StepRejection { last_accepted: t + done });
            }
        }
        // Let the step regrow after a run of easy substeps.
        if halvings == 0 {
            h *= 2.0;
        }
    }
    Ok(psi)
}

struct Lanczos {
    basis: Vec<StateVector>,
    t: DMatrix<f64>,
    /// Off-diagonal coupling out of the subspace.
    beta_out: f64,
    norm: f64,
    exact: bool,
}

fn lanczos(ham: &ParametricHamiltonian, j: f64, diag: &[f64], x: &StateVector, m: usize) -> Lanczos {
    let n = x.len();
    let norm = x.norm();
    let m = m.min(n);
    let mut basis: Vec<StateVector> = Vec::with_capacity(m);
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    let mut exact = norm == 0.0;
    let mut beta_out = 0.0;
    if !exact {
        basis.push(x / Complex64::new(norm, 0.0));
    }
    let mut w = DVector::<Complex64>::zeros(n);
    while !exact && basis.len() <= m {
        let k = basis.len() - 1;
        ham.apply(j, diag, basis[k].as_slice(), w.as_mut_slice());
        let a = basis[k].dotc(&w).re;
        alpha.push(a);
        for _ in 0..2 {
            for q in &basis {
                let c = q.dotc(&w);
                w.axpy(-c, q, Complex64::new(1.0, 0.0));
            }
        }
        let b = w.norm();
        let scale = alpha.iter().map(|v| v.abs()).fold(1.0, f64::max) + beta.iter().copied().fold(0.0, f64::max);
        if b < 1e-13 * scale {
            exact = true;
            break;
        }
        if basis.len() == m {
            beta_out = b;
            break;
        }
        beta.push(b);
        basis.push(&w / Complex64::new(b, 0.0));
    }
    let dim = alpha.len();
    let mut t = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        t[(i, i)] = alpha[i];
        if i + 1 < dim {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    basis.truncate(dim);
    Lanczos {
        basis,
        t,
        beta_out,
        norm,
        exact: exact || dim == n,
    }
}

impl Lanczos {
    /// Coefficients of `exp(−ihT)e₁` and the error estimate
    /// `β_out·|last coefficient|`.
    fn exp_coefficients(&self, h: f64) -> (Vec<Complex64>, f64) {
        let dim = self.t.nrows();
        if dim == 0 {
            return (Vec::new(), 0.0);
        }
        let e = self.t.clone().symmetric_eigen();
        let coef: Vec<Complex64> = (0..dim)
            .map(|r| {
                (0..dim)
                    .map(|k| {
                        let q = e.eigenvectors[(r, k)] * e.eigenvectors[(0, k)];
                        Complex64::from_polar(q, -h * e.eigenvalues[k])
                    })
                    .sum()
            })
            .collect();
        let err = self.beta_out * coef[dim - 1].norm() * self.norm;
        (coef, err)
    }

    fn combine(&self, coef: &[Complex64]) -> StateVector {
        let n = if let Some(v) = self.basis.first() { v.len() } else { return DVector::zeros(0) };
        let mut y = DVector::zeros(n);
        for (v, &c) in self.basis.iter().zip(coef) {
            y.axpy(c * self.norm, v, Complex64::new(1.0, 0.0));
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_basis;
    use crate::dynamics::schedule::{Drive, Params, Shape};
    use crate::lattice::Lattice;
    use crate::observables::densities;
    use crate::spectra::hermitian_eigen;

    fn setup(nx: usize, ny: usize) -> (Lattice, ParametricHamiltonian) {
        let l = Lattice::rectangular(nx, ny).unwrap();
        let b = build_basis(&l, l.nsites(), 2).unwrap();
        let h = ParametricHamiltonian::new(&l, b).unwrap();
        (l, h)
    }

    fn random_state(n: usize, seed: u64) -> StateVector {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v = DVector::from_fn(n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let nrm = v.norm();
        v / Complex64::new(nrm, 0.0)
    }

    fn dense_expm(m: &DMatrix<Complex64>, t: f64, x: &StateVector) -> StateVector {
        let (vals, vecs) = hermitian_eigen(m);
        let mut y = DVector::zeros(x.len());
        for (e, v) in vals.iter().zip(&vecs) {
            y += v * (v.dotc(x) * Complex64::from_polar(1.0, -e * t));
        }
        y
    }

    fn driven_schedule(n: usize) -> RampSchedule {
        let mu: Vec<f64> = (0..n).map(|i| 0.1 * i as f64).collect();
        RampSchedule::new(1.0, Params::new(0.0, mu.clone()), 0.0)
            .then(3.0, Params::new(0.4, vec![0.0; n]).with_drive(0.3), Shape::Smoothstep)
            .unwrap()
            .with_drive(Drive {
                omega: 1.7,
                pattern: (0..n).map(|i| (i as f64).cos()).collect(),
                t0: 0.0,
            })
            .unwrap()
    }

    #[test]
    fn constant_hamiltonian_matches_dense_exponential() {
        let (_, h) = setup(3, 2);
        assert!(h.dim() <= 200);
        let mu = vec![0.3, -0.2, 0.1, 0.0, 0.5, -0.4];
        let sched = RampSchedule::constant(1.0, Params::new(0.35, mu));
        let x = random_state(h.dim(), 1);
        let y = propagate(&h, &x, &sched, 0.0, 7.3, &PropagatorConfig::default()).unwrap();
        let dense = h.matrix(&coefficients_at(&sched, 0.0)).to_dense();
        let z = dense_expm(&dense, 7.3, &x);
        assert!((y - z).norm() < 1e-9);
    }

    #[test]
    fn zero_hopping_preserves_densities() {
        let (_, h) = setup(4, 1);
        let sched = RampSchedule::new(1.0, Params::new(0.0, vec![0.0; 4]), 0.0)
            .then(2.0, Params::new(0.0, vec![0.3, -0.1, 0.2, 0.7]), Shape::Linear)
            .unwrap();
        let x = random_state(h.dim(), 2);
        let n0 = densities(&x, h.basis());
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.5).collect();
        propagate_observed(&h, &x, &sched, &times, &PropagatorConfig::default(), |_, s| {
            for (a, b) in densities(s, h.basis()).iter().zip(&n0) {
                assert!((a - b).abs() < 1e-12);
            }
        })
        .unwrap();
    }

    #[test]
    fn half_steps_compose() {
        let (_, h) = setup(3, 1);
        let sched = driven_schedule(3);
        let cfg = PropagatorConfig::default();
        let x = random_state(h.dim(), 3);
        let full = propagate(&h, &x, &sched, 0.0, 2.0, &cfg).unwrap();
        let half = propagate(&h, &x, &sched, 0.0, 1.0, &cfg).unwrap();
        let two = propagate(&h, &half, &sched, 1.0, 2.0, &cfg).unwrap();
        assert!((full - two).norm() < 1e-8);
    }

    #[test]
    fn norm_is_conserved_and_time_reversal_recovers_input() {
        let (_, h) = setup(2, 2);
        let sched = driven_schedule(4);
        let cfg = PropagatorConfig::default();
        let x = random_state(h.dim(), 4);
        let y = propagate(&h, &x, &sched, 0.0, 5.0, &cfg).unwrap();
        assert!((y.norm() - 1.0).abs() < 1e-10);
        let back = propagate(&h, &y, &sched, 5.0, 0.0, &cfg).unwrap();
        assert!(fidelity(&x, &back) > 1.0 - 1e-8);
    }

    #[test]
    fn halving_dt_is_within_tolerance() {
        let (_, h) = setup(3, 1);
        let sched = driven_schedule(3);
        let x = random_state(h.dim(), 5);
        let cfg = PropagatorConfig::default();
        let fine = PropagatorConfig {
            max_dt: cfg.max_dt / 2.0,
            ..cfg.clone()
        };
        let a = propagate(&h, &x, &sched, 0.0, 4.0, &cfg).unwrap();
        let b = propagate(&h, &x, &sched, 0.0, 4.0, &fine).unwrap();
        let na = densities(&a, h.basis());
        let nb = densities(&b, h.basis());
        for (p, q) in na.iter().zip(&nb) {
            assert!((p - q).abs() < 1e-7, "{p} vs {q}");
        }
    }

    fn order_slope(method: Method) -> f64 {
        let (_, h) = setup(3, 1);
        let sched = driven_schedule(3);
        let x = random_state(h.dim(), 6);
        let run = |dt: f64, m: Method| {
            let cfg = PropagatorConfig {
                method: m,
                max_dt: dt,
                krylov_dim: 30,
                tolerance: 1e-13,
                adaptive: false,
            };
            propagate(&h, &x, &sched, 0.0, 3.0, &cfg).unwrap()
        };
        let reference = run(0.002, Method::CommutatorFree4);
        let e1 = (run(0.3, method) - &reference).norm();
        let e2 = (run(0.03, method) - &reference).norm();
        (e1 / e2).log10()
    }

    #[test]
    fn convergence_orders() {
        let s2 = order_slope(Method::Midpoint);
        assert!((s2 - 2.0).abs() < 0.3, "midpoint slope {s2}");
        let s4 = order_slope(Method::CommutatorFree4);
        assert!((s4 - 4.0).abs() < 0.5, "CF4 slope {s4}");
    }

    #[test]
    fn invalid_config_rejected() {
        let (_, h) = setup(2, 1);
        let sched = RampSchedule::constant(1.0, Params::new(0.1, vec![0.0; 2]));
        let x = random_state(h.dim(), 7);
        let bad = PropagatorConfig {
            max_dt: 0.0,
            ..Default::default()
        };
        assert!(propagate(&h, &x, &sched, 0.0, 1.0, &bad).is_err());
        assert!(propagate_observed(&h, &x, &sched, &[0.0, 1.0, 0.5], &Default::default(), |_, _| {}).is_err());
    }

    #[test]
    fn fidelity_basics() {
        let a = random_state(5, 8);
        let b = random_state(5, 9);
        assert!((fidelity(&a, &a) - 1.0).abs() < 1e-14);
        assert!((fidelity(&a, &b) - fidelity(&b, &a)).abs() < 1e-15);
        let mut e0 = DVector::zeros(5);
        let mut e1 = DVector::zeros(5);
        e0[0] = Complex64::new(1.0, 0.0);
        e1[1] = Complex64::new(1.0, 0.0);
        assert_eq!(fidelity(&e0, &e1), 0.0);
    }
}
