//! Density-wave spectroscopy: exact linear response, driven time series and
//! the two-level strong-drive model.

use num_complex::Complex64;

use crate::basis::FockBasis;
use crate::dynamics::{propagate_observed, Drive, ParametricHamiltonian, Params, PropagatorConfig, RampSchedule};
use crate::error::{domain, Result};
use crate::lattice::Lattice;
use crate::observables::densities;
use crate::spectra::{EigenSolution, StateVector};

/// Standing-wave drive `A_d·sin(ω_d t)·Σ γᵢnᵢ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    pub amplitude: f64,
    pub omega: f64,
    /// Mode indices: `k_x = πp/L`, `k_y = πq/M`.
    pub p: usize,
    pub q: usize,
    /// Drive window in ns.
    pub duration: f64,
}

impl DriveSpec {
    pub fn new(amplitude: f64, omega: f64, p: usize, q: usize) -> Self {
        DriveSpec {
            amplitude,
            omega,
            p,
            q,
            duration: 250.0,
        }
    }
}

/// Unit-norm `γᵢ ∝ cos(k_{x,p} xᵢ)·cos(k_{y,q} yᵢ)`.
pub fn mode_pattern(lattice: &Lattice, p: usize, q: usize) -> Result<Vec<f64>> {
    if p == 0 && q == 0 {
        return domain("the uniform mode (0,0) carries no response");
    }
    let (lx, ly) = (lattice.nx() - 1, lattice.ny() - 1);
    if (p > 0 && p > lx) || (q > 0 && q > ly) {
        return domain(format!("mode ({p},{q}) outside the {}x{} grid", lattice.nx(), lattice.ny()));
    }
    let k = |m: usize, l: usize| if l == 0 { 0.0 } else { std::f64::consts::PI * m as f64 / l as f64 };
    let (kx, ky) = (k(p, lx), k(q, ly));
    let raw: Vec<f64> = (0..lattice.nsites())
        .map(|i| {
            let (x, y) = lattice.coords(i);
            (kx * x as f64).cos() * (ky * y as f64).cos()
        })
        .collect();
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return domain(format!("mode ({p},{q}) vanishes on this grid"));
    }
    Ok(raw.iter().map(|v| v / norm).collect())
}

/// `ν̂|ψ⟩` with `ν̂ = Σ γᵢnᵢ`, diagonal in the Fock basis.
fn apply_mode(basis: &FockBasis, pattern: &[f64], psi: &StateVector) -> StateVector {
    let mut out = psi.clone();
    for (k, occ) in basis.iter().enumerate() {
        let nu: f64 = occ.iter().zip(pattern).map(|(&o, g)| o as f64 * g).sum();
        out[k] *= nu;
    }
    out
}

/// Excitation energies `ω_k0` and weights `|⟨k|ν̂|0⟩|²` for `k ≥ 1`.
pub fn mode_weights(eig: &EigenSolution, basis: &FockBasis, pattern: &[f64]) -> Result<Vec<(f64, f64)>> {
    if eig.is_empty() {
        return domain("eigensystem has no ground state");
    }
    if pattern.len() != basis.nsites() {
        return domain("mode pattern length differs from the number of sites");
    }
    let nu0 = apply_mode(basis, pattern, eig.ground_state());
    let e0 = eig.ground_energy();
    Ok((1..eig.len())
        .map(|k| (eig.eigenvalues[k] - e0, eig.eigenvectors[k].dotc(&nu0).norm_sqr()))
        .collect())
}

/// `⟨ν̂²⟩ − ⟨ν̂⟩²` in the ground state: the total weight available.
pub fn mode_variance(eig: &EigenSolution, basis: &FockBasis, pattern: &[f64]) -> Result<f64> {
    if eig.is_empty() {
        return domain("eigensystem has no ground state");
    }
    let g = eig.ground_state();
    let nu = apply_mode(basis, pattern, g);
    let mean = g.dotc(&nu).re;
    Ok(nu.norm_squared() - mean * mean)
}

/// Pole with the largest weight.
pub fn dominant_pole(weights: &[(f64, f64)]) -> Option<(f64, f64)> {
    weights.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1))
}

/// Zero crossing of `Re χ` located by linear interpolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub omega: f64,
    pub bracket: (f64, f64),
}

/// Sampled mode susceptibility.
#[derive(Debug, Clone, PartialEq)]
pub struct SusceptibilityCurve {
    pub omega: Vec<f64>,
    pub chi: Vec<Complex64>,
    pub resonance: Option<Resonance>,
}

impl SusceptibilityCurve {
    pub fn new(omega: Vec<f64>, chi: Vec<Complex64>) -> Result<Self> {
        if omega.len() != chi.len() {
            return domain("frequency grid and samples differ in length");
        }
        if omega.windows(2).any(|w| w[1] <= w[0]) {
            return domain("frequency grid must be strictly increasing");
        }
        let mut c = SusceptibilityCurve {
            omega,
            chi,
            resonance: None,
        };
        c.resonance = find_resonance(&c);
        Ok(c)
    }
}

/// `χ(ω) = Σ_k w_k · 2ω_k0 / ((ω + iε)² − ω_k0²)`.
pub fn chi_from_poles(weights: &[(f64, f64)], omega: f64, eps: f64) -> Complex64 {
    let z = Complex64::new(omega, eps);
    weights
        .iter()
        .map(|&(wk, w)| w * 2.0 * wk / (z * z - wk * wk))
        .sum()
}

/// Exact linear-response mode susceptibility over a frequency grid.
pub fn linear_response_chi(
    eig: &EigenSolution,
    basis: &FockBasis,
    pattern: &[f64],
    omegas: &[f64],
    eps: f64,
) -> Result<SusceptibilityCurve> {
    let w = mode_weights(eig, basis, pattern)?;
    let chi = omegas.iter().map(|&om| chi_from_poles(&w, om, eps)).collect();
    SusceptibilityCurve::new(omegas.to_vec(), chi)
}

/// Sign change of `Re χ` nearest the peak of `|Im χ|` (or of `|χ|` when the
/// curve is real); `None` when `Re χ` never changes sign.
pub fn find_resonance(curve: &SusceptibilityCurve) -> Option<Resonance> {
    let chi = &curve.chi;
    let om = &curve.omega;
    if chi.len() < 2 {
        return None;
    }
    let peak_of = |f: &dyn Fn(&Complex64) -> f64| {
        chi.iter()
            .enumerate()
            .max_by(|a, b| f(a.1).total_cmp(&f(b.1)))
            .map(|(i, _)| i)
            .unwrap_or(0)
    };
    let peak = if chi.iter().any(|z| z.im != 0.0) {
        peak_of(&|z: &Complex64| z.im.abs())
    } else {
        peak_of(&|z: &Complex64| z.norm())
    };
    let best = (0..chi.len() - 1)
        .filter(|&i| (chi[i].re < 0.0) != (chi[i + 1].re < 0.0))
        .min_by(|&a, &b| {
            let da = (a as f64 + 0.5 - peak as f64).abs();
            let db = (b as f64 + 0.5 - peak as f64).abs();
            da.total_cmp(&db)
        })?;
    let (a, b) = (chi[best].re, chi[best + 1].re);
    let (x0, x1) = (om[best], om[best + 1]);
    let frac = if a == b { 0.5 } else { a / (a - b) };
    Some(Resonance {
        omega: x0 + (x1 - x0) * frac,
        bracket: (x0, x1),
    })
}

/// `(1/T)∫₀ᵀ e^{−iω_d t} s(t) dt` by the trapezoidal rule on the sample
/// grid, which must start at 0 and end at `T`.
pub fn fourier_extract(times: &[f64], signal: &[f64], omega: f64) -> Result<Complex64> {
    if times.len() != signal.len() || times.len() < 2 {
        return domain("need at least two matching time and signal samples");
    }
    let span = times[times.len() - 1] - times[0];
    if span <= 0.0 {
        return domain("time grid must increase");
    }
    let f = |k: usize| Complex64::from_polar(signal[k], -omega * times[k]);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..times.len() - 1 {
        acc += (f(k) + f(k + 1)) * (0.5 * (times[k + 1] - times[k]));
    }
    Ok(acc / span)
}

/// Time series of a driven run after subtracting the undriven reference.
#[derive(Debug, Clone)]
pub struct DrivenResponse {
    pub times: Vec<f64>,
    /// `δnᵢ(t)`, one row per sample.
    pub delta_n: Vec<Vec<f64>>,
    /// `Σᵢ γᵢ δnᵢ(t)`.
    pub mode_signal: Vec<f64>,
    /// Susceptibility at the drive frequency, `conj(2i·E/A_d)` with `E` the
    /// Fourier component of the mode signal.
    pub chi: Complex64,
}

/// Drive `state` under static `base` parameters plus the standing-wave
/// modulation, sampling every `sample_dt` ns over the drive window.
#[allow(clippy::too_many_arguments)]
pub fn driven_response(
    ham: &ParametricHamiltonian,
    lattice: &Lattice,
    u: f64,
    base: &Params,
    state: &StateVector,
    drive: &DriveSpec,
    sample_dt: f64,
    config: &PropagatorConfig,
) -> Result<DrivenResponse> {
    if !(sample_dt > 0.0) || !(drive.duration > 0.0) {
        return domain("sampling step and drive duration must be positive");
    }
    let pattern = mode_pattern(lattice, drive.p, drive.q)?;
    let nsamp = (drive.duration / sample_dt).round().max(1.0) as usize;
    let times: Vec<f64> = (0..=nsamp).map(|k| drive.duration * k as f64 / nsamp as f64).collect();
    let record = |amp: f64| -> Result<Vec<Vec<f64>>> {
        let sched = RampSchedule::constant(u, base.clone().with_drive(amp)).with_drive(Drive {
            omega: drive.omega,
            pattern: pattern.clone(),
            t0: 0.0,
        })?;
        let mut rows = Vec::with_capacity(times.len());
        propagate_observed(ham, state, &sched, &times, config, |_, s| rows.push(densities(s, ham.basis())))?;
        Ok(rows)
    };
    let driven = record(drive.amplitude)?;
    let reference = record(0.0)?;
    let delta_n: Vec<Vec<f64>> = driven
        .iter()
        .zip(&reference)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
        .collect();
    let mode_signal: Vec<f64> = delta_n
        .iter()
        .map(|row| row.iter().zip(&pattern).map(|(d, g)| d * g).sum())
        .collect();
    let chi = if drive.amplitude == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        let e = fourier_extract(&times, &mode_signal, drive.omega)?;
        (Complex64::new(0.0, 2.0) * e / drive.amplitude).conj()
    };
    Ok(DrivenResponse {
        times,
        delta_n,
        mode_signal,
        chi,
    })
}

/// Parameters of the two-state strong-drive model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelSpec {
    pub omega_k0: f64,
    pub amplitude: f64,
    /// Mean decay rate `γ_s`.
    pub gamma_s: f64,
    /// Decay asymmetry `γ`.
    pub gamma: f64,
    pub omega_d: f64,
    pub duration: f64,
    /// `⟨k|ν̂|k⟩`.
    pub nu_kk: f64,
    pub steps: usize,
}

impl TwoLevelSpec {
    pub fn new(omega_k0: f64, amplitude: f64, omega_d: f64) -> Self {
        TwoLevelSpec {
            omega_k0,
            amplitude,
            gamma_s: 0.0,
            gamma: 0.0,
            omega_d,
            duration: 250.0,
            nu_kk: 0.0,
            steps: 20_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoLevelResponse {
    pub times: Vec<f64>,
    /// Nonlinear mode susceptibility in the time domain.
    pub chi_t: Vec<f64>,
    /// `conj(2E)` with `E` the Fourier component of `χ_k(t)` at `ω_d`.
    pub chi: Complex64,
    pub c0: Complex64,
    pub ck: Complex64,
}

/// Integrate the damped two-level model with RK4 from `c₀ = 1, c_k = 0`.
pub fn two_level_response(spec: &TwoLevelSpec) -> Result<TwoLevelResponse> {
    if spec.steps == 0 || !(spec.duration > 0.0) {
        return domain("two-level run needs positive duration and steps");
    }
    let i = Complex64::i();
    let g0 = (spec.gamma_s - spec.gamma) / 2.0;
    let gk = (spec.gamma_s + spec.gamma) / 2.0;
    let rhs = |t: f64, c: [Complex64; 2]| -> [Complex64; 2] {
        let v = spec.amplitude * (spec.omega_d * t).cos();
        // i ċ = M c
        let m0 = Complex64::new(0.0, -g0) * c[0] + v * c[1];
        let mk = v * c[0] + Complex64::new(spec.omega_k0, -gk) * c[1];
        [-i * m0, -i * mk]
    };
    let h = spec.duration / spec.steps as f64;
    let mut c = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let chi_of = |c: &[Complex64; 2]| {
        if spec.amplitude == 0.0 {
            return 0.0;
        }
        let num = 2.0 * (c[0].conj() * c[1]).re + spec.nu_kk * c[1].norm_sqr();
        num / (spec.amplitude * (c[0].norm_sqr() + c[1].norm_sqr()))
    };
    let mut times = Vec::with_capacity(spec.steps + 1);
    let mut chi_t = Vec::with_capacity(spec.steps + 1);
    times.push(0.0);
    chi_t.push(chi_of(&c));
    let add = |a: [Complex64; 2], b: [Complex64; 2], s: f64| [a[0] + b[0] * s, a[1] + b[1] * s];
    for n in 0..spec.steps {
        let t = n as f64 * h;
        let k1 = rhs(t, c);
        let k2 = rhs(t + h / 2.0, add(c, k1, h / 2.0));
        let k3 = rhs(t + h / 2.0, add(c, k2, h / 2.0));
        let k4 = rhs(t + h, add(c, k3, h));
        for s in 0..2 {
            c[s] += (k1[s] + k2[s] * 2.0 + k3[s] * 2.0 + k4[s]) * (h / 6.0);
        }
        times.push(t + h);
        chi_t.push(chi_of(&c));
    }
    let e = fourier_extract(&times, &chi_t, spec.omega_d)?;
    Ok(TwoLevelResponse {
        times,
        chi_t,
        chi: (e * 2.0).conj(),
        c0: c[0],
        ck: c[1],
    })
}

/// Two-level susceptibility over a drive-frequency grid.
pub fn two_level_curve(spec: &TwoLevelSpec, omegas: &[f64]) -> Result<SusceptibilityCurve> {
    let chi = omegas
        .iter()
        .map(|&w| two_level_response(&TwoLevelSpec { omega_d: w, ..*spec }).map(|r| r.chi))
        .collect::<Result<Vec<_>>>()?;
    SusceptibilityCurve::new(omegas.to_vec(), chi)
}
