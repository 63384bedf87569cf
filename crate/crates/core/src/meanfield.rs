//! Gutzwiller mean-field theory at unit filling with states truncated to
//! `{|0⟩, |1⟩, |2⟩}` on a square lattice (coordination 4).

use std::f64::consts::SQRT_2;

use nalgebra::{Matrix3, Matrix6, Vector3};
use num_complex::Complex64;

use crate::error::{domain, Error, Result};

/// Mean-field critical coupling `4J_c/U`.
pub const ALPHA_C: f64 = 3.0 - 2.0 * SQRT_2;

/// Square-lattice coordination number.
pub const COORDINATION: f64 = 4.0;

/// Variational solution at one `(J, U)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldPoint {
    /// `4J/(α_c U)`.
    pub gamma: f64,
    pub u: f64,
    pub j: f64,
    /// Mixing angle of `|χ₀⟩ = cos φ|1⟩ + sin φ(|0⟩ + |2⟩)/√2`.
    pub phi: f64,
    /// Order parameter `⟨a⟩`.
    pub psi: f64,
    pub mu: f64,
    /// Eigenvalue of the mean-field Hamiltonian for `|χ₀⟩`.
    pub omega0: f64,
}

fn check(j: f64, u: f64) -> Result<()> {
    if !(u > 0.0 && u.is_finite()) {
        return domain(format!("U must be positive, got {u}"));
    }
    if !(j >= 0.0 && j.is_finite()) {
        return domain(format!("J must be non-negative, got {j}"));
    }
    Ok(())
}

/// Closed-form variational solution.
///
/// In the Mott phase the chemical potential is continued from the
/// superfluid expression and `ω₀ = −μ`, the energy of `|1⟩` at `ψ = 0`.
pub fn variational_point(j: f64, u: f64) -> Result<MeanFieldPoint> {
    check(j, u)?;
    let gamma = 4.0 * j / (ALPHA_C * u);
    let mu = u / 2.0 * (1.0 - ALPHA_C - ALPHA_C / 2.0 * (gamma - 1.0));
    let (phi, psi, omega0) = if gamma > 1.0 {
        (
            0.5 * (1.0 / gamma).acos(),
            (1.0 - gamma.powi(-2)).sqrt() / (8.0 * ALPHA_C).sqrt(),
            u / 2.0 * (1.0 - SQRT_2 - (1.0 + SQRT_2) * ALPHA_C * gamma),
        )
    } else {
        (0.0, 0.0, -mu)
    };
    Ok(MeanFieldPoint {
        gamma,
        u,
        j,
        phi,
        psi,
        mu,
        omega0,
    })
}

fn lowering() -> Matrix3<f64> {
    let mut a = Matrix3::zeros();
    a[(0, 1)] = 1.0;
    a[(1, 2)] = SQRT_2;
    a
}

/// `|χ₀(φ)⟩` in the Fock basis `(|0⟩, |1⟩, |2⟩)`.
pub fn chi0(phi: f64) -> Vector3<f64> {
    let s = phi.sin() / SQRT_2;
    Vector3::new(s, phi.cos(), s)
}

/// `U/2 n(n−1) − μn − zJψ(a + a†)`.
pub fn mean_field_hamiltonian(u: f64, mu: f64, j: f64, psi: f64) -> Matrix3<f64> {
    let a = lowering();
    let n = Matrix3::from_diagonal(&Vector3::new(0.0, 1.0, 2.0));
    n * (n - Matrix3::identity()) * (u / 2.0) - n * mu - (a + a.transpose()) * (COORDINATION * j * psi)
}

/// Gutzwiller energy per site `⟨χ₀|H_onsite|χ₀⟩ − zJ⟨a⟩²`.
pub fn variational_energy(phi: f64, j: f64, u: f64, mu: f64) -> f64 {
    let x = chi0(phi);
    let psi = (x.transpose() * lowering() * x)[0];
    let h0 = mean_field_hamiltonian(u, mu, 0.0, 0.0);
    (x.transpose() * h0 * x)[0] - COORDINATION * j * psi * psi
}

/// `dE/dφ = 2⟨∂χ₀|H_MF(ψ(φ))|χ₀⟩`.
fn energy_slope(phi: f64, j: f64, u: f64) -> f64 {
    let x = chi0(phi);
    let dx = Vector3::new(phi.cos() / SQRT_2, -phi.sin(), phi.cos() / SQRT_2);
    let psi = (x.transpose() * lowering() * x)[0];
    // ⟨n⟩ = 1 for every φ, so μ drops out.
    2.0 * (dx.transpose() * mean_field_hamiltonian(u, 0.0, j, psi) * x)[0]
}

/// Minimize the variational energy over `φ ∈ [0, π/4]` by bisecting its
/// slope, without using the closed form.
pub fn minimize_energy_numeric(j: f64, u: f64) -> Result<f64> {
    check(j, u)?;
    let (mut lo, mut hi) = (1e-9, std::f64::consts::FRAC_PI_4);
    if energy_slope(lo, j, u) >= 0.0 {
        return Ok(0.0);
    }
    if energy_slope(hi, j, u) <= 0.0 {
        return Ok(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if energy_slope(mid, j, u) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `ξ(k) = sin²(kx/2) + sin²(ky/2)`.
pub fn xi(kx: f64, ky: f64) -> f64 {
    (kx / 2.0).sin().powi(2) + (ky / 2.0).sin().powi(2)
}

fn coefficients(alpha: f64, g: f64, x: f64) -> (f64, f64) {
    let a = 8.0 * alpha * x * (2.0 * SQRT_2 + alpha * x)
        + alpha / 2.0
            * (g - 1.0)
            * (16.0 * SQRT_2 * (1.0 + g) + 2.0 * (9.0 + alpha + 3.0 * (1.0 + alpha) * g) * x + alpha * (7.0 + g) * x * x);
    let b = 16.0
        * alpha
        * alpha
        * x
        * (SQRT_2 * alpha * (g * g - 1.0).powi(2) * (x - 3.0)
            + 2.0 * (1.0 + g).powi(2) * (SQRT_2 * alpha * (g - 1.0).powi(2) + 4.0 * (x + g * g - 1.0)));
    (a, b)
}

fn frequencies(alpha: f64, g: f64, u: f64, x: f64) -> Result<(f64, f64)> {
    let (a, b) = coefficients(alpha, g, x);
    let mut disc = a * a - b;
    if disc < 0.0 {
        if -disc <= 1e-12 * (a * a).max(b.abs()).max(a.abs()) {
            disc = 0.0;
        } else {
            return Err(Error::Numerical(format!("A² − B = {disc:e} is negative")));
        }
    }
    let r = disc.sqrt();
    let lower = (a - r).max(0.0);
    Ok((u / 4.0 * lower.sqrt(), u / 4.0 * (a + r).sqrt()))
}

/// Goldstone and Higgs frequencies `(ω₋, ω₊)` in the superfluid.
pub fn dispersion(kx: f64, ky: f64, point: &MeanFieldPoint) -> Result<(f64, f64)> {
    if point.gamma < 1.0 {
        return domain(format!("dispersion needs γ ≥ 1, got {}", point.gamma));
    }
    frequencies(ALPHA_C, point.gamma, point.u, xi(kx, ky))
}

/// `ω₋(k)` with `(α_c, γ)` treated as free fit parameters.
pub fn dispersion_overlay(ks: &[(f64, f64)], alpha_c: f64, gamma: f64, u: f64) -> Result<Vec<f64>> {
    if !(alpha_c > 0.0) || gamma < 1.0 || !(u > 0.0) {
        return domain("overlay needs α_c > 0, γ ≥ 1 and U > 0");
    }
    ks.iter()
        .map(|&(kx, ky)| frequencies(alpha_c, gamma, u, xi(kx, ky)).map(|w| w.0))
        .collect()
}

/// Sound velocity of the Goldstone branch, including the `α_c(γ−1)`
/// correction.
pub fn speed_of_sound(point: &MeanFieldPoint) -> f64 {
    let (a, g) = (ALPHA_C, point.gamma);
    point.u / 4.0 * (SQRT_2 * a).sqrt() * (g + 1.0) * (1.0 - a * (g - 1.0) / (4.0 * SQRT_2 * (g + 1.0))).sqrt()
}

/// Linearized Gutzwiller fluctuation matrix
/// `σz⊗(H_MF − ω₀) − zJ(1−ξ)(σz⊗X + iσy⊗Y)`.
pub fn heff_matrix(kx: f64, ky: f64, point: &MeanFieldPoint) -> Matrix6<f64> {
    let (c, s) = (point.phi.cos(), point.phi.sin());
    let chi_c = Vector3::new(c, s, 0.0);
    let chi_a = Vector3::new(0.0, s / SQRT_2, SQRT_2 * c);
    let x = chi_a * chi_a.transpose() + chi_c * chi_c.transpose();
    let y = chi_a * chi_c.transpose() + chi_c * chi_a.transpose();
    let h = mean_field_hamiltonian(point.u, point.mu, point.j, point.psi) - Matrix3::identity() * point.omega0;
    let g = COORDINATION * point.j * (1.0 - xi(kx, ky));
    let mut m = Matrix6::zeros();
    let a = h - x * g;
    let b = -(y * g);
    // σz⊗A on the diagonal; iσy = [[0, 1], [−1, 0]].
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&a);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&(-a));
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&b);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-b));
    m
}

/// Eigenvalues of the fluctuation matrix and the two positive frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct BogoliubovSpectrum {
    /// All six eigenvalues sorted by real part.
    pub eigenvalues: Vec<Complex64>,
    pub omega_minus: f64,
    pub omega_plus: f64,
}

/// Solve the full 6×6 problem. The condensate mode appears as a (defective)
/// pair at zero and is dropped by keeping the two largest positive values.
pub fn heff_bogoliubov(kx: f64, ky: f64, point: &MeanFieldPoint) -> BogoliubovSpectrum {
    let m = heff_matrix(kx, ky, point);
    let mut ev: Vec<Complex64> = m.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.re.total_cmp(&b.re));
    BogoliubovSpectrum {
        omega_minus: ev[4].re.max(0.0),
        omega_plus: ev[5].re,
        eigenvalues: ev,
    }
}
