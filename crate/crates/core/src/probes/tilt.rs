//! Cosine chemical-potential gradient and the compressibility it measures.

use crate::error::{domain, Result};
use crate::lattice::Lattice;

/// Cosine tilt `δμ·cos(πx/L)`, `L = nx − 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltSpec {
    pub amplitude: f64,
    /// Cancel the projection of the disorder onto the cosine first.
    pub subtract_natural: bool,
}

impl TiltSpec {
    pub fn new(amplitude: f64) -> Self {
        TiltSpec {
            amplitude,
            subtract_natural: true,
        }
    }
}

/// `cos(πxᵢ/L)` per site.
pub fn tilt_pattern(lattice: &Lattice) -> Result<Vec<f64>> {
    let nx = lattice.nx();
    if nx < 2 {
        return domain("a cosine tilt needs at least two columns");
    }
    let l = (nx - 1) as f64;
    Ok((0..lattice.nsites())
        .map(|i| (std::f64::consts::PI * lattice.coords(i).0 as f64 / l).cos())
        .collect())
}

/// Natural tilt `A = (2/N) Σ μᵢ cos(πxᵢ/L)`.
pub fn natural_tilt(mu: &[f64], lattice: &Lattice) -> Result<f64> {
    let pattern = tilt_pattern(lattice)?;
    if mu.len() != pattern.len() {
        return domain("mu length differs from the number of sites");
    }
    Ok(2.0 / mu.len() as f64 * mu.iter().zip(&pattern).map(|(m, c)| m * c).sum::<f64>())
}

/// Amplitude actually added along the cosine: `δμ − A`, or `δμ` when the
/// natural tilt is kept.
pub fn applied_tilt_amplitude(mu: &[f64], tilt: &TiltSpec, lattice: &Lattice) -> Result<f64> {
    let a = if tilt.subtract_natural {
        natural_tilt(mu, lattice)?
    } else {
        tilt_pattern(lattice)?;
        0.0
    };
    Ok(tilt.amplitude - a)
}

/// `Vᵢ = μᵢ + (δμ − A)·cos(πxᵢ/L)`.
pub fn apply_tilt(mu: &[f64], tilt: &TiltSpec, lattice: &Lattice) -> Result<Vec<f64>> {
    let amp = applied_tilt_amplitude(mu, tilt, lattice)?;
    let pattern = tilt_pattern(lattice)?;
    Ok(mu.iter().zip(&pattern).map(|(m, c)| m + amp * c).collect())
}

/// `κ = (2/(N·δμ)) Σⱼ ⟨nⱼ⟩ cos(πxⱼ/L)`.
pub fn compressibility(densities: &[f64], delta_mu: f64, lattice: &Lattice) -> Result<f64> {
    if delta_mu == 0.0 || !delta_mu.is_finite() {
        return domain("compressibility needs a finite nonzero tilt amplitude");
    }
    let pattern = tilt_pattern(lattice)?;
    if densities.len() != pattern.len() {
        return domain("density length differs from the number of sites");
    }
    let n = densities.len() as f64;
    Ok(2.0 / (n * delta_mu) * densities.iter().zip(&pattern).map(|(d, c)| d * c).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_basis;
    use crate::observables::densities;
    use crate::spectra::solve_low_spectrum;
    use crate::terms::{assemble, bose_hubbard_terms};

    fn chain5() -> Lattice {
        Lattice::chain(5).unwrap()
    }

    #[test]
    fn flat_mu_gives_pure_cosine() {
        let l = chain5();
        let v = apply_tilt(&[0.0; 5], &TiltSpec::new(0.3), &l).unwrap();
        let c = tilt_pattern(&l).unwrap();
        for (a, b) in v.iter().zip(&c) {
            assert!((a - 0.3 * b).abs() < 1e-15);
        }
    }

    #[test]
    fn natural_tilt_hand_sum() {
        let l = chain5();
        let r = 0.5f64.sqrt();
        // cos(πx/4) for x = 0..4.
        let cos = [1.0, r, 0.0, -r, -1.0];
        let c = 0.7;
        let mu: Vec<f64> = cos.iter().map(|v| c * v).collect();
        // (2/5)·c·(1 + 1/2 + 0 + 1/2 + 1) = 1.2c
        assert!((natural_tilt(&mu, &l).unwrap() - 1.2 * c).abs() < 1e-14);
        let v = apply_tilt(&mu, &TiltSpec::new(0.0), &l).unwrap();
        // Residual cosine component c − 1.2c.
        for (a, b) in v.iter().zip(&cos) {
            assert!((a - (c - 1.2 * c) * b).abs() < 1e-14);
        }
    }

    #[test]
    fn tilt_equal_to_natural_cancels() {
        let l = chain5();
        let mu = [0.3, -0.1, 0.25, 0.0, -0.4];
        let a = natural_tilt(&mu, &l).unwrap();
        let v = apply_tilt(&mu, &TiltSpec::new(a), &l).unwrap();
        for (x, y) in v.iter().zip(&mu) {
            assert!((x - y).abs() < 1e-15);
        }
        let keep = TiltSpec {
            amplitude: 0.1,
            subtract_natural: false,
        };
        assert!((applied_tilt_amplitude(&mu, &keep, &l).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn compressibility_examples() {
        let l = chain5();
        assert!(compressibility(&[1.0; 5], 0.1, &l).unwrap().abs() < 1e-15);
        assert!(compressibility(&[1.0; 5], 0.0, &l).is_err());
        let cos = tilt_pattern(&l).unwrap();
        let (eps, dmu) = (0.02, 0.1);
        let n: Vec<f64> = cos.iter().map(|c| 1.0 + eps * c).collect();
        let want = eps / dmu * 2.0 / 5.0 * cos.iter().map(|c| c * c).sum::<f64>();
        assert!((compressibility(&n, dmu, &l).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn gapped_mott_state_is_incompressible() {
        let l = chain5();
        let b = build_basis(&l, 5, 2).unwrap();
        let dmu = 0.3;
        let v = apply_tilt(&[0.0; 5], &TiltSpec::new(dmu), &l).unwrap();
        let h = assemble(&bose_hubbard_terms(&l, 0.0, 1.0, &v).unwrap(), &b).unwrap();
        let g = solve_low_spectrum(&h, 1).unwrap();
        let k = compressibility(&densities(g.ground_state(), &b), dmu, &l).unwrap();
        assert!(k.abs() < 1e-12);
    }

    #[test]
    fn single_column_rejected() {
        assert!(tilt_pattern(&Lattice::rectangular(1, 3).unwrap()).is_err());
    }
}
