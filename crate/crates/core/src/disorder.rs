//! Seeded on-site disorder.
//!
//! Generator: ChaCha8 seeded with the 64-bit realization seed. Site `i` draws
//! from stream `i` of that key, so each site's value is independent of how
//! many sites exist or which thread produces it.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};

/// One draw of per-site chemical potentials.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderRealization {
    pub seed: u64,
    pub width: f64,
    pub center: f64,
    pub mu: Vec<f64>,
}

/// Uniform disorder `μᵢ ∈ [center − W/2, center + W/2]`.
pub fn sample_disorder(
    width: f64,
    center: f64,
    nsites: usize,
    seed: u64,
) -> Result<DisorderRealization> {
    if !(width >= 0.0) || !width.is_finite() {
        return domain(format!("disorder width must be finite and non-negative, got {width}"));
    }
    let mu = (0..nsites)
        .map(|i| {
            if width == 0.0 {
                return center;
            }
            let mut rng = site_stream(seed, i as u64);
            center + width * (rng.random::<f64>() - 0.5)
        })
        .collect();
    Ok(DisorderRealization {
        seed,
        width,
        center,
        mu,
    })
}

/// Independent generator for sub-stream `stream` of `seed`.
pub fn site_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `count` realization seeds derived from a master seed.
pub fn derive_seeds(master: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..count).map(|_| rng.next_u64()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_width_is_constant() {
        let d = sample_disorder(0.0, 0.3, 7, 11).unwrap();
        assert!(d.mu.iter().all(|&m| m == 0.3));
    }

    #[test]
    fn uniform_moments() {
        let n = 100_000;
        let d = sample_disorder(1.0, 0.0, n, 2024).unwrap();
        let mean = d.mu.iter().sum::<f64>() / n as f64;
        let var = d.mu.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sigma_mean = (1.0f64 / 12.0 / n as f64).sqrt();
        assert!(mean.abs() < 3.0 * sigma_mean, "mean {mean}");
        assert!((var - 1.0 / 12.0).abs() < 0.05 / 12.0, "var {var}");
    }

    #[test]
    fn negative_width_rejected() {
        assert!(sample_disorder(-1.0, 0.0, 3, 0).is_err());
        assert!(sample_disorder(f64::NAN, 0.0, 3, 0).is_err());
    }

    #[test]
    fn prefix_stability() {
        // A site's value does not depend on the lattice size.
        let a = sample_disorder(2.0, 0.0, 4, 9).unwrap();
        let b = sample_disorder(2.0, 0.0, 9, 9).unwrap();
        assert_eq!(a.mu[..], b.mu[..4]);
    }

    #[test]
    fn seeds_are_distinct() {
        let s = derive_seeds(1, 50);
        let mut t = s.clone();
        t.sort_unstable();
        t.dedup();
        assert_eq!(t.len(), 50);
        assert_eq!(s, derive_seeds(1, 50));
    }

    proptest! {
        #[test]
        fn bounded_and_reproducible(w in 0.0f64..10.0, c in -5.0f64..5.0, seed in any::<u64>(), n in 1usize..40) {
            let a = sample_disorder(w, c, n, seed).unwrap();
            let b = sample_disorder(w, c, n, seed).unwrap();
            prop_assert_eq!(&a, &b);
            for &m in &a.mu {
                prop_assert!(m >= c - w / 2.0 && m <= c + w / 2.0);
            }
        }
    }
}
