//! Fixed-particle-number Fock bases with a per-site occupancy cutoff.

use crate::error::{domain, Result};
use crate::lattice::Lattice;

/// Number of ways to place `ntotal` bosons on `nsites` sites with at most
/// `nmax` per site, i.e. the coefficient of `x^ntotal` in
/// `(1 + x + … + x^nmax)^nsites`. Exact in 128-bit arithmetic for any
/// lattice this crate can describe.
pub fn sector_dimension(nsites: usize, ntotal: usize, nmax: usize) -> u128 {
    if ntotal > nmax * nsites {
        return 0;
    }
    let mut row = vec![0u128; ntotal + 1];
    row[0] = 1;
    for _ in 0..nsites {
        let mut next = vec![0u128; ntotal + 1];
        for (m, &c) in row.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for k in 0..=nmax.min(ntotal - m) {
                next[m + k] += c;
            }
        }
        row = next;
    }
    row[ntotal]
}

/// Lexicographically ordered occupancy vectors of one particle-number sector.
///
/// Site 0 is the most significant digit. Lookup is a combinatorial rank, so no
/// hash map is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct FockBasis {
    nsites: usize,
    ntotal: usize,
    nmax: u8,
    states: Vec<u8>,
    /// `counts[k][m]`: completions of `m` particles on `k` trailing sites.
    counts: Vec<Vec<usize>>,
}

impl FockBasis {
    pub fn new(nsites: usize, ntotal: usize, nmax: usize) -> Result<Self> {
        if nmax == 0 || nmax > u8::MAX as usize {
            return domain(format!("nmax must lie in 1..=255, got {nmax}"));
        }
        if ntotal > nmax * nsites {
            return domain(format!(
                "ntotal = {ntotal} exceeds capacity nmax·nsites = {}",
                nmax * nsites
            ));
        }
        let mut counts = vec![vec![0usize; ntotal + 1]; nsites + 1];
        counts[0][0] = 1;
        for k in 1..=nsites {
            for m in 0..=ntotal {
                counts[k][m] = (0..=nmax.min(m)).map(|v| counts[k - 1][m - v]).sum();
            }
        }
        let dim = counts[nsites][ntotal];
        let mut states = Vec::with_capacity(dim * nsites);
        let mut occ = vec![0u8; nsites];
        enumerate(0, ntotal, nmax, &counts, &mut occ, &mut states);
        debug_assert_eq!(states.len(), dim * nsites);
        Ok(FockBasis {
            nsites,
            ntotal,
            nmax: nmax as u8,
            states,
            counts,
        })
    }

    pub fn nsites(&self) -> usize {
        self.nsites
    }

    pub fn ntotal(&self) -> usize {
        self.ntotal
    }

    pub fn nmax(&self) -> usize {
        self.nmax as usize
    }

    pub fn dim(&self) -> usize {
        self.states.len().checked_div(self.nsites).unwrap_or(1)
    }

    /// Occupancies of basis state `i`.
    pub fn state(&self, i: usize) -> &[u8] {
        &self.states[i * self.nsites..(i + 1) * self.nsites]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u8]> {
        (0..self.dim()).map(move |i| self.state(i))
    }

    /// Index of an occupancy vector, or `None` if it lies outside the sector.
    pub fn index(&self, occ: &[u8]) -> Option<usize> {
        if occ.len() != self.nsites {
            return None;
        }
        let mut remaining = self.ntotal;
        let mut idx = 0usize;
        for (s, &v) in occ.iter().enumerate() {
            let v = v as usize;
            if v > self.nmax as usize || v > remaining {
                return None;
            }
            let trailing = self.nsites - s - 1;
            for smaller in 0..v {
                idx += self.counts[trailing][remaining - smaller];
            }
            remaining -= v;
        }
        (remaining == 0).then_some(idx)
    }
}

fn enumerate(
    site: usize,
    remaining: usize,
    nmax: usize,
    counts: &[Vec<usize>],
    occ: &mut [u8],
    out: &mut Vec<u8>,
) {
    let n = occ.len();
    if site == n {
        if remaining == 0 {
            out.extend_from_slice(occ);
        }
        return;
    }
    for v in 0..=nmax.min(remaining) {
        if counts[n - site - 1][remaining - v] == 0 {
            continue;
        }
        occ[site] = v as u8;
        enumerate(site + 1, remaining - v, nmax, counts, occ, out);
    }
    occ[site] = 0;
}

/// The sector basis for a lattice.
pub fn build_basis(lattice: &Lattice, ntotal: usize, nmax: usize) -> Result<FockBasis> {
    FockBasis::new(lattice.nsites(), ntotal, nmax)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(nsites: usize, ntotal: usize, nmax: usize) -> Vec<Vec<u8>> {
        let mut out = Vec::new();
        let total = (nmax + 1).pow(nsites as u32);
        for code in 0..total {
            let mut c = code;
            let mut occ = vec![0u8; nsites];
            for s in (0..nsites).rev() {
                occ[s] = (c % (nmax + 1)) as u8;
                c /= nmax + 1;
            }
            if occ.iter().map(|&v| v as usize).sum::<usize>() == ntotal {
                out.push(occ);
            }
        }
        out
    }

    #[test]
    fn spec_dimensions() {
        let l22 = Lattice::rectangular(2, 2).unwrap();
        assert_eq!(build_basis(&l22, 4, 2).unwrap().dim(), 19);
        let l13 = Lattice::chain(3).unwrap();
        assert_eq!(build_basis(&l13, 3, 2).unwrap().dim(), 7);
        let empty = build_basis(&l22, 0, 2).unwrap();
        assert_eq!(empty.dim(), 1);
        assert_eq!(empty.state(0), &[0, 0, 0, 0]);
        assert_eq!(sector_dimension(6, 6, 2), 141);
    }

    #[test]
    fn large_sector_estimate() {
        // Central trinomial coefficient of order 36.
        assert_eq!(sector_dimension(36, 36, 2), 12_159_131_877_715_993);
    }

    #[test]
    fn out_of_range_is_domain_error() {
        assert!(FockBasis::new(2, 5, 2).is_err());
        assert!(FockBasis::new(2, 1, 0).is_err());
    }

    #[test]
    fn lookup_rejects_foreign_vectors() {
        let b = FockBasis::new(3, 3, 2).unwrap();
        assert_eq!(b.index(&[1, 1, 2]), None);
        assert_eq!(b.index(&[3, 0, 0]), None);
        assert_eq!(b.index(&[1, 1]), None);
    }

    proptest! {
        #[test]
        fn matches_brute_force(nsites in 1usize..=8, nmax in 1usize..=3, frac in 0.0f64..=1.0) {
            let ntotal = ((nsites * nmax) as f64 * frac).round() as usize;
            let basis = FockBasis::new(nsites, ntotal, nmax).unwrap();
            let expected = brute_force(nsites, ntotal, nmax);
            prop_assert_eq!(basis.dim(), expected.len());
            prop_assert_eq!(basis.dim() as u128, sector_dimension(nsites, ntotal, nmax));
            for (i, occ) in expected.iter().enumerate() {
                prop_assert_eq!(basis.state(i), occ.as_slice());
                prop_assert_eq!(basis.index(occ), Some(i));
            }
        }
    }
}
