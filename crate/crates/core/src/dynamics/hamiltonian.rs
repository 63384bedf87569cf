//! Bose-Hubbard Hamiltonian with time-dependent coefficients.

use num_complex::Complex64;

use crate::basis::FockBasis;
use crate::error::{domain, Result};
use crate::lattice::Lattice;
use crate::sparse::CsrMatrix;
use crate::terms::{assemble, BoseOp, BoseTermList, Factor};

/// Coefficients of `H = −J·hop + U·Σnᵢ(nᵢ−1)/2 + Σcᵢnᵢ`. Linear in every
/// entry, so a linear combination of coefficient sets is the coefficient set
/// of the combined operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub j: f64,
    pub u: f64,
    pub onsite: Vec<f64>,
}

impl Coefficients {
    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Coefficients, b: f64) -> Coefficients {
        Coefficients {
            j: a * self.j + b * other.j,
            u: a * self.u + b * other.u,
            onsite: self
                .onsite
                .iter()
                .zip(&other.onsite)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
        }
    }
}

/// Parameter-independent pieces of the sector Hamiltonian.
#[derive(Debug, Clone)]
pub struct ParametricHamiltonian {
    basis: FockBasis,
    /// `Σ⟨ij⟩ (a†ᵢaⱼ + h.c.)`.
    hop: CsrMatrix,
    /// `Σᵢ nᵢ(nᵢ−1)/2` per basis state.
    pairs: Vec<f64>,
}

impl ParametricHamiltonian {
    pub fn new(lattice: &Lattice, basis: FockBasis) -> Result<Self> {
        if lattice.nsites() != basis.nsites() {
            return domain("lattice and basis disagree on the number of sites");
        }
        let mut t = BoseTermList::new(lattice.nsites());
        for &(a, b) in lattice.adjacency() {
            t.push_hopping(a, b, Complex64::new(1.0, 0.0));
        }
        let hop = assemble(&t, &basis)?;
        let pairs = basis
            .iter()
            .map(|occ| occ.iter().map(|&o| (o as f64) * (o as f64 - 1.0) / 2.0).sum())
            .collect();
        Ok(ParametricHamiltonian { basis, hop, pairs })
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn diagonal(&self, c: &Coefficients) -> Vec<f64> {
        self.basis
            .iter()
            .zip(&self.pairs)
            .map(|(occ, &p)| c.u * p + occ.iter().zip(&c.onsite).map(|(&o, &ci)| o as f64 * ci).sum::<f64>())
            .collect()
    }

    /// `y = H(c)·x` given the precomputed diagonal.
    pub fn apply(&self, j: f64, diag: &[f64], x: &[Complex64], y: &mut [Complex64]) {
        self.hop.matvec_into(x, y);
        for ((yi, &xi), &d) in y.iter_mut().zip(x).zip(diag) {
            *yi = *yi * (-j) + xi * d;
        }
    }

    /// Explicit sparse matrix, for checks and static solves.
    pub fn matrix(&self, c: &Coefficients) -> CsrMatrix {
        self.hop
            .scale(Complex64::new(-c.j, 0.0))
            .add_scaled(&CsrMatrix::from_diagonal(&self.diagonal(c)), 1.0)
    }

    /// Kinetic, interaction and on-site operators as term lists, for energy
    /// bookkeeping.
    pub fn term_list(lattice: &Lattice, c: &Coefficients) -> BoseTermList {
        let mut t = BoseTermList::new(lattice.nsites());
        for &(a, b) in lattice.adjacency() {
            t.push_hopping(a, b, Complex64::new(-c.j, 0.0));
        }
        for (i, &ci) in c.onsite.iter().enumerate() {
            t.push(c.u / 2.0, vec![Factor::new(i, BoseOp::NumberNm1)]);
            t.push_number(i, ci);
        }
        t
    }
}
