//! Static observables of sector states.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::basis::FockBasis;
use crate::error::{domain, Result};
use crate::lattice::Lattice;
use crate::spectra::{hermitian_eigen, StateVector};
use crate::terms::{assemble, BoseTermList, TermClass};

/// `⟨nᵢ⟩` per site.
pub fn densities(state: &StateVector, basis: &FockBasis) -> Vec<f64> {
    let mut n = vec![0.0; basis.nsites()];
    for (k, occ) in basis.iter().enumerate() {
        let p = state[k].norm_sqr();
        if p == 0.0 {
            continue;
        }
        for (i, &o) in occ.iter().enumerate() {
            n[i] += p * o as f64;
        }
    }
    n
}

/// Single-particle density matrix `C[i][j] = ⟨a†ᵢ aⱼ⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spdm {
    pub c: DMatrix<Complex64>,
}

impl Spdm {
    pub fn nsites(&self) -> usize {
        self.c.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.c.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.c - self.c.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues ascending, with eigenvectors.
    pub fn eigen(&self) -> (Vec<f64>, Vec<DVector<Complex64>>) {
        hermitian_eigen(&self.c)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().0[0]
    }
}

pub fn spdm(state: &StateVector, basis: &FockBasis) -> Spdm {
    let ns = basis.nsites();
    let nmax = basis.nmax() as u8;
    let mut c = DMatrix::<Complex64>::zeros(ns, ns);
    let mut occ = vec![0u8; ns];
    for (k, src) in basis.iter().enumerate() {
        let amp = state[k];
        if amp == Complex64::new(0.0, 0.0) {
            continue;
        }
        for i in 0..ns {
            c[(i, i)] += amp.norm_sqr() * src[i] as f64;
        }
        for j in 0..ns {
            if src[j] == 0 {
                continue;
            }
            for i in 0..ns {
                if i == j || src[i] >= nmax {
                    continue;
                }
                occ.copy_from_slice(src);
                occ[j] -= 1;
                occ[i] += 1;
                let Some(t) = basis.index(&occ) else { continue };
                let ladder = ((src[j] as f64) * (src[i] as f64 + 1.0)).sqrt();
                c[(i, j)] += state[t].conj() * amp * ladder;
            }
        }
    }
    Spdm { c }
}

/// Largest SPDM eigenvalue over `ntotal`, with its eigenvector (the condensate
/// orbital).
pub fn condensate_fraction(c: &Spdm, ntotal: usize) -> Result<(f64, DVector<Complex64>)> {
    if ntotal == 0 {
        return domain("condensate fraction undefined for an empty sector");
    }
    let (vals, mut vecs) = c.eigen();
    let top = vals.len() - 1;
    let mut v = vecs.swap_remove(top);
    crate::spectra::fix_phase(&mut v);
    Ok((vals[top] / ntotal as f64, v))
}

/// Mean `|C_ij|` over unordered pairs at each Manhattan distance
/// `d = 0..=max`; the `d = 0` entry is the mean density.
pub fn correlator_profile(c: &Spdm, lattice: &Lattice) -> Vec<f64> {
    let dmax = lattice.max_manhattan();
    let mut sum = vec![0.0; dmax + 1];
    let mut cnt = vec![0usize; dmax + 1];
    let n = lattice.nsites();
    for i in 0..n {
        for j in i..n {
            let d = lattice.manhattan(i, j);
            sum[d] += c.c[(i, j)].norm();
            cnt[d] += 1;
        }
    }
    sum.iter()
        .zip(&cnt)
        .map(|(&s, &k)| if k == 0 { 0.0 } else { s / k as f64 })
        .collect()
}

/// `|C_{corner,j}|` averaged per distance from a single reference site.
pub fn corner_correlator_profile(c: &Spdm, lattice: &Lattice, corner: usize) -> Vec<f64> {
    let dmax = lattice.max_manhattan();
    let mut sum = vec![0.0; dmax + 1];
    let mut cnt = vec![0usize; dmax + 1];
    for j in 0..lattice.nsites() {
        let d = lattice.manhattan(corner, j);
        sum[d] += c.c[(corner, j)].norm();
        cnt[d] += 1;
    }
    sum.iter()
        .zip(&cnt)
        .map(|(&s, &k)| if k == 0 { f64::NAN } else { s / k as f64 })
        .collect()
}

/// Site-averaged `⟨nᵢ(nᵢ−1)⟩/2`.
pub fn doublon_fraction(state: &StateVector, basis: &FockBasis) -> f64 {
    let mut acc = 0.0;
    for (k, occ) in basis.iter().enumerate() {
        let p = state[k].norm_sqr();
        let pairs: f64 = occ.iter().map(|&o| (o as f64) * (o as f64 - 1.0) / 2.0).sum();
        acc += p * pairs;
    }
    acc / basis.nsites() as f64
}

/// Site-averaged occupancy variance `⟨n²⟩ − ⟨n⟩²`.
pub fn mean_number_variance(state: &StateVector, basis: &FockBasis) -> f64 {
    let ns = basis.nsites();
    let mut n1 = vec![0.0; ns];
    let mut n2 = vec![0.0; ns];
    for (k, occ) in basis.iter().enumerate() {
        let p = state[k].norm_sqr();
        for i in 0..ns {
            let o = occ[i] as f64;
            n1[i] += p * o;
            n2[i] += p * o * o;
        }
    }
    (0..ns).map(|i| n2[i] - n1[i] * n1[i]).sum::<f64>() / ns as f64
}

/// Kinetic, interaction and on-site contributions to `⟨H⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDecomposition {
    pub kinetic: f64,
    pub interaction: f64,
    pub onsite: f64,
}

impl EnergyDecomposition {
    pub fn total(&self) -> f64 {
        self.kinetic + self.interaction + self.onsite
    }
}

/// Splits `⟨H⟩` by term class: hopping terms, on-site polynomial
/// interactions, and lone number operators.
pub fn energy_decomposition(
    state: &StateVector,
    basis: &FockBasis,
    terms: &BoseTermList,
) -> Result<EnergyDecomposition> {
    let part = |class| -> Result<f64> {
        let m = assemble(&terms.filter_class(class), basis)?;
        Ok(m.expectation(state).re)
    };
    Ok(EnergyDecomposition {
        kinetic: part(TermClass::Kinetic)?,
        interaction: part(TermClass::Interaction)?,
        onsite: part(TermClass::OnSite)?,
    })
}

/// Squared Schmidt coefficients across a bipartition, descending.
pub fn schmidt_spectrum(state: &StateVector, basis: &FockBasis, left: &[usize]) -> Result<Vec<f64>> {
    let ns = basis.nsites();
    let mut is_left = vec![false; ns];
    for &s in left {
        if s >= ns {
            return domain(format!("cut site {s} outside 0..{ns}"));
        }
        is_left[s] = true;
    }
    // Blocks keyed by left particle number; rows = left configs, cols = right.
    struct Block {
        rows: HashMap<Vec<u8>, usize>,
        cols: HashMap<Vec<u8>, usize>,
        entries: Vec<(usize, usize, Complex64)>,
    }
    let mut blocks: HashMap<usize, Block> = HashMap::new();
    for (k, occ) in basis.iter().enumerate() {
        let amp = state[k];
        let l: Vec<u8> = (0..ns).filter(|&s| is_left[s]).map(|s| occ[s]).collect();
        let r: Vec<u8> = (0..ns).filter(|&s| !is_left[s]).map(|s| occ[s]).collect();
        let nl: usize = l.iter().map(|&v| v as usize).sum();
        let blk = blocks.entry(nl).or_insert_with(|| Block {
            rows: HashMap::new(),
            cols: HashMap::new(),
            entries: Vec::new(),
        });
        let nr = blk.rows.len();
        let ri = *blk.rows.entry(l).or_insert(nr);
        let nc = blk.cols.len();
        let ci = *blk.cols.entry(r).or_insert(nc);
        blk.entries.push((ri, ci, amp));
    }
    let mut p = Vec::new();
    for blk in blocks.values() {
        let mut m = DMatrix::<Complex64>::zeros(blk.rows.len(), blk.cols.len());
        for &(r, c, a) in &blk.entries {
            m[(r, c)] = a;
        }
        let sv = m.svd(false, false).singular_values;
        p.extend(sv.iter().map(|s| s * s));
    }
    p.sort_by(|a, b| b.total_cmp(a));
    Ok(p)
}

/// Von Neumann entropy (nats) of the reduced state on `left`.
pub fn entanglement_entropy(state: &StateVector, basis: &FockBasis, left: &[usize]) -> Result<f64> {
    let p = schmidt_spectrum(state, basis, left)?;
    Ok(-p.iter().filter(|&&x| x > 1e-300).map(|&x| x * x.ln()).sum::<f64>())
}

/// `Σ|ψ|⁴`.
pub fn ipr(state: &StateVector) -> f64 {
    state.iter().map(|z| z.norm_sqr().powi(2)).sum()
}
