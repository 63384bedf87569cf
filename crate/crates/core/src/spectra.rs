//! Low-lying spectra of sector Hamiltonians.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::sparse::CsrMatrix;

/// Complex amplitudes over a [`FockBasis`](crate::FockBasis).
pub type StateVector = DVector<Complex64>;

/// Eigenvalues below this separation are treated as one degenerate cluster.
pub const DEGENERACY_GAP: f64 = 1e-9;

/// Lowest eigenpairs of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<StateVector>,
    /// `‖Hψ − Eψ‖` per pair.
    pub residuals: Vec<f64>,
}

impl EigenSolution {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn ground_state(&self) -> &StateVector {
        &self.eigenvectors[0]
    }
}

/// Solver settings.
#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Dimensions up to this use dense diagonalization.
    pub dense_threshold: usize,
    /// Convergence when `‖r‖ < tolerance·max(1, |E|)`.
    pub tolerance: f64,
    pub max_restarts: usize,
    /// Krylov block size; `0` picks `min(k, 4)`.
    pub block: usize,
    /// Seed for the random starting block.
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            dense_threshold: 2000,
            tolerance: 1e-10,
            max_restarts: 500,
            block: 0,
            seed: 0x5eed,
        }
    }
}

/// The `k` lowest eigenpairs with default options.
pub fn solve_low_spectrum(h: &CsrMatrix, k: usize) -> Result<EigenSolution> {
    solve_low_spectrum_with(h, k, &EigenOptions::default())
}

pub fn solve_low_spectrum_with(h: &CsrMatrix, k: usize, opts: &EigenOptions) -> Result<EigenSolution> {
    let n = h.nrows();
    if h.ncols() != n {
        return domain("operator is not square");
    }
    if k == 0 || k > n {
        return domain(format!("requested {k} eigenpairs of a {n}-dimensional operator"));
    }
    let (mut values, mut vectors) = if n <= opts.dense_threshold {
        dense_eigen(h)
    } else {
        krylov_eigen(h, k, opts)?
    };
    canonicalize(&values, &mut vectors);
    values.truncate(k);
    vectors.truncate(k);
    let residuals = values
        .iter()
        .zip(&vectors)
        .map(|(&e, v)| (h.mul_vec(v) - v * Complex64::new(e, 0.0)).norm())
        .collect();
    Ok(EigenSolution {
        eigenvalues: values,
        eigenvectors: vectors,
        residuals,
    })
}

/// Full ascending spectrum of a dense Hermitian matrix.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, Vec<StateVector>) {
    let n = m.nrows();
    let real = m.iter().all(|z| z.im == 0.0);
    let (vals, vecs): (Vec<f64>, DMatrix<Complex64>) = if real {
        let r = m.map(|z| z.re);
        let sym = (&r + r.transpose()) * 0.5;
        let e = sym.symmetric_eigen();
        (
            e.eigenvalues.iter().copied().collect(),
            e.eigenvectors.map(|x| Complex64::new(x, 0.0)),
        )
    } else {
        let herm = (m + m.adjoint()).map(|z| z * 0.5);
        let e = herm.symmetric_eigen();
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    (
        order.iter().map(|&i| vals[i]).collect(),
        order.iter().map(|&i| vecs.column(i).into_owned()).collect(),
    )
}

fn dense_eigen(h: &CsrMatrix) -> (Vec<f64>, Vec<StateVector>) {
    hermitian_eigen(&h.to_dense())
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
    DVector::from_fn(n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

/// Orthonormal basis with cached images under `H`.
struct Krylov<'a> {
    h: &'a CsrMatrix,
    v: Vec<StateVector>,
    hv: Vec<StateVector>,
}

impl Krylov<'_> {
    /// Orthogonalize (two passes) and append; false when the candidate is
    /// numerically inside the span.
    fn push(&mut self, mut x: StateVector) -> bool {
        let start = x.norm();
        if start == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for q in &self.v {
                let c = q.dotc(&x);
                x.axpy(-c, q, Complex64::new(1.0, 0.0));
            }
        }
        let nrm = x.norm();
        if nrm < 1e-10 * start {
            return false;
        }
        x /= Complex64::new(nrm, 0.0);
        self.hv.push(self.h.mul_vec(&x));
        self.v.push(x);
        true
    }
}

fn krylov_eigen(h: &CsrMatrix, k: usize, opts: &EigenOptions) -> Result<(Vec<f64>, Vec<StateVector>)> {
    let n = h.nrows();
    let b = if opts.block == 0 { k.clamp(1, 4) } else { opts.block };
    // Extra pairs so a degenerate cluster at the cut is captured whole.
    let nwant = (k + b).min(n);
    let mmax = (2 * nwant + 2 * b).max(nwant + 30).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut kr = Krylov {
        h,
        v: Vec::new(),
        hv: Vec::new(),
    };
    for _ in 0..b {
        let x = random_vector(&mut rng, n);
        kr.push(x);
    }
    let mut last_residuals = Vec::new();
    for _restart in 0..opts.max_restarts {
        let mut frontier = kr.v.len().saturating_sub(b);
        while kr.v.len() < mmax {
            let block: Vec<StateVector> = kr.hv[frontier..].to_vec();
            frontier = kr.v.len();
            let mut added = 0;
            for x in block {
                if kr.v.len() >= mmax {
                    break;
                }
                if kr.push(x) {
                    added += 1;
                }
            }
            if added == 0 {
                // Invariant subspace reached; continue with fresh directions.
                let mut tries = 0;
                while kr.v.len() < mmax && !kr.push(random_vector(&mut rng, n)) {
                    tries += 1;
                    if tries > 8 {
                        break;
                    }
                }
                if kr.v.len() == frontier {
                    break;
                }
            }
        }
        let m = kr.v.len();
        let t = DMatrix::from_fn(m, m, |i, j| kr.v[i].dotc(&kr.hv[j]));
        let (theta, s) = hermitian_eigen(&t);
        let take = nwant.min(m);
        let mut ritz = Vec::with_capacity(take);
        let mut hritz = Vec::with_capacity(take);
        let mut res = Vec::with_capacity(take);
        for (idx, sv) in s.iter().take(take).enumerate() {
            let mut y = DVector::zeros(n);
            let mut hy = DVector::zeros(n);
            for j in 0..m {
                y.axpy(sv[j], &kr.v[j], Complex64::new(1.0, 0.0));
                hy.axpy(sv[j], &kr.hv[j], Complex64::new(1.0, 0.0));
            }
            let r = &hy - &y * Complex64::new(theta[idx], 0.0);
            res.push(r.norm());
            ritz.push(y);
            hritz.push(hy);
        }
        let converged = |i: usize| res[i] < opts.tolerance * theta[i].abs().max(1.0);
        if (0..take).all(converged) || m == n {
            return Ok((theta[..take].to_vec(), ritz));
        }
        last_residuals = res.clone();
        // Thick restart: keep the wanted Ritz pairs, then extend with the
        // residual directions of the least converged ones.
        let residual_dirs: Vec<StateVector> = (0..take)
            .filter(|&i| !converged(i))
            .take(b)
            .map(|i| &hritz[i] - &ritz[i] * Complex64::new(theta[i], 0.0))
            .collect();
        kr.v = ritz;
        kr.hv = hritz;
        for r in residual_dirs {
            kr.push(r);
        }
    }
    let worst = last_residuals.iter().copied().fold(0.0, f64::max);
    Err(Error::NonConvergence {
        iterations: opts.max_restarts,
        residuals: last_residuals,
        worst_residual: worst,
    })
}

/// Deterministic representatives: within each degenerate cluster, project
/// basis vectors `e₀, e₁, …` in index order and orthonormalize; every vector
/// then gets its first significant component real and positive.
pub fn canonicalize(values: &[f64], vectors: &mut [StateVector]) {
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && values[end] - values[end - 1] < DEGENERACY_GAP {
            end += 1;
        }
        if end - start > 1 {
            let cluster: Vec<StateVector> = vectors[start..end].to_vec();
            let dim = cluster[0].len();
            let mut out: Vec<StateVector> = Vec::with_capacity(end - start);
            for idx in 0..dim {
                if out.len() == cluster.len() {
                    break;
                }
                let mut p: StateVector = DVector::zeros(dim);
                for q in &cluster {
                    p.axpy(q[idx].conj(), q, Complex64::new(1.0, 0.0));
                }
                for _ in 0..2 {
                    for o in &out {
                        let c = o.dotc(&p);
                        p.axpy(-c, o, Complex64::new(1.0, 0.0));
                    }
                }
                let nrm = p.norm();
                if nrm > 1e-6 {
                    out.push(p / Complex64::new(nrm, 0.0));
                }
            }
            for (slot, v) in vectors[start..end].iter_mut().zip(out) {
                *slot = v;
            }
        }
        start = end;
    }
    for v in vectors.iter_mut() {
        fix_phase(v);
    }
}

/// Rotate the global phase so the first component above `1e-6·max|ψ|` is
/// real and positive.
pub fn fix_phase(v: &mut StateVector) {
    let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return;
    }
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-6 * peak).copied() {
        let phase = z.conj() / z.norm();
        *v *= phase;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_basis;
    use crate::disorder::sample_disorder;
    use crate::lattice::Lattice;
    use crate::terms::{assemble, bose_hubbard_terms};

    fn ham(nx: usize, ny: usize, j: f64, u: f64, mu: &[f64], n: usize) -> (CsrMatrix, crate::FockBasis) {
        let l = Lattice::rectangular(nx, ny).unwrap();
        let b = build_basis(&l, n, 2).unwrap();
        let t = bose_hubbard_terms(&l, j, u, mu).unwrap();
        (assemble(&t, &b).unwrap(), b)
    }

    #[test]
    fn single_particle_dimer() {
        let (h, _) = ham(2, 1, 1.0, 0.0, &[0.0, 0.0], 1);
        let s = solve_low_spectrum(&h, 2).unwrap();
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-12);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-12);
        let g = s.ground_state();
        let r = 0.5f64.sqrt();
        assert!((g[0] - Complex64::new(r, 0.0)).norm() < 1e-12);
        assert!((g[1] - Complex64::new(r, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn atomic_limit_ground_state() {
        let mu = sample_disorder(0.0, 0.0, 4, 1).unwrap().mu;
        let (h, b) = ham(2, 2, 0.0, 1.0, &mu, 4);
        let s = solve_low_spectrum(&h, 1).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-12);
        let i = b.index(&[1, 1, 1, 1]).unwrap();
        assert!((s.ground_state()[i].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn krylov_matches_dense() {
        let (h, _) = ham(3, 1, 0.3, 1.0, &[0.1, -0.2, 0.3], 3);
        let dense = solve_low_spectrum(&h, 7).unwrap();
        let opts = EigenOptions {
            dense_threshold: 0,
            ..Default::default()
        };
        let kry = solve_low_spectrum_with(&h, 7, &opts).unwrap();
        for (a, b) in dense.eigenvalues.iter().zip(&kry.eigenvalues) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn krylov_on_larger_sector() {
        let mu = sample_disorder(0.5, 0.0, 8, 3).unwrap().mu;
        let (h, _) = ham(4, 2, 0.1, 1.0, &mu, 8);
        let dense = solve_low_spectrum(&h, 5).unwrap();
        let opts = EigenOptions {
            dense_threshold: 0,
            ..Default::default()
        };
        let kry = solve_low_spectrum_with(&h, 5, &opts).unwrap();
        for i in 0..5 {
            assert!((dense.eigenvalues[i] - kry.eigenvalues[i]).abs() < 1e-9);
            assert!(kry.residuals[i] < 1e-8 * kry.eigenvalues[i].abs().max(1.0));
            let overlap = dense.eigenvectors[i].dotc(&kry.eigenvectors[i]).norm();
            assert!((overlap - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn degenerate_clusters_are_reproducible() {
        // Uniform chain with U = 0: plenty of exact degeneracies.
        let (h, _) = ham(4, 1, 1.0, 0.0, &[0.0; 4], 2);
        let dense = solve_low_spectrum(&h, h.nrows()).unwrap();
        let opts = EigenOptions {
            dense_threshold: 0,
            ..Default::default()
        };
        let kry = solve_low_spectrum_with(&h, 6, &opts).unwrap();
        for i in 0..6 {
            assert!((dense.eigenvectors[i].clone() - &kry.eigenvectors[i]).norm() < 1e-7, "pair {i}");
        }
        // Orthonormality of the returned set.
        for i in 0..dense.len() {
            for j in 0..dense.len() {
                let d = dense.eigenvectors[i].dotc(&dense.eigenvectors[j]).norm();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn bad_k_is_domain_error() {
        let (h, _) = ham(2, 1, 1.0, 0.0, &[0.0, 0.0], 1);
        assert!(solve_low_spectrum(&h, 3).is_err());
        assert!(solve_low_spectrum(&h, 0).is_err());
    }

    #[test]
    fn non_convergence_reports_residuals() {
        let mu = sample_disorder(0.5, 0.0, 8, 3).unwrap().mu;
        let (h, _) = ham(4, 2, 0.1, 1.0, &mu, 8);
        let opts = EigenOptions {
            dense_threshold: 0,
            max_restarts: 1,
            tolerance: 1e-15,
            ..Default::default()
        };
        match solve_low_spectrum_with(&h, 3, &opts) {
            Err(Error::NonConvergence { residuals, .. }) => assert!(!residuals.is_empty()),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
