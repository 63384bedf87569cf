//! Exact Schrieffer-Wolff reduction onto qudit-only number sectors and the
//! normal-ordered operator form of the result.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::device::{bare_hamiltonian, BareDevice, NodeKind, ProductBasis};
use crate::error::{domain, Error, Result};
use crate::terms::{BoseTermList, Term};

/// Controls for the dressed-subspace selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwOptions {
    /// Highest qudit excitation sector kept.
    pub max_sector: usize,
    /// Minimum overlap gap between the last selected and first rejected
    /// eigenvector.
    pub overlap_gap: f64,
    /// Smallest allowed cosine of a principal angle between the bare and
    /// dressed subspaces (distance from the square-root branch cut).
    pub branch_tol: f64,
}

impl Default for SwOptions {
    fn default() -> Self {
        SwOptions {
            max_sector: 3,
            overlap_gap: 1e-6,
            branch_tol: 1e-6,
        }
    }
}

/// Effective Hamiltonian on one qudit sector.
#[derive(Debug, Clone)]
pub struct SectorHamiltonian {
    pub n: usize,
    /// Qudit occupations of the bare sector states.
    pub states: Vec<Vec<u8>>,
    pub matrix: DMatrix<f64>,
    /// Bare eigenvalues of the selected dressed states.
    pub dressed_energies: Vec<f64>,
}

/// Diagonalized bare Hamiltonian, split by excitation parity (the
/// `(a + a†)(a + a†)` couplings change the total by 0 or ±2).
#[derive(Debug, Clone)]
pub struct BareSystem {
    pub basis: ProductBasis,
    qudits: Vec<usize>,
    couplers: Vec<usize>,
    blocks: [ParityBlock; 2],
}

#[derive(Debug, Clone)]
struct ParityBlock {
    /// Full-basis indices of the block states.
    members: Vec<usize>,
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl BareSystem {
    pub fn new(device: &BareDevice) -> Result<Self> {
        device.validate()?;
        let (basis, h) = bare_hamiltonian(device);
        let qudits = device.qudits();
        let couplers = (0..device.nnodes())
            .filter(|&i| device.nodes[i].kind == NodeKind::Coupler)
            .collect();
        let block = |parity: u32| {
            let members: Vec<usize> = (0..basis.dim())
                .filter(|&i| basis.states()[i].iter().map(|&x| x as u32).sum::<u32>() % 2 == parity)
                .collect();
            let sub = DMatrix::from_fn(members.len(), members.len(), |r, c| h[(members[r], members[c])]);
            let eig = sub.symmetric_eigen();
            ParityBlock {
                members,
                values: eig.eigenvalues.iter().copied().collect(),
                vectors: eig.eigenvectors,
            }
        };
        Ok(BareSystem {
            blocks: [block(0), block(1)],
            basis,
            qudits,
            couplers,
        })
    }

    /// All bare eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.blocks.iter().flat_map(|b| b.values.iter().copied()).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Effective Hamiltonian `P₀U†HUP₀` on the `n`-excitation qudit sector.
    ///
    /// With `A` the bare-sector block of the selected eigenvectors and
    /// `A = WΣZᵀ`, the direct rotation restricted to `P₀` is `WZᵀ`; this is the
    /// principal square root of `(2P−I)(2P₀−I)` evaluated on that subspace.
    pub fn exact_sw(&self, n: usize, opts: &SwOptions) -> Result<SectorHamiltonian> {
        let block = &self.blocks[n % 2];
        let local: Vec<usize> = (0..block.members.len())
            .filter(|&r| {
                let s = &self.basis.states()[block.members[r]];
                self.couplers.iter().all(|&c| s[c] == 0)
                    && self.qudits.iter().map(|&q| s[q] as usize).sum::<usize>() == n
            })
            .collect();
        let d0 = local.len();
        if d0 == 0 {
            return domain(format!("sector {n} is empty under the truncation"));
        }
        let nev = block.values.len();
        let overlap: Vec<f64> = (0..nev)
            .map(|k| local.iter().map(|&r| block.vectors[(r, k)].powi(2)).sum())
            .collect();
        let mut order: Vec<usize> = (0..nev).collect();
        order.sort_by(|&a, &b| overlap[b].total_cmp(&overlap[a]).then(a.cmp(&b)));
        if d0 < nev && overlap[order[d0 - 1]] - overlap[order[d0]] < opts.overlap_gap {
            let contested: Vec<String> = order[d0.saturating_sub(2)..(d0 + 2).min(nev)]
                .iter()
                .map(|&k| format!("E={:.9} overlap={:.6}", block.values[k], overlap[k]))
                .collect();
            return Err(Error::AmbiguousOverlap(format!(
                "sector {n}: dressed states compete for the last slot: {}",
                contested.join("; ")
            )));
        }
        let mut selected: Vec<usize> = order[..d0].to_vec();
        selected.sort_by(|&a, &b| block.values[a].total_cmp(&block.values[b]));
        let a = DMatrix::from_fn(d0, d0, |r, c| block.vectors[(local[r], selected[c])]);
        let svd = a.svd(true, true);
        let smin = svd.singular_values.min();
        if smin < opts.branch_tol {
            return Err(Error::Numerical(format!(
                "sector {n}: dressed subspace nearly orthogonal to the bare one (σ_min = {smin:e})"
            )));
        }
        let q = svd.u.expect("requested") * svd.v_t.expect("requested");
        let energies: Vec<f64> = selected.iter().map(|&k| block.values[k]).collect();
        let e = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(energies.clone()));
        let mut m = &q * e * q.transpose();
        m = (&m + m.transpose()) * 0.5;
        let states = local
            .iter()
            .map(|&r| {
                let s = &self.basis.states()[block.members[r]];
                self.qudits.iter().map(|&q| s[q]).collect()
            })
            .collect();
        Ok(SectorHamiltonian {
            n,
            states,
            matrix: m,
            dressed_energies: energies,
        })
    }

    /// Sectors `0..=max_sector` expressed as one normal-ordered operator on
    /// the qudits.
    pub fn effective_operator(&self, opts: &SwOptions) -> Result<EffectiveOperator> {
        let capacity: usize = self.qudits.iter().map(|&q| self.basis.levels[q] as usize).sum();
        let top = opts.max_sector.min(capacity).min(self.basis.max_total as usize);
        let sectors = (0..=top)
            .map(|n| self.exact_sw(n, opts))
            .collect::<Result<Vec<_>>>()?;
        Ok(EffectiveOperator::from_sectors(&sectors))
    }
}

/// `Π a†_c · Π a_d` with sorted site lists (repeats allowed).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub create: Vec<usize>,
    pub annihilate: Vec<usize>,
}

impl Monomial {
    pub fn new(mut create: Vec<usize>, mut annihilate: Vec<usize>) -> Self {
        create.sort_unstable();
        annihilate.sort_unstable();
        Monomial { create, annihilate }
    }

    fn from_occupations(out: &[u8], inp: &[u8]) -> Self {
        let expand = |occ: &[u8]| -> Vec<usize> {
            occ.iter()
                .enumerate()
                .flat_map(|(i, &k)| std::iter::repeat_n(i, k as usize))
                .collect()
        };
        Monomial {
            create: expand(out),
            annihilate: expand(inp),
        }
    }

    pub fn adjoint(&self) -> Self {
        Monomial {
            create: self.annihilate.clone(),
            annihilate: self.create.clone(),
        }
    }

    pub fn bodies(&self) -> usize {
        self.create.len()
    }

    pub fn is_diagonal(&self) -> bool {
        self.create == self.annihilate
    }

    /// Distinct sites touched.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.create.iter().chain(&self.annihilate).copied().collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    fn count(list: &[usize], site: usize) -> usize {
        list.iter().filter(|&&x| x == site).count()
    }

    /// `⟨out|M|inp⟩` on occupation vectors.
    pub fn element(&self, out: &[u8], inp: &[u8]) -> f64 {
        let mut amp = 1.0;
        for i in 0..inp.len() {
            let d = Self::count(&self.annihilate, i);
            let c = Self::count(&self.create, i);
            let (n_in, n_out) = (inp[i] as usize, out[i] as usize);
            if d > n_in || n_in - d + c != n_out {
                return 0.0;
            }
            amp *= falling_sqrt(n_in, d) * falling_sqrt(n_out, c);
        }
        for &s in self.create.iter().chain(&self.annihilate) {
            if s >= inp.len() {
                return 0.0;
            }
        }
        amp
    }

    fn relabel(&self, map: &[usize]) -> Self {
        Monomial::new(
            self.create.iter().map(|&i| map[i]).collect(),
            self.annihilate.iter().map(|&i| map[i]).collect(),
        )
    }
}

/// `√(n!/(n−k)!)`.
fn falling_sqrt(n: usize, k: usize) -> f64 {
    ((n - k + 1)..=n).map(|x| x as f64).product::<f64>().sqrt()
}

/// Number-conserving real operator as normal-ordered monomials.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EffectiveOperator {
    pub terms: BTreeMap<Monomial, f64>,
}

impl EffectiveOperator {
    /// Recover the unique normal-ordered expansion with at most
    /// `sectors.len() − 1` bodies that reproduces every sector matrix.
    pub fn from_sectors(sectors: &[SectorHamiltonian]) -> Self {
        let mut op = EffectiveOperator::default();
        for s in sectors {
            let mut new = BTreeMap::new();
            for (r, out) in s.states.iter().enumerate() {
                for (c, inp) in s.states.iter().enumerate() {
                    let lower = op.element(out, inp);
                    let norm: f64 = out.iter().chain(inp).map(|&k| falling_sqrt(k as usize, k as usize)).product();
                    let coef = (s.matrix[(r, c)] - lower) / norm;
                    if coef != 0.0 {
                        new.insert(Monomial::from_occupations(out, inp), coef);
                    }
                }
            }
            op.terms.extend(new);
        }
        op
    }

    pub fn element(&self, out: &[u8], inp: &[u8]) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.element(out, inp)).sum()
    }

    /// Matrix on a list of occupation vectors.
    pub fn matrix_on(&self, states: &[Vec<u8>]) -> DMatrix<f64> {
        DMatrix::from_fn(states.len(), states.len(), |r, c| self.element(&states[r], &states[c]))
    }

    pub fn get(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn add_scaled(&mut self, other: &EffectiveOperator, s: f64) {
        for (m, c) in &other.terms {
            *self.terms.entry(m.clone()).or_insert(0.0) += s * c;
        }
    }

    /// Map local site labels to global ones.
    pub fn relabel(&self, map: &[usize]) -> Self {
        let mut out = EffectiveOperator::default();
        for (m, c) in &self.terms {
            *out.terms.entry(m.relabel(map)).or_insert(0.0) += c;
        }
        out
    }

    /// `max |c(M) − c(M†)|`.
    pub fn hermiticity_error(&self) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| (c - self.get(&m.adjoint())).abs())
            .fold(0.0, f64::max)
    }

    /// Largest coefficient difference over the union of monomials, skipping
    /// the constant.
    pub fn max_difference(&self, other: &EffectiveOperator) -> f64 {
        self.terms
            .keys()
            .chain(other.terms.keys())
            .filter(|m| m.bodies() > 0)
            .map(|m| (self.get(m) - other.get(m)).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).fold(0.0, f64::max)
    }

    /// Drop coefficients with magnitude at most `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        EffectiveOperator {
            terms: self.terms.iter().filter(|(_, c)| c.abs() > tol).map(|(m, c)| (m.clone(), *c)).collect(),
        }
    }

    /// As a term list; the constant is omitted.
    pub fn to_term_list(&self, nsites: usize) -> BoseTermList {
        let mut list = BoseTermList::new(nsites);
        for (m, c) in &self.terms {
            if m.bodies() > 0 {
                list.terms.push(Term::normal_ordered((*c).into(), &m.create, &m.annihilate));
            }
        }
        list
    }
}
