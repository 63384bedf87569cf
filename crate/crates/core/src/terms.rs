//! Bosonic term lists and their assembly over a Fock sector.

use num_complex::Complex64;

use crate::basis::FockBasis;
use crate::error::{domain, Result};
use crate::lattice::Lattice;
use crate::sparse::CsrMatrix;

/// Site-local bosonic factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoseOp {
    /// `a†`
    Raise,
    /// `a`
    Lower,
    /// `n`
    Number,
    /// `n(n−1)`
    NumberNm1,
    /// `n(n−1)(n−2)`
    NumberNm1Nm2,
}

impl BoseOp {
    /// Falling factorial `n(n−1)…(n−k+1)` as a tag, for `k` in 1..=3.
    pub fn falling(k: usize) -> Option<BoseOp> {
        match k {
            1 => Some(BoseOp::Number),
            2 => Some(BoseOp::NumberNm1),
            3 => Some(BoseOp::NumberNm1Nm2),
            _ => None,
        }
    }

    fn changes_number(self) -> bool {
        matches!(self, BoseOp::Raise | BoseOp::Lower)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Factor {
    pub site: usize,
    pub op: BoseOp,
}

impl Factor {
    pub fn new(site: usize, op: BoseOp) -> Self {
        Factor { site, op }
    }
}

/// Energy bookkeeping class of a term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermClass {
    /// Contains a raising or lowering factor.
    Kinetic,
    /// A lone number operator.
    OnSite,
    /// Any other diagonal polynomial of number operators.
    Interaction,
}

/// `coeff · f₀ f₁ … f_k`; the rightmost factor acts first.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: Complex64,
    pub factors: Vec<Factor>,
}

impl Term {
    pub fn new(coeff: impl Into<Complex64>, factors: Vec<Factor>) -> Self {
        Term {
            coeff: coeff.into(),
            factors,
        }
    }

    /// Normal-ordered monomial `coeff · Π a†_c · Π a_d` written with the
    /// per-site factor tags. Site lists may repeat entries.
    pub fn normal_ordered(coeff: Complex64, creations: &[usize], annihilations: &[usize]) -> Self {
        let mut sites: Vec<usize> = creations.iter().chain(annihilations).copied().collect();
        sites.sort_unstable();
        sites.dedup();
        let mut factors = Vec::new();
        for s in sites {
            let p = creations.iter().filter(|&&c| c == s).count();
            let q = annihilations.iter().filter(|&&d| d == s).count();
            // (a†)^p a^q = (a†)^(p−q) ff_q(n) when p ≥ q, else ff_p(n) a^(q−p).
            let common = p.min(q);
            factors.extend(std::iter::repeat_n(Factor::new(s, BoseOp::Raise), p - common));
            if common > 0 {
                let op = BoseOp::falling(common).expect("at most three-body per site");
                factors.push(Factor::new(s, op));
            }
            factors.extend(std::iter::repeat_n(Factor::new(s, BoseOp::Lower), q - common));
        }
        Term { coeff, factors }
    }

    /// Raises minus lowers.
    pub fn number_change(&self) -> i64 {
        self.factors
            .iter()
            .map(|f| match f.op {
                BoseOp::Raise => 1,
                BoseOp::Lower => -1,
                _ => 0,
            })
            .sum()
    }

    pub fn class(&self) -> TermClass {
        if self.factors.iter().any(|f| f.op.changes_number()) {
            TermClass::Kinetic
        } else if self.factors.len() == 1 && self.factors[0].op == BoseOp::Number {
            TermClass::OnSite
        } else {
            TermClass::Interaction
        }
    }

    /// Act on `occ` in place, returning the real ladder amplitude, or `None`
    /// when the result vanishes (including `a†` at the cutoff).
    pub fn apply(&self, occ: &mut [u8], nmax: u8) -> Option<f64> {
        let mut amp = 1.0;
        for f in self.factors.iter().rev() {
            let n = occ[f.site];
            let nf = n as f64;
            match f.op {
                BoseOp::Raise => {
                    if n >= nmax {
                        return None;
                    }
                    amp *= (nf + 1.0).sqrt();
                    occ[f.site] = n + 1;
                }
                BoseOp::Lower => {
                    if n == 0 {
                        return None;
                    }
                    amp *= nf.sqrt();
                    occ[f.site] = n - 1;
                }
                BoseOp::Number => amp *= nf,
                BoseOp::NumberNm1 => amp *= nf * (nf - 1.0),
                BoseOp::NumberNm1Nm2 => amp *= nf * (nf - 1.0) * (nf - 2.0),
            }
            if amp == 0.0 {
                return None;
            }
        }
        Some(amp)
    }
}

/// Sum of bosonic terms on `nsites` sites.
#[derive(Debug, Clone, PartialEq)]
pub struct BoseTermList {
    pub nsites: usize,
    pub terms: Vec<Term>,
    /// The caller asserts the sum is Hermitian.
    pub hermitian: bool,
    /// Number-changing terms are accepted (and vanish inside a sector).
    pub number_changing: bool,
}

impl BoseTermList {
    pub fn new(nsites: usize) -> Self {
        BoseTermList {
            nsites,
            terms: Vec::new(),
            hermitian: true,
            number_changing: false,
        }
    }

    pub fn push(&mut self, coeff: impl Into<Complex64>, factors: Vec<Factor>) {
        self.terms.push(Term::new(coeff, factors));
    }

    /// `c·a†_i a_j + c*·a†_j a_i`.
    pub fn push_hopping(&mut self, i: usize, j: usize, c: Complex64) {
        self.push(c, vec![Factor::new(i, BoseOp::Raise), Factor::new(j, BoseOp::Lower)]);
        self.push(c.conj(), vec![Factor::new(j, BoseOp::Raise), Factor::new(i, BoseOp::Lower)]);
    }

    pub fn push_number(&mut self, i: usize, c: f64) {
        self.push(c, vec![Factor::new(i, BoseOp::Number)]);
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn extend(&mut self, other: &BoseTermList) {
        assert_eq!(self.nsites, other.nsites);
        self.terms.extend(other.terms.iter().cloned());
        self.hermitian &= other.hermitian;
        self.number_changing |= other.number_changing;
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff *= s;
        }
        out
    }

    /// Terms of one energy class.
    pub fn filter_class(&self, class: TermClass) -> Self {
        BoseTermList {
            terms: self.terms.iter().filter(|t| t.class() == class).cloned().collect(),
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        for t in &self.terms {
            for f in &t.factors {
                if f.site >= self.nsites {
                    return domain(format!(
                        "factor on site {} outside 0..{}",
                        f.site, self.nsites
                    ));
                }
            }
            if t.number_change() != 0 && !self.number_changing {
                return domain("number-changing term in a list not flagged for it");
            }
        }
        Ok(())
    }
}

/// Total particle number `Σ nᵢ`.
pub fn number_operator(nsites: usize) -> BoseTermList {
    let mut t = BoseTermList::new(nsites);
    for i in 0..nsites {
        t.push_number(i, 1.0);
    }
    t
}

/// `H = −J Σ⟨ij⟩ (a†ᵢaⱼ + h.c.) + (U/2) Σ nᵢ(nᵢ−1) − Σ μᵢ nᵢ`.
pub fn bose_hubbard_terms(lattice: &Lattice, j: f64, u: f64, mu: &[f64]) -> Result<BoseTermList> {
    let n = lattice.nsites();
    if mu.len() != n {
        return domain(format!("mu has {} entries for {n} sites", mu.len()));
    }
    let mut t = BoseTermList::new(n);
    for &(a, b) in lattice.adjacency() {
        t.push_hopping(a, b, Complex64::new(-j, 0.0));
    }
    for i in 0..n {
        t.push(u / 2.0, vec![Factor::new(i, BoseOp::NumberNm1)]);
    }
    for (i, &m) in mu.iter().enumerate() {
        t.push_number(i, -m);
    }
    Ok(t)
}

/// Rotating-frame device form `g Σ (a†ᵢaⱼ + h.c.) + (η/2) Σ n(n−1) + Σ δᵢ nᵢ`.
pub fn transmon_terms(lattice: &Lattice, g: f64, eta: f64, delta: &[f64]) -> Result<BoseTermList> {
    let mu: Vec<f64> = delta.iter().map(|d| -d).collect();
    bose_hubbard_terms(lattice, -g, eta, &mu)
}

/// Lab-frame device form before the rotating-wave approximation:
/// `−g Σ (a†ᵢ − aᵢ)(a†ⱼ − aⱼ) + (η/2) Σ n(n−1) + Σ ωᵢ nᵢ`. Flagged as
/// number-changing; inside a fixed sector only the exchange part survives.
pub fn transmon_terms_lab(lattice: &Lattice, g: f64, eta: f64, omega: &[f64]) -> Result<BoseTermList> {
    let n = lattice.nsites();
    if omega.len() != n {
        return domain(format!("omega has {} entries for {n} sites", omega.len()));
    }
    let mut t = BoseTermList::new(n);
    t.number_changing = true;
    for &(a, b) in lattice.adjacency() {
        use BoseOp::{Lower, Raise};
        for (oa, sa) in [(Raise, 1.0), (Lower, -1.0)] {
            for (ob, sb) in [(Raise, 1.0), (Lower, -1.0)] {
                t.push(-g * sa * sb, vec![Factor::new(a, oa), Factor::new(b, ob)]);
            }
        }
    }
    for (i, &w) in omega.iter().enumerate().take(n) {
        t.push(eta / 2.0, vec![Factor::new(i, BoseOp::NumberNm1)]);
        t.push_number(i, w);
    }
    Ok(t)
}

/// Matrix of a term list over a sector basis.
pub fn assemble(terms: &BoseTermList, basis: &FockBasis) -> Result<CsrMatrix> {
    if terms.nsites != basis.nsites() {
        return domain(format!(
            "term list has {} sites, basis has {}",
            terms.nsites,
            basis.nsites()
        ));
    }
    terms.validate()?;
    let nmax = basis.nmax() as u8;
    let dim = basis.dim();
    let mut triplets = Vec::new();
    let mut occ = vec![0u8; basis.nsites()];
    for col in 0..dim {
        for t in &terms.terms {
            if t.number_change() != 0 {
                continue;
            }
            occ.copy_from_slice(basis.state(col));
            if let Some(amp) = t.apply(&mut occ, nmax) {
                if let Some(row) = basis.index(&occ) {
                    triplets.push((row, col, t.coeff * amp));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(dim, dim, triplets))
}

/// `−H` followed by `aᵢ → −aᵢ` on odd sublattice sites.
///
/// Hopping amplitudes keep their sign while interactions and on-site terms
/// flip, so the spectrum is exactly negated.
pub fn negate_and_gauge(terms: &BoseTermList, lattice: &Lattice) -> Result<BoseTermList> {
    if terms.nsites != lattice.nsites() {
        return domain("term list and lattice disagree on the number of sites");
    }
    let parity = lattice.parity()?;
    let mut out = terms.clone();
    for t in &mut out.terms {
        let flips = t
            .factors
            .iter()
            .filter(|f| f.op.changes_number() && parity[f.site] == 1)
            .count();
        let sign = if flips % 2 == 0 { -1.0 } else { 1.0 };
        t.coeff *= sign;
    }
    Ok(out)
}
