//! Qutrit two-point correlator tomography.
//!
//! Local rotations map the coherences `⟨X^{mn}_i X^{nm'}_j⟩` onto number
//! correlations `⟨(nᵢ−1)(nⱼ−1)⟩`. Scanning the rotation phases and fitting the
//! four interference terms recovers `C_ij = ⟨a†ᵢaⱼ⟩`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::FockBasis;
use crate::error::{domain, Error, Result};
use crate::spectra::StateVector;

type C = Complex64;
type Matrix9 = SMatrix<C, 9, 9>;

/// Shot count used by the hardware protocol.
pub const DEFAULT_SHOTS: usize = 10_000;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Single-qutrit unitary on one site.
#[derive(Debug, Clone, PartialEq)]
pub struct QutritGate {
    pub matrix: Matrix3<C>,
    pub site: usize,
    pub label: String,
}

impl QutritGate {
    pub fn on(mut self, site: usize) -> Self {
        self.site = site;
        self
    }

    pub fn identity(site: usize) -> Self {
        QutritGate {
            matrix: Matrix3::identity(),
            site,
            label: "I".into(),
        }
    }

    /// `max |G†G − I|`.
    pub fn unitarity_error(&self) -> f64 {
        (self.matrix.adjoint() * self.matrix - Matrix3::identity())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `self` applied after `other` on the same site.
    pub fn then_after(&self, other: &QutritGate) -> QutritGate {
        QutritGate {
            matrix: self.matrix * other.matrix,
            site: self.site,
            label: format!("{}·{}", self.label, other.label),
        }
    }
}

/// Hubbard operator `|m⟩⟨n|`.
pub fn hubbard(m: usize, n: usize) -> Matrix3<C> {
    let mut x = Matrix3::zeros();
    x[(m, n)] = c(1.0, 0.0);
    x
}

/// Annihilation operator truncated to three levels.
pub fn qutrit_lowering() -> Matrix3<C> {
    hubbard(0, 1) + hubbard(1, 2) * c(2f64.sqrt(), 0.0)
}

/// Rotation by `α` between levels `m` and `n` about an equatorial axis at
/// angle `φ`: `exp(−i(α/2)(e^{−iφ}X^{mn} + e^{iφ}X^{nm}))`.
pub fn givens(m: usize, n: usize, alpha: f64, phi: f64) -> Result<QutritGate> {
    if m == n || m > 2 || n > 2 {
        return domain(format!("Givens rotation needs distinct levels in 0..=2, got ({m},{n})"));
    }
    let g = hubbard(m, n) * C::from_polar(1.0, -phi) + hubbard(n, m) * C::from_polar(1.0, phi);
    let p = hubbard(m, m) + hubbard(n, n);
    // The generator squares to the projector on {m, n}.
    let matrix = Matrix3::identity() - p + p * c((alpha / 2.0).cos(), 0.0) - g * c(0.0, (alpha / 2.0).sin());
    Ok(QutritGate {
        matrix,
        site: 0,
        label: format!("U{m}{n}({alpha:.4},{phi:.4})"),
    })
}

/// Middle angle of the three-part rotation.
pub fn beta_angle() -> f64 {
    2.0 * (1.0 / 3f64.sqrt()).acos()
}

/// `U⁰¹_{π/2}(φ)·U¹²_β(χ)·U⁰¹_{π/3}(φ)`.
pub fn w_gate(phi: f64, chi: f64) -> QutritGate {
    let a = givens(0, 1, PI / 2.0, phi).expect("valid levels");
    let b = givens(1, 2, beta_angle(), chi).expect("valid levels");
    let g = givens(0, 1, PI / 3.0, phi).expect("valid levels");
    QutritGate {
        matrix: a.matrix * b.matrix * g.matrix,
        site: 0,
        label: format!("W({phi:.4},{chi:.4})"),
    }
}

/// Rotation with `V†(n−1)V = (i/√3)(e^{−iφ}a − e^{iφ}a†)`.
pub fn v_gate(phi: f64) -> QutritGate {
    let mut g = w_gate(phi, phi);
    g.label = format!("V({phi:.4})");
    g
}

/// `W†(φ,χ)(n−1)W(φ,χ)`.
pub fn rotated_number(phi: f64, chi: f64) -> Matrix3<C> {
    let w = w_gate(phi, chi).matrix;
    let nm1 = Matrix3::from_diagonal(&nalgebra::Vector3::new(c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)));
    w.adjoint() * nm1 * w
}

/// Free evolution of isolated qutrits over `τ` with detuning `δω` and
/// nonlinearity `η`: `exp(−iτ(δω n + (η/2)n(n−1)))`.
pub fn atomic_evolution(tau: f64, delta_omega: f64, eta: f64) -> Matrix3<C> {
    let e = |n: f64| delta_omega * n + eta / 2.0 * n * (n - 1.0);
    Matrix3::from_diagonal(&nalgebra::Vector3::new(
        C::from_polar(1.0, -tau * e(0.0)),
        C::from_polar(1.0, -tau * e(1.0)),
        C::from_polar(1.0, -tau * e(2.0)),
    ))
}

/// Two-site reduced density matrix, split by the particle number left on the
/// other sites.
#[derive(Debug, Clone)]
pub struct PairRdm {
    pub i: usize,
    pub j: usize,
    /// `(rest particle number, unnormalized 9×9 block)`; index `3a + b`.
    pub blocks: Vec<(usize, Matrix9)>,
    pub ntotal: usize,
}

impl PairRdm {
    pub fn new(state: &StateVector, basis: &FockBasis, i: usize, j: usize) -> Result<Self> {
        if basis.nmax() > 2 {
            return domain("qutrit tomography needs nmax <= 2");
        }
        if i == j || i >= basis.nsites() || j >= basis.nsites() {
            return domain(format!("invalid site pair ({i},{j})"));
        }
        if state.len() != basis.dim() {
            return domain("state length differs from the basis dimension");
        }
        // Group amplitudes by the configuration of the other sites.
        let mut groups: std::collections::BTreeMap<Vec<u8>, [C; 9]> = Default::default();
        for (k, occ) in basis.iter().enumerate() {
            let rest: Vec<u8> = occ
                .iter()
                .enumerate()
                .filter(|&(s, _)| s != i && s != j)
                .map(|(_, &o)| o)
                .collect();
            let slot = 3 * occ[i] as usize + occ[j] as usize;
            groups.entry(rest).or_insert([C::default(); 9])[slot] = state[k];
        }
        let mut by_number: std::collections::BTreeMap<usize, Matrix9> = Default::default();
        for (rest, amps) in groups {
            let r: usize = rest.iter().map(|&o| o as usize).sum();
            let v = SMatrix::<C, 9, 1>::from_column_slice(&amps);
            *by_number.entry(r).or_insert_with(Matrix9::zeros) += v * v.adjoint();
        }
        Ok(PairRdm {
            i,
            j,
            blocks: by_number.into_iter().collect(),
            ntotal: basis.ntotal(),
        })
    }

    /// Full 9×9 pair density matrix.
    pub fn total(&self) -> Matrix9 {
        self.blocks.iter().fold(Matrix9::zeros(), |acc, (_, b)| acc + b)
    }

    /// `⟨X^{ab}_i X^{cd}_j⟩`.
    pub fn hubbard_pair(&self, a: usize, b: usize, cc: usize, d: usize) -> C {
        // tr(ρ |a⟩⟨b| ⊗ |c⟩⟨d|) = ρ[(b,d),(a,c)]
        self.total()[(3 * b + d, 3 * a + cc)]
    }

    /// Joint distribution of `(rest number, nᵢ, nⱼ)` after local rotations.
    fn outcomes(&self, gi: &Matrix3<C>, gj: &Matrix3<C>) -> Vec<(usize, usize, usize, f64)> {
        let g = gi.kronecker(gj);
        let mut out = Vec::with_capacity(9 * self.blocks.len());
        for (r, b) in &self.blocks {
            let rho = g * b * g.adjoint();
            for a in 0..3 {
                for bb in 0..3 {
                    out.push((*r, a, bb, rho[(3 * a + bb, 3 * a + bb)].re.max(0.0)));
                }
            }
        }
        out
    }

    /// `⟨(nᵢ−1)(nⱼ−1)⟩` after rotating site `i` by `gi` and `j` by `gj`.
    /// `shots = 0` returns the exact value.
    pub fn measure(
        &self,
        gi: &Matrix3<C>,
        gj: &Matrix3<C>,
        shots: usize,
        postselect: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<Estimate> {
        let outs = self.outcomes(gi, gj);
        let keep = |r: usize, a: usize, b: usize| !postselect || r + a + b == self.ntotal;
        let corr = |a: usize, b: usize| (a as f64 - 1.0) * (b as f64 - 1.0);
        if shots == 0 {
            let kept: f64 = outs.iter().filter(|o| keep(o.0, o.1, o.2)).map(|o| o.3).sum();
            if kept <= 1e-300 {
                return Err(Error::AllSamplesDiscarded(0));
            }
            let v: f64 = outs
                .iter()
                .filter(|o| keep(o.0, o.1, o.2))
                .map(|o| o.3 * corr(o.1, o.2))
                .sum();
            return Ok(Estimate {
                value: v / kept,
                stderr: 0.0,
                kept: 0,
                shots: 0,
            });
        }
        let total: f64 = outs.iter().map(|o| o.3).sum();
        let mut cdf = Vec::with_capacity(outs.len());
        let mut acc = 0.0;
        for o in &outs {
            acc += o.3 / total;
            cdf.push(acc);
        }
        let (mut s1, mut s2, mut kept) = (0.0, 0.0, 0usize);
        for _ in 0..shots {
            let u: f64 = rng.random();
            let k = cdf.partition_point(|&p| p < u).min(outs.len() - 1);
            let (r, a, b, _) = outs[k];
            if keep(r, a, b) {
                let x = corr(a, b);
                s1 += x;
                s2 += x * x;
                kept += 1;
            }
        }
        if kept == 0 {
            return Err(Error::AllSamplesDiscarded(shots));
        }
        let n = kept as f64;
        let mean = s1 / n;
        let var = if kept > 1 { (s2 - n * mean * mean).max(0.0) / (n - 1.0) } else { 0.0 };
        Ok(Estimate {
            value: mean,
            stderr: (var / n).sqrt(),
            kept,
            shots,
        })
    }
}

/// Estimated number correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    /// Samples surviving post-selection (0 in exact mode).
    pub kept: usize,
    pub shots: usize,
}

/// `⟨(nᵢ−1)(nⱼ−1)⟩` for a pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEstimate {
    pub i: usize,
    pub j: usize,
    pub estimate: Estimate,
}

/// Rotate the listed sites and estimate the number correlation of every
/// pair of rotated sites.
pub fn measure_rotated_correlations(
    state: &StateVector,
    basis: &FockBasis,
    gates: &[QutritGate],
    shots: usize,
    postselect: bool,
    seed: u64,
) -> Result<Vec<PairEstimate>> {
    let mut seen = std::collections::BTreeSet::new();
    for g in gates {
        if !seen.insert(g.site) {
            return domain(format!("two gates act on site {}", g.site));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (a, ga) in gates.iter().enumerate() {
        for gb in &gates[a + 1..] {
            let rdm = PairRdm::new(state, basis, ga.site, gb.site)?;
            let estimate = rdm.measure(&ga.matrix, &gb.matrix, shots, postselect, &mut rng)?;
            out.push(PairEstimate {
                i: ga.site,
                j: gb.site,
                estimate,
            });
        }
    }
    Ok(out)
}

/// Phase settings `(φᵢ, χᵢ, φⱼ, χⱼ)`.
pub type Setting = [f64; 4];

/// Every combination of eight `φ` and four `χ` values on both sites.
pub fn default_scan_grid() -> Vec<Setting> {
    let phis: Vec<f64> = (0..8).map(|k| 2.0 * PI * k as f64 / 8.0).collect();
    let chis: Vec<f64> = (0..4).map(|k| 2.0 * PI * k as f64 / 4.0).collect();
    let mut g = Vec::with_capacity(1024);
    for &pi in &phis {
        for &ci in &chis {
            for &pj in &phis {
                for &cj in &chis {
                    g.push([pi, ci, pj, cj]);
                }
            }
        }
    }
    g
}

/// Scan that varies one site at a time with the partner at zero phase.
pub fn single_site_scan_grid() -> Vec<Setting> {
    let mut g = Vec::new();
    for k in 0..8 {
        for m in 0..4 {
            let (p, x) = (2.0 * PI * k as f64 / 8.0, 2.0 * PI * m as f64 / 4.0);
            g.push([p, x, 0.0, 0.0]);
            g.push([0.0, 0.0, p, x]);
        }
    }
    g
}

/// Measured correlations over a phase grid for one pair.
#[derive(Debug, Clone)]
pub struct PhaseScan {
    pub i: usize,
    pub j: usize,
    pub settings: Vec<Setting>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub shots: usize,
    pub postselect: bool,
}

/// Free evolution preceding the rotations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WaitEvolution {
    pub tau: f64,
    pub delta_omega: [f64; 2],
    pub eta: [f64; 2],
}

impl WaitEvolution {
    /// Phases `θ_t` acquired by the four coherences over the wait.
    pub fn phases(&self) -> [f64; 4] {
        let [di, dj] = self.delta_omega;
        let [ei, ej] = self.eta;
        let t = self.tau;
        [t * (di - dj), t * (di - dj - ej), t * (di + ei - dj), t * (di + ei - dj - ej)]
    }
}

/// Sampling controls for a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Shots per setting; 0 gives exact expectation values.
    pub shots: usize,
    pub postselect: bool,
    pub seed: u64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            shots: DEFAULT_SHOTS,
            postselect: false,
            seed: 0,
        }
    }
}

impl ScanOptions {
    pub fn exact() -> Self {
        ScanOptions {
            shots: 0,
            ..Default::default()
        }
    }
}

/// Run a phase scan of pair `(i, j)`, optionally after a free wait.
pub fn run_phase_scan(
    state: &StateVector,
    basis: &FockBasis,
    (i, j): (usize, usize),
    settings: &[Setting],
    wait: Option<&WaitEvolution>,
    opts: &ScanOptions,
) -> Result<PhaseScan> {
    let ScanOptions { shots, postselect, seed } = *opts;
    let rdm = PairRdm::new(state, basis, i, j)?;
    let (ui, uj) = match wait {
        Some(w) => (
            atomic_evolution(w.tau, w.delta_omega[0], w.eta[0]),
            atomic_evolution(w.tau, w.delta_omega[1], w.eta[1]),
        ),
        None => (Matrix3::identity(), Matrix3::identity()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(settings.len());
    let mut stderr = Vec::with_capacity(settings.len());
    for s in settings {
        let gi = w_gate(s[0], s[1]).matrix * ui;
        let gj = w_gate(s[2], s[3]).matrix * uj;
        let e = rdm.measure(&gi, &gj, shots, postselect, &mut rng)?;
        values.push(e.value);
        stderr.push(e.stderr);
    }
    Ok(PhaseScan {
        i,
        j,
        settings: settings.to_vec(),
        values,
        stderr,
        shots,
        postselect,
    })
}

/// Weights of the four coherences in `a†ᵢaⱼ`.
pub const COHERENCE_WEIGHTS: [f64; 4] = [1.0, std::f64::consts::SQRT_2, std::f64::consts::SQRT_2, 2.0];

/// Phase differences `(φᵢ−φⱼ, φᵢ−χⱼ, χᵢ−φⱼ, χᵢ−χⱼ)`.
fn differences(s: &Setting) -> [f64; 4] {
    [s[0] - s[2], s[0] - s[3], s[1] - s[2], s[1] - s[3]]
}

const TERM_NAMES: [&str; 4] = ["φi−φj", "φi−χj", "χi−φj", "χi−χj"];

/// How dynamical phases are handled in the reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseModel {
    /// Phases known (zero for an immediate measurement); yields complex `C`.
    Known([f64; 4]),
    /// Phases unknown; only the moduli of the coherences are used.
    Free,
}

impl Default for PhaseModel {
    fn default() -> Self {
        PhaseModel::Known([0.0; 4])
    }
}

/// Fitted coherences and the assembled correlator.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// `κ = (⟨X¹⁰X⁰¹⟩, ⟨X¹⁰X¹²⟩, ⟨X²¹X⁰¹⟩, ⟨X²¹X¹²⟩)` at the measurement time,
    /// phase-corrected when the phases are known.
    pub coherences: [C; 4],
    /// `|κ_t|`.
    pub rho: [f64; 4],
    /// Fitted constant offset (zero for ideal data).
    pub offset: f64,
    /// `C_ij` when the phases are known.
    pub correlator: Option<C>,
    /// `|C_ij|`: `|Σ w_t κ_t|` for known phases, `Σ w_t |κ_t|` for free ones.
    pub magnitude: f64,
}

/// Least-squares fit of the four interference terms.
pub fn reconstruct_correlator(scan: &PhaseScan, phases: PhaseModel) -> Result<Reconstruction> {
    let m = scan.settings.len();
    if m != scan.values.len() {
        return domain("scan settings and values differ in length");
    }
    let ncol = 9;
    let mut a = DMatrix::<f64>::zeros(m, ncol);
    let mut y = DVector::<f64>::zeros(m);
    for (r, s) in scan.settings.iter().enumerate() {
        let d = differences(s);
        for t in 0..4 {
            a[(r, 2 * t)] = d[t].cos();
            a[(r, 2 * t + 1)] = d[t].sin();
        }
        a[(r, 8)] = 1.0;
        y[r] = 1.5 * scan.values[r];
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = 1e-9 * smax.max(1e-300) * (m.max(ncol) as f64);
    if m < ncol || svd.singular_values.iter().any(|&s| s < tol) {
        return Err(Error::RankDeficient(unresolved_terms(&a, tol)));
    }
    let x = svd.solve(&y, tol).map_err(|e| Error::Numerical(e.to_string()))?;
    let mut coherences = [C::default(); 4];
    for t in 0..4 {
        // Re(wκ e^{id}) = Re(wκ)cos d − Im(wκ)sin d
        let wk = c(x[2 * t], -x[2 * t + 1]);
        coherences[t] = wk / COHERENCE_WEIGHTS[t];
    }
    let rho = coherences.map(|k| k.norm());
    let (correlator, magnitude) = match phases {
        PhaseModel::Known(theta) => {
            for t in 0..4 {
                coherences[t] *= C::from_polar(1.0, -theta[t]);
            }
            let cij: C = (0..4).map(|t| coherences[t] * COHERENCE_WEIGHTS[t]).sum();
            (Some(cij), cij.norm())
        }
        PhaseModel::Free => (None, (0..4).map(|t| rho[t] * COHERENCE_WEIGHTS[t]).sum()),
    };
    Ok(Reconstruction {
        coherences,
        rho,
        offset: x[8],
        correlator,
        magnitude,
    })
}

/// Names of the design columns that take part in a null vector.
fn unresolved_terms(a: &DMatrix<f64>, tol: f64) -> Vec<String> {
    let ncol = a.ncols();
    let ata = a.transpose() * a;
    let e = ata.symmetric_eigen();
    let mut hit = vec![false; ncol];
    for k in 0..ncol {
        if e.eigenvalues[k] < tol * tol.max(1.0) {
            for (col, h) in hit.iter_mut().enumerate() {
                if e.eigenvectors[(col, k)].abs() > 1e-6 {
                    *h = true;
                }
            }
        }
    }
    (0..ncol)
        .filter(|&col| hit[col])
        .map(|col| match col {
            8 => "constant".to_string(),
            _ => format!("{}({})", if col % 2 == 0 { "cos" } else { "sin" }, TERM_NAMES[col / 2]),
        })
        .collect()
}

/// Two-qutrit partial swap acting on the `{|10⟩, |01⟩}` block, as a 9×9
/// matrix on the product space with index `3n₀ + n₁`.
pub fn fsim(theta: f64) -> Matrix9 {
    let mut m = Matrix9::identity();
    let (a, b) = (3, 1); // |10⟩, |01⟩
    m[(a, a)] = c(theta.cos(), 0.0);
    m[(b, b)] = c(theta.cos(), 0.0);
    m[(a, b)] = c(0.0, -theta.sin());
    m[(b, a)] = c(0.0, -theta.sin());
    m
}

/// The benchmark circuit on `|00⟩`: π-pulse (0-1) on qutrit 0, `fsim(θ)`,
/// then π-pulses on qutrit 0 in the 1-2 and 0-1 subspaces. Returned in the
/// two-particle sector of two sites (see [`benchmark_basis`]).
pub fn benchmark_circuit(theta: f64) -> StateVector {
    let on0 = |g: &QutritGate| g.matrix.kronecker(&Matrix3::<C>::identity());
    let pi01 = on0(&givens(0, 1, PI, 0.0).expect("valid levels"));
    let pi12 = on0(&givens(1, 2, PI, 0.0).expect("valid levels"));
    let mut psi = SMatrix::<C, 9, 1>::zeros();
    psi[0] = c(1.0, 0.0);
    let out = pi01 * pi12 * fsim(theta) * pi01 * psi;
    let basis = benchmark_basis();
    let mut v = DVector::zeros(basis.dim());
    for (k, occ) in basis.iter().enumerate() {
        v[k] = out[3 * occ[0] as usize + occ[1] as usize];
    }
    v
}

/// Two sites, two particles, at most two per site.
pub fn benchmark_basis() -> FockBasis {
    FockBasis::new(2, 2, 2).expect("valid sector")
}

/// Closed-form benchmark correlator `(i/√2)·sin 2θ`.
pub fn predicted_c01(theta: f64) -> C {
    c(0.0, FRAC_1_SQRT_2 * (2.0 * theta).sin())
}

/// Swap angle of a trapezoidal coupler pulse, folded into `[0, π/2]`.
pub fn swap_angle(j: f64, t_hold: f64, t_ramp: f64) -> f64 {
    let raw = (j * (t_hold + t_ramp)).rem_euclid(PI);
    if raw > PI / 2.0 {
        PI - raw
    } else {
        raw
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::spdm;
    use proptest::prelude::*;
    use rand::Rng;

    fn max_abs3(m: &Matrix3<C>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn givens_examples() {
        assert!(max_abs3(&(givens(0, 1, 0.0, 0.7).unwrap().matrix - Matrix3::identity())) < 1e-15);
        let swap = givens(0, 1, PI, 0.0).unwrap().matrix;
        assert!((swap[(1, 0)] - c(0.0, -1.0)).norm() < 1e-15);
        assert!((swap[(0, 1)] - c(0.0, -1.0)).norm() < 1e-15);
        assert!((swap[(2, 2)] - c(1.0, 0.0)).norm() < 1e-15);
        let g = givens(1, 2, 0.9, 0.3).unwrap();
        let h = givens(1, 2, -0.9, 0.3).unwrap();
        assert!(max_abs3(&(g.then_after(&h).matrix - Matrix3::identity())) < 1e-15);
        assert!(givens(1, 1, 0.1, 0.0).is_err());
        assert!(givens(0, 3, 0.1, 0.0).is_err());
    }

    #[test]
    fn v_gate_identity_and_spectrum() {
        let a = qutrit_lowering();
        for k in 0..32 {
            let phi = 0.37 * k as f64 - 3.0;
            let v = v_gate(phi);
            assert!(v.unitarity_error() < 1e-12);
            let lhs = rotated_number(phi, phi);
            let rhs = (a * C::from_polar(1.0, -phi) - a.adjoint() * C::from_polar(1.0, phi)) * c(0.0, 1.0 / 3f64.sqrt());
            assert!(max_abs3(&(lhs - rhs)) < 1e-12);
            let mut ev: Vec<f64> = rhs.map(|z| z).symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            for (e, want) in ev.iter().zip([-1.0, 0.0, 1.0]) {
                assert!((e - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn w_gate_absorbs_free_evolution() {
        assert_eq!(w_gate(0.0, 0.0).matrix, v_gate(0.0).matrix);
        let (tau, dw, eta) = (3.1, 0.27, -1.3);
        let phi = 0.8;
        let u = atomic_evolution(tau, dw, eta);
        let conj = u * v_gate(phi).matrix * u.adjoint();
        let w = w_gate(phi - dw * tau, phi - dw * tau - eta * tau);
        assert!(w.unitarity_error() < 1e-12);
        assert!(max_abs3(&(conj - w.matrix)) < 1e-12);
    }

    #[test]
    fn mott_pair_has_no_correlation() {
        let b = FockBasis::new(2, 2, 2).unwrap();
        let mut s = DVector::zeros(b.dim());
        s[b.index(&[1, 1]).unwrap()] = c(1.0, 0.0);
        let gates = [QutritGate::identity(0), QutritGate::identity(1)];
        let r = measure_rotated_correlations(&s, &b, &gates, 0, false, 0).unwrap();
        assert_eq!(r[0].estimate.value, 0.0);
        let dup = [QutritGate::identity(0), QutritGate::identity(0)];
        assert!(measure_rotated_correlations(&s, &b, &dup, 0, false, 0).is_err());
        let scan = run_phase_scan(&s, &b, (0, 1), &default_scan_grid(), None, &ScanOptions::exact()).unwrap();
        let rec = reconstruct_correlator(&scan, PhaseModel::default()).unwrap();
        assert!(rec.rho.iter().all(|&r| r < 1e-12));
    }

    #[test]
    fn single_phase_sweep_traces_cosine() {
        let theta = 0.3;
        let s = benchmark_circuit(theta);
        let b = benchmark_basis();
        let c01 = spdm(&s, &b).c[(0, 1)];
        for k in 0..16 {
            let phi = 2.0 * PI * k as f64 / 16.0;
            let gates = [v_gate(phi).on(0), v_gate(0.0).on(1)];
            let z = measure_rotated_correlations(&s, &b, &gates, 0, false, 0).unwrap()[0].estimate.value;
            let want = 2.0 / 3.0 * c01.norm() * (phi + c01.arg()).cos();
            assert!((z - want).abs() < 1e-12);
        }
    }

    #[test]
    fn single_particle_bell_pair() {
        let b = FockBasis::new(2, 1, 2).unwrap();
        let s = DVector::from_element(2, c(FRAC_1_SQRT_2, 0.0));
        let scan = run_phase_scan(&s, &b, (0, 1), &default_scan_grid(), None, &ScanOptions::exact()).unwrap();
        let rec = reconstruct_correlator(&scan, PhaseModel::default()).unwrap();
        assert!((rec.magnitude - 0.5).abs() < 1e-8);
    }

    #[test]
    fn benchmark_state_and_correlator() {
        let b = benchmark_basis();
        for theta in [0.0, PI / 8.0, PI / 4.0, 3.0 * PI / 8.0, PI / 2.0] {
            let s = benchmark_circuit(theta);
            // −i sinθ|11⟩ + cosθ|20⟩ up to a global sign.
            let want_11 = c(0.0, -theta.sin());
            let want_20 = c(theta.cos(), 0.0);
            let got = (s[b.index(&[1, 1]).unwrap()], s[b.index(&[2, 0]).unwrap()]);
            assert!((got.0 + want_11).norm() < 1e-12 && (got.1 + want_20).norm() < 1e-12);
            let scan = run_phase_scan(&s, &b, (0, 1), &default_scan_grid(), None, &ScanOptions::exact()).unwrap();
            let rec = reconstruct_correlator(&scan, PhaseModel::default()).unwrap();
            assert!((rec.magnitude - predicted_c01(theta).norm()).abs() < 1e-6);
            let direct = spdm(&s, &b).c[(0, 1)];
            assert!((rec.correlator.unwrap() - direct).norm() < 1e-8);
            // The closed form is ⟨a†₁a₀⟩, the conjugate of the direct value.
            assert!((predicted_c01(theta) - direct.conj()).norm() < 1e-12);
        }
        assert!((predicted_c01(PI / 4.0).norm() - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn sparse_grid_is_rank_deficient() {
        let s = benchmark_circuit(0.4);
        let scan = run_phase_scan(&s, &benchmark_basis(), (0, 1), &single_site_scan_grid(), None, &ScanOptions::exact()).unwrap();
        match reconstruct_correlator(&scan, PhaseModel::default()) {
            Err(Error::RankDeficient(names)) => {
                assert!(names.iter().any(|n| n.contains("φi−φj")), "{names:?}");
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn wait_phases_are_corrected() {
        let b = FockBasis::new(3, 3, 2).unwrap();
        let s = random_state(&b, 77);
        let wait = WaitEvolution {
            tau: 2.3,
            delta_omega: [0.4, -0.15],
            eta: [-1.2, -1.25],
        };
        let grid = default_scan_grid();
        let scan = run_phase_scan(&s, &b, (0, 2), &grid, Some(&wait), &ScanOptions::exact()).unwrap();
        let direct = spdm(&s, &b).c[(0, 2)];
        let known = reconstruct_correlator(&scan, PhaseModel::Known(wait.phases())).unwrap();
        assert!((known.correlator.unwrap() - direct).norm() < 1e-8);
        // Free phases: moduli unaffected by the wait.
        let still = run_phase_scan(&s, &b, (0, 2), &grid, None, &ScanOptions::exact()).unwrap();
        let a = reconstruct_correlator(&scan, PhaseModel::Free).unwrap();
        let z = reconstruct_correlator(&still, PhaseModel::Free).unwrap();
        assert!((a.magnitude - z.magnitude).abs() < 1e-8);
    }

    #[test]
    fn shots_agree_with_exact() {
        let s = benchmark_circuit(0.5);
        let b = benchmark_basis();
        let gates = [v_gate(0.9).on(0), v_gate(0.2).on(1)];
        let exact = measure_rotated_correlations(&s, &b, &gates, 0, false, 0).unwrap()[0].estimate;
        let est = measure_rotated_correlations(&s, &b, &gates, 10_000, false, 11).unwrap()[0].estimate;
        assert!((est.value - exact.value).abs() < 4.0 * est.stderr);
        assert_eq!(est.kept, 10_000);
    }

    #[test]
    fn postselection_drops_number_violations() {
        let s = benchmark_circuit(0.5);
        let b = benchmark_basis();
        let gates = [v_gate(0.9).on(0), v_gate(0.2).on(1)];
        let est = measure_rotated_correlations(&s, &b, &gates, 2000, true, 3).unwrap()[0].estimate;
        assert!(est.kept < 2000 && est.kept > 0);
        // A rotation that always leaves site 0 empty, with site 1 untouched
        // holding one particle, never conserves two particles.
        let mut s11 = DVector::zeros(b.dim());
        s11[b.index(&[1, 1]).unwrap()] = c(1.0, 0.0);
        let to_zero = givens(0, 1, PI, 0.0).unwrap().on(0);
        let g = [to_zero, QutritGate::identity(1)];
        assert!(matches!(
            measure_rotated_correlations(&s11, &b, &g, 100, true, 0),
            Err(Error::AllSamplesDiscarded(100))
        ));
    }

    #[test]
    fn swap_angle_folding() {
        assert!((swap_angle(1.0, PI / 8.0, PI / 8.0) - PI / 4.0).abs() < 1e-15);
        assert!((swap_angle(1.0, 3.0 * PI / 8.0, 3.0 * PI / 8.0) - PI / 4.0).abs() < 1e-15);
        assert!((swap_angle(2.0, PI / 8.0, PI / 8.0) - PI / 2.0).abs() < 1e-15);
    }

    fn random_state(b: &FockBasis, seed: u64) -> StateVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = DVector::from_fn(b.dim(), |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let n = v.norm();
        v / c(n, 0.0)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn exact_tomography_matches_spdm(seed in any::<u64>(), n in 1usize..=3) {
            let b = FockBasis::new(2, n, 2).unwrap();
            let s = random_state(&b, seed);
            let scan = run_phase_scan(&s, &b, (0, 1), &default_scan_grid(), None, &ScanOptions::exact()).unwrap();
            let rec = reconstruct_correlator(&scan, PhaseModel::default()).unwrap();
            let direct = spdm(&s, &b).c[(0, 1)];
            prop_assert!((rec.magnitude - direct.norm()).abs() < 1e-8);
        }
    }
}
