//! Size estimates and refusal before any pipeline runs.

use serde::Serialize;

use dirtyboson::basis::sector_dimension;

use crate::config::{ExperimentConfig, ExperimentKind};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub kind: String,
    pub nsites: usize,
    pub ntotal: usize,
    pub nmax: usize,
    /// Fock-sector dimension; absent for pipelines without a lattice sector.
    pub sector_dimension: Option<u128>,
    /// Whether the pipeline diagonalizes the sector densely.
    pub dense: bool,
    pub dense_cap: u128,
    pub total_cap: u128,
    /// Rough peak memory in bytes.
    pub estimated_bytes: Option<u128>,
    pub tasks: usize,
    pub accepted: bool,
    pub reasons: Vec<String>,
}

/// Sparse storage: basis, CSR hopping matrix, Krylov workspace.
fn sparse_bytes(dim: u128, nsites: usize, bonds: usize, krylov: usize) -> u128 {
    let nnz = dim * (2 * bonds as u128 + 1);
    dim * nsites as u128 + nnz * 24 + dim * 16 * (krylov as u128 + 4)
}

fn bond_count(nx: usize, ny: usize) -> usize {
    nx.saturating_sub(1) * ny + ny.saturating_sub(1) * nx
}

pub fn task_count(config: &ExperimentConfig, kind: ExperimentKind) -> usize {
    let nseeds = config.seeds.list.as_ref().map_or(config.seeds.count, Vec::len);
    let grid = config.j_over_u.len() * config.w_over_u.len() * nseeds;
    match kind {
        ExperimentKind::PhaseGrid => grid,
        ExperimentKind::Compressibility => grid * config.compressibility.protocols.len(),
        ExperimentKind::Bragg => grid * config.bragg.modes.len() * config.bragg.omega_mhz.count,
        ExperimentKind::TomographyBench => config.tomography.thetas.len() * nseeds,
        ExperimentKind::Meanfield => config.j_over_u.len(),
        ExperimentKind::SwDerive => 1,
    }
}

/// Check sector sizes against the caps in `config.limits`; field errors
/// are reported as a refusal reason.
pub fn validate(config: &ExperimentConfig, kind: ExperimentKind) -> ValidationReport {
    let mut reasons = Vec::new();
    if let Err(e) = config.check(kind) {
        reasons.push(format!("{e:#}"));
    }
    let (nsites, ntotal, nmax) = (config.nsites(), config.ntotal(), config.nmax);
    let limits = &config.limits;
    let dense = kind == ExperimentKind::Bragg;
    let (dim, bytes) = if kind.uses_lattice() {
        let dim = sector_dimension(nsites, ntotal, nmax);
        let mut bytes = sparse_bytes(dim, nsites, bond_count(config.lattice.nx, config.lattice.ny), config.propagator.krylov_dim);
        if dense {
            bytes = bytes.saturating_add(dim.saturating_mul(dim).saturating_mul(32));
        }
        if dim == 0 {
            reasons.push(format!("sector is empty: {ntotal} particles cannot fit on {nsites} sites with nmax = {nmax}"));
        }
        if dim > limits.total_cap {
            reasons.push(format!("sector dimension {dim} exceeds the total cap {}", limits.total_cap));
        }
        if dense && dim > limits.dense_cap {
            reasons.push(format!("sector dimension {dim} exceeds the dense cap {}", limits.dense_cap));
        }
        (Some(dim), Some(bytes))
    } else {
        (None, None)
    };
    ValidationReport {
        kind: kind.name().to_string(),
        nsites,
        ntotal,
        nmax,
        sector_dimension: dim,
        dense,
        dense_cap: limits.dense_cap,
        total_cap: limits.total_cap,
        estimated_bytes: bytes,
        tasks: task_count(config, kind),
        accepted: reasons.is_empty(),
        reasons,
    }
}
