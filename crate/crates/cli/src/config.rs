//! Experiment configuration and its conversion to internal units.
//!
//! Frequencies in the file are linear MHz (GHz for bare device
//! frequencies), times are ns, and `J`, `W` are given in units of `U`.
//! [`ExperimentConfig::physical`] converts everything to rad/ns in one place.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use dirtyboson::devicemodel::LatticeDeviceParams;
use dirtyboson::disorder::derive_seeds;
use dirtyboson::dynamics::{PrepTimes, PropagatorConfig, Shape};
use dirtyboson::probes::Protocol;
use dirtyboson::units::{ghz, mhz};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PhaseGrid,
    Compressibility,
    Bragg,
    TomographyBench,
    Meanfield,
    SwDerive,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::PhaseGrid => "phase-grid",
            ExperimentKind::Compressibility => "compressibility",
            ExperimentKind::Bragg => "bragg",
            ExperimentKind::TomographyBench => "tomography-bench",
            ExperimentKind::Meanfield => "meanfield",
            ExperimentKind::SwDerive => "sw-derive",
        }
    }

    /// Pipelines that propagate or diagonalize a lattice sector.
    pub fn uses_lattice(self) -> bool {
        matches!(self, ExperimentKind::PhaseGrid | ExperimentKind::Compressibility | ExperimentKind::Bragg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub nx: usize,
    pub ny: usize,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        LatticeSpec { nx: 4, ny: 1 }
    }
}

/// Disorder seeds: an explicit list, or `count` seeds derived from `master`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedSpec {
    pub master: u64,
    pub count: usize,
    pub list: Option<Vec<u64>>,
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec {
            master: 0,
            count: 1,
            list: None,
        }
    }
}

impl SeedSpec {
    pub fn seeds(&self) -> Vec<u64> {
        match &self.list {
            Some(l) => l.clone(),
            None => derive_seeds(self.master, self.count),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrepMethod {
    /// Time-evolve the preparation ramp from `|1…1⟩`.
    Adiabatic,
    /// Exact ground state of the target Hamiltonian.
    Ground,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreparationSpec {
    pub method: PrepMethod,
    pub resonance_ns: f64,
    pub ramp_ns: f64,
    pub hold_ns: f64,
}

impl Default for PreparationSpec {
    fn default() -> Self {
        let t = PrepTimes::default();
        PreparationSpec {
            method: PrepMethod::Adiabatic,
            resonance_ns: t.resonance,
            ramp_ns: t.ramp,
            hold_ns: t.hold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagatorSpec {
    pub tolerance: f64,
    pub max_dt_ns: f64,
    pub krylov_dim: usize,
}

impl Default for PropagatorSpec {
    fn default() -> Self {
        let p = PropagatorConfig::default();
        PropagatorSpec {
            tolerance: p.tolerance,
            max_dt_ns: p.max_dt,
            krylov_dim: p.krylov_dim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolName {
    Fc,
    Zfc,
}

impl ProtocolName {
    pub fn protocol(self) -> Protocol {
        match self {
            ProtocolName::Fc => Protocol::FieldCooled,
            ProtocolName::Zfc => Protocol::ZeroFieldCooled,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProtocolName::Fc => "fc",
            ProtocolName::Zfc => "zfc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompressibilitySpec {
    pub protocols: Vec<ProtocolName>,
    pub delta_mu_mhz: f64,
    pub t_field_ns: f64,
    pub subtract_natural: bool,
}

impl Default for CompressibilitySpec {
    fn default() -> Self {
        CompressibilitySpec {
            protocols: vec![ProtocolName::Fc, ProtocolName::Zfc],
            delta_mu_mhz: dirtyboson::units::DEFAULT_TILT_MHZ,
            t_field_ns: 250.0,
            subtract_natural: true,
        }
    }
}

/// Evenly spaced grid, both ends included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|k| self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BraggSpec {
    /// Standing-wave mode numbers `(p, q)`.
    pub modes: Vec<(usize, usize)>,
    pub omega_mhz: Range,
    pub amplitude_mhz: f64,
    pub duration_ns: f64,
    pub sample_ns: f64,
    /// Broadening of the exact linear-response curve.
    pub eps_mhz: f64,
}

impl Default for BraggSpec {
    fn default() -> Self {
        BraggSpec {
            modes: vec![(1, 0)],
            omega_mhz: Range {
                start: 38.0,
                stop: 190.0,
                count: 81,
            },
            amplitude_mhz: 0.19,
            duration_ns: 250.0,
            sample_ns: 0.1,
            eps_mhz: 0.19,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographySpec {
    pub thetas: Vec<f64>,
    /// Shots per phase setting; 0 for exact expectation values.
    pub shots: usize,
    pub postselect: bool,
}

impl Default for TomographySpec {
    fn default() -> Self {
        TomographySpec {
            thetas: (0..5).map(|k| k as f64 * std::f64::consts::PI / 8.0).collect(),
            shots: dirtyboson::tomography::DEFAULT_SHOTS,
            postselect: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanfieldSpec {
    /// Points per leg of the Γ→X→M→Γ path.
    pub points_per_leg: usize,
}

impl Default for MeanfieldSpec {
    fn default() -> Self {
        MeanfieldSpec { points_per_leg: 32 }
    }
}

/// Bare transmon grid for `sw-derive`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceSpec {
    pub nx: usize,
    pub ny: usize,
    /// One frequency per qudit, or a single value for all.
    pub omega_q_ghz: Vec<f64>,
    pub eta_q_mhz: f64,
    pub omega_c_ghz: f64,
    pub eta_c_mhz: f64,
    pub k_qc: f64,
    pub k_qq: f64,
    pub k_qq2: f64,
    pub k_cc: f64,
    pub kmax: usize,
    /// Terms below this magnitude go to the residual; `None` keeps all.
    pub floor_khz: Option<f64>,
    pub max_distance: usize,
}

impl Default for DeviceSpec {
    fn default() -> Self {
        DeviceSpec {
            nx: 3,
            ny: 1,
            omega_q_ghz: vec![6.0, 6.03, 5.98],
            eta_q_mhz: -190.0,
            omega_c_ghz: 7.5,
            eta_c_mhz: -120.0,
            k_qc: 0.1 / (6.0f64 * 7.5).sqrt(),
            k_qq: 0.004,
            k_qq2: 2e-4,
            k_cc: 0.0,
            kmax: 3,
            floor_khz: Some(50.0),
            max_distance: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    /// Largest sector that may be diagonalized densely.
    pub dense_cap: u128,
    /// Largest sector handled at all.
    pub total_cap: u128,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            dense_cap: 2000,
            total_cap: 500_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; when present it must match the subcommand.
    pub kind: Option<ExperimentKind>,
    pub lattice: LatticeSpec,
    /// Particle number; defaults to one per site.
    pub ntotal: Option<usize>,
    pub nmax: usize,
    pub u_mhz: f64,
    pub j_over_u: Vec<f64>,
    pub w_over_u: Vec<f64>,
    pub seeds: SeedSpec,
    pub preparation: PreparationSpec,
    pub propagator: PropagatorSpec,
    pub compressibility: CompressibilitySpec,
    pub bragg: BraggSpec,
    pub tomography: TomographySpec,
    pub meanfield: MeanfieldSpec,
    pub device: DeviceSpec,
    pub limits: Limits,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: None,
            lattice: LatticeSpec::default(),
            ntotal: None,
            nmax: 2,
            u_mhz: dirtyboson::units::DEVICE_U_MHZ,
            j_over_u: vec![0.1],
            w_over_u: vec![0.0],
            seeds: SeedSpec::default(),
            preparation: PreparationSpec::default(),
            propagator: PropagatorSpec::default(),
            compressibility: CompressibilitySpec::default(),
            bragg: BraggSpec::default(),
            tomography: TomographySpec::default(),
            meanfield: MeanfieldSpec::default(),
            device: DeviceSpec::default(),
            limits: Limits::default(),
            out_dir: None,
        }
    }
}

/// Quantities in internal units (rad/ns, ns).
#[derive(Debug, Clone, PartialEq)]
pub struct Physical {
    pub u: f64,
    pub delta_mu: f64,
    pub drive_amplitude: f64,
    pub omegas: Vec<f64>,
    pub eps: f64,
    pub times: PrepTimes,
    pub propagator: PropagatorConfig,
    pub device: LatticeDeviceParams,
    pub floor: Option<f64>,
}

fn positive(field: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("{field}: must be positive and finite, got {v}");
    }
    Ok(())
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        bail!("{field}: must be non-negative and finite, got {v}");
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("invalid configuration")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn nsites(&self) -> usize {
        self.lattice.nx * self.lattice.ny
    }

    pub fn ntotal(&self) -> usize {
        self.ntotal.unwrap_or_else(|| self.nsites())
    }

    /// Field-level checks for the given pipeline.
    pub fn check(&self, kind: ExperimentKind) -> Result<()> {
        if let Some(k) = self.kind {
            if k != kind {
                bail!("kind: configuration is for {}, not {}", k.name(), kind.name());
            }
        }
        positive("u_mhz", self.u_mhz)?;
        match kind {
            ExperimentKind::SwDerive => return self.check_device(),
            ExperimentKind::TomographyBench => {
                if self.tomography.thetas.is_empty() {
                    bail!("tomography.thetas: list is empty");
                }
                return self.check_seeds();
            }
            ExperimentKind::Meanfield => {
                if self.j_over_u.is_empty() {
                    bail!("j_over_u: list is empty");
                }
                for (k, &j) in self.j_over_u.iter().enumerate() {
                    non_negative(&format!("j_over_u[{k}]"), j)?;
                }
                if self.meanfield.points_per_leg == 0 {
                    bail!("meanfield.points_per_leg: must be at least 1");
                }
                return Ok(());
            }
            _ => {}
        }
        if self.lattice.nx == 0 || self.lattice.ny == 0 {
            bail!("lattice: nx and ny must be at least 1");
        }
        if self.nmax == 0 {
            bail!("nmax: must be at least 1");
        }
        if self.j_over_u.is_empty() {
            bail!("j_over_u: list is empty");
        }
        if self.w_over_u.is_empty() {
            bail!("w_over_u: list is empty");
        }
        for (k, &j) in self.j_over_u.iter().enumerate() {
            non_negative(&format!("j_over_u[{k}]"), j)?;
        }
        for (k, &w) in self.w_over_u.iter().enumerate() {
            non_negative(&format!("w_over_u[{k}]"), w)?;
        }
        self.check_seeds()?;
        let p = &self.propagator;
        positive("propagator.tolerance", p.tolerance)?;
        positive("propagator.max_dt_ns", p.max_dt_ns)?;
        if p.krylov_dim < 2 {
            bail!("propagator.krylov_dim: must be at least 2");
        }
        let prep = &self.preparation;
        non_negative("preparation.resonance_ns", prep.resonance_ns)?;
        non_negative("preparation.ramp_ns", prep.ramp_ns)?;
        non_negative("preparation.hold_ns", prep.hold_ns)?;
        let adiabatic = kind == ExperimentKind::Compressibility || prep.method == PrepMethod::Adiabatic;
        if adiabatic && self.ntotal() != self.nsites() {
            bail!("ntotal: adiabatic preparation starts from one particle per site, so ntotal must equal nx·ny");
        }
        match kind {
            ExperimentKind::Compressibility => {
                let c = &self.compressibility;
                if c.protocols.is_empty() {
                    bail!("compressibility.protocols: list is empty");
                }
                positive("compressibility.delta_mu_mhz", c.delta_mu_mhz)?;
                non_negative("compressibility.t_field_ns", c.t_field_ns)?;
                if self.lattice.nx < 2 {
                    bail!("lattice.nx: the cosine tilt needs at least two columns");
                }
            }
            ExperimentKind::Bragg => {
                let b = &self.bragg;
                if b.modes.is_empty() {
                    bail!("bragg.modes: list is empty");
                }
                for (k, &(p, q)) in b.modes.iter().enumerate() {
                    if (p == 0 && q == 0) || p >= self.lattice.nx || q >= self.lattice.ny {
                        bail!("bragg.modes[{k}]: ({p}, {q}) is not a standing-wave mode of this lattice");
                    }
                }
                if b.omega_mhz.count < 2 {
                    bail!("bragg.omega_mhz.count: need at least two frequencies");
                }
                positive("bragg.omega_mhz.start", b.omega_mhz.start)?;
                if b.omega_mhz.stop <= b.omega_mhz.start {
                    bail!("bragg.omega_mhz: stop must exceed start");
                }
                positive("bragg.amplitude_mhz", b.amplitude_mhz)?;
                positive("bragg.duration_ns", b.duration_ns)?;
                positive("bragg.sample_ns", b.sample_ns)?;
                positive("bragg.eps_mhz", b.eps_mhz)?;
            }
            _ => {}
        }
        Ok(())
    }

    fn check_seeds(&self) -> Result<()> {
        match &self.seeds.list {
            Some(l) if l.is_empty() => bail!("seeds.list: list is empty"),
            None if self.seeds.count == 0 => bail!("seeds.count: must be at least 1"),
            _ => Ok(()),
        }
    }

    fn check_device(&self) -> Result<()> {
        let d = &self.device;
        if d.nx == 0 || d.ny == 0 {
            bail!("device: nx and ny must be at least 1");
        }
        let nq = d.nx * d.ny;
        if d.omega_q_ghz.len() != 1 && d.omega_q_ghz.len() != nq {
            bail!("device.omega_q_ghz: need 1 or {nq} values, got {}", d.omega_q_ghz.len());
        }
        for (k, &w) in d.omega_q_ghz.iter().enumerate() {
            positive(&format!("device.omega_q_ghz[{k}]"), w)?;
        }
        positive("device.omega_c_ghz", d.omega_c_ghz)?;
        if d.kmax == 0 {
            bail!("device.kmax: must be at least 1");
        }
        if let Some(f) = d.floor_khz {
            non_negative("device.floor_khz", f)?;
        }
        Ok(())
    }

    /// Convert to internal units.
    pub fn physical(&self) -> Physical {
        let u = mhz(self.u_mhz);
        let d = &self.device;
        let nq = d.nx * d.ny;
        let omega_q = if d.omega_q_ghz.len() == 1 {
            vec![ghz(d.omega_q_ghz[0]); nq]
        } else {
            d.omega_q_ghz.iter().map(|&w| ghz(w)).collect()
        };
        Physical {
            u,
            delta_mu: mhz(self.compressibility.delta_mu_mhz),
            drive_amplitude: mhz(self.bragg.amplitude_mhz),
            omegas: self.bragg.omega_mhz.values().into_iter().map(mhz).collect(),
            eps: mhz(self.bragg.eps_mhz),
            times: PrepTimes {
                resonance: self.preparation.resonance_ns,
                ramp: self.preparation.ramp_ns,
                hold: self.preparation.hold_ns,
                shape: Shape::Smoothstep,
            },
            propagator: PropagatorConfig {
                tolerance: self.propagator.tolerance,
                max_dt: self.propagator.max_dt_ns,
                krylov_dim: self.propagator.krylov_dim,
                ..PropagatorConfig::default()
            },
            device: LatticeDeviceParams {
                omega_q,
                eta_q: mhz(d.eta_q_mhz),
                omega_c: ghz(d.omega_c_ghz),
                eta_c: mhz(d.eta_c_mhz),
                k_qc: d.k_qc,
                k_qq: d.k_qq,
                k_qq2: d.k_qq2,
                k_cc: d.k_cc,
            },
            floor: d.floor_khz.map(|f| mhz(f * 1e-3)),
        }
    }
}
