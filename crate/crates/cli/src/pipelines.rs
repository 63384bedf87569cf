//! One function per experiment kind. Tasks run on the ambient rayon pool;
//! rows are emitted in task order, so scheduling never changes the output.

use std::f64::consts::PI;
use std::time::Instant;

use anyhow::{anyhow, Result};
use rayon::prelude::*;

use dirtyboson::basis::build_basis;
use dirtyboson::devicemodel::{export_extended_bh, linked_cluster_expansion, BareDevice, Category, ExportOptions, SwOptions};
use dirtyboson::disorder::sample_disorder;
use dirtyboson::dynamics::{adiabatic_prepare, ParametricHamiltonian, Params, PrepTarget};
use dirtyboson::meanfield::{dispersion, heff_bogoliubov, speed_of_sound, variational_point};
use dirtyboson::observables::{
    condensate_fraction, correlator_profile, doublon_fraction, energy_decomposition, entanglement_entropy, ipr, spdm,
};
use dirtyboson::probes::{
    dominant_pole, driven_response, mode_pattern, mode_weights, run_compressibility_protocol, CompressibilitySetup, DriveSpec,
    SusceptibilityCurve, TiltSpec,
};
use dirtyboson::terms::{assemble, bose_hubbard_terms};
use dirtyboson::tomography::{
    benchmark_basis, benchmark_circuit, default_scan_grid, predicted_c01, reconstruct_correlator, run_phase_scan, PhaseModel,
    ScanOptions,
};
use dirtyboson::units::{mhz, to_mhz};
use dirtyboson::{solve_low_spectrum, Complex64, FockBasis, Lattice, StateVector};

use crate::config::{ExperimentConfig, ExperimentKind, Physical, PrepMethod, ProtocolName};
use crate::manifest::TaskRecord;
use crate::output::{num, PlotData, Table};

/// Everything a pipeline produces before it is written.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub plots: Vec<PlotData>,
    pub tasks: Vec<TaskRecord>,
}

pub fn run_pipeline(kind: ExperimentKind, config: &ExperimentConfig) -> Result<RunOutput> {
    config.check(kind)?;
    let phys = config.physical();
    match kind {
        ExperimentKind::PhaseGrid => phase_grid(config, &phys),
        ExperimentKind::Compressibility => compressibility(config, &phys),
        ExperimentKind::Bragg => bragg(config, &phys),
        ExperimentKind::TomographyBench => tomography_bench(config),
        ExperimentKind::Meanfield => meanfield(config),
        ExperimentKind::SwDerive => sw_derive(config, &phys),
    }
}

/// Task identity; timing and errors are filled in by [`run_tasks`].
fn record(key: String, j: Option<f64>, w: Option<f64>, seed: Option<u64>) -> TaskRecord {
    TaskRecord {
        key,
        j_over_u: j,
        w_over_u: w,
        seed,
        seconds: 0.0,
        error: None,
    }
}

/// Run `f` over `tasks` in parallel; failures are recorded, not raised.
fn run_tasks<T, R, F>(tasks: &[(TaskRecord, T)], f: F) -> Vec<(TaskRecord, Option<R>)>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
{
    tasks
        .par_iter()
        .map(|(rec, t)| {
            let start = Instant::now();
            let out = f(t);
            let mut rec = rec.clone();
            rec.seconds = start.elapsed().as_secs_f64();
            match out {
                Ok(r) => (rec, Some(r)),
                Err(e) => {
                    rec.error = Some(format!("{e:#}"));
                    (rec, None)
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct GridPoint {
    ji: usize,
    wi: usize,
    j: f64,
    w: f64,
    seed: u64,
}

fn grid_points(config: &ExperimentConfig) -> Vec<GridPoint> {
    let seeds = config.seeds.seeds();
    let mut out = Vec::new();
    for (ji, &j) in config.j_over_u.iter().enumerate() {
        for (wi, &w) in config.w_over_u.iter().enumerate() {
            for &seed in &seeds {
                out.push(GridPoint { ji, wi, j, w, seed });
            }
        }
    }
    out
}

fn point_key(p: &GridPoint) -> String {
    format!("J={} W={} seed={}", p.j, p.w, p.seed)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Target Hamiltonian parameters of one grid point (rad/ns).
fn point_params(p: &GridPoint, phys: &Physical, nsites: usize) -> Result<(f64, Vec<f64>)> {
    let mu = sample_disorder(p.w * phys.u, 0.0, nsites, p.seed)?.mu;
    Ok((p.j * phys.u, mu))
}

fn prepare(
    method: PrepMethod,
    ham: &ParametricHamiltonian,
    lattice: &Lattice,
    phys: &Physical,
    j: f64,
    mu: &[f64],
) -> Result<StateVector> {
    Ok(match method {
        PrepMethod::Adiabatic => {
            adiabatic_prepare(ham, &PrepTarget::new(phys.u, j, mu.to_vec()), &phys.times, &phys.propagator)?.state
        }
        PrepMethod::Ground => {
            let h = assemble(&bose_hubbard_terms(lattice, j, phys.u, mu)?, ham.basis())?;
            solve_low_spectrum(&h, 1)?.ground_state().clone()
        }
    })
}

struct PhasePoint {
    doublon: f64,
    condensate: f64,
    entropy: f64,
    ipr: f64,
    energy: [f64; 3],
    profile: Vec<f64>,
}

fn sector(config: &ExperimentConfig) -> Result<(Lattice, FockBasis)> {
    let lattice = Lattice::rectangular(config.lattice.nx, config.lattice.ny)?;
    let basis = build_basis(&lattice, config.ntotal(), config.nmax)?;
    Ok((lattice, basis))
}

fn phase_grid(config: &ExperimentConfig, phys: &Physical) -> Result<RunOutput> {
    let (lattice, basis) = sector(config)?;
    let ham = ParametricHamiltonian::new(&lattice, basis.clone())?;
    let n = lattice.nsites();
    let cut = lattice.default_cut();
    let tasks: Vec<_> = grid_points(config)
        .into_iter()
        .map(|p| (record(point_key(&p), Some(p.j), Some(p.w), Some(p.seed)), p))
        .collect();
    let results = run_tasks(&tasks, |p| {
        let (j, mu) = point_params(p, phys, n)?;
        let psi = prepare(config.preparation.method, &ham, &lattice, phys, j, &mu)?;
        let c = spdm(&psi, &basis);
        let e = energy_decomposition(&psi, &basis, &bose_hubbard_terms(&lattice, j, phys.u, &mu)?)?;
        Ok(PhasePoint {
            doublon: doublon_fraction(&psi, &basis),
            condensate: condensate_fraction(&c, basis.ntotal())?.0,
            entropy: entanglement_entropy(&psi, &basis, &cut)?,
            ipr: ipr(&psi),
            energy: [to_mhz(e.kinetic), to_mhz(e.interaction), to_mhz(e.onsite)],
            profile: correlator_profile(&c, &lattice),
        })
    });

    let mut table = Table::new(
        "phase_grid.csv",
        &[
            ("J", "U"),
            ("W", "U"),
            ("seed", "-"),
            ("doublon_fraction", "1"),
            ("condensate_fraction", "1"),
            ("entropy", "nat"),
            ("ipr", "1"),
            ("energy_K", "MHz"),
            ("energy_Vint", "MHz"),
            ("energy_Vdelta", "MHz"),
        ],
    );
    for ((_, p), (_, r)) in tasks.iter().zip(&results) {
        if let Some(r) = r {
            let mut row = vec![num(p.j), num(p.w), p.seed.to_string()];
            row.extend([r.doublon, r.condensate, r.entropy, r.ipr].map(num));
            row.extend(r.energy.map(num));
            table.push(row);
        }
    }

    let ok: Vec<(&GridPoint, &PhasePoint)> =
        tasks.iter().zip(&results).filter_map(|((_, p), (_, r))| r.as_ref().map(|r| (p, r))).collect();
    let mut heat = PlotData::new(
        "phase_heatmap.dat",
        "seed-averaged observables; J and W in units of U",
        &["J", "W", "doublon_fraction", "condensate_fraction", "entropy"],
    );
    let mut decay = PlotData::new(
        "correlator_decay.dat",
        "seed-averaged mean |<a_i^dag a_j>| per Manhattan distance d; J and W in units of U",
        &["d", "J", "W", "abs_C"],
    );
    let dmax = lattice.max_manhattan();
    let mut decay_rows = Vec::new();
    for (ji, &j) in config.j_over_u.iter().enumerate() {
        for (wi, &w) in config.w_over_u.iter().enumerate() {
            let at: Vec<&PhasePoint> = ok.iter().filter(|(p, _)| p.ji == ji && p.wi == wi).map(|x| x.1).collect();
            heat.rows.push(vec![
                j,
                w,
                mean(at.iter().map(|r| r.doublon)),
                mean(at.iter().map(|r| r.condensate)),
                mean(at.iter().map(|r| r.entropy)),
            ]);
            for d in 0..=dmax {
                decay_rows.push((d, ji, wi, vec![d as f64, j, w, mean(at.iter().map(|r| r.profile[d]))]));
            }
        }
    }
    decay_rows.sort_by_key(|r| (r.0, r.1, r.2));
    decay.rows = decay_rows.into_iter().map(|r| r.3).collect();

    Ok(RunOutput {
        tables: vec![table],
        plots: vec![heat, decay],
        tasks: results.into_iter().map(|r| r.0).collect(),
    })
}

fn compressibility(config: &ExperimentConfig, phys: &Physical) -> Result<RunOutput> {
    let lattice = Lattice::rectangular(config.lattice.nx, config.lattice.ny)?;
    let c = &config.compressibility;
    let mut tasks = Vec::new();
    for p in grid_points(config) {
        for &proto in &c.protocols {
            let key = format!("{} protocol={}", point_key(&p), proto.name());
            tasks.push((record(key, Some(p.j), Some(p.w), Some(p.seed)), (p, proto)));
        }
    }
    let results = run_tasks(&tasks, |(p, proto)| {
        let setup = CompressibilitySetup {
            times: phys.times.clone(),
            t_field: c.t_field_ns,
            nmax: config.nmax,
            propagator: phys.propagator.clone(),
            ..CompressibilitySetup::new(
                phys.u,
                p.j * phys.u,
                p.w * phys.u,
                TiltSpec {
                    amplitude: phys.delta_mu,
                    subtract_natural: c.subtract_natural,
                },
            )
        };
        Ok(run_compressibility_protocol(&lattice, proto.protocol(), &setup, p.seed)?.kappa)
    });

    let mut table = Table::new(
        "compressibility.csv",
        &[("J", "U"), ("W", "U"), ("protocol", "-"), ("seed", "-"), ("kappa", "1")],
    );
    for ((_, (p, proto)), (_, k)) in tasks.iter().zip(&results) {
        if let Some(k) = k {
            table.push(vec![num(p.j), num(p.w), proto.name().into(), p.seed.to_string(), num(*k)]);
        }
    }
    let mean_of = |ji: usize, wi: usize, proto: ProtocolName| {
        mean(
            tasks
                .iter()
                .zip(&results)
                .filter(|((_, (p, pr)), _)| p.ji == ji && p.wi == wi && *pr == proto)
                .filter_map(|(_, (_, k))| *k),
        )
    };
    let mut delta = Table::new(
        "delta_kappa.csv",
        &[("J", "U"), ("W", "U"), ("kappa_fc", "1"), ("kappa_zfc", "1"), ("delta_kappa", "1")],
    );
    let mut map = PlotData::new(
        "compressibility_map.dat",
        "seed-averaged compressibility; J and W in units of U; delta = FC - ZFC",
        &["J", "W", "kappa_fc", "kappa_zfc", "delta_kappa"],
    );
    for (ji, &j) in config.j_over_u.iter().enumerate() {
        for (wi, &w) in config.w_over_u.iter().enumerate() {
            let fc = mean_of(ji, wi, ProtocolName::Fc);
            let zfc = mean_of(ji, wi, ProtocolName::Zfc);
            delta.push(vec![num(j), num(w), num(fc), num(zfc), num(fc - zfc)]);
            map.rows.push(vec![j, w, fc, zfc, fc - zfc]);
        }
    }
    Ok(RunOutput {
        tables: vec![table, delta],
        plots: vec![map],
        tasks: results.into_iter().map(|r| r.0).collect(),
    })
}

struct BraggState {
    base: Params,
    state: StateVector,
    /// Dominant exact pole per mode.
    poles: Vec<Option<f64>>,
}

fn bragg(config: &ExperimentConfig, phys: &Physical) -> Result<RunOutput> {
    let (lattice, basis) = sector(config)?;
    let ham = ParametricHamiltonian::new(&lattice, basis.clone())?;
    let b = &config.bragg;
    let patterns = b
        .modes
        .iter()
        .map(|&(p, q)| mode_pattern(&lattice, p, q))
        .collect::<dirtyboson::Result<Vec<_>>>()?;
    let n = lattice.nsites();

    // Stage 1: states and exact poles.
    let points = grid_points(config);
    let state_tasks: Vec<_> = points
        .iter()
        .map(|p| (record(format!("state {}", point_key(p)), Some(p.j), Some(p.w), Some(p.seed)), *p))
        .collect();
    let states = run_tasks(&state_tasks, |p| {
        let (j, mu) = point_params(p, phys, n)?;
        let state = prepare(config.preparation.method, &ham, &lattice, phys, j, &mu)?;
        let h = assemble(&bose_hubbard_terms(&lattice, j, phys.u, &mu)?, &basis)?;
        let eig = solve_low_spectrum(&h, basis.dim())?;
        let poles = patterns
            .iter()
            .map(|g| Ok(dominant_pole(&mode_weights(&eig, &basis, g)?).map(|x| x.0)))
            .collect::<dirtyboson::Result<Vec<_>>>()?;
        Ok(BraggState {
            base: Params::new(j, mu),
            state,
            poles,
        })
    });

    // Stage 2: one driven run per (point, mode, frequency).
    let mut drive_tasks = Vec::new();
    for (pi, p) in points.iter().enumerate() {
        if states[pi].1.is_none() {
            continue;
        }
        for (mi, &(mp, mq)) in b.modes.iter().enumerate() {
            for (oi, &om) in phys.omegas.iter().enumerate() {
                let key = format!("drive {} mode=({mp},{mq}) omega={}MHz", point_key(p), num(to_mhz(om)));
                drive_tasks.push((record(key, Some(p.j), Some(p.w), Some(p.seed)), (pi, mi, oi)));
            }
        }
    }
    let driven = run_tasks(&drive_tasks, |&(pi, mi, oi)| {
        let s = states[pi].1.as_ref().ok_or_else(|| anyhow!("state preparation failed"))?;
        let (mp, mq) = b.modes[mi];
        let drive = DriveSpec {
            duration: b.duration_ns,
            ..DriveSpec::new(phys.drive_amplitude, phys.omegas[oi], mp, mq)
        };
        let r = driven_response(&ham, &lattice, phys.u, &s.base, &s.state, &drive, b.sample_ns, &phys.propagator)?;
        // Per unit drive amplitude in MHz.
        Ok(r.chi * mhz(1.0))
    });

    let mut table = Table::new(
        "bragg.csv",
        &[
            ("J", "U"),
            ("W", "U"),
            ("seed", "-"),
            ("p", "-"),
            ("q", "-"),
            ("omega", "MHz"),
            ("re_chi", "1/MHz"),
            ("im_chi", "1/MHz"),
        ],
    );
    // chi[point][mode][omega]
    let nom = phys.omegas.len();
    let mut chi = vec![vec![vec![None; nom]; b.modes.len()]; points.len()];
    for ((_, (pi, mi, oi)), (_, c)) in drive_tasks.iter().zip(&driven) {
        if let Some(c) = c {
            let p = &points[*pi];
            let (mp, mq) = b.modes[*mi];
            table.push(vec![
                num(p.j),
                num(p.w),
                p.seed.to_string(),
                mp.to_string(),
                mq.to_string(),
                num(to_mhz(phys.omegas[*oi])),
                num(c.re),
                num(c.im),
            ]);
            chi[*pi][*mi][*oi] = Some(*c);
        }
    }

    let resonance_of = |values: &[Option<Complex64>]| -> Option<SusceptibilityCurve> {
        let v: Option<Vec<Complex64>> = values.iter().copied().collect();
        SusceptibilityCurve::new(phys.omegas.clone(), v?).ok()
    };
    let mut res = Table::new(
        "bragg_resonances.csv",
        &[("J", "U"), ("W", "U"), ("seed", "-"), ("p", "-"), ("q", "-"), ("resonance", "MHz"), ("exact_pole", "MHz")],
    );
    for (pi, p) in points.iter().enumerate() {
        let Some(s) = &states[pi].1 else { continue };
        for (mi, &(mp, mq)) in b.modes.iter().enumerate() {
            let r = resonance_of(&chi[pi][mi]).and_then(|c| c.resonance).map_or(f64::NAN, |r| to_mhz(r.omega));
            let pole = s.poles[mi].map_or(f64::NAN, to_mhz);
            res.push(vec![num(p.j), num(p.w), p.seed.to_string(), mp.to_string(), mq.to_string(), num(r), num(pole)]);
        }
    }

    // One reactive map per (J, W): seed-averaged χ over (k, ω).
    let k_of = |m: usize, len: usize| if len > 1 { PI * m as f64 / (len - 1) as f64 } else { 0.0 };
    let mut plots = Vec::new();
    for (ji, &j) in config.j_over_u.iter().enumerate() {
        for (wi, &w) in config.w_over_u.iter().enumerate() {
            let mut plot = PlotData::new(
                &format!("bragg_j{ji}_w{wi}.dat"),
                &format!(
                    "seed-averaged mode susceptibility at J = {j} U, W = {w} U; k in rad/site, omega in MHz, chi in 1/MHz; resonance = 1 on the grid point left of the Re chi zero crossing"
                ),
                &["kx", "ky", "omega", "re_chi", "im_chi", "resonance"],
            );
            for (mi, &(mp, mq)) in b.modes.iter().enumerate() {
                let avg: Vec<Option<Complex64>> = (0..nom)
                    .map(|oi| {
                        let v: Vec<Complex64> = points
                            .iter()
                            .enumerate()
                            .filter(|(_, p)| p.ji == ji && p.wi == wi)
                            .filter_map(|(pi, _)| chi[pi][mi][oi])
                            .collect();
                        (!v.is_empty()).then(|| v.iter().sum::<Complex64>() / v.len() as f64)
                    })
                    .collect();
                let bracket = resonance_of(&avg).and_then(|c| c.resonance).map(|r| r.bracket.0);
                for (oi, c) in avg.iter().enumerate() {
                    let c = c.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
                    let flag = if bracket == Some(phys.omegas[oi]) { 1.0 } else { 0.0 };
                    plot.rows.push(vec![
                        k_of(mp, config.lattice.nx),
                        k_of(mq, config.lattice.ny),
                        to_mhz(phys.omegas[oi]),
                        c.re,
                        c.im,
                        flag,
                    ]);
                }
            }
            plots.push(plot);
        }
    }

    let mut records: Vec<TaskRecord> = states.into_iter().map(|r| r.0).collect();
    records.extend(driven.into_iter().map(|r| r.0));
    Ok(RunOutput {
        tables: vec![table, res],
        plots,
        tasks: records,
    })
}

fn tomography_bench(config: &ExperimentConfig) -> Result<RunOutput> {
    let t = &config.tomography;
    let seeds = config.seeds.seeds();
    let settings = default_scan_grid();
    let basis = benchmark_basis();
    let mut tasks = Vec::new();
    for &theta in &t.thetas {
        for &seed in &seeds {
            tasks.push((record(format!("theta={theta} seed={seed}"), None, None, Some(seed)), (theta, seed)));
        }
    }
    let results = run_tasks(&tasks, |&(theta, seed)| {
        let psi = benchmark_circuit(theta);
        let opts = ScanOptions {
            shots: t.shots,
            postselect: t.postselect,
            seed,
        };
        let scan = run_phase_scan(&psi, &basis, (0, 1), &settings, None, &opts)?;
        Ok(reconstruct_correlator(&scan, PhaseModel::default())?)
    });
    let mut table = Table::new(
        "tomography_bench.csv",
        &[
            ("theta", "rad"),
            ("seed", "-"),
            ("shots", "-"),
            ("magnitude", "1"),
            ("predicted", "1"),
            ("re_c", "1"),
            ("im_c", "1"),
        ],
    );
    for ((_, (theta, seed)), (_, r)) in tasks.iter().zip(&results) {
        if let Some(r) = r {
            let c = r.correlator.unwrap_or_default();
            table.push(vec![
                num(*theta),
                seed.to_string(),
                t.shots.to_string(),
                num(r.magnitude),
                num(predicted_c01(*theta).norm()),
                num(c.re),
                num(c.im),
            ]);
        }
    }
    let mut plot = PlotData::new(
        "fsim_curve.dat",
        "benchmark correlator |C01| against the swap angle theta (rad); spread is the standard deviation over seeds",
        &["theta", "magnitude", "spread", "predicted"],
    );
    for &theta in &t.thetas {
        let m: Vec<f64> = tasks
            .iter()
            .zip(&results)
            .filter(|((_, (th, _)), _)| *th == theta)
            .filter_map(|(_, (_, r))| r.as_ref().map(|r| r.magnitude))
            .collect();
        let mu = mean(m.iter().copied());
        let spread = mean(m.iter().map(|v| (v - mu).powi(2))).sqrt();
        plot.rows.push(vec![theta, mu, spread, predicted_c01(theta).norm()]);
    }
    Ok(RunOutput {
        tables: vec![table],
        plots: vec![plot],
        tasks: results.into_iter().map(|r| r.0).collect(),
    })
}

/// Γ → X → M → Γ with `n` points per leg plus the closing Γ.
fn bz_path(n: usize) -> Vec<(f64, f64)> {
    let corners = [(0.0, 0.0), (PI, 0.0), (PI, PI), (0.0, 0.0)];
    let mut out = Vec::new();
    for leg in corners.windows(2) {
        for k in 0..n {
            let t = k as f64 / n as f64;
            out.push((leg[0].0 + t * (leg[1].0 - leg[0].0), leg[0].1 + t * (leg[1].1 - leg[0].1)));
        }
    }
    out.push((0.0, 0.0));
    out
}

struct MeanfieldResult {
    stat: Vec<f64>,
    bands: Vec<[f64; 6]>,
}

fn meanfield(config: &ExperimentConfig) -> Result<RunOutput> {
    let path = bz_path(config.meanfield.points_per_leg);
    let tasks: Vec<_> = config
        .j_over_u
        .iter()
        .enumerate()
        .map(|(i, &j)| (record(format!("J={j}"), Some(j), None, None), (i, j)))
        .collect();
    // U = 1, so every energy below is in units of U.
    let results = run_tasks(&tasks, |&(_, j)| {
        let p = variational_point(j, 1.0)?;
        let cs = if p.gamma > 1.0 { speed_of_sound(&p) } else { f64::NAN };
        let stat = vec![j, p.gamma, p.phi, p.psi, p.mu, p.omega0, cs];
        let mut bands = Vec::new();
        if p.gamma > 1.0 {
            for &(kx, ky) in &path {
                let (wm, wp) = dispersion(kx, ky, &p)?;
                let s = heff_bogoliubov(kx, ky, &p);
                bands.push([kx, ky, wm, wp, s.omega_minus, s.omega_plus]);
            }
        }
        Ok(MeanfieldResult { stat, bands })
    });
    let mut stat = Table::new(
        "meanfield.csv",
        &[
            ("J", "U"),
            ("gamma", "1"),
            ("phi", "rad"),
            ("psi", "1"),
            ("mu", "U"),
            ("omega0", "U"),
            ("sound_speed", "U·site"),
        ],
    );
    let mut disp = Table::new(
        "dispersion.csv",
        &[
            ("J", "U"),
            ("step", "-"),
            ("kx", "rad/site"),
            ("ky", "rad/site"),
            ("omega_minus", "U"),
            ("omega_plus", "U"),
            ("heff_minus", "U"),
            ("heff_plus", "U"),
        ],
    );
    let mut plots = Vec::new();
    for ((_, (i, j)), (_, r)) in tasks.iter().zip(&results) {
        let Some(r) = r else { continue };
        stat.push(r.stat.iter().map(|v| num(*v)).collect());
        if r.bands.is_empty() {
            continue;
        }
        let mut plot = PlotData::new(
            &format!("dispersion_j{i}.dat"),
            &format!("Bogoliubov bands along Gamma-X-M-Gamma at J = {j} U; k in rad/site, omega in units of U"),
            &["step", "kx", "ky", "omega_minus", "omega_plus"],
        );
        for (s, b) in r.bands.iter().enumerate() {
            let mut row = vec![num(*j), s.to_string()];
            row.extend(b.iter().map(|v| num(*v)));
            disp.push(row);
            plot.rows.push(vec![s as f64, b[0], b[1], b[2], b[3]]);
        }
        plots.push(plot);
    }
    Ok(RunOutput {
        tables: vec![stat, disp],
        plots,
        tasks: results.into_iter().map(|r| r.0).collect(),
    })
}

fn sites(list: &[usize]) -> String {
    list.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
}

fn sw_derive(config: &ExperimentConfig, phys: &Physical) -> Result<RunOutput> {
    let d = &config.device;
    let tasks = vec![(record(format!("device {}x{} kmax={}", d.nx, d.ny, d.kmax), None, None, None), ())];
    let mut results = run_tasks(&tasks, |_| {
        let device = BareDevice::grid(d.nx, d.ny, &phys.device)?;
        let exp = linked_cluster_expansion(&device, d.kmax, &SwOptions::default())?;
        let opts = ExportOptions {
            floor: phys.floor,
            max_distance: d.max_distance,
        };
        Ok(export_extended_bh(&exp.total, &device, exp.convergence(), &opts)?)
    });
    let (rec, report) = results.pop().expect("one task");
    let mut out = RunOutput {
        tasks: vec![rec],
        ..Default::default()
    };
    let Some(report) = report else { return Ok(out) };
    let mut terms = Table::new(
        "effective_terms.csv",
        &[("category", "-"), ("geometry", "-"), ("create", "qudit"), ("annihilate", "qudit"), ("value", "MHz")],
    );
    for t in &report.terms {
        terms.push(vec![
            t.category.name().into(),
            t.geometry.name().into(),
            sites(&t.monomial.create),
            sites(&t.monomial.annihilate),
            num(to_mhz(t.value)),
        ]);
    }
    let mut stats = Table::new(
        "category_stats.csv",
        &[("category", "-"), ("count", "-"), ("mean", "MHz"), ("min", "MHz"), ("max", "MHz")],
    );
    for c in Category::ALL {
        if let Some(s) = report.stats.get(&c) {
            stats.push(vec![
                c.name().into(),
                s.count.to_string(),
                num(to_mhz(s.mean)),
                num(to_mhz(s.min)),
                num(to_mhz(s.max)),
            ]);
        }
    }
    let mut conv = Table::new("convergence.csv", &[("k", "nodes"), ("max_change", "kHz")]);
    let mut plot = PlotData::new(
        "convergence.dat",
        "largest coefficient change when clusters of k nodes are added (kHz)",
        &["k", "max_change"],
    );
    for &(k, delta) in &report.convergence {
        conv.push(vec![k.to_string(), num(to_mhz(delta) * 1e3)]);
        plot.rows.push(vec![k as f64, to_mhz(delta) * 1e3]);
    }
    out.tables = vec![terms, stats, conv];
    out.plots = vec![plot];
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failed_tasks_are_recorded_in_order() {
        let tasks: Vec<_> = (0..6).map(|i| (record(format!("t{i}"), None, None, Some(i)), i)).collect();
        let out = run_tasks(&tasks, |&i| if i % 3 == 1 { Err(anyhow!("bad {i}")) } else { Ok(i * 10) });
        let keys: Vec<_> = out.iter().map(|(r, _)| r.key.as_str()).collect();
        assert_eq!(keys, ["t0", "t1", "t2", "t3", "t4", "t5"]);
        assert_eq!(out[4].0.error.as_deref(), Some("bad 4"));
        assert_eq!(out[4].1, None);
        assert_eq!(out[5].1, Some(50));
    }
}
