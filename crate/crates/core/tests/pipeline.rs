//! Cross-module pipelines.

use std::f64::consts::PI;

use dirtyboson::basis::build_basis;
use dirtyboson::devicemodel::{
    export_extended_bh, linked_cluster_expansion, BareDevice, BareSystem, Category, ExportOptions, LatticeDeviceParams, SwOptions,
};
use dirtyboson::probes::{compressibility_ensemble, run_compressibility_protocol, CompressibilitySetup, Protocol, TiltSpec};
use dirtyboson::terms::assemble;
use dirtyboson::tomography::{benchmark_basis, benchmark_circuit, default_scan_grid, reconstruct_correlator, run_phase_scan, PhaseModel, ScanOptions};
use dirtyboson::units::{ghz, mhz};
use dirtyboson::{solve_low_spectrum, FockBasis, Lattice};

fn chain_device() -> BareDevice {
    let p = LatticeDeviceParams {
        omega_q: vec![ghz(6.0), ghz(6.03), ghz(5.98)],
        eta_q: mhz(-190.0),
        omega_c: ghz(7.5),
        eta_c: mhz(-120.0),
        k_qc: ghz(0.1) / (ghz(6.0) * ghz(7.5)).sqrt(),
        k_qq: 0.004,
        k_qq2: 2e-4,
        k_cc: 0.0,
    };
    BareDevice::grid(3, 1, &p).unwrap()
}

#[test]
fn shot_noise_scales_as_inverse_sqrt() {
    let theta = PI / 8.0;
    let psi = benchmark_circuit(theta);
    let basis = benchmark_basis();
    let settings = default_scan_grid();
    let exact = reconstruct_correlator(
        &run_phase_scan(&psi, &basis, (0, 1), &settings, None, &ScanOptions::exact()).unwrap(),
        PhaseModel::default(),
    )
    .unwrap()
    .magnitude;
    let shots = [100usize, 400, 1600];
    let rms: Vec<f64> = shots
        .iter()
        .map(|&n| {
            let sq: f64 = (0..8u64)
                .map(|seed| {
                    let opts = ScanOptions { shots: n, postselect: false, seed };
                    let scan = run_phase_scan(&psi, &basis, (0, 1), &settings, None, &opts).unwrap();
                    (reconstruct_correlator(&scan, PhaseModel::default()).unwrap().magnitude - exact).powi(2)
                })
                .sum();
            (sq / 8.0).sqrt()
        })
        .collect();
    // Least-squares slope of log(rms) against log(shots).
    let xs: Vec<f64> = shots.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = rms.iter().map(|r| r.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() < 0.2, "slope {slope}, rms {rms:?}");
}

#[test]
fn device_chain_exports_bose_hubbard_families() {
    let device = chain_device();
    let exp = linked_cluster_expansion(&device, 3, &SwOptions::default()).unwrap();
    let report = export_extended_bh(&exp.total, &device, exp.convergence(), &ExportOptions::default()).unwrap();
    assert!(report.hermiticity_error < 1e-10);
    assert_eq!(report.of(Category::Mu).count(), 3);
    assert_eq!(report.of(Category::U).count(), 3);
    assert_eq!(report.of(Category::J).count(), 2);
    for t in report.of(Category::Mu) {
        assert!((t.value + ghz(6.0)).abs() < ghz(0.1), "μ = {}", t.value);
    }
    for t in report.of(Category::U) {
        assert!((t.value - mhz(-190.0)).abs() < mhz(20.0), "U = {}", t.value);
    }
    let populated = report.populated();
    assert!(populated.contains(&Category::J) && populated.contains(&Category::U));
}

#[test]
fn exported_terms_reproduce_dressed_energies() {
    let device = chain_device();
    let opts = SwOptions::default();
    let bare = BareSystem::new(&device).unwrap();
    let op = bare.effective_operator(&opts).unwrap();
    // The term list drops the constant, i.e. the dressed vacuum energy.
    let list = op.to_term_list(3);
    let vacuum = bare.exact_sw(0, &opts).unwrap().dressed_energies[0];
    for n in 1..=2 {
        let sector = bare.exact_sw(n, &opts).unwrap();
        let basis = FockBasis::new(3, n, n).unwrap();
        let h = assemble(&list, &basis).unwrap();
        let eig = solve_low_spectrum(&h, basis.dim()).unwrap();
        let mut want = sector.dressed_energies.clone();
        want.sort_by(f64::total_cmp);
        want.iter_mut().for_each(|e| *e -= vacuum);
        assert_eq!(want.len(), eig.eigenvalues.len());
        for (a, b) in eig.eigenvalues.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "sector {n}: {a} vs {b}");
        }
    }
}

#[test]
fn ensemble_matches_single_runs_in_order() {
    let lattice = Lattice::chain(3).unwrap();
    let mut setup = CompressibilitySetup::new(1.0, 0.1, 0.5, TiltSpec::new(0.025));
    setup.times.ramp = 40.0;
    let seeds = [11u64, 3, 7];
    let (stat, runs) = compressibility_ensemble(&lattice, Protocol::FieldCooled, &setup, &seeds).unwrap();
    for (run, &s) in runs.iter().zip(&seeds) {
        assert_eq!(run.seed, s);
        let single = run_compressibility_protocol(&lattice, Protocol::FieldCooled, &setup, s).unwrap();
        assert_eq!(single.kappa, run.kappa);
    }
    let mean = runs.iter().map(|r| r.kappa).sum::<f64>() / 3.0;
    assert!((stat.mean - mean).abs() < 1e-15);
    assert!(stat.sem >= 0.0);
    // Disorder changes the outcome from seed to seed.
    assert!(runs[0].kappa != runs[1].kappa);
    assert_eq!(build_basis(&lattice, 3, setup.nmax).unwrap().dim(), runs[0].state.len());
}
