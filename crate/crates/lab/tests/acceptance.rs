// Acceptance gate for the whole pipeline. Each test pins one published
// anchor of the experiment at its stated tolerance, end to end: build the
// state, sample the eight-port records, reconstruct, and compare readouts.
// Heavy fixtures are shared through OnceLock; the whole file stays within
// a laptop-scale budget on one core.
//
// Fixture randomness is a fixed stream so every number below is
// reproducible bit for bit.

use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use timebin_core::analysis::{decompose_at_optimum, fringe_scan, qubit_report, QubitReport};
use timebin_core::eightport::{
    make_tomography_data, sample_q_function, synthesize_variance_trace, QuadratureSample,
};
use timebin_core::generation::{
    build_physical_state, mode_overlap, mode_overlap_quadrature, overall_efficiency,
    ImperfectionBudget, TimeBinQubitSpec,
};
use timebin_core::linalg::{hermitian_eigenvalues, trace_distance};
use timebin_core::seed::stage_seed;
use timebin_core::tomography::{
    mle_reconstruct, mle_reconstruct_coherent, MleConfig, ReconstructionResult,
};
use timebin_core::wigner::wigner_function;
use timebin_core::DensityMatrix;

use timebin_lab::config::{ExperimentConfig, Overrides, Resolved};

const SEED: u64 = 0x61636365;

fn preset() -> &'static Resolved {
    static CELL: OnceLock<Resolved> = OnceLock::new();
    CELL.get_or_init(|| {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper.toml");
        let cfg = ExperimentConfig::load(&path).expect("shipped preset must parse");
        cfg.resolve(&Overrides::default()).expect("shipped preset must validate")
    })
}

fn balanced_spec() -> TimeBinQubitSpec {
    let spec = preset().targets[3];
    assert!(
        (spec.c0 - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12
            && (spec.phi + core::f64::consts::FRAC_PI_2).abs() < 1e-12,
        "preset target 3 should be the balanced qubit at phase -pi/2"
    );
    spec
}

struct PaperFixture {
    spec: TimeBinQubitSpec,
    rho_true: DensityMatrix,
    records: Vec<QuadratureSample>,
    recon: ReconstructionResult,
    report: QubitReport,
}

/// Paper-budget balanced qubit, 1e5 records (2e5 tomography data), full
/// two-mode reconstruction with the shipped MLE settings.
fn paper() -> &'static PaperFixture {
    static CELL: OnceLock<PaperFixture> = OnceLock::new();
    CELL.get_or_init(|| {
        let r = preset();
        let spec = balanced_spec();
        let rho_true = build_physical_state(&spec, &r.budget, r.mle.dim_per_mode).unwrap();
        let records =
            sample_q_function(&rho_true, 100_000, stage_seed(SEED, "paper-records")).unwrap();
        let data = make_tomography_data(&records, stage_seed(SEED, "paper-tags")).unwrap();
        let recon = mle_reconstruct(&data, &r.mle).unwrap();
        let report = qubit_report(&recon.rho, &spec).unwrap();
        PaperFixture { spec, rho_true, records, recon, report }
    })
}

struct LosslessFixture {
    spec: TimeBinQubitSpec,
    records: Vec<QuadratureSample>,
    recon: ReconstructionResult,
    fidelity: f64,
    mle_seconds: f64,
}

/// Ideal balanced qubit, 1e5 records, reconstructed to convergence.
fn lossless() -> &'static LosslessFixture {
    static CELL: OnceLock<LosslessFixture> = OnceLock::new();
    CELL.get_or_init(|| {
        let spec = balanced_spec();
        let rho = DensityMatrix::pure(&spec.ket(3).unwrap()).unwrap();
        let records =
            sample_q_function(&rho, 100_000, stage_seed(SEED, "lossless-records")).unwrap();
        let data = make_tomography_data(&records, stage_seed(SEED, "lossless-tags")).unwrap();
        let cfg = MleConfig {
            dim_per_mode: 3,
            max_iterations: 12_000,
            convergence_tol: 1e-7,
            ..MleConfig::default()
        };
        let t0 = Instant::now();
        let recon = mle_reconstruct(&data, &cfg).unwrap();
        let mle_seconds = t0.elapsed().as_secs_f64();
        let fidelity = recon.rho.fidelity(&spec.ket(3).unwrap()).unwrap();
        LosslessFixture { spec, records, recon, fidelity, mle_seconds }
    })
}

/// Paper-budget balanced qubit recombined at its own optimum, both output
/// ports reconstructed from 2e5 records.
fn ports() -> &'static (ReconstructionResult, ReconstructionResult) {
    static CELL: OnceLock<(ReconstructionResult, ReconstructionResult)> = OnceLock::new();
    CELL.get_or_init(|| {
        let fx = paper();
        let records =
            sample_q_function(&fx.rho_true, 200_000, stage_seed(SEED, "ports-records")).unwrap();
        let cfg = MleConfig {
            dim_per_mode: 3,
            max_iterations: 4000,
            convergence_tol: 1e-6,
            ..MleConfig::default()
        };
        decompose_at_optimum(&records, &fx.spec, &cfg).unwrap()
    })
}

fn parity_from_distribution(rho: &DensityMatrix) -> f64 {
    rho.photon_number_distribution()
        .iter()
        .enumerate()
        .map(|(n, p)| if n % 2 == 0 { *p } else { -*p })
        .sum::<f64>()
        / core::f64::consts::PI
}

fn assert_state_invariants(rho: &DensityMatrix, label: &str) {
    assert!(rho.matrix().is_hermitian(1e-10), "{label}: not hermitian");
    assert!((rho.trace() - 1.0).abs() < 1e-9, "{label}: trace {} != 1", rho.trace());
    let min_eig =
        hermitian_eigenvalues(rho.matrix()).unwrap().into_iter().fold(f64::MAX, f64::min);
    assert!(min_eig > -1e-9, "{label}: negative eigenvalue {min_eig}");
}

#[test]
fn efficiency_budget_matches_the_published_value() {
    // Published factors, detector purity as printed in the budget table.
    let published = ImperfectionBudget {
        eta_nopo: 0.98,
        eta_vis: 0.98,
        eta_pr: 0.96,
        eta_det: 0.95,
        eta_apd: Some(0.98),
        zeta_tot: None,
        zeta_dark: None,
        p_multi: 0.0,
        eta_extra: 1.0,
        phi_jitter_rad: 0.0,
    };
    let eta = overall_efficiency(&published).unwrap();
    println!("overall efficiency {eta:.7} (loss {:.2}%)", (1.0 - eta) * 100.0);
    assert!((eta - 0.8412).abs() <= 1e-6, "overall efficiency {eta} != 0.8412");
}

#[test]
fn bin_mode_overlap_is_negligible() {
    let mzi = preset().mzi;
    let closed = mode_overlap(&mzi).unwrap();
    let quad = mode_overlap_quadrature(&mzi).unwrap();
    println!("mode overlap {closed:.3e} (quadrature {quad:.3e})");
    assert!((closed - quad).abs() <= 1e-8, "closed form {closed} vs quadrature {quad}");
    assert!((closed - 8.4e-4).abs() <= 2e-4, "overlap {closed} not within 0.02% of 0.084%");
}

#[test]
fn lossless_round_trip_recovers_the_target() {
    let fx = lossless();
    println!(
        "lossless round trip: fidelity {:.5} in {:.0} s, {} iterations, converged {}",
        fx.fidelity, fx.mle_seconds, fx.recon.iterations, fx.recon.converged
    );
    assert!(fx.mle_seconds <= 180.0, "reconstruction took {:.0} s", fx.mle_seconds);
    assert!(
        fx.fidelity >= 0.995,
        "round-trip fidelity {:.5} below 0.995 at 1e5 records",
        fx.fidelity
    );
}

#[test]
fn reconstructed_populations_match_the_paper() {
    let fx = paper();
    let (vac, qubit, multi) = fx.report.populations;
    println!("populations: vacuum {vac:.4} qubit {qubit:.4} multiphoton {multi:.4}");
    assert!(fx.recon.converged, "paper reconstruction did not converge");
    assert!((vac - 0.18).abs() <= 0.03, "vacuum {vac:.4} outside 0.18 +- 0.03");
    assert!((qubit - 0.77).abs() <= 0.03, "qubit {qubit:.4} outside 0.77 +- 0.03");
    assert!((multi - 0.05).abs() <= 0.02, "multiphoton {multi:.4} outside 0.05 +- 0.02");
}

#[test]
fn eight_targets_reconstruct_faithfully() {
    let r = preset();
    assert_eq!(r.targets.len(), 8, "preset should carry the eight demonstration qubits");
    let cfg = MleConfig {
        dim_per_mode: 3,
        max_iterations: 2500,
        convergence_tol: 1e-6,
        ..MleConfig::default()
    };
    let mut fids = Vec::new();
    for (i, spec) in r.targets.iter().enumerate() {
        let rho = build_physical_state(spec, &r.budget, 3).unwrap();
        let records =
            sample_q_function(&rho, 20_000, stage_seed(SEED, "qubits-records") ^ i as u64)
                .unwrap();
        let data =
            make_tomography_data(&records, stage_seed(SEED, "qubits-tags") ^ i as u64).unwrap();
        let res = mle_reconstruct(&data, &cfg).unwrap();
        let rep = qubit_report(&res.rho, spec).unwrap();
        fids.push(rep.fidelity);
    }
    let mean = fids.iter().sum::<f64>() / fids.len() as f64;
    println!("submatrix fidelities mean {mean:.4}, per target {fids:.4?}");
    assert!(mean >= 0.97, "mean submatrix fidelity {mean:.4} below 0.97");
}

#[test]
fn fringe_visibility_sits_at_the_paper_contrast() {
    let fx = paper();
    let n = 13;
    let step = 2.0 * core::f64::consts::PI / (n as f64 - 1.0);
    let phis: Vec<f64> =
        (0..n).map(|i| -core::f64::consts::PI + i as f64 * step).collect();
    let cfg = MleConfig {
        dim_per_mode: 3,
        max_iterations: 2000,
        convergence_tol: 1e-6,
        ..MleConfig::default()
    };
    let fr = fringe_scan(&fx.records, &phis, &cfg).unwrap();
    let arg_hi =
        fr.phis[fr.p1_d1.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0];
    let arg_lo =
        fr.phis[fr.p1_d1.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0];
    println!(
        "fringe visibility {:.4} (fit {:.4}), D1 max at {arg_hi:.4}, min at {arg_lo:.4}",
        fr.visibility, fr.visibility_fit
    );
    assert!(
        (fr.visibility - 0.96).abs() <= 0.03,
        "visibility {:.4} outside 0.96 +- 0.03",
        fr.visibility
    );
    assert!(
        (arg_hi - core::f64::consts::FRAC_PI_2).abs() <= 0.1,
        "D1 maximum at {arg_hi:.4}, expected +pi/2"
    );
    assert!(
        (arg_lo + core::f64::consts::FRAC_PI_2).abs() <= 0.1,
        "D1 minimum at {arg_lo:.4}, expected -pi/2"
    );
}

#[test]
fn photon_vacuum_decomposition_readouts() {
    let (a, b) = ports();
    let pa = a.rho.photon_number_distribution();
    let pb = b.rho.photon_number_distribution();
    let wa = wigner_function(&a.rho, 0.0, 0.0).unwrap();
    println!(
        "decomposition: P_a(1) {:.4}, W_a(0,0) {wa:.4}, P_b(0) {:.4}",
        pa[1], pb[0]
    );
    assert!((pa[1] - 0.79).abs() <= 0.04, "P_a(1) {:.4} outside 0.79 +- 0.04", pa[1]);
    assert!((wa + 0.187).abs() <= 0.02, "W_a(0,0) {wa:.4} outside -0.187 +- 0.02");
    assert!((pb[0] - 0.98).abs() <= 0.01, "P_b(0) {:.4} outside 0.98 +- 0.01", pb[0]);
}

#[test]
fn vacuum_calibration_anchors() {
    let vac = DensityMatrix::vacuum(2, 2).unwrap();
    let records = sample_q_function(&vac, 100_000, stage_seed(SEED, "vacuum-records")).unwrap();
    let n = records.len() as f64;
    let var = |f: fn(&QuadratureSample) -> f64| {
        let mean = records.iter().map(f).sum::<f64>() / n;
        records.iter().map(|r| (f(r) - mean).powi(2)).sum::<f64>() / (n - 1.0)
    };
    let vars =
        [var(|r| r.x1), var(|r| r.p1), var(|r| r.x2), var(|r| r.p2)];
    println!("vacuum record variances {vars:.4?}");
    for v in vars {
        assert!((v - 1.0).abs() <= 0.02, "record variance {v:.4} outside 1.00 +- 0.02");
    }

    let mzi = preset().mzi;
    let dt = 1.0 / (12.0 * mzi.gamma);
    let start = -(mzi.delta_t + 5.0 / mzi.gamma);
    let stop = 5.0 / mzi.gamma;
    let steps = ((stop - start) / dt).ceil() as usize + 1;
    let grid: Vec<f64> = (0..steps).map(|i| start + i as f64 * dt).collect();
    let trace =
        synthesize_variance_trace(&vac, &mzi, 100_000, &grid, stage_seed(SEED, "vacuum-trace"))
            .unwrap();
    let lo = trace.variance.iter().cloned().fold(f64::MAX, f64::min);
    let hi = trace.variance.iter().cloned().fold(f64::MIN, f64::max);
    println!("vacuum trace floor [{lo:.4}, {hi:.4}]");
    assert!(lo >= 0.49 && hi <= 0.51, "vacuum trace floor [{lo:.4}, {hi:.4}] off 0.50 +- 0.01");
}

#[test]
fn single_photon_wigner_dip_and_parity() {
    let fx = lossless();
    let cfg = MleConfig {
        dim_per_mode: 3,
        max_iterations: 3000,
        convergence_tol: 1e-6,
        ..MleConfig::default()
    };
    let (a, b) = decompose_at_optimum(&fx.records, &fx.spec, &cfg).unwrap();
    let wa = wigner_function(&a.rho, 0.0, 0.0).unwrap();
    let dip = -1.0 / core::f64::consts::PI;
    println!("single-photon W(0,0) {wa:.5} (ideal {dip:.5})");
    assert!((wa - dip).abs() <= 0.01, "W(0,0) {wa:.5} outside -1/pi +- 0.01");

    // Parity identity on every reconstructed state in the suite.
    let paper_rho = &paper().recon.rho;
    let lossless_rho = &lossless().recon.rho;
    let (pa, pb) = ports();
    let single_modes = [
        (a.rho.clone(), "lossless port a"),
        (b.rho.clone(), "lossless port b"),
        (pa.rho.clone(), "paper port a"),
        (pb.rho.clone(), "paper port b"),
        (paper_rho.partial_trace(1).unwrap(), "paper bin 1"),
        (paper_rho.partial_trace(2).unwrap(), "paper bin 2"),
        (lossless_rho.partial_trace(1).unwrap(), "lossless bin 1"),
        (lossless_rho.partial_trace(2).unwrap(), "lossless bin 2"),
    ];
    for (rho, label) in &single_modes {
        let w = wigner_function(rho, 0.0, 0.0).unwrap();
        let parity = parity_from_distribution(rho);
        assert!(
            (w - parity).abs() <= 1e-6,
            "{label}: W(0,0) {w:.8} vs parity sum {parity:.8}"
        );
    }
}

#[test]
fn quadrature_and_coherent_estimators_agree() {
    let spec = balanced_spec();
    let rho = DensityMatrix::pure(&spec.ket(3).unwrap()).unwrap();
    let records = sample_q_function(&rho, 200_000, stage_seed(SEED, "lossless-records")).unwrap();
    let data = make_tomography_data(&records, stage_seed(SEED, "lossless-tags")).unwrap();
    let cfg = MleConfig {
        dim_per_mode: 3,
        max_iterations: 12_000,
        convergence_tol: 1e-7,
        ..MleConfig::default()
    };
    let binned = mle_reconstruct(&data, &cfg).unwrap();
    let coherent = mle_reconstruct_coherent(&records, &cfg).unwrap();
    let td = trace_distance(binned.rho.matrix(), coherent.rho.matrix()).unwrap();
    println!(
        "estimator agreement: trace distance {td:.4} (binned {} iters, coherent {} iters)",
        binned.iterations, coherent.iterations
    );
    assert!(binned.converged && coherent.converged, "an estimator did not converge");
    assert!(td <= 0.02, "estimators disagree by trace distance {td:.4}");
}

#[test]
fn variance_trace_resolves_the_two_bins() {
    let r = preset();
    let spec = r.targets[4];
    assert!((spec.c0 - 0.8944271909999159).abs() < 1e-12, "target 4 should be the 2:1 qubit");
    let rho = build_physical_state(&spec, &r.budget, 3).unwrap();
    let mzi = r.mzi;
    let dt = 1.0 / (12.0 * mzi.gamma);
    let start = -(mzi.delta_t + 5.0 / mzi.gamma);
    let stop = 5.0 / mzi.gamma;
    let steps = ((stop - start) / dt).ceil() as usize + 1;
    let grid: Vec<f64> = (0..steps).map(|i| start + i as f64 * dt).collect();
    let trace =
        synthesize_variance_trace(&rho, &mzi, 500_000, &grid, stage_seed(SEED, "trace")).unwrap();
    let peak = |lo: f64, hi: f64| {
        trace
            .times
            .iter()
            .zip(&trace.variance)
            .filter(|(t, _)| **t >= lo && **t <= hi)
            .fold((0.0f64, f64::MIN), |acc, (t, v)| if *v > acc.1 { (*t, *v) } else { acc })
    };
    let (t1, h1) = peak(-30e-9, 30e-9);
    let (t2, h2) = peak(-mzi.delta_t - 30e-9, -mzi.delta_t + 30e-9);
    let ratio = (h1 - 0.5) / (h2 - 0.5);
    println!(
        "variance trace: peaks at {:.2} ns and {:.2} ns, ratio above floor {ratio:.3}",
        t1 * 1e9,
        t2 * 1e9
    );
    assert!(t1.abs() <= dt, "first peak at {:.2} ns, expected 0", t1 * 1e9);
    assert!(
        ((t1 - t2) - mzi.delta_t).abs() <= dt,
        "peak separation {:.2} ns, expected {:.2} ns",
        (t1 - t2) * 1e9,
        mzi.delta_t * 1e9
    );
    assert!((ratio - 4.0).abs() <= 0.6, "peak ratio {ratio:.3} outside 4.0 +- 15%");
}

#[test]
fn produced_states_and_streams_behave() {
    let fx = paper();
    assert_state_invariants(&fx.rho_true, "paper physical state");
    assert_state_invariants(&fx.recon.rho, "paper reconstruction");
    assert_state_invariants(&lossless().recon.rho, "lossless reconstruction");
    let (a, b) = ports();
    assert_state_invariants(&a.rho, "port a reconstruction");
    assert_state_invariants(&b.rho, "port b reconstruction");

    let again = sample_q_function(&fx.rho_true, 1000, stage_seed(SEED, "paper-records")).unwrap();
    for (r, s) in again.iter().zip(&fx.records) {
        assert!(
            r.x1.to_bits() == s.x1.to_bits()
                && r.p1.to_bits() == s.p1.to_bits()
                && r.x2.to_bits() == s.x2.to_bits()
                && r.p2.to_bits() == s.p2.to_bits(),
            "same seed must reproduce the same records"
        );
    }
    let other = sample_q_function(&fx.rho_true, 1000, stage_seed(SEED, "paper-records") ^ 1).unwrap();
    assert!(
        other.iter().zip(&fx.records).any(|(r, s)| r.x1 != s.x1),
        "a different seed should change the records"
    );
    println!("state invariants and seed determinism hold");
}
