use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

use adiacheck_core::analysis::{analyze, AnalysisConfig, GaugeMode};
use adiacheck_core::conditions::{build_report, condition_inputs, ConditionConfig};
use adiacheck_core::dynamics::{fidelity, gamma_exact_state, propagate, schrodinger_rhs};
use adiacheck_core::holonomy::{daa_state, level_holonomy, HolonomyOptions};
use adiacheck_core::linalg::{max_norm, unitary_exp};
use adiacheck_core::models::{gamma_hamiltonian, sampled_model};
use adiacheck_core::spectral::{
    anchor_frames, overlap_block, smooth_frames, snapshot_decompose, OverlapMethod,
    SnapshotSpectrum, DEFAULT_GROUP_TOL,
};
use adiacheck_core::{CMatrix, GammaModel, GammaParams, HamiltonianModel, TimeGrid, C64};
use proptest::prelude::*;

fn gamma(b: f64, w: f64, theta: f64, t_end: f64) -> GammaModel {
    gamma_hamiltonian(GammaParams::new(b, w, theta, t_end).unwrap()).unwrap()
}

fn anchored(model: &GammaModel, grid: &TimeGrid) -> SnapshotSpectrum {
    let raw = snapshot_decompose(model, grid, DEFAULT_GROUP_TOL).unwrap();
    anchor_frames(raw, &model.gauge_anchors().unwrap()).unwrap()
}

fn anchored_config() -> AnalysisConfig {
    AnalysisConfig {
        gauge: GaugeMode::Anchored,
        ..AnalysisConfig::default()
    }
}

fn rotation(phi: f64, alpha: f64) -> CMatrix {
    let (s, c) = phi.sin_cos();
    let e = C64::from_polar(1.0, alpha);
    CMatrix::from_row_major(
        2,
        2,
        vec![C64::new(c, 0.0), -e.conj() * s, e * s, C64::new(c, 0.0)],
    )
    .unwrap()
}

#[test]
fn daa_state_is_gauge_covariant() {
    let model = gamma(1.0, 0.1, FRAC_PI_3, 10.0);
    let grid = TimeGrid::new(0.0, 10.0, 2000).unwrap();
    let spectrum = anchored(&model, &grid);
    let v = rotation(0.7, 0.3);
    let moved = spectrum.regauged(0, &v);

    let opts = HolonomyOptions::default();
    let u = level_holonomy(&spectrum, 0, &CMatrix::identity(2), opts).unwrap();
    let u_moved = level_holonomy(&moved, 0, &v.conj(), opts).unwrap();
    for k in [0, 500, 2000] {
        let expected = u.at(k) * &v.conj();
        assert!(max_norm(&(u_moved.at(k) - &expected)).unwrap() < 1e-9);
    }

    let amplitudes = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let a = daa_state(&spectrum, &[Some(u), None], &amplitudes, 0).unwrap();
    let b = daa_state(&moved, &[Some(u_moved), None], &amplitudes, 0).unwrap();
    for k in 0..grid.len() {
        let d: f64 = a
            .vector(k)
            .iter()
            .zip(b.vector(k))
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(d < 1e-9, "k = {k}: {d}");
    }
}

#[test]
fn block_norms_and_verdicts_survive_regauging() {
    let model = gamma(1.0, 0.1, 0.8, 10.0);
    let grid = TimeGrid::new(0.0, 10.0, 1000).unwrap();
    let spectrum = anchored(&model, &grid);
    let moved = spectrum
        .regauged(0, &rotation(0.4, -1.1))
        .regauged(1, &rotation(1.2, 0.5));
    let a = condition_inputs(&spectrum).unwrap();
    let b = condition_inputs(&moved).unwrap();
    for k in 0..grid.len() {
        let fa = a.m_n0[1][k].entries.frobenius_norm();
        let fb = b.m_n0[1][k].entries.frobenius_norm();
        assert!((fa - fb).abs() < 1e-9);
        let fa = a.m_0n[1][k].frobenius_norm();
        let fb = b.m_0n[1][k].frobenius_norm();
        assert!((fa - fb).abs() < 1e-9);
    }

    let cfg = ConditionConfig::default();
    let opts = HolonomyOptions::default();
    let u = level_holonomy(&spectrum, 0, &CMatrix::identity(2), opts).unwrap();
    let u_moved = level_holonomy(&moved, 0, &rotation(0.4, -1.1).conj(), opts).unwrap();
    let ra = build_report(&spectrum, &u, &cfg).unwrap();
    let rb = build_report(&moved, &u_moved, &cfg).unwrap();
    assert_eq!(ra.necessary_pass, rb.necessary_pass);
    assert_eq!(ra.sufficient_pass, rb.sufficient_pass);
}

#[test]
fn d0_is_nondecreasing() {
    for theta in [0.2, 1.0, 2.5] {
        let model = gamma(1.0, 0.3, theta, 5.0);
        let grid = TimeGrid::new(0.0, 5.0, 500).unwrap();
        let a = analyze(&model, &grid, &AnalysisConfig::default()).unwrap();
        assert!(a.report.d0.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn margins_are_scale_invariant() {
    let steps = 400;
    let base = {
        let model = gamma(1.0, 0.2, 0.9, 5.0);
        let grid = TimeGrid::new(0.0, 5.0, steps).unwrap();
        analyze(&model, &grid, &anchored_config()).unwrap().report
    };
    let c = 3.5;
    let scaled = {
        let model = gamma(c, 0.2 * c, 0.9, 5.0 / c);
        let grid = TimeGrid::new(0.0, 5.0 / c, steps).unwrap();
        analyze(&model, &grid, &anchored_config()).unwrap().report
    };
    for k in 0..=steps {
        let rel = |a: f64, b: f64| if a == 0.0 { b.abs() } else { ((a - b) / a).abs() };
        assert!(rel(base.necessary_at(k), scaled.necessary_at(k)) < 1e-9);
        assert!(rel(base.dn_at(k), scaled.dn_at(k)) < 1e-9);
        assert!(rel(base.d0[k], scaled.d0[k]) < 1e-9);
        assert!(rel(base.u_floor[k], scaled.u_floor[k]) < 1e-9);
    }
}

#[test]
fn margins_do_not_depend_on_hbar() {
    let grid = TimeGrid::new(0.0, 5.0, 300).unwrap();
    let reports: Vec<_> = [1.0, 0.37]
        .into_iter()
        .map(|hbar| {
            let p = GammaParams::new(1.0, 0.2, 0.9, 5.0).unwrap().with_hbar(hbar).unwrap();
            let model = gamma_hamiltonian(p).unwrap();
            analyze(&model, &grid, &anchored_config()).unwrap().report
        })
        .collect();
    assert!((reports[0].peak_necessary() - reports[1].peak_necessary()).abs() < 1e-12);
    assert!((reports[0].peak_dn() - reports[1].peak_dn()).abs() < 1e-12);
}

#[test]
fn hdot_overlaps_agree_with_finite_differences() {
    let model = gamma(1.0, 0.1, 1.1, 10.0);
    let grid = TimeGrid::new(0.0, 10.0, 2000).unwrap();
    let spectrum = anchored(&model, &grid);
    for k in [0, 1, 1000, 2000] {
        for (n, m) in [(0, 1), (1, 0)] {
            let fd = overlap_block(&spectrum, n, m, k, OverlapMethod::FiniteDifference).unwrap();
            let an = overlap_block(&spectrum, n, m, k, OverlapMethod::Hdot(&model)).unwrap();
            assert!(max_norm(&(&fd.entries - &an.entries)).unwrap() < 1e-6);
        }
    }
}

#[test]
fn parallel_transport_makes_intra_level_blocks_small() {
    let model = gamma(1.0, 0.1, 0.9, 10.0);
    let grid = TimeGrid::new(0.0, 10.0, 1000).unwrap();
    let raw = snapshot_decompose(&model, &grid, DEFAULT_GROUP_TOL).unwrap();
    let smooth = smooth_frames(raw).unwrap();
    let u = level_holonomy(&smooth, 0, &CMatrix::identity(2), HolonomyOptions::default()).unwrap();
    assert!(max_norm(&(u.last() - &CMatrix::identity(2))).unwrap() < 1e-4);
}

#[test]
fn daa_tracks_exact_solution_for_slow_drive() {
    let model = gamma(1.0, 0.01, 1.0, 50.0);
    let grid = TimeGrid::new(0.0, 50.0, 5000).unwrap();
    let a = analyze(&model, &grid, &anchored_config()).unwrap();
    let holonomies: Vec<_> = a.holonomies.iter().cloned().map(Some).collect();
    let amplitudes = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let daa = daa_state(&a.spectrum, &holonomies, &amplitudes, 0).unwrap();
    let exact = gamma_exact_state(&model, 50.0).unwrap();
    assert!(fidelity(&exact, daa.vector(grid.steps())).unwrap() >= 0.999);
}

#[test]
fn closed_form_state_solves_schrodinger_equation() {
    let model = gamma(1.0, 0.3, 0.7, 10.0);
    let errs: Vec<f64> = [1e-2, 5e-3]
        .into_iter()
        .map(|h| {
            let t = 3.3;
            let plus = gamma_exact_state(&model, t + h).unwrap();
            let minus = gamma_exact_state(&model, t - h).unwrap();
            let rhs = schrodinger_rhs(&model, t, &gamma_exact_state(&model, t).unwrap());
            plus.iter()
                .zip(&minus)
                .zip(&rhs)
                .map(|((p, m), r)| ((p - m) / (2.0 * h) - r).norm())
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(errs[0] < 1e-4);
    assert!((errs[0] / errs[1]).log2() > 1.9);
}

#[test]
fn sampled_derivative_is_second_order() {
    let model = gamma(1.0, 0.5, 0.9, 4.0);
    let errs: Vec<f64> = [40, 80]
        .into_iter()
        .map(|steps| {
            let grid = TimeGrid::new(0.0, 4.0, steps).unwrap();
            let samples = grid.times().map(|t| model.evaluate(t)).collect();
            let sampled = sampled_model(&grid, samples).unwrap();
            let k = steps / 2;
            let t = grid.time(k);
            max_norm(&(&sampled.derivative(t).unwrap() - &model.derivative(t).unwrap())).unwrap()
        })
        .collect();
    assert!((errs[0] / errs[1]).log2() > 1.9, "{errs:?}");
}

#[test]
fn sampled_gamma_model_reproduces_margins() {
    let model = gamma(1.0, 0.1, 0.8, 10.0);
    let fine = TimeGrid::new(0.0, 10.0, 2000).unwrap();
    let samples = fine.times().map(|t| model.evaluate(t)).collect();
    let sampled = sampled_model(&fine, samples).unwrap();
    let grid = fine.subsample(10).unwrap();
    let cfg = AnalysisConfig {
        gauge: GaugeMode::ParallelTransport,
        ..AnalysisConfig::default()
    };
    let a = analyze(&model, &grid, &cfg).unwrap();
    let b = analyze(&sampled, &grid, &cfg).unwrap();
    let rel = (a.report.peak_necessary() - b.report.peak_necessary()).abs() / a.report.peak_necessary();
    assert!(rel < 1e-3, "{rel}");
    assert_eq!(a.necessary_pass(), b.necessary_pass());
}

#[test]
fn degenerate_single_level_is_rejected_by_conditions() {
    let grid = TimeGrid::new(0.0, 1.0, 4).unwrap();
    let h = CMatrix::identity(2);
    let model = sampled_model(&grid, vec![h; 5]).unwrap();
    let a = analyze(&model, &grid, &AnalysisConfig::default()).unwrap();
    assert!(a.report.levels.is_empty());
    assert!(a.necessary_pass());
}

#[test]
fn propagation_conserves_norm_for_equatorial_drive() {
    let model = gamma(1.0, 0.2, FRAC_PI_2, 5.0);
    let grid = TimeGrid::new(0.0, 5.0, 5000).unwrap();
    let psi0 = gamma_exact_state(&model, 0.0).unwrap();
    let traj = propagate(&model, &psi0, &grid).unwrap();
    assert!(traj.norm_drift() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn frames_stay_orthonormal(w in 0.01f64..1.5, theta in 0.05f64..3.0) {
        let model = gamma(1.0, w, theta, 2.0);
        let grid = TimeGrid::new(0.0, 2.0, 50).unwrap();
        let raw = snapshot_decompose(&model, &grid, DEFAULT_GROUP_TOL).unwrap();
        prop_assert!(raw.orthonormality_error() < 1e-9);
        prop_assert!(raw.completeness_error() < 1e-9);
        prop_assert!(raw.residual_error(&model) < 1e-9);
        let smooth = smooth_frames(raw).unwrap();
        prop_assert!(smooth.orthonormality_error() < 1e-9);
    }

    #[test]
    fn step_operator_is_unitary(
        theta in 0.0f64..3.14, t in 0.0f64..50.0, tau in 1e-4f64..1.0,
    ) {
        let model = gamma(1.0, 0.3, theta, 50.0);
        let u = unitary_exp(&model.evaluate(t), tau).unwrap();
        prop_assert!(u.unitarity_error() < 1e-14);
    }

    #[test]
    fn necessary_margin_matches_column_norm_form(theta in 0.05f64..3.09) {
        use adiacheck_core::conditions::gamma_necessary_closed_form;
        let model = gamma(1.0, 0.1, theta, 10.0);
        let grid = TimeGrid::new(0.0, 10.0, 400).unwrap();
        let a = analyze(&model, &grid, &anchored_config()).unwrap();
        let expected = gamma_necessary_closed_form(model.params());
        prop_assert!((a.report.necessary_at(200) - expected).abs() < 1e-5 * expected);
    }
}
