//! Subcommand implementations. Each returns the process exit code.

use std::f64::consts::FRAC_PI_3;

use adiacheck_core::analysis::{analyze, Analysis, AnalysisConfig, GaugeMode};
use adiacheck_core::conditions::{gamma_necessary_closed_form, gamma_sufficient_closed_forms};
use adiacheck_core::dynamics::{
    excited_leakage, fidelity, gamma_exact, gamma_exact_state, level_coefficients, propagate,
    propagate_strided,
};
use adiacheck_core::holonomy::daa_state;
use adiacheck_core::linalg::max_norm;
use adiacheck_core::models::{gamma_hamiltonian, gamma_matrices, pi_matrices};
use adiacheck_core::{
    CMatrix, GammaModel, GammaParams, HamiltonianModel, SampledModel, TimeGrid, C64,
};
use anyhow::{bail, Context};
use rayon::prelude::*;

use crate::config::{ModelKind, RunConfig};
use crate::report::{ensure_dir, fmt_f64, write_condition_report, write_csv};
use crate::schedule::load_schedule;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_SUFFICIENT_FAIL: u8 = 2;
pub const EXIT_NECESSARY_FAIL: u8 = 3;

pub fn verdict_exit_code(necessary: bool, sufficient: bool) -> u8 {
    match (necessary, sufficient) {
        (false, _) => EXIT_NECESSARY_FAIL,
        (true, false) => EXIT_SUFFICIENT_FAIL,
        (true, true) => EXIT_PASS,
    }
}

enum Model {
    Gamma(GammaModel),
    Sampled(SampledModel),
}

impl Model {
    fn as_dyn(&self) -> &dyn HamiltonianModel {
        match self {
            Model::Gamma(m) => m,
            Model::Sampled(m) => m,
        }
    }
}

fn build_model(config: &RunConfig) -> anyhow::Result<(Model, TimeGrid)> {
    match config.model.kind {
        ModelKind::Gamma => {
            let p = config.gamma_params()?;
            let grid = config.grid_for(0.0, p.total_time, config.gamma_dt(p.b, p.w))?;
            Ok((Model::Gamma(gamma_hamiltonian(p)?), grid))
        }
        ModelKind::Schedule => {
            let path = config.model.schedule.as_ref().expect("validated");
            let m = load_schedule(path)?;
            let (t0, t1) = (m.t_start(), m.t_end());
            let t_end = config.grid.t_end.unwrap_or(t1);
            if t_end > t1 * (1.0 + 1e-12) + 1e-12 {
                bail!("t_end = {t_end} lies beyond the schedule's last sample at {t1}");
            }
            let dt = config.grid.dt.unwrap_or((t1 - t0) / (m.len() - 1) as f64);
            let grid = config.grid_for(t0, t_end, dt)?;
            Ok((Model::Sampled(m), grid))
        }
    }
}

pub fn cmd_analyze(config: &RunConfig) -> anyhow::Result<u8> {
    config.validate()?;
    let (model, grid) = build_model(config)?;
    let grid = grid.subsample(config.grid.analysis_stride)?;
    let analysis = analyze(model.as_dyn(), &grid, &config.analysis_config())
        .context("analysis failed")?;
    let (json, csv) = write_condition_report(config, &analysis)?;
    let r = &analysis.report;
    for w in &analysis.warnings {
        eprintln!("warning: {w}");
    }
    println!("levels: {:?}", analysis.spectrum.structure().multiplicities());
    println!(
        "necessary: {} (peak margin {:.6e}, eta {})",
        pass_fail(r.necessary_pass),
        r.peak_necessary(),
        r.config.eta
    );
    println!(
        "sufficient: {} (peak D0 {:.6e}, peak Dn {:.6e}, min u_floor {:.6e})",
        pass_fail(r.sufficient_pass),
        r.peak_d0(),
        r.peak_dn(),
        r.min_u_floor()
    );
    println!("wrote {} and {}", json.display(), csv.display());
    Ok(verdict_exit_code(r.necessary_pass, r.sufficient_pass))
}

fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

/// Closed-form vs numerical snapshot-basis magnitudes along a propagation.
pub struct ExactComparison {
    pub times: Vec<f64>,
    pub exact: Vec<[f64; 4]>,
    pub numeric: Vec<[f64; 4]>,
}

impl ExactComparison {
    pub fn deviation(&self, k: usize) -> f64 {
        self.exact[k]
            .iter()
            .zip(&self.numeric[k])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn peak_deviation(&self) -> f64 {
        (0..self.times.len())
            .map(|k| self.deviation(k))
            .fold(0.0, f64::max)
    }
}

pub fn compare_with_exact(params: GammaParams, grid: &TimeGrid) -> anyhow::Result<ExactComparison> {
    let model = gamma_hamiltonian(params)?;
    let psi0 = gamma_exact_state(&model, 0.0)?;
    let traj = propagate(&model, &psi0, grid)?;
    let mut out = ExactComparison {
        times: Vec::with_capacity(grid.len()),
        exact: Vec::with_capacity(grid.len()),
        numeric: Vec::with_capacity(grid.len()),
    };
    for (k, t) in grid.times().enumerate() {
        let exact = gamma_exact(&params, t)?.magnitudes();
        let mut numeric = [0.0; 4];
        for level in 0..2 {
            let c = level_coefficients(&model.reference_frame(level, t), traj.state(k));
            numeric[2 * level] = c[0].norm();
            numeric[2 * level + 1] = c[1].norm();
        }
        out.times.push(t);
        out.exact.push(exact);
        out.numeric.push(numeric);
    }
    Ok(out)
}

pub fn cmd_exact(config: &RunConfig) -> anyhow::Result<u8> {
    config.validate()?;
    if config.model.kind != ModelKind::Gamma {
        bail!("exact comparison needs the gamma model; schedules have no closed form");
    }
    let p = config.gamma_params()?;
    let grid = config.grid_for(0.0, p.total_time, config.gamma_dt(p.b, p.w))?;
    let cmp = compare_with_exact(p, &grid)?;

    let names = ["c00", "c01", "c10", "c11"];
    let mut header = vec!["t".to_string()];
    header.extend(names.iter().map(|n| format!("exact_{n}")));
    header.extend(names.iter().map(|n| format!("numeric_{n}")));
    header.push("max_deviation".into());
    let rows: Vec<Vec<String>> = (0..cmp.times.len())
        .step_by(config.grid.analysis_stride)
        .map(|k| {
            let mut row = vec![fmt_f64(cmp.times[k])];
            row.extend(cmp.exact[k].iter().map(|&x| fmt_f64(x)));
            row.extend(cmp.numeric[k].iter().map(|&x| fmt_f64(x)));
            row.push(fmt_f64(cmp.deviation(k)));
            row
        })
        .collect();
    ensure_dir(&config.output.dir)?;
    let path = config.output.dir.join("exact.csv");
    write_csv(&path, &header, &rows, config.output.timestamp)?;
    println!(
        "peak deviation {:.6e} over {} steps (dt = {:.3e}); wrote {}",
        cmp.peak_deviation(),
        grid.steps(),
        grid.dt(),
        path.display()
    );
    Ok(EXIT_PASS)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub w_over_b: f64,
    pub theta: f64,
    pub outcome: Result<SweepPoint, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub necessary_pass: bool,
    pub sufficient_pass: bool,
    pub peak_necessary: f64,
    pub peak_d0: f64,
    pub peak_d1: f64,
    pub min_u_floor: f64,
    pub peak_leakage: Option<f64>,
    pub final_fidelity: Option<f64>,
}

fn sweep_point(config: &RunConfig, ratio: f64, theta: f64) -> anyhow::Result<SweepPoint> {
    let b = config.model.b;
    let w = ratio * b;
    let t_end = config.gamma_t_end(w)?;
    let p = GammaParams::new(b, w, theta, t_end)?.with_hbar(config.model.hbar)?;
    let model = gamma_hamiltonian(p)?;
    let stride = config.grid.analysis_stride;
    let grid = config.grid_for(0.0, t_end, config.gamma_dt(b, w))?;
    let coarse = grid.subsample(stride)?;
    let analysis = analyze(&model, &coarse, &config.analysis_config())?;
    let r = &analysis.report;
    let (peak_leakage, final_fidelity) = if config.sweep.propagate {
        let (l, f) = leakage_and_fidelity(&model, &grid, stride, &analysis, config.conditions.row)?;
        (Some(l), Some(f))
    } else {
        (None, None)
    };
    Ok(SweepPoint {
        necessary_pass: r.necessary_pass,
        sufficient_pass: r.sufficient_pass,
        peak_necessary: r.peak_necessary(),
        peak_d0: r.peak_d0(),
        peak_d1: r.peak_dn(),
        min_u_floor: r.min_u_floor(),
        peak_leakage,
        final_fidelity,
    })
}

/// Peak leakage into the initially empty levels and the final fidelity with
/// the adiabatic state, for a start in column `row` of the ground frame.
pub fn leakage_and_fidelity(
    model: &dyn HamiltonianModel,
    grid: &TimeGrid,
    stride: usize,
    analysis: &Analysis,
    row: usize,
) -> anyhow::Result<(f64, f64)> {
    let spectrum = &analysis.spectrum;
    let psi0 = spectrum.frame(0, 0).column(row);
    let traj = propagate_strided(model, &psi0, grid, stride)?;
    let mut leakage = 0.0f64;
    for n in 1..spectrum.level_count() {
        leakage = excited_leakage(&traj, spectrum, n)?
            .into_iter()
            .fold(leakage, f64::max);
    }
    let mut amplitudes = vec![C64::new(0.0, 0.0); spectrum.level_count()];
    amplitudes[0] = C64::new(1.0, 0.0);
    let holonomies: Vec<_> = analysis.holonomies.iter().cloned().map(Some).collect();
    let daa = daa_state(spectrum, &holonomies, &amplitudes, row)?;
    let fid = fidelity(traj.last(), daa.vector(spectrum.grid().steps()))?;
    Ok((leakage, fid))
}

pub fn run_sweep(config: &RunConfig) -> anyhow::Result<Vec<SweepRow>> {
    config.validate()?;
    if config.model.kind != ModelKind::Gamma {
        bail!("sweeps run over the gamma model parameters");
    }
    let s = &config.sweep;
    if s.w_over_b.is_empty() || s.theta.is_empty() {
        bail!("sweep lists w_over_b and theta must both be nonempty");
    }
    let points: Vec<(f64, f64)> = s
        .w_over_b
        .iter()
        .flat_map(|&r| s.theta.iter().map(move |&t| (r, t)))
        .collect();
    let work = || {
        points
            .par_iter()
            .map(|&(ratio, theta)| SweepRow {
                w_over_b: ratio,
                theta,
                outcome: sweep_point(config, ratio, theta).map_err(|e| format!("{e:#}")),
            })
            .collect::<Vec<_>>()
    };
    Ok(match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("cannot start worker pool")?
            .install(work),
        None => work(),
    })
}

pub fn cmd_sweep(config: &RunConfig) -> anyhow::Result<u8> {
    let rows = run_sweep(config)?;
    let header: Vec<String> = [
        "w_over_b",
        "theta",
        "necessary_verdict",
        "sufficient_verdict",
        "peak_necessary",
        "peak_d0",
        "peak_d1",
        "min_u_floor",
        "peak_leakage",
        "final_fidelity",
        "error",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    let mut errors = 0;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            let mut out = vec![fmt_f64(row.w_over_b), fmt_f64(row.theta)];
            match &row.outcome {
                Ok(p) => out.extend([
                    pass_fail(p.necessary_pass).to_string(),
                    pass_fail(p.sufficient_pass).to_string(),
                    fmt_f64(p.peak_necessary),
                    fmt_f64(p.peak_d0),
                    fmt_f64(p.peak_d1),
                    fmt_f64(p.min_u_floor),
                    opt(p.peak_leakage),
                    opt(p.final_fidelity),
                    String::new(),
                ]),
                Err(e) => {
                    errors += 1;
                    out.extend(std::iter::repeat_n(String::new(), 8));
                    out.push(e.clone());
                }
            }
            out
        })
        .collect();
    ensure_dir(&config.output.dir)?;
    let path = config.output.dir.join("sweep.csv");
    write_csv(&path, &header, &table, config.output.timestamp)?;
    println!("{} sweep points, {errors} failed; wrote {}", rows.len(), path.display());
    Ok(if errors == 0 { EXIT_PASS } else { EXIT_ERROR })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Flips the sign of `Gamma_y` before the algebra checks.
    GammaYSign,
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    /// `true`: the measured value must be at least the tolerance.
    pub lower_bound: bool,
}

impl Check {
    fn at_most(name: &'static str, measured: f64, tolerance: f64) -> Self {
        Check {
            name,
            measured,
            tolerance,
            lower_bound: false,
        }
    }

    fn at_least(name: &'static str, measured: f64, tolerance: f64) -> Self {
        Check {
            name,
            measured,
            tolerance,
            lower_bound: true,
        }
    }

    pub fn passed(&self) -> bool {
        if self.lower_bound {
            self.measured >= self.tolerance
        } else {
            self.measured <= self.tolerance
        }
    }
}

fn gamma_algebra(fault: Option<Fault>) -> (f64, f64) {
    let mut g = gamma_matrices();
    if fault == Some(Fault::GammaYSign) {
        g[1] = -&g[1];
    }
    let pi = pi_matrices();
    let id = CMatrix::identity(4);
    let zero = CMatrix::zeros(4, 4);
    let (mut anti, mut comm) = (0.0f64, 0.0f64);
    for i in 0..3 {
        for j in 0..3 {
            let expected = if i == j { id.scale_real(2.0) } else { zero.clone() };
            anti = anti.max(max_norm(&(&g[i].anticommutator(&g[j]) - &expected)).unwrap_or(f64::NAN));
            let expected = if i == j {
                zero.clone()
            } else {
                let k = 3 - i - j;
                let sign = if (j + 3 - i) % 3 == 1 { 1.0 } else { -1.0 };
                pi[k].scale(C64::new(0.0, 2.0 * sign))
            };
            comm = comm.max(max_norm(&(&g[i].commutator(&g[j]) - &expected)).unwrap_or(f64::NAN));
        }
    }
    (anti, comm)
}

fn anchored_analysis(p: GammaParams, grid: &TimeGrid) -> anyhow::Result<Analysis> {
    let cfg = AnalysisConfig {
        gauge: GaugeMode::Anchored,
        ..AnalysisConfig::default()
    };
    Ok(analyze(&gamma_hamiltonian(p)?, grid, &cfg)?)
}

fn final_state_error(p: GammaParams, steps: usize) -> anyhow::Result<f64> {
    let model = gamma_hamiltonian(p)?;
    let grid = TimeGrid::new(0.0, p.total_time, steps)?;
    let traj = propagate(&model, &gamma_exact_state(&model, 0.0)?, &grid)?;
    let exact = gamma_exact_state(&model, p.total_time)?;
    Ok(traj
        .last()
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

/// Runs the oracle and invariant checks. `dt` sets the spacing of the
/// oracle grids (default `1e-3`).
pub fn verify_checks(dt: Option<f64>, fault: Option<Fault>) -> anyhow::Result<Vec<Check>> {
    let dt = dt.unwrap_or(1e-3);
    let mut checks = Vec::new();
    let (anti, comm) = gamma_algebra(fault);
    checks.push(Check::at_most("gamma anticommutators", anti, 1e-15));
    checks.push(Check::at_most("gamma commutators", comm, 1e-15));

    let p = GammaParams::new(1.0, 0.05, 1.0, 20.0)?;
    let grid = TimeGrid::with_max_dt(20.0, dt)?;
    let cmp = compare_with_exact(p, &grid)?;
    checks.push(Check::at_most("propagator vs closed form", cmp.peak_deviation(), 1e-5));
    let model = gamma_hamiltonian(p)?;
    let traj = propagate(&model, &gamma_exact_state(&model, 0.0)?, &grid)?;
    checks.push(Check::at_most("propagator norm drift", traj.norm_drift(), 1e-10));
    let (e1, e2) = (final_state_error(p, 1000)?, final_state_error(p, 2000)?);
    checks.push(Check::at_least("propagator convergence order", (e1 / e2).log2(), 1.9));

    let p = GammaParams::new(1.0, 0.1, FRAC_PI_3, 10.0)?;
    let grid = TimeGrid::with_max_dt(10.0, dt)?;
    let a = anchored_analysis(p, &grid)?;
    let hol = a.ground_holonomy();
    let mut worst = 0.0f64;
    for (k, t) in grid.times().enumerate() {
        let cf = gamma_sufficient_closed_forms(&p, t);
        let u = hol.at(k);
        worst = worst
            .max((u[(0, 0)].norm() - cf.u00).abs())
            .max((u[(0, 1)].norm() - cf.u01).abs());
    }
    checks.push(Check::at_most("holonomy vs closed form", worst, 1e-6));
    checks.push(Check::at_most("holonomy unitarity drift", hol.unitarity_drift(), 1e-8));
    let frames = a
        .spectrum
        .orthonormality_error()
        .max(a.spectrum.completeness_error());
    checks.push(Check::at_most("frame orthonormality", frames, 1e-9));
    let last: Vec<CMatrix> = [100, 200, 400]
        .into_iter()
        .map(|steps| {
            let g = TimeGrid::new(0.0, 10.0, steps)?;
            Ok(anchored_analysis(p, &g)?.ground_holonomy().last().clone())
        })
        .collect::<anyhow::Result<_>>()?;
    let d1 = max_norm(&(&last[0] - &last[1]))?;
    let d2 = max_norm(&(&last[1] - &last[2]))?;
    checks.push(Check::at_least("holonomy convergence order", (d1 / d2).log2(), 1.9));

    let p = GammaParams::new(1.0, 0.1, 0.8, 10.0)?;
    let a = anchored_analysis(p, &grid)?;
    let r = &a.report;
    let nec = gamma_necessary_closed_form(&p);
    let (mut e_nec, mut e_d0, mut e_d1) = (0.0f64, 0.0f64, 0.0f64);
    for (k, &t) in r.times.iter().enumerate() {
        let cf = gamma_sufficient_closed_forms(&p, t);
        e_nec = e_nec.max((r.necessary_at(k) / nec - 1.0).abs());
        e_d1 = e_d1.max((r.dn_at(k) / cf.d1 - 1.0).abs());
        if k > 0 {
            e_d0 = e_d0.max((r.d0[k] / cf.d0 - 1.0).abs());
        }
    }
    checks.push(Check::at_most("necessary margin vs closed form", e_nec, 1e-5));
    checks.push(Check::at_most("D0 vs closed form", e_d0, 1e-5));
    checks.push(Check::at_most("D1 vs closed form", e_d1, 1e-5));

    let p = GammaParams::new(1.0, 2.0, 1.0, 0.5)?;
    let a = anchored_analysis(p, &TimeGrid::new(0.0, 0.5, 200)?)?;
    let regime = if a.necessary_pass() || a.sufficient_pass() { 1.0 } else { 0.0 };
    checks.push(Check::at_most("fast drive fails both conditions", regime, 0.0));

    Ok(checks)
}

pub fn cmd_verify(dt: Option<f64>, fault: Option<Fault>) -> anyhow::Result<u8> {
    let checks = verify_checks(dt, fault)?;
    println!("{:<34} {:>12} {:>12}  result", "check", "measured", "tolerance");
    for c in &checks {
        let bound = if c.lower_bound { ">=" } else { "<=" };
        println!(
            "{:<34} {:>12.4e} {} {:<9.1e}  {}",
            c.name,
            c.measured,
            bound,
            c.tolerance,
            if c.passed() { "PASS" } else { "FAIL" }
        );
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
    if failed.is_empty() {
        println!("all {} checks passed", checks.len());
        Ok(EXIT_PASS)
    } else {
        println!("failed: {}", failed.join(", "));
        Ok(EXIT_ERROR)
    }
}
