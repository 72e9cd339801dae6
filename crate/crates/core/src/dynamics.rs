//! Schrödinger propagation, the closed-form solution of the Dirac-matrix
//! model, and fidelity / leakage diagnostics.

use alloc::format;
use alloc::vec::Vec;

use num_traits::{Float, Zero};

use crate::linalg::{inner, unitary_exp, vector_norm, CMatrix, C64, I};
use crate::models::{GammaModel, GammaParams, HamiltonianModel, DEFAULT_HERMITICITY_TOL};
use crate::spectral::SnapshotSpectrum;
use crate::{Error, Result, TimeGrid};

/// Tolerance on `| ||psi|| - 1 |` for inputs that must be normalized.
pub const NORM_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct WaveTrajectory {
    grid: TimeGrid,
    states: Vec<Vec<C64>>,
}

impl WaveTrajectory {
    /// Grid of the stored states.
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn state(&self, k: usize) -> &[C64] {
        &self.states[k]
    }

    pub fn states(&self) -> &[Vec<C64>] {
        &self.states
    }

    pub fn last(&self) -> &[C64] {
        self.states.last().expect("trajectory is never empty")
    }

    /// Largest `| ||psi(t_k)|| - 1 |`.
    pub fn norm_drift(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (vector_norm(s) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn check_normalized(psi: &[C64]) -> Result<()> {
    let norm = vector_norm(psi);
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

/// Midpoint-exponential propagation,
/// `psi(t_{k+1}) = exp(-i H(t_k + dt/2) dt / hbar) psi(t_k)`, storing every
/// grid point.
pub fn propagate(
    model: &dyn HamiltonianModel,
    psi0: &[C64],
    grid: &TimeGrid,
) -> Result<WaveTrajectory> {
    propagate_strided(model, psi0, grid, 1)
}

/// Like [`propagate`], but keeps only every `stride`-th state.
pub fn propagate_strided(
    model: &dyn HamiltonianModel,
    psi0: &[C64],
    grid: &TimeGrid,
    stride: usize,
) -> Result<WaveTrajectory> {
    let stored_grid = grid.subsample(stride)?;
    if psi0.len() != model.dimension() {
        return Err(Error::DimensionMismatch {
            context: "initial state vs model dimension",
            expected: model.dimension(),
            found: psi0.len(),
        });
    }
    check_normalized(psi0)?;

    let dt = grid.dt();
    let tau = dt / model.hbar();
    let mut psi = psi0.to_vec();
    let mut states = Vec::with_capacity(stored_grid.len());
    states.push(psi.clone());
    for k in 0..grid.steps() {
        let t_mid = grid.time(k) + 0.5 * dt;
        let h = model.evaluate(t_mid);
        let dev = h.hermiticity_error();
        if dev > DEFAULT_HERMITICITY_TOL {
            return Err(Error::NotHermitian {
                deviation: dev,
                tolerance: DEFAULT_HERMITICITY_TOL,
                context: format!("(t = {t_mid})"),
            });
        }
        psi = unitary_exp(&h, tau)?.mul_vec(&psi);
        if (k + 1) % stride == 0 {
            states.push(psi.clone());
        }
    }
    Ok(WaveTrajectory {
        grid: stored_grid,
        states,
    })
}

/// Closed-form snapshot-basis coefficients of the Dirac-matrix model started
/// in `|0^0(0)>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaExactCoefficients {
    pub t: f64,
    /// Weights of `|0^0>, |0^1>, |1^0>, |1^1>`.
    pub c: [C64; 4],
    pub a_plus: C64,
    pub a_minus: C64,
    pub b_plus: C64,
    pub b_minus: C64,
    pub omega_plus: f64,
    pub omega_minus: f64,
}

impl GammaExactCoefficients {
    pub fn norm_sqr(&self) -> f64 {
        self.c.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn magnitudes(&self) -> [f64; 4] {
        self.c.map(|z| z.norm())
    }
}

pub fn gamma_exact(params: &GammaParams, t: f64) -> Result<GammaExactCoefficients> {
    params.validate()?;
    let GammaParams { b, w, theta, .. } = *params;
    let (s, c) = theta.sin_cos();
    let omega_plus = (w * w + b * b + 2.0 * w * b * c).max(0.0).sqrt();
    let omega_minus = (w * w + b * b - 2.0 * w * b * c).max(0.0).sqrt();
    let scale = 1e-14 * (b + w);
    if omega_plus <= scale {
        return Err(Error::SingularGammaParameters { sign: '+', cos_theta: c });
    }
    if omega_minus <= scale {
        return Err(Error::SingularGammaParameters { sign: '-', cos_theta: c });
    }

    let a = |omega: f64, sign: f64| {
        let (sn, cs) = (0.5 * omega * t).sin_cos();
        C64::new(cs, (b + sign * w * c) * sn / omega)
    };
    let bb = |omega: f64| C64::new(0.0, w * (0.5 * omega * t).sin() / omega);
    let a_plus = a(omega_plus, 1.0);
    let a_minus = a(omega_minus, -1.0);
    let b_plus = bb(omega_plus);
    let b_minus = bb(omega_minus);

    let e_pos = C64::from_polar(1.0, 0.5 * w * t);
    let e_neg = e_pos.conj();
    let c00 = e_pos * (a_minus * (1.0 + c) + a_plus * (1.0 - c)) * 0.5;
    let c01 = e_neg * (a_plus - a_minus) * (0.5 * s);
    let c10 = e_pos * (b_plus + b_minus) * (0.5 * s * s);
    let c11 = e_neg * (b_minus * (1.0 + c) - b_plus * (1.0 - c)) * (0.5 * s);

    Ok(GammaExactCoefficients {
        t,
        c: [c00, c01, c10, c11],
        a_plus,
        a_minus,
        b_plus,
        b_minus,
        omega_plus,
        omega_minus,
    })
}

/// The closed-form state in the lab basis, assembled on the model's
/// reference eigenframes.
pub fn gamma_exact_state(model: &GammaModel, t: f64) -> Result<Vec<C64>> {
    let coeffs = gamma_exact(model.params(), t)?;
    let mut psi = alloc::vec![C64::zero(); 4];
    for level in 0..2 {
        let frame = model.reference_frame(level, t);
        for g in 0..2 {
            let c = coeffs.c[2 * level + g];
            for (i, p) in psi.iter_mut().enumerate() {
                *p += c * frame[(i, g)];
            }
        }
    }
    Ok(psi)
}

/// `|<psi|phi>|` for unit vectors.
pub fn fidelity(psi: &[C64], phi: &[C64]) -> Result<f64> {
    if psi.len() != phi.len() {
        return Err(Error::DimensionMismatch {
            context: "fidelity operands",
            expected: psi.len(),
            found: phi.len(),
        });
    }
    check_normalized(psi)?;
    check_normalized(phi)?;
    Ok(inner(psi, phi).norm().min(1.0))
}

/// Coefficients `F_n(t_k)^dagger psi` of a state on level `n`'s frame.
pub fn level_coefficients(frame: &CMatrix, psi: &[C64]) -> Vec<C64> {
    frame.adjoint().mul_vec(psi)
}

/// Per grid point, the max norm of the projection of the state on level `n`
/// (normally a level that was empty initially).
pub fn excited_leakage(
    trajectory: &WaveTrajectory,
    spectrum: &SnapshotSpectrum,
    n: usize,
) -> Result<Vec<f64>> {
    if n >= spectrum.level_count() {
        return Err(Error::IndexOutOfRange {
            what: "level",
            index: n,
            len: spectrum.level_count(),
        });
    }
    if trajectory.states.len() != spectrum.grid().len() {
        return Err(Error::DimensionMismatch {
            context: "trajectory vs spectrum grid points",
            expected: spectrum.grid().len(),
            found: trajectory.states.len(),
        });
    }
    Ok(trajectory
        .states
        .iter()
        .enumerate()
        .map(|(k, psi)| {
            level_coefficients(spectrum.frame(n, k), psi)
                .iter()
                .fold(0.0, |m, z| m.max(z.norm()))
        })
        .collect())
}

/// `i hbar dpsi/dt - H psi` residual helper: `-i H psi / hbar`.
pub fn schrodinger_rhs(model: &dyn HamiltonianModel, t: f64, psi: &[C64]) -> Vec<C64> {
    let scale = -I / model.hbar();
    model
        .evaluate(t)
        .mul_vec(psi)
        .into_iter()
        .map(|z| z * scale)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{gamma_hamiltonian, SampledModel};
    use alloc::vec;

    #[test]
    fn stationary_state_picks_up_phase() {
        let h = CMatrix::diagonal(&[0.3, -1.2, 2.0]);
        let model =
            SampledModel::from_times(&[0.0, 5.0], vec![h.clone(), h], 1.0, 1e-10).unwrap();
        let grid = TimeGrid::new(0.0, 5.0, 100).unwrap();
        let psi0 = vec![C64::zero(), C64::new(1.0, 0.0), C64::zero()];
        let traj = propagate(&model, &psi0, &grid).unwrap();
        for (k, t) in grid.times().enumerate() {
            let want = C64::from_polar(1.0, 1.2 * t);
            assert!((traj.state(k)[1] - want).norm() < 1e-12);
            assert!(traj.state(k)[0].norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_unnormalized_start() {
        let m = gamma_hamiltonian(GammaParams::new(1.0, 0.1, 1.0, 1.0).unwrap()).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let psi0 = vec![C64::new(2.0, 0.0), C64::zero(), C64::zero(), C64::zero()];
        assert!(matches!(propagate(&m, &psi0, &grid), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn exact_starts_in_ground_vector() {
        let p = GammaParams::new(1.0, 0.3, 0.7, 10.0).unwrap();
        let c = gamma_exact(&p, 0.0).unwrap();
        assert_eq!(c.c, [C64::new(1.0, 0.0), C64::zero(), C64::zero(), C64::zero()]);
    }

    #[test]
    fn exact_static_field_is_pure_phase() {
        let p = GammaParams::new(1.0, 0.0, 0.7, 10.0).unwrap();
        for t in [0.5, 3.0, 9.0] {
            let c = gamma_exact(&p, t).unwrap();
            assert!((c.c[0] - C64::from_polar(1.0, 0.5 * t)).norm() < 1e-15);
            assert!(c.c[1..].iter().all(|z| z.norm() < 1e-15));
        }
    }

    #[test]
    fn exact_singular_when_w_equals_b_on_axis() {
        let p = GammaParams::new(1.0, 1.0, 0.0, 10.0).unwrap();
        assert!(matches!(
            gamma_exact(&p, 1.0),
            Err(Error::SingularGammaParameters { sign: '-', .. })
        ));
    }

    #[test]
    fn fidelity_of_identical_and_orthogonal() {
        let a = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let b = vec![C64::new(0.0, 0.8), C64::new(0.6, 0.0)];
        assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let orth = vec![C64::new(0.8, 0.0), C64::new(0.0, -0.6)];
        assert!(fidelity(&a, &orth).unwrap() < 1e-15);
        assert!(fidelity(&a, &b).is_ok());
        assert!(fidelity(&a, &[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).is_err());
    }
}
