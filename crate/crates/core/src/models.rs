//! Hamiltonian sources.
//!
//! [`GammaModel`] is the four-level Dirac-matrix system in a magnetic field of
//! constant magnitude rotating about `z`, `H(t) = (hbar b / 2) r(t) . Gamma`
//! with `r(t) = (sin(theta) cos(wt), sin(theta) sin(wt), cos(theta))` and
//! `Gamma_j = sigma_x ⊗ sigma_j`. Its spectrum is `±hbar b / 2`, each doubly
//! degenerate, at every time.
//!
//! [`SampledModel`] linearly interpolates a schedule of Hermitian matrices.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{CMatrix, C64, I};
use crate::{Error, Result, TimeGrid};

pub const DEFAULT_HERMITICITY_TOL: f64 = 1e-10;

/// A time-dependent Hermitian Hamiltonian.
///
/// Implementations are immutable and shareable across threads.
pub trait HamiltonianModel: Send + Sync {
    fn dimension(&self) -> usize;

    fn hbar(&self) -> f64;

    fn evaluate(&self, t: f64) -> CMatrix;

    /// `dH/dt`, when the model can supply it.
    fn derivative(&self, t: f64) -> Option<CMatrix>;

    /// Fixed lab-frame vectors, one `N x d_n` matrix per level (ascending
    /// energy), whose projections onto each eigenspace define the model's
    /// reference eigenframes. `None` means the model has no preferred gauge.
    fn gauge_anchors(&self) -> Option<Vec<CMatrix>> {
        None
    }
}

fn pauli() -> [CMatrix; 3] {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    [
        CMatrix::from_row_major(2, 2, vec![zero, one, one, zero]).unwrap(),
        CMatrix::from_row_major(2, 2, vec![zero, -I, I, zero]).unwrap(),
        CMatrix::from_row_major(2, 2, vec![one, zero, zero, -one]).unwrap(),
    ]
}

/// `(Gamma_x, Gamma_y, Gamma_z)` with `Gamma_j = sigma_x ⊗ sigma_j`.
pub fn gamma_matrices() -> [CMatrix; 3] {
    let [sx, sy, sz] = pauli();
    [sx.kron(&sx), sx.kron(&sy), sx.kron(&sz)]
}

/// `Pi_k = I_2 ⊗ sigma_k`, the matrices appearing in `[Gamma_i, Gamma_j]`.
pub fn pi_matrices() -> [CMatrix; 3] {
    let id = CMatrix::identity(2);
    let [sx, sy, sz] = pauli();
    [id.kron(&sx), id.kron(&sy), id.kron(&sz)]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaParams {
    /// Coupling angular frequency.
    pub b: f64,
    /// Field rotation angular frequency. Zero gives a static field.
    pub w: f64,
    /// Polar angle of the field.
    pub theta: f64,
    pub hbar: f64,
    /// Evolution time `T`.
    pub total_time: f64,
}

impl GammaParams {
    /// Parameters with `hbar = 1`.
    pub fn new(b: f64, w: f64, theta: f64, total_time: f64) -> Result<Self> {
        let p = GammaParams {
            b,
            w,
            theta,
            hbar: 1.0,
            total_time,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with the conventional evolution time `T = 1/w`, so `w t <= 1`.
    pub fn with_natural_time(b: f64, w: f64, theta: f64) -> Result<Self> {
        if !(w > 0.0) {
            return Err(Error::invalid("w", "T = 1/w needs w > 0"));
        }
        Self::new(b, w, theta, 1.0 / w)
    }

    pub fn with_hbar(mut self, hbar: f64) -> Result<Self> {
        self.hbar = hbar;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::invalid("b", "must be positive"));
        }
        if !(self.w >= 0.0 && self.w.is_finite()) {
            return Err(Error::invalid("w", "must be non-negative"));
        }
        if !(0.0..=core::f64::consts::PI).contains(&self.theta) {
            return Err(Error::invalid("theta", "must lie in [0, pi]"));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::invalid("hbar", "must be positive"));
        }
        if !(self.total_time > 0.0 && self.total_time.is_finite()) {
            return Err(Error::invalid("total_time", "must be positive"));
        }
        Ok(())
    }

    /// Unit field direction at time `t`.
    pub fn direction(&self, t: f64) -> [f64; 3] {
        let (s, c) = self.theta.sin_cos();
        let (swt, cwt) = (self.w * t).sin_cos();
        [s * cwt, s * swt, c]
    }
}

#[derive(Clone, Debug)]
pub struct GammaModel {
    params: GammaParams,
    gammas: [CMatrix; 3],
}

pub fn gamma_hamiltonian(params: GammaParams) -> Result<GammaModel> {
    params.validate()?;
    Ok(GammaModel {
        params,
        gammas: gamma_matrices(),
    })
}

impl GammaModel {
    pub fn params(&self) -> &GammaParams {
        &self.params
    }

    /// `r(t) . Gamma`, which squares to the identity.
    fn field_operator(&self, t: f64) -> CMatrix {
        let r = self.params.direction(t);
        let [gx, gy, gz] = &self.gammas;
        &(&gx.scale_real(r[0]) + &gy.scale_real(r[1])) + &gz.scale_real(r[2])
    }

    /// Reference eigenframe of `level` (0: energy `-hbar b/2`, 1: `+hbar b/2`):
    /// the projections of the gauge anchors, which here are already
    /// orthonormal after scaling by `sqrt(2)`.
    pub fn reference_frame(&self, level: usize, t: f64) -> CMatrix {
        let rg = self.field_operator(t);
        let sign = if level == 0 { -1.0 } else { 1.0 };
        let projector = (&CMatrix::identity(4) + &rg.scale_real(sign)).scale_real(0.5);
        let anchors = &gamma_anchors()[level.min(1)];
        (&projector * anchors).scale_real(core::f64::consts::SQRT_2)
    }
}

// Anchors e_1, e_0 for the ground level and -e_1, -e_0 for the excited level
// reproduce the snapshot basis in which the closed-form solution is written.
fn gamma_anchors() -> [CMatrix; 2] {
    let ground = CMatrix::from_fn(4, 2, |i, j| {
        if (i, j) == (1, 0) || (i, j) == (0, 1) {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let excited = ground.scale_real(-1.0);
    [ground, excited]
}

impl HamiltonianModel for GammaModel {
    fn dimension(&self) -> usize {
        4
    }

    fn hbar(&self) -> f64 {
        self.params.hbar
    }

    fn evaluate(&self, t: f64) -> CMatrix {
        let p = &self.params;
        self.field_operator(t).scale_real(0.5 * p.hbar * p.b)
    }

    fn derivative(&self, t: f64) -> Option<CMatrix> {
        let p = &self.params;
        let s = p.theta.sin();
        let (swt, cwt) = (p.w * t).sin_cos();
        let [gx, gy, _] = &self.gammas;
        let dir = &gx.scale_real(-swt) + &gy.scale_real(cwt);
        Some(dir.scale_real(0.5 * p.hbar * p.b * p.w * s))
    }

    fn gauge_anchors(&self) -> Option<Vec<CMatrix>> {
        Some(gamma_anchors().to_vec())
    }
}

/// Hamiltonian given by Hermitian samples on a uniform time grid, linearly
/// interpolated in between; `dH/dt` comes from second-order finite
/// differences at the nodes, interpolated the same way.
#[derive(Clone, Debug)]
pub struct SampledModel {
    t_start: f64,
    dt: f64,
    samples: Vec<CMatrix>,
    derivatives: Vec<CMatrix>,
    hbar: f64,
    hermiticity_tol: f64,
}

/// Builds a sampled model on `grid` (one sample per grid point) with
/// `hbar = 1` and the default hermiticity tolerance.
pub fn sampled_model(grid: &TimeGrid, samples: Vec<CMatrix>) -> Result<SampledModel> {
    if samples.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            context: "sample count vs grid points",
            expected: grid.len(),
            found: samples.len(),
        });
    }
    SampledModel::uniform(grid.t_start(), grid.dt(), samples, 1.0, DEFAULT_HERMITICITY_TOL)
}

impl SampledModel {
    /// Samples at `t_start + k dt`, `k = 0..samples.len()`; at least two.
    pub fn uniform(
        t_start: f64,
        dt: f64,
        samples: Vec<CMatrix>,
        hbar: f64,
        hermiticity_tol: f64,
    ) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid("samples", "at least two samples are required"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", "sample spacing must be positive"));
        }
        if !(hbar > 0.0) {
            return Err(Error::invalid("hbar", "must be positive"));
        }
        let n = samples[0].rows();
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        for (k, s) in samples.iter().enumerate() {
            if s.rows() != n || s.cols() != n {
                return Err(Error::DimensionMismatch {
                    context: "sample matrix shape",
                    expected: n,
                    found: if s.rows() != n { s.rows() } else { s.cols() },
                });
            }
            let dev = s.hermiticity_error();
            if dev > hermiticity_tol {
                return Err(Error::NotHermitian {
                    deviation: dev,
                    tolerance: hermiticity_tol,
                    context: format!("(sample {k})"),
                });
            }
        }
        let derivatives = node_derivatives(&samples, dt);
        Ok(SampledModel {
            t_start,
            dt,
            samples,
            derivatives,
            hbar,
            hermiticity_tol,
        })
    }

    /// Samples at arbitrary but uniformly spaced `times`.
    pub fn from_times(
        times: &[f64],
        samples: Vec<CMatrix>,
        hbar: f64,
        hermiticity_tol: f64,
    ) -> Result<Self> {
        if times.len() != samples.len() {
            return Err(Error::DimensionMismatch {
                context: "times vs matrices",
                expected: times.len(),
                found: samples.len(),
            });
        }
        if times.len() < 2 {
            return Err(Error::invalid("times", "at least two sample times are required"));
        }
        let t0 = times[0];
        let span = times[times.len() - 1] - t0;
        let dt = span / (times.len() - 1) as f64;
        if !(dt > 0.0) {
            return Err(Error::invalid("times", "must be strictly increasing"));
        }
        for (k, &t) in times.iter().enumerate() {
            if (t - (t0 + k as f64 * dt)).abs() > 1e-9 * span.abs().max(1.0) {
                return Err(Error::invalid("times", "sample times must be uniformly spaced"));
            }
        }
        Self::uniform(t0, dt, samples, hbar, hermiticity_tol)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + (self.samples.len() - 1) as f64 * self.dt
    }

    pub fn hermiticity_tol(&self) -> f64 {
        self.hermiticity_tol
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let last = self.samples.len() - 1;
        let x = ((t - self.t_start) / self.dt).clamp(0.0, last as f64);
        let k = (x.floor() as usize).min(last - 1);
        (k, x - k as f64)
    }

    fn lerp(nodes: &[CMatrix], k: usize, frac: f64) -> CMatrix {
        &nodes[k].scale_real(1.0 - frac) + &nodes[k + 1].scale_real(frac)
    }
}

fn node_derivatives(samples: &[CMatrix], dt: f64) -> Vec<CMatrix> {
    let n = samples.len();
    if n == 2 {
        let d = (&samples[1] - &samples[0]).scale_real(1.0 / dt);
        return vec![d.clone(), d];
    }
    let inv = 1.0 / (2.0 * dt);
    (0..n)
        .map(|k| {
            if k == 0 {
                let s = &(&samples[1].scale_real(4.0) - &samples[0].scale_real(3.0)) - &samples[2];
                s.scale_real(inv)
            } else if k == n - 1 {
                let s = &(&samples[k].scale_real(3.0) - &samples[k - 1].scale_real(4.0))
                    + &samples[k - 2];
                s.scale_real(inv)
            } else {
                (&samples[k + 1] - &samples[k - 1]).scale_real(inv)
            }
        })
        .collect()
}

impl HamiltonianModel for SampledModel {
    fn dimension(&self) -> usize {
        self.samples[0].rows()
    }

    fn hbar(&self) -> f64 {
        self.hbar
    }

    fn evaluate(&self, t: f64) -> CMatrix {
        let (k, frac) = self.locate(t);
        Self::lerp(&self.samples, k, frac)
    }

    fn derivative(&self, t: f64) -> Option<CMatrix> {
        let (k, frac) = self.locate(t);
        Some(Self::lerp(&self.derivatives, k, frac))
    }
}

/// Checks `max |H - H^dagger| <= tol` at time `t`.
pub fn check_hermitian(model: &dyn HamiltonianModel, t: f64, tol: f64) -> Result<()> {
    let h = model.evaluate(t);
    let dev = h.hermiticity_error();
    if dev > tol {
        return Err(Error::NotHermitian {
            deviation: dev,
            tolerance: tol,
            context: format!("(t = {t})"),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigh;
    use core::f64::consts::PI;

    #[test]
    fn gamma_squares_to_identity() {
        for g in gamma_matrices() {
            assert_eq!(&g * &g, CMatrix::identity(4));
        }
    }

    #[test]
    fn gamma_xy_commutator_is_two_i_pi_z() {
        let [gx, gy, _] = gamma_matrices();
        let [_, _, pz] = pi_matrices();
        assert_eq!(gx.commutator(&gy), pz.scale(I * 2.0));
    }

    #[test]
    fn gamma_z_hermitian_traceless() {
        let gz = &gamma_matrices()[2];
        assert_eq!(gz.hermiticity_error(), 0.0);
        assert_eq!(gz.trace(), C64::new(0.0, 0.0));
    }

    #[test]
    fn theta_zero_is_half_b_gamma_z() {
        let p = GammaParams::new(1.3, 0.4, 0.0, 10.0).unwrap();
        let m = gamma_hamiltonian(p).unwrap();
        let expected = gamma_matrices()[2].scale_real(0.65);
        for t in [0.0, 1.7, 9.0] {
            assert!((&m.evaluate(t) - &expected).max_abs() < 1e-15);
        }
        let e = eigh(&m.evaluate(2.0)).unwrap();
        for (v, want) in e.values.iter().zip([-0.65, -0.65, 0.65, 0.65]) {
            assert!((v - want).abs() < 1e-14);
        }
    }

    #[test]
    fn static_field_when_w_is_zero() {
        let p = GammaParams::new(1.0, 0.0, 1.1, 5.0).unwrap();
        let m = gamma_hamiltonian(p).unwrap();
        assert_eq!(m.evaluate(3.3), m.evaluate(0.0));
    }

    #[test]
    fn analytic_derivative_matches_central_difference() {
        let p = GammaParams::new(1.0, 0.7, 0.9, 10.0).unwrap();
        let m = gamma_hamiltonian(p).unwrap();
        let h = 1e-5;
        let fd = (&m.evaluate(2.0 + h) - &m.evaluate(2.0 - h)).scale_real(0.5 / h);
        assert!((&fd - &m.derivative(2.0).unwrap()).max_abs() < 1e-9);
    }

    #[test]
    fn reference_frames_are_orthonormal_eigenvectors() {
        let p = GammaParams::new(1.0, 0.3, 2.0, 10.0).unwrap();
        let m = gamma_hamiltonian(p).unwrap();
        let t = 4.2;
        let h = m.evaluate(t);
        for (level, e) in [(0usize, -0.5), (1, 0.5)] {
            let f = m.reference_frame(level, t);
            assert!(f.unitarity_error() < 1e-15);
            let resid = &(&h * &f) - &f.scale_real(e);
            assert!(resid.max_abs() < 1e-15);
        }
    }

    #[test]
    fn params_validation() {
        assert!(GammaParams::new(0.0, 0.1, 1.0, 1.0).is_err());
        assert!(GammaParams::new(1.0, -0.1, 1.0, 1.0).is_err());
        assert!(GammaParams::new(1.0, 0.1, PI + 0.01, 1.0).is_err());
        assert!(GammaParams::new(1.0, 0.1, 1.0, 0.0).is_err());
        assert!(GammaParams::new(1.0, 0.1, 1.0, 1.0).unwrap().with_hbar(0.0).is_err());
        assert!(GammaParams::with_natural_time(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn constant_samples_give_constant_model() {
        let h = CMatrix::diagonal(&[0.0, 1.0]);
        let m = SampledModel::from_times(&[0.0, 1.0], vec![h.clone(), h.clone()], 1.0, 1e-10)
            .unwrap();
        assert_eq!(m.evaluate(0.37), h);
        assert_eq!(m.derivative(0.37).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn ragged_sample_dimension_rejected() {
        let grid = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let samples = vec![CMatrix::identity(4), CMatrix::identity(3), CMatrix::identity(4)];
        assert!(matches!(
            sampled_model(&grid, samples),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn non_hermitian_sample_rejected() {
        let mut bad = CMatrix::identity(2);
        bad[(0, 1)] = C64::new(1e-6, 0.0);
        let grid = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let samples = vec![CMatrix::identity(2), bad, CMatrix::identity(2)];
        assert!(matches!(
            sampled_model(&grid, samples),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn nonuniform_times_rejected() {
        let h = CMatrix::identity(2);
        assert!(SampledModel::from_times(&[0.0, 0.1, 0.3], vec![h.clone(), h.clone(), h], 1.0, 1e-10)
            .is_err());
    }
}
