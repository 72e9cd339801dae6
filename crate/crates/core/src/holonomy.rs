//! Dynamical phases, Wilczek-Zee holonomies and the degenerate adiabatic state.
//!
//! Within level `n` the adiabatic coefficients form rows of a unitary
//! `U^n(t)` that obeys `dU/dt = U A^{nn}` with `A^{nn} = conj(M^{nn})`, so
//! `U^n(t) = U^n(0) T exp(int_0^t A^{nn})` with later times to the right.
//! The time-ordered exponential is a product of midpoint single-step
//! exponentials, each exactly unitary.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::linalg::{exp_anti_hermitian, unitarize, CMatrix, C64};
use crate::spectral::{overlap_series, SnapshotSpectrum};
use crate::{Error, Result, TimeGrid};

/// Unitarity tolerance for user-supplied initial holonomies.
pub const UNITARY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolonomyOptions {
    /// Polar re-projection period in steps; 0 disables it.
    pub reunitarize_every: usize,
    /// Allowed `max |A + A^dagger|`, relative to `max(1, max |A|)`.
    pub anti_hermitian_tol: f64,
}

impl Default for HolonomyOptions {
    fn default() -> Self {
        HolonomyOptions {
            reunitarize_every: 1000,
            anti_hermitian_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Holonomy {
    level: usize,
    grid: TimeGrid,
    values: Vec<CMatrix>,
}

impl Holonomy {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn initial(&self) -> &CMatrix {
        &self.values[0]
    }

    pub fn at(&self, k: usize) -> &CMatrix {
        &self.values[k]
    }

    pub fn values(&self) -> &[CMatrix] {
        &self.values
    }

    pub fn last(&self) -> &CMatrix {
        self.values.last().expect("holonomy has at least one value")
    }

    /// Largest `max |U^dagger U - I|` over the grid.
    pub fn unitarity_drift(&self) -> f64 {
        self.values
            .iter()
            .map(CMatrix::unitarity_error)
            .fold(0.0, f64::max)
    }
}

/// `omega_n(t_k) = int_0^{t_k} E_n dt / hbar` by the trapezoid rule.
pub fn dynamical_phase(spectrum: &SnapshotSpectrum, n: usize, k: usize) -> f64 {
    let e = spectrum.structure().energies(n);
    let dt = spectrum.grid().dt();
    let sum: f64 = e[..=k].windows(2).map(|w| 0.5 * (w[0] + w[1])).sum();
    sum * dt / spectrum.hbar()
}

/// All `omega_n(t_k)` for one level.
pub fn dynamical_phases(spectrum: &SnapshotSpectrum, n: usize) -> Vec<f64> {
    let e = spectrum.structure().energies(n);
    let scale = spectrum.grid().dt() / spectrum.hbar();
    let mut out = Vec::with_capacity(e.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in e.windows(2) {
        acc += 0.5 * (w[0] + w[1]) * scale;
        out.push(acc);
    }
    out
}

/// Accumulates `U(t_{k+1}) = U(t_k) exp(A(t_{k+1/2}) dt)` from intra-level
/// blocks `M^{nn}(t_k)`, with `A` the conjugate of the averaged neighbouring
/// blocks.
pub fn wz_holonomy(
    level: usize,
    grid: &TimeGrid,
    blocks: &[CMatrix],
    u0: &CMatrix,
    options: HolonomyOptions,
) -> Result<Holonomy> {
    if blocks.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            context: "overlap blocks vs grid points",
            expected: grid.len(),
            found: blocks.len(),
        });
    }
    let d = u0.rows();
    if !u0.is_square() || blocks.iter().any(|b| b.rows() != d || b.cols() != d) {
        return Err(Error::DimensionMismatch {
            context: "holonomy block size",
            expected: d,
            found: blocks.iter().map(CMatrix::rows).find(|&r| r != d).unwrap_or(u0.cols()),
        });
    }
    let drift = u0.unitarity_error();
    if drift > UNITARY_TOL {
        return Err(Error::NotUnitary { deviation: drift });
    }

    let dt = grid.dt();
    let mut values = Vec::with_capacity(grid.len());
    values.push(u0.clone());
    let mut u = u0.clone();
    for step in 0..grid.steps() {
        let a = (&blocks[step] + &blocks[step + 1]).scale_real(0.5).conj();
        let dev = a.anti_hermiticity_error();
        if dev > options.anti_hermitian_tol * a.max_abs().max(1.0) {
            return Err(Error::NotAntiHermitian { step, deviation: dev });
        }
        u = &u * &exp_anti_hermitian(&a, dt)?;
        if options.reunitarize_every > 0 && (step + 1) % options.reunitarize_every == 0 {
            u = unitarize(&u)?;
        }
        values.push(u.clone());
    }
    Ok(Holonomy {
        level,
        grid: *grid,
        values,
    })
}

/// Holonomy of level `n` from finite-difference blocks of a gauge-fixed
/// spectrum.
pub fn level_holonomy(
    spectrum: &SnapshotSpectrum,
    n: usize,
    u0: &CMatrix,
    options: HolonomyOptions,
) -> Result<Holonomy> {
    let blocks = overlap_series(spectrum, n, n)?;
    wz_holonomy(n, spectrum.grid(), &blocks, u0, options)
}

#[derive(Clone, Debug)]
pub struct DaaState {
    grid: TimeGrid,
    amplitudes: Vec<C64>,
    row: usize,
    /// `coefficients[k][n][g]`, the weight of `|n^g(t_k)>`.
    coefficients: Vec<Vec<Vec<C64>>>,
    vectors: Vec<Vec<C64>>,
}

impl DaaState {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn row(&self) -> usize {
        self.row
    }

    pub fn coefficients(&self, k: usize) -> &[Vec<C64>] {
        &self.coefficients[k]
    }

    /// Assembled state at grid point `k` in the lab basis.
    pub fn vector(&self, k: usize) -> &[C64] {
        &self.vectors[k]
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }
}

/// `|Psi0(t)> = sum_n e^{-i omega_n(t)} b_n(0) sum_g [U^n(t)]_{row,g} |n^g(t)>`.
///
/// `holonomies[n]` may be `None` for levels with `b_n(0) = 0`.
pub fn daa_state(
    spectrum: &SnapshotSpectrum,
    holonomies: &[Option<Holonomy>],
    amplitudes: &[C64],
    row: usize,
) -> Result<DaaState> {
    let levels = spectrum.level_count();
    if amplitudes.len() != levels {
        return Err(Error::DimensionMismatch {
            context: "initial amplitudes vs levels",
            expected: levels,
            found: amplitudes.len(),
        });
    }
    if holonomies.len() != levels {
        return Err(Error::DimensionMismatch {
            context: "holonomies vs levels",
            expected: levels,
            found: holonomies.len(),
        });
    }
    let norm = amplitudes.iter().map(|b| b.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { norm });
    }

    let grid = *spectrum.grid();
    let dim = spectrum.structure().dimension();
    let mut active = Vec::new();
    for n in 0..levels {
        if amplitudes[n].is_zero() {
            continue;
        }
        let hol = holonomies[n]
            .as_ref()
            .ok_or_else(|| Error::invalid("holonomies", "missing holonomy for a populated level"))?;
        if hol.values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                context: "holonomy vs grid points",
                expected: grid.len(),
                found: hol.values.len(),
            });
        }
        let d = spectrum.structure().multiplicity(n);
        if row >= d {
            return Err(Error::IndexOutOfRange {
                what: "initial-condition row",
                index: row,
                len: d,
            });
        }
        active.push((n, hol, dynamical_phases(spectrum, n)));
    }

    let mut coefficients = Vec::with_capacity(grid.len());
    let mut vectors = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let mut coeff_k: Vec<Vec<C64>> = (0..levels)
            .map(|n| alloc::vec![C64::zero(); spectrum.structure().multiplicity(n)])
            .collect();
        let mut psi = alloc::vec![C64::zero(); dim];
        for (n, hol, phases) in &active {
            let prefactor = C64::from_polar(1.0, -phases[k]) * amplitudes[*n];
            let u = &hol.values[k];
            let frame = spectrum.frame(*n, k);
            for g in 0..u.cols() {
                let c = prefactor * u[(row, g)];
                coeff_k[*n][g] = c;
                for (i, p) in psi.iter_mut().enumerate() {
                    *p += c * frame[(i, g)];
                }
            }
        }
        coefficients.push(coeff_k);
        vectors.push(psi);
    }

    Ok(DaaState {
        grid,
        amplitudes: amplitudes.to_vec(),
        row,
        coefficients,
        vectors,
    })
}
