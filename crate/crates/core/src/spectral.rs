//! Snapshot eigendecomposition along a time grid.
//!
//! Eigenvalues at each grid point are clustered into degenerate levels
//! (ascending energy, level 0 is the ground eigenspace). Eigensolver frames
//! carry an arbitrary gauge per point; before differentiating them they are
//! either parallel-transported ([`smooth_frames`]) or pinned to fixed
//! anchor vectors ([`anchor_frames`]). Both use the unitary factor of a polar
//! decomposition.
//!
//! Overlap blocks follow the convention
//! `M^{nm}[h][g] = <n^h(t)| d/dt m^g(t)>`, a `d_n x d_m` matrix.

use alloc::vec::Vec;


use crate::linalg::{eigh, polar_isometry, CMatrix, C64};
use crate::models::{HamiltonianModel, DEFAULT_HERMITICITY_TOL};
use crate::{Error, Result, TimeGrid};

/// Relative degeneracy tolerance (times `max |H|`).
pub const DEFAULT_GROUP_TOL: f64 = 1e-8;

/// Frames whose overlap has a singular value below this are treated as
/// unrelated; the grid is too coarse to follow them.
pub const MIN_FRAME_OVERLAP: f64 = 0.5;

const MIN_ANCHOR_OVERLAP: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct LevelStructure {
    multiplicities: Vec<usize>,
    /// `energies[n][k] = E_n(t_k)`.
    energies: Vec<Vec<f64>>,
}

impl LevelStructure {
    pub fn level_count(&self) -> usize {
        self.multiplicities.len()
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn multiplicity(&self, n: usize) -> usize {
        self.multiplicities[n]
    }

    pub fn energies(&self, n: usize) -> &[f64] {
        &self.energies[n]
    }

    pub fn energy(&self, n: usize, k: usize) -> f64 {
        self.energies[n][k]
    }

    /// `Delta_{nm}(t_k) = E_n(t_k) - E_m(t_k)`.
    pub fn gap(&self, n: usize, m: usize, k: usize) -> f64 {
        self.energies[n][k] - self.energies[m][k]
    }

    pub fn dimension(&self) -> usize {
        self.multiplicities.iter().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gauge {
    /// As returned by the eigensolver, point by point.
    Raw,
    ParallelTransport,
    Anchored,
}

#[derive(Clone, Debug)]
pub struct SnapshotSpectrum {
    grid: TimeGrid,
    hbar: f64,
    structure: LevelStructure,
    /// `frames[n][k]`: `N x d_n` orthonormal eigenvector columns.
    frames: Vec<Vec<CMatrix>>,
    gauge: Gauge,
}

impl SnapshotSpectrum {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn structure(&self) -> &LevelStructure {
        &self.structure
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    pub fn level_count(&self) -> usize {
        self.structure.level_count()
    }

    pub fn frame(&self, n: usize, k: usize) -> &CMatrix {
        &self.frames[n][k]
    }

    pub fn frames(&self, n: usize) -> &[CMatrix] {
        &self.frames[n]
    }

    /// Right-multiplies every frame of level `n` by the constant unitary `v`.
    pub fn regauged(&self, n: usize, v: &CMatrix) -> Self {
        let mut out = self.clone();
        for f in &mut out.frames[n] {
            *f = &*f * v;
        }
        out
    }

    /// `max ||F_n^dagger F_n - I||_max` over levels and points.
    pub fn orthonormality_error(&self) -> f64 {
        self.frames
            .iter()
            .flatten()
            .map(|f| f.unitarity_error())
            .fold(0.0, f64::max)
    }

    /// `max ||sum_n F_n F_n^dagger - I||_max` over points.
    pub fn completeness_error(&self) -> f64 {
        let n = self.structure.dimension();
        (0..self.grid.len())
            .map(|k| {
                let mut sum = CMatrix::zeros(n, n);
                for level in &self.frames {
                    let f = &level[k];
                    sum = &sum + &(f * &f.adjoint());
                }
                (&sum - &CMatrix::identity(n)).max_abs()
            })
            .fold(0.0, f64::max)
    }

    /// `max ||H F_n - E_n F_n||_max / ||H||_max` over levels and points.
    pub fn residual_error(&self, model: &dyn HamiltonianModel) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, t) in self.grid.times().enumerate() {
            let h = model.evaluate(t);
            let scale = h.max_abs().max(f64::MIN_POSITIVE);
            for (n, level) in self.frames.iter().enumerate() {
                let f = &level[k];
                let r = &(&h * f) - &f.scale_real(self.structure.energy(n, k));
                worst = worst.max(r.max_abs() / scale);
            }
        }
        worst
    }

    /// Largest `||F_n(t_{k+1}) - F_n(t_k)||_max` over levels and steps.
    pub fn max_frame_step(&self) -> f64 {
        self.frames
            .iter()
            .flat_map(|level| level.windows(2).map(|w| (&w[1] - &w[0]).max_abs()))
            .fold(0.0, f64::max)
    }
}

/// Diagonalizes `model` at every grid point and groups eigenvalues into
/// degenerate levels. Frames are left in the eigensolver's gauge.
pub fn snapshot_decompose(
    model: &dyn HamiltonianModel,
    grid: &TimeGrid,
    group_tol: f64,
) -> Result<SnapshotSpectrum> {
    let dim = model.dimension();
    if dim < 2 {
        return Err(Error::invalid("dimension", "at least a two-level system is required"));
    }
    if !(group_tol >= 0.0) {
        return Err(Error::invalid("group_tol", "must be non-negative"));
    }

    let mut multiplicities: Option<Vec<usize>> = None;
    let mut energies: Vec<Vec<f64>> = Vec::new();
    let mut frames: Vec<Vec<CMatrix>> = Vec::new();

    for (k, t) in grid.times().enumerate() {
        crate::models::check_hermitian(model, t, DEFAULT_HERMITICITY_TOL)?;
        let h = model.evaluate(t);
        if h.rows() != dim || h.cols() != dim {
            return Err(Error::DimensionMismatch {
                context: "model matrix shape",
                expected: dim,
                found: h.rows(),
            });
        }
        let eig = eigh(&h)?;
        let abs_tol = group_tol * h.max_abs();
        let clusters = cluster(&eig.values, abs_tol);
        let mults: Vec<usize> = clusters.iter().map(|c| c.len()).collect();

        match &multiplicities {
            None => {
                energies = clusters.iter().map(|_| Vec::with_capacity(grid.len())).collect();
                frames = clusters.iter().map(|_| Vec::with_capacity(grid.len())).collect();
                multiplicities = Some(mults);
            }
            Some(prev) if *prev != mults => {
                return Err(Error::MultiplicityChange {
                    k_prev: k - 1,
                    k_next: k,
                    t_prev: grid.time(k - 1),
                    t_next: t,
                    before: prev.clone(),
                    after: mults,
                });
            }
            Some(_) => {}
        }

        for (n, range) in clusters.iter().enumerate() {
            let mean = eig.values[range.clone()].iter().sum::<f64>() / range.len() as f64;
            energies[n].push(mean);
            frames[n].push(eig.vectors.column_block(range.start, range.end));
        }
    }

    Ok(SnapshotSpectrum {
        grid: *grid,
        hbar: model.hbar(),
        structure: LevelStructure {
            multiplicities: multiplicities.unwrap_or_default(),
            energies,
        },
        frames,
        gauge: Gauge::Raw,
    })
}

fn cluster(values: &[f64], abs_tol: f64) -> Vec<core::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..values.len() {
        if values[i] - values[i - 1] > abs_tol {
            out.push(start..i);
            start = i;
        }
    }
    out.push(start..values.len());
    out
}

/// Discrete parallel transport: each frame is rotated within its eigenspace
/// to be maximally aligned with its predecessor. The first frame is kept.
pub fn smooth_frames(spectrum: SnapshotSpectrum) -> Result<SnapshotSpectrum> {
    let mut spectrum = spectrum;
    for (n, level) in spectrum.frames.iter_mut().enumerate() {
        align_frame_sequence(level).map_err(|e| match e {
            Error::FrameOverlapSingular { k, sigma_min, .. } => Error::FrameOverlapSingular {
                level: n,
                k,
                sigma_min,
            },
            other => other,
        })?;
    }
    spectrum.gauge = Gauge::ParallelTransport;
    Ok(spectrum)
}

/// In-place alignment scan over one level's frames,
/// `F_{k+1} <- F_{k+1} polar(F_{k+1}^dagger F_k)`.
pub fn align_frame_sequence(frames: &mut [CMatrix]) -> Result<()> {
    for k in 0..frames.len().saturating_sub(1) {
        let overlap = frames[k + 1].adjoint_mul(&frames[k]);
        let (w, sigma_min) = polar_isometry(&overlap)?;
        if sigma_min < MIN_FRAME_OVERLAP {
            return Err(Error::FrameOverlapSingular {
                level: 0,
                k,
                sigma_min,
            });
        }
        frames[k + 1] = &frames[k + 1] * &w;
    }
    Ok(())
}

/// Pins every frame to the model's reference gauge: level `n` becomes the
/// orthonormalized projection `P_n Q_n (Q_n^dagger P_n Q_n)^{-1/2}` of its
/// anchor matrix `Q_n`.
pub fn anchor_frames(spectrum: SnapshotSpectrum, anchors: &[CMatrix]) -> Result<SnapshotSpectrum> {
    let mut spectrum = spectrum;
    if anchors.len() != spectrum.level_count() {
        return Err(Error::DimensionMismatch {
            context: "gauge anchors vs levels",
            expected: spectrum.level_count(),
            found: anchors.len(),
        });
    }
    let dim = spectrum.structure.dimension();
    for (n, (level, anchor)) in spectrum.frames.iter_mut().zip(anchors).enumerate() {
        let d = spectrum.structure.multiplicities[n];
        if anchor.rows() != dim || anchor.cols() != d {
            return Err(Error::DimensionMismatch {
                context: "gauge anchor shape",
                expected: d,
                found: anchor.cols(),
            });
        }
        for (k, frame) in level.iter_mut().enumerate() {
            let overlap = frame.adjoint_mul(anchor);
            let (w, sigma_min) = polar_isometry(&overlap)?;
            if sigma_min < MIN_ANCHOR_OVERLAP {
                return Err(Error::AnchorDegenerate { level: n, k });
            }
            *frame = &*frame * &w;
        }
    }
    spectrum.gauge = Gauge::Anchored;
    Ok(spectrum)
}

#[derive(Clone, Copy)]
pub enum OverlapMethod<'a> {
    /// Second-order differences of the (gauge-fixed) frames.
    FiniteDifference,
    /// `<n^h|dH/dt|m^g> / (E_m - E_n)`; only for `n != m`.
    Hdot(&'a dyn HamiltonianModel),
}

#[derive(Clone, Debug, PartialEq)]
pub struct OverlapBlock {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    /// `d_n x d_m`, units of 1/time.
    pub entries: CMatrix,
}

impl OverlapBlock {
    /// `A^{nm} = conj(M^{nm})`.
    pub fn connection(&self) -> CMatrix {
        self.entries.conj()
    }
}

fn check_indices(spectrum: &SnapshotSpectrum, n: usize, m: usize, k: usize) -> Result<()> {
    let levels = spectrum.level_count();
    for idx in [n, m] {
        if idx >= levels {
            return Err(Error::IndexOutOfRange {
                what: "level",
                index: idx,
                len: levels,
            });
        }
    }
    if k >= spectrum.grid.len() {
        return Err(Error::IndexOutOfRange {
            what: "grid point",
            index: k,
            len: spectrum.grid.len(),
        });
    }
    Ok(())
}

/// Time derivative of level `m`'s frame at grid point `k`, second order
/// everywhere (one-sided at the ends).
pub fn frame_derivative(spectrum: &SnapshotSpectrum, m: usize, k: usize) -> CMatrix {
    let f = &spectrum.frames[m];
    let last = f.len() - 1;
    let inv = 1.0 / (2.0 * spectrum.grid.dt());
    let diff = if k == 0 {
        &(&f[1].scale_real(4.0) - &f[0].scale_real(3.0)) - &f[2]
    } else if k == last {
        &(&f[last].scale_real(3.0) - &f[last - 1].scale_real(4.0)) + &f[last - 2]
    } else {
        &f[k + 1] - &f[k - 1]
    };
    diff.scale_real(inv)
}

pub fn overlap_block(
    spectrum: &SnapshotSpectrum,
    n: usize,
    m: usize,
    k: usize,
    method: OverlapMethod<'_>,
) -> Result<OverlapBlock> {
    check_indices(spectrum, n, m, k)?;
    let entries = match method {
        OverlapMethod::FiniteDifference => {
            let dm = frame_derivative(spectrum, m, k);
            spectrum.frames[n][k].adjoint_mul(&dm)
        }
        OverlapMethod::Hdot(model) => {
            if n == m {
                return Err(Error::IntraLevelHdot { level: n });
            }
            let hdot = model
                .derivative(spectrum.grid.time(k))
                .ok_or(Error::MissingDerivative)?;
            let gap = spectrum.structure.gap(m, n, k);
            if gap == 0.0 {
                return Err(Error::ZeroGap { n, m, k });
            }
            let fm = &spectrum.frames[m][k];
            spectrum.frames[n][k]
                .adjoint_mul(&(&hdot * fm))
                .scale(C64::new(1.0 / gap, 0.0))
        }
    };
    Ok(OverlapBlock { n, m, k, entries })
}

/// `M^{nm}(t_k)` by finite differences for every grid point.
pub fn overlap_series(spectrum: &SnapshotSpectrum, n: usize, m: usize) -> Result<Vec<CMatrix>> {
    (0..spectrum.grid.len())
        .map(|k| overlap_block(spectrum, n, m, k, OverlapMethod::FiniteDifference).map(|b| b.entries))
        .collect()
}
