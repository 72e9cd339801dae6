//! Small dense complex linear algebra.
//!
//! Matrices in this crate are tiny (the Hilbert space dimension, or a
//! degenerate block of it), so everything is row-major `Vec` storage and the
//! Hermitian eigensolver is cyclic Jacobi, which keeps eigenvectors
//! orthonormal to machine precision.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::{Error, Result};

pub type C64 = Complex<f64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C64::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "row-major matrix data",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                C64::zero()
            }
        })
    }

    /// Column matrix from a vector.
    pub fn column_vector(v: &[C64]) -> Self {
        CMatrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Columns `start..end` as a new matrix.
    pub fn column_block(&self, start: usize, end: usize) -> Self {
        Self::from_fn(self.rows, end - start, |i, j| self[(i, start + j)])
    }

    pub fn hstack(blocks: &[&CMatrix]) -> Self {
        let rows = blocks.first().map_or(0, |b| b.rows);
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut offset = 0;
        for b in blocks {
            for i in 0..rows {
                for j in 0..b.cols {
                    out[(i, offset + j)] = b[(i, j)];
                }
            }
            offset += b.cols;
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    /// `self^dagger * other` without forming the adjoint.
    pub fn adjoint_mul(&self, other: &CMatrix) -> Self {
        assert_eq!(self.rows, other.rows, "adjoint_mul shape mismatch");
        let mut out = Self::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self[(k, i)].conj();
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(C64::zero(), |acc, (a, x)| acc + a * x)
            })
            .collect()
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest absolute entry. Errors on an empty matrix.
    pub fn max_norm(&self) -> Result<f64> {
        max_norm(self)
    }

    /// Maximum column sum of absolute entries. Errors on an empty matrix.
    pub fn one_norm(&self) -> Result<f64> {
        one_norm(self)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Sum of absolute values of all entries.
    pub fn entry_abs_sum(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).sum()
    }

    /// `max |a_ij|`, or 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// `max |H - H^dagger|`.
    pub fn hermiticity_error(&self) -> f64 {
        debug_assert!(self.is_square());
        let mut err: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                err = err.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        err
    }

    /// `max |A + A^dagger|`.
    pub fn anti_hermiticity_error(&self) -> f64 {
        debug_assert!(self.is_square());
        let mut err: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                err = err.max((self[(i, j)] + self[(j, i)].conj()).norm());
            }
        }
        err
    }

    /// `max |U^dagger U - I|`; for an N x d isometry this checks column orthonormality.
    pub fn unitarity_error(&self) -> f64 {
        let g = self.adjoint_mul(self);
        (&g - &Self::identity(g.rows)).max_abs()
    }

    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    pub fn anti_hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] - self[(j, i)].conj()) * 0.5
        })
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &CMatrix) -> Self {
        Self::from_fn(self.rows * other.rows, self.cols * other.cols, |i, j| {
            self[(i / other.rows, j / other.cols)] * other[(i % other.rows, j % other.cols)]
        })
    }

    pub fn commutator(&self, other: &CMatrix) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn anticommutator(&self, other: &CMatrix) -> Self {
        &(self * other) + &(other * self)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;

    fn neg(self) -> CMatrix {
        self.map(|z| -z)
    }
}

/// Largest absolute entry of a matrix.
pub fn max_norm(m: &CMatrix) -> Result<f64> {
    if m.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    Ok(m.max_abs())
}

/// `max_j sum_i |a_ij|`.
pub fn one_norm(m: &CMatrix) -> Result<f64> {
    if m.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    Ok((0..m.cols)
        .map(|j| (0..m.rows).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max))
}

pub fn vector_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `<a|b>`, conjugate-linear in the first argument.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Eigendecomposition `H = V diag(values) V^dagger` of a Hermitian matrix,
/// eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi diagonalization of a Hermitian matrix. Only the Hermitian
/// part of `h` is used.
pub fn eigh(h: &CMatrix) -> Result<HermitianEigen> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch {
            context: "eigh (square matrix)",
            expected: h.rows,
            found: h.cols,
        });
    }
    if h.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let n = h.rows;
    let mut a = h.hermitian_part();
    let mut v = CMatrix::identity(n);

    let total = a.frobenius_norm();
    let threshold = (f64::EPSILON * total).powi(2) * 1e-2;

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum();
        if off <= threshold || total == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::EigenNoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    reorthonormalize(&mut vectors);
    Ok(HermitianEigen { values, vectors })
}

/// Modified Gram-Schmidt on the columns of a nearly unitary matrix, removing
/// the rounding drift accumulated by the rotations.
fn reorthonormalize(v: &mut CMatrix) {
    let n = v.cols;
    for j in 0..n {
        for i in 0..j {
            let proj: C64 = (0..v.rows).map(|r| v[(r, i)].conj() * v[(r, j)]).sum();
            for r in 0..v.rows {
                let vi = v[(r, i)];
                v[(r, j)] -= proj * vi;
            }
        }
        let norm = (0..v.rows).map(|r| v[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        for r in 0..v.rows {
            v[(r, j)] = v[(r, j)] / norm;
        }
    }
}

fn jacobi_rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Skip entries already negligible against both diagonal entries.
    if mag < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = C64::zero();
        a[(q, p)] = C64::zero();
        return;
    }
    let phase = apq / mag;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // J = [[c, s e^{i phi}], [-s e^{-i phi}, c]] acting on columns p, q.
    let s_phase = phase * s;
    let s_phase_conj = s_phase.conj();
    let n = a.rows;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * s_phase_conj;
        a[(k, q)] = akp * s_phase + akq * c;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * s_phase;
        a[(q, k)] = apk * s_phase_conj + aqk * c;
    }
    a[(p, q)] = C64::zero();
    a[(q, p)] = C64::zero();
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * s_phase_conj;
        v[(k, q)] = vkp * s_phase + vkq * c;
    }
}

/// `exp(-i H tau)` for Hermitian `H`, built from its eigendecomposition so the
/// result is unitary to rounding.
pub fn unitary_exp(h: &CMatrix, tau: f64) -> Result<CMatrix> {
    let eig = eigh(h)?;
    let n = h.rows();
    let phases: Vec<C64> = eig
        .values
        .iter()
        .map(|&e| C64::from_polar(1.0, -e * tau))
        .collect();
    let v = &eig.vectors;
    let u = CMatrix::from_fn(n, n, |i, j| {
        (0..n).fold(C64::zero(), |acc, k| acc + v[(i, k)] * phases[k] * v[(j, k)].conj())
    });
    // One Newton-Schulz step, U (3 - U^dagger U) / 2, so the rounding in the
    // phases does not bias the norm over long runs.
    let gram = u.adjoint_mul(&u);
    let correction = CMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { C64::new(1.5, 0.0) } else { C64::zero() };
        d - gram[(i, j)] * 0.5
    });
    Ok(&u * &correction)
}

/// `exp(A dt)` for anti-Hermitian `A`. Only the anti-Hermitian part is used.
pub fn exp_anti_hermitian(a: &CMatrix, dt: f64) -> Result<CMatrix> {
    // A = -i H with H = i A Hermitian.
    let h = a.anti_hermitian_part().scale(I);
    unitary_exp(&h, dt)
}

/// Isometric factor `X (X^dagger X)^{-1/2}` of the polar decomposition of an
/// `N x d` matrix, together with the smallest singular value of `X`.
pub fn polar_isometry(x: &CMatrix) -> Result<(CMatrix, f64)> {
    let gram = x.adjoint_mul(x);
    let eig = eigh(&gram)?;
    let sigma_min = eig.values[0].max(0.0).sqrt();
    if sigma_min <= f64::EPSILON {
        return Ok((x.clone(), sigma_min));
    }
    let d = gram.rows();
    let v = &eig.vectors;
    let inv_sqrt: Vec<f64> = eig.values.iter().map(|&s| 1.0 / s.sqrt()).collect();
    let gram_inv_sqrt = CMatrix::from_fn(d, d, |i, j| {
        (0..d).fold(C64::zero(), |acc, k| {
            acc + v[(i, k)] * inv_sqrt[k] * v[(j, k)].conj()
        })
    });
    Ok((x * &gram_inv_sqrt, sigma_min))
}

/// Nearest unitary (or isometry) to `x`; used to re-project accumulated
/// products back onto the unitary group.
pub fn unitarize(x: &CMatrix) -> Result<CMatrix> {
    let (u, sigma_min) = polar_isometry(x)?;
    if sigma_min <= f64::EPSILON {
        return Err(Error::NotUnitary {
            deviation: x.unitarity_error(),
        });
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn norms_of_row_vector() {
        let m = CMatrix::from_real_rows(&[&[3.0, -4.0]]);
        assert_eq!(max_norm(&m).unwrap(), 4.0);
        assert_eq!(one_norm(&m).unwrap(), 4.0);
    }

    #[test]
    fn norms_of_identity() {
        let m = CMatrix::identity(2);
        assert_eq!(max_norm(&m).unwrap(), 1.0);
        assert_eq!(one_norm(&m).unwrap(), 1.0);
    }

    #[test]
    fn one_norm_is_max_column_sum() {
        let m = CMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(one_norm(&m).unwrap(), 6.0);
    }

    #[test]
    fn empty_matrix_norms_error() {
        let m = CMatrix::zeros(0, 0);
        assert_eq!(max_norm(&m), Err(Error::EmptyMatrix));
        assert_eq!(one_norm(&m), Err(Error::EmptyMatrix));
    }

    #[test]
    fn eigh_two_by_two_complex() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2.
        let h = CMatrix::from_row_major(2, 2, vec![c(1., 0.), c(0., 1.), c(0., -1.), c(1., 0.)])
            .unwrap();
        let e = eigh(&h).unwrap();
        assert!((e.values[0] - 0.0).abs() < 1e-14);
        assert!((e.values[1] - 2.0).abs() < 1e-14);
        let recon = &(&e.vectors * &CMatrix::diagonal(&e.values)) * &e.vectors.adjoint();
        assert!((&recon - &h).max_abs() < 1e-14);
    }

    #[test]
    fn eigh_degenerate_diagonal() {
        let h = CMatrix::diagonal(&[2.0, -1.0, 2.0, -1.0]);
        let e = eigh(&h).unwrap();
        assert_eq!(e.values, vec![-1.0, -1.0, 2.0, 2.0]);
        assert!(e.vectors.unitarity_error() < 1e-15);
    }

    #[test]
    fn unitary_exp_of_diagonal() {
        let h = CMatrix::diagonal(&[1.0, -0.5]);
        let u = unitary_exp(&h, 0.3).unwrap();
        assert!((u[(0, 0)] - C64::from_polar(1.0, -0.3)).norm() < 1e-15);
        assert!((u[(1, 1)] - C64::from_polar(1.0, 0.15)).norm() < 1e-15);
        assert!(u[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn polar_of_scaled_unitary_recovers_it() {
        let h = CMatrix::from_row_major(2, 2, vec![c(0.3, 0.), c(0.2, -0.7), c(0.2, 0.7), c(-1., 0.)])
            .unwrap();
        let u = unitary_exp(&h, 1.3).unwrap();
        let (p, smin) = polar_isometry(&u.scale_real(2.5)).unwrap();
        assert!((smin - 2.5).abs() < 1e-12);
        assert!((&p - &u).max_abs() < 1e-13);
    }

    #[test]
    fn kron_and_commutator_shapes() {
        let sx = CMatrix::from_real_rows(&[&[0., 1.], &[1., 0.]]);
        let k = sx.kron(&CMatrix::identity(2));
        assert_eq!((k.rows(), k.cols()), (4, 4));
        assert_eq!(k[(0, 2)], c(1., 0.));
        assert!(sx.commutator(&sx).max_abs() == 0.0);
    }
}
