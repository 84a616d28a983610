//! Dense complex linear algebra: matrices, Hermitian operators, a cyclic
//! Jacobi eigensolver, Schatten norms and spectral matrix functions.
//!
//! Everything here is row-major and allocation-per-result. The dimensions
//! this crate deals with are small (at most [`DIM_CAP`]), so clarity wins over
//! blocking or SIMD.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest operator dimension accepted by [`kron`] and the model builders.
pub const DIM_CAP: usize = 4096;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

const HERMITIAN_RTOL: f64 = 1e-12;
const JACOBI_OFF_RTOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for k in 0..dim {
            m[(k, k)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged input; meant for
    /// literals in builders and tests.
    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), n_cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { rows: n_rows, cols: n_cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (k, v) in values.iter().enumerate() {
            m[(k, k)] = *v;
        }
        m
    }

    /// `|u><v|`
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |r, c| u[r] * v[c].conj())
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

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * factor).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|k| self[(k, k)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Commutator `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                let rhs_row = rhs.row(k);
                let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// `<u|v>`
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Returns `v / |v|`, or `None` for a vanishing vector.
pub fn normalized(v: &[C64]) -> Option<Vec<C64>> {
    let n = norm(v);
    (n > 0.0 && n.is_finite()).then(|| v.iter().map(|z| z / n).collect())
}

/// Kronecker product of two vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// A dense Hermitian operator. Construction checks Hermiticity and stores the
/// exactly Hermitian part, so downstream code may rely on `M = M^†` bitwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare { rows: matrix.rows, cols: matrix.cols });
        }
        if matrix.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let n = matrix.rows;
        let tolerance = HERMITIAN_RTOL * (1.0 + matrix.max_abs());
        let mut asymmetry = 0.0_f64;
        for r in 0..n {
            for c in r..n {
                asymmetry = asymmetry.max((matrix[(r, c)] - matrix[(c, r)].conj()).norm());
            }
        }
        if asymmetry > tolerance {
            return Err(Error::NonHermitian { asymmetry, tolerance });
        }
        let mut matrix = matrix;
        for r in 0..n {
            matrix[(r, r)] = C64::new(matrix[(r, r)].re, 0.0);
            for c in r + 1..n {
                let avg = 0.5 * (matrix[(r, c)] + matrix[(c, r)].conj());
                matrix[(r, c)] = avg;
                matrix[(c, r)] = avg.conj();
            }
        }
        Ok(Self { matrix })
    }

    pub fn zero(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(dim) }
    }

    /// `|v><v|` for an arbitrary (not necessarily normalized) vector.
    pub fn projector(v: &[C64]) -> Self {
        Self::new(ComplexMatrix::outer(v, v)).expect("outer product is Hermitian")
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { matrix: self.matrix.scale(C64::new(factor, 0.0)) }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        self.matrix.matvec(v)
    }

    /// `<v|H|v>` (real by Hermiticity).
    pub fn expectation(&self, v: &[C64]) -> f64 {
        inner(v, &self.apply(v)).re
    }

    pub fn eig(&self) -> Result<EigenDecomposition> {
        hermitian_eig(self)
    }
}

impl TryFrom<ComplexMatrix> for HermitianOperator {
    type Error = Error;

    fn try_from(m: ComplexMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<HermitianOperator> for ComplexMatrix {
    fn from(h: HermitianOperator) -> Self {
        h.matrix
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;

    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator { matrix: &self.matrix + &rhs.matrix }
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;

    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator { matrix: &self.matrix - &rhs.matrix }
    }
}

/// Spectrum in ascending order with orthonormal eigenvectors stored as the
/// columns of `vectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn min_value(&self) -> f64 {
        self.values[0]
    }

    pub fn max_value(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// `V f(diag) V^†`
    pub fn map(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.values.len();
        let fv: Vec<C64> = self.values.iter().map(|&x| f(x)).collect();
        let v = &self.vectors;
        ComplexMatrix::from_fn(n, n, |r, c| {
            (0..n).map(|k| v[(r, k)] * fv[k] * v[(c, k)].conj()).sum()
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|x| C64::new(x, 0.0))
    }
}

/// Full spectrum by cyclic complex Jacobi rotations.
///
/// Sweeps run in row-major `(p, q)` order until the off-diagonal Frobenius
/// mass drops below `1e-14 * |A|_F`. Eigenvalues come back ascending; each
/// eigenvector is rotated so that its first largest-modulus component is real
/// and positive.
pub fn hermitian_eig(op: &HermitianOperator) -> Result<EigenDecomposition> {
    let n = op.dim();
    let mut a = op.matrix.data.clone();
    let mut v = ComplexMatrix::identity(n).data;
    let total = op.matrix.frobenius_norm();

    let mut converged = total == 0.0;
    let mut sweep = 0;
    while !converged {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_OFF_RTOL * total {
            converged = true;
            break;
        }
        if sweep == JACOBI_MAX_SWEEPS {
            break;
        }
        sweep += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, n, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::EigNoConvergence { sweeps: sweep });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[x * n + x].re.total_cmp(&a[y * n + y].re));
    let values: Vec<f64> = order.iter().map(|&k| a[k * n + k].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut lead = ZERO;
        let mut lead_abs = -1.0;
        for r in 0..n {
            let z = v[r * n + k];
            if z.norm() > lead_abs {
                lead_abs = z.norm();
                lead = z;
            }
        }
        let phase = if lead_abs > 0.0 { lead.conj() / lead_abs } else { ONE };
        for r in 0..n {
            vectors[(r, col)] = v[r * n + k] * phase;
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

/// One complex Jacobi rotation annihilating `a[p][q]`, accumulated into `v`.
fn rotate(a: &mut [C64], v: &mut [C64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    if r <= 1e-18 * (app.abs() + aqq.abs()) {
        a[p * n + q] = ZERO;
        a[q * n + p] = ZERO;
        return;
    }
    // J = diag(1, conj(e)) * [[c, s], [-s, c]] turns the pair block real first.
    let e = apq / r;
    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let ec = e.conj();

    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = akp * c - akq * ec * s;
        a[k * n + q] = akp * s + akq * ec * c;
    }
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = apk * c - aqk * e * s;
        a[q * n + k] = apk * s + aqk * e * c;
    }
    a[p * n + p] = C64::new(app - t * r, 0.0);
    a[q * n + q] = C64::new(aqq + t * r, 0.0);
    a[p * n + q] = ZERO;
    a[q * n + p] = ZERO;

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = vkp * c - vkq * ec * s;
        v[k * n + q] = vkp * s + vkq * ec * c;
    }
}

/// Sum of absolute eigenvalues.
pub fn trace_norm(op: &HermitianOperator) -> Result<f64> {
    Ok(op.eig()?.values.iter().map(|x| x.abs()).sum())
}

/// Largest absolute eigenvalue.
pub fn spectral_norm(op: &HermitianOperator) -> Result<f64> {
    Ok(op.eig()?.values.iter().map(|x| x.abs()).fold(0.0, f64::max))
}

/// Schatten p-norm `(sum |lambda|^p)^(1/p)`; `p = inf` gives the spectral norm.
pub fn schatten_norm(op: &HermitianOperator, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("Schatten index must be >= 1, got {p}")));
    }
    if p.is_infinite() {
        return spectral_norm(op);
    }
    let eig = op.eig()?;
    Ok(eig.values.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p))
}

/// Kronecker product, rejecting results larger than [`DIM_CAP`] on either side.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    kron_capped(a, b, DIM_CAP)
}

pub fn kron_capped(a: &ComplexMatrix, b: &ComplexMatrix, cap: usize) -> Result<ComplexMatrix> {
    let rows = a.rows.saturating_mul(b.rows);
    let cols = a.cols.saturating_mul(b.cols);
    if rows > cap || cols > cap {
        return Err(Error::DimensionCap { dim: rows.max(cols), cap });
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |r, c| {
        a[(r / b.rows, c / b.cols)] * b[(r % b.rows, c % b.cols)]
    }))
}

/// Kronecker product of a list of factors.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> Result<ComplexMatrix> {
    let mut acc = ComplexMatrix::identity(1);
    for f in factors {
        acc = kron(&acc, f)?;
    }
    Ok(acc)
}

/// `exp(-i t H / hbar)` through the spectral decomposition.
pub fn unitary_exp(op: &HermitianOperator, t: f64, hbar: f64) -> Result<ComplexMatrix> {
    let eig = op.eig()?;
    Ok(eig.map(|x| (-I * (x * t / hbar)).exp()))
}

pub fn sigma_0() -> ComplexMatrix {
    ComplexMatrix::identity(2)
}

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[[ZERO, ONE], [ONE, ZERO]])
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[[ZERO, -I], [I, ZERO]])
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[[ONE, ZERO], [ZERO, -ONE]])
}

/// Pauli matrix by label: `0`/`i`, `x`, `y`, `z` (case-insensitive).
pub fn pauli(label: char) -> Option<ComplexMatrix> {
    match label.to_ascii_lowercase() {
        '0' | 'i' => Some(sigma_0()),
        'x' => Some(sigma_x()),
        'y' => Some(sigma_y()),
        'z' => Some(sigma_z()),
        _ => None,
    }
}

/// Tensor product of Pauli matrices, e.g. `"zi"` for `sigma_z (x) sigma_0`.
pub fn pauli_string(labels: &str) -> Result<HermitianOperator> {
    let factors = labels
        .chars()
        .map(|c| pauli(c).ok_or_else(|| Error::InvalidParameter(format!("unknown Pauli label {c:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if factors.is_empty() {
        return Err(Error::InvalidParameter("empty Pauli string".into()));
    }
    HermitianOperator::new(kron_all(&factors)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn swap() -> HermitianOperator {
        let mut m = ComplexMatrix::zeros(4, 4);
        for a in 0..2 {
            for b in 0..2 {
                m[(2 * b + a, 2 * a + b)] = ONE;
            }
        }
        HermitianOperator::new(m).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn pauli_x_spectrum() {
        let eig = HermitianOperator::new(sigma_x()).unwrap().eig().unwrap();
        assert_close(&eig.values, &[-1.0, 1.0], 1e-14);
    }

    #[test]
    fn identity_spectrum() {
        let eig = HermitianOperator::identity(4).eig().unwrap();
        assert_close(&eig.values, &[1.0; 4], 0.0);
    }

    #[test]
    fn swap_spectrum() {
        let eig = swap().eig().unwrap();
        assert_close(&eig.values, &[-1.0, 1.0, 1.0, 1.0], 1e-14);
    }

    #[test]
    fn rejects_non_hermitian_with_asymmetry() {
        let m = ComplexMatrix::from_rows(&[[ZERO, c(1.0)], [c(0.5), ZERO]]);
        match HermitianOperator::new(m) {
            Err(Error::NonHermitian { asymmetry, .. }) => assert!((asymmetry - 0.5).abs() < 1e-15),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn eigenvector_phase_convention() {
        let h = HermitianOperator::new(sigma_y()).unwrap();
        let eig = h.eig().unwrap();
        for k in 0..2 {
            let v = eig.vector(k);
            let lead = v.iter().copied().fold(ZERO, |best, z| if z.norm() > best.norm() { z } else { best });
            assert!(lead.im.abs() < 1e-15 && lead.re > 0.0);
        }
    }

    #[test]
    fn norms_of_small_operators() {
        let z = HermitianOperator::new(sigma_z()).unwrap();
        assert!((trace_norm(&z).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(trace_norm(&HermitianOperator::zero(3)).unwrap(), 0.0);
        let x = HermitianOperator::new(sigma_x()).unwrap();
        assert!((spectral_norm(&x).unwrap() - 1.0).abs() < 1e-15);
        let three = HermitianOperator::identity(2).scale(3.0);
        assert!((spectral_norm(&three).unwrap() - 3.0).abs() < 1e-15);
        assert!((schatten_norm(&z, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn kron_examples() {
        let xx = kron(&sigma_x(), &sigma_x()).unwrap();
        let anti = ComplexMatrix::from_fn(4, 4, |r, c| if r + c == 3 { ONE } else { ZERO });
        assert_eq!(xx, anti);
        let i6 = kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(3)).unwrap();
        assert_eq!(i6, ComplexMatrix::identity(6));

        let sum = [sigma_0(), sigma_x(), sigma_y(), sigma_z()]
            .iter()
            .map(|p| kron(p, p).unwrap())
            .fold(ComplexMatrix::zeros(4, 4), |acc, m| &acc + &m)
            .scale(c(0.5));
        assert!(sum.max_abs_diff(swap().matrix()) < 1e-15);
    }

    #[test]
    fn kron_rejects_over_cap() {
        let a = ComplexMatrix::identity(64);
        let b = ComplexMatrix::identity(128);
        assert!(matches!(kron(&a, &b), Err(Error::DimensionCap { dim: 8192, cap: DIM_CAP })));
    }

    #[test]
    fn swap_propagator_closed_form() {
        let v = swap();
        for &tau in &[0.0, 0.3, 1.7, -2.2] {
            let u = unitary_exp(&v, tau, 1.0).unwrap();
            let expected = &ComplexMatrix::identity(4).scale(c(tau.cos()))
                - &v.matrix().scale(I * tau.sin());
            assert!(u.max_abs_diff(&expected) < 1e-13);
        }
    }

    #[test]
    fn projector_propagator_closed_form() {
        let d = 3;
        let phi: Vec<C64> = (0..d * d).map(|k| if k % (d + 1) == 0 { ONE } else { ZERO }).collect();
        let proj = HermitianOperator::projector(&phi);
        let tau = 0.77;
        let u = unitary_exp(&proj, tau, 1.0).unwrap();
        let factor = ((-I * (d as f64 * tau)).exp() - ONE) / d as f64;
        let expected = &ComplexMatrix::identity(d * d) + &proj.matrix().scale(factor);
        assert!(u.max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn zero_time_propagator_is_identity() {
        let h = HermitianOperator::new(sigma_y()).unwrap();
        let u = unitary_exp(&h, 0.0, 1.0).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn pauli_string_parses() {
        let zi = pauli_string("zi").unwrap();
        assert_eq!(zi.matrix(), &kron(&sigma_z(), &sigma_0()).unwrap());
        assert!(pauli_string("q").is_err());
    }
}
