//! Dense complex linear algebra.
//!
//! Everything in the crate is built on [`ComplexMatrix`], a square row-major
//! matrix of `Complex<f64>`. Qubit 0 is the most-significant bit of a
//! basis-state index; the local gate kernels at the bottom of this module are
//! the single place where that convention is encoded.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Tolerance used for Hermiticity and positivity checks.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries. Panics if `data.len()` is not a
    /// positive perfect square.
    pub fn from_vec(data: Vec<C64>) -> Self {
        let dim = (data.len() as f64).sqrt().round() as usize;
        assert!(
            dim >= 1 && dim * dim == data.len(),
            "entry count {} is not a positive square",
            data.len()
        );
        Self { dim, data }
    }

    pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> Self {
        Self::from_vec(rows.iter().flatten().copied().collect())
    }

    pub fn from_real_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        Self::from_vec(rows.iter().flatten().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn diag(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    /// Outer product `|v⟩⟨w|`.
    pub fn outer(v: &[C64], w: &[C64]) -> Self {
        assert_eq!(v.len(), w.len());
        let dim = v.len();
        let mut data = Vec::with_capacity(dim * dim);
        for a in v {
            for b in w {
                data.push(a * b.conj());
            }
        }
        Self { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            let row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let other_row = &other.data[k * n..(k + 1) * n];
                for (o, b) in row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        Self { dim: n, data: out }
    }

    /// Kronecker product; `self` is the most-significant factor.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        let dim = n * m;
        let mut out = Self::zeros(dim);
        for i in 0..n {
            for j in 0..n {
                let a = self.data[i * n + j];
                if a == ZERO {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out.data[(i * m + k) * dim + j * m + l] = a * other.data[k * m + l];
                    }
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `Tr[self · other]` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        acc
    }

    /// `max |A − A†|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// `max |U·U† − I|`.
    pub fn unitarity_error(&self) -> f64 {
        self.matmul(&self.adjoint())
            .max_abs_diff(&Self::identity(self.dim))
    }

    /// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
    /// rotations. Returns eigenvalues in ascending order and the matrix whose
    /// columns are the matching eigenvectors.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, ComplexMatrix)> {
        let dev = self.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let n = self.dim;
        let mut a = self.clone();
        // Symmetrize so that the rotations start from an exactly Hermitian matrix.
        for i in 0..n {
            a.data[i * n + i].im = 0.0;
            for j in i + 1..n {
                let avg = (a.data[i * n + j] + a.data[j * n + i].conj()) * 0.5;
                a.data[i * n + j] = avg;
                a.data[j * n + i] = avg.conj();
            }
        }
        let mut v = Self::identity(n);
        let scale = a.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt().max(1.0);
        let threshold = 1e-12 * scale;
        let max_sweeps = 100 * n * n;

        for _ in 0..max_sweeps {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a.data[i * n + j].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off < threshold {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    jacobi_rotate(&mut a, &mut v, p, q);
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        let evals: Vec<f64> = (0..n).map(|i| a.data[i * n + i].re).collect();
        order.sort_by(|&x, &y| evals[x].total_cmp(&evals[y]));
        let mut vecs = Self::zeros(n);
        for (new_col, &old_col) in order.iter().enumerate() {
            for r in 0..n {
                vecs.data[r * n + new_col] = v.data[r * n + old_col];
            }
        }
        Ok((order.iter().map(|&i| evals[i]).collect(), vecs))
    }

    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.hermitian_eigen()?.0)
    }

    /// Principal square root of a Hermitian positive-semidefinite matrix.
    ///
    /// Eigenvalues in `[-1e-9, 0)` are treated as zero.
    pub fn hermitian_sqrt(&self) -> Result<Self> {
        let (evals, vecs) = self.hermitian_eigen()?;
        if let Some(&min) = evals.first() {
            if min < -HERMITIAN_TOL {
                return Err(Error::NotPsd(min));
            }
        }
        let roots: Vec<f64> = evals.iter().map(|&e| e.max(0.0).sqrt()).collect();
        Ok(reconstruct(&vecs, &roots))
    }
}

/// `V · diag(values) · V†`.
pub(crate) fn reconstruct(vecs: &ComplexMatrix, values: &[f64]) -> ComplexMatrix {
    let n = vecs.dim;
    let mut out = ComplexMatrix::zeros(n);
    for (k, &lam) in values.iter().enumerate() {
        if lam == 0.0 {
            continue;
        }
        for i in 0..n {
            let vik = vecs.data[i * n + k] * lam;
            for j in 0..n {
                out.data[i * n + j] += vik * vecs.data[j * n + k].conj();
            }
        }
    }
    out
}

fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let n = a.dim;
    let apq = a.data[p * n + q];
    let mag = apq.norm();
    if mag < 1e-300 {
        return;
    }
    let app = a.data[p * n + p].re;
    let aqq = a.data[q * n + q].re;
    let phase = apq / mag;
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // J = diag(1, conj(phase)) · [[c, s], [-s, c]] restricted to (p, q).
    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    for k in 0..n {
        let akp = a.data[k * n + p];
        let akq = a.data[k * n + q];
        a.data[k * n + p] = akp * jpp + akq * jqp;
        a.data[k * n + q] = akp * jpq + akq * jqq;
    }
    for k in 0..n {
        let apk = a.data[p * n + k];
        let aqk = a.data[q * n + k];
        a.data[p * n + k] = jpp.conj() * apk + jqp.conj() * aqk;
        a.data[q * n + k] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a.data[p * n + q] = ZERO;
    a.data[q * n + p] = ZERO;
    a.data[p * n + p].im = 0.0;
    a.data[q * n + q].im = 0.0;

    for k in 0..n {
        let vkp = v.data[k * n + p];
        let vkq = v.data[k * n + q];
        v.data[k * n + p] = vkp * jpp + vkq * jqp;
        v.data[k * n + q] = vkp * jpq + vkq * jqq;
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: Self) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: Self) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: Self) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Distance between two operators modulo a global phase:
/// `‖a − e^{iφ}b‖_max` with φ chosen to align `Tr[b†a]`.
///
/// The returned value is an upper bound on the true minimum over φ.
pub fn phase_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.dim, b.dim);
    let overlap: C64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| y.conj() * x)
        .sum();
    let phase = if overlap.norm() < 1e-300 {
        ONE
    } else {
        overlap / overlap.norm()
    };
    a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - phase * y).norm())
        .fold(0.0, f64::max)
}

pub fn equal_up_to_phase(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
    phase_distance(a, b) <= tol
}

// ---------------------------------------------------------------------------
// Local kernels. A gate on `k` qubits is a 2^k × 2^k matrix whose local index
// lists the gate's qubits most-significant first.

/// Bit position of `qubit` inside a basis index of an `n`-qubit register.
#[inline]
pub fn qubit_shift(n_qubits: usize, qubit: usize) -> usize {
    n_qubits - 1 - qubit
}

struct LocalLayout {
    offsets: [usize; 8],
    size: usize,
    mask: usize,
}

impl LocalLayout {
    fn new(n_qubits: usize, qubits: &[usize]) -> Self {
        let k = qubits.len();
        assert!((1..=3).contains(&k), "local kernels support 1 to 3 qubits");
        let size = 1 << k;
        let mut offsets = [0usize; 8];
        let mut mask = 0;
        for (j, &q) in qubits.iter().enumerate() {
            let bit = 1 << qubit_shift(n_qubits, q);
            mask |= bit;
            for (l, off) in offsets.iter_mut().enumerate().take(size) {
                if l & (1 << (k - 1 - j)) != 0 {
                    *off |= bit;
                }
            }
        }
        Self {
            offsets,
            size,
            mask,
        }
    }
}

/// `m ← (U on qubits) · m`, where `m` has dimension `2^n_qubits`.
pub fn apply_local_left(m: &mut ComplexMatrix, n_qubits: usize, qubits: &[usize], u: &ComplexMatrix) {
    let layout = LocalLayout::new(n_qubits, qubits);
    let d = m.dim;
    let s = layout.size;
    debug_assert_eq!(u.dim, s);
    let mut buf = [ZERO; 8];
    for base in (0..d).filter(|b| b & layout.mask == 0) {
        for c in 0..d {
            for l in 0..s {
                buf[l] = m.data[(base + layout.offsets[l]) * d + c];
            }
            for r in 0..s {
                let mut acc = ZERO;
                for l in 0..s {
                    acc += u.data[r * s + l] * buf[l];
                }
                m.data[(base + layout.offsets[r]) * d + c] = acc;
            }
        }
    }
}

/// `m ← m · (U on qubits)†`.
pub fn apply_local_right_adjoint(
    m: &mut ComplexMatrix,
    n_qubits: usize,
    qubits: &[usize],
    u: &ComplexMatrix,
) {
    let layout = LocalLayout::new(n_qubits, qubits);
    let d = m.dim;
    let s = layout.size;
    let mut buf = [ZERO; 8];
    for r in 0..d {
        let row = &mut m.data[r * d..(r + 1) * d];
        for base in (0..d).filter(|b| b & layout.mask == 0) {
            for l in 0..s {
                buf[l] = row[base + layout.offsets[l]];
            }
            for j in 0..s {
                let mut acc = ZERO;
                for l in 0..s {
                    acc += u.data[j * s + l].conj() * buf[l];
                }
                row[base + layout.offsets[j]] = acc;
            }
        }
    }
}

/// `v ← (U on qubits) · v` for a state vector of length `2^n_qubits`.
pub fn apply_local_vec(v: &mut [C64], n_qubits: usize, qubits: &[usize], u: &ComplexMatrix) {
    let layout = LocalLayout::new(n_qubits, qubits);
    let s = layout.size;
    let mut buf = [ZERO; 8];
    for base in (0..v.len()).filter(|b| b & layout.mask == 0) {
        for l in 0..s {
            buf[l] = v[base + layout.offsets[l]];
        }
        for r in 0..s {
            let mut acc = ZERO;
            for l in 0..s {
                acc += u.data[r * s + l] * buf[l];
            }
            v[base + layout.offsets[r]] = acc;
        }
    }
}

/// Embeds a local operator into the full `2^n_qubits` space.
pub fn embed(n_qubits: usize, qubits: &[usize], u: &ComplexMatrix) -> ComplexMatrix {
    let mut m = ComplexMatrix::identity(1 << n_qubits);
    apply_local_left(&mut m, n_qubits, qubits, u);
    m
}
