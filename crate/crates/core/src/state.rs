//! Pure and mixed qubit states, random product inputs and basis measurement.

use rand::{distributions::Distribution, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64, HERMITIAN_TOL, ONE, ZERO};

/// Pure state on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl Ket {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let n_qubits = log2_exact(amplitudes.len())?;
        let k = Self {
            n_qubits,
            amplitudes,
        };
        let norm = k.norm_sqr();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(k)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[index] = ONE;
        Self {
            n_qubits,
            amplitudes,
        }
    }

    pub fn from_bloch(angles: BlochAngles) -> Self {
        let alpha = C64::new((angles.theta / 2.0).cos(), 0.0);
        let beta = C64::from_polar((angles.theta / 2.0).sin(), angles.phi);
        Self {
            n_qubits: 1,
            amplitudes: vec![alpha, beta],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Tensor product; `self` holds the lower-numbered qubits.
    pub fn tensor(&self, other: &Ket) -> Ket {
        let mut amplitudes = Vec::with_capacity(self.amplitudes.len() * other.amplitudes.len());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Ket {
            n_qubits: self.n_qubits + other.n_qubits,
            amplitudes,
        }
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap_sqr(&self, other: &Ket) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .norm_sqr()
    }
}

/// Polar angles on the Bloch sphere: `theta ∈ [0, π]`, `phi ∈ [0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochAngles {
    pub theta: f64,
    pub phi: f64,
}

impl BlochAngles {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::OutOfRange(theta));
        }
        if !(0.0..std::f64::consts::TAU).contains(&phi) {
            return Err(Error::OutOfRange(phi));
        }
        Ok(Self { theta, phi })
    }

    /// Uniform over the sphere surface: `cos θ ~ U[-1, 1]`, `φ ~ U[0, 2π)`.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let cos_theta: f64 = rng.gen_range(-1.0..=1.0);
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        Self {
            theta: cos_theta.acos(),
            phi,
        }
    }
}

/// Mixed state on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates trace, Hermiticity and positivity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let n_qubits = log2_exact(matrix.dim())?;
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::InvalidState(format!("trace is {tr}")));
        }
        let evals = matrix.hermitian_eigenvalues()?;
        if evals[0] < -HERMITIAN_TOL {
            return Err(Error::NotPsd(evals[0]));
        }
        Ok(Self { n_qubits, matrix })
    }

    #[cfg(test)]
    pub(crate) fn from_matrix_unchecked(n_qubits: usize, matrix: ComplexMatrix) -> Self {
        Self { n_qubits, matrix }
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        ket_to_density(&Ket::basis(n_qubits, index))
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1 << n_qubits;
        Self {
            n_qubits,
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut ComplexMatrix {
        &mut self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `Tr[ρ²]`.
    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation_of_ket(&self, ket: &Ket) -> f64 {
        let d = self.matrix.dim();
        let a = ket.amplitudes();
        let m = self.matrix.data();
        let mut acc = ZERO;
        for i in 0..d {
            if a[i] == ZERO {
                continue;
            }
            let mut row = ZERO;
            for j in 0..d {
                row += m[i * d + j] * a[j];
            }
            acc += a[i].conj() * row;
        }
        acc.re
    }

    /// Reduced state of a single qubit.
    pub fn reduced_qubit(&self, qubit: usize) -> Result<DensityMatrix> {
        if qubit >= self.n_qubits {
            return Err(Error::IndexOutOfRange {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        let d = self.matrix.dim();
        let shift = crate::linalg::qubit_shift(self.n_qubits, qubit);
        let mut out = ComplexMatrix::zeros(2);
        for i in 0..d {
            for j in 0..d {
                // Trace out every other qubit: their bits must agree.
                if (i ^ j) & !(1 << shift) == 0 {
                    let a = (i >> shift) & 1;
                    let b = (j >> shift) & 1;
                    out[(a, b)] += self.matrix[(i, j)];
                }
            }
        }
        Ok(DensityMatrix {
            n_qubits: 1,
            matrix: out,
        })
    }
}

/// `ρ = |k⟩⟨k|`.
pub fn ket_to_density(k: &Ket) -> DensityMatrix {
    DensityMatrix {
        n_qubits: k.n_qubits,
        matrix: ComplexMatrix::outer(&k.amplitudes, &k.amplitudes),
    }
}

/// Checked variant of [`ket_to_density`] for externally supplied amplitudes.
pub fn try_ket_to_density(amplitudes: Vec<C64>) -> Result<DensityMatrix> {
    Ok(ket_to_density(&Ket::new(amplitudes)?))
}

/// Tensor product of `n` random single-qubit pure states drawn uniformly over
/// the Bloch sphere.
pub fn random_product_state(n: usize, seed: u64) -> Ket {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_product_state_with(n, &mut rng)
}

pub fn random_product_state_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Ket {
    assert!(n >= 1, "need at least one qubit");
    let mut ket = Ket::from_bloch(BlochAngles::sample(rng));
    for _ in 1..n {
        ket = ket.tensor(&Ket::from_bloch(BlochAngles::sample(rng)));
    }
    ket
}

/// Probabilities of each computational basis outcome, `p_i = Re ρ_ii`.
pub fn measurement_distribution(rho: &DensityMatrix) -> Result<Vec<f64>> {
    let d = rho.matrix.dim();
    let mut p: Vec<f64> = (0..d).map(|i| rho.matrix[(i, i)].re).collect();
    if let Some((i, &v)) = p.iter().enumerate().find(|(_, &v)| v < -1e-8) {
        return Err(Error::InvalidState(format!(
            "diagonal entry {i} has negative probability {v}"
        )));
    }
    let mut clamped = false;
    for v in p.iter_mut().filter(|v| **v < 0.0) {
        *v = 0.0;
        clamped = true;
    }
    let total: f64 = p.iter().sum();
    if clamped || (total - 1.0).abs() > 1e-12 {
        for v in &mut p {
            *v /= total;
        }
    }
    Ok(p)
}

/// Multinomial draw of `shots` outcomes from a probability vector.
pub fn sample_distribution<R: Rng + ?Sized>(p: &[f64], shots: usize, rng: &mut R) -> Vec<u64> {
    let sampler = CumulativeSampler::new(p);
    let mut counts = vec![0u64; p.len()];
    for _ in 0..shots {
        counts[sampler.sample(rng)] += 1;
    }
    counts
}

/// Samples `shots` computational-basis measurements of `rho`.
pub fn sample_measurements(rho: &DensityMatrix, shots: usize, seed: u64) -> Result<Vec<u64>> {
    let p = measurement_distribution(rho)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_distribution(&p, shots, &mut rng))
}

/// Inverse-CDF sampler over a discrete distribution.
#[derive(Debug, Clone)]
pub struct CumulativeSampler {
    cdf: Vec<f64>,
}

impl CumulativeSampler {
    pub fn new(p: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = p
            .iter()
            .map(|&x| {
                acc += x;
                acc
            })
            .collect();
        Self { cdf }
    }
}

impl Distribution<usize> for CumulativeSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().unwrap_or(&1.0);
        let u: f64 = rng.gen::<f64>() * total;
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.cdf.len() - 1)
    }
}

fn log2_exact(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::InvalidState(format!(
            "length {len} is not a power of two >= 2"
        )));
    }
    Ok(len.trailing_zeros() as usize)
}
