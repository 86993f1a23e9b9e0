//! Benchmarking protocols: single-qubit state tomography, randomized
//! benchmarking, cross-entropy benchmarking and heavy-output / quantum-volume
//! testing.

use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{run_noisy, Circuit, Cycle, Gate};
use crate::error::{Error, Result};
use crate::linalg::{phase_distance, reconstruct, ComplexMatrix, C64};
use crate::noise::NoiseModel;
use crate::state::{measurement_distribution, sample_distribution, DensityMatrix, Ket};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Ideal probabilities below this are treated as zero.
pub const MIN_IDEAL_PROBABILITY: f64 = 1e-300;

/// SplitMix64 finalizer, used to derive independent stream seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Folds a list of keys into one seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6A09_E667_F3BC_C909, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

// ---------------------------------------------------------------------------
// Tomography

/// Pauli expectation estimates and the reconstructed state.
#[derive(Debug, Clone)]
pub struct TomographyResult {
    /// `S₀..S₃`: normalization and the X, Y, Z expectations.
    pub s: [f64; 4],
    /// `½(S₀I + S₁X + S₂Y + S₃Z)` exactly as estimated; may fail positivity.
    pub raw: ComplexMatrix,
    /// The raw estimate with negative eigenvalues clipped and trace restored.
    pub reconstructed: DensityMatrix,
    /// Shots per basis, `None` in exact-probability mode.
    pub shots_per_basis: Option<usize>,
}

/// Basis-change unitaries that map the X and Y eigenbases onto Z.
fn measurement_rotations() -> [ComplexMatrix; 3] {
    let h = Gate::H(0).local_matrix();
    let sdg = Gate::Sdg(0).local_matrix();
    [h.clone(), h.matmul(&sdg), ComplexMatrix::identity(2)]
}

fn rotated_p0(rho: &DensityMatrix, v: &ComplexMatrix) -> f64 {
    let m = v.matmul(rho.matrix()).matmul(&v.adjoint());
    m[(0, 0)].re.clamp(0.0, 1.0)
}

fn check_single_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.n_qubits() != 1 {
        return Err(Error::WidthMismatch {
            expected: 1,
            got: rho.n_qubits(),
        });
    }
    Ok(())
}

/// Tomography from exact outcome probabilities of a freshly prepared state
/// in each basis.
pub fn state_tomography_exact<F>(prepare: F) -> Result<TomographyResult>
where
    F: Fn() -> DensityMatrix,
{
    let mut p0 = [0.0; 3];
    for (k, v) in measurement_rotations().iter().enumerate() {
        let rho = prepare();
        check_single_qubit(&rho)?;
        p0[k] = rotated_p0(&rho, v);
    }
    finish_tomography(p0, None)
}

/// Tomography from `shots_per_basis` simulated measurements in each of the
/// X, Y and Z bases.
pub fn state_tomography_1q<F>(prepare: F, shots_per_basis: usize, seed: u64) -> Result<TomographyResult>
where
    F: Fn() -> DensityMatrix,
{
    if shots_per_basis == 0 {
        return Err(Error::InvalidParams("shots_per_basis must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p0 = [0.0; 3];
    for (k, v) in measurement_rotations().iter().enumerate() {
        let rho = prepare();
        check_single_qubit(&rho)?;
        let p = rotated_p0(&rho, v);
        let counts = sample_distribution(&[p, 1.0 - p], shots_per_basis, &mut rng);
        p0[k] = counts[0] as f64 / shots_per_basis as f64;
    }
    finish_tomography(p0, Some(shots_per_basis))
}

fn finish_tomography(p0: [f64; 3], shots: Option<usize>) -> Result<TomographyResult> {
    let s = [1.0, 2.0 * p0[0] - 1.0, 2.0 * p0[1] - 1.0, 2.0 * p0[2] - 1.0];
    let half = |z: C64| z * 0.5;
    let raw = ComplexMatrix::from_rows([
        [half(C64::new(s[0] + s[3], 0.0)), half(C64::new(s[1], -s[2]))],
        [half(C64::new(s[1], s[2])), half(C64::new(s[0] - s[3], 0.0))],
    ]);
    let reconstructed = project_to_state(&raw)?;
    Ok(TomographyResult {
        s,
        raw,
        reconstructed,
        shots_per_basis: shots,
    })
}

/// Clips negative eigenvalues of a Hermitian matrix and rescales to unit trace.
pub fn project_to_state(m: &ComplexMatrix) -> Result<DensityMatrix> {
    let (values, vecs) = m.hermitian_eigen()?;
    let clipped: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Err(Error::NotPsd(values[0]));
    }
    let scaled: Vec<f64> = clipped.iter().map(|v| v / total).collect();
    let mut out = reconstruct(&vecs, &scaled);
    // Symmetrize away rounding so validation sees an exactly Hermitian input.
    let adj = out.adjoint();
    out = (&out + &adj).scale_real(0.5);
    DensityMatrix::new(out)
}

// ---------------------------------------------------------------------------
// Single-qubit Clifford group

/// The 24 single-qubit Cliffords modulo phase, with multiplication and
/// inverse tables.
#[derive(Debug)]
pub struct CliffordGroup {
    words: Vec<Vec<Gate>>,
    matrices: Vec<ComplexMatrix>,
    /// `mul[a][b]` is the index of `U_a · U_b`.
    mul: Vec<[u8; 24]>,
    inv: [u8; 24],
}

impl CliffordGroup {
    fn build() -> Self {
        let gens = [Gate::H(0), Gate::S(0)];
        let mut words: Vec<Vec<Gate>> = vec![vec![]];
        let mut matrices = vec![ComplexMatrix::identity(2)];
        let mut frontier = vec![0usize];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &i in &frontier {
                for g in gens {
                    let m = g.local_matrix().matmul(&matrices[i]);
                    if matrices.iter().all(|x| phase_distance(x, &m) > 1e-9) {
                        let mut w = words[i].clone();
                        w.push(g);
                        words.push(w);
                        matrices.push(m);
                        next.push(matrices.len() - 1);
                    }
                }
            }
            frontier = next;
        }
        assert_eq!(matrices.len(), 24, "single-qubit Clifford group has 24 elements");
        let find = |m: &ComplexMatrix| {
            matrices
                .iter()
                .position(|x| phase_distance(x, m) < 1e-9)
                .expect("group is closed") as u8
        };
        let mul: Vec<[u8; 24]> = (0..24)
            .map(|a| {
                let mut row = [0u8; 24];
                for (b, slot) in row.iter_mut().enumerate() {
                    *slot = find(&matrices[a].matmul(&matrices[b]));
                }
                row
            })
            .collect();
        let mut inv = [0u8; 24];
        for a in 0..24 {
            inv[a] = (0..24u8).find(|&b| mul[a][b as usize] == 0).expect("inverse exists");
            debug_assert_eq!(mul[inv[a] as usize][a], 0);
        }
        Self {
            words,
            matrices,
            mul,
            inv,
        }
    }

    /// Process-wide instance, built on first use.
    pub fn get() -> &'static CliffordGroup {
        static GROUP: OnceLock<CliffordGroup> = OnceLock::new();
        GROUP.get_or_init(Self::build)
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Word over {H, S} in time order.
    pub fn word(&self, i: usize) -> &[Gate] {
        &self.words[i]
    }

    pub fn matrix(&self, i: usize) -> &ComplexMatrix {
        &self.matrices[i]
    }

    pub fn compose(&self, a: usize, b: usize) -> usize {
        self.mul[a][b] as usize
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inv[a] as usize
    }
}

/// `m` uniform random Cliffords followed by the inverse of their product.
pub fn rb_sequence<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<usize> {
    let group = CliffordGroup::get();
    let mut seq: Vec<usize> = (0..m).map(|_| rng.gen_range(0..24)).collect();
    // Net unitary after the sequence: U_last ⋯ U_first.
    let net = seq.iter().fold(0, |acc, &c| group.compose(c, acc));
    seq.push(group.inverse(net));
    seq
}

// ---------------------------------------------------------------------------
// Randomized benchmarking

/// Mean survival probability per sequence length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbData {
    pub lengths: Vec<usize>,
    pub survival: Vec<f64>,
    pub sequences_per_length: usize,
}

/// Fit of `A·(1 − 2r)^m + B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbFit {
    pub a: f64,
    pub b: f64,
    pub r: f64,
    /// Sum of squared residuals.
    pub residual: f64,
    /// Set when the data do not determine `A` and `B` separately.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbResult {
    pub data: RbData,
    pub fit: RbFit,
}

/// Default number of random sequences per length.
pub const DEFAULT_RB_SEQUENCES: usize = 50;

/// Survival probability of `|0⟩` under random Clifford sequences with
/// `noise` applied after every Clifford (including the inverting one).
pub fn rb_experiment(
    lengths: &[usize],
    sequences_per_length: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<RbData> {
    if lengths.is_empty() || lengths.contains(&0) {
        return Err(Error::InvalidParams("lengths must be non-empty and >= 1".into()));
    }
    if sequences_per_length == 0 {
        return Err(Error::InvalidParams("sequences_per_length must be >= 1".into()));
    }
    noise.validate()?;
    let group = CliffordGroup::get();
    let superop = noise.superop();
    let survival = lengths
        .iter()
        .enumerate()
        .map(|(li, &m)| {
            let per_seq: Vec<f64> = (0..sequences_per_length)
                .into_par_iter()
                .map(|s| {
                    let mut rng =
                        ChaCha8Rng::seed_from_u64(derive_seed(&[seed, li as u64, s as u64]));
                    let seq = rb_sequence(m, &mut rng);
                    let mut rho = DensityMatrix::basis(1, 0).into_matrix();
                    for c in seq {
                        let u = group.matrix(c);
                        rho = u.matmul(&rho).matmul(&u.adjoint());
                        superop.apply(&mut rho, 1, 0);
                    }
                    rho[(0, 0)].re
                })
                .collect();
            per_seq.iter().sum::<f64>() / sequences_per_length as f64
        })
        .collect();
    Ok(RbData {
        lengths: lengths.to_vec(),
        survival,
        sequences_per_length,
    })
}

/// [`rb_experiment`] followed by [`rb_fit`].
pub fn run_rb(
    lengths: &[usize],
    sequences_per_length: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<RbResult> {
    let data = rb_experiment(lengths, sequences_per_length, noise, seed)?;
    let fit = rb_fit(&data.lengths, &data.survival)?;
    Ok(RbResult { data, fit })
}

/// Options for [`rb_fit_with`].
#[derive(Debug, Clone, Copy)]
pub struct RbFitOptions {
    /// Largest acceptable root-mean-square residual.
    pub max_rms_residual: f64,
}

impl Default for RbFitOptions {
    fn default() -> Self {
        Self {
            max_rms_residual: 0.05,
        }
    }
}

/// Least-squares fit of `A·p^m + B` with `p = 1 − 2r ∈ [0, 1]`.
pub fn rb_fit(lengths: &[usize], survival: &[f64]) -> Result<RbFit> {
    rb_fit_with(lengths, survival, RbFitOptions::default())
}

/// For fixed `p` the model is linear in `(A, B)`, so the fit reduces to a
/// one-dimensional minimization of the profiled residual: a coarse scan
/// locates the basin and golden-section search refines it.
pub fn rb_fit_with(lengths: &[usize], survival: &[f64], opts: RbFitOptions) -> Result<RbFit> {
    if lengths.len() != survival.len() {
        return Err(Error::DimMismatch(lengths.len(), survival.len()));
    }
    let mut distinct = lengths.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InvalidParams("need at least 3 distinct lengths".into()));
    }
    let n = survival.len() as f64;
    let mean = survival.iter().sum::<f64>() / n;
    let spread = survival.iter().fold(0.0f64, |a, &y| a.max((y - mean).abs()));
    if spread < 1e-12 {
        return Ok(RbFit {
            a: 0.0,
            b: mean,
            r: 0.0,
            residual: 0.0,
            degenerate: true,
        });
    }

    let profile = |p: f64| linear_fit(lengths, survival, p);
    const GRID: usize = 2000;
    let (mut best_i, mut best_res) = (0, f64::INFINITY);
    for i in 0..=GRID {
        let res = profile(i as f64 / GRID as f64).2;
        if res < best_res {
            best_i = i;
            best_res = res;
        }
    }
    let mut lo = best_i.saturating_sub(1) as f64 / GRID as f64;
    let mut hi = (best_i + 1).min(GRID) as f64 / GRID as f64;
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (profile(x1).2, profile(x2).2);
    for _ in 0..200 {
        if hi - lo < 1e-15 {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = profile(x1).2;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = profile(x2).2;
        }
    }
    let mut p = 0.5 * (lo + hi);
    let grid_p = best_i as f64 / GRID as f64;
    if profile(grid_p).2 < profile(p).2 {
        p = grid_p;
    }
    let (a, b, residual) = profile(p);
    let rms = (residual / n).sqrt();
    if !rms.is_finite() || rms > opts.max_rms_residual {
        return Err(Error::FitDiverged(residual));
    }
    let degenerate = !(1e-9..=1.0 - 1e-9).contains(&p);
    Ok(RbFit {
        a,
        b,
        r: ((1.0 - p) / 2.0).clamp(0.0, 0.5),
        residual,
        degenerate,
    })
}

/// Ordinary least squares of `y ≈ A·p^m + B`; returns `(A, B, SSR)`.
fn linear_fit(lengths: &[usize], y: &[f64], p: f64) -> (f64, f64, f64) {
    let x: Vec<f64> = lengths.iter().map(|&m| p.powi(m as i32)).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let (a, b) = if sxx < 1e-300 {
        (0.0, my)
    } else {
        let a = sxy / sxx;
        (a, my - a * mx)
    };
    let ssr = x.iter().zip(y).map(|(xi, yi)| (yi - a * xi - b).powi(2)).sum();
    (a, b, ssr)
}

// ---------------------------------------------------------------------------
// Random model circuits

/// One layer is three cycles: `Rx` with random angles on every qubit, `Rz`
/// with random angles on every qubit, then CNOTs on a random disjoint pairing
/// with random orientation.
pub fn model_circuit<R: Rng + ?Sized>(n: usize, layers: usize, rng: &mut R) -> Circuit {
    let mut circ = Circuit::new(n);
    let tau = std::f64::consts::TAU;
    for _ in 0..layers {
        let rx = (0..n).map(|q| Gate::Rx(q, rng.gen::<f64>() * tau)).collect();
        let rz = (0..n).map(|q| Gate::Rz(q, rng.gen::<f64>() * tau)).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let cx = perm
            .chunks_exact(2)
            .map(|p| {
                let (a, b) = if rng.gen::<bool>() { (p[0], p[1]) } else { (p[1], p[0]) };
                Gate::Cnot {
                    control: a,
                    target: b,
                }
            })
            .collect();
        for gates in [rx, rz, cx] {
            circ.push(Cycle::new(n, gates).expect("disjoint by construction"))
                .expect("same width");
        }
    }
    circ
}

/// Default layer count for XEB model circuits.
pub const XEB_LAYERS: usize = 8;

/// Ideal output distribution of `circ` on `|0…0⟩`.
pub fn ideal_distribution(circ: &Circuit) -> Vec<f64> {
    let ket = circ
        .apply_to_ket(&Ket::basis(circ.n_qubits(), 0))
        .expect("widths agree");
    ket.amplitudes().iter().map(|a| a.norm_sqr()).collect()
}

// ---------------------------------------------------------------------------
// Cross-entropy benchmarking

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XebResult {
    /// `ln N + γ`.
    pub h0: f64,
    /// `H(p_A, p_U)`.
    pub cross_entropy: f64,
    /// `H₀ − H(p_A, p_U)`.
    pub delta_h: f64,
    /// Fidelity estimate; equals `delta_h` for an exact test distribution.
    pub alpha: f64,
    /// Standard error of `alpha` for sampled input, zero otherwise.
    pub alpha_stderr: f64,
}

fn check_ideal(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::NotADistribution("empty distribution".into()));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-8 || p.iter().any(|x| !(*x >= -1e-12)) {
        return Err(Error::NotADistribution(format!("ideal sums to {s}")));
    }
    Ok(())
}

/// Cross-entropy difference of a test distribution `p_A` against the ideal
/// `p_U` (natural logarithm).
pub fn xeb_score(ideal: &[f64], test: &[f64]) -> Result<XebResult> {
    check_ideal(ideal)?;
    check_ideal(test)?;
    if ideal.len() != test.len() {
        return Err(Error::DimMismatch(ideal.len(), test.len()));
    }
    let h0 = (ideal.len() as f64).ln() + EULER_GAMMA;
    let mut h = 0.0;
    for (x, (&pu, &pa)) in ideal.iter().zip(test).enumerate() {
        if pa <= 0.0 {
            continue;
        }
        if pu < MIN_IDEAL_PROBABILITY {
            return Err(Error::ZeroIdealProbability(x));
        }
        h -= pa * pu.ln();
    }
    Ok(XebResult {
        h0,
        cross_entropy: h,
        delta_h: h0 - h,
        alpha: h0 - h,
        alpha_stderr: 0.0,
    })
}

/// Estimator `α = H₀ − (1/m) Σ ln(1/p_U(x_j))` from sampled outcomes.
pub fn xeb_from_samples(ideal: &[f64], samples: &[usize]) -> Result<XebResult> {
    check_ideal(ideal)?;
    if samples.is_empty() {
        return Err(Error::InvalidParams("no samples".into()));
    }
    let h0 = (ideal.len() as f64).ln() + EULER_GAMMA;
    let mut terms = Vec::with_capacity(samples.len());
    for &x in samples {
        let pu = *ideal.get(x).ok_or(Error::IndexOutOfRange {
            index: x,
            n_qubits: ideal.len(),
        })?;
        if pu < MIN_IDEAL_PROBABILITY {
            return Err(Error::ZeroIdealProbability(x));
        }
        terms.push(-pu.ln());
    }
    let m = terms.len() as f64;
    let mean = terms.iter().sum::<f64>() / m;
    let var = if terms.len() > 1 {
        terms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    Ok(XebResult {
        h0,
        cross_entropy: mean,
        delta_h: h0 - mean,
        alpha: h0 - mean,
        alpha_stderr: (var / m).sqrt(),
    })
}

// ---------------------------------------------------------------------------
// Heavy outputs and quantum volume

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeavyOutputResult {
    pub heavy_set: Vec<usize>,
    pub heavy_prob: f64,
    pub pass: bool,
}

/// Heavy-output pass threshold.
pub const HEAVY_THRESHOLD: f64 = 2.0 / 3.0;

/// Outcomes whose ideal probability is strictly above the median.
pub fn heavy_set(ideal: &[f64]) -> Vec<usize> {
    let mut sorted = ideal.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    (0..n).filter(|&i| ideal[i] > median).collect()
}

/// Mass of `test` on the heavy set of `ideal`.
pub fn heavy_output_test(ideal: &[f64], test: &[f64]) -> Result<HeavyOutputResult> {
    check_ideal(ideal)?;
    check_ideal(test)?;
    if ideal.len() != test.len() {
        return Err(Error::DimMismatch(ideal.len(), test.len()));
    }
    let heavy = heavy_set(ideal);
    let heavy_prob = heavy.iter().map(|&i| test[i]).sum::<f64>();
    Ok(HeavyOutputResult {
        pass: heavy_prob > HEAVY_THRESHOLD,
        heavy_set: heavy,
        heavy_prob,
    })
}

/// Fraction of sampled outcomes that are heavy.
pub fn heavy_output_from_samples(ideal: &[f64], samples: &[usize]) -> Result<HeavyOutputResult> {
    check_ideal(ideal)?;
    if samples.is_empty() {
        return Err(Error::InvalidParams("no samples".into()));
    }
    let heavy = heavy_set(ideal);
    let mut is_heavy = vec![false; ideal.len()];
    for &i in &heavy {
        is_heavy[i] = true;
    }
    let hits = samples
        .iter()
        .filter(|&&x| is_heavy.get(x).copied().unwrap_or(false))
        .count();
    let heavy_prob = hits as f64 / samples.len() as f64;
    Ok(HeavyOutputResult {
        pass: heavy_prob > HEAVY_THRESHOLD,
        heavy_set: heavy,
        heavy_prob,
    })
}

/// Heavy-output outcome for one circuit width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QvSize {
    pub m: usize,
    pub circuits: usize,
    pub passed_circuits: usize,
    pub mean_heavy_prob: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QvResult {
    pub log2_volume: usize,
    pub sizes: Vec<QvSize>,
}

impl QvResult {
    pub fn volume(&self) -> u64 {
        1u64 << self.log2_volume
    }
}

/// Quantum volume with square model circuits (`m` qubits, `m` layers) for
/// `m = 2..=max_m`. A width passes when more than half of its circuits pass
/// the heavy-output test; the volume is `2^m` for the largest passing `m`.
pub fn quantum_volume(
    noise: &NoiseModel,
    max_m: usize,
    circuits_per_size: usize,
    seed: u64,
) -> Result<QvResult> {
    if !(2..=8).contains(&max_m) {
        return Err(Error::InvalidParams(format!("max_m must be in 2..=8, got {max_m}")));
    }
    if circuits_per_size == 0 {
        return Err(Error::InvalidParams("circuits_per_size must be >= 1".into()));
    }
    noise.validate()?;
    let mut sizes = Vec::new();
    for m in 2..=max_m {
        let probs: Vec<f64> = (0..circuits_per_size)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, m as u64, c as u64]));
                let circ = model_circuit(m, m, &mut rng);
                let ideal = ideal_distribution(&circ);
                let rho = run_noisy(&circ, &DensityMatrix::basis(m, 0), noise);
                let test = measurement_distribution(&rho)?;
                Ok(heavy_output_test(&ideal, &test)?.heavy_prob)
            })
            .collect::<Result<_>>()?;
        let passed_circuits = probs.iter().filter(|&&p| p > HEAVY_THRESHOLD).count();
        sizes.push(QvSize {
            m,
            circuits: circuits_per_size,
            passed_circuits,
            mean_heavy_prob: probs.iter().sum::<f64>() / probs.len() as f64,
            passed: 2 * passed_circuits > circuits_per_size,
        });
    }
    let log2_volume = sizes.iter().filter(|s| s.passed).map(|s| s.m).max().unwrap_or(0);
    Ok(QvResult { log2_volume, sizes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::ket_to_density;

    fn worked_example_state() -> DensityMatrix {
        ket_to_density(
            &Ket::new(vec![C64::new(0.8f64.sqrt(), 0.0), C64::new(0.2f64.sqrt(), 0.0)]).unwrap(),
        )
    }

    #[test]
    fn tomography_exact_example() {
        let t = state_tomography_exact(worked_example_state).unwrap();
        let expect = [1.0, 0.8, 0.0, 0.6];
        for (a, b) in t.s.iter().zip(expect) {
            assert!((a - b).abs() < 1e-10, "{:?}", t.s);
        }
        let rho = t.reconstructed.matrix();
        let want = ComplexMatrix::from_real_rows([[0.8, 0.4], [0.4, 0.2]]);
        assert!(rho.max_abs_diff(&want) < 1e-10);
        let zero = state_tomography_exact(|| DensityMatrix::basis(1, 0)).unwrap();
        for (a, b) in zero.s.iter().zip([1.0, 0.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tomography_sampled_within_tolerance() {
        let t = state_tomography_1q(worked_example_state, 100_000, 5).unwrap();
        for (a, b) in t.s.iter().zip([1.0, 0.8, 0.0, 0.6]) {
            assert!((a - b).abs() <= 0.02, "{:?}", t.s);
        }
        assert!((t.reconstructed.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tomography_y_basis() {
        // |+i⟩ has S₂ = 1.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus_i = ket_to_density(&Ket::new(vec![C64::new(h, 0.0), C64::new(0.0, h)]).unwrap());
        let t = state_tomography_exact(|| plus_i.clone()).unwrap();
        assert!((t.s[2] - 1.0).abs() < 1e-12);
        assert!(t.s[1].abs() < 1e-12 && t.s[3].abs() < 1e-12);
    }

    #[test]
    fn projection_clips_negative_eigenvalues() {
        // S = (1, 1, 1, 0) has Bloch length √2 and is not a state.
        let raw = ComplexMatrix::from_rows([
            [C64::new(0.5, 0.0), C64::new(0.5, -0.5)],
            [C64::new(0.5, 0.5), C64::new(0.5, 0.0)],
        ]);
        let rho = project_to_state(&raw).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn clifford_group_tables() {
        let g = CliffordGroup::get();
        assert_eq!(g.len(), 24);
        for a in 0..24 {
            let prod = g.matrix(a).matmul(g.matrix(g.inverse(a)));
            assert!(phase_distance(&prod, &ComplexMatrix::identity(2)) < 1e-9);
            // Words reproduce matrices.
            let c = Circuit::from_gates(1, g.word(a).iter().copied()).unwrap();
            assert!(phase_distance(&c.unitary(), g.matrix(a)) < 1e-9);
        }
    }

    #[test]
    fn rb_sequences_invert() {
        let g = CliffordGroup::get();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in [1, 2, 7, 30] {
            let seq = rb_sequence(m, &mut rng);
            assert_eq!(seq.len(), m + 1);
            let mut u = ComplexMatrix::identity(2);
            for c in seq {
                u = g.matrix(c).matmul(&u);
            }
            assert!(phase_distance(&u, &ComplexMatrix::identity(2)) < 1e-9);
        }
    }

    #[test]
    fn rb_noiseless_survives() {
        let d = rb_experiment(&[1, 5, 10], 10, &NoiseModel::None, 1).unwrap();
        assert!(d.survival.iter().all(|s| (s - 1.0).abs() < 1e-9));
        let fit = rb_fit(&d.lengths, &d.survival).unwrap();
        assert_eq!(fit.r, 0.0);
        assert!(fit.degenerate);
    }

    #[test]
    fn rb_fit_exact_model() {
        let lengths: Vec<usize> = (1..=32).map(|k| 2 * k).collect();
        let y: Vec<f64> = lengths.iter().map(|&m| 0.5 * 0.98f64.powi(m as i32) + 0.5).collect();
        let fit = rb_fit(&lengths, &y).unwrap();
        assert!((fit.a - 0.5).abs() < 1e-6);
        assert!((fit.b - 0.5).abs() < 1e-6);
        assert!((fit.r - 0.01).abs() < 1e-6);
        assert!(rb_fit(&[1, 1, 2], &[1.0, 0.9, 0.8]).is_err());
    }

    #[test]
    fn rb_fit_rejects_garbage() {
        let lengths = [1, 2, 3, 4, 5, 6];
        let y = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        assert!(matches!(rb_fit(&lengths, &y), Err(Error::FitDiverged(_))));
    }

    #[test]
    fn xeb_identities() {
        let ideal = [0.1, 0.2, 0.3, 0.4];
        let uniform = [0.25; 4];
        let r = xeb_score(&ideal, &uniform).unwrap();
        let h: f64 = ideal.iter().map(|p: &f64| -0.25 * p.ln()).sum();
        assert!((r.delta_h - (r.h0 - h)).abs() < 1e-12);
        assert!((r.h0 - (4f64.ln() + EULER_GAMMA)).abs() < 1e-12);
        assert!(matches!(
            xeb_score(&[0.0, 1.0], &[0.5, 0.5]),
            Err(Error::ZeroIdealProbability(0))
        ));
        assert!(matches!(
            xeb_from_samples(&[0.0, 1.0], &[1, 0]),
            Err(Error::ZeroIdealProbability(0))
        ));
    }

    #[test]
    fn heavy_outputs() {
        let ideal = [0.1, 0.4, 0.2, 0.3];
        assert_eq!(heavy_set(&ideal), vec![1, 3]);
        let r = heavy_output_test(&ideal, &ideal).unwrap();
        assert!((r.heavy_prob - 0.7).abs() < 1e-12 && r.pass);
        let u = heavy_output_test(&ideal, &[0.25; 4]).unwrap();
        assert!((u.heavy_prob - 0.5).abs() < 1e-12 && !u.pass);
        // Ties at the median are not heavy.
        assert_eq!(heavy_set(&[0.25; 4]), Vec::<usize>::new());
        let s = heavy_output_from_samples(&ideal, &[1, 3, 3, 0]).unwrap();
        assert!((s.heavy_prob - 0.75).abs() < 1e-12);
    }

    #[test]
    fn model_circuit_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = model_circuit(5, 3, &mut rng);
        assert_eq!(c.depth(), 9);
        assert_eq!(c.cycles()[2].gates().len(), 2);
        let p = ideal_distribution(&c);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seeds_are_distinct() {
        assert_ne!(derive_seed(&[1, 2]), derive_seed(&[2, 1]));
        assert_ne!(derive_seed(&[0]), derive_seed(&[0, 0]));
    }
}
