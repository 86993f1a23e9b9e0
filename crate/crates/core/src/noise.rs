//! Single-qubit noise channels applied to density matrices.
//!
//! Every channel is stored as a 4×4 superoperator acting on the vectorized
//! 2×2 block `(ρ00, ρ01, ρ10, ρ11)` of the target qubit, so the same kernel
//! serves Pauli mixtures, unitary rotations and damping maps.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{qubit_shift, ComplexMatrix, C64, I, ONE, ZERO};
use crate::state::DensityMatrix;

/// Rotation axis for coherent noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Z,
}

/// A per-qubit, per-cycle noise channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NoiseModel {
    None,
    /// `(1−ε)ρ + εx XρX + εy YρY + εz ZρZ`, `ε = εx + εy + εz`.
    Pauli { px: f64, py: f64, pz: f64 },
    /// Conjugation by `e^{iθP}`.
    Coherent { axis: Axis, theta: f64 },
    /// `e^{iθX}` rotation followed by an X flip with probability `px`.
    PauliPlusCoherent { px: f64, theta: f64 },
    AmplitudeDamping { gamma: f64 },
    /// Z flip with probability `lambda`.
    PhaseDamping { lambda: f64 },
}

/// The noise families swept by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    Pauli,
    Coherent,
    PauliCoherent,
    AmplitudeDamping,
    PhaseDamping,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 6] = [
        NoiseKind::None,
        NoiseKind::Pauli,
        NoiseKind::Coherent,
        NoiseKind::PauliCoherent,
        NoiseKind::AmplitudeDamping,
        NoiseKind::PhaseDamping,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::None => "none",
            NoiseKind::Pauli => "pauli",
            NoiseKind::Coherent => "coherent",
            NoiseKind::PauliCoherent => "pauli_coherent",
            NoiseKind::AmplitudeDamping => "amplitude_damping",
            NoiseKind::PhaseDamping => "phase_damping",
        }
    }

    /// Builds the channel from the single sweep parameter of this kind.
    ///
    /// * Pauli: total error `ε`, split evenly over X, Y and Z.
    /// * Coherent: Z rotation angle `θ`.
    /// * Pauli+coherent: X flip probability `ε` paired with `θ = ε·10π/3`,
    ///   which reproduces the tabulated pairs `(0.01, π/30)`, `(0.02, π/15)`
    ///   and `(0.03, π/10)`.
    /// * Amplitude damping: `γ`. Phase damping: `λ`.
    pub fn model(self, param: f64) -> Result<NoiseModel> {
        let model = match self {
            NoiseKind::None => NoiseModel::None,
            NoiseKind::Pauli => NoiseModel::symmetric_pauli(param),
            NoiseKind::Coherent => NoiseModel::Coherent {
                axis: Axis::Z,
                theta: param,
            },
            NoiseKind::PauliCoherent => NoiseModel::PauliPlusCoherent {
                px: param,
                theta: param * 10.0 * PI / 3.0,
            },
            NoiseKind::AmplitudeDamping => NoiseModel::AmplitudeDamping { gamma: param },
            NoiseKind::PhaseDamping => NoiseModel::PhaseDamping { lambda: param },
        };
        model.validate()?;
        Ok(model)
    }

    /// The sweep parameter at a tabulated noise level.
    pub fn level_param(self, level: u8) -> Result<f64> {
        if level > 3 {
            return Err(Error::UnknownLevel(level));
        }
        let l = level as f64;
        Ok(match self {
            NoiseKind::None => 0.0,
            NoiseKind::Coherent => l * PI / 30.0,
            _ => l * 0.01,
        })
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoiseKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase().replace('-', "_"))
            .ok_or_else(|| Error::Parse(format!("unknown noise kind `{s}`")))
    }
}

/// Channel at a tabulated noise level (0 to 3). Level 0 is the identity.
pub fn noise_level_table(kind: NoiseKind, level: u8) -> Result<NoiseModel> {
    kind.model(kind.level_param(level)?)
}

impl NoiseModel {
    pub fn symmetric_pauli(total: f64) -> Self {
        let p = total / 3.0;
        NoiseModel::Pauli {
            px: p,
            py: p,
            pz: p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!("{name} = {p} is not a probability")))
            }
        };
        let angle = |t: f64| {
            if t.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!("theta = {t} is not finite")))
            }
        };
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::Pauli { px, py, pz } => {
                prob("px", px)?;
                prob("py", py)?;
                prob("pz", pz)?;
                if px + py + pz > 1.0 + 1e-12 {
                    return Err(Error::InvalidParams(format!(
                        "px + py + pz = {} exceeds 1",
                        px + py + pz
                    )));
                }
                Ok(())
            }
            NoiseModel::Coherent { theta, .. } => angle(theta),
            NoiseModel::PauliPlusCoherent { px, theta } => {
                prob("px", px)?;
                angle(theta)
            }
            NoiseModel::AmplitudeDamping { gamma } => prob("gamma", gamma),
            NoiseModel::PhaseDamping { lambda } => prob("lambda", lambda),
        }
    }

    pub fn kind(&self) -> NoiseKind {
        match self {
            NoiseModel::None => NoiseKind::None,
            NoiseModel::Pauli { .. } => NoiseKind::Pauli,
            NoiseModel::Coherent { .. } => NoiseKind::Coherent,
            NoiseModel::PauliPlusCoherent { .. } => NoiseKind::PauliCoherent,
            NoiseModel::AmplitudeDamping { .. } => NoiseKind::AmplitudeDamping,
            NoiseModel::PhaseDamping { .. } => NoiseKind::PhaseDamping,
        }
    }

    pub fn is_identity(&self) -> bool {
        match *self {
            NoiseModel::None => true,
            NoiseModel::Pauli { px, py, pz } => px == 0.0 && py == 0.0 && pz == 0.0,
            NoiseModel::Coherent { theta, .. } => theta == 0.0,
            NoiseModel::PauliPlusCoherent { px, theta } => px == 0.0 && theta == 0.0,
            NoiseModel::AmplitudeDamping { gamma } => gamma == 0.0,
            NoiseModel::PhaseDamping { lambda } => lambda == 0.0,
        }
    }

    /// Kraus operators of the channel.
    pub fn kraus(&self) -> Vec<ComplexMatrix> {
        let scaled = |p: f64, m: ComplexMatrix| m.scale_real(p.max(0.0).sqrt());
        match *self {
            NoiseModel::None => vec![ComplexMatrix::identity(2)],
            NoiseModel::Pauli { px, py, pz } => vec![
                scaled(1.0 - px - py - pz, ComplexMatrix::identity(2)),
                scaled(px, pauli_x()),
                scaled(py, pauli_y()),
                scaled(pz, pauli_z()),
            ],
            NoiseModel::Coherent { axis, theta } => vec![rotation(axis, theta)],
            NoiseModel::PauliPlusCoherent { px, theta } => {
                let r = rotation(Axis::X, theta);
                vec![
                    scaled(1.0 - px, r.clone()),
                    scaled(px, pauli_x().matmul(&r)),
                ]
            }
            NoiseModel::AmplitudeDamping { gamma } => vec![
                ComplexMatrix::from_real_rows([[1.0, 0.0], [0.0, (1.0 - gamma).sqrt()]]),
                ComplexMatrix::from_real_rows([[0.0, gamma.sqrt()], [0.0, 0.0]]),
            ],
            NoiseModel::PhaseDamping { lambda } => vec![
                scaled(1.0 - lambda, ComplexMatrix::identity(2)),
                scaled(lambda, pauli_z()),
            ],
        }
    }

    pub fn superop(&self) -> SuperOp {
        SuperOp::from_kraus(&self.kraus())
    }
}

/// `e^{iθP}` for `P ∈ {X, Z}`.
pub fn rotation(axis: Axis, theta: f64) -> ComplexMatrix {
    let (c, s) = (theta.cos(), theta.sin());
    match axis {
        Axis::Z => ComplexMatrix::diag(&[C64::from_polar(1.0, theta), C64::from_polar(1.0, -theta)]),
        Axis::X => ComplexMatrix::from_rows([
            [C64::new(c, 0.0), I * s],
            [I * s, C64::new(c, 0.0)],
        ]),
    }
}

fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_rows([[ZERO, ONE], [ONE, ZERO]])
}

fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_rows([[ZERO, -I], [I, ZERO]])
}

fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_rows([[ONE, ZERO], [ZERO, -ONE]])
}

/// Superoperator on the vectorized single-qubit block, kept as its non-zero
/// entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOp {
    matrix: [[C64; 4]; 4],
    entries: Vec<(usize, usize, C64)>,
}

impl SuperOp {
    /// `S[(i,j),(k,l)] = Σ_K K_ik conj(K_jl)`.
    pub fn from_kraus(kraus: &[ComplexMatrix]) -> Self {
        let mut matrix = [[ZERO; 4]; 4];
        for k in kraus {
            assert_eq!(k.dim(), 2, "single-qubit Kraus operators only");
            for (row, out) in matrix.iter_mut().enumerate() {
                let (i, j) = (row >> 1, row & 1);
                for (col, entry) in out.iter_mut().enumerate() {
                    let (a, b) = (col >> 1, col & 1);
                    *entry += k[(i, a)] * k[(j, b)].conj();
                }
            }
        }
        Self::from_matrix(matrix)
    }

    fn from_matrix(matrix: [[C64; 4]; 4]) -> Self {
        let mut entries = Vec::new();
        for (r, row) in matrix.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v.norm() > 1e-15 {
                    entries.push((r, c, v));
                }
            }
        }
        Self { matrix, entries }
    }

    /// Applies `other` after `self`.
    pub fn then(&self, other: &SuperOp) -> SuperOp {
        let mut m = [[ZERO; 4]; 4];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                for k in 0..4 {
                    *v += other.matrix[r][k] * self.matrix[k][c];
                }
            }
        }
        Self::from_matrix(m)
    }

    pub fn is_identity(&self) -> bool {
        (0..4).all(|r| {
            (0..4).all(|c| {
                let expected = if r == c { ONE } else { ZERO };
                (self.matrix[r][c] - expected).norm() < 1e-15
            })
        })
    }

    /// Applies the channel to `qubit` of an `n_qubits` density matrix in place.
    pub fn apply(&self, rho: &mut ComplexMatrix, n_qubits: usize, qubit: usize) {
        let d = rho.dim();
        let bit = 1 << qubit_shift(n_qubits, qubit);
        let data = rho.data_mut();
        let mut block = [ZERO; 4];
        let mut out = [ZERO; 4];
        for r in (0..d).filter(|r| r & bit == 0) {
            for c in (0..d).filter(|c| c & bit == 0) {
                let idx = [r * d + c, r * d + c + bit, (r + bit) * d + c, (r + bit) * d + c + bit];
                for (b, &i) in block.iter_mut().zip(&idx) {
                    *b = data[i];
                }
                out.fill(ZERO);
                for &(row, col, v) in &self.entries {
                    out[row] += v * block[col];
                }
                for (o, &i) in out.iter().zip(&idx) {
                    data[i] = *o;
                }
            }
        }
    }
}

/// Applies `model` to a single qubit of `rho`.
pub fn apply_channel(rho: &DensityMatrix, model: &NoiseModel, qubit: usize) -> Result<DensityMatrix> {
    model.validate()?;
    let n = rho.n_qubits();
    if qubit >= n {
        return Err(Error::IndexOutOfRange {
            index: qubit,
            n_qubits: n,
        });
    }
    let mut out = rho.clone();
    model.superop().apply(out.matrix_mut(), n, qubit);
    Ok(out)
}

/// Applies `model` to every qubit of `rho` in place.
pub fn apply_to_all(rho: &mut DensityMatrix, superop: &SuperOp) {
    let n = rho.n_qubits();
    for q in 0..n {
        superop.apply(rho.matrix_mut(), n, q);
    }
}
