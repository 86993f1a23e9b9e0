//! Quality metrics for states, operations and outcome distributions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64, ONE, ZERO};
use crate::state::{ket_to_density, DensityMatrix, Ket};

/// A named metric value with the tolerance it was computed under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
}

impl MetricValue {
    pub fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
        }
    }

    /// True when the value lies in `[0, 1]` up to the tolerance.
    pub fn in_unit_interval(&self) -> bool {
        self.value >= -self.tolerance && self.value <= 1.0 + self.tolerance
    }
}

fn check_dims(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    let (da, db) = (a.matrix().dim(), b.matrix().dim());
    if da != db {
        return Err(Error::DimMismatch(da, db));
    }
    Ok(())
}

/// `Tr[ideal · noisy]`.
///
/// This is the state overlap, which coincides with the Uhlmann fidelity only
/// when `ideal` is pure; a warning is logged otherwise.
pub fn process_fidelity(ideal: &DensityMatrix, noisy: &DensityMatrix) -> Result<f64> {
    check_dims(ideal, noisy)?;
    let purity = ideal.purity();
    if purity < 1.0 - 1e-6 {
        log::warn!("process_fidelity: ideal state is mixed (purity {purity:.6})");
    }
    let f = ideal.matrix().trace_product(noisy.matrix());
    debug_assert!(f.im.abs() < 1e-9, "imaginary residue {}", f.im);
    Ok(f.re)
}

/// The six single-qubit axis states |0⟩, |1⟩, |+⟩, |−⟩, |+i⟩, |−i⟩.
pub fn axis_states() -> [Ket; 6] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = |a: C64, b: C64| Ket::new(vec![a, b]).expect("normalized axis state");
    [
        r(ONE, ZERO),
        r(ZERO, ONE),
        r(C64::new(h, 0.0), C64::new(h, 0.0)),
        r(C64::new(h, 0.0), C64::new(-h, 0.0)),
        r(C64::new(h, 0.0), C64::new(0.0, h)),
        r(C64::new(h, 0.0), C64::new(0.0, -h)),
    ]
}

/// Mean process fidelity between `ideal |ψ⟩` and `noisy(|ψ⟩⟨ψ|)` over the
/// six axis states.
pub fn average_gate_fidelity<F>(ideal: &ComplexMatrix, noisy: F) -> Result<f64>
where
    F: Fn(&DensityMatrix) -> Result<DensityMatrix>,
{
    if ideal.dim() != 2 {
        return Err(Error::DimMismatch(ideal.dim(), 2));
    }
    let mut total = 0.0;
    for psi in axis_states() {
        let out_ideal = apply_unitary_ket(ideal, &psi);
        let out_noisy = noisy(&ket_to_density(&psi))?;
        check_dims(&ket_to_density(&out_ideal), &out_noisy)?;
        total += out_noisy.expectation_of_ket(&out_ideal);
    }
    Ok(total / 6.0)
}

/// Average gate fidelity of `u` followed by one application of `noise`.
pub fn average_gate_fidelity_with_noise(
    u: &ComplexMatrix,
    noise: &crate::noise::NoiseModel,
) -> Result<f64> {
    noise.validate()?;
    average_gate_fidelity(u, |rho| {
        let m = u.matmul(rho.matrix()).matmul(&u.adjoint());
        let evolved = DensityMatrix::new(m)?;
        crate::noise::apply_channel(&evolved, noise, 0)
    })
}

fn apply_unitary_ket(u: &ComplexMatrix, psi: &Ket) -> Ket {
    let a = psi.amplitudes();
    let out = (0..2)
        .map(|r| u[(r, 0)] * a[0] + u[(r, 1)] * a[1])
        .collect();
    Ket::new(out).expect("unitary preserves norm")
}

/// `½ Tr √((a−b)†(a−b))`, i.e. half the sum of |eigenvalues| of `a − b`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_dims(a, b)?;
    let diff = a.matrix() - b.matrix();
    let evals = diff.hermitian_eigenvalues()?;
    Ok(0.5 * evals.iter().map(|e| e.abs()).sum::<f64>())
}

/// Bounds `(1 − √F, √(1 − F))` on the trace distance implied by fidelity `F`.
pub fn fidelity_trace_bounds(f: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::OutOfRange(f));
    }
    Ok((1.0 - f.sqrt(), (1.0 - f).sqrt()))
}

fn check_distribution(p: &[f64], label: &str) -> Result<()> {
    if let Some(x) = p.iter().find(|x| !(**x >= -1e-12)) {
        return Err(Error::NotADistribution(format!("{label} has entry {x}")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-8 {
        return Err(Error::NotADistribution(format!("{label} sums to {s}")));
    }
    Ok(())
}

/// Hellinger distance `√(½ Σ (√pᵢ − √qᵢ)²)` and fidelity `1 − distance`.
pub fn hellinger(p: &[f64], q: &[f64]) -> Result<(f64, f64)> {
    if p.len() != q.len() {
        return Err(Error::NotADistribution(format!(
            "lengths differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    let sum: f64 = p
        .iter()
        .zip(q)
        .map(|(a, b)| (a.max(0.0).sqrt() - b.max(0.0).sqrt()).powi(2))
        .sum();
    let d = (0.5 * sum).sqrt().min(1.0);
    Ok((d, 1.0 - d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{Axis, NoiseModel};

    fn dm(rows: [[f64; 2]; 2]) -> DensityMatrix {
        DensityMatrix::new(ComplexMatrix::from_real_rows(rows)).unwrap()
    }

    #[test]
    fn fidelity_examples() {
        let zero = dm([[1.0, 0.0], [0.0, 0.0]]);
        let one = dm([[0.0, 0.0], [0.0, 1.0]]);
        let mixed = dm([[0.5, 0.0], [0.0, 0.5]]);
        assert!((process_fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-15);
        assert!(process_fidelity(&zero, &one).unwrap().abs() < 1e-15);
        assert!((process_fidelity(&zero, &mixed).unwrap() - 0.5).abs() < 1e-15);
        let two = DensityMatrix::basis(2, 0);
        assert!(matches!(process_fidelity(&zero, &two), Err(Error::DimMismatch(2, 4))));
    }

    #[test]
    fn trace_distance_examples() {
        let zero = dm([[1.0, 0.0], [0.0, 0.0]]);
        let one = dm([[0.0, 0.0], [0.0, 1.0]]);
        let mixed = dm([[0.5, 0.0], [0.0, 0.5]]);
        assert!(trace_distance(&zero, &zero).unwrap().abs() < 1e-12);
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-12);
        assert!((trace_distance(&zero, &mixed).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bounds_examples() {
        assert_eq!(fidelity_trace_bounds(1.0).unwrap(), (0.0, 0.0));
        assert_eq!(fidelity_trace_bounds(0.0).unwrap(), (1.0, 1.0));
        let (lo, hi) = fidelity_trace_bounds(0.5).unwrap();
        assert!((lo - 0.292_893_218_8).abs() < 1e-9);
        assert!((hi - 0.5f64.sqrt()).abs() < 1e-9);
        assert!(matches!(fidelity_trace_bounds(1.5), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn hellinger_examples() {
        let (d, f) = hellinger(&[0.3, 0.7], &[0.3, 0.7]).unwrap();
        assert!(d.abs() < 1e-12 && (f - 1.0).abs() < 1e-12);
        let (d, _) = hellinger(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        let (d, _) = hellinger(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((d - (1.0 - 0.5f64.sqrt()).sqrt()).abs() < 1e-12);
        assert!((d - 0.5412).abs() < 1e-4);
        assert!(matches!(hellinger(&[0.5, 0.6], &[0.5, 0.5]), Err(Error::NotADistribution(_))));
        assert!(matches!(hellinger(&[1.0], &[0.5, 0.5]), Err(Error::NotADistribution(_))));
    }

    #[test]
    fn average_gate_fidelity_oracles() {
        let id = ComplexMatrix::identity(2);
        let f = average_gate_fidelity_with_noise(&id, &NoiseModel::None).unwrap();
        assert!((f - 1.0).abs() < 1e-12);

        // Symmetric Pauli ε: Z eigenstates survive X and Y (prob 2ε/3 lost),
        // likewise for the other axes, so every state keeps 1 − 2ε/3.
        let eps = 0.06;
        let f = average_gate_fidelity_with_noise(&id, &NoiseModel::symmetric_pauli(eps)).unwrap();
        assert!((f - (1.0 - 2.0 * eps / 3.0)).abs() < 1e-12);

        // Coherent Z θ: |0⟩,|1⟩ unchanged; the four equatorial states keep cos²θ.
        let theta = 0.2;
        let coh = NoiseModel::Coherent { axis: Axis::Z, theta };
        let f = average_gate_fidelity_with_noise(&id, &coh).unwrap();
        let oracle = (2.0 + 4.0 * theta.cos().powi(2)) / 6.0;
        assert!((f - oracle).abs() < 1e-12);
    }
}
