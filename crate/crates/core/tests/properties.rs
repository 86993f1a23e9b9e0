use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qnoise::benchlib::qaoa_gates;
use qnoise::benchlib::MaxCutGraph;
use qnoise::circuit::{Circuit, Gate};
use qnoise::compile::{best_rz_within, interleave_idle, lower_controlled_rz, RandomizedCompiler};
use qnoise::linalg::{phase_distance, ComplexMatrix};
use qnoise::metrics::{fidelity_trace_bounds, hellinger, process_fidelity, trace_distance};
use qnoise::noise::{apply_channel, NoiseKind, NoiseModel};
use qnoise::protocols::{heavy_set, rb_sequence, state_tomography_exact, xeb_score, CliffordGroup};
use qnoise::state::{ket_to_density, DensityMatrix, Ket};

fn random_ket(n: usize, rng: &mut impl Rng) -> Ket {
    let amps: Vec<C64> = (0..1 << n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    Ket::new(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

/// `A A† / Tr(A A†)` for a random complex `A`: a full-rank mixed state.
fn random_density(n: usize, rng: &mut impl Rng) -> DensityMatrix {
    let d = 1 << n;
    let a = ComplexMatrix::from_vec(
        (0..d * d)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect(),
    );
    let m = a.matmul(&a.adjoint());
    let tr = m.trace().re;
    DensityMatrix::new(m.scale_real(1.0 / tr)).unwrap()
}

fn random_model(kind_index: usize, u: f64) -> NoiseModel {
    let kind = NoiseKind::ALL[kind_index % NoiseKind::ALL.len()];
    let param = match kind {
        NoiseKind::Coherent => u * std::f64::consts::PI,
        NoiseKind::PauliCoherent => u * 0.09,
        _ => u,
    };
    kind.model(param).unwrap()
}

fn clifford_t_gate(choice: u8, q: usize, other: usize) -> Gate {
    match choice % 11 {
        0 => Gate::X(q),
        1 => Gate::Y(q),
        2 => Gate::Z(q),
        3 => Gate::S(q),
        4 => Gate::Sdg(q),
        5 => Gate::H(q),
        6 => Gate::T(q),
        7 => Gate::Tdg(q),
        8 => Gate::I(q),
        _ => Gate::Cnot {
            control: q,
            target: other,
        },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn randomized_compiling_preserves_the_unitary(
        spec in prop::collection::vec((any::<u8>(), 0usize..4, 1usize..4), 1..30),
        seed in any::<u64>(),
    ) {
        let gates: Vec<Gate> = spec
            .iter()
            .map(|&(c, q, off)| clifford_t_gate(c, q, (q + off) % 4))
            .collect();
        let circ = interleave_idle(&Circuit::from_gates(4, gates).unwrap());
        let rc = RandomizedCompiler::new(&circ).unwrap().compile(seed);
        prop_assert_eq!(rc.circuit().depth(), circ.depth());
        let mut total = rc.circuit().clone();
        total.extend(&Circuit::from_gates(4, rc.frame().correction_gates()).unwrap()).unwrap();
        prop_assert!(phase_distance(&total.unitary(), &circ.unitary()) < 1e-8);
    }

    #[test]
    fn channels_preserve_trace_and_positivity(
        kind in 0usize..6, u in 0.0f64..1.0, qubit in 0usize..2, seed in any::<u64>(),
    ) {
        let model = random_model(kind, u);
        let rho = random_density(2, &mut ChaCha8Rng::seed_from_u64(seed));
        let out = apply_channel(&rho, &model, qubit).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() < 1e-10);
        prop_assert!(out.trace().im.abs() < 1e-12);
        let min = out.matrix().hermitian_eigenvalues().unwrap()[0];
        prop_assert!(min >= -1e-9);
    }

    #[test]
    fn kraus_operators_are_complete(kind in 0usize..6, u in 0.0f64..1.0) {
        let model = random_model(kind, u);
        let mut sum = ComplexMatrix::zeros(2);
        for k in model.kraus() {
            sum = &sum + &k.adjoint().matmul(&k);
        }
        prop_assert!(sum.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn fidelity_bounds_trace_distance(kind in 0usize..6, u in 0.0f64..1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = ket_to_density(&random_ket(1, &mut rng));
        let noisy = apply_channel(&psi, &random_model(kind, u), 0).unwrap();
        let f = process_fidelity(&psi, &noisy).unwrap().clamp(0.0, 1.0);
        let d = trace_distance(&psi, &noisy).unwrap();
        let (lo, hi) = fidelity_trace_bounds(f).unwrap();
        prop_assert!(lo <= d + 1e-8 && d <= hi + 1e-8, "F={f} D={d}");
    }

    #[test]
    fn trace_distance_is_a_metric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_density(2, &mut rng);
        let b = random_density(2, &mut rng);
        let c = random_density(2, &mut rng);
        let ab = trace_distance(&a, &b).unwrap();
        prop_assert!((ab - trace_distance(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
        prop_assert!(ab <= trace_distance(&a, &c).unwrap() + trace_distance(&c, &b).unwrap() + 1e-12);
        prop_assert!(trace_distance(&a, &a).unwrap() < 1e-12);
    }

    #[test]
    fn process_fidelity_is_linear_in_the_noisy_state(p in 0.0f64..1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = ket_to_density(&random_ket(2, &mut rng));
        let a = random_density(2, &mut rng);
        let b = random_density(2, &mut rng);
        let mix = &a.matrix().scale_real(p) + &b.matrix().scale_real(1.0 - p);
        let mix = DensityMatrix::new(mix).unwrap();
        let lhs = process_fidelity(&psi, &mix).unwrap();
        let rhs = p * process_fidelity(&psi, &a).unwrap() + (1.0 - p) * process_fidelity(&psi, &b).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&lhs));
    }

    #[test]
    fn hellinger_is_symmetric_and_bounded(
        p in prop::collection::vec(0.0f64..1.0, 2..16), seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q: Vec<f64> = (0..p.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let norm = |v: &[f64]| {
            let s: f64 = v.iter().sum::<f64>().max(1e-300);
            v.iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let (p, q) = (norm(&p), norm(&q));
        prop_assume!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assume!((q.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let (d1, f1) = hellinger(&p, &q).unwrap();
        let (d2, _) = hellinger(&q, &p).unwrap();
        prop_assert!((d1 - d2).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&d1));
        prop_assert!((f1 + d1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_tomography_round_trips(r in 0.0f64..1.0, theta in 0.0f64..std::f64::consts::PI, phi in 0.0f64..std::f64::consts::TAU) {
        let (x, y, z) = (r * theta.sin() * phi.cos(), r * theta.sin() * phi.sin(), r * theta.cos());
        let rho = ComplexMatrix::from_rows([
            [C64::new(0.5 * (1.0 + z), 0.0), C64::new(0.5 * x, -0.5 * y)],
            [C64::new(0.5 * x, 0.5 * y), C64::new(0.5 * (1.0 - z), 0.0)],
        ]);
        let state = DensityMatrix::new(rho.clone()).unwrap();
        let result = state_tomography_exact(|| state.clone()).unwrap();
        prop_assert!(result.reconstructed.matrix().max_abs_diff(&rho) < 1e-10);
        prop_assert!((result.s[1] - x).abs() < 1e-10);
        prop_assert!((result.s[2] - y).abs() < 1e-10);
        prop_assert!((result.s[3] - z).abs() < 1e-10);
    }

    #[test]
    fn rb_sequences_invert_to_identity(m in 1usize..40, seed in any::<u64>()) {
        let group = CliffordGroup::get();
        let seq = rb_sequence(m, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(seq.len(), m + 1);
        let mut u = ComplexMatrix::identity(2);
        for &c in &seq {
            u = group.matrix(c).matmul(&u);
        }
        prop_assert!(phase_distance(&u, &ComplexMatrix::identity(2)) < 1e-9);
    }

    #[test]
    fn heavy_set_is_at_most_half(p in prop::collection::vec(0.0f64..1.0, 1..64)) {
        let heavy = heavy_set(&p);
        prop_assert!(2 * heavy.len() <= p.len());
        let mut sorted = p.clone();
        sorted.sort_by(f64::total_cmp);
        for &i in &heavy {
            prop_assert!(2 * sorted.iter().filter(|&&x| x < p[i]).count() >= p.len() / 2);
        }
    }

    #[test]
    fn xeb_of_uniform_test_matches_closed_form(p in prop::collection::vec(0.01f64..1.0, 2..32)) {
        let s: f64 = p.iter().sum();
        let ideal: Vec<f64> = p.iter().map(|x| x / s).collect();
        let n = ideal.len() as f64;
        let uniform = vec![1.0 / n; ideal.len()];
        let r = xeb_score(&ideal, &uniform).unwrap();
        let oracle = n.ln() + qnoise::protocols::EULER_GAMMA + ideal.iter().map(|x| x.ln()).sum::<f64>() / n;
        prop_assert!((r.delta_h - oracle).abs() < 1e-10);
        prop_assert!((r.alpha - r.delta_h).abs() < 1e-15);
    }

    #[test]
    fn qaoa_edge_term_matches_controlled_rz_lowering(
        gamma in -3.2f64..3.2,
        edges in prop::collection::btree_set((0usize..4, 0usize..4), 1..6),
    ) {
        let edges: Vec<(usize, usize)> = edges.into_iter().filter(|(u, v)| u != v).collect();
        prop_assume!(!edges.is_empty());
        let graph = MaxCutGraph { n_vertices: 4, edges: edges.clone() };
        // Cost layer alone: drop the Hadamard layer and the mixer.
        let cost: Vec<Gate> = qaoa_gates(&graph, 0.0, gamma, 1)
            .into_iter()
            .filter(|g| matches!(g, Gate::Cnot { .. } | Gate::Rz(..)))
            .collect();
        let direct = Circuit::from_gates(4, cost).unwrap().unitary();
        let mut lowered = Circuit::new(4);
        for &(u, v) in &edges {
            lowered.extend(&Circuit::from_gates(4, [Gate::Rz(v, gamma)]).unwrap()).unwrap();
            let wide = Circuit::from_gates(4, lower_controlled_rz(-2.0 * gamma, u, v).unwrap().gates().copied()).unwrap();
            lowered.extend(&wide).unwrap();
        }
        prop_assert!(phase_distance(&direct, &lowered.unitary()) < 1e-9);
        // Diagonal oracle: phase −γ/2 · Σ z_u z_v with z = ±1.
        let mut oracle = ComplexMatrix::zeros(16);
        for x in 0..16usize {
            let z = |q: usize| if (x >> (3 - q)) & 1 == 1 { -1.0 } else { 1.0 };
            let phase: f64 = edges.iter().map(|&(u, v)| -0.5 * gamma * z(u) * z(v)).sum();
            oracle[(x, x)] = C64::from_polar(1.0, phase);
        }
        prop_assert!(phase_distance(&direct, &oracle) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rz_search_error_is_monotone_in_depth(theta in -3.2f64..3.2) {
        let mut last = f64::INFINITY;
        for depth in [2usize, 4, 6, 8, 10, 12] {
            let e = best_rz_within(theta, depth).error;
            prop_assert!(e <= last + 1e-12);
            last = e;
        }
    }
}
