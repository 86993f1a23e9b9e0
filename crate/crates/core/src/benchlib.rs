//! The seven benchmark circuits and max-cut scoring.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{toffoli_gates, Circuit, Cycle, Gate, GateSet};
use crate::compile::{controlled_phase_gates, lower_to_clifford_t, DEFAULT_RZ_EPS};
use crate::error::{Error, Result};
use crate::linalg::qubit_shift;

/// Benchmark identifiers, addressable by their lower-case names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkId {
    Idle,
    Random,
    Adder,
    Qft,
    QftCt,
    Qaoa,
    QaoaCt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    ProcessFidelity,
    ExpectationValue,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::ProcessFidelity => "process_fidelity",
            Metric::ExpectationValue => "expectation_value",
        }
    }
}

/// Depth of a benchmark: a sweepable range or a value fixed by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DepthSpec {
    Range { min: usize, max: usize },
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub id: BenchmarkId,
    pub n_qubits: usize,
    pub depth: DepthSpec,
    pub gate_set: GateSet,
    pub metric: Metric,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 7] = [
        BenchmarkId::Idle,
        BenchmarkId::Random,
        BenchmarkId::Adder,
        BenchmarkId::Qft,
        BenchmarkId::QftCt,
        BenchmarkId::Qaoa,
        BenchmarkId::QaoaCt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkId::Idle => "idle",
            BenchmarkId::Random => "random",
            BenchmarkId::Adder => "adder",
            BenchmarkId::Qft => "qft",
            BenchmarkId::QftCt => "qft_ct",
            BenchmarkId::Qaoa => "qaoa",
            BenchmarkId::QaoaCt => "qaoa_ct",
        }
    }

    pub fn spec(self) -> BenchmarkSpec {
        use BenchmarkId::*;
        let (n_qubits, depth, gate_set, metric) = match self {
            Idle | Random => (
                4,
                DepthSpec::Range { min: 2, max: 70 },
                GateSet::CliffordT,
                Metric::ProcessFidelity,
            ),
            Adder => (7, DepthSpec::Fixed, GateSet::CliffordT, Metric::ProcessFidelity),
            Qft => (4, DepthSpec::Fixed, GateSet::ParamRotations, Metric::ProcessFidelity),
            QftCt => (4, DepthSpec::Fixed, GateSet::CliffordT, Metric::ProcessFidelity),
            Qaoa => (8, DepthSpec::Fixed, GateSet::ParamRotations, Metric::ExpectationValue),
            QaoaCt => (8, DepthSpec::Fixed, GateSet::CliffordT, Metric::ExpectationValue),
        };
        BenchmarkSpec {
            id: self,
            n_qubits,
            depth,
            gate_set,
            metric,
        }
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        BenchmarkId::ALL
            .into_iter()
            .find(|b| b.name() == key)
            .ok_or_else(|| Error::Parse(format!("unknown benchmark `{s}`")))
    }
}

// ---------------------------------------------------------------------------
// Max-cut

/// An undirected graph on qubit-indexed vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxCutGraph {
    pub n_vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl MaxCutGraph {
    /// The 3-cube: vertices are 3-bit labels, edges join labels at Hamming
    /// distance one. Bipartite, so every edge can be cut.
    pub fn hypercube_q3() -> Self {
        let mut edges = Vec::new();
        for v in 0..8usize {
            for bit in 0..3 {
                let w = v ^ (1 << bit);
                if v < w {
                    edges.push((v, w));
                }
            }
        }
        Self { n_vertices: 8, edges }
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// Number of edges whose endpoints fall on different sides of `x`, with
    /// vertex `v` read from qubit `v` of the basis index.
    pub fn cut_value(&self, x: usize) -> usize {
        let bit = |v: usize| (x >> qubit_shift(self.n_vertices, v)) & 1;
        self.edges.iter().filter(|&&(a, b)| bit(a) != bit(b)).count()
    }

    /// Exhaustive maximum cut.
    pub fn max_cut(&self) -> usize {
        (0..1usize << self.n_vertices)
            .map(|x| self.cut_value(x))
            .max()
            .unwrap_or(0)
    }
}

/// `Σ_x p(x)·cut(x)`.
pub fn maxcut_expectation(dist: &[f64], graph: &MaxCutGraph) -> Result<f64> {
    let n = 1usize << graph.n_vertices;
    if dist.len() != n {
        return Err(Error::DimMismatch(dist.len(), n));
    }
    Ok(dist
        .iter()
        .enumerate()
        .map(|(x, p)| p * graph.cut_value(x) as f64)
        .sum())
}

/// Mixer angle maximizing the noiseless p = 1 expectation on the 3-cube,
/// from a grid search over `[0, π]²` with step 0.01.
pub const QAOA_BETA: f64 = 2.36;
/// Cost angle paired with [`QAOA_BETA`].
pub const QAOA_GAMMA: f64 = 2.53;
/// Synthesis tolerance for the Clifford+T QAOA variant.
pub const QAOA_CT_EPS: f64 = 0.02;

// ---------------------------------------------------------------------------
// Constructors

fn cycle(n: usize, gates: Vec<Gate>) -> Cycle {
    Cycle::new(n, gates).expect("benchmark constructors keep cycles disjoint")
}

/// `depth` cycles of identity gates on all `n` qubits.
pub fn build_idle(n: usize, depth: usize) -> Result<Circuit> {
    if n == 0 || depth == 0 {
        return Err(Error::InvalidParams("idle needs n >= 1 and depth >= 1".into()));
    }
    let cycles = (0..depth)
        .map(|_| cycle(n, (0..n).map(Gate::I).collect()))
        .collect();
    Circuit::from_cycles(n, cycles)
}

/// Probability that a random cycle contains a CNOT.
pub const RANDOM_CNOT_RATE: f64 = 0.25;

/// Random cycles over {I, X, Y, Z, H, CNOT}. With probability
/// [`RANDOM_CNOT_RATE`] a cycle places one CNOT on a random ordered pair; all
/// other qubits get a uniform choice among the five single-qubit gates.
pub fn build_random(n: usize, depth: usize, seed: u64) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::InvalidParams("random circuits need n >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cycles = Vec::with_capacity(depth);
    for _ in 0..depth {
        let mut gates = Vec::with_capacity(n);
        let mut used = vec![false; n];
        if rng.gen_bool(RANDOM_CNOT_RATE) {
            let mut qs: Vec<usize> = (0..n).collect();
            qs.shuffle(&mut rng);
            gates.push(Gate::Cnot {
                control: qs[0],
                target: qs[1],
            });
            used[qs[0]] = true;
            used[qs[1]] = true;
        }
        for (q, _) in used.iter().enumerate().filter(|(_, u)| !**u) {
            gates.push(match rng.gen_range(0..5) {
                0 => Gate::I(q),
                1 => Gate::X(q),
                2 => Gate::Y(q),
                3 => Gate::Z(q),
                _ => Gate::H(q),
            });
        }
        cycles.push(cycle(n, gates));
    }
    Circuit::from_cycles(n, cycles)
}

/// Register layout of the ripple-carry adder: `a_i`, `b_i`, `c_i` qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdderLayout {
    pub bits: usize,
}

impl AdderLayout {
    pub fn n_qubits(&self) -> usize {
        3 * self.bits + 1
    }

    pub fn a(&self, i: usize) -> usize {
        i
    }

    pub fn b(&self, i: usize) -> usize {
        self.bits + i
    }

    /// Carry `i` for `i` in `0..=bits`; carry 0 stays zero.
    pub fn c(&self, i: usize) -> usize {
        2 * self.bits + i
    }

    /// Basis index holding `a` and `b` (bit `i` of each on `a_i`, `b_i`).
    pub fn input_index(&self, a: u64, b: u64) -> usize {
        let n = self.n_qubits();
        let mut x = 0usize;
        for i in 0..self.bits {
            if (a >> i) & 1 == 1 {
                x |= 1 << qubit_shift(n, self.a(i));
            }
            if (b >> i) & 1 == 1 {
                x |= 1 << qubit_shift(n, self.b(i));
            }
        }
        x
    }

    /// The sum read from `b_0..b_{bits-1}` and the top carry.
    pub fn read_sum(&self, x: usize) -> u64 {
        let n = self.n_qubits();
        let bit = |q: usize| ((x >> qubit_shift(n, q)) & 1) as u64;
        let mut s = 0u64;
        for i in 0..self.bits {
            s |= bit(self.b(i)) << i;
        }
        s | (bit(self.c(self.bits)) << self.bits)
    }

    /// The `a` register, which the adder leaves untouched.
    pub fn read_a(&self, x: usize) -> u64 {
        let n = self.n_qubits();
        (0..self.bits)
            .map(|i| (((x >> qubit_shift(n, self.a(i))) & 1) as u64) << i)
            .sum()
    }
}

/// Ripple-carry adder on `3·bits + 1` qubits with Toffolis decomposed into
/// Clifford+T. Each full adder is `CCX(a,b→c')`, `CX(a→b)`, `CCX(c,b→c')`,
/// `CX(c→b)`, leaving the sum bit on `b` and the carry on `c'`.
pub fn build_adder(bits: usize) -> Result<Circuit> {
    if bits == 0 {
        return Err(Error::InvalidParams("adder needs at least one bit".into()));
    }
    let l = AdderLayout { bits };
    let mut gates = Vec::new();
    for i in 0..bits {
        gates.extend(toffoli_gates(l.a(i), l.b(i), l.c(i + 1)));
        gates.push(Gate::Cnot {
            control: l.a(i),
            target: l.b(i),
        });
        gates.extend(toffoli_gates(l.c(i), l.b(i), l.c(i + 1)));
        gates.push(Gate::Cnot {
            control: l.c(i),
            target: l.b(i),
        });
    }
    Circuit::from_gates(l.n_qubits(), gates)
}

/// QFT without the final qubit reversal: `H` on qubit `k`, then controlled
/// phases `π/2^j` from each later qubit. The parameterized form uses
/// `{H, Rz, CNOT}`; the Clifford+T form replaces each `Rz` by an
/// approximation within `eps`.
pub fn build_qft(n: usize, gate_set: GateSet) -> Result<Circuit> {
    build_qft_with_eps(n, gate_set, DEFAULT_RZ_EPS)
}

pub fn build_qft_with_eps(n: usize, gate_set: GateSet, eps: f64) -> Result<Circuit> {
    if n == 0 {
        return Err(Error::InvalidParams("qft needs n >= 1".into()));
    }
    let mut gates = Vec::new();
    for k in 0..n {
        gates.push(Gate::H(k));
        for j in k + 1..n {
            let phi = PI / f64::powi(2.0, (j - k) as i32);
            gates.extend(controlled_phase_gates(phi, j, k));
        }
    }
    let circ = Circuit::from_gates(n, gates)?;
    match gate_set {
        GateSet::ParamRotations => Ok(circ),
        GateSet::CliffordT => lower_to_clifford_t(&circ, eps),
    }
}

/// Gates of `p` QAOA stages: a Hadamard layer, then per stage
/// `CNOT·Rz_v(γ)·CNOT = exp(−iγ Z_u Z_v / 2)` for every edge `(u, v)` followed
/// by `Rx(β)` on every vertex.
pub fn qaoa_gates(graph: &MaxCutGraph, beta: f64, gamma: f64, p: usize) -> Vec<Gate> {
    let n = graph.n_vertices;
    let mut gates: Vec<Gate> = (0..n).map(Gate::H).collect();
    for _ in 0..p {
        for &(u, v) in &graph.edges {
            gates.push(Gate::Cnot {
                control: u,
                target: v,
            });
            gates.push(Gate::Rz(v, gamma));
            gates.push(Gate::Cnot {
                control: u,
                target: v,
            });
        }
        gates.extend((0..n).map(|q| Gate::Rx(q, beta)));
    }
    gates
}

pub fn build_qaoa(
    graph: &MaxCutGraph,
    beta: f64,
    gamma: f64,
    p: usize,
    gate_set: GateSet,
) -> Result<Circuit> {
    build_qaoa_with_eps(graph, beta, gamma, p, gate_set, QAOA_CT_EPS)
}

pub fn build_qaoa_with_eps(
    graph: &MaxCutGraph,
    beta: f64,
    gamma: f64,
    p: usize,
    gate_set: GateSet,
    eps: f64,
) -> Result<Circuit> {
    if p == 0 {
        return Err(Error::InvalidParams("qaoa needs p >= 1".into()));
    }
    let circ = Circuit::from_gates(graph.n_vertices, qaoa_gates(graph, beta, gamma, p))?;
    match gate_set {
        GateSet::ParamRotations => Ok(circ),
        GateSet::CliffordT => lower_to_clifford_t(&circ, eps),
    }
}

/// Noiseless max-cut expectation of a circuit started in `|0…0⟩`.
pub fn noiseless_expectation(circ: &Circuit, graph: &MaxCutGraph) -> Result<f64> {
    let dist = crate::protocols::ideal_distribution(circ);
    maxcut_expectation(&dist, graph)
}

/// Exhaustive search of the noiseless p = 1 expectation over a square grid
/// `[0, π]²` with the given step. Returns `(β, γ, expectation)`.
pub fn qaoa_grid_search(graph: &MaxCutGraph, step: f64) -> Result<(f64, f64, f64)> {
    let steps = (PI / step).floor() as usize;
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for gi in 0..=steps {
        let gamma = gi as f64 * step;
        for bi in 0..=steps {
            let beta = bi as f64 * step;
            let circ = Circuit::from_gates(graph.n_vertices, qaoa_gates(graph, beta, gamma, 1))?;
            let e = noiseless_expectation(&circ, graph)?;
            if e > best.2 + 1e-12 {
                best = (beta, gamma, e);
            }
        }
    }
    Ok(best)
}

/// Builds the benchmark circuit for `id`. `depth` applies to the idle and
/// random benchmarks; `seed` only to random. The circuit is not interleaved.
pub fn build_benchmark(id: BenchmarkId, depth: usize, seed: u64) -> Result<Circuit> {
    let spec = id.spec();
    match id {
        BenchmarkId::Idle => build_idle(spec.n_qubits, depth),
        BenchmarkId::Random => build_random(spec.n_qubits, depth, seed),
        BenchmarkId::Adder => build_adder(2),
        BenchmarkId::Qft => build_qft(spec.n_qubits, GateSet::ParamRotations),
        BenchmarkId::QftCt => build_qft(spec.n_qubits, GateSet::CliffordT),
        BenchmarkId::Qaoa | BenchmarkId::QaoaCt => build_qaoa(
            &MaxCutGraph::hypercube_q3(),
            QAOA_BETA,
            QAOA_GAMMA,
            1,
            spec.gate_set,
        ),
    }
}
