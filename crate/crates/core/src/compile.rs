//! Lowering to Clifford+T and randomized compiling.
//!
//! Arbitrary `Rz` angles are approximated by a breadth-first search over
//! words in {H, S, Sdg, T, Tdg}. Words are deduplicated by the unitary they
//! implement (modulo global phase), so each distinct operator is kept once in
//! its shortest, lexicographically smallest spelling.
//!
//! Randomized compiling inserts a random Pauli layer after every easy cycle
//! and folds the compensating Pauli, pushed through the following hard
//! cycle, into the next easy cycle. Two constraints keep every rewritten
//! easy gate inside {I, X, Y, Z, S, Sdg}:
//!
//! * a qubit that meets a T or Tdg in the next hard cycle may only carry
//!   I or Z (Z commutes with T, X does not map to a Pauli);
//! * on a qubit holding S or Sdg, the new twirl must have the same X
//!   component as the incoming correction, since `P·S·C` is diagonal only
//!   when the X parts of `P` and `C` cancel.
//!
//! Both are homogeneous linear equations over GF(2) in the twirl bits, so
//! the admissible twirls form a subspace. Each seed draws a uniform element
//! of it. The Pauli left after the last easy cycle is returned as a frame to
//! be removed in post-processing.

use std::collections::{HashMap, HashSet};
use std::f64::consts::FRAC_PI_2;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, Cycle, Gate, GateSet};
use crate::error::{Error, Result};
use crate::linalg::{phase_distance, ComplexMatrix, C64, ZERO};

/// Default synthesis tolerance for `Rz` approximation.
pub const DEFAULT_RZ_EPS: f64 = 0.05;
/// Longest word the `Rz` search will consider.
pub const MAX_RZ_DEPTH: usize = 2 * TABLE_DEPTH;

// ---------------------------------------------------------------------------
// Euler decomposition

/// Angles `(β, γ, δ)` with `u ≅ Rz(β)·H·Rz(γ)·H·Rz(δ)` up to global phase.
pub fn euler_decompose(u: &ComplexMatrix) -> Result<(f64, f64, f64)> {
    if u.dim() != 2 {
        return Err(Error::DimMismatch(u.dim(), 2));
    }
    let err = u.unitarity_error();
    if err > 1e-9 {
        return Err(Error::NotUnitary(err));
    }
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let v = u.scale(det.sqrt().inv());
    let (a, b) = (v[(0, 0)], v[(0, 1)]);
    let gamma = 2.0 * b.norm().atan2(a.norm());
    // Rz(β)Rx(γ)Rz(δ) has a = e^{-i(β+δ)/2} cos(γ/2), b = −i e^{-i(β−δ)/2} sin(γ/2).
    let sum = if a.norm() > 1e-12 { -2.0 * a.arg() } else { 0.0 };
    let diff = if b.norm() > 1e-12 {
        -2.0 * (b.arg() + FRAC_PI_2)
    } else {
        0.0
    };
    Ok(((sum + diff) / 2.0, gamma, (sum - diff) / 2.0))
}

/// Rebuilds `Rz(β)·H·Rz(γ)·H·Rz(δ)`.
pub fn euler_compose(beta: f64, gamma: f64, delta: f64) -> ComplexMatrix {
    let circ = Circuit::from_gates(
        1,
        [
            Gate::Rz(0, delta),
            Gate::H(0),
            Gate::Rz(0, gamma),
            Gate::H(0),
            Gate::Rz(0, beta),
        ],
    )
    .expect("single-qubit gates on qubit 0");
    circ.unitary()
}

// ---------------------------------------------------------------------------
// Rz synthesis

/// Letters of the synthesis alphabet, in tie-breaking order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CliffordTLetter {
    H,
    S,
    Sdg,
    T,
    Tdg,
}

impl CliffordTLetter {
    pub const ALL: [CliffordTLetter; 5] = [
        CliffordTLetter::H,
        CliffordTLetter::S,
        CliffordTLetter::Sdg,
        CliffordTLetter::T,
        CliffordTLetter::Tdg,
    ];

    pub fn gate(self, qubit: usize) -> Gate {
        match self {
            CliffordTLetter::H => Gate::H(qubit),
            CliffordTLetter::S => Gate::S(qubit),
            CliffordTLetter::Sdg => Gate::Sdg(qubit),
            CliffordTLetter::T => Gate::T(qubit),
            CliffordTLetter::Tdg => Gate::Tdg(qubit),
        }
    }
}

/// An `Rz` approximation: letters in time order and the achieved error.
#[derive(Debug, Clone, PartialEq)]
pub struct RzApprox {
    pub letters: Vec<CliffordTLetter>,
    /// `‖U − e^{iφ}Rz(θ)‖_max` at the overlap-aligned phase.
    pub error: f64,
}

impl RzApprox {
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn gates(&self, qubit: usize) -> Vec<Gate> {
        self.letters.iter().map(|l| l.gate(qubit)).collect()
    }

    pub fn unitary(&self) -> ComplexMatrix {
        word_unitary(&self.letters)
    }
}

/// Product of a word applied left to right in time.
pub fn word_unitary(letters: &[CliffordTLetter]) -> ComplexMatrix {
    let mut m = [C64::new(1.0, 0.0), ZERO, ZERO, C64::new(1.0, 0.0)];
    for &l in letters {
        m = mul2(&letter_matrix(l), &m);
    }
    ComplexMatrix::from_vec(m.to_vec())
}

type M2 = [C64; 4];

fn letter_matrix(l: CliffordTLetter) -> M2 {
    let g = l.gate(0).local_matrix();
    [g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]]
}

fn mul2(a: &M2, b: &M2) -> M2 {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

/// Phase-normalized, quantized fingerprint of a 2×2 unitary.
fn fingerprint(m: &M2) -> [i64; 8] {
    let pivot = m
        .iter()
        .find(|z| z.norm() > 1e-6)
        .copied()
        .unwrap_or(C64::new(1.0, 0.0));
    let phase = (pivot / pivot.norm()).conj();
    let mut key = [0i64; 8];
    for (i, z) in m.iter().enumerate() {
        let w = z * phase;
        key[2 * i] = (w.re * 1e9).round() as i64;
        key[2 * i + 1] = (w.im * 1e9).round() as i64;
    }
    key
}

fn adjoint2(m: &M2) -> M2 {
    [m[0].conj(), m[2].conj(), m[1].conj(), m[3].conj()]
}

/// Unit quaternion `(a, b, c, d)` with `m ∝ aI − i(bX + cY + dZ)`, defined up
/// to sign. Left multiplication by a unitary is an isometry in this chart.
fn quaternion(m: &M2) -> [f64; 4] {
    let det = m[0] * m[3] - m[1] * m[2];
    let s = det.sqrt().inv();
    let (u00, u01) = (m[0] * s, m[1] * s);
    [u00.re, -u01.im, -u01.re, -u00.im]
}

/// Same quantity as [`phase_distance`] for 2×2 operators, without allocating.
fn m2_phase_distance(a: &M2, b: &M2) -> f64 {
    let overlap: C64 = a.iter().zip(b).map(|(x, y)| y.conj() * x).sum();
    let n = overlap.norm();
    let phase = if n < 1e-300 { C64::new(1.0, 0.0) } else { overlap / n };
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - phase * y).norm())
        .fold(0.0, f64::max)
}

/// Errors closer than this are treated as equal when breaking ties.
fn error_key(err: f64) -> i64 {
    (err * 1e12).round() as i64
}

struct Node {
    parent: u32,
    letter: CliffordTLetter,
    level: u8,
    matrix: M2,
    quat: [f64; 4],
}

/// Words longer than this are found by joining two table entries.
const TABLE_DEPTH: usize = 20;

/// Every distinct unitary reachable with at most [`TABLE_DEPTH`] letters, in
/// breadth-first order, each stored once under its shortest and then
/// lexicographically smallest spelling.
struct WordTable {
    nodes: Vec<Node>,
}

impl WordTable {
    fn build(depth: usize) -> Self {
        let id = [C64::new(1.0, 0.0), ZERO, ZERO, C64::new(1.0, 0.0)];
        let mut seen = HashSet::new();
        seen.insert(fingerprint(&id));
        let mut nodes = vec![Node {
            parent: u32::MAX,
            letter: CliffordTLetter::H,
            level: 0,
            matrix: id,
            quat: quaternion(&id),
        }];
        let mut prev = 0..1;
        for level in 1..=depth {
            let start = nodes.len();
            for parent in prev {
                for letter in CliffordTLetter::ALL {
                    let matrix = mul2(&letter_matrix(letter), &nodes[parent].matrix);
                    if seen.insert(fingerprint(&matrix)) {
                        nodes.push(Node {
                            parent: parent as u32,
                            letter,
                            level: level as u8,
                            matrix,
                            quat: quaternion(&matrix),
                        });
                    }
                }
            }
            prev = start..nodes.len();
        }
        Self { nodes }
    }

    fn word(&self, mut idx: usize) -> Vec<CliffordTLetter> {
        let mut letters = Vec::with_capacity(self.nodes[idx].level as usize);
        while idx != 0 {
            letters.push(self.nodes[idx].letter);
            idx = self.nodes[idx].parent as usize;
        }
        letters.reverse();
        letters
    }

    /// First entry (breadth-first order) of minimal length and, within that
    /// length, minimal error, among those accepted by `within`.
    fn scan_shortest(&self, target: &M2, max_len: usize, eps: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (idx, node) in self.nodes.iter().enumerate() {
            if node.level as usize > max_len {
                break;
            }
            if let Some((b, _)) = best {
                if node.level > self.nodes[b].level {
                    break;
                }
            }
            let err = m2_phase_distance(&node.matrix, target);
            if err <= eps && best.is_none_or(|(_, e)| error_key(err) < error_key(e)) {
                best = Some((idx, err));
            }
        }
        best
    }

    /// Entry with the smallest error among lengths `<= max_len`.
    fn scan_best(&self, target: &M2, max_len: usize) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (idx, node) in self.nodes.iter().enumerate() {
            if node.level as usize > max_len {
                break;
            }
            let err = m2_phase_distance(&node.matrix, target);
            if error_key(err) < error_key(best.1) {
                best = (idx, err);
            }
        }
        best
    }
}

/// Uniform grid over quaternion space holding every table entry under both
/// signs, for fixed-radius neighbour queries.
struct QuatGrid {
    cell: f64,
    cells: HashMap<[i32; 4], Vec<u32>>,
}

impl QuatGrid {
    fn new(table: &WordTable, cell: f64) -> Self {
        let mut cells: HashMap<[i32; 4], Vec<u32>> = HashMap::new();
        for (idx, node) in table.nodes.iter().enumerate() {
            for sign in [1.0, -1.0] {
                let q = node.quat.map(|x| sign * x);
                cells.entry(Self::key(q, cell)).or_default().push(idx as u32);
            }
        }
        Self { cell, cells }
    }

    fn key(q: [f64; 4], cell: f64) -> [i32; 4] {
        q.map(|x| (x / cell).floor() as i32)
    }

    /// Entries within one cell of `q` in every coordinate.
    fn neighbours(&self, q: [f64; 4], out: &mut Vec<u32>) {
        out.clear();
        let k = Self::key(q, self.cell);
        for d0 in -1..=1 {
            for d1 in -1..=1 {
                for d2 in -1..=1 {
                    for d3 in -1..=1 {
                        let key = [k[0] + d0, k[1] + d1, k[2] + d2, k[3] + d3];
                        if let Some(v) = self.cells.get(&key) {
                            out.extend_from_slice(v);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
    }
}

fn quat_distance(p: &[f64; 4], q: &[f64; 4]) -> f64 {
    let minus: f64 = p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum();
    let plus: f64 = p.iter().zip(q).map(|(a, b)| (a + b).powi(2)).sum();
    minus.min(plus).sqrt()
}

/// How candidate words are ranked.
#[derive(Clone, Copy)]
enum Rank {
    /// Shortest word with error at most the given bound.
    Shortest(f64),
    /// Smallest error.
    Best,
}

/// Searches words `a ++ b` (time order) with both halves from the table.
///
/// A word with max-abs error `e` has quaternion distance at most `√2·e` to
/// the target, so querying that radius around `U(b)†·R` for every `b` finds
/// every admissible word up to twice the table depth.
fn join_search(
    table: &WordTable,
    target: &M2,
    max_len: usize,
    radius: f64,
    rank: Rank,
) -> Option<(Vec<CliffordTLetter>, f64)> {
    let grid = QuatGrid::new(table, radius.max(1e-9));
    let mut best: Option<(usize, i64, Vec<CliffordTLetter>, f64)> = None;
    let mut found = Vec::new();
    for (bi, b) in table.nodes.iter().enumerate() {
        let lb = b.level as usize;
        if lb > max_len {
            break;
        }
        let t = mul2(&adjoint2(&b.matrix), target);
        let tq = quaternion(&t);
        grid.neighbours(tq, &mut found);
        for &ai in &found {
            let a = &table.nodes[ai as usize];
            let len = a.level as usize + lb;
            if len > max_len || quat_distance(&a.quat, &tq) > radius {
                continue;
            }
            let err = m2_phase_distance(&mul2(&b.matrix, &a.matrix), target);
            let ek = error_key(err);
            let primary = match rank {
                Rank::Shortest(eps) => {
                    if err > eps {
                        continue;
                    }
                    (len as i64, ek)
                }
                Rank::Best => (ek, len as i64),
            };
            let current = best.as_ref().map(|(l, e, _, _)| match rank {
                Rank::Shortest(_) => (*l as i64, *e),
                Rank::Best => (*e, *l as i64),
            });
            if current.is_some_and(|c| primary > c) {
                continue;
            }
            let mut word = table.word(ai as usize);
            word.extend(table.word(bi));
            if current.is_some_and(|c| primary == c)
                && best.as_ref().is_some_and(|(_, _, w, _)| *w <= word)
            {
                continue;
            }
            best = Some((len, ek, word, err));
        }
    }
    best.map(|(_, _, w, e)| (w, e))
}

fn word_table() -> &'static WordTable {
    static TABLE: OnceLock<WordTable> = OnceLock::new();
    TABLE.get_or_init(|| WordTable::build(TABLE_DEPTH))
}

fn rz_m2(theta: f64) -> M2 {
    let m = Gate::Rz(0, theta).local_matrix();
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
}

type CacheKey = (u64, u64, usize);

fn result_cache() -> &'static Mutex<HashMap<CacheKey, RzApprox>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, RzApprox>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shortest word over {H, S, Sdg, T, Tdg} whose unitary is within `eps` of
/// `Rz(theta)` (max-abs, modulo global phase), searching up to
/// [`MAX_RZ_DEPTH`] letters. Among words of that length the smallest error
/// wins, then the lexicographically first word (H < S < Sdg < T < Tdg).
pub fn approx_rz(theta: f64, eps: f64) -> Result<RzApprox> {
    approx_rz_with_depth(theta, eps, MAX_RZ_DEPTH)
}

/// As [`approx_rz`] with an explicit length budget (capped at
/// [`MAX_RZ_DEPTH`]).
pub fn approx_rz_with_depth(theta: f64, eps: f64, max_depth: usize) -> Result<RzApprox> {
    if !(eps >= 1e-4) {
        return Err(Error::OutOfRange(eps));
    }
    let max_depth = max_depth.min(MAX_RZ_DEPTH);
    let key = (theta.to_bits(), eps.to_bits(), max_depth);
    if let Some(hit) = result_cache().lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return Ok(hit.clone());
    }
    let table = word_table();
    let target = rz_m2(theta);
    let found = match table.scan_shortest(&target, max_depth, eps) {
        Some((idx, error)) => Some((table.word(idx), error)),
        // Every word up to the table depth has been ruled out, so the radius
        // query only ever sees tight candidates.
        None if max_depth > TABLE_DEPTH => join_search(
            table,
            &target,
            max_depth,
            std::f64::consts::SQRT_2 * eps + 1e-12,
            Rank::Shortest(eps),
        ),
        None => None,
    };
    match found {
        Some((letters, error)) => {
            let approx = RzApprox { letters, error };
            result_cache()
                .lock()
                .unwrap_or_else(|e| e.into_inner())
                .insert(key, approx.clone());
            Ok(approx)
        }
        None => Err(Error::SearchExhausted {
            depth: max_depth,
            eps,
            best: best_rz_within(theta, max_depth).error,
        }),
    }
}

/// The most accurate word of length at most `max_depth` (capped at
/// [`MAX_RZ_DEPTH`]); shorter words win ties.
pub fn best_rz_within(theta: f64, max_depth: usize) -> RzApprox {
    let max_depth = max_depth.min(MAX_RZ_DEPTH);
    let table = word_table();
    let target = rz_m2(theta);
    let (idx, err) = table.scan_best(&target, max_depth);
    if max_depth <= TABLE_DEPTH {
        return RzApprox {
            letters: table.word(idx),
            error: err,
        };
    }
    let radius = std::f64::consts::SQRT_2 * err + 1e-12;
    let (letters, error) = join_search(table, &target, max_depth, radius, Rank::Best)
        .expect("the table optimum is itself a candidate");
    RzApprox { letters, error }
}

// ---------------------------------------------------------------------------
// Controlled rotations and lowering

/// Controlled-Rz as `Rz_t(θ/2) · CNOT · Rz_t(−θ/2) · CNOT` (time order).
pub fn controlled_rz_gates(theta: f64, control: usize, target: usize) -> Vec<Gate> {
    vec![
        Gate::Rz(target, theta / 2.0),
        Gate::Cnot { control, target },
        Gate::Rz(target, -theta / 2.0),
        Gate::Cnot { control, target },
    ]
}

/// `diag(1, 1, 1, e^{iφ})` up to global phase: controlled-Rz(φ) plus
/// `Rz(φ/2)` on the control.
pub fn controlled_phase_gates(phi: f64, control: usize, target: usize) -> Vec<Gate> {
    let mut gates = vec![Gate::Rz(control, phi / 2.0)];
    gates.extend(controlled_rz_gates(phi, control, target));
    gates
}

/// Controlled-Rz(θ) as a circuit over {Rz, CNOT}.
pub fn lower_controlled_rz(theta: f64, control: usize, target: usize) -> Result<Circuit> {
    if control == target {
        return Err(Error::DuplicateIndex(control));
    }
    Circuit::from_gates(control.max(target) + 1, controlled_rz_gates(theta, control, target))
}

/// Replaces every `Rz`/`Rx` by Clifford+T words within `eps` and reschedules.
/// `Rx(θ)` is lowered as `H · Rz(θ) · H`.
pub fn lower_to_clifford_t(circ: &Circuit, eps: f64) -> Result<Circuit> {
    let mut gates = Vec::new();
    for g in circ.gates() {
        match *g {
            Gate::Rz(q, theta) => gates.extend(approx_rz(theta, eps)?.gates(q)),
            Gate::Rx(q, theta) => {
                gates.push(Gate::H(q));
                gates.extend(approx_rz(theta, eps)?.gates(q));
                gates.push(Gate::H(q));
            }
            Gate::Toffoli { c1, c2, target } => {
                gates.extend(crate::circuit::toffoli_gates(c1, c2, target))
            }
            Gate::I(_) => {}
            other => gates.push(other),
        }
    }
    Circuit::from_gates(circ.n_qubits(), gates)
}

// ---------------------------------------------------------------------------
// Easy/hard partition and idle interleaving

/// Role of a gate under randomized compiling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateClass {
    /// I, X, Y, Z, S, Sdg.
    Easy,
    /// H, T, Tdg, CNOT.
    Hard,
    /// Continuous rotations and Toffoli; not admissible in a Clifford+T circuit.
    Unsupported,
}

/// The easy/hard split used for randomized compiling.
pub struct RcPartition;

impl RcPartition {
    pub fn classify(g: &Gate) -> GateClass {
        match g {
            Gate::I(_) | Gate::X(_) | Gate::Y(_) | Gate::Z(_) | Gate::S(_) | Gate::Sdg(_) => {
                GateClass::Easy
            }
            Gate::H(_) | Gate::T(_) | Gate::Tdg(_) | Gate::Cnot { .. } => GateClass::Hard,
            Gate::Rz(..) | Gate::Rx(..) | Gate::Toffoli { .. } => GateClass::Unsupported,
        }
    }

    pub fn is_hard_cycle(c: &Cycle) -> bool {
        c.gates().iter().any(|g| Self::classify(g) == GateClass::Hard)
    }
}

/// Inserts an idle cycle between every pair of adjacent hard cycles.
pub fn interleave_idle(circ: &Circuit) -> Circuit {
    let mut out = Circuit::new(circ.n_qubits());
    let mut prev_hard = false;
    for c in circ.cycles() {
        let hard = RcPartition::is_hard_cycle(c);
        if hard && prev_hard {
            out.push(Cycle::idle(circ.n_qubits())).expect("same width");
        }
        out.push(c.clone()).expect("same width");
        prev_hard = hard;
    }
    out
}

// ---------------------------------------------------------------------------
// Pauli frames

/// An n-qubit Pauli operator modulo phase, as X and Z bit masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct PauliFrame {
    pub x: u64,
    pub z: u64,
    pub n_qubits: usize,
}

impl PauliFrame {
    pub fn identity(n_qubits: usize) -> Self {
        Self {
            x: 0,
            z: 0,
            n_qubits,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn on(&self, q: usize) -> (bool, bool) {
        ((self.x >> q) & 1 == 1, (self.z >> q) & 1 == 1)
    }

    pub fn gate_on(&self, q: usize) -> Option<Gate> {
        match self.on(q) {
            (false, false) => None,
            (true, false) => Some(Gate::X(q)),
            (true, true) => Some(Gate::Y(q)),
            (false, true) => Some(Gate::Z(q)),
        }
    }

    /// Gates that undo the frame (Paulis are self-inverse up to phase).
    pub fn correction_gates(&self) -> Vec<Gate> {
        (0..self.n_qubits).filter_map(|q| self.gate_on(q)).collect()
    }

    /// Measurement outcomes are flipped on the qubits where the frame has an
    /// X component. Returns the basis-index mask to XOR into outcomes.
    pub fn outcome_flip_mask(&self) -> usize {
        (0..self.n_qubits)
            .filter(|&q| self.on(q).0)
            .map(|q| 1usize << crate::linalg::qubit_shift(self.n_qubits, q))
            .fold(0, |a, b| a | b)
    }

    /// `G · P · G†` for a Clifford(+T on Z-only qubits) cycle.
    pub fn conjugate_through(&self, c: &Cycle) -> PauliFrame {
        let mut f = *self;
        for g in c.gates() {
            match *g {
                Gate::H(q) => {
                    let (x, z) = f.on(q);
                    f.set(q, z, x);
                }
                Gate::S(q) | Gate::Sdg(q) => {
                    let (x, z) = f.on(q);
                    f.set(q, x, z ^ x);
                }
                Gate::Cnot { control, target } => {
                    let (xc, zc) = f.on(control);
                    let (xt, zt) = f.on(target);
                    f.set(target, xt ^ xc, zt);
                    f.set(control, xc, zc ^ zt);
                }
                Gate::T(q) | Gate::Tdg(q) => {
                    debug_assert!(!f.on(q).0, "X component cannot pass a T gate");
                }
                _ => {}
            }
        }
        f
    }

    fn set(&mut self, q: usize, x: bool, z: bool) {
        let bit = 1u64 << q;
        self.x = (self.x & !bit) | if x { bit } else { 0 };
        self.z = (self.z & !bit) | if z { bit } else { 0 };
    }
}

// ---------------------------------------------------------------------------
// Randomized compiling

/// A randomly compiled circuit and the Pauli frame still to be undone.
///
/// `circuit.unitary() ≅ frame · original.unitary()` up to global phase.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedCircuit {
    circuit: Circuit,
    frame: PauliFrame,
}

impl RandomizedCircuit {
    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn frame(&self) -> &PauliFrame {
        &self.frame
    }

    pub fn into_parts(self) -> (Circuit, PauliFrame) {
        (self.circuit, self.frame)
    }
}

/// Dense GF(2) row over `words` 64-bit words.
type BitRow = Vec<u64>;

fn get_bit(row: &[u64], i: usize) -> bool {
    (row[i / 64] >> (i % 64)) & 1 == 1
}

fn flip_bit(row: &mut [u64], i: usize) {
    row[i / 64] ^= 1 << (i % 64);
}

/// Precomputed twirl constraints for one circuit; sampling per seed is cheap.
#[derive(Debug, Clone)]
pub struct RandomizedCompiler {
    circuit: Circuit,
    easy: Vec<usize>,
    /// Reduced rows `(pivot, row)`; `row` has the pivot bit set.
    pivots: Vec<(usize, BitRow)>,
    free: Vec<usize>,
    n_vars: usize,
}

impl RandomizedCompiler {
    pub fn new(circ: &Circuit) -> Result<Self> {
        let n = circ.n_qubits();
        if n > 64 {
            return Err(Error::InvalidParams(format!(
                "randomized compiling supports at most 64 qubits, got {n}"
            )));
        }
        if let Some(g) = circ
            .gates()
            .find(|g| RcPartition::classify(g) == GateClass::Unsupported)
        {
            return Err(Error::InvalidParams(format!(
                "gate {g} is outside the Clifford+T set; lower the circuit first"
            )));
        }
        let hard: Vec<bool> = circ.cycles().iter().map(RcPartition::is_hard_cycle).collect();
        if let Some(i) = hard.windows(2).position(|w| w[0] && w[1]) {
            return Err(Error::NotInterleaved(i, i + 1));
        }
        let easy: Vec<usize> = (0..hard.len()).filter(|&i| !hard[i]).collect();
        let n_vars = 2 * n * easy.len();
        let words = n_vars.div_ceil(64).max(1);
        // Variable layout for twirl k: x bits at 2nk + q, z bits at 2nk + n + q.
        let xv = |k: usize, q: usize| 2 * n * k + q;
        let zv = |k: usize, q: usize| 2 * n * k + n + q;

        let mut rows: Vec<BitRow> = Vec::new();
        for (k, &e) in easy.iter().enumerate() {
            // The twirl must clear T gates in the following hard cycle.
            if let Some(next) = circ.cycles().get(e + 1).filter(|_| hard.get(e + 1) == Some(&true)) {
                for g in next.gates() {
                    if let Gate::T(q) | Gate::Tdg(q) = *g {
                        let mut row = vec![0u64; words];
                        flip_bit(&mut row, xv(k, q));
                        rows.push(row);
                    }
                }
            }
            // S/Sdg qubits: x(P_k) = x(C_k), with C_k the previous twirl pushed
            // through the cycles in between (the identity before the first twirl).
            let s_qubits: Vec<usize> = circ.cycles()[e]
                .gates()
                .iter()
                .filter_map(|g| match *g {
                    Gate::S(q) | Gate::Sdg(q) => Some(q),
                    _ => None,
                })
                .collect();
            if s_qubits.is_empty() {
                continue;
            }
            if k == 0 {
                for &q in &s_qubits {
                    let mut row = vec![0u64; words];
                    flip_bit(&mut row, xv(0, q));
                    rows.push(row);
                }
                continue;
            }
            let between: Vec<&Cycle> = circ.cycles()[easy[k - 1] + 1..e].iter().collect();
            // Image of each unit Pauli of twirl k−1.
            let mut images = Vec::with_capacity(2 * n);
            for bit in 0..2 * n {
                let mut f = PauliFrame::identity(n);
                if bit < n {
                    f.x = 1 << bit;
                } else {
                    f.z = 1 << (bit - n);
                }
                for c in &between {
                    f = conjugate_linear(&f, c);
                }
                images.push(f);
            }
            for &q in &s_qubits {
                let mut row = vec![0u64; words];
                flip_bit(&mut row, xv(k, q));
                for (bit, img) in images.iter().enumerate() {
                    if img.on(q).0 {
                        let var = if bit < n { xv(k - 1, bit) } else { zv(k - 1, bit - n) };
                        flip_bit(&mut row, var);
                    }
                }
                rows.push(row);
            }
        }

        // Reduced row echelon form.
        let mut pivots: Vec<(usize, BitRow)> = Vec::new();
        let mut is_pivot = vec![false; n_vars];
        for mut row in rows {
            for (p, prow) in &pivots {
                if get_bit(&row, *p) {
                    row.iter_mut().zip(prow).for_each(|(a, b)| *a ^= b);
                }
            }
            let Some(p) = (0..n_vars).find(|&i| get_bit(&row, i)) else {
                continue;
            };
            for (_, prow) in pivots.iter_mut() {
                if get_bit(prow, p) {
                    prow.iter_mut().zip(&row).for_each(|(a, b)| *a ^= b);
                }
            }
            is_pivot[p] = true;
            pivots.push((p, row));
        }
        let free = (0..n_vars).filter(|&i| !is_pivot[i]).collect();
        Ok(Self {
            circuit: circ.clone(),
            easy,
            pivots,
            free,
            n_vars,
        })
    }

    /// Number of independent random bits per compilation.
    pub fn twirl_dimension(&self) -> usize {
        self.free.len()
    }

    pub fn compile(&self, seed: u64) -> RandomizedCircuit {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.circuit.n_qubits();
        let mut bits = vec![0u64; self.n_vars.div_ceil(64).max(1)];
        for &f in &self.free {
            if rng.gen::<bool>() {
                flip_bit(&mut bits, f);
            }
        }
        for (p, row) in &self.pivots {
            let parity = row
                .iter()
                .zip(&bits)
                .map(|(a, b)| (a & b).count_ones())
                .sum::<u32>()
                % 2;
            // The pivot bit itself is still zero in `bits`.
            if parity == 1 {
                flip_bit(&mut bits, *p);
            }
        }
        let twirl = |k: usize| {
            let mut f = PauliFrame::identity(n);
            for q in 0..n {
                if get_bit(&bits, 2 * n * k + q) {
                    f.x |= 1 << q;
                }
                if get_bit(&bits, 2 * n * k + n + q) {
                    f.z |= 1 << q;
                }
            }
            f
        };

        let mut out = Circuit::new(n);
        let mut pending = PauliFrame::identity(n);
        let mut k = 0;
        for (i, c) in self.circuit.cycles().iter().enumerate() {
            if k < self.easy.len() && self.easy[k] == i {
                let p = twirl(k);
                out.push(dress_easy_cycle(c, &pending, &p)).expect("same width");
                pending = p;
                k += 1;
            } else {
                pending = pending.conjugate_through(c);
                out.push(c.clone()).expect("same width");
            }
        }
        RandomizedCircuit {
            circuit: out,
            frame: pending,
        }
    }
}

/// Pauli conjugation used for constraint images; ignores the T restriction
/// because images of forbidden bits are never realised.
fn conjugate_linear(f: &PauliFrame, c: &Cycle) -> PauliFrame {
    let mut g = *f;
    for gate in c.gates() {
        match *gate {
            Gate::H(q) => {
                let (x, z) = g.on(q);
                g.set(q, z, x);
            }
            Gate::S(q) | Gate::Sdg(q) => {
                let (x, z) = g.on(q);
                g.set(q, x, z ^ x);
            }
            Gate::Cnot { control, target } => {
                let (xc, zc) = g.on(control);
                let (xt, zt) = g.on(target);
                g.set(target, xt ^ xc, zt);
                g.set(control, xc, zc ^ zt);
            }
            _ => {}
        }
    }
    g
}

/// `P · E · C` per qubit, re-expressed as a single easy gate.
fn dress_easy_cycle(c: &Cycle, correction: &PauliFrame, twirl: &PauliFrame) -> Cycle {
    let n = c.width();
    let mut gates = Vec::new();
    for q in 0..n {
        let mut m = ComplexMatrix::identity(2);
        if let Some(g) = correction.gate_on(q) {
            m = g.on(&[0]).local_matrix().matmul(&m);
        }
        if let Some(g) = c.gate_on(q) {
            m = g.on(&[0]).local_matrix().matmul(&m);
        }
        if let Some(g) = twirl.gate_on(q) {
            m = g.on(&[0]).local_matrix().matmul(&m);
        }
        let candidates = [
            Gate::I(q),
            Gate::X(q),
            Gate::Y(q),
            Gate::Z(q),
            Gate::S(q),
            Gate::Sdg(q),
        ];
        let gate = candidates
            .into_iter()
            .find(|g| phase_distance(&m, &g.on(&[0]).local_matrix()) < 1e-9)
            .expect("twirl constraints keep easy gates in {I, X, Y, Z, S, Sdg}");
        if !gate.is_identity() {
            gates.push(gate);
        }
    }
    Cycle::new(n, gates).expect("one gate per qubit")
}

/// Randomly compiles an interleaved Clifford+T circuit.
pub fn randomized_compile(circ: &Circuit, seed: u64) -> Result<RandomizedCircuit> {
    if circ.gate_set() != GateSet::CliffordT {
        return Err(Error::InvalidParams(
            "randomized compiling needs a Clifford+T circuit".into(),
        ));
    }
    Ok(RandomizedCompiler::new(circ)?.compile(seed))
}
