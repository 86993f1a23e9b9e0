//! Gates, cycles, circuits and their density-matrix simulation.
//!
//! A [`Cycle`] is one time step: every gate in it acts simultaneously on
//! disjoint qubits. Noise is injected after the gates of each cycle on every
//! qubit, idle or not.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use crate::compile::RandomizedCompiler;
use crate::error::{Error, Result};
use crate::linalg::{
    apply_local_left, apply_local_right_adjoint, apply_local_vec, ComplexMatrix, C64, I as IM, ONE, ZERO,
};
use crate::noise::{apply_to_all, NoiseModel};
use crate::state::{DensityMatrix, Ket};

/// A gate together with the qubits it acts on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    I(usize),
    X(usize),
    Y(usize),
    Z(usize),
    H(usize),
    S(usize),
    Sdg(usize),
    T(usize),
    Tdg(usize),
    /// `diag(e^{-iθ/2}, e^{iθ/2})`.
    Rz(usize, f64),
    /// `e^{-iθX/2}`.
    Rx(usize, f64),
    Cnot { control: usize, target: usize },
    Toffoli { c1: usize, c2: usize, target: usize },
}

/// Up to three qubit indices, most-significant first in the local matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Qubits {
    buf: [usize; 3],
    len: usize,
}

impl Deref for Qubits {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.buf[..self.len]
    }
}

impl Gate {
    pub fn qubits(&self) -> Qubits {
        use Gate::*;
        let (buf, len) = match *self {
            I(q) | X(q) | Y(q) | Z(q) | H(q) | S(q) | Sdg(q) | T(q) | Tdg(q) | Rz(q, _) | Rx(q, _) => {
                ([q, 0, 0], 1)
            }
            Cnot { control, target } => ([control, target, 0], 2),
            Toffoli { c1, c2, target } => ([c1, c2, target], 3),
        };
        Qubits { buf, len }
    }

    pub fn name(&self) -> &'static str {
        use Gate::*;
        match self {
            I(_) => "I",
            X(_) => "X",
            Y(_) => "Y",
            Z(_) => "Z",
            H(_) => "H",
            S(_) => "S",
            Sdg(_) => "SDG",
            T(_) => "T",
            Tdg(_) => "TDG",
            Rz(..) => "RZ",
            Rx(..) => "RX",
            Cnot { .. } => "CNOT",
            Toffoli { .. } => "CCX",
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Gate::I(_))
    }

    /// Matrix on the gate's own qubits.
    pub fn local_matrix(&self) -> ComplexMatrix {
        use Gate::*;
        let h = FRAC_1_SQRT_2;
        match *self {
            I(_) => ComplexMatrix::identity(2),
            X(_) => ComplexMatrix::from_rows([[ZERO, ONE], [ONE, ZERO]]),
            Y(_) => ComplexMatrix::from_rows([[ZERO, -IM], [IM, ZERO]]),
            Z(_) => ComplexMatrix::diag(&[ONE, -ONE]),
            H(_) => ComplexMatrix::from_real_rows([[h, h], [h, -h]]),
            S(_) => ComplexMatrix::diag(&[ONE, IM]),
            Sdg(_) => ComplexMatrix::diag(&[ONE, -IM]),
            T(_) => ComplexMatrix::diag(&[ONE, C64::from_polar(1.0, PI / 4.0)]),
            Tdg(_) => ComplexMatrix::diag(&[ONE, C64::from_polar(1.0, -PI / 4.0)]),
            Rz(_, theta) => ComplexMatrix::diag(&[
                C64::from_polar(1.0, -theta / 2.0),
                C64::from_polar(1.0, theta / 2.0),
            ]),
            Rx(_, theta) => {
                let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
                ComplexMatrix::from_rows([
                    [C64::new(c, 0.0), C64::new(0.0, -s)],
                    [C64::new(0.0, -s), C64::new(c, 0.0)],
                ])
            }
            Cnot { .. } => {
                let mut m = ComplexMatrix::zeros(4);
                for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
                    m[(r, c)] = ONE;
                }
                m
            }
            Toffoli { .. } => {
                let mut m = ComplexMatrix::identity(8);
                m[(6, 6)] = ZERO;
                m[(7, 7)] = ZERO;
                m[(6, 7)] = ONE;
                m[(7, 6)] = ONE;
                m
            }
        }
    }

    pub fn inverse(&self) -> Gate {
        use Gate::*;
        match *self {
            S(q) => Sdg(q),
            Sdg(q) => S(q),
            T(q) => Tdg(q),
            Tdg(q) => T(q),
            Rz(q, t) => Rz(q, -t),
            Rx(q, t) => Rx(q, -t),
            g => g,
        }
    }

    /// The same gate kind moved to other qubits, in the order of [`Gate::qubits`].
    pub fn on(&self, qubits: &[usize]) -> Gate {
        use Gate::*;
        match *self {
            I(_) => I(qubits[0]),
            X(_) => X(qubits[0]),
            Y(_) => Y(qubits[0]),
            Z(_) => Z(qubits[0]),
            H(_) => H(qubits[0]),
            S(_) => S(qubits[0]),
            Sdg(_) => Sdg(qubits[0]),
            T(_) => T(qubits[0]),
            Tdg(_) => Tdg(qubits[0]),
            Rz(_, t) => Rz(qubits[0], t),
            Rx(_, t) => Rx(qubits[0], t),
            Cnot { .. } => Cnot {
                control: qubits[0],
                target: qubits[1],
            },
            Toffoli { .. } => Toffoli {
                c1: qubits[0],
                c2: qubits[1],
                target: qubits[2],
            },
        }
    }

    fn check(&self, n_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        for (i, &q) in qs.iter().enumerate() {
            if q >= n_qubits {
                return Err(Error::IndexOutOfRange { index: q, n_qubits });
            }
            if qs[..i].contains(&q) {
                return Err(Error::DuplicateIndex(q));
            }
        }
        Ok(())
    }
}

/// Full `2^n`-dimensional unitary of a gate.
pub fn gate_matrix(g: &Gate, n: usize) -> Result<ComplexMatrix> {
    g.check(n)?;
    Ok(crate::linalg::embed(n, &g.qubits(), &g.local_matrix()))
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())?;
        if let Gate::Rz(_, t) | Gate::Rx(_, t) = self {
            write!(f, "({t})")?;
        }
        let qs: Vec<String> = self.qubits().iter().map(|q| q.to_string()).collect();
        write!(f, "@{}", qs.join(","))
    }
}

impl FromStr for Gate {
    type Err = Error;

    fn from_str(token: &str) -> Result<Gate> {
        let bad = || Error::Parse(format!("malformed gate token `{token}`"));
        let (head, qubits) = token.split_once('@').ok_or_else(bad)?;
        let qubits: Vec<usize> = qubits
            .split(',')
            .map(|q| q.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let (name, arg) = match head.split_once('(') {
            Some((name, rest)) => {
                let arg = rest.strip_suffix(')').ok_or_else(bad)?;
                (name, Some(arg.parse::<f64>().map_err(|_| bad())?))
            }
            None => (head, None),
        };
        let proto = match (name.to_ascii_uppercase().as_str(), arg) {
            ("I", None) => Gate::I(0),
            ("X", None) => Gate::X(0),
            ("Y", None) => Gate::Y(0),
            ("Z", None) => Gate::Z(0),
            ("H", None) => Gate::H(0),
            ("S", None) => Gate::S(0),
            ("SDG", None) => Gate::Sdg(0),
            ("T", None) => Gate::T(0),
            ("TDG", None) => Gate::Tdg(0),
            ("RZ", Some(t)) => Gate::Rz(0, t),
            ("RX", Some(t)) => Gate::Rx(0, t),
            ("CNOT", None) => Gate::Cnot {
                control: 0,
                target: 0,
            },
            ("CCX", None) => Gate::Toffoli {
                c1: 0,
                c2: 0,
                target: 0,
            },
            _ => return Err(bad()),
        };
        if proto.qubits().len() != qubits.len() {
            return Err(bad());
        }
        Ok(proto.on(&qubits))
    }
}

/// Gates applied simultaneously on pairwise-disjoint qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    width: usize,
    gates: Vec<Gate>,
}

impl Cycle {
    pub fn new(width: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut used = vec![false; width];
        for g in &gates {
            g.check(width)?;
            for &q in g.qubits().iter() {
                if std::mem::replace(&mut used[q], true) {
                    return Err(Error::DuplicateIndex(q));
                }
            }
        }
        Ok(Self { width, gates })
    }

    pub fn idle(width: usize) -> Self {
        Self {
            width,
            gates: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Gate acting on `qubit`, if any.
    pub fn gate_on(&self, qubit: usize) -> Option<&Gate> {
        self.gates.iter().find(|g| g.qubits().contains(&qubit))
    }

    pub fn is_idle(&self) -> bool {
        self.gates.iter().all(Gate::is_identity)
    }

    pub fn unitary(&self) -> ComplexMatrix {
        let mut u = ComplexMatrix::identity(1 << self.width);
        for g in &self.gates {
            if !g.is_identity() {
                apply_local_left(&mut u, self.width, &g.qubits(), &g.local_matrix());
            }
        }
        u
    }
}

/// Which gate family a circuit is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateSet {
    /// H, Rz, Rx, CNOT (plus Paulis and Clifford+T gates, which are special rotations).
    ParamRotations,
    /// H, S, Sdg, T, Tdg, CNOT and Paulis.
    CliffordT,
}

/// Ordered list of cycles on a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    cycles: Vec<Cycle>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            cycles: Vec::new(),
        }
    }

    pub fn from_cycles(n_qubits: usize, cycles: Vec<Cycle>) -> Result<Self> {
        for c in &cycles {
            if c.width != n_qubits {
                return Err(Error::WidthMismatch {
                    expected: n_qubits,
                    got: c.width,
                });
            }
        }
        Ok(Self { n_qubits, cycles })
    }

    /// Schedules gates as early as possible: each gate lands in the first
    /// cycle after the last one touching any of its qubits.
    pub fn from_gates(n_qubits: usize, gates: impl IntoIterator<Item = Gate>) -> Result<Self> {
        let mut frontier = vec![0usize; n_qubits];
        let mut layers: Vec<Vec<Gate>> = Vec::new();
        for g in gates {
            g.check(n_qubits)?;
            let qs = g.qubits();
            let slot = qs.iter().map(|&q| frontier[q]).max().unwrap_or(0);
            if layers.len() <= slot {
                layers.resize_with(slot + 1, Vec::new);
            }
            layers[slot].push(g);
            for &q in qs.iter() {
                frontier[q] = slot + 1;
            }
        }
        let cycles = layers
            .into_iter()
            .map(|gates| Cycle { width: n_qubits, gates })
            .collect();
        Ok(Self { n_qubits, cycles })
    }

    pub fn push(&mut self, cycle: Cycle) -> Result<()> {
        if cycle.width != self.n_qubits {
            return Err(Error::WidthMismatch {
                expected: self.n_qubits,
                got: cycle.width,
            });
        }
        self.cycles.push(cycle);
        Ok(())
    }

    /// Appends all cycles of `other`.
    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        for c in &other.cycles {
            self.push(c.clone())?;
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn cycles(&self) -> &[Cycle] {
        &self.cycles
    }

    pub fn depth(&self) -> usize {
        self.cycles.len()
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.cycles.iter().flat_map(|c| c.gates.iter())
    }

    pub fn gate_set(&self) -> GateSet {
        if self
            .gates()
            .any(|g| matches!(g, Gate::Rz(..) | Gate::Rx(..) | Gate::Toffoli { .. }))
        {
            GateSet::ParamRotations
        } else {
            GateSet::CliffordT
        }
    }

    /// Total unitary of the circuit.
    pub fn unitary(&self) -> ComplexMatrix {
        let mut u = ComplexMatrix::identity(1 << self.n_qubits);
        for g in self.gates().filter(|g| !g.is_identity()) {
            apply_local_left(&mut u, self.n_qubits, &g.qubits(), &g.local_matrix());
        }
        u
    }

    /// Noiseless state-vector evolution.
    pub fn apply_to_ket(&self, ket: &Ket) -> Result<Ket> {
        if ket.n_qubits() != self.n_qubits {
            return Err(Error::WidthMismatch {
                expected: self.n_qubits,
                got: ket.n_qubits(),
            });
        }
        let mut out = ket.clone();
        for g in self.gates().filter(|g| !g.is_identity()) {
            apply_local_vec(out.amplitudes_mut(), self.n_qubits, &g.qubits(), &g.local_matrix());
        }
        Ok(out)
    }

    /// One-line-per-cycle text form.
    pub fn to_text(&self) -> String {
        let mut s = format!("qubits {}\n", self.n_qubits);
        for c in &self.cycles {
            if c.gates.is_empty() {
                s.push('.');
            } else {
                let tokens: Vec<String> = c.gates.iter().map(|g| g.to_string()).collect();
                s.push_str(&tokens.join(" "));
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty circuit text".into()))?;
        let n_qubits = header
            .strip_prefix("qubits")
            .and_then(|n| n.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::Parse(format!("bad header `{header}`")))?;
        let mut circuit = Circuit::new(n_qubits);
        for line in lines {
            let gates = if line == "." {
                Vec::new()
            } else {
                line.split_whitespace()
                    .map(str::parse)
                    .collect::<Result<Vec<Gate>>>()?
            };
            circuit.push(Cycle::new(n_qubits, gates)?)?;
        }
        Ok(circuit)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Circuit::from_text(s)
    }
}

fn apply_gates_in_place(rho: &mut DensityMatrix, gates: &[Gate]) {
    let n = rho.n_qubits();
    for g in gates.iter().filter(|g| !g.is_identity()) {
        let u = g.local_matrix();
        let qs = g.qubits();
        apply_local_left(rho.matrix_mut(), n, &qs, &u);
        apply_local_right_adjoint(rho.matrix_mut(), n, &qs, &u);
    }
}

/// `ρ' = U_c ρ U_c†`.
pub fn apply_cycle(rho: &DensityMatrix, c: &Cycle) -> Result<DensityMatrix> {
    if rho.n_qubits() != c.width {
        return Err(Error::WidthMismatch {
            expected: c.width,
            got: rho.n_qubits(),
        });
    }
    let mut out = rho.clone();
    apply_gates_in_place(&mut out, &c.gates);
    Ok(out)
}

/// Six-CNOT, seven-T network equal to the Toffoli gate.
pub fn toffoli_gates(c1: usize, c2: usize, target: usize) -> Vec<Gate> {
    use Gate::*;
    vec![
        H(target),
        Cnot { control: c2, target },
        Tdg(target),
        Cnot { control: c1, target },
        T(target),
        Cnot { control: c2, target },
        Tdg(target),
        Cnot { control: c1, target },
        T(c2),
        T(target),
        H(target),
        Cnot {
            control: c1,
            target: c2,
        },
        T(c1),
        Tdg(c2),
        Cnot {
            control: c1,
            target: c2,
        },
    ]
}

/// Toffoli gate as a scheduled circuit over {CNOT, H, T, Tdg}.
pub fn toffoli_decomposition(c1: usize, c2: usize, target: usize) -> Result<Circuit> {
    if c1 == c2 || c1 == target {
        return Err(Error::DuplicateIndex(c1));
    }
    if c2 == target {
        return Err(Error::DuplicateIndex(c2));
    }
    let n = c1.max(c2).max(target) + 1;
    Circuit::from_gates(n, toffoli_gates(c1, c2, target))
}

/// Runs `circ` on `input` with `noise` after every cycle on every qubit.
///
/// With `rc` set, the circuit is randomly compiled with `seed` first and the
/// residual Pauli frame is removed from the output, as a frame-tracking
/// controller would do.
pub fn simulate(
    circ: &Circuit,
    input: &DensityMatrix,
    noise: &NoiseModel,
    rc: bool,
    seed: u64,
) -> Result<DensityMatrix> {
    if input.n_qubits() != circ.n_qubits {
        return Err(Error::WidthMismatch {
            expected: circ.n_qubits,
            got: input.n_qubits(),
        });
    }
    noise.validate()?;
    if rc {
        let compiled = RandomizedCompiler::new(circ)?.compile(seed);
        let mut out = run_noisy(compiled.circuit(), input, noise);
        apply_gates_in_place(&mut out, &compiled.frame().correction_gates());
        Ok(out)
    } else {
        Ok(run_noisy(circ, input, noise))
    }
}

/// Noisy evolution without randomization; the caller has validated widths.
pub(crate) fn run_noisy(circ: &Circuit, input: &DensityMatrix, noise: &NoiseModel) -> DensityMatrix {
    let superop = (!noise.is_identity()).then(|| noise.superop());
    let mut rho = input.clone();
    for c in &circ.cycles {
        apply_gates_in_place(&mut rho, &c.gates);
        if let Some(s) = &superop {
            apply_to_all(&mut rho, s);
        }
    }
    rho
}

/// Noiseless evolution of a density matrix under a list of gates.
pub(crate) fn apply_gates(rho: &mut DensityMatrix, gates: &[Gate]) {
    apply_gates_in_place(rho, gates)
}
