use qnoise::circuit::{Circuit, Gate, GateSet};
use qnoise::linalg::phase_distance;

const GOLDEN: &str = include_str!("data/bell_phase.circ");

#[test]
fn golden_file_parses_to_the_expected_cycles() {
    let c = Circuit::from_text(GOLDEN).unwrap();
    assert_eq!(c.n_qubits(), 3);
    assert_eq!(c.depth(), 6);
    assert_eq!(c.cycles()[0].gates(), &[Gate::H(0), Gate::X(2)]);
    assert_eq!(c.cycles()[1].gates(), &[Gate::Cnot { control: 0, target: 1 }]);
    assert!(c.cycles()[2].is_idle());
    assert_eq!(
        c.cycles()[3].gates(),
        &[Gate::Sdg(1), Gate::Tdg(2), Gate::Rz(0, 0.25)]
    );
    assert_eq!(c.cycles()[4].gates(), &[Gate::Toffoli { c1: 0, c2: 1, target: 2 }]);
    assert_eq!(c.cycles()[5].gates(), &[Gate::Rx(1, -1.5)]);
    assert_eq!(c.gate_set(), GateSet::ParamRotations);
}

#[test]
fn golden_file_round_trips_byte_for_byte() {
    let c = Circuit::from_text(GOLDEN).unwrap();
    assert_eq!(c.to_text(), GOLDEN);
    let again: Circuit = c.to_text().parse().unwrap();
    assert_eq!(again, c);
    assert!(phase_distance(&again.unitary(), &c.unitary()) < 1e-15);
}

#[test]
fn comments_and_blank_lines_are_ignored() {
    let text = format!("# header comment\n\n{GOLDEN}\n# trailing\n");
    assert_eq!(Circuit::from_text(&text).unwrap(), Circuit::from_text(GOLDEN).unwrap());
}

#[test]
fn malformed_text_is_rejected() {
    for bad in [
        "",
        "qubit 2\nH@0",
        "qubits 2\nH0",
        "qubits 2\nFOO@0",
        "qubits 2\nCNOT@0",
        "qubits 2\nRZ(x)@0",
        "qubits 2\nH@5",
        "qubits 2\nH@0 X@0",
    ] {
        assert!(Circuit::from_text(bad).is_err(), "accepted {bad:?}");
    }
}
