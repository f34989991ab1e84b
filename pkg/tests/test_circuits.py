"""Circuit builders: parameter counts, block variants, condition encoding."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from borngen.circuits import (
    CircuitSpec,
    CorrelationBlockChoice,
    all_block_choices,
    build_1d_rzz_ansatz,
    build_conditional,
    build_correlation_block,
    build_hardware_efficient,
    build_multivariate,
    circuit_from_json,
    circuit_to_json,
    encode_condition,
)
from borngen.sim import Gate, run_circuit


def test_1d_ansatz_parameter_count():
    # 2N + N(N-1)/2 + N at N=4 gives the published 18 parameters
    assert build_1d_rzz_ansatz(4).n_parameters == 18


def test_multivariate_parameter_count():
    circuit = build_multivariate(3, 3, 4, CorrelationBlockChoice())
    assert circuit.n_parameters == 45


def test_conditional_parameter_count():
    circuit = build_conditional(3, 4)
    assert circuit.n_parameters == 27
    assert circuit.n_data_slots == 3


@settings(deadline=None, max_examples=30)
@given(n=st.integers(2, 6))
def test_1d_ansatz_count_formula(n):
    assert build_1d_rzz_ansatz(n).n_parameters == 2 * n + n * (n - 1) // 2 + n


@settings(deadline=None, max_examples=30)
@given(d=st.integers(2, 4), n=st.integers(1, 3), reps=st.integers(0, 4))
def test_multivariate_count_formula(d, n, reps):
    circuit = build_multivariate(d, n, reps, CorrelationBlockChoice())
    assert circuit.n_parameters == reps * d * n + d * n


@settings(deadline=None, max_examples=30)
@given(n=st.integers(1, 5), layers=st.integers(0, 4))
def test_hardware_efficient_count_formula(n, layers):
    assert build_hardware_efficient(n, layers, with_rx=True).n_parameters == 2 * n * layers + n
    assert build_hardware_efficient(n, layers, with_rx=False).n_parameters == n * layers + n


def test_multivariate_zero_repetitions():
    assert build_multivariate(2, 1, 0, CorrelationBlockChoice()).n_parameters == 2


def test_conditional_small():
    circuit = build_conditional(1, 0)
    assert circuit.n_parameters == 1
    assert circuit.n_data_slots == 1


def test_eight_block_choices_all_parameter_free():
    choices = all_block_choices()
    assert len(choices) == 8
    assert len(set(c.label for c in choices)) == 8
    for choice in choices:
        block = build_correlation_block(3, 2, choice)
        assert block.n_parameters == 0


def test_block_choice_validation():
    with pytest.raises(ValueError):
        CorrelationBlockChoice(connectivity="ring")
    with pytest.raises(ValueError):
        CorrelationBlockChoice(depth_pairs="2")
    with pytest.raises(ValueError):
        CorrelationBlockChoice(style="cz")


def test_bell_block_two_registers():
    block = build_correlation_block(2, 1, CorrelationBlockChoice(style="bell"))
    p = np.abs(run_circuit(block, []).amplitudes) ** 2
    assert p == pytest.approx([0.5, 0.0, 0.0, 0.5], abs=1e-10)


def test_bell_block_three_registers_ghz():
    block = build_correlation_block(3, 1, CorrelationBlockChoice(style="bell"))
    p = np.abs(run_circuit(block, []).amplitudes) ** 2
    expected = np.zeros(8)
    expected[0] = expected[7] = 0.5
    assert p == pytest.approx(expected, abs=1e-10)


def test_register_layout():
    circuit = build_multivariate(3, 3, 4, CorrelationBlockChoice())
    assert circuit.register_bits == (3, 3, 3)
    ranges = [rng for _, rng in circuit.register_layout]
    assert ranges == [(0, 3), (3, 6), (6, 9)]


def test_encode_condition_bounds():
    assert encode_condition(50.0, 50.0, 200.0) == pytest.approx(0.0)
    assert encode_condition(200.0, 50.0, 200.0) == pytest.approx(np.pi / 2)
    assert encode_condition(125.0, 50.0, 200.0) == pytest.approx(np.arcsin(0.5))


def test_encode_condition_range_error():
    with pytest.raises(ValueError):
        encode_condition(40.0, 50.0, 200.0)
    with pytest.raises(ValueError):
        encode_condition(100.0, 200.0, 50.0)


def test_builder_input_validation():
    with pytest.raises(ValueError):
        build_1d_rzz_ansatz(1)
    with pytest.raises(ValueError):
        build_multivariate(1, 3, 4, CorrelationBlockChoice())
    with pytest.raises(ValueError):
        build_hardware_efficient(0, 1)
    with pytest.raises(ValueError):
        build_conditional(0, 1)


def test_circuit_spec_slot_coverage_validation():
    with pytest.raises(ValueError):
        CircuitSpec(1, (Gate("RY", (0,), param_slot=1),), 1)  # slot 0 missing
    with pytest.raises(ValueError):
        CircuitSpec(1, (Gate("RY", (0,), param_slot=0),), 2)


def test_slot_gate_kind():
    circuit = build_1d_rzz_ansatz(4)
    kinds = [circuit.slot_gate_kind(i) for i in range(circuit.n_parameters)]
    assert kinds == ["RY"] * 4 + ["RX"] * 4 + ["RZZ"] * 6 + ["RY"] * 4


def test_json_round_trip():
    for circuit in (
        build_1d_rzz_ansatz(4),
        build_multivariate(3, 2, 2, CorrelationBlockChoice(style="bell")),
        build_conditional(3, 4),
    ):
        restored = circuit_from_json(circuit_to_json(circuit))
        assert restored == circuit


def test_full_connectivity_pair_order():
    circuit = build_multivariate(3, 1, 1, CorrelationBlockChoice(connectivity="full"))
    cnots = [g.targets for g in circuit.gates if g.kind == "CNOT"]
    # nearest-neighbour register pairs first, the long-range pair last
    assert cnots[:3] == [(0, 1), (1, 2), (0, 2)]
