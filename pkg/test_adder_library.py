import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from adder_library import (
    APPROXIMATE_FAMILIES,
    EXACT_FAMILIES,
    AdderFamily,
    AdderSpec,
    build,
    circuit_oracle,
    decode_output,
    depth_deviations,
    encode_inputs,
    eval_array,
    eval_classical,
    parse_family,
    passthrough_state,
    table2_row,
    verify_semantics,
)
from circuit_core import GateKind, depth_profile, simulate_basis


def test_parse_family_is_case_insensitive():
    assert parse_family("AQA3") is AdderFamily.AQA3


def test_parse_family_accepts_members():
    assert parse_family(AdderFamily.CQA0) is AdderFamily.CQA0
    assert AdderSpec(AdderFamily.AQA3, 2).family is AdderFamily.AQA3
    assert table2_row(AdderFamily.TPL13, 4).cnot_count == 15


def test_parse_family_unknown():
    with pytest.raises(ValueError, match="Unknown adder family"):
        parse_family("rca")


def test_spec_rejects_zero_width():
    with pytest.raises(ValueError):
        AdderSpec(AdderFamily.CQA0, 0)


def test_has_cout_follows_family():
    assert not AdderSpec("cqa0", 4).has_cout
    assert not AdderSpec("aqa2", 4).has_cout
    assert AdderSpec("aqa3", 4).has_cout
    assert AdderSpec("tpl13", 4).has_cout


@pytest.mark.parametrize("family", list(AdderFamily))
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_circuit_matches_classical_semantics(family, n):
    assert verify_semantics(AdderSpec(family, n))


def test_verify_semantics_width_limit():
    assert verify_semantics(AdderSpec(AdderFamily.AQA1, 8))
    with pytest.raises(ValueError):
        verify_semantics(AdderSpec(AdderFamily.AQA2, 8))


def test_build_aqa1_is_pure_relabeling():
    circuit = build(AdderSpec(AdderFamily.AQA1, 4))
    assert circuit.num_qubits == 8
    assert circuit.gates == ()
    assert circuit.role("sum") == circuit.role("a")


def test_build_aqa5_two_bit():
    circuit = build(AdderSpec(AdderFamily.AQA5, 2))
    kinds = [gate.kind for gate in circuit.gates]
    assert circuit.num_qubits == 5
    assert kinds.count(GateKind.CNOT) == 2
    assert kinds.count(GateKind.TOFFOLI) == 1


@pytest.mark.parametrize("family", list(AdderFamily))
@pytest.mark.parametrize("n", range(1, 9))
def test_closed_forms_match_generated_circuits(family, n):
    if family == AdderFamily.TPL13 and n == 1:
        pytest.skip("single-bit Takahashi deviation is checked separately")
    row = table2_row(family, n)
    circuit = build(AdderSpec(family, n))
    profile = depth_profile(circuit)
    assert circuit.num_qubits == row.qubits
    assert profile.cnot_depth == row.cnot_depth
    assert profile.toffoli_depth == row.toffoli_depth
    assert profile.cnot_count == row.cnot_count
    assert profile.toffoli_count == row.toffoli_count
    assert depth_deviations(AdderSpec(family, n)) == {}


def test_single_bit_takahashi_deviation():
    assert depth_deviations(AdderSpec(AdderFamily.TPL13, 1)) == {"cnot_count": (0, 1)}


@pytest.mark.parametrize(
    "family, a, b, cin, expected",
    [
        (AdderFamily.CQA0, 15, 15, 1, 15),
        (AdderFamily.CQA1, 15, 15, 1, 31),
        (AdderFamily.TPL13, 9, 8, 0, 17),
        (AdderFamily.AQA1, 5, 9, 0, 5),
        (AdderFamily.AQA2, 5, 9, 0, 12),
        (AdderFamily.AQA3, 5, 9, 0, 21),
        (AdderFamily.AQA4, 5, 9, 0, 28),
        (AdderFamily.AQA5, 8, 8, 0, 16),
    ],
)
def test_eval_classical_examples(family, a, b, cin, expected):
    assert eval_classical(AdderSpec(family, 4), a, b, cin) == expected


def test_eval_classical_rejects_cin_without_carry_in_qubit():
    with pytest.raises(ValueError, match="carry-in"):
        eval_classical(AdderSpec(AdderFamily.AQA5, 4), 1, 2, 1)


def test_eval_classical_rejects_out_of_range_operands():
    with pytest.raises(ValueError):
        eval_classical(AdderSpec(AdderFamily.CQA1, 4), 16, 0)


@given(
    family=st.sampled_from(EXACT_FAMILIES),
    n=st.integers(min_value=1, max_value=12),
    data=st.data(),
)
def test_exact_families_add(family, n, data):
    a = data.draw(st.integers(min_value=0, max_value=(1 << n) - 1))
    b = data.draw(st.integers(min_value=0, max_value=(1 << n) - 1))
    spec = AdderSpec(family, n)
    expected = a + b if spec.has_cout else (a + b) % (1 << n)
    assert eval_classical(spec, a, b) == expected


@settings(max_examples=50, deadline=None)
@given(
    family=st.sampled_from(list(AdderFamily)),
    n=st.integers(min_value=1, max_value=7),
    data=st.data(),
)
def test_circuit_oracle_matches_eval(family, n, data):
    spec = AdderSpec(family, n)
    a = data.draw(st.integers(min_value=0, max_value=(1 << n) - 1))
    b = data.draw(st.integers(min_value=0, max_value=(1 << n) - 1))
    assert circuit_oracle(spec)(a, b) == eval_classical(spec, a, b) == int(eval_array(spec, a, b))


@pytest.mark.parametrize("family", APPROXIMATE_FAMILIES)
def test_approximate_output_fits_register(family):
    spec = AdderSpec(family, 3)
    circuit = build(spec)
    for a in range(8):
        for b in range(8):
            assert eval_classical(spec, a, b) < 1 << len(circuit.measured_qubits)


def test_encode_decode_inputs():
    circuit = build(AdderSpec(AdderFamily.CQA1, 2))
    bits = encode_inputs(circuit, 2, 3, 1)
    assert bits == [0, 1, 1, 1, 1, 0]
    final = simulate_basis(circuit, bits)
    assert decode_output(circuit, final) == 6


def test_passthrough_state_sum_on_a():
    spec = AdderSpec(AdderFamily.AQA3, 3)
    circuit = build(spec)
    expected = passthrough_state(spec, 0b011, 0b110)
    b = circuit.role("b")
    assert expected == {b[0]: 0, b[1]: 1}


def test_passthrough_state_restores_operand_a():
    spec = AdderSpec(AdderFamily.CQA1, 2)
    expected = passthrough_state(spec, 3, 1, 1)
    assert expected == {0: 1, 1: 1, 4: 1}


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_exact_adders_agree(n):
    modulus = 1 << n
    cqa0 = circuit_oracle(AdderSpec(AdderFamily.CQA0, n))
    cqa1 = circuit_oracle(AdderSpec(AdderFamily.CQA1, n))
    tpl13 = circuit_oracle(AdderSpec(AdderFamily.TPL13, n))
    for a in range(modulus):
        for b in range(modulus):
            assert cqa1(a, b) == tpl13(a, b) == a + b
            assert cqa0(a, b) == cqa1(a, b) % modulus
