from fractions import Fraction

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from adder_library import EXACT_FAMILIES, AdderFamily, AdderSpec, circuit_oracle
from classical_metrics import compute_metrics, error_distance, max_reference, sweep


def test_error_distance():
    assert error_distance(7, 3) == 4
    assert error_distance(3, 7) == 4


def test_max_reference_depends_on_carry_out():
    assert max_reference(AdderSpec(AdderFamily.AQA1, 4)) == 15
    assert max_reference(AdderSpec(AdderFamily.AQA3, 4)) == 30


def test_aqa1_four_bit():
    report = compute_metrics(AdderFamily.AQA1, 4)
    assert report.total_inputs == 256
    assert report.med == Fraction(1360, 256)
    assert report.nmed == Fraction(17, 48)
    assert report.error_rate == Fraction(15, 16)


def test_aqa1_single_bit():
    assert compute_metrics("aqa1", 1).nmed == Fraction(1, 2)


def test_aqa3_four_bit():
    report = compute_metrics(AdderFamily.AQA3, 4)
    assert report.s_max == 30
    assert report.med == 4
    assert report.nmed == Fraction(2, 15)
    assert report.error_rate == Fraction(15, 16)


@pytest.mark.parametrize(
    "family, error_rate",
    [
        (AdderFamily.AQA2, Fraction(37, 64)),
        (AdderFamily.AQA4, Fraction(175, 256)),
        (AdderFamily.AQA5, Fraction(37, 64)),
    ],
)
def test_error_rates_four_bit(family, error_rate):
    assert compute_metrics(family, 4).error_rate == error_rate


@pytest.mark.parametrize("family", EXACT_FAMILIES)
def test_exact_families_have_no_error(family):
    report = compute_metrics(family, 5)
    assert report.med == 0
    assert report.error_rate == 0


def test_circuit_oracle_gives_same_metrics():
    for family in AdderFamily:
        spec = AdderSpec(family, 3)
        assert compute_metrics(family, 3, oracle=circuit_oracle(spec)) == compute_metrics(family, 3)


@pytest.mark.parametrize("n", [0, 9])
def test_width_limits(n):
    with pytest.raises(ValueError):
        compute_metrics(AdderFamily.AQA2, n)


def test_sweep_order():
    reports = sweep(["aqa1", "aqa2"], range(1, 4), workers=2)
    assert [(r.family.value, r.n) for r in reports] == [
        ("aqa1", 1), ("aqa1", 2), ("aqa1", 3), ("aqa2", 1), ("aqa2", 2), ("aqa2", 3),
    ]


@settings(max_examples=30, deadline=None)
@given(family=st.sampled_from(list(AdderFamily)), n=st.integers(min_value=1, max_value=6))
def test_metrics_are_normalised(family, n):
    report = compute_metrics(family, n)
    assert 0 <= report.nmed <= 1
    assert 0 <= report.error_rate <= 1
    assert report.total_inputs == 4 ** n


@pytest.mark.parametrize("n", range(1, 7))
def test_aqa1_and_aqa3_share_error_rate(n):
    assert compute_metrics(AdderFamily.AQA1, n).error_rate == compute_metrics(AdderFamily.AQA3, n).error_rate


def test_aqa2_beats_aqa1_on_two_bits():
    assert compute_metrics(AdderFamily.AQA2, 2).nmed == Fraction(1, 6)
    assert compute_metrics(AdderFamily.AQA1, 2).nmed == Fraction(5, 12)


def test_aqa5_beats_aqa4():
    aqa4 = compute_metrics(AdderFamily.AQA4, 4)
    aqa5 = compute_metrics(AdderFamily.AQA5, 4)
    assert aqa5.nmed < aqa4.nmed
    assert aqa5.error_rate < aqa4.error_rate


@pytest.mark.parametrize("n", range(1, 9))
def test_sum_only_orderings(n):
    assert compute_metrics(AdderFamily.AQA2, n).nmed < compute_metrics(AdderFamily.AQA1, n).nmed


@pytest.mark.parametrize("n", range(1, 9))
def test_carry_design_orderings(n):
    aqa4 = compute_metrics(AdderFamily.AQA4, n)
    aqa5 = compute_metrics(AdderFamily.AQA5, n)
    assert aqa5.nmed < aqa4.nmed
    assert aqa5.error_rate < aqa4.error_rate


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_aqa2_metrics_ignore_operand_order(n):
    circuit = circuit_oracle(AdderSpec(AdderFamily.AQA2, n))
    swapped = compute_metrics(AdderFamily.AQA2, n, oracle=lambda a, b: circuit(b, a))
    direct = compute_metrics(AdderFamily.AQA2, n)
    assert (swapped.nmed, swapped.error_rate) == (direct.nmed, direct.error_rate)
