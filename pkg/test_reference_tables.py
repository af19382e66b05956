import pytest

from adder_library import AdderFamily, AdderSpec
from density_simulator import fidelity_sweep
from noise_channels import BENCHMARK_PRESETS, ToffoliPolicy, default_noise_model
from reference_tables import (
    EXACT_TOLERANCE,
    PROPOSED_TOLERANCE,
    PUBLISHED_FIDELITY,
    PUBLISHED_IMPROVEMENT,
    ReferenceCell,
    choose_mode,
    improvement_checks,
    improvement_percent,
    published_fidelity,
    reference_cell,
    tolerance_for,
)

F = AdderFamily


def native_fidelity(family, noise):
    return fidelity_sweep(AdderSpec(family, 4), default_noise_model(noise)).avg_success_probability


def test_published_improvements_follow_from_published_fidelities():
    for (baseline, candidate, noise), pct in PUBLISHED_IMPROVEMENT.items():
        base, cand = PUBLISHED_FIDELITY[noise][baseline], PUBLISHED_FIDELITY[noise][candidate]
        assert improvement_percent(base, cand) == pytest.approx(pct, abs=0.006), (baseline, candidate, noise)


def test_every_benchmark_preset_is_published():
    assert set(PUBLISHED_FIDELITY) == set(BENCHMARK_PRESETS)
    assert all(len(row) == 8 for row in PUBLISHED_FIDELITY.values())


def test_published_fidelity_accepts_aliases():
    assert published_fidelity("aqa5", "phase_damping") == 0.99
    with pytest.raises(ValueError, match="No published fidelity"):
        published_fidelity(F.AQA1, "spam")


def test_tolerance_by_family():
    assert tolerance_for(F.TPL13) == EXACT_TOLERANCE
    assert tolerance_for("aqa4") == PROPOSED_TOLERANCE


def test_choose_mode_prefers_closer_value():
    assert choose_mode(0.589, native=0.82, decompose=0.58) == ToffoliPolicy.DECOMPOSE
    assert choose_mode(0.99, native=1.0, decompose=0.97) == ToffoliPolicy.NATIVE
    assert choose_mode(0.5, native=0.75, decompose=0.25) == ToffoliPolicy.NATIVE


def test_reference_cell_reports_chosen_mode():
    cell = ReferenceCell(F.CQA1, "bitflip", 0.207, native=0.56, decompose=0.25, mode=ToffoliPolicy.DECOMPOSE, tolerance=0.08)
    assert cell.simulated == 0.25
    assert cell.delta == pytest.approx(0.043)
    assert cell.within_tolerance


def test_improvement_checks_pair_present_cells_only():
    cells = [
        ReferenceCell(F.CQA0, "thermal", 0.712, 0.6, 0.7, ToffoliPolicy.DECOMPOSE, 0.08),
        ReferenceCell(F.AQA1, "thermal", 0.951, 0.957, 0.957, ToffoliPolicy.NATIVE, 0.02),
    ]
    [check] = improvement_checks(cells)
    assert (check.baseline, check.candidate, check.noise) == (F.CQA0, F.AQA1, "thermal")
    assert check.simulated_pct == pytest.approx(100 * (0.957 - 0.7) / 0.7)
    assert check.sign_matches


# Designs without a Toffoli (and AQA5's Toffoli-insensitive rows) do not depend on the Toffoli mode
PROPOSED_CELLS = [
    (family, noise)
    for family in (F.AQA1, F.AQA2, F.AQA3, F.AQA4)
    for noise in BENCHMARK_PRESETS
] + [(F.AQA5, "thermal"), (F.AQA5, "phase")]


@pytest.mark.parametrize("family, noise", PROPOSED_CELLS)
def test_proposed_cells_match_published(family, noise):
    published = PUBLISHED_FIDELITY[noise][family]
    assert native_fidelity(family, noise) == pytest.approx(published, abs=PROPOSED_TOLERANCE)


@pytest.mark.parametrize("noise", ["thermal", "depolarizing", "bitflip"])
def test_published_ordering_of_carry_designs(noise):
    order = [F.AQA3, F.AQA4, F.AQA5, F.TPL13, F.CQA1]
    values = [native_fidelity(family, noise) for family in order]
    assert values == sorted(values, reverse=True)
    assert len(set(values)) == len(values)


@pytest.mark.parametrize("noise", ["thermal", "depolarizing", "bitflip"])
def test_published_improvements_keep_their_sign(noise):
    values = {family: native_fidelity(family, noise) for family in AdderFamily}
    for (baseline, candidate, label), pct in PUBLISHED_IMPROVEMENT.items():
        if label == noise:
            assert (improvement_percent(values[baseline], values[candidate]) > 0) == (pct > 0), (baseline, candidate)


def test_aqa1_cell_is_mode_independent():
    cell = reference_cell(F.AQA1, "amplitude")
    assert cell.native == cell.decompose
    assert cell.mode == ToffoliPolicy.NATIVE
    assert cell.within_tolerance


def test_cqa0_depolarizing_matches_in_decompose_mode():
    cell = reference_cell(F.CQA0, "depolarizing")
    assert cell.mode == ToffoliPolicy.DECOMPOSE
    assert cell.within_tolerance
    assert cell.native > cell.decompose
