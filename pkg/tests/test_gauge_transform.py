import numpy as np
import pytest

from src.gauge.equation_model import ABCoefficients, ab_from_numu
from src.gauge.errors import FamilyError, NotSubgroupError, PreconditionError
from src.gauge.gauge_group import GaugeElement, compose, inverse
from src.gauge.gauge_transform import (
    closed_form_coefficients,
    homogeneous_matrix_law,
    random_ab,
    random_full_element,
    random_homogeneous_element,
    random_numu_family,
    random_subgroup_element,
    sample_points,
    slot_discrepancies,
    transform_ab,
    transform_numu_subgroup,
    validate_against_paper,
)
from src.gauge.invariants import full_group_invariants


def test_identity_leaves_every_slot_unchanged(rng):
    points = sample_points(rng, 30)
    ab = random_ab(rng)
    assert max(slot_discrepancies(transform_ab(ab, GaugeElement.identity()), ab, points).values()) < 1e-14


def test_phase_mixing_on_the_linear_equation(linear_ab, linear_numu):
    g = GaugeElement.subgroup(gamma="1")
    closed = transform_numu_subgroup(linear_numu, g)
    assert closed.mu2.value(0.0) == pytest.approx(-0.5)
    engine = transform_ab(linear_ab, g)
    assert engine.a5.value(0.0) == pytest.approx(ab_from_numu(closed).a5.value(0.0))


def test_swap_on_the_linear_equation(linear_ab):
    swapped = transform_ab(linear_ab, GaugeElement.swap())
    assert swapped.a2.value(0.0) == pytest.approx(-0.5)
    assert swapped.b1.value(0.0) == pytest.approx(0.5)
    assert swapped.a1.value(0.0) == pytest.approx(0.0)
    assert swapped.b2.value(0.0) == pytest.approx(0.0)


@pytest.mark.parametrize("draws", [5, pytest.param(200, marks=pytest.mark.slow)])
def test_subgroup_closed_form_matches_the_engine(rng, draws):
    points = sample_points(rng, 50)
    for _ in range(draws):
        nm = random_numu_family(rng)
        g = random_subgroup_element(rng)
        closed = ab_from_numu(transform_numu_subgroup(nm, g))
        engine = transform_ab(ab_from_numu(nm), g)
        worst = slot_discrepancies(closed, engine, points)
        assert max(worst.values()) < 1e-10, {k: v for k, v in worst.items() if v >= 1e-10}


@pytest.mark.parametrize("draws", [5, pytest.param(200, marks=pytest.mark.slow)])
def test_trace_and_determinant_are_preserved(rng, draws):
    for _ in range(draws):
        ab = random_ab(rng)
        g = random_homogeneous_element(rng)
        moved = transform_ab(ab, g)
        for t in (0.0, 0.4, 1.0):
            before, after = full_group_invariants(ab, t), full_group_invariants(moved, t)
            assert after.I1 == pytest.approx(before.I1, abs=1e-12)
            assert after.I2 == pytest.approx(before.I2, abs=1e-12)


def test_matrix_closed_form_matches_the_engine(rng):
    ab = random_ab(rng)
    g = random_homogeneous_element(rng)
    moved = transform_ab(ab, g)
    for t in (0.0, 0.5, 1.0):
        closed = closed_form_coefficients(ab, g, t).slots()
        for name, value in closed.items():
            assert getattr(moved, name).value(t) == pytest.approx(value, abs=1e-10), name


def test_transforms_compose(rng):
    points = sample_points(rng, 30)
    ab = random_ab(rng)
    g1, g2 = random_homogeneous_element(rng), random_subgroup_element(rng)
    stepwise = transform_ab(transform_ab(ab, g2), g1)
    direct = transform_ab(ab, compose(g1, g2))
    assert max(slot_discrepancies(stepwise, direct, points).values()) < 1e-9


def test_printed_law_needs_a_homogeneous_element(rng):
    with pytest.raises(PreconditionError):
        homogeneous_matrix_law(random_ab(rng), GaugeElement(theta="x"))


def test_closed_form_preconditions(dg_numu):
    with pytest.raises(NotSubgroupError):
        transform_numu_subgroup(dg_numu, GaugeElement.swap())
    data = {name: getattr(dg_numu, name) for name in type(dg_numu).model_fields}
    with pytest.raises(FamilyError):
        transform_numu_subgroup(type(dg_numu)(**{**data, "nu3": "1/2"}), GaugeElement.subgroup("2"))


@pytest.mark.slow
def test_validation_report():
    report = validate_against_paper(samples=2, seed=3, workers=2)
    assert report.subgroup.disagreeing_slots == []
    assert report.discrepancies == []
    assert report.homogeneous.disagreeing_slots == ["b1", "b5", "b6"]
    assert report.disagreeing_entries == ["M[b5',a5]", "a1a2b1b2[b1',a2]", "a6a7b6b7[b6',a7]"]
    assert report.invariant_checks == {"I1": "pass", "I2": "pass"}
    assert all(value < report.tolerance for value in report.printed_field_elements.values())


@pytest.mark.slow
def test_validation_is_deterministic_for_a_seed():
    first = validate_against_paper(samples=2, seed=11, workers=1)
    second = validate_against_paper(samples=2, seed=11, workers=2)
    assert first == second


def test_zero_equation_picks_up_only_the_gauge_rates():
    g = GaugeElement.subgroup(Lambda="exp(t)", theta="x*t")
    moved = transform_ab(ABCoefficients(), g)
    assert moved.a6.value(0.3) == pytest.approx(1.0)
    assert moved.u0.value(2.0, t=0.3) == pytest.approx(2.0 * (1 - 0.3))


def test_linear_equation_comes_back_from_any_gauge(rng, linear_ab):
    points = sample_points(rng, 30)
    elements = [
        random_full_element(rng),
        random_subgroup_element(rng),
        compose(GaugeElement.swap(), GaugeElement.subgroup(theta="x*t/3")),
    ]
    for g in elements:
        back = transform_ab(transform_ab(linear_ab, g), inverse(g))
        worst = slot_discrepancies(back, linear_ab, points)
        assert max(worst.values()) < 1e-10, {k: v for k, v in worst.items() if v >= 1e-10}
