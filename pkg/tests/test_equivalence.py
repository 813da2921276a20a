import numpy as np
import pytest

from equivalence import (
    EquivEstimate, equivalence_table, estimate_constants, project_to_sphere, verify_sandwich,
)
from errors import DomainError, UnsupportedFamilyError
from group_ops import GroupElement
from norms import BOX, FOLLAND_STEIN, KORANYI, MAX, NormFamily, NormSpec, analytic_constants, evaluate

FOURTH_ROOT_TWO = 2.0 ** 0.25


@pytest.fixture(scope="module")
def max_to_koranyi() -> EquivEstimate:
    return estimate_constants(MAX, KORANYI, 20000, seed=7, refine=True)


def test_max_to_koranyi_constants(max_to_koranyi):
    est = max_to_koranyi
    assert 1.0 - 1e-12 <= est.lower_m <= 1.0 + 1e-2
    assert FOURTH_ROOT_TWO - 1e-2 <= est.upper_M <= FOURTH_ROOT_TWO + 1e-12


def test_witnesses_lie_on_the_from_sphere(max_to_koranyi):
    est = max_to_koranyi
    assert evaluate(MAX, est.argmin) == pytest.approx(1.0, abs=1e-12)
    assert evaluate(MAX, est.argmax) == pytest.approx(1.0, abs=1e-12)
    assert evaluate(KORANYI, est.argmin) == pytest.approx(est.lower_m, abs=1e-15)
    assert evaluate(KORANYI, est.argmax) == pytest.approx(est.upper_M, abs=1e-15)


def test_refined_estimate_has_no_violations(max_to_koranyi):
    report = verify_sandwich(max_to_koranyi, MAX, KORANYI, 20000, seed=8)
    assert report.violations == 0
    assert report.witness is None


def test_scale_does_not_change_verification(max_to_koranyi):
    plain = verify_sandwich(max_to_koranyi, MAX, KORANYI, 5000, seed=9)
    tiny = verify_sandwich(max_to_koranyi, MAX, KORANYI, 5000, seed=9, scale=0.01)
    huge = verify_sandwich(max_to_koranyi, MAX, KORANYI, 5000, seed=9, scale=100.0)
    assert plain.violations == tiny.violations == huge.violations == 0


def test_inflated_lower_constant_is_caught(max_to_koranyi):
    inflated = EquivEstimate.from_dict({**max_to_koranyi.to_dict(), "lower_m": 1.1})
    report = verify_sandwich(inflated, MAX, KORANYI, 5000, seed=10)
    assert report.violations > 0
    assert report.max_excess > 0
    assert report.witness is not None


def test_koranyi_to_folland_stein_matches_closed_form():
    m, big_m = analytic_constants(KORANYI, FOLLAND_STEIN)
    est = estimate_constants(KORANYI, FOLLAND_STEIN, 20000, seed=11, refine=True)
    assert est.lower_m >= m - 1e-12
    assert est.upper_M <= big_m + 1e-12
    assert est.lower_m == pytest.approx(m, rel=1e-3)
    assert est.upper_M == pytest.approx(big_m, rel=1e-3)


def test_alpha_four_is_the_koranyi_norm():
    alpha_four = NormSpec(NormFamily.ALPHA, 4.0)
    assert analytic_constants(KORANYI, alpha_four) == (1.0, 1.0)
    est = estimate_constants(KORANYI, alpha_four, 20000, seed=12)
    assert est.lower_m == pytest.approx(1.0, abs=1e-14)
    assert est.upper_M == pytest.approx(1.0, abs=1e-14)


def test_estimate_is_deterministic():
    first = estimate_constants(KORANYI, FOLLAND_STEIN, 3000, seed=1)
    second = estimate_constants(KORANYI, FOLLAND_STEIN, 3000, seed=1)
    assert (first.lower_m, first.upper_M) == (second.lower_m, second.upper_M)


def test_estimate_is_independent_of_chunking():
    whole = estimate_constants(KORANYI, MAX, 3000, seed=2, chunk_size=3000)
    chunked = estimate_constants(KORANYI, MAX, 3000, seed=2, chunk_size=700)
    assert (whole.lower_m, whole.upper_M) == (chunked.lower_m, chunked.upper_M)


def test_more_samples_never_loosen_the_bounds():
    small = estimate_constants(FOLLAND_STEIN, KORANYI, 1000, seed=4, chunk_size=1000)
    large = estimate_constants(FOLLAND_STEIN, KORANYI, 10000, seed=4, chunk_size=1000)
    assert large.lower_m <= small.lower_m
    assert large.upper_M >= small.upper_M


def test_refinement_tightens():
    raw = estimate_constants(MAX, KORANYI, 500, seed=3)
    refined = estimate_constants(MAX, KORANYI, 500, seed=3, refine=True)
    assert refined.lower_m <= raw.lower_m
    assert refined.upper_M >= raw.upper_M


def test_box_is_unsupported():
    with pytest.raises(UnsupportedFamilyError):
        estimate_constants(BOX, KORANYI, 10, seed=0)
    with pytest.raises(UnsupportedFamilyError):
        estimate_constants(KORANYI, BOX, 10, seed=0)


def test_sample_count_must_be_positive():
    with pytest.raises(DomainError):
        estimate_constants(KORANYI, MAX, 0, seed=0)


def test_projection_of_identity_fails():
    with pytest.raises(DomainError):
        project_to_sphere(KORANYI, GroupElement.identity(1))


def test_verify_rejects_mismatched_pair(max_to_koranyi):
    with pytest.raises(DomainError):
        verify_sandwich(max_to_koranyi, KORANYI, MAX, 10, seed=0)


def test_to_dict_round_trip(max_to_koranyi):
    data = max_to_koranyi.to_dict()
    assert data["from"] == "max" and data["to"] == "koranyi"
    restored = EquivEstimate.from_dict(data)
    assert restored.lower_m == max_to_koranyi.lower_m
    assert restored.argmax.allclose(max_to_koranyi.argmax, atol=0.0)


def test_table_covers_ordered_pairs():
    table = equivalence_table([KORANYI, FOLLAND_STEIN, MAX], 500, seed=0)
    assert [(e.spec_from, e.spec_to) for e in table] == [
        ("koranyi", "fs"), ("koranyi", "max"), ("fs", "koranyi"),
        ("fs", "max"), ("max", "koranyi"), ("max", "fs"),
    ]
    for est in table:
        assert 0 < est.lower_m <= est.upper_M


def test_table_duality():
    table = {(e.spec_from, e.spec_to): e for e in equivalence_table([KORANYI, MAX], 20000, seed=6, refine=True)}
    forward, backward = table[("koranyi", "max")], table[("max", "koranyi")]
    assert forward.lower_m * backward.upper_M == pytest.approx(1.0, rel=1e-2)
    assert forward.upper_M * backward.lower_m == pytest.approx(1.0, rel=1e-2)
