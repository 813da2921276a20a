import math

import numpy as np
import pytest

from conftest import point
from errors import DomainError, ParseError
from group_ops import GroupElement, dilate, ginv, random_elements
from norms import (
    BOX, FOLLAND_STEIN, KORANYI, MAX, NormFamily, NormSpec, alpha_norm, analytic_constants,
    box_norm, evaluate, folland_stein, homogeneity_defect, koranyi, koranyi_quasi_triangle_bound,
    max_norm, quasi_triangle_ratio, quasi_triangle_supremum, symmetry_defect,
)

UNIT_BOTH = point([[1, 0, 0, 0]], [1, 0, 0])
HOMOGENEOUS = [KORANYI, FOLLAND_STEIN, NormSpec(NormFamily.ALPHA, 2.0), MAX]


def test_values_at_unit_horizontal_and_center():
    assert koranyi(UNIT_BOTH) == pytest.approx(2.0 ** 0.25, rel=1e-15)
    assert folland_stein(UNIT_BOTH) == pytest.approx(math.sqrt(2.0), rel=1e-15)
    assert max_norm(UNIT_BOTH) == 1.0


def test_box_norm_is_euclidean():
    assert box_norm(point([[3, 0, 0, 0]], [4, 0, 0])) == 5.0


def test_alpha_one_on_center_axis():
    assert alpha_norm(1.0, point([[0, 0, 0, 0]], [0, 0, 4])) == pytest.approx(2.0, rel=1e-15)


def test_alpha_four_is_koranyi(random_element):
    spec = NormSpec.parse("alpha:4")
    assert np.max(np.abs(evaluate(spec, random_element) - koranyi(random_element))) <= 1e-14


def test_batch_returns_array_and_single_returns_float(random_element):
    assert isinstance(koranyi(UNIT_BOTH), float)
    assert koranyi(random_element).shape == (1000,)


@pytest.mark.parametrize("spec", HOMOGENEOUS + [BOX], ids=lambda s: s.label)
def test_identity_has_norm_zero_and_others_positive(spec, random_element):
    assert evaluate(spec, GroupElement.identity(1)) == 0.0
    assert np.all(np.asarray(evaluate(spec, random_element)) > 0)


@pytest.mark.parametrize("spec", HOMOGENEOUS + [BOX], ids=lambda s: s.label)
def test_symmetry(spec, random_element):
    assert np.max(symmetry_defect(spec, random_element)) == 0.0


@pytest.mark.parametrize("spec", HOMOGENEOUS, ids=lambda s: s.label)
@pytest.mark.parametrize("rho", [1e-3, 0.5, 7.0, 1e3])
def test_homogeneity(spec, rho, random_element):
    values = np.asarray(evaluate(spec, random_element))
    defect = np.abs(homogeneity_defect(spec, random_element, rho))
    assert np.max(defect / (rho * values)) <= 1e-12


def test_box_is_not_homogeneous():
    v = point([[0, 0, 0, 0]], [1, 0, 0])
    assert homogeneity_defect(BOX, v, 2.0) == pytest.approx(2.0)
    assert not BOX.is_homogeneous


def test_homogeneity_rejects_non_positive_rho():
    with pytest.raises(DomainError):
        homogeneity_defect(KORANYI, UNIT_BOTH, 0.0)


def test_quasi_triangle_ratio_at_identity_is_undefined():
    e = GroupElement.identity(1)
    with pytest.raises(DomainError):
        quasi_triangle_ratio(KORANYI, e, e)


@pytest.mark.parametrize("spec", HOMOGENEOUS)
def test_quasi_triangle_ratio_with_inverse_is_zero(spec, rng):
    a = random_elements(rng, 1, 1000)
    assert np.all(np.asarray(quasi_triangle_ratio(spec, a, ginv(a))) == 0.0)


def test_quasi_triangle_supremum_below_bound():
    estimate = quasi_triangle_supremum(KORANYI, 1, 20000, seed=5)
    assert 0.5 < estimate.supremum <= koranyi_quasi_triangle_bound()
    ratio = quasi_triangle_ratio(KORANYI, estimate.witness_a, estimate.witness_b)
    assert ratio == pytest.approx(estimate.supremum, rel=1e-12)


def test_dilating_both_factors_keeps_ratio(random_pair):
    a, b = random_pair
    before = quasi_triangle_ratio(KORANYI, a, b)
    after = quasi_triangle_ratio(KORANYI, dilate(3.0, a), dilate(3.0, b))
    assert np.allclose(before, after, rtol=1e-12)


@pytest.mark.parametrize("text, expected", [
    ("koranyi", KORANYI),
    ("FS", FOLLAND_STEIN),
    ("box", BOX),
    (" max ", MAX),
    ("alpha:2.5", NormSpec(NormFamily.ALPHA, 2.5)),
])
def test_parse(text, expected):
    assert NormSpec.parse(text) == expected


@pytest.mark.parametrize("text", ["", "euclid", "alpha:", "alpha:-1", "alpha:x"])
def test_parse_rejects(text):
    with pytest.raises(ParseError):
        NormSpec.parse(text)


def test_labels():
    assert NormSpec.parse("alpha:2").label == "alpha:2"
    assert str(FOLLAND_STEIN) == "fs"


def test_analytic_constants():
    assert analytic_constants(MAX, KORANYI) == (1.0, 2.0 ** 0.25)
    assert analytic_constants(KORANYI, NormSpec.parse("alpha:4")) == (1.0, 1.0)
    assert analytic_constants(MAX, FOLLAND_STEIN) is None
