import numpy as np
import pytest

from errors import DimensionError
from quaternion_core import (
    BASIS, Quaternion, dot_bar, imag_bilinear_forms, qconj, qim, qmul, qnorm, qtuple_norm_sq,
)

ONE, I, J, K = BASIS


@pytest.mark.parametrize("a, b, expected", [
    (I, J, K),
    (J, K, I),
    (K, I, J),
    (J, I, -K),
    (I, I, -ONE),
    (K, K, -ONE),
])
def test_hamilton_relations(a, b, expected):
    assert np.array_equal(qmul(a, b), expected)


def test_ijk_is_minus_one():
    assert np.array_equal(qmul(qmul(I, J), K), -ONE)


def test_one_plus_i_times_one_minus_i():
    assert np.array_equal(qmul([1, 1, 0, 0], [1, -1, 0, 0]), [2, 0, 0, 0])


def test_product_with_conjugate_is_squared_norm():
    a = [3.0, 2.0, -1.0, 4.0]
    assert np.array_equal(qmul(a, qconj(a)), [30.0, 0.0, 0.0, 0.0])


def test_product_with_conjugate_has_exactly_real_value(rng):
    a = rng.standard_normal((10000, 4))
    assert np.all(qim(qmul(a, qconj(a))) == 0.0)
    assert np.all(qim(qmul(qconj(a), a)) == 0.0)
    assert np.all(qim(qmul(-a, qconj(a))) == 0.0)


def test_conjugate_is_involution(rng):
    a = rng.standard_normal((100, 4))
    assert np.array_equal(qconj(qconj(a)), a)


def test_norm_is_multiplicative(rng):
    a, b = rng.standard_normal((2, 10000, 4))
    expected = qnorm(a) * qnorm(b)
    assert np.max(np.abs(qnorm(qmul(a, b)) - expected) / expected) < 1e-12


def test_qmul_is_associative(rng):
    a, b, c = rng.standard_normal((3, 10000, 4))
    left = qmul(qmul(a, b), c)
    right = qmul(a, qmul(b, c))
    assert np.max(np.abs(left - right)) < 1e-12 * np.max(qnorm(a) * qnorm(b) * qnorm(c))


def test_qmul_is_not_commutative():
    assert not np.array_equal(qmul(I, J), qmul(J, I))


def test_qmul_rejects_wrong_trailing_axis():
    with pytest.raises(DimensionError):
        qmul([1.0, 2.0, 3.0], I)


def test_dot_bar_of_tuple_with_itself_is_real(rng):
    u = rng.standard_normal((1000, 3, 4))
    product = dot_bar(u, u)
    assert np.all(qim(product) == 0.0)
    assert np.allclose(product[..., 0], qtuple_norm_sq(u), rtol=1e-14)


def test_dot_bar_single_pair():
    # i · conj(1) = i
    assert np.array_equal(dot_bar([I], [ONE]), I)


def test_dot_bar_length_mismatch():
    with pytest.raises(DimensionError):
        dot_bar(np.zeros((2, 4)), np.zeros((3, 4)))


def test_imag_bilinear_forms_match_qmul(rng):
    a, b = rng.standard_normal((2, 4))
    forms = imag_bilinear_forms()
    expected = qim(qmul(a, qconj(b)))
    assert np.allclose([a @ form @ b for form in forms], expected, atol=1e-14)


def test_imag_bilinear_forms_are_antisymmetric_and_read_only():
    for form in imag_bilinear_forms():
        assert np.array_equal(form, -form.T)
        with pytest.raises(ValueError):
            form[0, 1] = 5.0


def test_quaternion_value_type():
    a = Quaternion(3, 2, -1, 4)
    assert (a * a.conj()).w == 30.0
    assert (a * a.conj()).is_real()
    assert a.norm() == pytest.approx(np.sqrt(30.0))
    assert Quaternion(0, 1) * Quaternion(0, 0, 1) == Quaternion(0, 0, 0, 1)
    assert 2 * Quaternion(1, 1) == Quaternion(2, 2)
    assert a - a == Quaternion()
    assert a.imag() == (2.0, -1.0, 4.0)


def test_quaternion_str_is_a_literal():
    assert str(Quaternion(3.0, 2.0, -1.0, 4.0)) == "3.0+2.0i-1.0j+4.0k"
