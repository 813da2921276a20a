import numpy as np
import pytest

from conftest import point
from errors import ParseError
from literals import format_point, parse_point, parse_points, parse_quaternion, parse_vec3
from quaternion_core import Quaternion


@pytest.mark.parametrize("text, expected", [
    ("3+2i-j+4k", Quaternion(3, 2, -1, 4)),
    ("1", Quaternion(1, 0, 0, 0)),
    ("-i", Quaternion(0, -1, 0, 0)),
    ("0.5k+2", Quaternion(2, 0, 0, 0.5)),
    ("1e-3j", Quaternion(0, 0, 0.001, 0)),
    (" 1 - i + k ", Quaternion(1, -1, 0, 1)),
])
def test_parse_quaternion(text, expected):
    assert parse_quaternion(text) == expected


@pytest.mark.parametrize("text", ["", "   ", "1+2x", "i i", "1+2i+3i", "++1"])
def test_parse_quaternion_rejects_malformed(text):
    with pytest.raises(ParseError):
        parse_quaternion(text)


def test_parse_vec3():
    assert np.array_equal(parse_vec3("1, -2.5, 3e2"), [1.0, -2.5, 300.0])
    with pytest.raises(ParseError):
        parse_vec3("1,2")
    with pytest.raises(ParseError):
        parse_vec3("1,a,2")


def test_parse_point_with_two_quaternions():
    v = parse_point("1+i;j;0,0,1")
    assert v.n == 2
    assert np.array_equal(v.u, [[1, 1, 0, 0], [0, 0, 1, 0]])
    assert np.array_equal(v.t, [0, 0, 1])


def test_parse_point_needs_horizontal_part():
    with pytest.raises(ParseError):
        parse_point("0,0,1")


def test_format_point_is_accepted_back():
    v = point([[0.1, -2.0, 0.0, 1e-20]], [3.0, -0.0, 7.25])
    assert parse_point(format_point(v)).allclose(v, atol=0.0)


def test_parse_points_skips_blanks_and_comments():
    points = parse_points(["# header", "", "1;0,0,0", "i;1,2,3"])
    assert len(points) == 2
    with pytest.raises(ParseError, match="line 2"):
        parse_points(["1;0,0,0", "bogus"])
