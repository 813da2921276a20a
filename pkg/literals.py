"""
Parsing of the textual literals accepted by the CLI.

Quaternion literal:  "w+xi+yj+zk"  (terms in any order, omitted terms are 0,
                                    a bare unit means coefficient 1: "1-i+k")
Point literal:       "q_1;...;q_n;t1,t2,t3"
"""

import re
from typing import Iterable, List

import numpy as np

from errors import ParseError
from group_ops import GroupElement
from quaternion_core import Quaternion

_TERM = re.compile(
    r"\s*(?P<sign>[+-])?\s*"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?"
    r"\s*(?P<unit>[ijk])?\s*"
)
_UNIT_INDEX = {None: 0, 'i': 1, 'j': 2, 'k': 3}


def parse_quaternion(value: str) -> Quaternion:
    """
    Parse a quaternion literal such as "3+2i-j+4k".

    Raises:
        ParseError if the input is empty or malformed.
    """
    if not value or not isinstance(value, str) or not value.strip():
        raise ParseError("Quaternion literal must be a non-empty string like 1+2i-j+0.5k")

    components = [0.0, 0.0, 0.0, 0.0]
    seen = set()
    text = value.strip()
    pos = 0
    first = True
    while pos < len(text):
        match = _TERM.match(text, pos)
        sign, num, unit = match.group('sign'), match.group('num'), match.group('unit')
        if match.end() == pos or (num is None and unit is None):
            raise ParseError(f"Invalid quaternion literal '{value}' at position {pos}")
        if sign is None and not first:
            raise ParseError(f"Missing sign between terms in quaternion literal '{value}'")
        if unit in seen:
            raise ParseError(f"Component '{unit or 'real'}' given twice in '{value}'")
        seen.add(unit)

        magnitude = float(num) if num is not None else 1.0
        components[_UNIT_INDEX[unit]] = -magnitude if sign == '-' else magnitude
        pos = match.end()
        first = False

    return Quaternion(*components)


def parse_vec3(value: str) -> np.ndarray:
    """Parse "t1,t2,t3" into a length-3 array."""
    parts = [part.strip() for part in value.split(',')]
    if len(parts) != 3:
        raise ParseError(f"Invalid center literal '{value}', expected t1,t2,t3")
    try:
        return np.array([float(part) for part in parts])
    except ValueError:
        raise ParseError(f"Invalid number in center literal '{value}'") from None


def parse_point(value: str) -> GroupElement:
    """
    Parse a point literal "q_1;...;q_n;t1,t2,t3" into a GroupElement.

    Raises:
        ParseError if the literal is malformed or has no horizontal part.
    """
    if not value or not isinstance(value, str):
        raise ParseError("Point literal must be a non-empty string like 1+i;0,0,1")

    fields = [field.strip() for field in value.strip().split(';')]
    if len(fields) < 2:
        raise ParseError(f"Invalid point literal '{value}', expected q_1;...;q_n;t1,t2,t3")

    quaternions = [parse_quaternion(field).as_array() for field in fields[:-1]]
    return GroupElement(np.stack(quaternions), parse_vec3(fields[-1]))


def format_point(point: GroupElement) -> str:
    """Render a single point in literal form (inverse of parse_point)."""
    quaternions = [str(Quaternion.from_array(q)) for q in point.u]
    center = ",".join(repr(float(c)) for c in point.t)
    return ";".join(quaternions + [center])


def parse_points(lines: Iterable[str]) -> List[GroupElement]:
    """Parse one point per line; blank lines and '#' comments are skipped."""
    points = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue
        try:
            points.append(parse_point(stripped))
        except ParseError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
    return points
