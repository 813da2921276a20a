"""
Exact symbolic algebra of the left-invariant vector fields for n = 1.

Coefficients live in the sparse polynomial ring QQ[x0, x1, x2, x3, t1, t2, t3]
(sympy's `ring`), so every sum, product and derivative is exact. First-order
operators carry one coefficient per coordinate derivative; compositions are
second-order operators with a symmetric coefficient matrix plus a first-order
part.
"""

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np
from sympy import QQ, ring
from sympy.polys.rings import PolyElement

from errors import DimensionError, UnknownFieldError
from group_ops import GroupElement
from quaternion_core import imag_bilinear_forms

logger = logging.getLogger(__name__)

VARIABLES = ('x0', 'x1', 'x2', 'x3', 't1', 't2', 't3')
HORIZONTAL_FIELDS = ('X0', 'X1', 'X2', 'X3')
CENTER_FIELDS = ('T1', 'T2', 'T3')
FIELD_NAMES = HORIZONTAL_FIELDS + CENTER_FIELDS

R, x0, x1, x2, x3, t1, t2, t3 = ring(','.join(VARIABLES), QQ)
GENERATORS = (x0, x1, x2, x3, t1, t2, t3)
_DIM = len(VARIABLES)

Polynomial7 = PolyElement
Scalar = Union[int, Fraction]


def _zero_row() -> Tuple[PolyElement, ...]:
    return tuple(R.zero for _ in range(_DIM))


def format_polynomial(f: PolyElement) -> str:
    """Sorted monomial text, highest total degree first, e.g. '4*x0^2 - 2*x1*t1'."""
    if not f:
        return "0"
    terms = sorted(f.terms(), key=lambda term: (-sum(term[0]), tuple(-e for e in term[0])))
    pieces = []
    for monom, coeff in terms:
        factors = [name if e == 1 else f"{name}^{e}" for name, e in zip(VARIABLES, monom) if e]
        magnitude = abs(coeff)
        if factors:
            body = "*".join(factors) if magnitude == 1 else f"{magnitude}*" + "*".join(factors)
        else:
            body = str(magnitude)
        sign = "-" if coeff < 0 else "+"
        pieces.append((sign, body))

    first_sign, first_body = pieces[0]
    text = ("-" if first_sign == "-" else "") + first_body
    for sign, body in pieces[1:]:
        text += f" {sign} {body}"
    return text


def evaluate_polynomial(f: PolyElement, point: GroupElement) -> float:
    """Float value of `f` at a single point of the n = 1 group."""
    if point.n != 1 or point.batch_shape:
        raise DimensionError("Polynomials are evaluated at single points with n = 1")
    values = point.coordinates().tolist()
    total = 0.0
    for monom, coeff in f.terms():
        term = float(coeff)
        for value, exponent in zip(values, monom):
            if exponent:
                term *= value ** exponent
        total += term
    return total


def random_polynomial(rng: np.random.Generator, degree: int, terms: int = 6) -> PolyElement:
    """Polynomial with `terms` random monomials of total degree <= degree and small integer coefficients."""
    result = R.zero
    for _ in range(terms):
        monomial = R.one
        for _ in range(int(rng.integers(0, degree + 1))):
            monomial *= GENERATORS[int(rng.integers(0, _DIM))]
        result += int(rng.integers(-5, 6)) * monomial
    return result


@dataclass(frozen=True)
class FirstOrderOperator:
    """sum_i coeffs[i] * d/d(VARIABLES[i]), no zeroth-order term."""
    coeffs: Tuple[PolyElement, ...]

    def __post_init__(self):
        coeffs = tuple(R(c) for c in self.coeffs)
        if len(coeffs) != _DIM:
            raise DimensionError(f"First-order operators need {_DIM} coefficients, got {len(coeffs)}")
        object.__setattr__(self, 'coeffs', coeffs)

    @classmethod
    def zero(cls) -> "FirstOrderOperator":
        return cls(_zero_row())

    @classmethod
    def from_terms(cls, terms: Mapping[str, PolyElement]) -> "FirstOrderOperator":
        coeffs = list(_zero_row())
        for variable, coeff in terms.items():
            coeffs[VARIABLES.index(variable)] = R(coeff)
        return cls(tuple(coeffs))

    def apply(self, f: PolyElement) -> PolyElement:
        result = R.zero
        for coeff, gen in zip(self.coeffs, GENERATORS):
            if coeff:
                result += coeff * f.diff(gen)
        return result

    def __add__(self, other: "FirstOrderOperator") -> "FirstOrderOperator":
        return FirstOrderOperator(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "FirstOrderOperator") -> "FirstOrderOperator":
        return FirstOrderOperator(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "FirstOrderOperator":
        return FirstOrderOperator(tuple(-a for a in self.coeffs))

    def __rmul__(self, scalar: Scalar) -> "FirstOrderOperator":
        factor = QQ(scalar.numerator, scalar.denominator) if isinstance(scalar, Fraction) else QQ(scalar)
        return FirstOrderOperator(tuple(factor * a for a in self.coeffs))

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def terms(self) -> Dict[Tuple[str, ...], PolyElement]:
        return {(VARIABLES[i],): c for i, c in enumerate(self.coeffs) if c}

    def __str__(self) -> str:
        return format_operator_terms(self.terms())


@dataclass(frozen=True)
class SecondOrderOperator:
    """
    sum_{i,j} second[i][j] d_i d_j + first, with `second` symmetric.

    The mixed coefficient reported by `terms()` for i < j is
    second[i][j] + second[j][i].
    """
    second: Tuple[Tuple[PolyElement, ...], ...]
    first: FirstOrderOperator = field(default_factory=FirstOrderOperator.zero)

    def __post_init__(self):
        second = tuple(tuple(R(c) for c in row) for row in self.second)
        if len(second) != _DIM or any(len(row) != _DIM for row in second):
            raise DimensionError(f"Second-order part must be {_DIM}x{_DIM}")
        if any(second[i][j] != second[j][i] for i in range(_DIM) for j in range(i)):
            raise DimensionError("Second-order part must be symmetric")
        object.__setattr__(self, 'second', second)

    @classmethod
    def zero(cls) -> "SecondOrderOperator":
        return cls(tuple(_zero_row() for _ in range(_DIM)))

    @classmethod
    def from_terms(cls, terms: Mapping[Tuple[str, ...], PolyElement]) -> "SecondOrderOperator":
        """Build from a `terms()`-style map; mixed coefficients are split evenly."""
        second = [list(_zero_row()) for _ in range(_DIM)]
        first = {}
        half = QQ(1, 2)
        for key, coeff in terms.items():
            coeff = R(coeff)
            if len(key) == 1:
                first[key[0]] = coeff
                continue
            i, j = sorted(VARIABLES.index(name) for name in key)
            if i == j:
                second[i][i] = coeff
            else:
                second[i][j] = second[j][i] = half * coeff
        return cls(tuple(tuple(row) for row in second), FirstOrderOperator.from_terms(first))

    def apply(self, f: PolyElement) -> PolyElement:
        result = self.first.apply(f)
        for i, j in itertools.product(range(_DIM), repeat=2):
            coeff = self.second[i][j]
            if coeff:
                result += coeff * f.diff(GENERATORS[i]).diff(GENERATORS[j])
        return result

    def _combine(self, other: "SecondOrderOperator", sign: int) -> "SecondOrderOperator":
        second = tuple(
            tuple(a + sign * b for a, b in zip(row_a, row_b))
            for row_a, row_b in zip(self.second, other.second)
        )
        first = self.first + other.first if sign > 0 else self.first - other.first
        return SecondOrderOperator(second, first)

    def __add__(self, other: "SecondOrderOperator") -> "SecondOrderOperator":
        return self._combine(other, 1)

    def __sub__(self, other: "SecondOrderOperator") -> "SecondOrderOperator":
        return self._combine(other, -1)

    def __neg__(self) -> "SecondOrderOperator":
        return SecondOrderOperator.zero() - self

    def __rmul__(self, scalar: Scalar) -> "SecondOrderOperator":
        factor = QQ(scalar.numerator, scalar.denominator) if isinstance(scalar, Fraction) else QQ(scalar)
        second = tuple(tuple(factor * c for c in row) for row in self.second)
        return SecondOrderOperator(second, scalar * self.first)

    def terms(self) -> Dict[Tuple[str, ...], PolyElement]:
        """Canonical map from derivative multi-index to coefficient (no zeros)."""
        result = {}
        for i in range(_DIM):
            for j in range(i, _DIM):
                coeff = self.second[i][i] if i == j else self.second[i][j] + self.second[j][i]
                if coeff:
                    result[(VARIABLES[i], VARIABLES[j])] = coeff
        result.update(self.first.terms())
        return result

    def __str__(self) -> str:
        return format_operator_terms(self.terms())


def _derivative_label(key: Tuple[str, ...]) -> str:
    if len(key) == 2 and key[0] == key[1]:
        return f"d{key[0]}^2"
    return "*".join(f"d{name}" for name in key)


def _term_order(key: Tuple[str, ...]) -> Tuple[int, Tuple[int, ...]]:
    return (-len(key), tuple(VARIABLES.index(name) for name in key))


def format_operator_terms(terms: Mapping[Tuple[str, ...], PolyElement]) -> str:
    """One 'derivative: coefficient' line per term, second order first."""
    if not terms:
        return "0"
    return "\n".join(
        f"{_derivative_label(key)}: {format_polynomial(terms[key])}"
        for key in sorted(terms, key=_term_order)
    )


Operator = Union[FirstOrderOperator, SecondOrderOperator]


def apply(op: Operator, f: PolyElement) -> PolyElement:
    """Exact application of a differential operator to a polynomial."""
    return op.apply(R(f))


def product(a: FirstOrderOperator, b: FirstOrderOperator) -> SecondOrderOperator:
    """The composition a∘b: sum a_i b_j d_i d_j + sum a(b_j) d_j."""
    half = QQ(1, 2)
    second = tuple(
        tuple(half * (a.coeffs[i] * b.coeffs[j] + a.coeffs[j] * b.coeffs[i]) for j in range(_DIM))
        for i in range(_DIM)
    )
    first = FirstOrderOperator(tuple(a.apply(c) for c in b.coeffs))
    return SecondOrderOperator(second, first)


def commutator(a: FirstOrderOperator, b: FirstOrderOperator) -> FirstOrderOperator:
    """[a, b] = ab - ba; the second-order parts cancel, leaving sum (a(b_j) - b(a_j)) d_j."""
    return FirstOrderOperator(tuple(a.apply(bc) - b.apply(ac) for ac, bc in zip(a.coeffs, b.coeffs)))


def jacobi_identity(a: FirstOrderOperator, b: FirstOrderOperator,
                    c: FirstOrderOperator) -> FirstOrderOperator:
    """[a,[b,c]] + [b,[c,a]] + [c,[a,b]]; zero for any three fields."""
    return (commutator(a, commutator(b, c))
            + commutator(b, commutator(c, a))
            + commutator(c, commutator(a, b)))


# Coefficients of T1, T2, T3 in the displayed horizontal fields
_DISPLAYED_CENTER_COEFFS = {
    'X0': (-2 * x1, -2 * x2, -2 * x3),
    'X1': (2 * x0, -2 * x3, 2 * x2),
    'X2': (2 * x3, 2 * x0, -2 * x1),
    'X3': (-2 * x2, 2 * x1, 2 * x0),
}


def _horizontal_field(index: int, center: Iterable[PolyElement]) -> FirstOrderOperator:
    coeffs = list(_zero_row())
    coeffs[index] = R.one
    coeffs[4:] = list(center)
    return FirstOrderOperator(tuple(coeffs))


def _center_field(k: int) -> FirstOrderOperator:
    coeffs = list(_zero_row())
    coeffs[4 + k] = R.one
    return FirstOrderOperator(tuple(coeffs))


@lru_cache(maxsize=None)
def vector_field(name: str) -> FirstOrderOperator:
    """
    One of X0..X3 (horizontal) or T1..T3 (center derivatives).

    X0 = d/dx0 - 2x1 T1 - 2x2 T2 - 2x3 T3
    X1 = d/dx1 + 2x0 T1 - 2x3 T2 + 2x2 T3
    X2 = d/dx2 + 2x3 T1 + 2x0 T2 - 2x1 T3
    X3 = d/dx3 - 2x2 T1 + 2x1 T2 + 2x0 T3

    Raises:
        UnknownFieldError for any other name.
    """
    key = (name or "").strip().upper()
    if key in _DISPLAYED_CENTER_COEFFS:
        return _horizontal_field(HORIZONTAL_FIELDS.index(key), _DISPLAYED_CENTER_COEFFS[key])
    if key in CENTER_FIELDS:
        return _center_field(CENTER_FIELDS.index(key))
    raise UnknownFieldError(f"Unknown vector field '{name}', expected one of {', '.join(FIELD_NAMES)}")


@lru_cache(maxsize=None)
def group_law_field(name: str) -> FirstOrderOperator:
    """
    Left-invariant field obtained by differentiating the group product.

    X_k f(g) = d/ds f(g (s e_k, 0)) at s = 0, which for the product
    t + s' + 2 Im(r ū) gives X_k = d/dx_k + 2 sum_m Im(e_k x̄)_m T_m.
    """
    key = (name or "").strip().upper()
    if key in CENTER_FIELDS:
        return vector_field(key)
    if key not in HORIZONTAL_FIELDS:
        raise UnknownFieldError(f"Unknown vector field '{name}', expected one of {', '.join(FIELD_NAMES)}")
    k = HORIZONTAL_FIELDS.index(key)
    forms = imag_bilinear_forms()
    center = []
    for m in range(3):
        coeff = R.zero
        for l in range(4):
            entry = int(round(forms[m][k, l]))
            if entry:
                coeff += 2 * entry * GENERATORS[l]
        center.append(coeff)
    return _horizontal_field(k, center)


def displayed_fields() -> Dict[str, FirstOrderOperator]:
    return {name: vector_field(name) for name in FIELD_NAMES}


def group_law_fields() -> Dict[str, FirstOrderOperator]:
    return {name: group_law_field(name) for name in FIELD_NAMES}


@dataclass
class RelationCheck:
    """One bracket relation and whether it holds exactly."""
    name: str
    expected: FirstOrderOperator
    computed: FirstOrderOperator

    @property
    def passed(self) -> bool:
        return self.expected == self.computed

    def to_dict(self) -> Dict[str, str]:
        return {
            "relation": self.name,
            "expected": _one_line(self.expected),
            "computed": _one_line(self.computed),
            "status": "pass" if self.passed else "fail",
        }


@dataclass
class CommutationReport:
    relations: List[RelationCheck]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.relations)

    def failures(self) -> List[RelationCheck]:
        return [r for r in self.relations if not r.passed]

    def __getitem__(self, name: str) -> RelationCheck:
        for relation in self.relations:
            if relation.name == name:
                return relation
        raise KeyError(name)


def _one_line(op: FirstOrderOperator) -> str:
    """Compact form using field names when the operator is a constant combination of T's."""
    terms = op.terms()
    if not terms:
        return "0"
    pieces = []
    for (variable,), coeff in sorted(terms.items(), key=lambda item: _term_order(item[0])):
        label = f"T{variable[1]}" if variable.startswith('t') else f"d{variable}"
        pieces.append(f"({format_polynomial(coeff)})*{label}")
    return " + ".join(pieces)


# The six displayed relations [a, b] = 4 T_k
DISPLAYED_RELATIONS = (
    ('X0', 'X1', 'T1'), ('X3', 'X2', 'T1'),
    ('X0', 'X2', 'T2'), ('X1', 'X3', 'T2'),
    ('X0', 'X3', 'T3'), ('X2', 'X1', 'T3'),
)


def check_commutation_table(fields: Optional[Mapping[str, FirstOrderOperator]] = None) -> CommutationReport:
    """
    Verify the displayed bracket relations exactly.

    Checks the six relations [a, b] = 4 T_k, [X_i, X_i] = 0 and [T_k, F] = 0
    for every field F. `fields` replaces the displayed fields (for checking
    another frame or a perturbed one).
    """
    fields = dict(fields) if fields is not None else displayed_fields()
    relations = []
    for a, b, center in DISPLAYED_RELATIONS:
        relations.append(RelationCheck(
            f"[{a},{b}]", 4 * fields[center], commutator(fields[a], fields[b])
        ))
    for name in HORIZONTAL_FIELDS:
        relations.append(RelationCheck(
            f"[{name},{name}]", FirstOrderOperator.zero(), commutator(fields[name], fields[name])
        ))
    for center in CENTER_FIELDS:
        for name in FIELD_NAMES:
            relations.append(RelationCheck(
                f"[{center},{name}]", FirstOrderOperator.zero(), commutator(fields[center], fields[name])
            ))

    report = CommutationReport(relations)
    if not report.passed:
        logger.info(f"Commutation table: {len(report.failures())} relations fail")
    return report


def bracket_table(fields: Optional[Mapping[str, FirstOrderOperator]] = None) -> List[Dict[str, str]]:
    """Every [A, B] for A before B in X0..X3, T1..T3, as display records."""
    fields = dict(fields) if fields is not None else displayed_fields()
    return [
        {"left": a, "right": b, "bracket": _one_line(commutator(fields[a], fields[b]))}
        for a, b in itertools.combinations(FIELD_NAMES, 2)
    ]


def check_jacobi(fields: Optional[Mapping[str, FirstOrderOperator]] = None) -> bool:
    """Jacobi identity on every triple of distinct basis fields."""
    fields = dict(fields) if fields is not None else displayed_fields()
    return all(
        jacobi_identity(fields[a], fields[b], fields[c]).is_zero()
        for a, b, c in itertools.combinations(FIELD_NAMES, 3)
    )


@dataclass
class StratificationReport:
    """Brackets of horizontal fields are constant central; all double brackets vanish."""
    central_brackets: bool
    nilpotent: bool
    offending: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.central_brackets and self.nilpotent


def check_stratification(fields: Optional[Mapping[str, FirstOrderOperator]] = None) -> StratificationReport:
    fields = dict(fields) if fields is not None else displayed_fields()
    offending = []
    central = True
    nilpotent = True
    for a, b in itertools.combinations(HORIZONTAL_FIELDS, 2):
        bracket = commutator(fields[a], fields[b])
        horizontal_part = bracket.coeffs[:4]
        center_part = bracket.coeffs[4:]
        if any(horizontal_part) or not all(c.is_ground for c in center_part):
            central = False
            offending.append(f"[{a},{b}]")
        for c in FIELD_NAMES:
            if not commutator(bracket, fields[c]).is_zero():
                nilpotent = False
                offending.append(f"[[{a},{b}],{c}]")
    return StratificationReport(central, nilpotent, offending)


def kohn_laplacian(fields: Optional[Mapping[str, FirstOrderOperator]] = None) -> SecondOrderOperator:
    """X0^2 + X1^2 + X2^2 + X3^2."""
    fields = dict(fields) if fields is not None else displayed_fields()
    total = SecondOrderOperator.zero()
    for name in HORIZONTAL_FIELDS:
        total = total + product(fields[name], fields[name])
    return total


def sublaplacian(fields: Optional[Mapping[str, FirstOrderOperator]] = None) -> SecondOrderOperator:
    """-1/4 (X0^2 + X1^2 + X2^2 + X3^2)."""
    return Fraction(-1, 4) * kohn_laplacian(fields)


def display_operator() -> SecondOrderOperator:
    """
    The expanded -Delta as commonly displayed, term by term:

      -(dx0^2 + dx1^2 + dx2^2 + dx3^2) + 4|x|^2 (dt1^2 + dt2^2 + dt3^2)
      + (-x1 dx0 + x0 dx1 + x3 dx2 - x2 dx3) T1
      + (-x2 dx0 - x3 dx1 + x0 dx2 + x1 dx3) T2
      + (-x3 dx0 + x2 dx1 - x1 dx2 + x0 dx3) T3
    """
    radius_sq = x0 ** 2 + x1 ** 2 + x2 ** 2 + x3 ** 2
    terms = {}
    for name in VARIABLES[:4]:
        terms[(name, name)] = -R.one
    for name in VARIABLES[4:]:
        terms[(name, name)] = 4 * radius_sq
    cross = {
        't1': (-x1, x0, x3, -x2),
        't2': (-x2, -x3, x0, x1),
        't3': (-x3, x2, -x1, x0),
    }
    for center, coeffs in cross.items():
        for horizontal, coeff in zip(VARIABLES[:4], coeffs):
            terms[(horizontal, center)] = coeff
    return SecondOrderOperator.from_terms(terms)


@dataclass
class TermDifference:
    derivative: str
    computed: str
    displayed: str

    def to_dict(self) -> Dict[str, str]:
        return {"derivative": self.derivative, "computed": self.computed, "displayed": self.displayed}


def diff_against_display() -> List[TermDifference]:
    """Terms where the exact -sum X_i^2 disagrees with the displayed -Delta."""
    computed = (-kohn_laplacian()).terms()
    displayed = display_operator().terms()
    differences = []
    for key in sorted(set(computed) | set(displayed), key=_term_order):
        ours, theirs = computed.get(key, R.zero), displayed.get(key, R.zero)
        if ours != theirs:
            differences.append(TermDifference(
                _derivative_label(key), format_polynomial(ours), format_polynomial(theirs)
            ))
    logger.info(f"-sum X_i^2 differs from the displayed expansion in {len(differences)} terms")
    return differences


@dataclass
class FrameComparison:
    """Displayed fields vs the fields obtained by differentiating the group product."""
    differing_fields: List[str]
    flipped_relations: List[str]
    group_law_table_passes: bool

    def to_dict(self) -> Dict[str, object]:
        return {
            "differing_fields": self.differing_fields,
            "flipped_relations": self.flipped_relations,
            "group_law_table_passes": self.group_law_table_passes,
        }


def compare_frames() -> FrameComparison:
    displayed = displayed_fields()
    derived = group_law_fields()
    differing = [name for name in FIELD_NAMES if displayed[name] != derived[name]]
    report = check_commutation_table(derived)
    flipped = [
        relation.name for relation in report.relations
        if not relation.passed and relation.computed == -relation.expected
    ]
    return FrameComparison(differing, flipped, report.passed)
