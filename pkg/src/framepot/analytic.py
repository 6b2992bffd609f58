"""Closed-form minima, simplex coherence, equidistribution moments and
second differences, all in exact rational arithmetic."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .geometry import Configuration, FieldTag, GramSummary, potential

INT64_MAX = 2**63 - 1
WELCH_TOL = 1e-9


class Source(enum.Enum):
    P2_GENERAL = "P2General"
    P4_N2 = "P4N2"
    P6_N2 = "P6N2"
    SIMPLEX_COHERENCE = "SimplexCoherence"
    MOMENT = "Moment"
    LEADING_COEFF = "LeadingCoeff"
    ORTHOGONAL = "Orthogonal"


class Axis(enum.Enum):
    ALONG_M = "m"
    ALONG_N = "n"

    @classmethod
    def parse(cls, value) -> "Axis":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        for member in cls:
            if text in (member.value, member.name.lower(), "along" + member.value):
                return member
        raise ValueError(f"unknown axis {value!r}; expected 'm' or 'n'")


def _checked(value: Fraction) -> Fraction:
    if abs(value.numerator) > INT64_MAX or value.denominator > INT64_MAX:
        raise OverflowError(f"rational {value} does not fit in 64-bit numerator/denominator")
    return value


@dataclass(frozen=True)
class ClosedFormValue:
    value: Fraction
    domain_ok: bool
    source: Source

    def __post_init__(self):
        object.__setattr__(self, "value", _checked(Fraction(self.value)))

    def __float__(self):
        return float(self.value)

    def to_dict(self) -> dict:
        return {
            "value": f"{self.value.numerator}/{self.value.denominator}",
            "approx": float(self.value),
            "domain_ok": self.domain_ok,
            "source": self.source.value,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ClosedFormValue":
        return cls(Fraction(data["value"]), bool(data["domain_ok"]), Source(data["source"]))


@dataclass(frozen=True)
class DifferenceTable:
    axis: Axis
    cells: dict  # (m, n) -> second difference


def _positive_int(name, value, minimum=1):
    if int(value) != value or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def exact_p2(m: int, n: int) -> ClosedFormValue:
    m = _positive_int("m", m)
    n = _positive_int("n", n)
    if m <= n:
        return ClosedFormValue(Fraction(0), True, Source.P2_GENERAL)
    return ClosedFormValue(Fraction(m * (m - n), 2 * n), True, Source.P2_GENERAL)


def exact_p4_n2(m: int) -> ClosedFormValue:
    """``m(m-3)/6``; proven for complex ``n = 2`` when ``m = 4`` or ``m >= 6``."""
    m = _positive_int("m", m)
    return ClosedFormValue(Fraction(m * (m - 3), 6), m == 4 or m >= 6, Source.P4_N2)


def exact_p6_n2(m: int) -> ClosedFormValue:
    """``m(m-4)/8``; proven for complex ``n = 2`` and even ``m >= 6``."""
    m = _positive_int("m", m)
    return ClosedFormValue(Fraction(m * (m - 4), 8), m % 2 == 0 and m >= 6, Source.P6_N2)


def simplex_coherence_sq(m: int, n: int) -> ClosedFormValue:
    m = _positive_int("m", m, 2)
    n = _positive_int("n", n)
    return ClosedFormValue(Fraction(m - n, n * (m - 1)), m >= n, Source.SIMPLEX_COHERENCE)


def equidistribution_moment(k: int, n: int) -> ClosedFormValue:
    """``E[t_1^k]`` for ``t`` uniform on the standard (n-1)-simplex.

    Equals ``E|<u, v>|^(2k)`` for independent Fubini-Study points of CP^(n-1).
    """
    k = _positive_int("k", k)
    n = _positive_int("n", n, 2)
    value = Fraction(math.factorial(k) * math.factorial(n - 1), math.factorial(n + k - 1))
    return ClosedFormValue(value, True, Source.MOMENT)


def asymptotic_leading_coeff(p_even: int, n: int) -> ClosedFormValue:
    """Coefficient of ``m^2`` in the large-m minimum of the pair sum over i < j.

    Equidistributed points give ``C(m, 2) * E|<u, v>|^p ~ (m^2 / 2) * E``.
    """
    p_even = _positive_int("p", p_even)
    if p_even % 2:
        raise ValueError(f"p must be even, got {p_even}")
    moment = equidistribution_moment(p_even // 2, n).value
    return ClosedFormValue(moment / 2, True, Source.LEADING_COEFF)


def exact_for_cell(m: int, n: int, p: float, field) -> ClosedFormValue | None:
    """The closed form covering ``(m, n, p)`` over ``field``, if one is known.

    Out-of-range extrapolations are returned with ``domain_ok = False``.
    """
    field = FieldTag.parse(field)
    if m <= n:
        return ClosedFormValue(Fraction(0), True, Source.ORTHOGONAL)
    if p == 2:
        return exact_p2(m, n)
    if n == 2 and field is FieldTag.COMPLEX:
        if p == 4:
            return exact_p4_n2(m)
        if p == 6:
            return exact_p6_n2(m)
    return None


def second_difference(values: Mapping, axis="m") -> DifferenceTable:
    """``f(x+1) - 2 f(x) + f(x-1)`` along one axis of a grid keyed by ``(m, n)``.

    Points whose two neighbours along the axis are missing are skipped, so any
    contiguous run of at least three values contributes its interior points.
    Exact rationals in give exact rationals out.
    """
    axis = Axis.parse(axis)
    cells = {}
    for (m, n), f0 in sorted(values.items()):
        if axis is Axis.ALONG_M:
            lo, hi = (m - 1, n), (m + 1, n)
        else:
            lo, hi = (m, n - 1), (m, n + 1)
        if lo in values and hi in values:
            cells[(m, n)] = values[hi] - 2 * f0 + values[lo]
    return DifferenceTable(axis, cells)


def welch_check(config: Configuration, summary: GramSummary | None = None):
    """Return ``(ok, slack)`` where ``slack = potential_2 - m(m-n)/(2n)``.

    The bound is 0 when ``m <= n``; ``ok`` means ``slack >= -1e-9``.
    """
    if summary is not None and 2 in summary.potential_by_p:
        p2 = summary.potential_by_p[2]
    else:
        p2 = potential(config, 2)
    bound = float(exact_p2(config.m, config.n).value)
    slack = p2 - bound
    return slack >= -WELCH_TOL, slack


def leading_coefficient_residual(coeff: Fraction, exact_values: Mapping[int, Fraction]):
    """Fit ``exact(m) - coeff m^2`` by a line exactly; return the max deviation.

    Zero means ``coeff * m^2`` and the exact formula differ by a polynomial of
    degree at most one on the given points.
    """
    ms = sorted(exact_values)
    if len(ms) < 3:
        raise ValueError("need at least three points")
    rest = {m: Fraction(exact_values[m]) - coeff * m * m for m in ms}
    m0, m1 = ms[0], ms[1]
    slope = (rest[m1] - rest[m0]) / (m1 - m0)
    return max(abs(rest[m] - (rest[m0] + slope * (m - m0))) for m in ms)

