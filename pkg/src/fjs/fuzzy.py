"""Triangular fuzzy numbers: arithmetic, defuzzification, and ranking.

A triangular fuzzy number (TFN) is a triple ``(a1, a2, a3)`` with
``a1 <= a2 <= a3``: support ``[a1, a3]``, modal value ``a2``.  Everything
here works on plain 64-bit floats.  Comparisons between fuzzy values
always reduce them to crisp scalars first; the max operation returns one
of its operands, never a componentwise blend.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence


class TFN(NamedTuple):
    """Triangular fuzzy number with support [a1, a3] and modal value a2."""

    a1: float
    a2: float
    a3: float


ZERO = TFN(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class RankConfig:
    """Weights of the Z-value ranking.

    ``beta`` trades off the upper and lower expected bounds, ``omega``
    weighs the support spread.  Both must lie in [0, 1].
    """

    beta: float = 0.5
    omega: float = 0.4

    def __post_init__(self) -> None:
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if not 0.0 <= self.omega <= 1.0:
            raise ValueError(f"omega must lie in [0, 1], got {self.omega}")


DEFAULT_RANK = RankConfig()


def validate_tfn(t: TFN) -> TFN:
    """Return ``t`` unchanged, raising ValueError unless a1 <= a2 <= a3."""
    a1, a2, a3 = t
    if not (a1 <= a2 <= a3):
        raise ValueError(f"not a valid TFN: ({a1}, {a2}, {a3})")
    return t


def membership(t: TFN, x: float) -> float:
    """Degree to which the crisp value ``x`` belongs to ``t``, in [0, 1].

    Piecewise linear: rises on (a1, a2], falls on (a2, a3], zero outside.
    Degenerate segments (a1 == a2 or a2 == a3) contribute only the point
    x == a2, where membership is 1.
    """
    a1, a2, a3 = t
    if x == a2:
        return 1.0
    if a1 < x <= a2:
        return (x - a1) / (a2 - a1)
    if a2 < x <= a3:
        return (a3 - x) / (a3 - a2)
    return 0.0


def alpha_cut(t: TFN, alpha: float) -> tuple[float, float]:
    """Interval of values with membership >= alpha: [a1+α(a2−a1), a3−α(a3−a2)]."""
    a1, a2, a3 = t
    return (a1 + alpha * (a2 - a1), a3 - alpha * (a3 - a2))


def add(a: TFN, b: TFN) -> TFN:
    """Componentwise sum of two TFNs."""
    return TFN(a.a1 + b.a1, a.a2 + b.a2, a.a3 + b.a3)


def defuzz(t: TFN) -> float:
    """Crisp value (a1 + 2*a2 + a3) / 4."""
    return (t.a1 + 2.0 * t.a2 + t.a3) / 4.0


def z_value(t: TFN, cfg: RankConfig = DEFAULT_RANK) -> float:
    """Ranking scalar Z = beta*V_max + (1-beta)*V_min + omega*(a3-a1).

    V_max = a2 + (a3-a2)/2 and V_min = a2 - (a2-a1)/2 are the closed
    forms of the upper/lower expected values for a triangular membership.
    """
    a1, a2, a3 = t
    v_max = a2 + (a3 - a2) / 2.0
    v_min = a2 - (a2 - a1) / 2.0
    return cfg.beta * v_max + (1.0 - cfg.beta) * v_min + cfg.omega * (a3 - a1)


def fuzzy_max(a: TFN, b: TFN, cfg: RankConfig = DEFAULT_RANK) -> TFN:
    """The operand with the larger z_value; ``a`` on an exact tie.

    The result is always one of the two operands.
    """
    return a if z_value(a, cfg) >= z_value(b, cfg) else b


def rank_sakawa(a: TFN, b: TFN) -> int:
    """Three-criterion lexicographic comparison: -1 less, 0 equal, 1 greater.

    Criteria in order: c1 = (a1+2a2+a3)/4, c2 = a2, c3 = a3-a1.
    """
    for ca, cb in (
        (defuzz(a), defuzz(b)),
        (a.a2, b.a2),
        (a.a3 - a.a1, b.a3 - b.a1),
    ):
        if ca < cb:
            return -1
        if ca > cb:
            return 1
    return 0


def _interpolate(xs: Sequence[float], rank: float) -> float:
    lo = int(rank)
    hi = lo + 1 if lo + 1 < len(xs) else lo
    return xs[lo] + (xs[hi] - xs[lo]) * (rank - lo)


def quartiles_defuzz(values: Sequence[TFN]) -> tuple[float, float, float]:
    """Quartiles (Q1, Q2, Q3) of the defuzzified values.

    Defuzzifies every element, sorts ascending, and interpolates linearly
    at fractional ranks q*(k-1) for q in {0.25, 0.5, 0.75}.
    """
    if len(values) == 0:
        raise ValueError("quartiles of an empty list are undefined")
    xs = sorted(defuzz(t) for t in values)
    k = len(xs)
    return (
        _interpolate(xs, 0.25 * (k - 1)),
        _interpolate(xs, 0.50 * (k - 1)),
        _interpolate(xs, 0.75 * (k - 1)),
    )
