"""Closed-form backend: shift and odometer on truncated binary sequences.

Points are finite 0/1 prefixes of one-sided sequences, stored as an
integer whose bit i-1 is coordinate i, plus an explicit depth.  Any
operation that would need a coordinate beyond the depth raises instead
of silently extending; in particular the odometer raises CarryOverflow
on an all-ones prefix (the wrap-around point is a measure-zero case
that sampling never produces, and silent wrapping would corrupt the
brute-force oracles built on these points).

Metric convention
-----------------
d(x, y) = 2**(-L) where L is the number of leading coordinates on which
x and y agree (d = 1 when they differ at the first coordinate, 0 when
the prefixes are identical).  With the non-strict ball rule d <= eps
this makes the ball of radius 2**(-t) exactly the cylinder on the first
t coordinates, which is the convention all closed-form series here are
built on.  Under the fair-coin measure the cylinder on L coordinates
has measure exactly 2**(-L).

For a word omega over {1: shift, 2: odometer} and horizon k, the Bowen
ball of radius 2**(-t) is the cylinder on the first t + s coordinates,
where s counts the shift symbols among the first k-1 letters: each
shift stage sharpens the effective radius by one halving, each odometer
stage (an isometry) leaves it unchanged.  Averaging the cylinder length
over fair words turns every entropy series below into the closed form
(t + (k-1)/2) * log 2 / k, with limit (log 2) / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import (
    CarryOverflow,
    DepthExhausted,
    InvalidEpsilon,
    KZero,
    WordTooShort,
)
from .series import EntropySeries
from .words import SymbolWord

LOG2 = math.log(2.0)


class BinaryPoint:
    """Truncated binary sequence; treat instances as immutable values.

    A plain slotted class rather than a dataclass: these are allocated
    in very hot loops (orbits are one allocation per step).
    """

    __slots__ = ("value", "depth")

    def __init__(self, value: int, depth: int):
        if depth < 1:
            raise ValueError(f"depth must be >= 1, got {depth}")
        if value < 0 or value.bit_length() > depth:
            raise ValueError(f"value {value} does not fit in depth {depth}")
        self.value = value
        self.depth = depth

    @classmethod
    def from_bits(cls, bits) -> "BinaryPoint":
        bits = tuple(int(b) for b in bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError("bits must be 0 or 1")
        v = 0
        for i, b in enumerate(bits):
            v |= b << i
        return cls(v, len(bits))

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple((self.value >> i) & 1 for i in range(self.depth))

    def __eq__(self, other):
        return (
            isinstance(other, BinaryPoint)
            and self.value == other.value
            and self.depth == other.depth
        )

    def __hash__(self):
        return hash((self.value, self.depth))

    def __repr__(self):
        shown = self.bits[:16]
        tail = ",.." if self.depth > 16 else ""
        return f"BinaryPoint(({','.join(map(str, shown))}{tail}), depth={self.depth})"


def drop_head(x: BinaryPoint) -> BinaryPoint:
    """Shift: forget the first coordinate.  Depth decreases by one."""
    if x.depth < 2:
        raise DepthExhausted("cannot shift a depth-1 point")
    return BinaryPoint(x.value >> 1, x.depth - 1)


def add_one(x: BinaryPoint) -> BinaryPoint:
    """Odometer: add one with carry at the first coordinate.

    Flips the leading ones to zero and the first zero to one; raises
    CarryOverflow when the prefix is all ones, since the carry would
    leave the truncation.
    """
    w = x.value + 1
    if w.bit_length() > x.depth:
        raise CarryOverflow(f"all-ones prefix of depth {x.depth}")
    return BinaryPoint(w, x.depth)


GENERATORS = {"shift": drop_head, "odometer": add_one}


def exact_apply(gen: str, x: BinaryPoint) -> BinaryPoint:
    """Apply a named generator ('shift' or 'odometer')."""
    try:
        fn = GENERATORS[gen]
    except KeyError:
        raise ValueError(f"unknown generator {gen!r}") from None
    return fn(x)


def distance(x: BinaryPoint, y: BinaryPoint) -> float:
    """2**(-number of leading coordinates on which x and y agree).

    Raises DepthExhausted when the prefixes agree on their whole common
    range but have different depths: the true distance would depend on
    coordinates outside the truncation.
    """
    w = x.value ^ y.value
    if w == 0:
        if x.depth != y.depth:
            raise DepthExhausted("points agree on the shorter prefix")
        return 0.0
    common = (w & -w).bit_length() - 1
    if common >= min(x.depth, y.depth):
        raise DepthExhausted("first difference lies beyond the shorter prefix")
    return 2.0 ** (-common)


@lru_cache(maxsize=1024)
def prefix_length_for(eps: float) -> int:
    """Smallest L >= 0 with 2**(-L) <= eps.

    Two points are within eps exactly when they agree on their first L
    coordinates, so eps-balls are cylinders of this length.
    """
    if not eps > 0.0:
        raise InvalidEpsilon(f"epsilon must be > 0, got {eps!r}")
    if eps >= 1.0:
        return 0
    level = max(0, math.ceil(-math.log2(eps)))
    while 2.0 ** (-level) > eps:
        level += 1
    while level > 0 and 2.0 ** (-(level - 1)) <= eps:
        level -= 1
    return level


@lru_cache(maxsize=1024)
def _prefix_mask(eps: float) -> int:
    return (1 << prefix_length_for(eps)) - 1


def ball_key(x: BinaryPoint, eps: float):
    """Hashable key with d(x, y) <= eps iff keys are equal."""
    mask = _prefix_mask(eps)
    if mask.bit_length() > x.depth:
        raise DepthExhausted(
            f"need {mask.bit_length()} coordinates, have {x.depth}"
        )
    return x.value & mask


def random_point(depth: int, rng: np.random.Generator) -> BinaryPoint:
    """Draw a point with i.i.d. fair coordinates (the reference measure)."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    nbytes = (depth + 7) // 8
    v = int.from_bytes(rng.bytes(nbytes), "little") & ((1 << depth) - 1)
    return BinaryPoint(v, depth)


def all_points(depth: int, pad: int = 0) -> list[BinaryPoint]:
    """Every prefix of the given depth, optionally zero-padded deeper.

    Padding appends guard zeros so that orbits can be computed without
    carry overflow; the padded point lies in the cylinder of its first
    `depth` coordinates, so any membership decided at cylinder scale is
    unchanged.
    """
    return [BinaryPoint(v, depth + pad) for v in range(1 << depth)]


@dataclass(frozen=True)
class Cylinder:
    """Set of sequences sharing a fixed prefix, anchored at coordinate 1."""

    word: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.word):
            raise ValueError("cylinder word must be 0/1")

    @property
    def length(self) -> int:
        return len(self.word)

    @property
    def measure(self) -> Fraction:
        """Exact fair-coin measure 2**(-length); length 0 is the whole space."""
        return Fraction(1, 2 ** self.length)

    @property
    def log_measure(self) -> float:
        return -self.length * LOG2

    def contains(self, x: BinaryPoint) -> bool:
        if x.depth < self.length:
            raise DepthExhausted(
                f"cylinder length {self.length} exceeds point depth {x.depth}"
            )
        mask = (1 << self.length) - 1
        return (x.value & mask) == self._value()

    def _value(self) -> int:
        v = 0
        for i, b in enumerate(self.word):
            v |= b << i
        return v

    def points(self, depth: int) -> list[BinaryPoint]:
        """All depth-`depth` prefixes lying in this cylinder."""
        if depth < self.length:
            raise DepthExhausted("enumeration depth shorter than the cylinder")
        base = self._value()
        step = 1 << self.length
        return [
            BinaryPoint(base + hi * step, depth)
            for hi in range(1 << (depth - self.length))
        ]


def s_count(omega: SymbolWord, k: int) -> int:
    """Number of shift symbols (value 1) among the first k-1 letters."""
    if k < 1:
        raise KZero(f"k must be >= 1, got {k}")
    if len(omega) < k - 1:
        raise WordTooShort(f"need {k - 1} symbols, have {len(omega)}")
    return sum(1 for s in omega.symbols[: k - 1] if s == 1)


def exact_bowen_ball(omega: SymbolWord, k: int, x: BinaryPoint, t: int) -> Cylinder:
    """Bowen ball of radius 2**(-t) as an explicit cylinder on x's prefix."""
    if t < 1:
        raise InvalidEpsilon(f"dyadic exponent t must be >= 1, got {t}")
    length = t + s_count(omega, k)
    if x.depth < length:
        raise DepthExhausted(f"need {length} coordinates, have {x.depth}")
    return Cylinder(x.bits[:length])


def exact_correlation_integral(t: int, k: int, power: int = 1) -> float:
    """Closed-form correlation integral c at radius 2**(-t), any order q.

    The Bowen-ball measure 2**(-(t + s)) does not depend on the center,
    so the q-dependence cancels and the word average reduces to the
    binomial mean of s over power*(k-1) fair letters:

        c = -(t + power*(k-1)/2) * log 2

    `power` is the composition depth of the acting generators (1 for the
    base pair, p for the p-fold power system whose stage j touches base
    letters up to p*(k-1)).
    """
    if t < 1 or k < 1 or power < 1:
        raise ValueError("t, k and power must all be >= 1")
    return -(t + power * (k - 1) / 2.0) * LOG2


def exact_corr_integral_series(
    t: int, k_max: int, q: float = 2.0, power: int = 1
) -> EntropySeries:
    """Rows (k, -c/k) of the exact correlation-integral series.

    Identical for every q (see exact_correlation_integral); q is kept in
    the metadata so emitted results stay self-describing.
    """
    rows = [
        (k, -exact_correlation_integral(t, k, power) / k)
        for k in range(1, k_max + 1)
    ]
    return EntropySeries(
        epsilon=2.0 ** (-t),
        rows=rows,
        kind="exact-corr-integral",
        q=q,
        meta={"t": t, "power": power, "exact": True},
    )


def exact_top_entropy_series(t: int, k_max: int, power: int = 1) -> EntropySeries:
    """Rows of the exact topological-entropy series at radius 2**(-t).

    A maximal separated set holds one point per Bowen cylinder, so
    log #E = (t + s) * log 2 and the word average is the same binomial
    closed form as the correlation series; the common limit is
    (log 2) / 2.
    """
    if t < 1 or k_max < 1:
        raise ValueError("t and k_max must be >= 1")
    rows = [
        (k, (t + power * (k - 1) / 2.0) * LOG2 / k) for k in range(1, k_max + 1)
    ]
    return EntropySeries(
        epsilon=2.0 ** (-t),
        rows=rows,
        kind="exact-top-entropy",
        meta={"t": t, "power": power, "exact": True},
    )


def exact_measure_entropy_series(k_max: int) -> EntropySeries:
    """Rows of the exact partition-entropy series for the two-cell
    partition by the first coordinate.

    The join of the first k pullbacks of that partition along a word
    consists of cylinders of length 1 + s, so the integrand is
    (1 + s) * log 2 and the word average gives (1 + (k-1)/2) * log 2,
    again with limit (log 2) / 2.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    rows = [(k, (1 + (k - 1) / 2.0) * LOG2 / k) for k in range(1, k_max + 1)]
    return EntropySeries(
        epsilon=0.0,
        rows=rows,
        kind="exact-measure-entropy",
        meta={"partition": "first-coordinate", "exact": True},
    )


@dataclass(frozen=True)
class ExactCylinderMeasure:
    """Closed-form stand-in for an empirical measure on this backend.

    Ball measures are evaluated exactly as 2**(-(L(eps) + s)), where
    L(eps) is the cylinder length resolved by eps; they do not depend on
    the center.  Sample points are still carried so the object is a
    drop-in replacement wherever an empirical measure is expected.
    """

    points: tuple[BinaryPoint, ...]

    @classmethod
    def draw(cls, depth: int, n_points: int, rng: np.random.Generator):
        return cls(tuple(random_point(depth, rng) for _ in range(n_points)))

    def _measure(self, omega: SymbolWord, k: int, eps: float) -> float:
        level = prefix_length_for(eps)
        return 2.0 ** (-(level + s_count(omega, k)))

    def ball_measure(self, sys, omega, k, center, eps) -> float:
        return self._measure(omega, k, eps)

    def ball_measures(self, sys, omega, k, eps) -> np.ndarray:
        return np.full(len(self.points), self._measure(omega, k, eps))
