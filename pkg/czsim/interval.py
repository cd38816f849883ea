"""
Closed-interval arithmetic over scalars and boxes.

All extensions here are exact image hulls in double precision (no directed
rounding). Downstream set membership uses CONTAINMENT_TOL to absorb round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, Tuple, Union

import numpy as np

from .errors import DomainError, ShapeError

Number = Union[int, float]

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi

ARITH_OPS = ("add", "sub", "mul", "div")
ELEM_FNS = ("exp", "ln", "sin", "cos", "pow")


@dataclass(frozen=True)
class Interval:
    """
    A closed interval [lo, hi] with lo <= hi.

    Supports +, -, *, / with other intervals and with real numbers.
    """

    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo <= self.hi):
            raise DomainError(f"Interval requires lo <= hi, got [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, value: float) -> Interval:
        return cls(float(value), float(value))

    @property
    def mid(self) -> float:
        return 0.5 * (self.hi + self.lo)

    @property
    def rad(self) -> float:
        return 0.5 * (self.hi - self.lo)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    def affine(self, scale: float, offset: float = 0.0) -> Interval:
        """Image of scale * x + offset"""
        a = scale * self.lo + offset
        b = scale * self.hi + offset
        return Interval(min(a, b), max(a, b))

    def __add__(self, other) -> Interval:
        if isinstance(other, Interval):
            return Interval(self.lo + other.lo, self.hi + other.hi)
        return Interval(self.lo + other, self.hi + other)

    __radd__ = __add__

    def __neg__(self) -> Interval:
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other) -> Interval:
        if isinstance(other, Interval):
            return Interval(self.lo - other.hi, self.hi - other.lo)
        return Interval(self.lo - other, self.hi - other)

    def __rsub__(self, other) -> Interval:
        return Interval(other - self.hi, other - self.lo)

    def __mul__(self, other) -> Interval:
        if isinstance(other, Interval):
            p = (
                self.lo * other.lo,
                self.lo * other.hi,
                self.hi * other.lo,
                self.hi * other.hi,
            )
            return Interval(min(p), max(p))
        return self.affine(other)

    __rmul__ = __mul__

    def __truediv__(self, other) -> Interval:
        if isinstance(other, Interval):
            if other.lo <= 0.0 <= other.hi:
                raise DomainError(f"division by an interval containing 0: {other}")
            q = (
                self.lo / other.lo,
                self.lo / other.hi,
                self.hi / other.lo,
                self.hi / other.hi,
            )
            return Interval(min(q), max(q))
        if other == 0:
            raise DomainError("division of an interval by 0")
        a, b = self.lo / other, self.hi / other
        return Interval(min(a, b), max(a, b))

    def __rtruediv__(self, other) -> Interval:
        return Interval.point(other) / self

    def __repr__(self):
        return f"[{self.lo!r}, {self.hi!r}]"


def _contains_critical(lo: float, hi: float, phase: float) -> bool:
    """True if phase + 2*pi*k lies in [lo, hi] for some integer k"""
    k = math.ceil((lo - phase) / TWO_PI)
    return phase + TWO_PI * k <= hi


def _sin_hull(lo: float, hi: float) -> Interval:
    if hi - lo >= TWO_PI:
        return Interval(-1.0, 1.0)
    a, b = math.sin(lo), math.sin(hi)
    top = 1.0 if _contains_critical(lo, hi, HALF_PI) else max(a, b)
    bottom = -1.0 if _contains_critical(lo, hi, -HALF_PI) else min(a, b)
    return Interval(bottom, top)


def _cos_hull(lo: float, hi: float) -> Interval:
    if hi - lo >= TWO_PI:
        return Interval(-1.0, 1.0)
    a, b = math.cos(lo), math.cos(hi)
    top = 1.0 if _contains_critical(lo, hi, 0.0) else max(a, b)
    bottom = -1.0 if _contains_critical(lo, hi, math.pi) else min(a, b)
    return Interval(bottom, top)


def _pow_hull(lo: float, hi: float, q: int) -> Interval:
    a, b = lo**q, hi**q
    if q % 2 == 1:
        return Interval(a, b)
    if lo >= 0.0:
        return Interval(a, b)
    if hi <= 0.0:
        return Interval(b, a)
    return Interval(0.0, max(a, b))


def iv_arith(op: str, X: Interval, W: Interval) -> Interval:
    """
    Exact image hull of X (op) W for op in add, sub, mul, div.

    Raises:
        DomainError: division by an interval that contains 0
    """
    if op == "add":
        return X + W
    if op == "sub":
        return X - W
    if op == "mul":
        return X * W
    if op == "div":
        return X / W
    raise ValueError(f"unknown interval operation '{op}'")


def iv_elem(fn: str, X: Interval, q: int = None) -> Interval:
    """
    Exact image hull of an elementary function over X.

    Args:
        fn: one of exp, ln, sin, cos, pow
        X: the argument interval
        q: integer exponent, required for pow

    Raises:
        DomainError: ln of an interval with lo <= 0
    """
    if fn == "exp":
        return Interval(math.exp(X.lo), math.exp(X.hi))
    if fn == "ln":
        if X.lo <= 0.0:
            raise DomainError(f"ln requires a positive interval, got {X}")
        return Interval(math.log(X.lo), math.log(X.hi))
    if fn == "sin":
        return _sin_hull(X.lo, X.hi)
    if fn == "cos":
        return _cos_hull(X.lo, X.hi)
    if fn == "pow":
        assert q is not None and int(q) == q and q >= 1, "pow needs an integer q >= 1"
        return _pow_hull(X.lo, X.hi, int(q))
    raise ValueError(f"unknown elementary function '{fn}'")


def iv_midrad(X: Interval) -> Tuple[float, float]:
    return X.mid, X.rad


class IntervalVector:
    """
    An axis-aligned box: an ordered list of intervals stored as two arrays.

    Indexing with an int returns an Interval, with a slice or index list an
    IntervalVector.
    """

    __slots__ = ("lo", "hi")

    def __init__(self, lo: Sequence[float], hi: Sequence[float]):
        lo = np.array(lo, dtype=float).reshape(-1)
        hi = np.array(hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise ShapeError(f"endpoint lengths differ: {lo.shape} vs {hi.shape}")
        if not np.all(lo <= hi):
            raise DomainError("IntervalVector requires lo <= hi componentwise")
        self.lo = lo
        self.hi = hi

    @classmethod
    def from_intervals(cls, intervals: Iterable[Interval]) -> IntervalVector:
        ivs = list(intervals)
        return cls([i.lo for i in ivs], [i.hi for i in ivs])

    @classmethod
    def from_midrad(cls, mid: Sequence[float], rad: Sequence[float]) -> IntervalVector:
        mid = np.asarray(mid, dtype=float)
        rad = np.asarray(rad, dtype=float)
        return cls(mid - rad, mid + rad)

    @classmethod
    def empty(cls) -> IntervalVector:
        return cls(np.zeros(0), np.zeros(0))

    def __len__(self) -> int:
        return self.lo.shape[0]

    def __getitem__(self, idx):
        if isinstance(idx, (int, np.integer)):
            return Interval(float(self.lo[idx]), float(self.hi[idx]))
        return IntervalVector(self.lo[idx], self.hi[idx])

    def __iter__(self) -> Iterator[Interval]:
        for i in range(len(self)):
            yield self[i]

    def __repr__(self):
        return "IntervalVector(" + ", ".join(repr(i) for i in self) + ")"

    @property
    def mid(self) -> np.ndarray:
        return 0.5 * (self.hi + self.lo)

    @property
    def rad(self) -> np.ndarray:
        return 0.5 * (self.hi - self.lo)

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    def concat(self, *others: IntervalVector) -> IntervalVector:
        return IntervalVector(
            np.concatenate([self.lo] + [o.lo for o in others]),
            np.concatenate([self.hi] + [o.hi for o in others]),
        )

    def inflate(self, margin: float) -> IntervalVector:
        """Widen every side by margin * (1 + |endpoint|)"""
        return IntervalVector(
            self.lo - margin * (1.0 + np.abs(self.lo)),
            self.hi + margin * (1.0 + np.abs(self.hi)),
        )

    def contains(self, x: Sequence[float], tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != self.lo.shape:
            raise ShapeError(f"point has shape {x.shape}, box has {self.lo.shape}")
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def is_subset(self, other: IntervalVector, tol: float = 0.0) -> bool:
        return bool(np.all(self.lo >= other.lo - tol) and np.all(self.hi <= other.hi + tol))

    def volume_root(self) -> float:
        """n-th root of the box volume, n = number of components"""
        n = len(self)
        if n == 0:
            return 0.0
        w = self.width
        if np.any(w <= 0.0):
            return 0.0
        return float(np.exp(np.mean(np.log(w))))
