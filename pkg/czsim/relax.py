"""
Halfspace enclosures of elementary operations and the lifted polytope of a tape.

Every factor z_j of a tape gets a set of rows Q_j in the joint space of all
factors that contains the graph of its defining operation over the factor
intervals Z:

- add, sub, affine: one equality row (exact)
- mul: the four McCormick inequalities; div as z_a = z_b * z_j
- exp, ln, pow: tangents at left/mid/right on the convex side, secant on the
  concave side
- sin, cos: convex underestimator built per 2*pi window, concave side by odd
  symmetry

A univariate row is kept as a (slope, intercept) pair before it is written
into the joint space: a lower row means z_j >= slope * z_a + intercept, an
upper row z_j <= slope * z_a + intercept.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from .errors import DomainError
from .factorgraph import FactorGraph, eval_interval
from .interval import HALF_PI, TWO_PI, Interval, IntervalVector
from .polytope import HPolytope
from .utils import MIN_SECANT_WIDTH, bisect

logger = logging.getLogger(__name__)

Line = Tuple[float, float]

THREE_HALF_PI = 1.5 * math.pi
THREE_PI = 3.0 * math.pi
SEVEN_HALF_PI = 3.5 * math.pi
# above this many periods the gap of a sine row is bounded without enumerating extrema
MAX_CERTIFIED_PERIODS = 10_000
BITANGENT_MAX_ITER = 100


@dataclass(frozen=True)
class LiftedRelaxation:
    """
    Attributes:
        polytope: the lifted relaxation in R^{n_z}
        Z: factor intervals from the natural interval extension
        defining_rows: for every add/sub/affine factor, the row of
            polytope.A that defines it
    """

    polytope: HPolytope
    Z: IntervalVector
    defining_rows: Dict[int, int] = field(default_factory=dict)


class _RowSet:
    """Sparse rows collected per factor and written out as one HPolytope"""

    def __init__(self, dim: int):
        self.dim = dim
        self.ineq: List[Tuple[Dict[int, float], float]] = []
        self.eq: List[Tuple[Dict[int, float], float]] = []

    @staticmethod
    def _coeffs(terms: Sequence[Tuple[int, float]]) -> Dict[int, float]:
        out: Dict[int, float] = {}
        for idx, value in terms:
            out[idx] = out.get(idx, 0.0) + value
        return out

    def le(self, terms: Sequence[Tuple[int, float]], rhs: float):
        self.ineq.append((self._coeffs(terms), float(rhs)))

    def equal(self, terms: Sequence[Tuple[int, float]], rhs: float) -> int:
        self.eq.append((self._coeffs(terms), float(rhs)))
        return len(self.eq) - 1

    def lower(self, j: int, a: int, line: Line):
        s, c = line
        self.le([(a, s), (j, -1.0)], -c)

    def upper(self, j: int, a: int, line: Line):
        s, c = line
        self.le([(j, 1.0), (a, -s)], c)

    @staticmethod
    def _dense(rows, dim: int) -> Tuple[np.ndarray, np.ndarray]:
        M = np.zeros((len(rows), dim))
        v = np.zeros(len(rows))
        for i, (coeffs, rhs) in enumerate(rows):
            for idx, value in coeffs.items():
                M[i, idx] = value
            v[i] = rhs
        return M, v

    def to_polytope(self) -> HPolytope:
        H, k = self._dense(self.ineq, self.dim)
        A, b = self._dense(self.eq, self.dim)
        return HPolytope.from_rows(self.dim, H, k, A, b)


# -- tangent and secant lines ---------------------------------------------------


def _tangent(fn: Callable[[float], float], dfn: Callable[[float], float], t: float) -> Line:
    slope = dfn(t)
    return slope, fn(t) - slope * t


def _secant(fn: Callable[[float], float], lo: float, hi: float, convex: bool) -> Line:
    """
    Chord through both endpoints. On intervals narrower than MIN_SECANT_WIDTH
    the constant endpoint bound is used instead: max for a convex function,
    where the chord is an upper bound, min for a concave one.
    """
    f_lo, f_hi = fn(lo), fn(hi)
    if hi - lo < MIN_SECANT_WIDTH:
        return 0.0, max(f_lo, f_hi) if convex else min(f_lo, f_hi)
    slope = (f_hi - f_lo) / (hi - lo)
    return slope, f_lo - slope * lo


def _three_tangents(fn, dfn, lo: float, hi: float) -> List[Line]:
    return [_tangent(fn, dfn, t) for t in (lo, 0.5 * (lo + hi), hi)]


def _mirror(lines: List[Line]) -> List[Line]:
    """
    Lower lines of an odd function on [-hi, -lo] turned into upper lines on
    [lo, hi]: f(x) = -f(-x) <= s x - c.
    """
    return [(s, -c) for s, c in lines]


# -- exp, ln, pow -----------------------------------------------------------------


def _exp_lines(lo: float, hi: float) -> Tuple[List[Line], List[Line]]:
    lower = _three_tangents(math.exp, math.exp, lo, hi)
    return lower, [_secant(math.exp, lo, hi, convex=True)]


def _ln_lines(lo: float, hi: float) -> Tuple[List[Line], List[Line]]:
    if lo <= 0.0:
        raise DomainError(f"ln needs a positive interval, got [{lo}, {hi}]")
    upper = _three_tangents(math.log, lambda t: 1.0 / t, lo, hi)
    return [_secant(math.log, lo, hi, convex=False)], upper


def _pow_fns(q: int):
    return (lambda t: t**q), (lambda t: q * t ** (q - 1))


def _odd_pow_convex_side(lo: float, hi: float, q: int) -> List[Line]:
    """
    Lower lines of t**q, q odd, on [lo, hi] with lo < 0 < hi: the line from
    (lo, lo**q) tangent to the curve at some t in (0, hi], then tangents at
    the midpoint of [t, hi] and at hi. Without such a t it is the chord.
    """
    fn, dfn = _pow_fns(q)

    def h(t: float) -> float:
        return q * t ** (q - 1) * (t - lo) - (t**q - lo**q)

    if h(hi) <= 0.0:
        return [_secant(fn, lo, hi, convex=False)]
    t_star = bisect(h, 0.0, hi)
    s, c = _tangent(fn, dfn, t_star)
    # the bisected tangency point may leave the line slightly above (lo, lo**q)
    c = min(c, fn(lo) - s * lo)
    return [(s, c), _tangent(fn, dfn, 0.5 * (t_star + hi)), _tangent(fn, dfn, hi)]


def _pow_lines(lo: float, hi: float, q: int) -> Tuple[List[Line], List[Line]]:
    fn, dfn = _pow_fns(q)
    if q % 2 == 0 or lo >= 0.0:
        return _three_tangents(fn, dfn, lo, hi), [_secant(fn, lo, hi, convex=True)]
    if hi <= 0.0:
        return [_secant(fn, lo, hi, convex=False)], _three_tangents(fn, dfn, lo, hi)
    lower = _odd_pow_convex_side(lo, hi, q)
    upper = _mirror(_odd_pow_convex_side(-hi, -lo, q))
    return lower, upper


# -- sine -------------------------------------------------------------------------


def _tangent_left(p: float) -> float:
    """Point t in [3pi/2, 2pi] whose sine tangent passes through (p, sin p)"""
    sp = math.sin(p)
    return bisect(lambda t: sp - math.sin(t) - (p - t) * math.cos(t), THREE_HALF_PI, 2.0 * math.pi)


def _tangent_right(p: float) -> float:
    """Point t in [3pi, 7pi/2] whose sine tangent passes through (p, sin p)"""
    sp = math.sin(p)
    return bisect(lambda t: math.sin(t) - sp - (t - p) * math.cos(t), THREE_PI, SEVEN_HALF_PI)


def _sin_window_lower(a: float, b: float) -> List[Line]:
    """
    Convex underestimator lines of sin on a window [a, b] inside
    [3pi/2, 7pi/2], where sin is convex, then concave, then convex again.
    """
    def tangents(lo: float, hi: float) -> List[Line]:
        return _three_tangents(math.sin, math.cos, lo, hi)

    if b <= 2.0 * math.pi or a >= THREE_PI:
        return tangents(a, b)
    if a >= 2.0 * math.pi and b <= THREE_PI:
        return [_secant(math.sin, a, b, convex=False)]

    r1, r2 = a, b
    for _ in range(BITANGENT_MAX_ITER):
        new_r1 = max(a, _tangent_left(r2)) if a < 2.0 * math.pi else a
        new_r2 = min(b, _tangent_right(new_r1)) if b > THREE_PI else b
        done = abs(new_r1 - r1) <= 1e-13 and abs(new_r2 - r2) <= 1e-13
        r1, r2 = new_r1, new_r2
        if done:
            break

    lines: List[Line] = []
    if r1 > a:
        lines += tangents(a, r1)
    if r2 - r1 >= MIN_SECANT_WIDTH:
        lines.append(_secant(math.sin, r1, r2, convex=False))
    if b > r2:
        lines += tangents(r2, b)
    if not lines:
        lines.append(_tangent(math.sin, math.cos, r1))
    return lines


def _window_index(z: float) -> float:
    return z / TWO_PI + 0.25


def _sin_lower(lo: float, hi: float) -> List[Line]:
    """Lower lines of sin on [lo, hi], before certification"""
    p_lo = math.floor(_window_index(lo))
    v_hi = _window_index(hi)
    p_hi = int(v_hi) - 1 if float(v_hi).is_integer() else math.floor(v_hi)
    gamma = 2.0 * (p_lo - 1) * math.pi

    def unshift(lines: List[Line], shift: float) -> List[Line]:
        return [(s, c - s * shift) for s, c in lines]

    if p_hi == p_lo:
        return unshift(_sin_window_lower(lo - gamma, hi - gamma), gamma)
    psi = 2.0 * (p_hi - 1) * math.pi
    lines = unshift(_sin_window_lower(lo - gamma, SEVEN_HALF_PI), gamma)
    lines += unshift(_sin_window_lower(THREE_HALF_PI, hi - psi), psi)
    lines.append((0.0, -1.0))
    return lines


def _gap_range(lo: float, hi: float, line: Line, phase: float) -> Tuple[float, float]:
    """
    (min, max) of sin(z + phase) - (s z + c) over [lo, hi]. Extrema sit at the
    endpoints or where cos(z + phase) = s.
    """
    s, c = line
    ends = np.array([lo, hi])
    if (hi - lo) / TWO_PI > MAX_CERTIFIED_PERIODS:
        values = s * ends + c
        return -1.0 - float(values.max()), 1.0 - float(values.min())
    base = math.acos(min(1.0, max(-1.0, s)))
    k0 = math.floor((lo + phase - math.pi) / TWO_PI)
    k1 = math.ceil((hi + phase + math.pi) / TWO_PI)
    ks = np.arange(k0, k1 + 1) * TWO_PI
    crit = np.concatenate([base + ks, -base + ks]) - phase
    z = np.concatenate([ends, crit[(crit > lo) & (crit < hi)]])
    gap = np.sin(z + phase) - (s * z + c)
    return float(gap.min()), float(gap.max())


def _certify(lo: float, hi: float, lower: List[Line], upper: List[Line], phase: float):
    """Move each line outward by any amount it cuts into the graph of sin(z + phase)"""
    lower = [(s, c + min(0.0, _gap_range(lo, hi, (s, c), phase)[0])) for s, c in lower]
    upper = [(s, c + max(0.0, _gap_range(lo, hi, (s, c), phase)[1])) for s, c in upper]
    return lower, upper


def _sin_lines(lo: float, hi: float) -> Tuple[List[Line], List[Line]]:
    lower = _sin_lower(lo, hi)
    upper = _mirror(_sin_lower(-hi, -lo))
    return _certify(lo, hi, lower, upper, 0.0)


def _cos_lines(lo: float, hi: float) -> Tuple[List[Line], List[Line]]:
    # cos z = sin(z + pi/2): lines in y = z + pi/2 become s z + (c + s pi/2)
    y_lo, y_hi = lo + HALF_PI, hi + HALF_PI
    lower = [(s, c + s * HALF_PI) for s, c in _sin_lower(y_lo, y_hi)]
    upper = [(s, c + s * HALF_PI) for s, c in _mirror(_sin_lower(-y_hi, -y_lo))]
    return _certify(lo, hi, lower, upper, HALF_PI)


_REAL_FNS = {
    "exp": math.exp,
    "ln": math.log,
    "sin": math.sin,
    "cos": math.cos,
}


def _write_univariate(rows: _RowSet, j: int, a: int, Za: Interval, lines_fn, value_fn):
    if Za.rad == 0.0:
        x = Za.lo
        rows.equal([(a, 1.0)], x)
        rows.equal([(j, 1.0)], value_fn(x))
        return
    lower, upper = lines_fn(Za.lo, Za.hi)
    for line in lower:
        rows.lower(j, a, line)
    for line in upper:
        rows.upper(j, a, line)


# -- public operations --------------------------------------------------------------


def relax_arith(j: int, kind: str, a: int, b: int, Z: IntervalVector, coefficients: Line = (1.0, 0.0)) -> HPolytope:
    """
    Rows enclosing z_j = z_a (kind) z_b, or z_j = s * z_a + r for the affine
    kind with coefficients (s, r).

    Raises:
        DomainError: div with 0 in Z_b
    """
    rows = _RowSet(len(Z))
    _arith_rows(rows, j, kind, a, b, Z, coefficients)
    return rows.to_polytope()


def _mccormick(rows: _RowSet, x: int, y: int, w: int, X: Interval, Y: Interval):
    """The four inequalities for w = x * y over X x Y"""
    rows.le([(x, Y.lo), (y, X.lo), (w, -1.0)], X.lo * Y.lo)
    rows.le([(x, Y.hi), (y, X.hi), (w, -1.0)], X.hi * Y.hi)
    rows.le([(x, -Y.lo), (y, -X.hi), (w, 1.0)], -X.hi * Y.lo)
    rows.le([(x, -Y.hi), (y, -X.lo), (w, 1.0)], -X.lo * Y.hi)


def _arith_rows(rows: _RowSet, j, kind, a, b, Z: IntervalVector, coefficients: Line = (1.0, 0.0)):
    if kind == "add":
        return rows.equal([(j, 1.0), (a, -1.0), (b, -1.0)], 0.0)
    if kind == "sub":
        return rows.equal([(j, 1.0), (a, -1.0), (b, 1.0)], 0.0)
    if kind == "affine":
        s, r = coefficients
        return rows.equal([(j, 1.0), (a, -s)], r)
    if kind == "mul":
        _mccormick(rows, a, b, j, Z[a], Z[b])
        return None
    if kind == "div":
        Zb = Z[b]
        if Zb.lo <= 0.0 <= Zb.hi:
            raise DomainError(f"factor {j}: division by an interval containing 0, {Zb}")
        _mccormick(rows, b, j, a, Zb, Z[j])
        return None
    raise ValueError(f"'{kind}' is not an arithmetic factor kind")


def relax_univariate(j: int, fn: str, a: int, Z: IntervalVector, q: int = None) -> HPolytope:
    """
    Rows enclosing z_j = fn(z_a) for fn in exp, ln, pow (with exponent q).

    Raises:
        DomainError: ln on an interval that is not positive
    """
    rows = _RowSet(len(Z))
    _univariate_rows(rows, j, fn, a, Z[a], q)
    return rows.to_polytope()


def _univariate_rows(rows: _RowSet, j: int, fn: str, a: int, Za: Interval, q: int = None):
    if fn == "exp":
        _write_univariate(rows, j, a, Za, _exp_lines, math.exp)
    elif fn == "ln":
        if Za.lo <= 0.0:
            raise DomainError(f"factor {j}: ln needs a positive interval, got {Za}")
        _write_univariate(rows, j, a, Za, _ln_lines, math.log)
    elif fn == "pow":
        assert q is not None and q >= 2, "pow needs an integer exponent >= 2"
        _write_univariate(rows, j, a, Za, lambda lo, hi: _pow_lines(lo, hi, q), lambda t: t**q)
    elif fn == "sin":
        _write_univariate(rows, j, a, Za, _sin_lines, math.sin)
    elif fn == "cos":
        _write_univariate(rows, j, a, Za, _cos_lines, math.cos)
    else:
        raise ValueError(f"'{fn}' is not a univariate factor kind")


def relax_sin(j: int, a: int, Z: IntervalVector) -> HPolytope:
    """Rows enclosing z_j = sin(z_a) over Z_a. Defined for every interval."""
    rows = _RowSet(len(Z))
    _univariate_rows(rows, j, "sin", a, Z[a])
    return rows.to_polytope()


def relax_cos(j: int, a: int, Z: IntervalVector) -> HPolytope:
    """
    Rows enclosing z_j = cos(z_a): the sine rows for z_a + pi/2 with the shift
    folded into their intercepts, so no intermediate factor is introduced.
    """
    rows = _RowSet(len(Z))
    _univariate_rows(rows, j, "cos", a, Z[a])
    return rows.to_polytope()


def build_lifted(graph: FactorGraph, S: IntervalVector, params: Sequence[float] = ()) -> LiftedRelaxation:
    """
    Intersection of the enclosures of every non-input factor of `graph` over
    the input box S.

    Raises:
        DomainError: from the interval extension or a relaxation
    """
    Z = eval_interval(graph, S, params)
    rows = _RowSet(graph.n_z)
    defining_rows: Dict[int, int] = {}
    for j in range(graph.n_s, graph.n_z):
        node = graph.nodes[j]
        if node.kind in ("add", "sub", "mul", "div"):
            row = _arith_rows(rows, j, node.kind, node.a, node.b, Z)
        elif node.kind == "affine":
            row = _arith_rows(rows, j, "affine", node.a, None, Z, node.linear_coefficients(params))
        else:
            row = None
            _univariate_rows(rows, j, node.kind, node.a, Z[node.a], node.q)
        if row is not None:
            defining_rows[j] = row
    polytope = rows.to_polytope()
    logger.debug("lifted relaxation: n_z=%d n_h=%d n_cp=%d", graph.n_z, polytope.n_h, polytope.n_cp)
    return LiftedRelaxation(polytope, Z, defining_rows)
