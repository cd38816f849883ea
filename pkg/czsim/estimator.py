"""
Set-based state estimation with constrained zonotopes.

For a system

    x_k = f(x_{k-1}, w_{k-1}, u_{k-1}),    y_k = g(x_k, v_k)

with w in W and v in V, every step encloses the states consistent with the
previous enclosure and the new measurement. The composite l(x, w, v) =
g(f(x, w), v) is relaxed once over the hull of Xprev x W x V. The enclosure is

    E_f ((Xprev x W x V x Z~) intersected with (P_l and {E_l z = y}))

where Z~ bounds the intermediate factors. Factors defined by linear
equalities (add, sub, affine) can be substituted out of the lifted system
before the enclosure is formed. That gives the same set with n_e fewer
generators and constraints.

When g is affine in (x, v) the measurement is applied to the predicted set
directly with a generalized intersection.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .conzono import ConstrainedZonotope, cz_cartesian, cz_genintersect, cz_hull, cz_intersect_hpoly, cz_linimg
from .errors import ShapeError
from .factorgraph import FactorGraph, linear_map, record, record_composite
from .interval import IntervalVector
from .polytope import HPolytope, poly_intersect
from .reduction import ReductionLimits, cz_reduce
from .relax import build_lifted
from .utils import forward_substitution, selector

logger = logging.getLogger(__name__)

HULL_MARGIN = 1e-8

PATH_LIFTED = "lifted"
PATH_LINEAR_OUTPUT = "linear_output"


@dataclass(frozen=True)
class SystemModel:
    """
    Recorded dynamics f (inputs x, w; params u), measurement g (inputs x, v)
    and their composite l (inputs x, w, v; params u).
    """

    f_graph: FactorGraph
    g_graph: FactorGraph
    ell_graph: FactorGraph
    n_x: int
    n_w: int
    n_v: int
    n_u: int
    n_y: int

    @classmethod
    def from_functions(
        cls,
        f: Callable,
        g: Callable,
        n_x: int,
        n_w: int,
        n_v: int,
        n_u: int = 0,
    ) -> SystemModel:
        """
        Record f(x, w, u) and g(x, v). Each receives lists of handles and
        returns a sequence of values.

        Raises:
            ShapeError: f does not return n_x values
        """

        def f_tape(s, p=()):
            return f(s[:n_x], s[n_x:], list(p))

        def g_tape(s):
            return g(s[:n_x], s[n_x:])

        f_graph = record(f_tape, n_x + n_w, n_u)
        if f_graph.n_out != n_x:
            raise ShapeError(f"f returned {f_graph.n_out} values for a state of size {n_x}")
        g_graph = record(g_tape, n_x + n_v)
        ell_graph = record_composite(f_graph, g_graph, n_v)
        return cls(f_graph, g_graph, ell_graph, n_x, n_w, n_v, n_u, g_graph.n_out)

    @property
    def E_f(self) -> np.ndarray:
        return self.ell_graph.selector(self.ell_graph.state_rows)

    @property
    def E_ell(self) -> np.ndarray:
        return self.ell_graph.selector()

    @property
    def E_g(self) -> np.ndarray:
        return self.g_graph.selector()

    @property
    def E_x(self) -> np.ndarray:
        return selector(range(self.n_x), self.g_graph.n_z)

    @cached_property
    def output_linear(self) -> Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """(C, D_v, d) with g(x, v) = C x + D_v v + d, or None if g is not affine"""
        lin = linear_map(self.g_graph)
        if lin is None:
            return None
        M, d = lin
        return M[:, : self.n_x], M[:, self.n_x :], d


@dataclass(frozen=True)
class EliminationPlan:
    """
    Partition of a lifted polytope {H z <= k, A z = b} and selector E into the
    eliminated factors z_e and the retained z_r. A_ee holds the defining rows
    of the eliminated factors and is unit lower triangular.

    Derived: z_e = m - M z_r with M = A_ee^-1 A_er and m = A_ee^-1 b_e, the
    reduced polytope over z_r and E z = G_f z_r + c_f.
    """

    eliminate: Tuple[int, ...]
    retain: Tuple[int, ...]
    A_ee: np.ndarray
    A_er: np.ndarray
    A_re: np.ndarray
    A_rr: np.ndarray
    b_e: np.ndarray
    b_r: np.ndarray
    k: np.ndarray
    H_e: np.ndarray
    H_r: np.ndarray
    E_e: np.ndarray
    E_r: np.ndarray
    M: np.ndarray = field(repr=False)
    m: np.ndarray = field(repr=False)

    @property
    def n_e(self) -> int:
        return len(self.eliminate)

    @property
    def polytope(self) -> HPolytope:
        H = self.H_r - self.H_e @ self.M
        k_red = self.k - self.H_e @ self.m
        A = self.A_rr - self.A_re @ self.M
        b = self.b_r - self.A_re @ self.m
        return HPolytope.from_rows(len(self.retain), H, k_red, A, b)

    @property
    def G_f(self) -> np.ndarray:
        return self.E_r - self.E_e @ self.M

    @property
    def c_f(self) -> np.ndarray:
        return self.E_e @ self.m

    def back_substitute(self, z_r) -> np.ndarray:
        """Full factor vector from the retained factors"""
        z_r = np.asarray(z_r, dtype=float)
        z = np.empty(len(self.eliminate) + len(self.retain))
        z[list(self.retain)] = z_r
        z[list(self.eliminate)] = self.m - self.M @ z_r
        return z


def build_elimination(P: HPolytope, E: np.ndarray, eliminate: Sequence[int], defining_rows: dict) -> EliminationPlan:
    """
    Plan the substitution of the factors in `eliminate` out of P and E.

    Args:
        P: the lifted polytope (measurement rows included)
        E: output selector over the factors
        eliminate: factors defined by a linear equality
        defining_rows: row of P.A defining each of those factors
    """
    e = np.array(sorted(eliminate), dtype=int)
    chosen = set(e.tolist())
    r = np.array([i for i in range(P.dim) if i not in chosen], dtype=int)
    e_rows = np.array([defining_rows[j] for j in e], dtype=int)
    taken = set(e_rows.tolist())
    r_rows = np.array([i for i in range(P.n_cp) if i not in taken], dtype=int)
    E = np.asarray(E, dtype=float)

    A_ee = P.A[np.ix_(e_rows, e)]
    A_er = P.A[np.ix_(e_rows, r)]
    b_e = P.b[e_rows]
    M = forward_substitution(A_ee, A_er)
    m = forward_substitution(A_ee, b_e)
    return EliminationPlan(
        eliminate=tuple(e.tolist()),
        retain=tuple(r.tolist()),
        A_ee=A_ee,
        A_er=A_er,
        A_re=P.A[np.ix_(r_rows, e)],
        A_rr=P.A[np.ix_(r_rows, r)],
        b_e=b_e,
        b_r=P.b[r_rows],
        k=P.k,
        H_e=P.H[:, e],
        H_r=P.H[:, r],
        E_e=E[:, e],
        E_r=E[:, r],
        M=M,
        m=m,
    )


def _trailing_box(Z: IntervalVector) -> ConstrainedZonotope:
    # one generator per factor, zero-width ones included, so sizes follow the counting rule
    return ConstrainedZonotope(np.diag(Z.rad), Z.mid)


def lifted_enclosure(
    graph: FactorGraph,
    inputs: Sequence[ConstrainedZonotope],
    hulls: Sequence[IntervalVector],
    params: Sequence[float],
    out_rows: Sequence[int],
    y: Optional[Sequence[float]] = None,
    eliminate: bool = True,
    hull_margin: float = HULL_MARGIN,
) -> ConstrainedZonotope:
    """
    E_out((inputs x Z~) intersected with (P and {E z = y})) for the tape
    `graph` relaxed over the product of `hulls`.

    Raises:
        DomainError: from the interval extension
        ShapeError: y does not match the graph outputs
    """
    S = hulls[0].concat(*hulls[1:]).inflate(hull_margin)
    lifted = build_lifted(graph, S, params)
    P = lifted.polytope
    if y is not None:
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.shape[0] != graph.n_out:
            raise ShapeError(f"measurement has {y.shape[0]} entries, expected {graph.n_out}")
        P = poly_intersect(P, HPolytope.from_rows(graph.n_z, A=graph.selector(), b=y))
    E_out = graph.selector(out_rows)

    if not eliminate:
        X = cz_cartesian(*inputs, _trailing_box(lifted.Z[graph.n_s :]))
        return cz_linimg(E_out, cz_intersect_hpoly(X, P))

    plan = build_elimination(P, E_out, sorted(lifted.defining_rows), lifted.defining_rows)
    kept = [j for j in plan.retain if j >= graph.n_s]
    X = cz_cartesian(*inputs, _trailing_box(lifted.Z[kept]))
    return cz_linimg(plan.G_f, cz_intersect_hpoly(X, plan.polytope)) + plan.c_f


def _hull(Z: ConstrainedZonotope, hull: Optional[IntervalVector]) -> IntervalVector:
    return cz_hull(Z) if hull is None else hull


def update_initial(
    model: SystemModel,
    X0: ConstrainedZonotope,
    V: ConstrainedZonotope,
    y0: Sequence[float],
    eliminate: bool = True,
    hull_margin: float = HULL_MARGIN,
) -> ConstrainedZonotope:
    """Refine X0 with the first measurement using the tape of g"""
    return lifted_enclosure(
        model.g_graph,
        [X0, V],
        [cz_hull(X0), cz_hull(V)],
        (),
        range(model.n_x),
        y=y0,
        eliminate=eliminate,
        hull_margin=hull_margin,
    )


def predict(
    model: SystemModel,
    Xprev: ConstrainedZonotope,
    W: ConstrainedZonotope,
    u: Sequence[float] = (),
    eliminate: bool = True,
    hull_margin: float = HULL_MARGIN,
    hulls: Optional[Tuple[IntervalVector, IntervalVector]] = None,
) -> ConstrainedZonotope:
    """Enclosure of f(Xprev, W, u)"""
    x_hull, w_hull = hulls or (None, None)
    return lifted_enclosure(
        model.f_graph,
        [Xprev, W],
        [_hull(Xprev, x_hull), _hull(W, w_hull)],
        u,
        model.f_graph.output_rows,
        eliminate=eliminate,
        hull_margin=hull_margin,
    )


def _predict_update(model, Xprev, W, V, u, y, eliminate, hull_margin, hulls):
    x_hull, w_hull, v_hull = hulls or (None, None, None)
    return lifted_enclosure(
        model.ell_graph,
        [Xprev, W, V],
        [_hull(Xprev, x_hull), _hull(W, w_hull), _hull(V, v_hull)],
        u,
        model.ell_graph.state_rows,
        y=y,
        eliminate=eliminate,
        hull_margin=hull_margin,
    )


def predict_update_full(
    model: SystemModel,
    Xprev: ConstrainedZonotope,
    W: ConstrainedZonotope,
    V: ConstrainedZonotope,
    u: Sequence[float],
    y: Sequence[float],
    hull_margin: float = HULL_MARGIN,
    hulls: Optional[Tuple[IntervalVector, IntervalVector, IntervalVector]] = None,
) -> ConstrainedZonotope:
    """Combined prediction and measurement update over every factor of the composite"""
    return _predict_update(model, Xprev, W, V, u, y, False, hull_margin, hulls)


def predict_update_reduced(
    model: SystemModel,
    Xprev: ConstrainedZonotope,
    W: ConstrainedZonotope,
    V: ConstrainedZonotope,
    u: Sequence[float],
    y: Sequence[float],
    hull_margin: float = HULL_MARGIN,
    hulls: Optional[Tuple[IntervalVector, IntervalVector, IntervalVector]] = None,
) -> ConstrainedZonotope:
    """
    Same set as `predict_update_full` with the add/sub/affine factors
    substituted out: n_e fewer generators and constraints.
    """
    return _predict_update(model, Xprev, W, V, u, y, True, hull_margin, hulls)


def update_linear_output(
    model: SystemModel, Xbar: ConstrainedZonotope, V: ConstrainedZonotope, y: Sequence[float]
) -> ConstrainedZonotope:
    """
    {x in Xbar : C x in (y - d) + (-D_v) V} for an affine measurement
    g(x, v) = C x + D_v v + d.
    """
    linear = model.output_linear
    assert linear is not None, "update_linear_output needs an affine measurement function"
    C, D_v, d = linear
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != model.n_y:
        raise ShapeError(f"measurement has {y.shape[0]} entries, expected {model.n_y}")
    Y = cz_linimg(-D_v, V) + (y - d)
    return cz_genintersect(Xbar, C, Y)


@dataclass(frozen=True)
class StepDiagnostics:
    """
    Attributes:
        n_g, n_c: size of the enclosure after reduction
        n_g_pre, n_c_pre: size before reduction
        hull: interval hull of the reduced enclosure
        path: 'lifted' or 'linear_output'
        step_time: wall-clock seconds
    """

    n_g: int
    n_c: int
    n_g_pre: int
    n_c_pre: int
    hull: IntervalVector
    path: str
    step_time: float


@dataclass(frozen=True)
class EstimatorState:
    k: int
    Xhat: ConstrainedZonotope
    diagnostics: StepDiagnostics


def _finish(k: int, X: ConstrainedZonotope, limits: ReductionLimits, path: str, started: float) -> EstimatorState:
    n_g_pre, n_c_pre = X.n_g, X.n_c
    X = cz_reduce(X, limits.max_gens, limits.max_cons)
    hull = cz_hull(X)
    diagnostics = StepDiagnostics(X.n_g, X.n_c, n_g_pre, n_c_pre, hull, path, time.perf_counter() - started)
    logger.debug(
        "k=%d path=%s n_g=%d->%d n_c=%d->%d",
        k,
        path,
        n_g_pre,
        X.n_g,
        n_c_pre,
        X.n_c,
    )
    return EstimatorState(k, X, diagnostics)


def estimate_step(
    state: EstimatorState,
    model: SystemModel,
    W: ConstrainedZonotope,
    V: ConstrainedZonotope,
    u: Sequence[float],
    y: Sequence[float],
    limits: ReductionLimits = ReductionLimits(),
    eliminate: bool = True,
    hull_margin: float = HULL_MARGIN,
    noise_hulls: Optional[Tuple[IntervalVector, IntervalVector]] = None,
) -> EstimatorState:
    """
    One step of the recursion: predict and update, then reduce to `limits`.

    Raises:
        EmptySetError: the new enclosure is empty (measurement inconsistent
            with the model)
    """
    started = time.perf_counter()
    w_hull, v_hull = noise_hulls or (cz_hull(W), cz_hull(V))
    x_hull = state.diagnostics.hull
    if model.output_linear is not None:
        Xbar = predict(model, state.Xhat, W, u, eliminate, hull_margin, hulls=(x_hull, w_hull))
        X = update_linear_output(model, Xbar, V, y)
        path = PATH_LINEAR_OUTPUT
    else:
        X = _predict_update(model, state.Xhat, W, V, u, y, eliminate, hull_margin, (x_hull, w_hull, v_hull))
        path = PATH_LIFTED
    return _finish(state.k + 1, X, limits, path, started)


class Estimator:
    """
    Runs the recursion for one system with fixed noise bounds.

    Example:
        >>> est = Estimator(model, W, V, ReductionLimits(20, 8))
        >>> state = est.initialize(y0, X0)
        >>> state = est.step(u0, y1)
    """

    def __init__(
        self,
        model: SystemModel,
        W: ConstrainedZonotope,
        V: ConstrainedZonotope,
        limits: ReductionLimits = ReductionLimits(),
        eliminate: bool = True,
        hull_margin: float = HULL_MARGIN,
    ):
        self.model = model
        self.W = W
        self.V = V
        self.limits = limits
        self.eliminate = eliminate
        self.hull_margin = hull_margin
        self._noise_hulls = (cz_hull(W), cz_hull(V))
        self.state: Optional[EstimatorState] = None
        self.history: List[EstimatorState] = []

    def initialize(self, y0: Sequence[float], X0: ConstrainedZonotope) -> EstimatorState:
        started = time.perf_counter()
        X = update_initial(self.model, X0, self.V, y0, self.eliminate, self.hull_margin)
        self.state = _finish(0, X, self.limits, PATH_LIFTED, started)
        self.history = [self.state]
        return self.state

    def step(self, u: Sequence[float], y: Sequence[float]) -> EstimatorState:
        assert self.state is not None, "call initialize before step"
        self.state = estimate_step(
            self.state,
            self.model,
            self.W,
            self.V,
            u,
            y,
            self.limits,
            self.eliminate,
            self.hull_margin,
            self._noise_hulls,
        )
        self.history.append(self.state)
        return self.state
