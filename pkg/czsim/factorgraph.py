"""
Factorable functions recorded as tapes of elementary operations.

A system function is written once against plain Python arithmetic and the
elementary functions of this module (`exp`, `log`, `sin`, `cos`). Called with
floats it computes values; called with `Tracer` handles by `record` it leaves
behind a `FactorGraph`: one `ElemOp` per factor, inputs first, every operation
referencing earlier factors only.

Known inputs (for example a control signal) are `Param` slots. They are lazy
constants resolved from a `params` vector each time the tape is evaluated or
relaxed, so the tape never has to be re-recorded.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DomainError, ShapeError, UnsupportedOpError
from .interval import Interval, IntervalVector, iv_arith, iv_elem
from .utils import selector

KINDS = ("input", "add", "sub", "mul", "div", "affine", "exp", "ln", "sin", "cos", "pow")
BINARY_KINDS = frozenset({"add", "sub", "mul", "div"})
UNIVARIATE_KINDS = frozenset({"exp", "ln", "sin", "cos", "pow"})
# factors whose defining relation is a linear equality
ELIMINABLE_KINDS = frozenset({"add", "sub", "affine"})


class Param:
    """
    A constant whose value is looked up in the parameter vector at evaluation
    time. Arithmetic between params (and numbers) stays lazy.
    """

    __slots__ = ("_fn", "label")
    __array_ufunc__ = None

    def __init__(self, fn: Callable[[Sequence[float]], float], label: str = "param"):
        self._fn = fn
        self.label = label

    @classmethod
    def slot(cls, index: int) -> Param:
        return cls(lambda p: float(p[index]), f"u[{index}]")

    def value(self, params: Sequence[float]) -> float:
        return self._fn(params)

    def shifted(self, offset: int) -> Param:
        """The same expression reading its slots `offset` positions later"""
        fn = self._fn
        return Param(lambda p: fn(p[offset:]), self.label)

    def _combine(self, other, op, symbol: str, reverse: bool = False):
        if isinstance(other, Tracer):
            return NotImplemented
        if not isinstance(other, (Param, numbers.Real)):
            raise UnsupportedOpError(f"unsupported operand for Param: {type(other).__name__}")
        left, right = (other, self) if reverse else (self, other)
        return Param(
            lambda p: op(resolve(left, p), resolve(right, p)),
            f"({_label(left)} {symbol} {_label(right)})",
        )

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b, "+")

    def __radd__(self, other):
        return self._combine(other, lambda a, b: a + b, "+", reverse=True)

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b, "-")

    def __rsub__(self, other):
        return self._combine(other, lambda a, b: a - b, "-", reverse=True)

    def __mul__(self, other):
        return self._combine(other, lambda a, b: a * b, "*")

    def __rmul__(self, other):
        return self._combine(other, lambda a, b: a * b, "*", reverse=True)

    def __truediv__(self, other):
        return self._combine(other, lambda a, b: a / b, "/")

    def __rtruediv__(self, other):
        return self._combine(other, lambda a, b: a / b, "/", reverse=True)

    def __pow__(self, q):
        return self._combine(q, lambda a, b: a**b, "**")

    def __neg__(self):
        fn = self._fn
        return Param(lambda p: -fn(p), f"-{self.label}")

    def __repr__(self):
        return f"Param({self.label})"


Coefficient = Union[float, Param]


def resolve(value: Coefficient, params: Sequence[float]) -> float:
    """Concrete value of a coefficient under `params`"""
    if isinstance(value, Param):
        return value.value(params)
    return value


def _label(value) -> str:
    return value.label if isinstance(value, Param) else repr(value)


@dataclass(frozen=True)
class ElemOp:
    """
    One factor of a tape.

    Attributes:
        kind: one of KINDS
        a: index of the first argument (-1 for inputs)
        b: index of the second argument for binary kinds
        q: integer exponent of pow
        scale, offset, divisor: coefficients of the affine kind,
            z = scale * z_a + offset, or z = z_a / divisor + offset
    """

    kind: str
    a: int = -1
    b: Optional[int] = None
    q: Optional[int] = None
    scale: Coefficient = 1.0
    offset: Coefficient = 0.0
    divisor: Optional[Coefficient] = None

    def linear_coefficients(self, params: Sequence[float] = ()) -> Tuple[float, float]:
        """(s, r) with z = s * z_a + r, for the affine kind"""
        assert self.kind == "affine", "linear_coefficients is defined for affine factors"
        if self.divisor is not None:
            return 1.0 / resolve(self.divisor, params), resolve(self.offset, params)
        return resolve(self.scale, params), resolve(self.offset, params)

    def remap(self, index_map: Callable[[int], int], param_shift: int = 0) -> ElemOp:
        """Copy with argument indices (and parameter slots) moved"""

        def coef(c):
            if isinstance(c, Param) and param_shift:
                return c.shifted(param_shift)
            return c

        return replace(
            self,
            a=index_map(self.a) if self.a >= 0 else self.a,
            b=index_map(self.b) if self.b is not None else None,
            scale=coef(self.scale),
            offset=coef(self.offset),
            divisor=coef(self.divisor) if self.divisor is not None else None,
        )


@dataclass(frozen=True)
class FactorGraph:
    """
    A recorded tape.

    Attributes:
        n_s: number of inputs (factors 0 .. n_s-1)
        nodes: one ElemOp per factor
        output_rows: factor index of each output, rows of the selector E
        n_params: number of parameter slots
        state_rows: for a composite graph, the factors holding the inner
            function's outputs (selector E_f)
    """

    n_s: int
    nodes: Tuple[ElemOp, ...]
    output_rows: Tuple[int, ...]
    n_params: int = 0
    state_rows: Optional[Tuple[int, ...]] = field(default=None)

    def __post_init__(self):
        for j, node in enumerate(self.nodes):
            if node.kind not in KINDS:
                raise ValueError(f"factor {j}: unknown kind '{node.kind}'")
            if (node.kind == "input") != (j < self.n_s):
                raise ValueError(f"factor {j}: inputs must occupy exactly the first {self.n_s} slots")
            if node.kind == "input":
                continue
            if not 0 <= node.a < j:
                raise ValueError(f"factor {j}: argument {node.a} is not an earlier factor")
            if node.kind in BINARY_KINDS and (node.b is None or not 0 <= node.b < j):
                raise ValueError(f"factor {j}: argument {node.b} is not an earlier factor")
            if node.kind == "pow" and (node.q is None or node.q < 2):
                raise ValueError(f"factor {j}: pow needs an integer exponent >= 2")
        for r in tuple(self.output_rows) + tuple(self.state_rows or ()):
            if not 0 <= r < len(self.nodes):
                raise ValueError(f"output row {r} out of range")

    @property
    def n_z(self) -> int:
        return len(self.nodes)

    @property
    def n_out(self) -> int:
        return len(self.output_rows)

    def selector(self, rows: Sequence[int] = None) -> np.ndarray:
        """The 0/1 matrix E picking `rows` (default: the outputs) out of z"""
        return selector(self.output_rows if rows is None else rows, self.n_z)

    def eliminable(self) -> List[int]:
        """Non-input factors defined by a linear equality, ascending"""
        return [j for j, n in enumerate(self.nodes) if n.kind in ELIMINABLE_KINDS]

    def count_by_kind(self) -> dict:
        counts = {}
        for n in self.nodes:
            counts[n.kind] = counts.get(n.kind, 0) + 1
        return counts


class _TapeBuilder:
    def __init__(self, n_inputs: int):
        self.n_inputs = n_inputs
        self.nodes: List[ElemOp] = []

    def push(self, op: ElemOp) -> Tracer:
        self.nodes.append(op)
        return Tracer(self, len(self.nodes) - 1)

    def constant(self, value: Coefficient) -> Tracer:
        """A factor holding a constant, written as a zero-scale affine of input 0"""
        if self.n_inputs == 0:
            raise ShapeError("constants need at least one input to anchor the factor")
        return self.push(ElemOp("affine", 0, scale=0.0, offset=value))

    def index_of(self, value) -> int:
        if isinstance(value, Tracer):
            if value.tape is not self:
                raise UnsupportedOpError("handle belongs to a different recording")
            return value.index
        if isinstance(value, (Param, numbers.Real)):
            return self.constant(value).index
        raise UnsupportedOpError(f"function returned an unsupported value: {type(value).__name__}")


class Tracer:
    """Handle to a factor being recorded. Supports +, -, *, /, unary -, and ** int."""

    __slots__ = ("tape", "index")
    __array_ufunc__ = None

    def __init__(self, tape: _TapeBuilder, index: int):
        self.tape = tape
        self.index = index

    def _check(self, other: Tracer):
        if other.tape is not self.tape:
            raise UnsupportedOpError("handles from different recordings cannot be combined")

    @staticmethod
    def _is_constant(other) -> bool:
        return isinstance(other, (Param, numbers.Real)) and not isinstance(other, bool)

    def __add__(self, other):
        if isinstance(other, Tracer):
            self._check(other)
            return self.tape.push(ElemOp("add", self.index, other.index))
        if self._is_constant(other):
            return self.tape.push(ElemOp("affine", self.index, scale=1.0, offset=other))
        raise UnsupportedOpError(f"cannot add {type(other).__name__} to a traced value")

    def __radd__(self, other):
        return self.__add__(other)

    def __sub__(self, other):
        if isinstance(other, Tracer):
            self._check(other)
            return self.tape.push(ElemOp("sub", self.index, other.index))
        if self._is_constant(other):
            return self.tape.push(ElemOp("affine", self.index, scale=1.0, offset=-other))
        raise UnsupportedOpError(f"cannot subtract {type(other).__name__} from a traced value")

    def __rsub__(self, other):
        if self._is_constant(other):
            return self.tape.push(ElemOp("affine", self.index, scale=-1.0, offset=other))
        raise UnsupportedOpError(f"cannot subtract a traced value from {type(other).__name__}")

    def __mul__(self, other):
        if isinstance(other, Tracer):
            self._check(other)
            return self.tape.push(ElemOp("mul", self.index, other.index))
        if self._is_constant(other):
            return self.tape.push(ElemOp("affine", self.index, scale=other, offset=0.0))
        raise UnsupportedOpError(f"cannot multiply a traced value by {type(other).__name__}")

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if isinstance(other, Tracer):
            self._check(other)
            return self.tape.push(ElemOp("div", self.index, other.index))
        if self._is_constant(other):
            if not isinstance(other, Param) and other == 0:
                raise DomainError("division of a traced value by 0")
            return self.tape.push(ElemOp("affine", self.index, offset=0.0, divisor=other))
        raise UnsupportedOpError(f"cannot divide a traced value by {type(other).__name__}")

    def __rtruediv__(self, other):
        if self._is_constant(other):
            numerator = self.tape.constant(other)
            return self.tape.push(ElemOp("div", numerator.index, self.index))
        raise UnsupportedOpError(f"cannot divide {type(other).__name__} by a traced value")

    def __neg__(self):
        return self.tape.push(ElemOp("affine", self.index, scale=-1.0, offset=0.0))

    def __pos__(self):
        return self

    def __pow__(self, q):
        if isinstance(q, numbers.Integral) or (isinstance(q, numbers.Real) and float(q).is_integer()):
            q = int(q)
            if q == 1:
                return self
            if q >= 2:
                return self.tape.push(ElemOp("pow", self.index, q=q))
        raise UnsupportedOpError(f"only integer powers >= 1 are supported, got {q!r}")

    def __rpow__(self, other):
        raise UnsupportedOpError("a traced value cannot be used as an exponent")

    def __abs__(self):
        raise UnsupportedOpError("abs is not in the factor library")

    def __float__(self):
        raise UnsupportedOpError("a traced value has no float value; use czsim.factorgraph functions")

    def __bool__(self):
        raise UnsupportedOpError("branching on a traced value is not supported")

    def __repr__(self):
        return f"Tracer(z{self.index})"


def _unary(x, kind: str, real_fn: Callable[[float], float]):
    if isinstance(x, Tracer):
        return x.tape.push(ElemOp(kind, x.index))
    if isinstance(x, Param):
        return Param(lambda p: real_fn(x.value(p)), f"{kind}({x.label})")
    return real_fn(x)


def exp(x):
    return _unary(x, "exp", math.exp)


def log(x):
    return _unary(x, "ln", math.log)


def sin(x):
    return _unary(x, "sin", math.sin)


def cos(x):
    return _unary(x, "cos", math.cos)


def record(fn: Callable, n_inputs: int, n_params: int = 0) -> FactorGraph:
    """
    Record `fn` as a tape.

    Args:
        fn: called as fn(s) or, when n_params > 0, as fn(s, p), where s is a
            list of input handles and p a list of Param slots. It returns one
            value or a sequence of values.
        n_inputs: number of inputs
        n_params: number of parameter slots

    Returns:
        the FactorGraph

    Raises:
        UnsupportedOpError: fn used an operation outside the library
    """
    builder = _TapeBuilder(n_inputs)
    inputs = [builder.push(ElemOp("input")) for _ in range(n_inputs)]
    if n_params:
        out = fn(inputs, [Param.slot(i) for i in range(n_params)])
    else:
        out = fn(inputs)
    outs = list(out) if isinstance(out, (list, tuple)) else [out]
    rows = tuple(builder.index_of(o) for o in outs)
    return FactorGraph(n_inputs, tuple(builder.nodes), rows, n_params)


def record_composite(f: FactorGraph, g: FactorGraph, n_v: int = None) -> FactorGraph:
    """
    Compose l(x, w, v) = g(f(x, w), v) into one tape.

    f has inputs (x, w) and n_x outputs; g has inputs (x, v). The result has
    inputs (x, w, v), contains every factor of f, and exposes f's outputs as
    `state_rows` and g's outputs as `output_rows`. Parameter slots are f's
    followed by g's.

    Raises:
        ShapeError: input counts do not line up
    """
    n_x = f.n_out
    if f.n_s < n_x:
        raise ShapeError(f"f has {f.n_s} inputs but {n_x} outputs; expected inputs (x, w)")
    if n_v is None:
        n_v = g.n_s - n_x
    if n_v < 0 or g.n_s != n_x + n_v:
        raise ShapeError(f"g takes {g.n_s} inputs, which does not match x ({n_x}) plus v ({n_v})")

    def f_index(i: int) -> int:
        return i if i < f.n_s else i + n_v

    def g_index(i: int) -> int:
        if i < n_x:
            return f_index(f.output_rows[i])
        if i < g.n_s:
            return f.n_s + (i - n_x)
        return f.n_z + n_v + (i - g.n_s)

    nodes = list(f.nodes[: f.n_s])
    nodes += [ElemOp("input") for _ in range(n_v)]
    nodes += [node.remap(f_index) for node in f.nodes[f.n_s :]]
    nodes += [node.remap(g_index, param_shift=f.n_params) for node in g.nodes[g.n_s :]]

    return FactorGraph(
        n_s=f.n_s + n_v,
        nodes=tuple(nodes),
        output_rows=tuple(g_index(r) for r in g.output_rows),
        n_params=f.n_params + g.n_params,
        state_rows=tuple(f_index(r) for r in f.output_rows),
    )


def _check_inputs(graph: FactorGraph, n: int, params: Sequence[float]):
    if n != graph.n_s:
        raise ShapeError(f"graph takes {graph.n_s} inputs, got {n}")
    if len(params) < graph.n_params:
        raise ShapeError(f"graph needs {graph.n_params} parameters, got {len(params)}")


def eval_real(
    graph: FactorGraph, s: Sequence[float], params: Sequence[float] = ()
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Evaluate every factor at a real input.

    Uses the same floating-point operations, in the same order, as the
    recorded function, so the outputs match it bit for bit.

    Returns:
        (z, outputs) where outputs = E z

    Raises:
        DomainError: division by 0 or ln of a nonpositive value
    """
    _check_inputs(graph, len(s), params)
    z: List[float] = [float(v) for v in s]
    for j in range(graph.n_s, graph.n_z):
        node = graph.nodes[j]
        za = z[node.a]
        kind = node.kind
        if kind == "add":
            v = za + z[node.b]
        elif kind == "sub":
            v = za - z[node.b]
        elif kind == "mul":
            v = za * z[node.b]
        elif kind == "div":
            zb = z[node.b]
            if zb == 0.0:
                raise DomainError(f"factor {j}: division by 0")
            v = za / zb
        elif kind == "affine":
            if node.divisor is not None:
                v = za / resolve(node.divisor, params) + resolve(node.offset, params)
            else:
                v = resolve(node.scale, params) * za + resolve(node.offset, params)
        elif kind == "exp":
            v = math.exp(za)
        elif kind == "ln":
            if za <= 0.0:
                raise DomainError(f"factor {j}: ln of {za}")
            v = math.log(za)
        elif kind == "sin":
            v = math.sin(za)
        elif kind == "cos":
            v = math.cos(za)
        else:
            v = za**node.q
        z.append(v)
    z_arr = np.array(z)
    return z_arr, z_arr[list(graph.output_rows)]


def eval_batch(graph: FactorGraph, samples: np.ndarray, params: Sequence[float] = ()) -> np.ndarray:
    """
    Evaluate all factors for many inputs at once.

    Args:
        samples: array of shape (N, n_s)

    Returns:
        array of shape (N, n_z)
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    _check_inputs(graph, samples.shape[1], params)
    Z = np.empty((samples.shape[0], graph.n_z))
    Z[:, : graph.n_s] = samples
    for j in range(graph.n_s, graph.n_z):
        node = graph.nodes[j]
        za = Z[:, node.a]
        kind = node.kind
        if kind == "add":
            Z[:, j] = za + Z[:, node.b]
        elif kind == "sub":
            Z[:, j] = za - Z[:, node.b]
        elif kind == "mul":
            Z[:, j] = za * Z[:, node.b]
        elif kind == "div":
            zb = Z[:, node.b]
            if np.any(zb == 0.0):
                raise DomainError(f"factor {j}: division by 0")
            Z[:, j] = za / zb
        elif kind == "affine":
            if node.divisor is not None:
                Z[:, j] = za / resolve(node.divisor, params) + resolve(node.offset, params)
            else:
                Z[:, j] = resolve(node.scale, params) * za + resolve(node.offset, params)
        elif kind == "exp":
            Z[:, j] = np.exp(za)
        elif kind == "ln":
            if np.any(za <= 0.0):
                raise DomainError(f"factor {j}: ln of a nonpositive value")
            Z[:, j] = np.log(za)
        elif kind == "sin":
            Z[:, j] = np.sin(za)
        elif kind == "cos":
            Z[:, j] = np.cos(za)
        else:
            Z[:, j] = za**node.q
    return Z


def eval_interval(graph: FactorGraph, S: IntervalVector, params: Sequence[float] = ()) -> IntervalVector:
    """
    Natural interval extension of every factor over the box S.

    Raises:
        DomainError: propagated from the interval operations
    """
    _check_inputs(graph, len(S), params)
    Z: List[Interval] = list(S)
    for j in range(graph.n_s, graph.n_z):
        node = graph.nodes[j]
        za = Z[node.a]
        if node.kind in BINARY_KINDS:
            Z.append(iv_arith(node.kind, za, Z[node.b]))
        elif node.kind == "affine":
            s, r = node.linear_coefficients(params)
            if node.divisor is not None:
                Z.append(za / resolve(node.divisor, params) + r)
            else:
                Z.append(za.affine(s, r))
        else:
            Z.append(iv_elem(node.kind, za, node.q))
    return IntervalVector.from_intervals(Z)


def linear_map(graph: FactorGraph, params: Sequence[float] = ()) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """
    If every output depends on the inputs only through add, sub and affine
    factors, return (M, d) with outputs = M s + d. Otherwise None.
    """
    forms: List[Optional[Tuple[np.ndarray, float]]] = []
    for j, node in enumerate(graph.nodes):
        if node.kind == "input":
            e = np.zeros(graph.n_s)
            e[j] = 1.0
            forms.append((e, 0.0))
            continue
        fa = forms[node.a]
        fb = forms[node.b] if node.b is not None else None
        if node.kind == "add" and fa is not None and fb is not None:
            forms.append((fa[0] + fb[0], fa[1] + fb[1]))
        elif node.kind == "sub" and fa is not None and fb is not None:
            forms.append((fa[0] - fb[0], fa[1] - fb[1]))
        elif node.kind == "affine" and fa is not None:
            s, r = node.linear_coefficients(params)
            forms.append((s * fa[0], s * fa[1] + r))
        else:
            forms.append(None)

    outs = [forms[r] for r in graph.output_rows]
    if any(o is None for o in outs):
        return None
    if not outs:
        return np.zeros((0, graph.n_s)), np.zeros(0)
    return np.vstack([o[0] for o in outs]), np.array([o[1] for o in outs])
