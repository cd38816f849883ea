"""
Benchmark systems and ground-truth simulation.

The constants of each system are packaged in `state/systems.yaml`; the
dynamics and measurement functions are written here against the factor
library so the same definition is recorded for estimation and replayed
for simulation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import numpy as np
from omegaconf import DictConfig, OmegaConf

from .conzono import ConstrainedZonotope
from .estimator import SystemModel
from .factorgraph import cos, eval_real, sin
from .interval import IntervalVector
from .reduction import ReductionLimits

logger = logging.getLogger(__name__)

PACKAGEDIR = Path(__file__).parent.absolute()
SYSTEMS = PACKAGEDIR.joinpath("state", "systems.yaml")


class NoiseMode(str, Enum):
    """How disturbances and measurement noise are drawn from their bounds"""

    UNIFORM = "uniform"
    EXTREME = "extreme"
    ZERO = "zero"


def load_system_constants() -> DictConfig:
    return OmegaConf.load(SYSTEMS)


@dataclass(frozen=True)
class BenchmarkSystem:
    """
    Attributes:
        name: registry key
        model: recorded f, g and composite
        W, V: disturbance and noise bounds as boxes
        X0: initial enclosure
        x0: initial state used for simulation
        steps: default horizon
        limits: default reduction limits
        input_fn: known input u_k for step k
    """

    name: str
    description: str
    model: SystemModel
    W: IntervalVector
    V: IntervalVector
    X0: ConstrainedZonotope
    x0: np.ndarray
    steps: int
    limits: ReductionLimits
    input_fn: Callable[[int], List[float]]

    @property
    def W_set(self) -> ConstrainedZonotope:
        return ConstrainedZonotope.from_interval(self.W)

    @property
    def V_set(self) -> ConstrainedZonotope:
        return ConstrainedZonotope.from_interval(self.V)

    def u(self, k: int) -> List[float]:
        return self.input_fn(k)


class SystemRegistry(dict):
    """
    Benchmark systems by name with attribute access, for example
    `registry.example1`
    """

    def __getattr__(self, key):
        try:
            return self[key]
        except KeyError:
            raise AttributeError(f"SystemRegistry: no system named '{key}'. Registered: {sorted(self)}")

    def __setattr__(self, key, value):
        self[key] = value


def _bounds(values) -> IntervalVector:
    arr = np.asarray(OmegaConf.to_container(values), dtype=float).reshape(-1, 2)
    return IntervalVector(arr[:, 0], arr[:, 1])


def _no_input(k: int) -> List[float]:
    return []


def _build(name: str, const: DictConfig, f: Callable, g: Callable, input_fn=_no_input) -> BenchmarkSystem:
    model = SystemModel.from_functions(f, g, const.n_x, const.n_w, const.n_v, const.n_u)
    X0 = ConstrainedZonotope(
        np.asarray(OmegaConf.to_container(const.X0.G), dtype=float),
        np.asarray(OmegaConf.to_container(const.X0.c), dtype=float),
    )
    system = BenchmarkSystem(
        name=name,
        description=const.description,
        model=model,
        W=_bounds(const.w_bounds),
        V=_bounds(const.v_bounds),
        X0=X0,
        x0=np.asarray(OmegaConf.to_container(const.x0), dtype=float),
        steps=int(const.steps),
        limits=ReductionLimits(int(const.max_gens), int(const.max_cons)),
        input_fn=input_fn,
    )
    logger.info(
        "registered %s: n_z(f)=%d n_z(l)=%d",
        name,
        model.f_graph.n_z,
        model.ell_graph.n_z,
    )
    return system


def example1(const: DictConfig) -> BenchmarkSystem:
    def f(x, w, u):
        x1, x2 = x
        ratio = x1 * x2 / (4.0 + x1)
        return [3.0 * x1 - x1**2 / 7.0 - 4.0 * ratio + w[0], -2.0 * x2 + 3.0 * ratio + w[1]]

    def g(x, v):
        x1, x2 = x
        return [x1 - sin(x2 / 2.0) + v[0], -x1 * x2 + x2 + v[1]]

    return _build("example1", const, f, g)


def example2(const: DictConfig) -> BenchmarkSystem:
    ts, k1, k2 = float(const.ts), float(const.kappa1), float(const.kappa2)

    def f(x, w, u):
        x1, x2, x3, x4 = x
        w1, w2, w3 = w
        reaction = w3 * x1 * x2
        decay = k2 * x1 * x3
        return [
            x1 + ts * (-reaction - decay + k1 * (w1 - 2.0 * x1)),
            x2 + ts * (-reaction + k1 * (w2 - 2.0 * x2)),
            x3 + ts * (reaction - decay - 2.0 * k1 * x3),
            x4 + ts * (decay - 2.0 * k1 * x4),
        ]

    def g(x, v):
        x1, x2, x3, x4 = x
        return [x1 + x2 + x3 + v[0], x2 + x3 + x4 + v[1], x1 + x4 + v[2]]

    return _build("example2", const, f, g)


def example3(const: DictConfig, ts: Optional[float] = None) -> BenchmarkSystem:
    ts = float(const.ts) if ts is None else float(ts)
    l1, l2, m1, m2 = float(const.l1), float(const.l2), float(const.m1), float(const.m2)
    c1, c2, k1, k2 = float(const.c1), float(const.c2), float(const.k1), float(const.k2)
    amplitude = float(const.input_amplitude)

    # mass matrix entries; the off-diagonal one depends on x1 - x2
    m11 = m1 * l1**2 / 3.0 + m2 * l1**2
    m22 = m2 * l2**2 / 3.0
    coupling = 0.5 * m2 * l1 * l2

    def f(x, w, u):
        x1, x2, x3, x4 = x
        d = x1 - x2
        sd = sin(d)
        m12 = coupling * cos(d)
        det = m11 * m22 - m12**2
        gamma1 = coupling * sd * x4**2 + (k1 + k2) * x1 - k2 * x2 + (c1 + c2) * x3 - c2 * x4
        gamma2 = -coupling * sd * x3**2 - k2 * x1 + k2 * x2 - c2 * x3 + c2 * x4
        tau1 = u[0] - gamma1
        tau2 = -gamma2
        acc1 = (m22 * tau1 - m12 * tau2) / det
        acc2 = (m11 * tau2 - m12 * tau1) / det
        return [x1 + ts * x3, x2 + ts * x4, x3 + ts * acc1, x4 + ts * acc2]

    def g(x, v):
        x1, x2 = x[0], x[1]
        return [l1 * cos(x1) + l2 * cos(x2) + v[0], l1 * sin(x1) + l2 * sin(x2) + v[1]]

    def input_fn(k: int) -> List[float]:
        return [amplitude * float(np.sin(k * ts))]

    return _build("example3", const, f, g, input_fn)


BUILDERS = {"example1": example1, "example2": example2, "example3": example3}


def register_systems(names: Sequence[str] = None, ts: Optional[float] = None) -> SystemRegistry:
    """
    Build the benchmark systems.

    Args:
        names: systems to build (default: all)
        ts: sampling time override for example3

    Returns:
        SystemRegistry keyed by name
    """
    constants = load_system_constants()
    registry = SystemRegistry()
    for name in names or BUILDERS:
        if name not in BUILDERS:
            raise KeyError(f"'{name}' is not a registered system. Options: {sorted(BUILDERS)}")
        const = constants[name]
        registry[name] = example3(const, ts) if name == "example3" else BUILDERS[name](const)
    return registry


@dataclass(frozen=True)
class Trajectory:
    """
    Attributes:
        x: states x_0 .. x_N, shape (N+1, n_x)
        y: measurements y_0 .. y_N, shape (N+1, n_y)
        u: inputs u_0 .. u_{N-1}, shape (N, n_u)
        w: disturbances w_0 .. w_{N-1}, shape (N, n_w)
        v: measurement noise v_0 .. v_N, shape (N+1, n_v)
    """

    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    w: np.ndarray
    v: np.ndarray


def _sampler(mode: NoiseMode, rng: np.random.Generator) -> Callable[[IntervalVector], np.ndarray]:
    def draw(box: IntervalVector) -> np.ndarray:
        if mode is NoiseMode.UNIFORM:
            return rng.uniform(box.lo, box.hi)
        if mode is NoiseMode.EXTREME:
            return np.where(rng.integers(0, 2, size=len(box)) == 1, box.hi, box.lo)
        return box.mid

    return draw


def simulate_truth(
    system: BenchmarkSystem,
    seed: int,
    steps: Optional[int] = None,
    noise_mode: NoiseMode = NoiseMode.UNIFORM,
) -> Trajectory:
    """
    Simulate x_k = f(x_{k-1}, w_{k-1}, u_{k-1}) and y_k = g(x_k, v_k) from
    system.x0 by replaying the recorded tapes. A fixed seed gives a
    bit-identical trajectory.
    """
    steps = system.steps if steps is None else steps
    draw = _sampler(NoiseMode(noise_mode), np.random.default_rng(seed))
    model = system.model

    def measure(x):
        v = draw(system.V)
        _, y = eval_real(model.g_graph, np.concatenate([x, v]))
        return y, v

    x = system.x0.copy()
    y, v = measure(x)
    xs, ys, vs, us, ws = [x], [y], [v], [], []
    for k in range(1, steps + 1):
        u = system.u(k - 1)
        w = draw(system.W)
        _, x = eval_real(model.f_graph, np.concatenate([x, w]), u)
        y, v = measure(x)
        xs.append(x)
        ys.append(y)
        vs.append(v)
        us.append(u)
        ws.append(w)

    return Trajectory(
        x=np.vstack(xs),
        y=np.vstack(ys),
        u=np.array(us, dtype=float).reshape(steps, model.n_u),
        w=np.array(ws, dtype=float).reshape(steps, model.n_w),
        v=np.vstack(vs),
    )
