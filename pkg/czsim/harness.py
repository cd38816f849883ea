"""
Command line runner for the benchmark systems.

Simulates a seeded ground-truth trajectory, runs the estimator along it,
checks at every step that the true state lies in the enclosure and writes one
CSV row per step:

    k,hull_volume_root,n_g,n_c,contains_truth,step_millis

Configuration comes from the `RunConfig` schema, an optional YAML file (root
key `estimator:`), `key=value` overrides and command line flags, in
increasing order of precedence.

Exit codes: 0 success, 2 configuration error, 3 containment violation.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from omegaconf import DictConfig, OmegaConf
from omegaconf.errors import OmegaConfBaseException

from .conzono import cz_contains
from .errors import ConfigError, DomainError, EmptySetError, SolverError
from .estimator import Estimator, EstimatorState
from .reduction import ReductionLimits
from .systems import BenchmarkSystem, NoiseMode, register_systems, simulate_truth
from .utils import CONTAINMENT_TOL

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VIOLATION = 3

CSV_COLUMNS = ["k", "hull_volume_root", "n_g", "n_c", "contains_truth", "step_millis"]
FLOAT_FORMAT = "%.12g"


@dataclass
class RunConfig:
    """
    Schema of a run. `None` for steps or limits means the system default.
    """

    system: str = "example1"
    steps: Optional[int] = None
    seed: int = 0
    gen_limit: Optional[int] = None
    con_limit: Optional[int] = None
    no_reduction: bool = False
    out_path: str = "czsim_run.csv"
    noise_mode: str = NoiseMode.UNIFORM.value
    ts: Optional[float] = None
    hull_margin: float = 1e-8
    timing: bool = False
    log_level: str = "INFO"


@dataclass(frozen=True)
class StepRecord:
    k: int
    hull_volume_root: float
    n_g: int
    n_c: int
    contains_truth: bool
    step_millis: float


@dataclass
class RunResult:
    config: RunConfig
    records: List[StepRecord]

    @property
    def violations(self) -> int:
        return sum(1 for r in self.records if not r.contains_truth)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.records], columns=CSV_COLUMNS)


def load_configuration(fn: str) -> DictConfig:
    """
    Load the `estimator` section of a YAML file.

    Raises:
        ConfigError: not a .yaml file, unreadable, or no `estimator` key
    """
    if fn[-5:] != ".yaml":
        raise ConfigError("Expected a YAML file: .yaml")
    try:
        config = OmegaConf.load(fn)
        section = config.estimator
    except Exception as e:
        raise ConfigError(f"Could not load config file. Please check path and file type. Error message is {str(e)}")
    if section is None:
        raise ConfigError(f"Config file {fn} has an empty 'estimator' section")
    return section


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="czsim", description="Set-based state estimation on benchmark systems")
    parser.add_argument("--config", help="YAML file with an 'estimator' section")
    parser.add_argument("--system")
    parser.add_argument("--steps", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--gen-limit", dest="gen_limit", type=int)
    parser.add_argument("--con-limit", dest="con_limit", type=int)
    parser.add_argument("--out", dest="out_path")
    parser.add_argument("--noise-mode", dest="noise_mode", choices=[m.value for m in NoiseMode])
    parser.add_argument("--ts", type=float, help="sampling time of example3")
    parser.add_argument("--timing", action="store_true", default=None, help="record wall-clock step times")
    parser.add_argument("--no-reduction", dest="no_reduction", action="store_true", default=None)
    parser.add_argument("--log-level", dest="log_level")
    parser.add_argument("overrides", nargs="*", help="key=value overrides")
    return parser


FLAG_KEYS = (
    "system",
    "steps",
    "seed",
    "gen_limit",
    "con_limit",
    "out_path",
    "noise_mode",
    "ts",
    "timing",
    "no_reduction",
    "log_level",
)


def build_config(
    config_file: Optional[str] = None,
    overrides: Sequence[str] = (),
    flags: Optional[dict] = None,
) -> RunConfig:
    """
    Merge schema defaults, file, dotlist overrides and flags.

    Raises:
        ConfigError: unreadable file, unknown key or a value of the wrong type
    """
    layers = [OmegaConf.structured(RunConfig)]
    if config_file:
        layers.append(load_configuration(config_file))
    try:
        if overrides:
            layers.append(OmegaConf.from_dotlist(list(overrides)))
        if flags:
            layers.append(OmegaConf.create({k: v for k, v in flags.items() if v is not None}))
        return OmegaConf.to_object(OmegaConf.merge(*layers))
    except OmegaConfBaseException as e:
        raise ConfigError(f"invalid configuration: {e}")


def _validate(config: RunConfig, system: BenchmarkSystem, steps: int, limits: ReductionLimits):
    n_x = system.model.n_x
    if steps < 1:
        raise ConfigError(f"steps must be at least 1, got {steps}")
    if limits.max_gens is not None and limits.max_gens < n_x:
        raise ConfigError(f"gen_limit must be at least the state dimension {n_x}, got {limits.max_gens}")
    if limits.max_cons is not None and limits.max_cons < 0:
        raise ConfigError(f"con_limit must be nonnegative, got {limits.max_cons}")
    if config.hull_margin < 0.0:
        raise ConfigError("hull_margin must be nonnegative")
    if config.ts is not None and config.ts <= 0.0:
        raise ConfigError("ts must be positive")
    if config.noise_mode not in {m.value for m in NoiseMode}:
        raise ConfigError(f"unknown noise_mode '{config.noise_mode}', options: {[m.value for m in NoiseMode]}")


def _limits(config: RunConfig, system: BenchmarkSystem) -> ReductionLimits:
    if config.no_reduction:
        return ReductionLimits()
    gens = system.limits.max_gens if config.gen_limit is None else config.gen_limit
    cons = system.limits.max_cons if config.con_limit is None else config.con_limit
    return ReductionLimits(gens, cons)


def _record(state: EstimatorState, x_true: np.ndarray, timing: bool) -> StepRecord:
    diag = state.diagnostics
    return StepRecord(
        k=state.k,
        hull_volume_root=diag.hull.volume_root(),
        n_g=diag.n_g,
        n_c=diag.n_c,
        contains_truth=cz_contains(state.Xhat, x_true, CONTAINMENT_TOL),
        step_millis=diag.step_time * 1000.0 if timing else 0.0,
    )


def run(config: RunConfig) -> RunResult:
    """
    Run the estimator on one simulated trajectory and write the CSV to
    config.out_path (skipped when out_path is empty).

    Raises:
        ConfigError: unknown system or invalid values
    """
    try:
        system = register_systems([config.system], ts=config.ts)[config.system]
    except KeyError as e:
        raise ConfigError(str(e))
    steps = system.steps if config.steps is None else config.steps
    limits = _limits(config, system)
    _validate(config, system, steps, limits)

    logger.info(
        "run %s: steps=%d seed=%d limits=(%s, %s) noise=%s",
        system.name,
        steps,
        config.seed,
        limits.max_gens,
        limits.max_cons,
        NoiseMode(config.noise_mode).value,
    )
    truth = simulate_truth(system, config.seed, steps, config.noise_mode)
    estimator = Estimator(system.model, system.W_set, system.V_set, limits, hull_margin=config.hull_margin)

    records: List[StepRecord] = []
    try:
        state = estimator.initialize(truth.y[0], system.X0)
        records.append(_record(state, truth.x[0], config.timing))
        for k in range(1, steps + 1):
            state = estimator.step(truth.u[k - 1], truth.y[k])
            records.append(_record(state, truth.x[k], config.timing))
            if not records[-1].contains_truth:
                logger.warning("k=%d: true state outside the enclosure", k)
    except (EmptySetError, DomainError, SolverError) as e:
        k = len(records)
        logger.warning("k=%d: estimation stopped: %s", k, e)
        records.append(StepRecord(k, 0.0, 0, 0, False, 0.0))

    result = RunResult(config, records)
    logger.info("run %s finished: %d steps, %d containment violations", system.name, len(records) - 1, result.violations)
    if config.out_path:
        result.to_frame().to_csv(config.out_path, index=False, float_format=FLOAT_FORMAT)
    return result


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = build_config(args.config, args.overrides, {k: getattr(args, k) for k in FLAG_KEYS})
        level = logging.getLevelName(str(config.log_level).upper())
        if not isinstance(level, int):
            raise ConfigError(f"unknown log level '{config.log_level}'")
        logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
        result = run(config)
    except ConfigError as e:
        print(f"czsim: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK if result.violations == 0 else EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
