#
from czsim.errors import (
    ConfigError,
    DomainError,
    EmptySetError,
    InputError,
    ShapeError,
    SolverError,
    UnsupportedOpError,
)
from czsim.interval import Interval, IntervalVector, iv_arith, iv_elem, iv_midrad
from czsim.factorgraph import (
    ElemOp,
    FactorGraph,
    Param,
    cos,
    eval_batch,
    eval_interval,
    eval_real,
    exp,
    linear_map,
    log,
    record,
    record_composite,
    sin,
)
from czsim.lp import BoxEqualityLP, LPResult, dual_bound, lp_feasible, lp_solve
from czsim.polytope import HPolytope, poly_contains, poly_intersect
from czsim.conzono import (
    ConstrainedZonotope,
    cz_cartesian,
    cz_contains,
    cz_genintersect,
    cz_hull,
    cz_intersect_hpoly,
    cz_is_empty,
    cz_linimg,
    cz_minksum,
)
from czsim.reduction import ReductionLimits, cz_reduce
from czsim.relax import LiftedRelaxation, build_lifted, relax_arith, relax_cos, relax_sin, relax_univariate
from czsim.estimator import (
    EliminationPlan,
    Estimator,
    EstimatorState,
    SystemModel,
    build_elimination,
    estimate_step,
    predict,
    predict_update_full,
    predict_update_reduced,
    update_initial,
)
from czsim.systems import NoiseMode, register_systems, simulate_truth
from czsim.harness import RunConfig, StepRecord, build_config, load_configuration, run
