"""Branch-and-prune global optimization for Lipschitz objectives, an
adaptive-step training solver, baseline optimizers, a tiny differentiable
model stack, benchmark objectives, and an experiment harness."""

from .branch_prune import (
    BranchPruneConfig,
    GlobalResult,
    PhaseInfo,
    next_sample,
    optimize_global,
    packing_sample_bound,
    ray_exit,
)
from .core import (
    AssumptionViolation,
    Box,
    LipschitzConfig,
    NumericError,
    PruneBall,
    Sample,
    SampleHistory,
    ball_radius,
    coverage_fraction,
    in_pruned_region,
    lower_envelope,
    lower_estimator,
    upper_bound,
)
from .harness import ExperimentConfig, compare, diagnostics, run
from .models import MlpSpec, accuracy, gradient, init_params, objective
from .solvers import (
    SOLVER_KINDS,
    ConditionRecord,
    Solver,
    SolverConfig,
    SolverState,
    bpgrad_step_size,
    descent_alignment,
    sampling_condition,
)
from .testbed import (
    BenchmarkFn,
    CertificationError,
    MiniBatch,
    batches,
    certify_L,
    get_benchmark,
    make_blobs,
    registry,
)
from .trace import RunTrace, TraceRow, read_csv, write_csv

__version__ = "0.1.0"
