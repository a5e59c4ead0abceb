"""Training solvers behind one step-update interface.

The adaptive solver scales a normalized-gradient step by the gap between the
current objective estimate and rho times the running minimum; the baselines
(SGD with momentum, Adagrad, Adadelta, RMSProp, Adam) follow their standard
published recurrences. One `Solver.step(x, f, grad)` call consumes a
mini-batch evaluation and returns the next iterate.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import NumericError, random_unit

__all__ = [
    "SOLVER_KINDS",
    "SolverConfig",
    "SolverState",
    "ConditionRecord",
    "bpgrad_step_size",
    "bpgrad_update",
    "sgd_momentum_update",
    "adagrad_update",
    "adadelta_update",
    "rmsprop_update",
    "adam_update",
    "sampling_condition",
    "descent_alignment",
    "Solver",
]

SOLVER_KINDS = ("bpgrad", "sgd-momentum", "adagrad", "adadelta", "rmsprop", "adam")


@dataclass
class SolverConfig:
    kind: str = "bpgrad"
    L: float = 20.0
    mu: float = 0.9
    n: int = 0  # evaluations per phase; 0 disables phase advancement
    N: int = 1  # max phases
    epsilon: float = 0.0
    learning_rate: float = 0.001  # baselines; adadelta ignores it
    beta1: float = 0.9
    beta2: float = 0.999
    rms_decay: float = 0.9
    adadelta_decay: float = 0.95
    delta: Optional[float] = None  # smoothing floor; per-kind default when None
    condition_window: int = 50

    def __post_init__(self):
        if self.kind not in SOLVER_KINDS:
            raise ValueError(f"unknown solver kind {self.kind!r}")
        if not (0.0 <= self.mu <= 1.0):
            raise ValueError("momentum mu must lie in [0, 1]")
        if self.L <= 0.0:
            raise ValueError("L must be positive")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.n < 0 or self.N < 1:
            raise ValueError("need n >= 0 and N >= 1")

    def smoothing(self) -> float:
        if self.delta is not None:
            return self.delta
        return 1e-6 if self.kind == "adadelta" else 1e-8


@dataclass
class SolverState:
    velocity: np.ndarray
    running_min: float = math.inf
    rho: float = 0.0
    phase: int = 1
    iter: int = 0
    converged: bool = False
    accumulators: dict[str, np.ndarray] = field(default_factory=dict)


@dataclass(frozen=True)
class ConditionRecord:
    iter: int
    lhs: float
    rhs: float
    satisfied: bool


def bpgrad_step_size(f_t: float, running_min: float, rho: float, L: float) -> float:
    """(f_t - rho * running_min) / L, clamped at 0 against batch noise."""
    return max(0.0, (f_t - rho * running_min) / L)


def bpgrad_update(
    state: SolverState,
    x_t: np.ndarray,
    f_t: float,
    grad: np.ndarray,
    cfg: SolverConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Adaptive normalized-gradient step with momentum and phase bookkeeping.

    Folds f_t into the running minimum first, takes the step
    v <- mu v - eta * grad/||grad||, and at each phase boundary (t = m*n)
    either flags convergence (running_min <= epsilon/(1-rho)) or advances the
    phase with rho = 1 - 1/m. A zero gradient falls back to a random unit
    direction drawn from the run's generator.
    """
    state.running_min = min(state.running_min, f_t)
    eta = bpgrad_step_size(f_t, state.running_min, state.rho, cfg.L)
    gnorm = float(np.linalg.norm(grad))
    ghat = grad / gnorm if gnorm > 0.0 else random_unit(rng, x_t.shape[0])
    state.velocity = cfg.mu * state.velocity - eta * ghat
    x_next = x_t + state.velocity
    state.iter += 1
    if cfg.n > 0 and state.iter == state.phase * cfg.n:
        if state.running_min <= cfg.epsilon / (1.0 - state.rho):
            state.converged = True
        elif state.phase < cfg.N:
            state.phase += 1
            state.rho = 1.0 - 1.0 / state.phase
    return x_next


def _bookkeep(state: SolverState, f_t: float) -> None:
    state.running_min = min(state.running_min, f_t)
    state.iter += 1


def sgd_momentum_update(state, x_t, f_t, grad, cfg: SolverConfig) -> np.ndarray:
    _bookkeep(state, f_t)
    state.velocity = cfg.mu * state.velocity - cfg.learning_rate * grad
    return x_t + state.velocity


def adagrad_update(state, x_t, f_t, grad, cfg: SolverConfig) -> np.ndarray:
    _bookkeep(state, f_t)
    acc = state.accumulators.setdefault("sq_sum", np.zeros_like(x_t))
    acc += grad * grad
    return x_t - cfg.learning_rate * grad / (np.sqrt(acc) + cfg.smoothing())


def adadelta_update(state, x_t, f_t, grad, cfg: SolverConfig) -> np.ndarray:
    # no global learning rate; the ratio of running RMS values sets the scale
    _bookkeep(state, f_t)
    d, eps = cfg.adadelta_decay, cfg.smoothing()
    sq = state.accumulators.setdefault("sq_avg", np.zeros_like(x_t))
    dx2 = state.accumulators.setdefault("dx_avg", np.zeros_like(x_t))
    sq[:] = d * sq + (1.0 - d) * grad * grad
    step = -np.sqrt(dx2 + eps) / np.sqrt(sq + eps) * grad
    dx2[:] = d * dx2 + (1.0 - d) * step * step
    return x_t + step


def rmsprop_update(state, x_t, f_t, grad, cfg: SolverConfig) -> np.ndarray:
    _bookkeep(state, f_t)
    sq = state.accumulators.setdefault("sq_avg", np.zeros_like(x_t))
    sq[:] = cfg.rms_decay * sq + (1.0 - cfg.rms_decay) * grad * grad
    return x_t - cfg.learning_rate * grad / (np.sqrt(sq) + cfg.smoothing())


def adam_update(state, x_t, f_t, grad, cfg: SolverConfig) -> np.ndarray:
    _bookkeep(state, f_t)
    t = state.iter  # already incremented; first step uses t = 1
    m = state.accumulators.setdefault("m", np.zeros_like(x_t))
    v = state.accumulators.setdefault("v", np.zeros_like(x_t))
    m[:] = cfg.beta1 * m + (1.0 - cfg.beta1) * grad
    v[:] = cfg.beta2 * v + (1.0 - cfg.beta2) * grad * grad
    m_hat = m / (1.0 - cfg.beta1**t)
    v_hat = v / (1.0 - cfg.beta2**t)
    return x_t - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.smoothing())


_BASELINES = {
    "sgd-momentum": sgd_momentum_update,
    "adagrad": adagrad_update,
    "adadelta": adadelta_update,
    "rmsprop": rmsprop_update,
    "adam": adam_update,
}


def sampling_condition(
    window, x_next: np.ndarray, rho: float, L: float, iter: int = 0
) -> ConditionRecord:
    """Envelope condition over the recent-sample window at the produced point.

    lhs = max_i { f_i - L ||x_i - x_next|| },  rhs = rho * min_i f_i.
    An empty window yields a vacuously satisfied record.
    """
    if len(window) == 0:
        return ConditionRecord(iter=iter, lhs=-math.inf, rhs=math.inf, satisfied=True)
    pts = np.array([p for p, _ in window], dtype=np.float64)
    fs = np.array([f for _, f in window], dtype=np.float64)
    dists = np.linalg.norm(pts - x_next, axis=1)
    lhs = float(np.max(fs - L * dists))
    rhs = rho * float(np.min(fs))
    return ConditionRecord(iter=iter, lhs=lhs, rhs=rhs, satisfied=lhs <= rhs)


def descent_alignment(window, x_j: np.ndarray, grad_unit: np.ndarray) -> bool:
    """True iff <x_i - x_j, grad_unit> >= 0 for every window sample.

    Holds along a consistent descent path; an oscillating iterate sequence
    breaks it.
    """
    if len(window) == 0:
        return True
    pts = np.array([p for p, _ in window], dtype=np.float64)
    return bool(np.all((pts - x_j) @ grad_unit >= 0.0))


class Solver:
    """One training run of a configured solver kind.

    Owns the mutable state, the bounded window of recent (point, value)
    snapshots used for condition diagnostics, and the run RNG. Snapshots are
    stored at float32 to keep the window cheap.
    """

    def __init__(self, cfg: SolverConfig, dim: int, rng: Optional[np.random.Generator] = None):
        self.cfg = cfg
        self.state = SolverState(velocity=np.zeros(dim))
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.window: deque = deque(maxlen=cfg.condition_window)
        self.last_eta: float = 0.0
        self.last_condition: Optional[ConditionRecord] = None

    @property
    def converged(self) -> bool:
        return self.state.converged

    def step(self, x: np.ndarray, f: float, grad: np.ndarray) -> np.ndarray:
        """Consume one (value, gradient) evaluation at x; return the next iterate."""
        x = np.asarray(x, dtype=np.float64)
        f = float(f)
        grad = np.asarray(grad, dtype=np.float64)
        it = self.state.iter + 1
        if not np.isfinite(f) or not np.all(np.isfinite(grad)):
            raise NumericError(f"non-finite objective or gradient at iteration {it}")

        rho_used = self.state.rho
        self.window.append((x.astype(np.float32), f))
        if self.cfg.kind == "bpgrad":
            x_next = bpgrad_update(self.state, x, f, grad, self.cfg, self.rng)
            self.last_eta = bpgrad_step_size(
                f, self.state.running_min, rho_used, self.cfg.L
            )
        else:
            x_next = _BASELINES[self.cfg.kind](self.state, x, f, grad, self.cfg)
            self.last_eta = float(np.linalg.norm(x_next - x))
        if not np.all(np.isfinite(x_next)):
            raise NumericError(f"update produced non-finite parameters at iteration {it}")
        self.last_condition = sampling_condition(
            self.window, x_next, rho_used, self.cfg.L, iter=it
        )
        return x_next
