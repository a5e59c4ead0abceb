"""Exact branch-and-prune global optimization for Lipschitz objectives.

The inner loop draws new samples outside the pruned region along gradient
rays (random directions as fallback); the outer loop escalates rho, which
shrinks the prune balls and opens the space back up, until the running
minimum certifies the requested precision or budgets run out.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    AssumptionViolation,
    Box,
    LipschitzConfig,
    SampleHistory,
    as_vector,
    in_pruned_region,
    lower_envelope,
    lower_estimator,
    random_unit,
)
from .trace import RunTrace, TraceRow

__all__ = [
    "BranchPruneConfig",
    "PhaseInfo",
    "GlobalResult",
    "ray_exit",
    "next_sample",
    "optimize_global",
    "packing_sample_bound",
]

RHO_SCHEDULES = ("harmonic", "halving-gap")



@dataclass(frozen=True)
class BranchPruneConfig:
    lipschitz: LipschitzConfig
    gamma: float = 0.0  # distortion/step trade-off; inert under the ray sampler
    max_inner_iters: int = 5000
    max_outer_iters: int = 60
    rho_schedule: str = "harmonic"
    fallback_attempts: int = 20
    boundary_slack: float = 1e-9
    exhaustion_probes: int = 64  # uniform double-check before declaring a phase done

    def __post_init__(self):
        if self.gamma < 0.0:
            raise ValueError("gamma must be nonnegative")
        if self.max_inner_iters < 1 or self.max_outer_iters < 1:
            raise ValueError("iteration caps must be >= 1")
        if not (0.0 < self.boundary_slack <= 1e-3):
            raise ValueError("boundary_slack must lie in (0, 1e-3]")
        if self.rho_schedule not in RHO_SCHEDULES:
            raise ValueError(f"unknown rho schedule {self.rho_schedule!r}")
        if self.fallback_attempts < 1:
            raise ValueError("fallback_attempts must be >= 1")


@dataclass(frozen=True)
class PhaseInfo:
    """One fixed-rho stretch of a run: sample index range and how it ended."""

    phase: int
    rho: float
    start: int  # 1-based index of the first sample in the phase
    end: int  # 1-based index of the last sample (end < start: empty phase)
    exhausted: bool  # True when sampling failed, i.e. the region closed up


@dataclass(frozen=True)
class GlobalResult:
    minimizer: np.ndarray
    minimum: float
    history: SampleHistory
    rho_final: float
    terminated_by: str  # epsilon-criterion | budget-exhausted | space-exhausted
    phases: tuple[PhaseInfo, ...]
    trace: RunTrace


def ray_exit(
    history: SampleHistory,
    origin,
    direction,
    cfg: LipschitzConfig,
    box: Box,
    slack: float = 1e-9,
) -> Optional[float]:
    """Smallest travel eta >= 0 with origin - eta*direction outside all balls.

    Each ball contributes an open interval of covered eta values from the
    quadratic  eta^2 - 2 eta <u, d> + ||u||^2 - r^2 < 0  with u the offset of
    the origin from the center. The merged intervals are swept from eta = 0;
    the first uncovered point, nudged by a relative slack past the boundary,
    is returned. None means the whole in-box ray segment is covered.
    """
    o = as_vector(origin, dim=history.dim)
    d = as_vector(direction, dim=history.dim)
    if abs(np.linalg.norm(d) - 1.0) > 1e-9:
        raise ValueError("direction must have unit norm")

    # travel limit keeping o - eta*d inside the box
    with np.errstate(divide="ignore", invalid="ignore"):
        lim = np.where(
            d > 0,
            (o - box.lower) / d,
            np.where(d < 0, (o - box.upper) / d, np.inf),
        )
    eta_max = float(np.min(lim))
    if eta_max < 0.0:
        return None  # origin outside the box; nothing reachable

    m = history.min_value
    radii = (history.values - cfg.rho * m) / cfg.L
    u = o - history.points
    b = u @ d
    c = np.einsum("ij,ij->i", u, u) - radii * radii
    disc = b * b - c
    hit = disc > 0.0
    if np.any(hit):
        sq = np.sqrt(disc[hit])
        lo = b[hit] - sq
        hi = b[hit] + sq
        ahead = hi > 0.0
        lo, hi = lo[ahead], hi[ahead]
        order = np.argsort(lo, kind="stable")
        lo, hi = lo[order], hi[order]
    else:
        lo = hi = np.empty(0)

    cand = 0.0
    for k in range(lo.shape[0]):
        bump = cand * (1.0 + slack)
        if lo[k] >= bump:
            break  # sorted by lo: no later interval can cover the candidate
        if hi[k] > bump:
            cand = float(hi[k])
            if cand > eta_max:
                return None
    bump = cand * (1.0 + slack)
    return bump if bump <= eta_max else None


def next_sample(
    history: SampleHistory,
    grad_at_last,
    cfg: BranchPruneConfig,
    rng: np.random.Generator,
    box: Box,
    rho: Optional[float] = None,
) -> Optional[np.ndarray]:
    """Candidate point outside the pruned region, preferring the gradient ray.

    Falls back to uniformly random unit directions when the gradient ray is
    fully covered inside the box; a zero gradient is replaced by a random
    direction up front. Returns None when every attempt is blocked, which
    signals the caller to escalate rho.
    """
    lip = cfg.lipschitz if rho is None else cfg.lipschitz.with_rho(rho)
    origin = history[len(history) - 1].point
    g = as_vector(grad_at_last, dim=history.dim)
    gnorm = float(np.linalg.norm(g))
    first = g / gnorm if gnorm > 0.0 else random_unit(rng, history.dim)

    for attempt in range(1 + cfg.fallback_attempts):
        direction = first if attempt == 0 else random_unit(rng, history.dim)
        eta = ray_exit(history, origin, direction, lip, box, cfg.boundary_slack)
        if eta is None:
            continue
        cand = box.clip(origin - eta * direction)
        if in_pruned_region(history, cand, lip):
            continue  # clipping at the box edge can re-enter in rare cases
        return cand
    return None


def _escape_probe(
    history: SampleHistory,
    lip: LipschitzConfig,
    box: Box,
    rng: np.random.Generator,
    n: int,
) -> Optional[np.ndarray]:
    """Uniform probe for any point still outside the pruned region.

    Ray sampling anchors at the last sample and can get walled in even when
    uncovered space remains elsewhere; any uncovered probe is itself a valid
    next sample, so returning it keeps the sampling condition intact while
    making a failed search a much stronger exhaustion certificate.
    """
    if n <= 0:
        return None
    probes = box.uniform(rng, n)
    dists = np.linalg.norm(probes[:, None, :] - history.points[None, :, :], axis=2)
    env = np.max(history.values[None, :] - lip.L * dists, axis=1)
    outside = env <= lower_estimator(history, lip.rho)
    idx = np.nonzero(outside)[0]
    return probes[idx[0]] if idx.size else None


def optimize_global(
    fn,
    box: Box,
    cfg: BranchPruneConfig,
    rng: np.random.Generator,
) -> GlobalResult:
    """Run the full branch-and-prune loop on an objective over a box.

    `fn` must expose evaluate(x) -> float and gradient(x) -> array; values
    must be finite and nonnegative over the box for the declared L. The run
    stops with `epsilon-criterion` when min f <= epsilon (unconditional,
    since f >= 0) or when a phase closes up with min f <= epsilon/(1-rho);
    otherwise budgets decide between `budget-exhausted` (still sampling)
    and `space-exhausted` (final phase closed with no escalations left).
    """
    eps = cfg.lipschitz.epsilon
    hist = SampleHistory(box.dim)
    trace = RunTrace()

    def evaluate(point) -> tuple[float, np.ndarray]:
        value = float(fn.evaluate(point))
        grad = np.asarray(fn.gradient(point), dtype=np.float64)
        if not np.all(np.isfinite(grad)):
            raise AssumptionViolation(
                f"gradient is non-finite at sample {len(hist) + 1}"
            )
        return value, grad

    t0 = time.perf_counter()
    x0 = box.uniform(rng)
    f0, g0 = evaluate(x0)
    hist.append(x0, f0, g0)
    trace.append(
        TraceRow(
            iter=1,
            phase=1,
            rho=0.0,
            f=f0,
            running_min=hist.min_value,
            eta=0.0,
            lhs=-math.inf,
            rhs=math.inf,
            satisfied=True,
            wall_ms=(time.perf_counter() - t0) * 1e3,
        )
    )

    rho = 0.0
    m = 1
    phases: list[PhaseInfo] = []
    phase_start = 1
    terminated = None

    while terminated is None:
        exhausted = False
        inner = 0
        while True:
            if hist.min_value <= eps:
                terminated = "epsilon-criterion"
                break
            if inner >= cfg.max_inner_iters:
                break
            last_grad = hist[len(hist) - 1].gradient
            cand = next_sample(hist, last_grad, cfg, rng, box, rho=rho)
            if cand is None:
                cand = _escape_probe(
                    hist, cfg.lipschitz.with_rho(rho), box, rng, cfg.exhaustion_probes
                )
                if cand is None:
                    exhausted = True
                    break
            t1 = time.perf_counter()
            lhs = lower_envelope(hist, cand, cfg.lipschitz.L)
            rhs = lower_estimator(hist, rho)
            fc, gc = evaluate(cand)
            prev = hist[len(hist) - 1].point
            s = hist.append(cand, fc, gc)
            trace.append(
                TraceRow(
                    iter=s.index,
                    phase=m,
                    rho=rho,
                    f=fc,
                    running_min=hist.min_value,
                    eta=float(np.linalg.norm(cand - prev)),
                    lhs=lhs,
                    rhs=rhs,
                    satisfied=lhs <= rhs,
                    wall_ms=(time.perf_counter() - t1) * 1e3,
                )
            )
            inner += 1

        phases.append(
            PhaseInfo(phase=m, rho=rho, start=phase_start, end=len(hist), exhausted=exhausted)
        )
        if terminated is not None:
            break
        if exhausted and hist.min_value <= eps / (1.0 - rho):
            terminated = "epsilon-criterion"
            break
        if m >= cfg.max_outer_iters:
            terminated = "space-exhausted" if exhausted else "budget-exhausted"
            break
        m += 1
        rho = 1.0 - 1.0 / m if cfg.rho_schedule == "harmonic" else (1.0 + rho) / 2.0
        phase_start = len(hist) + 1

    return GlobalResult(
        minimizer=hist.minimizer,
        minimum=hist.min_value,
        history=hist,
        rho_final=rho,
        terminated_by=terminated,
        phases=tuple(phases),
        trace=trace,
    )


def packing_sample_bound(
    L: float, rho: float, f_min: float, d: int, box_volume: float
) -> float:
    """Sphere-packing cap on how many samples a fixed-rho run can accept.

    Samples are pairwise at least (1-rho)*f_min/L apart, so balls of half
    that radius are disjoint and their total volume cannot exceed the box:

        count <= [2L / ((1-rho) f_min)]^d * V / C,   C = pi^(d/2)/Gamma(d/2+1).

    A test oracle only, never a runtime budget. f_min <= 0 degenerates the
    bound; +inf is returned with a warning.
    """
    if not (0.0 <= rho < 1.0):
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    if f_min <= 0.0:
        warnings.warn(
            "sample bound is undefined for f_min <= 0; returning inf",
            RuntimeWarning,
            stacklevel=2,
        )
        return math.inf
    unit_ball = math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)
    return (2.0 * L / ((1.0 - rho) * f_min)) ** d * box_volume / unit_ball
