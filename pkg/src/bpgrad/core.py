"""Lipschitz bound machinery: sample history, envelope estimators, prune balls.

Points live in a fixed-dimension box of R^d. All distances are Euclidean.
A function with Lipschitz constant L certifies that around a sample (x_j, f_j)
no point closer than (f_j - rho*min_f)/L can have a value below rho*min_f,
which is what the pruning region exploits.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, Optional

import numpy as np

__all__ = [
    "AssumptionViolation",
    "NumericError",
    "Box",
    "Sample",
    "SampleHistory",
    "LipschitzConfig",
    "PruneBall",
    "as_vector",
    "random_unit",
    "lower_envelope",
    "upper_bound",
    "lower_estimator",
    "ball_radius",
    "in_pruned_region",
    "coverage_fraction",
]


class AssumptionViolation(RuntimeError):
    """An objective broke its contract (negative, NaN or infinite value)."""


class NumericError(RuntimeError):
    """A solver update hit non-finite numbers; message carries the iteration."""


def random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Uniform random direction on the unit sphere."""
    while True:
        v = rng.normal(size=dim)
        n = np.linalg.norm(v)
        if n > 1e-12:
            return v / n


def as_vector(x, dim: Optional[int] = None) -> np.ndarray:
    """Validate and convert a point to a float64 1-D array.

    Raises ValueError on non-finite coordinates or a dimension mismatch.
    """
    v = np.asarray(x, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D parameter vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("parameter vector has non-finite coordinates")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {v.shape[0]}")
    return v


@dataclass(frozen=True)
class Box:
    """Axis-aligned box domain with per-coordinate bounds."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_vector(self.lower)
        up = as_vector(self.upper, dim=lo.shape[0])
        if np.any(lo >= up):
            raise ValueError("box lower bounds must be strictly below upper bounds")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    @property
    def dim(self) -> int:
        return int(self.lower.shape[0])

    @property
    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def contains(self, x: np.ndarray, atol: float = 0.0) -> bool:
        return bool(np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol))

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def uniform(self, rng: np.random.Generator, n: Optional[int] = None) -> np.ndarray:
        """One point (n=None) or an (n, d) array of uniform points in the box."""
        size = self.dim if n is None else (n, self.dim)
        return rng.uniform(self.lower, self.upper, size=size)

    def grid(self, points_per_axis: int) -> np.ndarray:
        """Regular probe grid, endpoints included; (k^d, d) array. d <= 2 only."""
        axes = [
            np.linspace(self.lower[k], self.upper[k], points_per_axis)
            for k in range(self.dim)
        ]
        if self.dim == 1:
            return axes[0].reshape(-1, 1)
        if self.dim == 2:
            gx, gy = np.meshgrid(axes[0], axes[1], indexing="ij")
            return np.column_stack([gx.ravel(), gy.ravel()])
        raise ValueError("regular grids are only supported for d <= 2")


@dataclass(frozen=True)
class Sample:
    """One evaluated point: position, objective value, optional gradient."""

    point: np.ndarray
    value: float
    gradient: Optional[np.ndarray] = None
    index: int = 1  # 1-based position in the owning history


class SampleHistory:
    """Ordered, append-only record of evaluated samples with a running minimum.

    Appends are single-writer; reads of committed state are safe from any
    thread. The stacked point matrix is cached between appends.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self._dim = int(dim)
        self._samples: list[Sample] = []
        self._values: list[float] = []
        self._min_value = np.inf
        self._min_index = 0
        self._points_cache: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self._samples)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self._samples)

    def __getitem__(self, i: int) -> Sample:
        return self._samples[i]

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def samples(self) -> list[Sample]:
        return list(self._samples)

    @property
    def min_value(self) -> float:
        if not self._samples:
            raise RuntimeError("empty history has no minimum")
        return self._min_value

    @property
    def min_index(self) -> int:
        """1-based index of the earliest sample attaining the minimum value."""
        if not self._samples:
            raise RuntimeError("empty history has no minimum")
        return self._min_index

    @property
    def minimizer(self) -> np.ndarray:
        return self._samples[self._min_index - 1].point

    @property
    def points(self) -> np.ndarray:
        """(t, d) matrix of all sample positions."""
        if self._points_cache is None:
            self._points_cache = np.vstack([s.point for s in self._samples])
        return self._points_cache

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self._values, dtype=np.float64)

    def append(self, point, value: float, gradient=None) -> Sample:
        """Record an evaluation. Values must be finite and nonnegative."""
        p = as_vector(point, dim=self._dim)
        v = float(value)
        if not np.isfinite(v) or v < 0.0:
            raise AssumptionViolation(
                f"objective value must be finite and nonnegative, got {v!r}"
            )
        g = None if gradient is None else as_vector(gradient, dim=self._dim)
        s = Sample(point=p.copy(), value=v, gradient=g, index=len(self._samples) + 1)
        self._samples.append(s)
        self._values.append(v)
        if v < self._min_value:
            self._min_value = v
            self._min_index = s.index
        self._points_cache = None
        return s


@dataclass(frozen=True)
class LipschitzConfig:
    """L > 0, lower-bound scale rho in [0, 1), target precision epsilon >= 0."""

    L: float
    rho: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        if not (self.L > 0.0 and np.isfinite(self.L)):
            raise ValueError(f"L must be positive and finite, got {self.L}")
        if not (0.0 <= self.rho < 1.0):
            raise ValueError(f"rho must lie in [0, 1), got {self.rho}")
        if self.epsilon < 0.0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")

    def with_rho(self, rho: float) -> "LipschitzConfig":
        return replace(self, rho=rho)


@dataclass(frozen=True)
class PruneBall:
    """Open ball around a sample inside which no value can beat rho*min_f."""

    center_index: int
    radius: float


def lower_envelope(history: SampleHistory, x, L: float) -> float:
    """max_i { f_i - L * ||x_i - x|| } over the history.

    The pointwise Lipschitz lower cone, evaluated at a candidate point.
    """
    if len(history) == 0:
        raise RuntimeError("lower_envelope needs a nonempty history")
    if L <= 0.0:
        raise ValueError("L must be positive")
    xv = as_vector(x, dim=history.dim)
    dists = np.linalg.norm(history.points - xv, axis=1)
    return float(np.max(history.values - L * dists))


def upper_bound(history: SampleHistory) -> float:
    """min_i f_i, the running upper bound on the global minimum."""
    return history.min_value


def lower_estimator(history: SampleHistory, rho: float) -> float:
    """rho * min_i f_i, the tractable stand-in for the lower bound."""
    if not (0.0 <= rho < 1.0):
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    return rho * history.min_value


def ball_radius(sample: Sample, history: SampleHistory, cfg: LipschitzConfig) -> float:
    """(f_j - rho * min_f) / L for a sample of the history; always >= 0."""
    return (sample.value - cfg.rho * history.min_value) / cfg.L


def prune_balls(history: SampleHistory, cfg: LipschitzConfig) -> list[PruneBall]:
    """All prune balls of the history at the configured rho."""
    m = history.min_value
    return [
        PruneBall(center_index=s.index, radius=(s.value - cfg.rho * m) / cfg.L)
        for s in history
    ]


def in_pruned_region(history: SampleHistory, x, cfg: LipschitzConfig) -> bool:
    """True iff x lies strictly inside some prune ball.

    Implemented as lower_envelope(x) > rho * min_f, which is algebraically
    the same membership test; keeping a single comparison direction makes
    the two formulations agree bit for bit.
    """
    return lower_envelope(history, x, cfg.L) > lower_estimator(history, cfg.rho)


def coverage_fraction(
    history: SampleHistory,
    cfg: LipschitzConfig,
    probe_points: np.ndarray,
    chunk: int = 1024,
) -> float:
    """Fraction of probe points inside the pruned region.

    A value of 1.0 over a dense probe set approximates full coverage of the
    domain by the prune balls. Probes are processed in chunks to bound the
    distance-matrix memory.
    """
    probes = np.asarray(probe_points, dtype=np.float64)
    if probes.ndim == 1:
        probes = probes.reshape(-1, 1)
    if probes.shape[0] == 0:
        raise ValueError("probe_points must be nonempty")
    if probes.shape[1] != history.dim:
        raise ValueError("probe dimension does not match history dimension")

    pts = history.points
    vals = history.values
    threshold = lower_estimator(history, cfg.rho)
    inside = 0
    for start in range(0, probes.shape[0], chunk):
        block = probes[start : start + chunk]
        # (b, t) distances via broadcasting; envelope per probe row
        d = np.linalg.norm(block[:, None, :] - pts[None, :, :], axis=2)
        env = np.max(vals[None, :] - cfg.L * d, axis=1)
        inside += int(np.sum(env > threshold))
    return inside / probes.shape[0]
