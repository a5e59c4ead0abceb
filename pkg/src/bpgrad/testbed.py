"""Benchmark objectives with declared Lipschitz constants, synthetic data,
mini-batch streaming and the IDX byte-format reader.

Every benchmark is nonnegative over its box and ships an analytic gradient.
Declared constants are either exact gradient bounds (abs1d, quad2d) or
empirically certified maxima with 10% headroom (shekel1d, ripples1d,
rastrigin2d); `certify_L` re-checks any of them against random pairs.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

import numpy as np

from .core import Box

__all__ = [
    "BenchmarkFn",
    "MiniBatch",
    "CertificationError",
    "registry",
    "get_benchmark",
    "certify_L",
    "make_blobs",
    "batches",
    "read_idx_images",
    "read_idx_labels",
    "load_idx_dataset",
]


class CertificationError(RuntimeError):
    """A random pair violated the declared Lipschitz constant."""


@dataclass(frozen=True)
class BenchmarkFn:
    """A box-constrained objective with value and analytic gradient."""

    name: str
    box: Box
    declared_L: float
    evaluate: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    f_star: Optional[float] = None  # analytic optimum where known
    x_star: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.box.dim


@dataclass(frozen=True)
class MiniBatch:
    """A features matrix (batch x d_in) with integer class labels."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labs = np.asarray(self.labels, dtype=np.int64)
        if feats.ndim != 2:
            raise ValueError("features must be a 2-D (batch, d_in) matrix")
        if labs.shape != (feats.shape[0],):
            raise ValueError("labels must be 1-D and match the batch size")
        if labs.size and labs.min() < 0:
            raise ValueError("labels must be nonnegative class indices")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)

    def __len__(self) -> int:
        return self.features.shape[0]


def _abs1d() -> BenchmarkFn:
    """f(x) = |x - 0.3| on [0, 1]; L = 1, minimum 0 at 0.3."""

    def evaluate(x):
        return abs(float(x[0]) - 0.3)

    def gradient(x):
        return np.array([np.sign(float(x[0]) - 0.3)])

    return BenchmarkFn(
        name="abs1d",
        box=Box(np.array([0.0]), np.array([1.0])),
        declared_L=1.0,
        evaluate=evaluate,
        gradient=gradient,
        f_star=0.0,
        x_star=np.array([0.3]),
    )


# three inverse-quadratic wells; global minimum near x = 0.5546, value ~0.0486
_SHEKEL_A = np.array([0.17, 0.55, 0.86])
_SHEKEL_K = np.array([45.0, 30.0, 60.0])
_SHEKEL_W = np.array([0.6, 1.0, 0.75])
_SHEKEL_C = 1.24


def _shekel1d() -> BenchmarkFn:
    """Smooth multimodal 1D objective on [0, 1] with three wells.

    Empirical max |f'| is 4.621; declared with headroom as L = 5.1.
    """

    def evaluate(x):
        u = float(x[0]) - _SHEKEL_A
        return float(_SHEKEL_C - np.sum(_SHEKEL_W / (1.0 + _SHEKEL_K * u * u)))

    def gradient(x):
        u = float(x[0]) - _SHEKEL_A
        den = (1.0 + _SHEKEL_K * u * u) ** 2
        return np.array([float(np.sum(2.0 * _SHEKEL_W * _SHEKEL_K * u / den))])

    return BenchmarkFn(
        name="shekel1d",
        box=Box(np.array([0.0]), np.array([1.0])),
        declared_L=5.1,
        evaluate=evaluate,
        gradient=gradient,
    )


# oscillation-over-trend objective on [0.5, 2.5], shifted up to stay >= 0;
# empirical max |f'| is 15.96, declared with headroom as L = 17.6
_RIPPLES_OFFSET = 0.8690111348506873


def _ripples1d() -> BenchmarkFn:
    """sin(10 pi x)/(2x) + (x-1)^4, rescaled to a nonnegative range."""

    def evaluate(x):
        t = float(x[0])
        raw = np.sin(10 * np.pi * t) / (2 * t) + (t - 1.0) ** 4
        return 0.5 * (raw + _RIPPLES_OFFSET) + 0.05

    def gradient(x):
        t = float(x[0])
        raw = (
            10 * np.pi * np.cos(10 * np.pi * t) * 2 * t - 2 * np.sin(10 * np.pi * t)
        ) / (4 * t * t) + 4 * (t - 1.0) ** 3
        return np.array([0.5 * raw])

    return BenchmarkFn(
        name="ripples1d",
        box=Box(np.array([0.5]), np.array([2.5])),
        declared_L=17.6,
        evaluate=evaluate,
        gradient=gradient,
    )


_QUAD_CENTER = np.array([1.2, -0.8])


def _quad2d() -> BenchmarkFn:
    """f(x) = ||x - c||^2 + 1 on [-5, 5]^2; L = 2 max ||x - c|| (exact)."""
    box = Box(np.array([-5.0, -5.0]), np.array([5.0, 5.0]))
    corners = np.array([[-5, -5], [-5, 5], [5, -5], [5, 5]], dtype=np.float64)
    L = 2.0 * float(np.max(np.linalg.norm(corners - _QUAD_CENTER, axis=1)))

    def evaluate(x):
        d = x - _QUAD_CENTER
        return float(d @ d) + 1.0

    def gradient(x):
        return 2.0 * (x - _QUAD_CENTER)

    return BenchmarkFn(
        name="quad2d",
        box=box,
        declared_L=L,
        evaluate=evaluate,
        gradient=gradient,
        f_star=1.0,
        x_star=_QUAD_CENTER.copy(),
    )


_RASTRIGIN_CENTER = np.array([0.15, -0.35])


def _rastrigin2d() -> BenchmarkFn:
    """Shifted Rastrigin, sum of u^2 - 10 cos(2 pi u) + 10 per coordinate.

    Nonnegative by construction with minimum 0 at the shift center.
    Empirical sup ||grad|| is 103.7 on [-5.12, 5.12]^2; declared L = 115.
    """

    def evaluate(x):
        u = x - _RASTRIGIN_CENTER
        return float(np.sum(u * u - 10.0 * np.cos(2.0 * np.pi * u) + 10.0))

    def gradient(x):
        u = x - _RASTRIGIN_CENTER
        return 2.0 * u + 20.0 * np.pi * np.sin(2.0 * np.pi * u)

    return BenchmarkFn(
        name="rastrigin2d",
        box=Box(np.array([-5.12, -5.12]), np.array([5.12, 5.12])),
        declared_L=115.0,
        evaluate=evaluate,
        gradient=gradient,
        f_star=0.0,
        x_star=_RASTRIGIN_CENTER.copy(),
    )


def registry() -> list[BenchmarkFn]:
    """All registered benchmark objectives."""
    return [_abs1d(), _shekel1d(), _ripples1d(), _quad2d(), _rastrigin2d()]


def get_benchmark(name: str) -> BenchmarkFn:
    for fn in registry():
        if fn.name == name:
            return fn
    names = ", ".join(fn.name for fn in registry())
    raise ValueError(f"unknown benchmark {name!r}; available: {names}")


def certify_L(fn: BenchmarkFn, pairs: int, rng: np.random.Generator) -> float:
    """Max observed |f(a) - f(b)| / ||a - b|| over random in-box pairs.

    Raises CertificationError, naming the offending pair, if the observed
    ratio exceeds the declared constant.
    """
    if pairs < 10_000:
        raise ValueError("certification needs at least 10^4 pairs")
    a = fn.box.uniform(rng, pairs)
    b = fn.box.uniform(rng, pairs)
    fa = np.array([fn.evaluate(p) for p in a])
    fb = np.array([fn.evaluate(p) for p in b])
    gaps = np.linalg.norm(a - b, axis=1)
    ok = gaps > 0.0
    ratios = np.abs(fa[ok] - fb[ok]) / gaps[ok]
    worst = int(np.argmax(ratios))
    observed = float(ratios[worst])
    if observed > fn.declared_L:
        pa, pb = a[ok][worst], b[ok][worst]
        raise CertificationError(
            f"{fn.name}: ratio {observed:.6g} exceeds declared L={fn.declared_L:.6g} "
            f"for pair {pa.tolist()} / {pb.tolist()}"
        )
    return observed


def make_blobs(
    classes: int, per_class: int, d_in: int, spread: float, seed
) -> MiniBatch:
    """Gaussian class clusters with means spread on a radius-3 sphere."""
    if classes < 2 or per_class < 1 or d_in < 1:
        raise ValueError("classes >= 2, per_class >= 1 and d_in >= 1 required")
    rng = np.random.default_rng(seed)
    means = rng.normal(size=(classes, d_in))
    means *= 3.0 / np.linalg.norm(means, axis=1, keepdims=True)
    features = np.vstack(
        [means[c] + spread * rng.normal(size=(per_class, d_in)) for c in range(classes)]
    )
    labels = np.repeat(np.arange(classes, dtype=np.int64), per_class)
    return MiniBatch(features=features, labels=labels)


def batches(
    dataset: MiniBatch,
    batch_size: int,
    seed,
    epochs: Optional[int] = None,
) -> Iterator[MiniBatch]:
    """Deterministic shuffled mini-batch stream, one full pass per epoch.

    Every example appears exactly once per epoch; the shuffle sequence is a
    pure function of the seed. epochs=None streams forever.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    rng = np.random.default_rng(seed)
    n = len(dataset)
    epoch = 0
    while epochs is None or epoch < epochs:
        perm = rng.permutation(n)
        for start in range(0, n, batch_size):
            sel = perm[start : start + batch_size]
            yield MiniBatch(features=dataset.features[sel], labels=dataset.labels[sel])
        epoch += 1


_IDX_IMAGES_MAGIC = 0x00000803
_IDX_LABELS_MAGIC = 0x00000801


def read_idx_images(path) -> np.ndarray:
    """(n, rows*cols) float64 matrix in [0, 1] from a big-endian IDX file."""
    with open(path, "rb") as fh:
        magic, count, rows, cols = struct.unpack(">IIII", fh.read(16))
        if magic != _IDX_IMAGES_MAGIC:
            raise ValueError(f"{path}: bad IDX image magic {magic:#010x}")
        raw = np.frombuffer(fh.read(count * rows * cols), dtype=np.uint8)
    if raw.size != count * rows * cols:
        raise ValueError(f"{path}: truncated IDX image payload")
    return raw.reshape(count, rows * cols).astype(np.float64) / 255.0


def read_idx_labels(path) -> np.ndarray:
    """(n,) int64 label vector from a big-endian IDX file."""
    with open(path, "rb") as fh:
        magic, count = struct.unpack(">II", fh.read(8))
        if magic != _IDX_LABELS_MAGIC:
            raise ValueError(f"{path}: bad IDX label magic {magic:#010x}")
        raw = np.frombuffer(fh.read(count), dtype=np.uint8)
    if raw.size != count:
        raise ValueError(f"{path}: truncated IDX label payload")
    return raw.astype(np.int64)


def load_idx_dataset(images_path, labels_path) -> MiniBatch:
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise ValueError("IDX image and label counts differ")
    return MiniBatch(features=images, labels=labels)
