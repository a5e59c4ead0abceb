"""Experiment runner: configures runs, persists traces and summaries,
computes step-size and condition diagnostics, and emits CSV/SVG artifacts.

Every run is a pure function of its config and seed; wall-clock fields are
the one informational exception and are excluded from determinism checks.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import models
from .branch_prune import BranchPruneConfig, optimize_global
from .core import LipschitzConfig
from .solvers import Solver, SolverConfig
from .svgplot import line_chart
from .testbed import MiniBatch, batches, get_benchmark, load_idx_dataset, make_blobs
from .trace import RunTrace, TraceRow, write_csv

__all__ = [
    "ExperimentConfig",
    "default_out_root",
    "build_dataset",
    "run",
    "compare",
    "diagnostics",
]


@dataclass
class ExperimentConfig:
    mode: str  # optimize | train
    target: str  # benchmark name, or dataset spec like "blobs:classes=2,spread=0.5"
    seed: int = 0
    name: Optional[str] = None
    out_dir: Optional[Path] = None  # None runs in memory only
    # optimize mode
    L: Optional[float] = None  # None: use the benchmark's declared constant
    epsilon: float = 0.01
    rho_schedule: str = "harmonic"
    max_inner: int = 5000
    max_outer: int = 60
    # train mode
    solver: SolverConfig = field(default_factory=SolverConfig)
    epochs: int = 20
    batch_size: int = 20
    hidden: tuple[int, ...] = (8,)
    activation: str = "relu"
    weight_decay: float = 5e-4

    def run_name(self) -> str:
        if self.name:
            return self.name
        tag = self.target.split(":")[0]
        if self.mode == "optimize":
            return f"optimize-{tag}-seed{self.seed}"
        return f"train-{self.solver.kind}-{tag}-seed{self.seed}"


def default_out_root() -> Path:
    return Path(os.environ.get("BPGRAD_OUT", "runs"))


def _parse_kv(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    if not text:
        return out
    for part in text.split(","):
        key, sep, value = part.partition("=")
        if not sep:
            raise ValueError(f"expected key=value, got {part!r}")
        out[key.strip()] = value.strip()
    return out


def build_dataset(target: str, seed) -> MiniBatch:
    """Materialize a dataset spec: `blobs[:k=v,...]` or `idx:images=..,labels=..`."""
    kind, _, rest = target.partition(":")
    if kind == "blobs":
        kv = _parse_kv(rest)
        return make_blobs(
            classes=int(kv.get("classes", 2)),
            per_class=int(kv.get("per_class", 100)),
            d_in=int(kv.get("dim", 2)),
            spread=float(kv.get("spread", 0.5)),
            seed=seed,
        )
    if kind == "idx":
        kv = _parse_kv(rest)
        if "images" not in kv or "labels" not in kv:
            raise ValueError("idx dataset spec needs images=PATH,labels=PATH")
        return load_idx_dataset(kv["images"], kv["labels"])
    raise ValueError(f"unknown dataset spec {target!r}")


def _write_summary(summary: dict, path: Path) -> None:
    lines = []
    for key, value in summary.items():
        if isinstance(value, float):
            lines.append(f"{key} = {value!r}")
        elif isinstance(value, np.ndarray):
            lines.append(f"{key} = {','.join(repr(float(v)) for v in value)}")
        else:
            lines.append(f"{key} = {value}")
    path.write_text("\n".join(lines) + "\n")


def _run_optimize(config: ExperimentConfig) -> tuple[RunTrace, dict]:
    fn = get_benchmark(config.target)
    L = config.L if config.L is not None else fn.declared_L
    bp = BranchPruneConfig(
        lipschitz=LipschitzConfig(L=L, rho=0.0, epsilon=config.epsilon),
        max_inner_iters=config.max_inner,
        max_outer_iters=config.max_outer,
        rho_schedule=config.rho_schedule,
    )
    rng = np.random.default_rng(config.seed)
    t0 = time.perf_counter()
    result = optimize_global(fn, fn.box, bp, rng)
    wall_ms = (time.perf_counter() - t0) * 1e3
    trace = result.trace
    trace.meta = {
        "mode": "optimize",
        "target": config.target,
        "seed": str(config.seed),
        "L": repr(float(L)),
        "epsilon": repr(float(config.epsilon)),
        "rho_schedule": config.rho_schedule,
    }
    summary = {
        "mode": "optimize",
        "target": config.target,
        "seed": config.seed,
        "L": float(L),
        "epsilon": float(config.epsilon),
        "minimum": float(result.minimum),
        "minimizer": result.minimizer,
        "min_f": min(trace.column("f")),
        "samples": len(result.history),
        "phases": len(result.phases),
        "rho_final": float(result.rho_final),
        "terminated_by": result.terminated_by,
        "wall_ms": wall_ms,
    }
    return trace, summary


def _run_train(config: ExperimentConfig) -> tuple[RunTrace, dict]:
    ss = np.random.SeedSequence(config.seed)
    s_data, s_init, s_batch, s_solver = ss.spawn(4)
    dataset = build_dataset(config.target, s_data)
    n_classes = int(dataset.labels.max()) + 1
    spec = models.MlpSpec(
        layer_widths=(dataset.features.shape[1], *config.hidden, n_classes),
        activation=config.activation,
        weight_decay=config.weight_decay,
    )
    params = models.init_params(spec, s_init)

    iters_per_epoch = (len(dataset) + config.batch_size - 1) // config.batch_size
    total_iters = iters_per_epoch * config.epochs
    solver_cfg = config.solver
    if solver_cfg.kind == "bpgrad" and solver_cfg.n == 0:
        solver_cfg = replace(solver_cfg, n=total_iters)
    solver = Solver(solver_cfg, dim=spec.n_params, rng=np.random.default_rng(s_solver))

    trace = RunTrace(
        meta={
            "mode": "train",
            "target": config.target,
            "solver": solver_cfg.kind,
            "seed": str(config.seed),
            "epochs": str(config.epochs),
            "batch_size": str(config.batch_size),
            "iters_per_epoch": str(iters_per_epoch),
            "L": repr(float(solver_cfg.L)),
            "mu": repr(float(solver_cfg.mu)),
            "learning_rate": repr(float(solver_cfg.learning_rate)),
            "hidden": ",".join(str(w) for w in config.hidden),
            "activation": config.activation,
            "weight_decay": repr(float(config.weight_decay)),
        }
    )
    t0 = time.perf_counter()
    stream = batches(dataset, config.batch_size, s_batch, epochs=config.epochs)
    for t, batch in enumerate(stream, start=1):
        t1 = time.perf_counter()
        phase, rho = solver.state.phase, solver.state.rho
        f, grad = models.objective_and_gradient(spec, params, batch)
        params = solver.step(params, f, grad)
        cond = solver.last_condition
        trace.append(
            TraceRow(
                iter=t,
                phase=phase,
                rho=rho,
                f=f,
                running_min=solver.state.running_min,
                eta=solver.last_eta,
                lhs=cond.lhs,
                rhs=cond.rhs,
                satisfied=cond.satisfied,
                wall_ms=(time.perf_counter() - t1) * 1e3,
            )
        )
        if solver.converged:
            break
    wall_ms = (time.perf_counter() - t0) * 1e3

    summary = {
        "mode": "train",
        "target": config.target,
        "solver": solver_cfg.kind,
        "seed": config.seed,
        "epochs": config.epochs,
        "iters": len(trace),
        "L": float(solver_cfg.L),
        "mu": float(solver_cfg.mu),
        "learning_rate": float(solver_cfg.learning_rate),
        "final_objective": models.objective(spec, params, dataset),
        "best_objective": min(trace.column("f")),
        "min_f": min(trace.column("f")),
        "train_accuracy": models.accuracy(spec, params, dataset),
        "rho_final": float(solver.state.rho),
        "converged": solver.converged,
        "wall_ms": wall_ms,
    }
    return trace, summary


def _write_run_artifacts(trace: RunTrace, summary: dict, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(trace, out_dir / "trace.csv")
    _write_summary(summary, out_dir / "summary.txt")
    iters = trace.column("iter")
    line_chart(
        [("f", iters, trace.column("f")), ("running min", iters, trace.column("running_min"))],
        "objective per iteration",
        out_dir / "objective.svg",
        x_label="iteration",
        y_label="objective",
    )
    if summary["mode"] == "train":
        line_chart(
            [("step size", iters, trace.column("eta"))],
            "adaptive step size",
            out_dir / "eta.svg",
            x_label="iteration",
            y_label="eta",
        )
        line_chart(
            [("lhs", iters, trace.column("lhs")), ("rhs", iters, trace.column("rhs"))],
            "sampling condition sides",
            out_dir / "condition.svg",
            x_label="iteration",
        )


def run(config: ExperimentConfig) -> tuple[RunTrace, dict]:
    """Execute one experiment; writes artifacts when out_dir is set."""
    if config.mode == "optimize":
        trace, summary = _run_optimize(config)
    elif config.mode == "train":
        trace, summary = _run_train(config)
    else:
        raise ValueError(f"unknown mode {config.mode!r}")
    if config.out_dir is not None:
        _write_run_artifacts(trace, summary, Path(config.out_dir) / config.run_name())
    return trace, summary


def compare(configs: list[ExperimentConfig], out_dir: Optional[Path] = None) -> list[dict]:
    """Run several solvers on one shared problem; rows sorted by final objective."""
    if not configs:
        raise ValueError("compare needs at least one config")
    if any(c.mode != "train" for c in configs):
        raise ValueError("compare only handles train-mode configs")
    targets = {c.target for c in configs}
    seeds = {c.seed for c in configs}
    if len(targets) > 1 or len(seeds) > 1:
        raise ValueError("compare requires a shared target and seed across configs")
    names = [c.run_name() for c in configs]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate run names in compare: {names}")

    rows = []
    for config in configs:
        if out_dir is not None:
            config = replace(config, out_dir=Path(out_dir))
        _, summary = run(config)
        rows.append(
            {
                "name": config.run_name(),
                "solver": summary["solver"],
                "seed": summary["seed"],
                "final_objective": summary["final_objective"],
                "best_objective": summary["best_objective"],
                "train_accuracy": summary["train_accuracy"],
                "wall_ms": summary["wall_ms"],
            }
        )
    rows.sort(key=lambda r: r["final_objective"])

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        header = "name,solver,seed,final_objective,best_objective,train_accuracy,wall_ms"
        lines = [header] + [
            ",".join(
                (
                    r["name"],
                    r["solver"],
                    str(r["seed"]),
                    repr(r["final_objective"]),
                    repr(r["best_objective"]),
                    repr(r["train_accuracy"]),
                    repr(r["wall_ms"]),
                )
            )
            for r in rows
        ]
        (out / "comparison.csv").write_text("\n".join(lines) + "\n")
        width = max(len(r["name"]) for r in rows)
        table = [f"{'name':<{width}}  final_obj    best_obj     accuracy"]
        for r in rows:
            table.append(
                f"{r['name']:<{width}}  {r['final_objective']:<11.6g}  "
                f"{r['best_objective']:<11.6g}  {r['train_accuracy']:.4f}"
            )
        (out / "table.txt").write_text("\n".join(table) + "\n")
    return rows


def diagnostics(trace: RunTrace, out_dir: Optional[Path] = None) -> dict:
    """Step-size and condition-satisfaction report for a training trace.

    Returns per-epoch step-size medians, the fraction of iterations whose
    envelope condition held, and per-epoch objective summaries.
    """
    if len(trace) == 0:
        raise ValueError("diagnostics needs a nonempty trace")
    if trace.meta.get("mode") != "train":
        raise ValueError("diagnostics expects a training trace")
    ipe = int(trace.meta.get("iters_per_epoch", len(trace)))
    etas = np.asarray(trace.column("eta"))
    fs = np.asarray(trace.column("f"))
    sats = trace.column("satisfied")

    n_epochs = (len(trace) + ipe - 1) // ipe
    eta_medians, f_means, f_mins = [], [], []
    for e in range(n_epochs):
        sl = slice(e * ipe, (e + 1) * ipe)
        eta_medians.append(float(np.median(etas[sl])))
        f_means.append(float(np.mean(fs[sl])))
        f_mins.append(float(np.min(fs[sl])))

    report = {
        "epochs": n_epochs,
        "iters": len(trace),
        "eta_median_per_epoch": eta_medians,
        "eta_median_first_epoch": eta_medians[0],
        "eta_median_last_epoch": eta_medians[-1],
        "condition_satisfied_fraction": float(np.mean(sats)),
        "f_mean_per_epoch": f_means,
        "f_min_per_epoch": f_mins,
    }

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        epochs_axis = list(range(1, n_epochs + 1))
        line_chart(
            [("median eta", epochs_axis, eta_medians)],
            "per-epoch median step size",
            out / "eta_median.svg",
            x_label="epoch",
            y_label="median eta",
        )
        iters = trace.column("iter")
        line_chart(
            [("lhs", iters, trace.column("lhs")), ("rhs", iters, trace.column("rhs"))],
            "sampling condition sides",
            out / "condition.svg",
            x_label="iteration",
        )
        line_chart(
            [("mean f", epochs_axis, f_means), ("min f", epochs_axis, f_mins)],
            "per-epoch objective",
            out / "objective_epoch.svg",
            x_label="epoch",
            y_label="objective",
        )
        lines = [
            f"epochs = {n_epochs}",
            f"iters = {len(trace)}",
            f"eta_median_first_epoch = {eta_medians[0]!r}",
            f"eta_median_last_epoch = {eta_medians[-1]!r}",
            f"condition_satisfied_fraction = {report['condition_satisfied_fraction']!r}",
        ]
        (out / "diagnostics.txt").write_text("\n".join(lines) + "\n")
    return report
