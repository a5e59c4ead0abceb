"""Command-line front end: optimize, train, compare, diagnostics.

A flat `key = value` config file can seed any subcommand's flags via
--config; flags given on the command line override file values. The
BPGRAD_OUT environment variable sets the default output root.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .harness import ExperimentConfig, compare, default_out_root, diagnostics, run
from .solvers import SOLVER_KINDS, SolverConfig
from .trace import read_csv

_SOLVER_KV_TYPES = {
    "L": float,
    "mu": float,
    "lr": float,
    "learning_rate": float,
    "eps": float,
    "epsilon": float,
    "n": int,
    "N": int,
    "beta1": float,
    "beta2": float,
    "rms_decay": float,
    "adadelta_decay": float,
    "delta": float,
    "window": int,
}
_SOLVER_KV_ALIASES = {"lr": "learning_rate", "eps": "epsilon", "window": "condition_window"}


def parse_config_file(path) -> dict[str, str]:
    """Flat `key = value` file; blank lines and # comments ignored."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        values[key.strip()] = value.strip()
    return values


def parse_solver_token(token: str) -> tuple[SolverConfig, str]:
    """`kind[:key=value]*` -> (config, run label), e.g. bpgrad:L=10:mu=0.9."""
    parts = token.split(":")
    kind = parts[0]
    if kind not in SOLVER_KINDS:
        raise ValueError(f"unknown solver kind {kind!r}; choose from {SOLVER_KINDS}")
    cfg = SolverConfig(kind=kind)
    label_bits = [kind]
    for part in parts[1:]:
        key, sep, value = part.partition("=")
        if not sep or key not in _SOLVER_KV_TYPES:
            raise ValueError(f"bad solver option {part!r} in {token!r}")
        field_name = _SOLVER_KV_ALIASES.get(key, key)
        cfg = replace(cfg, **{field_name: _SOLVER_KV_TYPES[key](value)})
        label_bits.append(f"{key}{value}")
    return cfg, "-".join(label_bits)


def _parse_hidden(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text or text == "none":
        return ()
    return tuple(int(w) for w in text.split(","))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None, help="output root directory")
    p.add_argument("--name", default=None, help="run directory name")
    p.add_argument("--config", type=Path, default=None, help="flat key = value defaults file")


def _add_train_shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", default="blobs", help="dataset spec, e.g. blobs:spread=0.5")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch", type=int, default=20)
    p.add_argument("--hidden", type=_parse_hidden, default=(8,), help="comma-separated widths")
    p.add_argument("--activation", choices=("relu", "tanh"), default="relu")
    p.add_argument("--weight-decay", type=float, default=5e-4)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bpgrad")
    sub = parser.add_subparsers(dest="command", required=True)

    p_opt = sub.add_parser("optimize", help="global optimization of a benchmark")
    p_opt.add_argument("--fn", required=True, help="benchmark name, e.g. shekel1d")
    p_opt.add_argument("--L", type=float, default=None, help="override the declared constant")
    p_opt.add_argument("--eps", type=float, default=0.01)
    p_opt.add_argument("--rho-schedule", choices=("harmonic", "halving-gap"), default="harmonic")
    p_opt.add_argument("--max-inner", type=int, default=5000)
    p_opt.add_argument("--max-outer", type=int, default=60)
    _add_common(p_opt)

    p_train = sub.add_parser("train", help="train the test model with one solver")
    p_train.add_argument("--solver", default="bpgrad", help="kind or kind:key=value tokens")
    p_train.add_argument("--L", type=float, default=None)
    p_train.add_argument("--mu", type=float, default=None)
    p_train.add_argument("--lr", type=float, default=None)
    p_train.add_argument("--eps", type=float, default=None)
    _add_train_shared(p_train)
    _add_common(p_train)

    p_cmp = sub.add_parser("compare", help="run several solvers on one problem")
    p_cmp.add_argument(
        "--solvers",
        nargs="+",
        required=True,
        help="tokens like bpgrad:L=20 adam:lr=0.001",
    )
    _add_train_shared(p_cmp)
    _add_common(p_cmp)

    p_diag = sub.add_parser("diagnostics", help="analyze a persisted trace")
    p_diag.add_argument("--trace", required=True, type=Path)
    p_diag.add_argument("--out", type=Path, default=None)
    p_diag.add_argument("--config", type=Path, default=None)
    return parser


def _inject_config_file(argv: list[str]) -> list[str]:
    """Expand --config FILE into flags placed before explicit ones."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise ValueError("--config needs a file path")
    values = parse_config_file(argv[idx + 1])
    rest = argv[:idx] + argv[idx + 2 :]
    injected: list[str] = []
    for key, value in values.items():
        injected.extend([f"--{key.replace('_', '-')}", value])
    return rest[:1] + injected + rest[1:]


def _train_config(args, solver_cfg: SolverConfig, label: str) -> ExperimentConfig:
    return ExperimentConfig(
        mode="train",
        target=args.dataset,
        seed=args.seed,
        name=label,
        out_dir=args.out if args.out is not None else default_out_root(),
        solver=solver_cfg,
        epochs=args.epochs,
        batch_size=args.batch,
        hidden=args.hidden,
        activation=args.activation,
        weight_decay=args.weight_decay,
    )


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _inject_config_file(argv)
        args = build_parser().parse_args(argv)
        if args.command == "optimize":
            config = ExperimentConfig(
                mode="optimize",
                target=args.fn,
                seed=args.seed,
                name=args.name,
                out_dir=args.out if args.out is not None else default_out_root(),
                L=args.L,
                epsilon=args.eps,
                rho_schedule=args.rho_schedule,
                max_inner=args.max_inner,
                max_outer=args.max_outer,
            )
            _, summary = run(config)
            for key in ("minimum", "samples", "rho_final", "terminated_by"):
                print(f"{key} = {summary[key]}")
            out = Path(config.out_dir) / config.run_name()
            print(f"artifacts in {out}")
        elif args.command == "train":
            solver_cfg, label = parse_solver_token(args.solver)
            overrides = {}
            if args.L is not None:
                overrides["L"] = args.L
            if args.mu is not None:
                overrides["mu"] = args.mu
            if args.lr is not None:
                overrides["learning_rate"] = args.lr
            if args.eps is not None:
                overrides["epsilon"] = args.eps
            if overrides:
                solver_cfg = replace(solver_cfg, **overrides)
            config = _train_config(args, solver_cfg, args.name or label)
            _, summary = run(config)
            for key in ("final_objective", "best_objective", "train_accuracy", "iters"):
                print(f"{key} = {summary[key]}")
            print(f"artifacts in {Path(config.out_dir) / config.run_name()}")
        elif args.command == "compare":
            configs = []
            for token in args.solvers:
                solver_cfg, label = parse_solver_token(token)
                configs.append(_train_config(args, solver_cfg, label))
            out_root = args.out if args.out is not None else default_out_root()
            name = args.name or f"compare-seed{args.seed}"
            rows = compare(configs, out_dir=Path(out_root) / name)
            width = max(len(r["name"]) for r in rows)
            for r in rows:
                print(
                    f"{r['name']:<{width}}  final={r['final_objective']:.6g}  "
                    f"best={r['best_objective']:.6g}  acc={r['train_accuracy']:.4f}"
                )
            print(f"artifacts in {Path(out_root) / name}")
        elif args.command == "diagnostics":
            trace = read_csv(args.trace)
            out = args.out if args.out is not None else Path(args.trace).parent / "diagnostics"
            report = diagnostics(trace, out_dir=out)
            for key in (
                "epochs",
                "iters",
                "eta_median_first_epoch",
                "eta_median_last_epoch",
                "condition_satisfied_fraction",
            ):
                print(f"{key} = {report[key]}")
            print(f"artifacts in {out}")
        return 0
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
