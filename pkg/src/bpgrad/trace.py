"""Per-iteration run traces and their versioned CSV serialization.

The CSV layout is fixed: a `# bpgrad-trace v1` version line, `# key = value`
metadata lines, a column header, then one row per iteration. Floats are
written with repr() so parsing the file reproduces the in-memory trace
exactly. Wall-clock columns are informational and excluded from determinism
comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

FORMAT_TAG = "# bpgrad-trace v1"
COLUMNS = (
    "iter",
    "phase",
    "rho",
    "f",
    "running_min",
    "eta",
    "lhs",
    "rhs",
    "satisfied",
    "wall_ms",
)


@dataclass(frozen=True)
class TraceRow:
    """One iteration: objective, step size and sampling-condition sides."""

    iter: int
    phase: int
    rho: float
    f: float
    running_min: float
    eta: float
    lhs: float
    rhs: float
    satisfied: bool
    wall_ms: float = 0.0


@dataclass
class RunTrace:
    rows: list[TraceRow] = field(default_factory=list)
    meta: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]

    def append(self, row: TraceRow) -> None:
        if self.rows and row.iter <= self.rows[-1].iter:
            raise ValueError("trace iterations must be strictly increasing")
        if self.rows and row.rho < self.rows[-1].rho:
            raise ValueError("trace rho column must be nondecreasing")
        self.rows.append(row)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_csv(trace: RunTrace, path) -> None:
    lines = [FORMAT_TAG]
    for key, value in trace.meta.items():
        lines.append(f"# {key} = {value}")
    lines.append(",".join(COLUMNS))
    for r in trace.rows:
        lines.append(
            ",".join(
                (
                    str(r.iter),
                    str(r.phase),
                    _fmt(r.rho),
                    _fmt(r.f),
                    _fmt(r.running_min),
                    _fmt(r.eta),
                    _fmt(r.lhs),
                    _fmt(r.rhs),
                    "1" if r.satisfied else "0",
                    _fmt(r.wall_ms),
                )
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> RunTrace:
    text = Path(path).read_text().strip().splitlines()
    if not text or text[0].strip() != FORMAT_TAG:
        raise ValueError(f"{path}: not a bpgrad-trace v1 file")
    meta: dict[str, str] = {}
    i = 1
    while i < len(text) and text[i].startswith("#"):
        key, _, value = text[i][1:].partition("=")
        meta[key.strip()] = value.strip()
        i += 1
    if i >= len(text) or text[i].strip() != ",".join(COLUMNS):
        raise ValueError(f"{path}: missing or unexpected column header")
    rows = []
    for line in text[i + 1 :]:
        parts = line.split(",")
        if len(parts) != len(COLUMNS):
            raise ValueError(f"{path}: malformed row {line!r}")
        rows.append(
            TraceRow(
                iter=int(parts[0]),
                phase=int(parts[1]),
                rho=float(parts[2]),
                f=float(parts[3]),
                running_min=float(parts[4]),
                eta=float(parts[5]),
                lhs=float(parts[6]),
                rhs=float(parts[7]),
                satisfied=parts[8] == "1",
                wall_ms=float(parts[9]),
            )
        )
    return RunTrace(rows=rows, meta=meta)
