"""Per-iteration traces and final solver reports."""

import io
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .oracles import OracleCounters

SCHEMA_VERSION = 1
COUNTER_COLUMNS = ("grad_f", "apply_A", "apply_At", "prox_h")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


class IterateTrace:
    """Rows of scalar diagnostics, one per iteration, plus optional iterates.

    Each row is a dict; oracle totals are appended automatically from the
    counters passed to `record`. ``iterates`` and ``duals`` are kept only
    when the trace was created with ``keep_iterates=True``.
    """

    def __init__(self, kind, columns, keep_iterates=False):
        self.kind = kind
        self.columns = list(columns)
        self.rows = []
        self.keep_iterates = keep_iterates
        self.iterates = []
        self.duals = []
        self.meta = {}

    def record(self, counters=None, x=None, lam=None, **values):
        row = {c: values.get(c) for c in self.columns}
        if counters is not None:
            row.update(counters.as_dict())
        self.rows.append(row)
        if self.keep_iterates:
            if x is not None:
                self.iterates.append(np.array(x, copy=True))
            if lam is not None:
                self.duals.append(np.array(lam, copy=True))
        return row

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        return np.array([np.nan if r.get(name) is None else r[name] for r in self.rows], dtype=float)

    def all_columns(self):
        return self.columns + [c for c in COUNTER_COLUMNS if any(c in r for r in self.rows)]

    def to_csv(self, path=None):
        """Write the rows as CSV with a leading ``# schema`` comment line.

        Floats are written with ``repr`` so the file round-trips exactly and
        is byte-identical across repeated deterministic runs.
        """
        cols = self.all_columns()
        buf = io.StringIO(newline="")
        buf.write(f"# composolve-trace schema={SCHEMA_VERSION} kind={self.kind}\n")
        buf.write(",".join(cols) + "\n")
        for r in self.rows:
            buf.write(",".join(_fmt(r.get(c)) for c in cols) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        return text


@dataclass
class SolverReport:
    """Outcome of a solve: final primal/dual iterates, tolerance, oracle totals, timing."""

    x: np.ndarray
    lam: Optional[np.ndarray]
    epsilon: float
    counters: OracleCounters
    wall_time: float
    trace: Optional[IterateTrace] = None
    converged: bool = True
    outer_iters: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self, include_timing=True):
        d = {
            "x": [float(v) for v in self.x],
            "lambda": None if self.lam is None else [float(v) for v in self.lam],
            "epsilon": float(self.epsilon),
            "oracle_calls": self.counters.as_dict(),
            "converged": bool(self.converged),
            "outer_iters": int(self.outer_iters),
            "extra": {k: _jsonable(v) for k, v in self.extra.items()},
        }
        if include_timing:
            d["wall_time"] = float(self.wall_time)
        return d

    def to_json(self, path=None, include_timing=True):
        text = json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True) + "\n"
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        return text


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v
