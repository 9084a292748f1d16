"""Experiment reports: per-n rows plus metadata, emitted as CSV, JSON or SVG."""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

RUNNING_MIN_FACTOR = 1.1


def n_key(n) -> float:
    return math.inf if n in ("inf", None) else float(n)


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if math.isinf(v):
            return "inf"
        return repr(float(v))
    return str(v)


def dyadic_subsequence(ns) -> list:
    """The powers of two in ``ns`` (all finite ``ns`` when fewer than two are dyadic)."""
    finite = sorted(n for n in ns if not math.isinf(n_key(n)))
    dy = [n for n in finite if float(n) >= 1 and float(n).is_integer()
          and (int(n) & (int(n) - 1)) == 0]
    return dy if len(dy) >= 2 else finite


def no_rebound(values, factor: float = RUNNING_MIN_FACTOR) -> bool:
    """True when no value exceeds ``factor`` times the running minimum before it."""
    best = math.inf
    for v in values:
        if v > factor * best:
            return False
        best = min(best, v)
    return True


@dataclass
class ExperimentReport:
    experiment: str
    family: dict
    columns: list[str]
    rows: list[dict]
    grid: dict
    tolerances: dict
    flags: dict = field(default_factory=dict)
    budgets: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.rows.sort(key=lambda r: n_key(r["n"]))
        for r in self.rows:
            for c in self.columns:
                if not np.isfinite(r[c]):
                    raise ValueError(f"non-finite {c} at n={r['n']}")

    def column(self, name: str, finite_only: bool = True) -> np.ndarray:
        return np.array([r[name] for r in self.rows
                         if not (finite_only and math.isinf(n_key(r["n"])))])

    def ns(self, finite_only: bool = True) -> list:
        return [r["n"] for r in self.rows
                if not (finite_only and math.isinf(n_key(r["n"])))]

    def convergence_flags(self, thresholds: dict | None = None) -> dict:
        """Per column: no rebound above 1.1x the running minimum along dyadic n, and final value below threshold."""
        thresholds = thresholds or {}
        dy = set(dyadic_subsequence(self.ns()))
        out = {}
        for c in self.columns:
            seq = [r[c] for r in self.rows if r["n"] in dy]
            entry = {"no_rebound": no_rebound(seq)}
            if seq:
                entry["final"] = seq[-1]
            if c in thresholds and seq:
                entry["threshold"] = thresholds[c]
                entry["below_threshold"] = bool(seq[-1] < thresholds[c])
            out[c] = entry
        return out

    def to_csv(self, timings: bool = False) -> str:
        cols = ["n"] + self.columns + (["runtime_s"] if timings else [])
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for r in self.rows:
            buf.write(",".join(fmt(r.get(c, "")) for c in cols) + "\n")
        return buf.getvalue()

    def to_dict(self, timings: bool = False) -> dict:
        def clean(v):
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            if isinstance(v, (np.bool_,)):
                return bool(v)
            if isinstance(v, (np.integer,)):
                return int(v)
            if isinstance(v, (float, np.floating)):
                return "inf" if math.isinf(v) else float(v)
            return v

        rows = [{k: v for k, v in r.items() if timings or k != "runtime_s"} for r in self.rows]
        return clean({
            "experiment": self.experiment, "family": self.family, "columns": self.columns,
            "grid": self.grid, "tolerances": self.tolerances, "flags": self.flags,
            "budgets": self.budgets, "notes": self.notes, "rows": rows,
        })

    def to_json(self, timings: bool = False) -> str:
        return json.dumps(self.to_dict(timings), indent=2, sort_keys=True) + "\n"

    def to_svg(self) -> str:
        """Static log-log plot of every column against finite n."""
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        matplotlib.rcParams["svg.hashsalt"] = "rootlab"
        ns = np.array([float(n) for n in self.ns()])
        fig, ax = plt.subplots(figsize=(6, 4))
        for c in self.columns:
            y = self.column(c)
            mask = (y > 0) & (ns > 0)
            if mask.any():
                ax.loglog(ns[mask], y[mask], marker="o", label=c)
        ax.set_xlabel("n")
        ax.set_title(f"{self.experiment}: {self.family.get('name', '')}")
        if ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize=7)
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
        return buf.getvalue()
