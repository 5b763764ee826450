"""Coverage, delay and overhead ratio from traces, plus cross-run aggregation."""

from __future__ import annotations

import csv
import io
import math
import statistics
from collections import defaultdict
from dataclasses import dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from .simengine import SimConfig, Trace

RESULT_COLUMNS = [
    "policy", "graph_id", "run_seed", "v0", "sigma", "delta", "alpha", "t_mon",
    "n", "m", "coverage", "delay", "rho", "data_tx", "control_tx",
]
AGGREGATE_COLUMNS = RESULT_COLUMNS + ["coverage_sd", "delay_sd", "rho_sd", "runs"]
DEFAULT_GROUP = ("policy", "v0", "sigma", "delta", "alpha", "t_mon")


def coverage(trace: Trace, n: int, generated_until: int | None = None) -> float | None:
    """Mean fraction of the ``n - 1`` non-source nodes reached per message.

    ``generated_until`` restricts the average to messages created at or
    before that step. Returns ``None`` when no message qualifies.
    """
    if n < 2:
        raise ValueError("coverage needs n >= 2")
    gen = trace.generated
    if generated_until is not None:
        gen = gen[gen[:, 2] <= generated_until]
    if len(gen) == 0:
        return None
    recs = trace.first_receptions[:, 0]
    reached = int(np.isin(recs, gen[:, 0]).sum()) if generated_until is not None else len(recs)
    return reached / ((n - 1) * len(gen))


def delay(trace: Trace, two_stage: bool = False) -> float | None:
    """Mean hop count of first receptions.

    Pooled over all reception records by default; ``two_stage`` averages
    within each message first, then across messages that reached anyone.
    """
    recs = trace.first_receptions
    if len(recs) == 0:
        return None
    if not two_stage:
        return int(recs[:, 3].sum()) / len(recs)
    ids, inverse, counts = np.unique(recs[:, 0], return_inverse=True, return_counts=True)
    per_msg = np.bincount(inverse, weights=recs[:, 3]) / counts
    return math.fsum(per_msg) / len(ids)


def overhead_ratio(trace: Trace, n: int) -> float | None:
    """Data transmissions over the spanning-tree bound ``(n - 1) * m``."""
    m = len(trace.generated)
    if m == 0:
        return None
    return trace.data_tx / ((n - 1) * m)


@dataclass(frozen=True)
class MetricsReport:
    policy: str
    graph_id: str
    run_seed: int
    v0: float
    sigma: float
    delta: float
    alpha: float
    t_mon: int
    n: int
    m: int
    coverage: float | None
    delay: float | None
    rho: float | None
    data_tx: int
    control_tx: int

    def row(self) -> list[str]:
        return [format_value(getattr(self, c)) for c in RESULT_COLUMNS]


def report(trace: Trace, config: SimConfig, graph_id: str, n: int | None = None) -> MetricsReport:
    n = config.n if n is None else n
    return MetricsReport(
        policy=config.policy, graph_id=graph_id, run_seed=config.run_seed, v0=config.v0,
        sigma=config.sigma, delta=config.delta, alpha=config.alpha, t_mon=config.t_mon,
        n=n, m=len(trace.generated), coverage=coverage(trace, n), delay=delay(trace),
        rho=overhead_ratio(trace, n), data_tx=trace.data_tx, control_tx=trace.control_tx,
    )


def format_value(v) -> str:
    """CSV cell text: empty for ABSENT, shortest round-trip repr for floats."""
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _mean_sd(values: Sequence[float]) -> tuple[float | None, float | None]:
    vals = [v for v in values if v is not None]
    if not vals:
        return None, None
    mean = math.fsum(vals) / len(vals)
    sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
    return mean, sd


def aggregate(reports: Iterable[MetricsReport], group_keys: Sequence[str] = DEFAULT_GROUP) -> list[dict]:
    """Mean and sample standard deviation per group, rows sorted by mean rho.

    Input order does not affect the output: each group's members are sorted
    before summation.
    """
    groups: dict[tuple, list[MetricsReport]] = defaultdict(list)
    for r in reports:
        groups[tuple(getattr(r, k) for k in group_keys)].append(r)
    if not groups:
        raise ValueError("nothing to aggregate")
    rows = []
    for key, members in groups.items():
        if len({r.n for r in members}) != 1:
            raise ValueError(f"mixed node counts in group {key}")
        members.sort(key=lambda r: (r.graph_id, r.run_seed))
        row = dict(zip(group_keys, key))
        first = members[0]
        for k in ("policy", "v0", "sigma", "delta", "alpha", "t_mon"):
            row.setdefault(k, getattr(first, k))
        # pooled identifiers stay only when the whole group shares them
        for k in ("graph_id", "run_seed"):
            vals = {getattr(r, k) for r in members}
            row.setdefault(k, vals.pop() if len(vals) == 1 else None)
        row["n"] = first.n
        row["m"] = math.fsum(r.m for r in members) / len(members)
        row["data_tx"] = math.fsum(r.data_tx for r in members) / len(members)
        row["control_tx"] = math.fsum(r.control_tx for r in members) / len(members)
        for metric in ("coverage", "delay", "rho"):
            row[metric], row[f"{metric}_sd"] = _mean_sd([getattr(r, metric) for r in members])
        row["runs"] = len(members)
        rows.append(row)
    rows.sort(key=lambda r: (math.inf if r["rho"] is None else r["rho"], r["policy"], r["v0"],
                             r["sigma"], r["delta"], r["alpha"], r["t_mon"]))
    return rows


def value_at_rho(rows: Sequence[dict], rho: float, metric: str = "coverage") -> float | None:
    """Linear interpolation of ``metric`` against mean rho; ``None`` outside the sampled range."""
    pts = sorted((r["rho"], r[metric]) for r in rows if r["rho"] is not None and r[metric] is not None)
    if not pts or rho < pts[0][0] or rho > pts[-1][0]:
        return None
    xs, ys = zip(*pts)
    return float(np.interp(rho, xs, ys))


def write_results(reports: Iterable[MetricsReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


def _parse(v: str, typ):
    if v == "":
        return None
    return typ(v)


_CASTS = {"policy": str, "graph_id": str, "run_seed": int, "t_mon": int, "n": int, "m": int,
          "data_tx": int, "control_tx": int}


def read_results(text: str) -> list[MetricsReport]:
    rd = csv.DictReader(io.StringIO(text))
    if rd.fieldnames != RESULT_COLUMNS:
        raise ValueError(f"unexpected results header {rd.fieldnames}")
    return [MetricsReport(**{k: _parse(v, _CASTS.get(k, float)) for k, v in row.items()}) for row in rd]


def write_aggregate(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AGGREGATE_COLUMNS)
    for r in rows:
        w.writerow([format_value(r[c]) for c in AGGREGATE_COLUMNS])
    return buf.getvalue()


_AGG_CASTS = {"policy": str, "graph_id": str, "run_seed": int, "t_mon": int, "n": int, "runs": int}


def read_aggregate(text: str) -> list[dict]:
    rd = csv.DictReader(io.StringIO(text))
    if rd.fieldnames != AGGREGATE_COLUMNS:
        raise ValueError(f"unexpected aggregate header {rd.fieldnames}")
    return [{k: _parse(v, _AGG_CASTS.get(k, float)) for k, v in row.items()} for row in rd]
