"""Sweeps over policies, υ₀ values, graphs and seeds, with reproducible output."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from . import metrics
from .metrics import MetricsReport
from .simengine import SimConfig, run
from .topology import Graph, export_dot, generate_overlay, import_dot

# (t_mon, sigma, delta, alpha)
PRESETS: dict[str, tuple[int, float, float, float]] = {
    "alg1-paper": (100, 0.2, 300, 1 / 3),
    "alg2-paper": (50, 0.5, 1000, 3 / 4),
    "alg3-paper": (50, 0.7, 10000, 1.0),
    "alg3-setup1": (50, 0.5, 1000, 1.0),
    "alg3-setup2": (50, 0.5, 5000, 1.0),
    "alg3-setup3": (50, 0.5, 1000, 3 / 4),
    "alg3-setup4": (50, 0.7, 10000, 1.0),
    "alg3-setup5": (30, 0.25, 10000, 1.0),
    "alg3-setup6": (30, 0.25, 10000, 1 / 2),
}

CURVE_COLUMNS = ["policy", "sigma", "delta", "alpha", "t_mon", "rho"]


class ExperimentError(RuntimeError):
    """A run failed; the message names the offending graph, seed and point."""


def sweep_v0(k: int) -> list[float]:
    """``k`` values evenly spaced in (0, 1]: i/k for i = 1..k."""
    if k < 1:
        raise ValueError("sweep needs K >= 1")
    return [i / k for i in range(1, k + 1)]


def resolve_preset(name: str) -> dict:
    try:
        t_mon, sigma, delta, alpha = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return dict(t_mon=t_mon, sigma=sigma, delta=delta, alpha=alpha)


def derive_seed(master_seed: int, graph_index: int, policy: str, v0_index: int, replicate: int) -> int:
    key = f"{master_seed}|{graph_index}|{policy}|{v0_index}|{replicate}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little") >> 1


_GEN_SPEC = re.compile(r"^gen:(.*)$")


def parse_graph_spec(spec: str) -> dict:
    """``gen:n=100,epn=2,dmax=8,count=20,seed=0``; omitted keys take defaults."""
    m = _GEN_SPEC.match(spec)
    if not m:
        raise ValueError(f"not a generator spec: {spec!r}")
    opts = dict(n=100, epn=2, dmax=8, count=20, seed=0)
    for part in filter(None, m.group(1).split(",")):
        k, sep, v = part.partition("=")
        if not sep or k not in opts:
            raise ValueError(f"bad generator option {part!r}")
        opts[k] = int(v)
    return opts


def generate_graph_set(n: int, edges_per_node: int, d_max: int, count: int, seed: int) -> list[Graph]:
    return [generate_overlay(n, edges_per_node, d_max, seed=seed + i) for i in range(count)]


def write_graph_set(graphs: Sequence[Graph], out_dir: str | os.PathLike) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for g in graphs:
        p = out / f"{g.graph_id}.dot"
        p.write_text(export_dot(g))
        paths.append(p)
    return paths


def _natural_key(p: Path):
    return [int(x) if x.isdigit() else x for x in re.split(r"(\d+)", p.stem)]


def load_graphs(source: str) -> list[Graph]:
    if source.startswith("gen:"):
        o = parse_graph_spec(source)
        return generate_graph_set(o["n"], o["epn"], o["dmax"], o["count"], o["seed"])
    d = Path(source)
    if not d.is_dir():
        raise ValueError(f"graph source {source!r} is neither a directory nor a gen: spec")
    files = sorted(d.glob("*.dot"), key=_natural_key)
    if not files:
        raise ValueError(f"no .dot files in {source}")
    return [import_dot(p.read_text(), graph_id=p.stem) for p in files]


@dataclass
class ExperimentPlan:
    graphs: str = "gen:count=20"
    policies: list[str] = field(default_factory=lambda: ["fixed-prob"])
    v0_values: list[float] = field(default_factory=lambda: sweep_v0(25))
    preset: str | None = None
    t_mon: int = 100
    sigma: float = 0.0
    delta: float = 0.0
    alpha: float = 0.0
    seeds: int = 3
    master_seed: int = 0
    steps: int = 5000
    ttl: int = 8
    cache: int = 256
    mean_intergen: float = 200.0

    def __post_init__(self):
        if not self.v0_values:
            raise ValueError("need at least one v0 value")
        if self.seeds < 1:
            raise ValueError("seeds must be >= 1")
        if self.preset is not None:
            for k, v in resolve_preset(self.preset).items():
                setattr(self, k, v)
        # normalise types so echoed parameters format identically after a CSV round trip
        self.v0_values = [float(v) for v in self.v0_values]
        self.sigma, self.delta, self.alpha = float(self.sigma), float(self.delta), float(self.alpha)
        self.t_mon = int(self.t_mon)

    def config(self, policy: str, v0: float, n: int, run_seed: int) -> SimConfig:
        """Baselines never monitor, so their stimulus parameters are echoed as zero."""
        adaptive = policy.startswith("adaptive")
        sigma, delta, alpha = (self.sigma, self.delta, self.alpha) if adaptive else (0.0, 0.0, 0.0)
        return SimConfig(policy=policy, v0=v0, sigma=sigma, delta=delta, alpha=alpha,
                         t_mon=self.t_mon, steps=self.steps, n=n, ttl_init=self.ttl,
                         cache_capacity=self.cache, mean_intergen=self.mean_intergen, run_seed=run_seed)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        d = dict(d)
        preset = d.pop("preset", None)
        plan = cls(**d)
        plan.preset = preset  # parameters were stored already resolved
        return plan


@dataclass(frozen=True)
class RunPoint:
    graph_index: int
    policy: str
    v0_index: int
    replicate: int
    run_seed: int


def run_points(plan: ExperimentPlan, n_graphs: int) -> list[RunPoint]:
    return [
        RunPoint(gi, pol, vi, r, derive_seed(plan.master_seed, gi, pol, vi, r))
        for pol in plan.policies
        for vi in range(len(plan.v0_values))
        for gi in range(n_graphs)
        for r in range(plan.seeds)
    ]


_WORKER: dict = {}


def _init_worker(plan: ExperimentPlan, graphs: list[Graph]) -> None:
    _WORKER["plan"] = plan
    _WORKER["graphs"] = graphs


def _execute(pt: RunPoint) -> MetricsReport:
    plan, graphs = _WORKER["plan"], _WORKER["graphs"]
    g = graphs[pt.graph_index]
    cfg = plan.config(pt.policy, plan.v0_values[pt.v0_index], g.node_count, pt.run_seed)
    try:
        return metrics.report(run(cfg, g), cfg, g.graph_id)
    except Exception as exc:
        raise ExperimentError(
            f"run failed on graph {g.graph_id} (index {pt.graph_index}), policy {pt.policy}, "
            f"v0={cfg.v0}, replicate {pt.replicate}, run_seed {pt.run_seed}: {exc}"
        ) from exc


def execute(plan: ExperimentPlan, graphs: list[Graph] | None = None, jobs: int = 1) -> list[MetricsReport]:
    """All runs of ``plan`` in plan order, whatever the worker count."""
    graphs = load_graphs(plan.graphs) if graphs is None else graphs
    points = run_points(plan, len(graphs))
    if jobs <= 1:
        _init_worker(plan, graphs)
        return [_execute(p) for p in points]
    with ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=(plan, graphs)) as pool:
        return list(pool.map(_execute, points, chunksize=max(1, len(points) // (4 * jobs))))


def manifest(plan: ExperimentPlan, graphs: Sequence[Graph], reports: Sequence[MetricsReport]) -> dict:
    return {
        "plan": plan.to_dict(),
        "graphs": [g.graph_id for g in graphs],
        "runs": [dict(graph_id=r.graph_id, policy=r.policy, v0=r.v0, run_seed=r.run_seed) for r in reports],
    }


def run_experiment(plan: ExperimentPlan, out_dir: str | os.PathLike, jobs: int = 1,
                   graphs: list[Graph] | None = None) -> list[MetricsReport]:
    """Execute ``plan`` and write ``runs.csv``, ``aggregated.csv`` and ``manifest.json``."""
    graphs = load_graphs(plan.graphs) if graphs is None else graphs
    reports = execute(plan, graphs, jobs)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "runs.csv").write_text(metrics.write_results(reports))
    (out / "aggregated.csv").write_text(metrics.write_aggregate(metrics.aggregate(reports)))
    (out / "manifest.json").write_text(json.dumps(manifest(plan, graphs, reports), indent=1) + "\n")
    return reports


def load_manifest(path: str | os.PathLike) -> ExperimentPlan:
    return ExperimentPlan.from_dict(json.loads(Path(path).read_text())["plan"])


def curve_key(row: dict) -> tuple:
    return tuple(row[k] for k in CURVE_COLUMNS[:-1])


def emit_curves(rows: Sequence[dict], rho_min: float | None = 1.0) -> tuple[str, str]:
    """Coverage-vs-ρ and delay-vs-ρ tables, one curve per parameter set, sorted by ρ."""
    kept = [r for r in rows if r["rho"] is not None and (rho_min is None or r["rho"] >= rho_min)]
    kept.sort(key=lambda r: (r["policy"], r["sigma"], r["delta"], r["alpha"], r["t_mon"], r["rho"]))
    tables = []
    for metric in ("coverage", "delay"):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CURVE_COLUMNS + [metric, f"{metric}_sd"])
        for r in kept:
            w.writerow([metrics.format_value(r[c]) for c in CURVE_COLUMNS + [metric, f"{metric}_sd"]])
        tables.append(buf.getvalue())
    return tables[0], tables[1]
