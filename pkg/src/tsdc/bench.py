"""Benchmark harness, report metrics and route geometry output."""
from __future__ import annotations

import csv
import dataclasses
import io
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean
from typing import Callable, Iterable, Sequence

from .baselines import brute_force, greedy_deadline, uniform_duration
from .ils import SolverConfig, solve
from .instance import Instance, load_instance
from .schedule import Evaluation, Schedule, evaluate
from .stats import wilcoxon_rank_sum

__all__ = [
    "ALGORITHMS",
    "BenchRecord",
    "StatReport",
    "metrics",
    "run_algorithm",
    "run_bench",
    "load_suite",
    "records_to_csv",
    "records_from_csv",
    "averages",
    "stat_reports",
    "plot_data",
    "render_svg",
]

ALGORITHMS = ("ils-mdp", "greedy", "uniform", "brute")
SIGNIFICANCE = 0.05


def metrics(ev: Evaluation) -> tuple[float, float]:
    """Collection efficiency and service-time ratio of an evaluation."""
    c, o = ev.total_collected, ev.total_overflow
    eta = 1.0 if c + o == 0 else float(c / (c + o))
    busy = ev.service_slots_used + ev.flight_slots_used
    mu = 0.0 if busy == 0 else ev.service_slots_used / busy
    return eta, mu


@dataclass(frozen=True)
class BenchRecord:
    instance_name: str
    algorithm: str
    seed: int
    objective: float
    collected: float
    overflow: float
    efficiency: float
    time_ratio: float
    flight_slots: int
    service_slots: int
    wall_seconds: float

    @classmethod
    def fields(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    def key(self) -> tuple[str, str, int]:
        return (self.instance_name, self.algorithm, self.seed)

    def without_timing(self) -> tuple:
        return dataclasses.astuple(dataclasses.replace(self, wall_seconds=0.0))


@dataclass(frozen=True)
class StatReport:
    algorithm_a: str
    algorithm_b: str
    instance_name: str
    p_value: float
    significant: bool

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def run_algorithm(
    inst: Instance,
    algorithm: str,
    seed: int = 0,
    cfg: SolverConfig | None = None,
    uniform_slots: int = 5,
) -> Schedule:
    if algorithm == "ils-mdp":
        cfg = dataclasses.replace(cfg or SolverConfig(), seed=seed)
        return solve(inst, cfg).best
    if algorithm == "greedy":
        return greedy_deadline(inst, (cfg or SolverConfig()).per_ap_cap)
    if algorithm == "uniform":
        return uniform_duration(inst, uniform_slots)
    if algorithm == "brute":
        return brute_force(inst, per_ap_cap=(cfg or SolverConfig()).per_ap_cap).best
    raise ValueError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")


def _record(inst: Instance, algorithm: str, seed: int, sched: Schedule, wall: float) -> BenchRecord:
    ev = evaluate(inst, sched)
    eta, mu = metrics(ev)
    return BenchRecord(
        inst.name, algorithm, seed, float(ev.objective), float(ev.total_collected), float(ev.total_overflow),
        eta, mu, ev.flight_slots_used, ev.service_slots_used, wall,
    )


def run_bench(
    instances: Sequence[Instance],
    algorithms: Sequence[str] = ("ils-mdp", "greedy"),
    seeds: Iterable[int] = (0,),
    cfg: SolverConfig | None = None,
    workers: int = 1,
    uniform_slots: int = 5,
) -> list[BenchRecord]:
    """One record per (instance, algorithm, seed), sorted by that key."""
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {a!r}")
    tasks = [(inst, a, s) for inst in instances for a in algorithms for s in seeds]

    def job(task) -> BenchRecord:
        inst, a, s = task
        t0 = time.perf_counter()
        sched = run_algorithm(inst, a, s, cfg, uniform_slots)
        return _record(inst, a, s, sched, time.perf_counter() - t0)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(job, tasks))
    else:
        records = [job(t) for t in tasks]
    return sorted(records, key=BenchRecord.key)


def load_suite(directory: str | Path) -> list[Instance]:
    """Every ``*.tsdc`` / ``*.txt`` / ``*.json`` instance in a directory, by file name."""
    root = Path(directory)
    if not root.is_dir():
        raise FileNotFoundError(f"suite directory {root} does not exist")
    paths = sorted(p for p in root.iterdir() if p.suffix in (".tsdc", ".txt", ".json"))
    return [load_instance(p) for p in paths]


def records_to_csv(records: Iterable[BenchRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BenchRecord.fields())
    for r in records:
        w.writerow(dataclasses.astuple(r))
    return buf.getvalue()


def records_from_csv(text: str) -> list[BenchRecord]:
    rows = list(csv.DictReader(io.StringIO(text)))
    casts: dict[str, Callable] = {
        "instance_name": str, "algorithm": str, "seed": int, "flight_slots": int, "service_slots": int,
    }
    out = []
    for row in rows:
        out.append(BenchRecord(**{k: casts.get(k, float)(row[k]) for k in BenchRecord.fields()}))
    return out


def averages(records: Iterable[BenchRecord]) -> list[dict]:
    """Per (instance, algorithm) means, rounded like the result tables.

    Objectives, collected and overflow are rounded half-to-even to integers;
    efficiency and time ratio to three decimals.
    """
    groups: dict[tuple[str, str], list[BenchRecord]] = defaultdict(list)
    for r in records:
        groups[(r.instance_name, r.algorithm)].append(r)
    out = []
    for (name, alg), rs in sorted(groups.items()):
        out.append({
            "instance_name": name,
            "algorithm": alg,
            "runs": len(rs),
            "objective": round(fmean(r.objective for r in rs)),
            "collected": round(fmean(r.collected for r in rs)),
            "overflow": round(fmean(r.overflow for r in rs)),
            "efficiency": round(fmean(r.efficiency for r in rs), 3),
            "time_ratio": round(fmean(r.time_ratio for r in rs), 3),
            "wall_seconds": fmean(r.wall_seconds for r in rs),
        })
    return out


def stat_reports(records: Iterable[BenchRecord], reference: str = "ils-mdp") -> list[StatReport]:
    """Rank-sum test of ``reference`` objectives against every other algorithm, per instance."""
    samples: dict[tuple[str, str], list[float]] = defaultdict(list)
    for r in records:
        samples[(r.instance_name, r.algorithm)].append(r.objective)
    out = []
    names = sorted({k[0] for k in samples})
    algs = sorted({k[1] for k in samples})
    for name in names:
        ref = samples.get((name, reference))
        if not ref:
            continue
        for alg in algs:
            if alg == reference or (name, alg) not in samples:
                continue
            p = wilcoxon_rank_sum(ref, samples[(name, alg)])
            out.append(StatReport(reference, alg, name, p, p < SIGNIFICANCE))
    return out


def plot_data(inst: Instance, sched: Schedule, ev: Evaluation | None = None) -> dict:
    """Route geometry: AP coordinates, visit order, arrivals and states."""
    ev = ev or evaluate(inst, sched)
    aps = [{"id": ap.id, "x": ap.location.x, "y": ap.location.y} for ap in inst.aps]
    polyline = [[inst.location(v).x, inst.location(v).y] for v in sched.route] if sched.visits else []
    return {
        "schema": 1,
        "instance": inst.name,
        "base": {"x": inst.base.x, "y": inst.base.y},
        "aps": aps,
        "route": list(sched.route),
        "polyline": polyline,
        "arrival": dict(zip(map(str, sched.visits), ev.arrival)),
        "state": dict(zip(map(str, sched.visits), ev.state)),
    }


def render_svg(doc: dict, size: int = 480, margin: int = 20) -> str:
    """Static SVG of a :func:`plot_data` document."""
    xs = [doc["base"]["x"]] + [a["x"] for a in doc["aps"]]
    ys = [doc["base"]["y"]] + [a["y"] for a in doc["aps"]]
    lo_x, lo_y = min(xs), min(ys)
    span = max(max(xs) - lo_x, max(ys) - lo_y, 1e-9)
    scale = (size - 2 * margin) / span

    def px(x: float, y: float) -> tuple[float, float]:
        return margin + (x - lo_x) * scale, size - margin - (y - lo_y) * scale

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">']
    if doc["polyline"]:
        pts = " ".join("{:.2f},{:.2f}".format(*px(x, y)) for x, y in doc["polyline"])
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>')
    over = {k for k, s in doc["state"].items() if s}
    for a in doc["aps"]:
        cx, cy = px(a["x"], a["y"])
        colour = "#d62728" if str(a["id"]) in over else "#2ca02c"
        parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="3" fill="{colour}"><title>AP {a["id"]}</title></circle>')
    bx, by = px(doc["base"]["x"], doc["base"]["y"])
    parts.append(f'<rect x="{bx - 4:.2f}" y="{by - 4:.2f}" width="8" height="8" fill="black"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
