"""Reference solvers: an exact enumerator for tiny instances and two naive schedules.

The exact solver walks every ordered subset of APs depth first.  Route
prefixes share one forward table of best values per number of service slots
used, extended one AP at a time with an independently coded recurrence
(admissibility settled exactly per arrival slot), so nothing in
:mod:`tsdc.mdp` is reused.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .instance import Instance
from .mdp import DEFAULT_CAP
from .physics import tables
from .schedule import Schedule, build_queue, collection_admissible, evaluate, min_drain_slots

__all__ = [
    "BRUTE_FORCE_CAP",
    "OracleResult",
    "brute_force",
    "exhaustive_durations",
    "greedy_deadline",
    "uniform_duration",
    "alg2_duration",
]

BRUTE_FORCE_CAP = 7


@dataclass(frozen=True)
class OracleResult:
    best: Schedule
    objective: Fraction
    nodes_explored: int


def alg2_duration(inst: Instance, k: int, t: int, cap: int = DEFAULT_CAP) -> int:
    """Slots that drain AP ``k`` to its threshold when reached at slot ``t``.

    Growth during service is counted; undrainable APs get ``cap``.
    """
    need = min_drain_slots(tables(inst), k, t)
    return cap if need is None else min(cap, need)


def exhaustive_durations(
    inst: Instance, visits: Sequence[int], budget: int, cap: int
) -> tuple[tuple[int, ...], Fraction]:
    """Best admissible durations for a fixed visit order by full enumeration.

    Scores each combination in ``product(range(cap + 1), repeat=n)`` with
    :func:`evaluate`; ties keep the lexicographically smallest vector.  Only
    usable for short routes.
    """
    visits = tuple(visits)
    best: tuple[tuple[int, ...], Fraction] | None = None
    for durs in itertools.product(range(cap + 1), repeat=len(visits)):
        if sum(durs) > budget:
            continue
        ev = evaluate(inst, Schedule.from_visits(visits, durs), strict=True)
        if ev.reasons:
            continue
        if best is None or ev.objective > best[1]:
            best = (durs, ev.objective)
    if best is None:
        raise ValueError("no admissible duration vector")
    return best


class _VisitValues:
    """Per-AP value rows ``value[t, d]`` with exact admissibility."""

    def __init__(self, inst: Instance, cap: int):
        self.inst, self.cap = inst, cap
        self.tab = tables(inst)
        self._rows: dict[int, np.ndarray] = {}

    def __call__(self, k: int) -> np.ndarray:
        row = self._rows.get(k)
        if row is not None:
            return row
        tab, cap = self.tab, self.cap
        ap = self.inst.ap(k)
        T, tau = tab.T, tab.tau
        full = tab.full_slot(k)
        out = np.empty((T + 1, cap + 1))
        durations = np.arange(cap + 1)
        for t in range(T + 1):
            raw = ap.initial_data + ap.growth_rate * tau * t
            held = min(raw, ap.capacity)
            penalty = self.inst.penalty * max(0.0, raw - ap.capacity)
            out[t] = np.minimum(durations * tau * tab.rate[k], held) - penalty
            over = full is not None and t > full
            if not over:
                need = min_drain_slots(tab, k, t)
                if need is not None and need > 1:
                    out[t, 1:min(need, cap + 1)] = -np.inf
        self._rows[k] = out
        return out


def _extend(g: np.ndarray, vt: np.ndarray, offset: int, cap: int) -> tuple[np.ndarray, np.ndarray]:
    """Add one visit reached after ``offset`` flight slots; returns (values, chosen durations)."""
    T = vt.shape[0] - 1
    new = np.full_like(g, -np.inf)
    pick = np.zeros(len(g), dtype=np.int64)
    js = np.arange(len(g))
    for d in range(min(cap, len(g) - 1) + 1):
        src = js[d:] - d
        arr = offset + src
        ok = arr <= T
        cand = np.full(len(src), -np.inf)
        cand[ok] = g[src[ok]] + vt[arr[ok], d]
        better = cand > new[d:]
        new[d:][better] = cand[better]
        pick[d:][better] = d
    return new, pick


def brute_force(inst: Instance, max_n: int = BRUTE_FORCE_CAP, per_ap_cap: int = DEFAULT_CAP) -> OracleResult:
    """Exact optimum over all ordered AP subsets and admissible durations.

    Ties are broken towards the lexicographically smallest route.
    """
    if max_n > BRUTE_FORCE_CAP:
        raise ValueError(f"exactness cap is {BRUTE_FORCE_CAP} APs")
    if inst.n > max_n:
        raise ValueError(f"instance has {inst.n} APs, brute force allows at most {max_n}")
    tab = tables(inst)
    f = tab.flight_list
    values = _VisitValues(inst, per_ap_cap)
    jmax = tab.budget_for_flight(0)
    cap = per_ap_cap
    start = np.full(jmax + 1, -np.inf)
    start[0] = 0.0

    explored = 0
    best_val = 0.0
    candidates: list[tuple[int, ...]] = [()]

    def dfs(prefix: list[int], g: np.ndarray, offset: int, used: int):
        nonlocal explored, best_val, candidates
        last = prefix[-1] if prefix else 0
        for node in range(1, inst.n + 1):
            if used >> node & 1:
                continue
            arrive = offset + f[last][node]
            route_flight = arrive + f[node][0]
            # ceiled leg lengths obey the triangle inequality, so no extension can fly less
            if not tab.flight_feasible(route_flight):
                continue
            explored += 1
            g2, _ = _extend(g, values(node), arrive, cap)
            budget = tab.budget_for_flight(route_flight)
            val = float(g2[: budget + 1].max())
            route = tuple(prefix + [node])
            tol = 1e-9 * max(1.0, abs(best_val))
            if val > best_val + tol:
                best_val, candidates = val, [route]
            elif val >= best_val - tol:
                candidates.append(route)
            dfs(prefix + [node], g2, arrive, used | 1 << node)

    dfs([], start, 0, 0)

    best: tuple[Fraction, tuple[int, ...], Schedule] | None = None
    for route in candidates:
        sched = _optimal_schedule(inst, route, values, per_ap_cap)
        obj = evaluate(inst, sched).objective
        if best is None or obj > best[0] or (obj == best[0] and route < best[1]):
            best = (obj, route, sched)
    assert best is not None
    return OracleResult(best[2], best[0], explored)


def _optimal_schedule(inst: Instance, visits: Sequence[int], values: _VisitValues, cap: int) -> Schedule:
    """Durations for a winning route, recovered by a forward pass with traceback."""
    tab = tables(inst)
    f = tab.flight_list
    budget = tab.budget_for_flight(tab.route_flight_slots(visits)) if visits else 0
    g = np.full(budget + 1, -np.inf)
    g[0] = 0.0
    choice = []
    prev, offset = 0, 0
    for node in visits:
        offset += f[prev][node]
        g, pick = _extend(g, values(node), offset, cap)
        choice.append(pick)
        prev = node
    j = int(np.argmax(g))
    durs = [0] * len(visits)
    for i in range(len(visits) - 1, -1, -1):
        durs[i] = int(choice[i][j])
        j -= durs[i]
    return Schedule.from_visits(visits, durs)


def _truncated(inst: Instance, order: Sequence[int], wanted) -> Schedule:
    """Queue-order schedule that stops once energy or mission time runs out.

    ``wanted(node, arrival)`` gives the desired duration; the last AP that
    still fits may be shortened to the remaining budget (to a pass-by if the
    shortened visit would not reach the threshold).
    """
    tab = tables(inst)
    f = tab.flight_list
    visits: list[int] = []
    durs: list[int] = []
    t = 0
    for node in order:
        last = visits[-1] if visits else 0
        route_flight = tab.route_flight_slots(visits + [node])
        if not tab.flight_feasible(route_flight):
            break
        budget = tab.budget_for_flight(route_flight)
        spent = sum(durs)
        if spent > budget:
            break
        arrive = t + f[last][node]
        d = max(0, int(wanted(node, arrive)))
        full = tab.full_slot(node)
        over = full is not None and arrive > full
        if spent + d > budget:
            d = budget - spent
            if not collection_admissible(tab, node, arrive, d, over):
                d = 0
            visits.append(node)
            durs.append(d)
            break
        visits.append(node)
        durs.append(d)
        t = arrive + d
    return Schedule.from_visits(visits, durs)


def greedy_deadline(inst: Instance, per_ap_cap: int = DEFAULT_CAP) -> Schedule:
    """Response-queue order with drain-to-threshold durations."""
    return _truncated(inst, build_queue(inst), lambda k, t: alg2_duration(inst, k, t, per_ap_cap))


def uniform_duration(inst: Instance, d: int) -> Schedule:
    """Response-queue order with the same duration ``d`` at every AP."""
    if d < 0 or int(d) != d:
        raise ValueError("duration must be a nonnegative integer")
    return _truncated(inst, build_queue(inst), lambda k, t: d)
