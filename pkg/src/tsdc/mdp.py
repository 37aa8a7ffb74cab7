"""Collection-duration scheduling for a fixed route by dynamic programming.

For a route ``a_1 .. a_n`` the state after stage ``k`` is the number of
service slots ``j`` spent so far.  Because flights are fixed, ``j`` alone
fixes every later arrival time, so the recursion

    g(k, j) = max_d  g(k-1, j-d) + value_k(F_k + j - d, d)

over ``d in 0..min(cap, j)`` is exact.  ``F_k`` is the cumulative flight time
to ``a_k`` and ``value_k(t, d)`` is AP ``a_k``'s contribution to the
objective (collected data minus penalised overflow) when reached at slot
``t`` and served ``d`` slots.  Durations that would leave a non-overflowed AP
above its threshold are not admissible (pass-by visits with ``d = 0``
always are).  The benefit table reported to callers is the running maximum
``f(k, j) = max_{j' <= j} g(k, j')``.

All search bookkeeping is float64; the returned benefit is recomputed
exactly by :func:`tsdc.schedule.evaluate`.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .instance import Instance
from .physics import InstanceTables, tables
from .schedule import Schedule, ScheduleError, evaluate, min_drain_slots

__all__ = [
    "DEFAULT_CAP",
    "UNREACHABLE",
    "DpTables",
    "DurationAssignment",
    "solve_dcdsp",
    "score_prefix",
    "RouteScorer",
    "value_table",
]

DEFAULT_CAP = 31
UNREACHABLE = -np.inf


@dataclass
class DpTables:
    benefit: np.ndarray       # f[k][j], nondecreasing in j
    exact: np.ndarray         # g[k][j], exactly j service slots used
    trace: np.ndarray         # duration chosen at (k, j)
    buffer_state: np.ndarray  # data collected at (k, j) by the chosen visit


@dataclass
class DurationAssignment:
    durations: tuple[int, ...]
    total_benefit: Fraction
    budget: int
    tables: DpTables | None = None

    @property
    def service_slots(self) -> int:
        return sum(self.durations)


def value_table(tab: InstanceTables, k: int, cap: int) -> tuple[np.ndarray, np.ndarray]:
    """Objective contribution and collected data of AP ``k`` per (arrival, duration).

    Rows are arrival slots ``0..T``, columns durations ``0..cap``.  Inadmissible
    cells hold ``-inf``.
    """
    cache = tab.__dict__.setdefault("_value_tables", {})
    key = (k, cap)
    hit = cache.get(key)
    if hit is not None:
        return hit
    ap = tab.inst.ap(k)
    T, tau = tab.T, tab.tau
    t = np.arange(T + 1, dtype=np.float64)
    d = np.arange(cap + 1, dtype=np.float64)
    alpha, rate = ap.growth_rate, tab.rate[k]
    grown = ap.initial_data + alpha * tau * t
    buffer = np.minimum(grown, ap.capacity)
    loss = np.maximum(grown - ap.capacity, 0.0)
    full = tab.full_slot(k)
    overflowed = np.zeros(T + 1, dtype=bool) if full is None else (np.arange(T + 1) > full)
    collected = np.minimum(d[None, :] * (tau * rate), buffer[:, None])
    value = collected - tab.inst.penalty * loss[:, None]

    if rate > alpha:
        x = (buffer - ap.threshold) / (tau * (rate - alpha))
        need = np.maximum(np.ceil(x), 0.0)
        # settle float-borderline ceilings exactly
        for ti in np.flatnonzero(np.abs(x - np.round(x)) < 1e-7 * np.maximum(1.0, np.abs(x))):
            need[ti] = min_drain_slots(tab, k, int(ti))
        ok = (d[None, :] == 0) | overflowed[:, None] | (d[None, :] >= need[:, None])
        value = np.where(ok, value, UNREACHABLE)
    cache[key] = (value, collected)
    return value, collected


class _Gather:
    """Index arrays turning ``A[j', d]`` into ``max_d A[j - d, d]``."""

    def __init__(self, length: int, cap: int):
        j = np.arange(length)[:, None]
        d = np.arange(cap + 1)[None, :]
        self.rows = (j - d) + cap
        self.cols = np.broadcast_to(d, self.rows.shape)
        self.length = length
        self.cap = cap
        self.top = np.full((cap, cap + 1), UNREACHABLE)


def _stage(g_prev: np.ndarray, vt: np.ndarray, offset: int, gather: _Gather):
    """One DP stage; returns (g_new, A-gathered matrix)."""
    L = gather.length
    T1 = vt.shape[0]
    if offset >= T1:
        rows = np.full((L, vt.shape[1]), UNREACHABLE)
    elif offset + L <= T1:
        rows = vt[offset:offset + L]
    else:
        rows = np.vstack([vt[offset:], np.full((offset + L - T1, vt.shape[1]), UNREACHABLE)])
    A = np.vstack([gather.top, g_prev[:, None] + rows])
    M = A[gather.rows, gather.cols]
    return M


def _run_stages_loops(g, values, nodes, offsets, cap, keep):
    """Push-style DP stages over ``nodes``; returns every row or only the last."""
    L = g.shape[0]
    T = values.shape[1] - 1
    n = nodes.shape[0]
    out = np.empty((n if keep else 1, L))
    cur = g.copy()
    for s in range(n):
        k = nodes[s]
        off = offsets[s]
        new = np.full(L, -np.inf)
        for jp in range(L):
            a = cur[jp]
            if a == -np.inf:
                continue
            t = off + jp
            if t > T:
                break
            lim = min(cap, L - 1 - jp)
            for d in range(lim + 1):
                v = a + values[k, t, d]
                if v > new[jp + d]:
                    new[jp + d] = v
        cur = new
        if keep:
            out[s] = cur
    if not keep:
        out[0] = cur
    return out


def _run_stages_numpy(g, values, nodes, offsets, cap, keep):
    L = g.shape[0]
    T1 = values.shape[1]
    rows = []
    cur = g
    for k, off in zip(nodes, offsets):
        new = np.full(L, UNREACHABLE)
        hi = min(L, T1 - off)
        if hi > 0:
            h = cur[:hi, None] + values[k, off:off + hi]
            for d in range(min(cap, L - 1) + 1):
                m = min(hi, L - d)
                np.maximum(new[d:d + m], h[:m, d], out=new[d:d + m])
        cur = new
        if keep:
            rows.append(cur)
    return np.array(rows) if keep else cur[None, :]


try:  # optional compiled kernel; results are identical to the numpy path
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    _run_stages = _run_stages_numpy
else:
    _run_stages = njit(cache=True, nogil=True)(_run_stages_loops)


class RouteScorer:
    """Fast float DP scorer for many candidate routes on one instance.

    ``length`` service slots are tracked for every route (the budget of a
    route with no flight), so stage rows computed for a route prefix can be
    reused by any candidate sharing that prefix.
    """

    def __init__(self, inst: Instance, cap: int = DEFAULT_CAP):
        if cap < 1:
            raise ValueError("per-AP cap must be >= 1")
        self.inst = inst
        self.tab = tables(inst)
        self.cap = cap
        self.jmax = self.tab.budget_for_flight(0)
        self.gather = _Gather(self.jmax + 1, cap)
        self.g0 = np.full(self.jmax + 1, UNREACHABLE)
        self.g0[0] = 0.0
        self.evaluations = 0
        self._stack: np.ndarray | None = None

    def _vt(self, k: int) -> np.ndarray:
        return value_table(self.tab, k, self.cap)[0]

    @property
    def _values(self) -> np.ndarray:
        """All value tables stacked as ``(node, arrival, duration)``."""
        if self._stack is None:
            T1 = self.tab.T + 1
            stack = np.full((self.inst.n + 1, T1, self.cap + 1), UNREACHABLE)
            for k in range(1, self.inst.n + 1):
                stack[k] = self._vt(k)
            self._stack = stack
        return self._stack

    def _offsets(self, visits: Sequence[int]) -> np.ndarray:
        f = self.tab.flight_list
        out = np.empty(len(visits), dtype=np.int64)
        prev, offset = 0, 0
        for i, node in enumerate(visits):
            offset += f[prev][node]
            out[i] = offset
            prev = node
        return out

    def prefix_rows(self, visits: Sequence[int]) -> list[np.ndarray]:
        """``g`` rows after 0..n stages of ``visits``."""
        if not visits:
            return [self.g0]
        rows = _run_stages(
            self.g0, self._values, np.asarray(visits, dtype=np.int64), self._offsets(visits), self.cap, True
        )
        return [self.g0] + list(rows)

    def score(self, visits: Sequence[int], cached: list[np.ndarray] | None = None, start: int = 0) -> float:
        """Best objective over admissible durations; ``-inf`` if infeasible.

        ``cached[start]`` must be the row after the first ``start`` stages of
        ``visits`` (as produced by :meth:`prefix_rows` on a route sharing that
        prefix).
        """
        self.evaluations += 1
        tab = self.tab
        total_flight = tab.route_flight_slots(visits)
        if not tab.flight_feasible(total_flight):
            return UNREACHABLE
        budget = tab.budget_for_flight(total_flight)
        if cached is None:
            start = 0
        g = (cached[start] if start else self.g0)[: budget + 1]
        if start < len(visits):
            rest = np.asarray(visits[start:], dtype=np.int64)
            g = _run_stages(g, self._values, rest, self._offsets(visits)[start:], self.cap, False)[0]
        return float(g.max())

    def assign(self, visits: Sequence[int], budget: int | None = None) -> tuple[tuple[int, ...], float, DpTables]:
        """Optimal durations with traceback tables."""
        tab = self.tab
        visits = tuple(visits)
        total_flight = tab.route_flight_slots(visits)
        if budget is None:
            budget = tab.budget_for_flight(total_flight) if tab.flight_feasible(total_flight) else 0
        if budget < 0:
            raise ValueError("budget must be nonnegative")
        if budget > self.jmax:
            gather = _Gather(budget + 1, self.cap)
            g = np.full(budget + 1, UNREACHABLE)
            g[0] = 0.0
        else:
            gather, g = self.gather, self.g0
        n, L = len(visits), gather.length
        exact = np.full((n + 1, L), UNREACHABLE)
        exact[0] = g
        trace = np.zeros((n + 1, L), dtype=np.int64)
        data = np.zeros((n + 1, L))
        f = tab.flight_list
        prev, offset = 0, 0
        for i, node in enumerate(visits, start=1):
            offset += f[prev][node]
            M = _stage(exact[i - 1], self._vt(node), offset, gather)
            best = M.argmax(axis=1)
            exact[i] = M[np.arange(L), best]
            trace[i] = best
            collected = value_table(tab, node, self.cap)[1]
            t_idx = np.clip(offset + np.arange(L) - best, 0, tab.T)
            data[i] = np.where(np.isfinite(exact[i]), collected[t_idx, best], 0.0)
            prev = node
        final = exact[n, : budget + 1]
        j = int(final.argmax())
        value = float(final[j])
        durations = [0] * n
        if np.isfinite(value):
            for i in range(n, 0, -1):
                d = int(trace[i, j])
                durations[i - 1] = d
                j -= d
        w = budget + 1
        exact, trace, data = exact[:, :w], trace[:, :w], data[:, :w]
        benefit = np.maximum.accumulate(exact, axis=1)
        return tuple(durations), value, DpTables(benefit, exact, trace, data)


def _as_visits(inst: Instance, route: Sequence[int]) -> tuple[int, ...]:
    route = tuple(int(v) for v in route)
    if len(route) >= 2 and route[0] == 0 and route[-1] == 0:
        route = route[1:-1]
    for node in route:
        if not 1 <= node <= inst.n:
            raise ScheduleError(f"route references unknown AP {node}")
    if len(set(route)) != len(route):
        raise ScheduleError("route visits an AP twice")
    return route


def solve_dcdsp(
    inst: Instance,
    route: Sequence[int],
    budget_slots: int | None = None,
    per_ap_cap: int = DEFAULT_CAP,
    scorer: RouteScorer | None = None,
) -> DurationAssignment:
    """Optimal per-AP collection durations for a fixed visit order.

    ``route`` may be given with or without the surrounding base ``0``s.  The
    budget defaults to the service time affordable after flying the route.
    Ties are broken towards shorter durations.
    """
    visits = _as_visits(inst, route)
    if per_ap_cap < 1:
        raise ValueError("per-AP cap must be >= 1")
    if budget_slots is not None and budget_slots < 0:
        raise ValueError("budget must be nonnegative")
    if scorer is None or scorer.cap != per_ap_cap or scorer.inst is not inst:
        scorer = RouteScorer(inst, per_ap_cap)
    tab = scorer.tab
    if budget_slots is None:
        total_flight = tab.route_flight_slots(visits)
        budget_slots = tab.budget_for_flight(total_flight) if tab.flight_feasible(total_flight) else 0
    durations, _, dp = scorer.assign(visits, budget_slots)
    benefit = evaluate(inst, Schedule.from_visits(visits, durations)).objective
    return DurationAssignment(durations, benefit, budget_slots, dp)


def score_prefix(inst: Instance, route_prefix: Sequence[int], durations_prefix: Sequence[int]) -> Fraction:
    """Objective accumulated by the first visits of a route (exact)."""
    visits = _as_visits(inst, route_prefix)
    if len(durations_prefix) != len(visits):
        raise ScheduleError("prefix durations do not match prefix length")
    if not visits:
        return Fraction(0)
    return evaluate(inst, Schedule.from_visits(visits, durations_prefix)).objective
