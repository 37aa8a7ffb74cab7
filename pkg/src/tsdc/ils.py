"""Iterated local search with DP-scored routes (ILS-MDP).

Every candidate visit order is scored by the duration DP of
:mod:`tsdc.mdp`; the route search itself consists of a time-and-distance
greedy construction, a remove-and-reinsert perturbation and best-improvement
descent over 2-opt, swap and or-opt neighbourhoods.

Randomness comes from one :class:`numpy.random.Generator` backed by PCG64,
seeded from ``SolverConfig.seed``; a run is reproducible bit for bit as long
as the wall-clock limit is not reached.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .instance import Instance
from .mdp import DEFAULT_CAP, RouteScorer
from .schedule import Evaluation, Schedule, build_queue, evaluate

__all__ = [
    "SolverConfig",
    "SolverResult",
    "make_rng",
    "shortest_time_cycle",
    "initialize",
    "perturb",
    "local_search",
    "solve",
    "two_opt_moves",
    "swap_moves",
    "or_opt_moves",
    "drop_moves",
    "insert_moves",
    "exchange_moves",
]


@dataclass(frozen=True)
class SolverConfig:
    stall_limit: int = 15
    wall_clock_limit: float = 1800.0
    seed: int = 0
    per_ap_cap: int = DEFAULT_CAP
    oropt_lengths: tuple[int, ...] = (1, 2, 3)
    # drop/insert moves let the visited set change during descent
    route_edit_moves: bool = True

    def __post_init__(self):
        if self.stall_limit < 1:
            raise ValueError("stall_limit must be >= 1")
        if not self.wall_clock_limit > 0:
            raise ValueError("wall_clock_limit must be positive")
        if self.per_ap_cap < 1:
            raise ValueError("per_ap_cap must be >= 1")
        lengths = tuple(sorted(set(int(x) for x in self.oropt_lengths)))
        if not lengths or lengths[0] < 1:
            raise ValueError("or-opt lengths must be positive")
        object.__setattr__(self, "oropt_lengths", lengths)


@dataclass
class SolverResult:
    best: Schedule
    best_eval: Evaluation
    iterations: int
    wall_seconds: float
    improvement_log: list[tuple[int, float]] = field(default_factory=list)
    timed_out: bool = False

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "best": self.best.to_dict(),
            "best_eval": self.best_eval.to_dict(),
            "iterations": self.iterations,
            "wall_seconds": self.wall_seconds,
            "improvement_log": [[i, v] for i, v in self.improvement_log],
            "timed_out": self.timed_out,
        }


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


def _tol(value: float) -> float:
    return 1e-9 * max(1.0, abs(value))


def shortest_time_cycle(inst: Instance) -> list[int]:
    """APs in request order: the deadline-ordered seed cycle."""
    return build_queue(inst)


# ---------------------------------------------------------------------------
# construction


def _drain_duration(tab, k: int, t: int, cap: int) -> int:
    """Slots to bring AP ``k`` back to its threshold when served from ``t``."""
    alpha, rate, tau = tab.q_alpha[k], tab.q_rate[k], tab.q_tau
    if rate <= alpha:
        return cap
    buffer = min(tab.q_d0[k] + alpha * tau * t, tab.q_dmax[k])
    return max(0, min(cap, math.ceil((buffer - tab.q_dth[k]) / (tau * (rate - alpha)))))


def _timeline(tab, visits: Sequence[int], durations: Sequence[int]) -> tuple[list[int], list[bool], int]:
    """Arrival slots, overflow flags and the slot at which the last AP is left."""
    f = tab.flight_list
    t, prev = 0, 0
    arrivals, over = [], []
    for node, d in zip(visits, durations):
        t += f[prev][node]
        arrivals.append(t)
        full = tab.full_slot(node)
        over.append(full is not None and t > full)
        t += d
        prev = node
    return arrivals, over, t


def initialize(inst: Instance, per_ap_cap: int = DEFAULT_CAP, scorer: RouteScorer | None = None) -> Schedule:
    """Greedy feasible construction over the request-ordered cycle.

    Repeatedly takes the remaining AP with the best score
    ``1 / (position * max(time increase, 1))``; it is appended if reachable
    before it overflows, otherwise inserted at the first position that keeps
    every incumbent's state, otherwise appended anyway.  APs whose flight
    alone would break the energy or mission budget are left out.  When the
    greedy durations do not fit the budget they are re-optimised by the DP.
    """
    scorer = scorer or RouteScorer(inst, per_ap_cap)
    tab = scorer.tab
    f = tab.flight_list
    cap = per_ap_cap
    remaining = shortest_time_cycle(inst)
    visits: list[int] = []
    durs: list[int] = []
    while remaining:
        last = visits[-1] if visits else 0
        best_pos, best_w = 0, -1.0
        for pos, node in enumerate(remaining, start=1):
            delta = f[last][node] + f[node][0] - f[last][0]
            w = 1.0 / (pos * max(delta, 1))
            if w > best_w:
                best_pos, best_w = pos - 1, w
        node = remaining.pop(best_pos)
        if not tab.flight_feasible(tab.route_flight_slots(visits + [node])):
            continue
        _, _, end = _timeline(tab, visits, durs)
        t = end + f[last][node]
        full = tab.full_slot(node)
        if full is None or t <= full:
            visits.append(node)
            durs.append(_drain_duration(tab, node, t, cap))
            continue
        _, states, _ = _timeline(tab, visits, durs)
        placed = False
        for pos in range(len(visits)):
            trial = visits[:pos] + [node] + visits[pos:]
            if not tab.flight_feasible(tab.route_flight_slots(trial)):
                continue
            arr_before, _, _ = _timeline(tab, visits[:pos], durs[:pos])
            prev = visits[pos - 1] if pos else 0
            t_ins = (arr_before[-1] + durs[pos - 1] if pos else 0) + f[prev][node]
            full_i = tab.full_slot(node)
            if full_i is not None and t_ins > full_i:
                continue
            trial_d = durs[:pos] + [_drain_duration(tab, node, t_ins, cap)] + durs[pos:]
            _, new_states, _ = _timeline(tab, trial, trial_d)
            if new_states[:pos] + new_states[pos + 1:] == states:
                visits, durs = trial, trial_d
                placed = True
                break
        if not placed:
            visits.append(node)
            durs.append(_drain_duration(tab, node, t, cap))
    sched = Schedule.from_visits(visits, durs)
    if evaluate(inst, sched, strict=True).reasons:
        durations, _, _ = scorer.assign(visits)
        sched = Schedule.from_visits(visits, durations)
    return sched


# ---------------------------------------------------------------------------
# neighbourhoods (each yields a candidate visit list and its first changed index)


def two_opt_moves(visits: Sequence[int]) -> Iterator[tuple[list[int], int]]:
    n = len(visits)
    v = list(visits)
    for i in range(n - 1):
        for k in range(i + 1, n):
            yield v[:i] + v[i:k + 1][::-1] + v[k + 1:], i


def swap_moves(visits: Sequence[int]) -> Iterator[tuple[list[int], int]]:
    n = len(visits)
    v = list(visits)
    for i in range(n - 1):
        for k in range(i + 2, n):  # adjacent exchanges are 2-opt moves already
            cand = v.copy()
            cand[i], cand[k] = cand[k], cand[i]
            yield cand, i


def or_opt_moves(visits: Sequence[int], lengths: Sequence[int] = (1, 2, 3)) -> Iterator[tuple[list[int], int]]:
    n = len(visits)
    v = list(visits)
    for length in lengths:
        if length >= n:
            continue
        for i in range(n - length + 1):
            seg = v[i:i + length]
            rest = v[:i] + v[i + length:]
            for p in range(len(rest) + 1):
                if p == i:
                    continue
                yield rest[:p] + seg + rest[p:], min(i, p)


def drop_moves(visits: Sequence[int]) -> Iterator[tuple[list[int], int]]:
    v = list(visits)
    for i in range(len(v)):
        yield v[:i] + v[i + 1:], i


def insert_moves(visits: Sequence[int], pool: Sequence[int]) -> Iterator[tuple[list[int], int]]:
    v = list(visits)
    for node in pool:
        for p in range(len(v) + 1):
            yield v[:p] + [node] + v[p:], p


def exchange_moves(visits: Sequence[int], pool: Sequence[int]) -> Iterator[tuple[list[int], int]]:
    v = list(visits)
    for i in range(len(v)):
        for node in pool:
            yield v[:i] + [node] + v[i + 1:], i


def _best_move(scorer: RouteScorer, visits: list[int], current: float, moves) -> tuple[list[int] | None, float]:
    rows = scorer.prefix_rows(visits)
    best, best_score = None, current + _tol(current)
    for cand, start in moves:
        s = scorer.score(cand, rows, start)
        if s > best_score:
            best, best_score = cand, s
    return best, best_score


def _neighbourhoods(inst: Instance, lengths: Sequence[int], route_edits: bool):
    ops = [two_opt_moves, swap_moves, lambda v: or_opt_moves(v, lengths)]
    if route_edits:
        every = range(1, inst.n + 1)
        ops.append(drop_moves)
        ops.append(lambda v: insert_moves(v, [k for k in every if k not in set(v)]))
        ops.append(lambda v: exchange_moves(v, [k for k in every if k not in set(v)]))
    return ops


def _descend(
    scorer: RouteScorer,
    visits: list[int],
    score: float,
    lengths: Sequence[int],
    deadline: float | None,
    route_edits: bool,
) -> tuple[list[int], float]:
    ops = _neighbourhoods(scorer.inst, lengths, route_edits)
    improved = True
    while improved:
        improved = False
        for make in ops:
            if deadline is not None and time.perf_counter() > deadline:
                return visits, score
            cand, s = _best_move(scorer, visits, score, make(visits))
            if cand is not None:
                visits, score = cand, s
                improved = True
    return visits, score


def _finish(scorer: RouteScorer, visits: Sequence[int]) -> Schedule:
    durations, _, _ = scorer.assign(visits)
    return Schedule.from_visits(visits, durations)


def local_search(
    inst: Instance,
    start: Schedule,
    per_ap_cap: int = DEFAULT_CAP,
    oropt_lengths: Sequence[int] = (1, 2, 3),
    scorer: RouteScorer | None = None,
    deadline: float | None = None,
    route_edit_moves: bool = True,
) -> Schedule:
    """Best-improvement descent over 2-opt, swap and or-opt.

    With ``route_edit_moves`` single-AP drops, insertions of unvisited APs
    and visited/unvisited exchanges are tried after those.  Returns ``start`` itself when no neighbour
    beats it.
    """
    scorer = scorer or RouteScorer(inst, per_ap_cap)
    visits = list(start.visits)
    base = float(evaluate(inst, start).objective)
    own = scorer.score(visits)
    new_visits, score = _descend(scorer, visits, max(own, base), oropt_lengths, deadline, route_edit_moves)
    if new_visits == visits and own <= base + _tol(base):
        return start
    return _finish(scorer, new_visits)


def perturb(
    inst: Instance,
    current: Schedule,
    rng: np.random.Generator,
    per_ap_cap: int = DEFAULT_CAP,
    scorer: RouteScorer | None = None,
) -> Schedule | None:
    """Remove ``|V| // 10 + 1`` random visits and reinsert them at random positions.

    The DP-scheduled result is returned only if it is energy feasible and at
    least as good as ``current``; otherwise ``None``.
    """
    visits = list(current.visits)
    if not visits:
        return None
    scorer = scorer or RouteScorer(inst, per_ap_cap)
    xi = min(len(visits) // 10 + 1, len(visits))
    picked = [int(x) for x in rng.choice(len(visits), size=xi, replace=False)]
    removed = [visits[i] for i in picked]
    rest = [v for i, v in enumerate(visits) if i not in set(picked)]
    for node in removed:
        rest.insert(int(rng.integers(0, len(rest) + 1)), node)
    s = scorer.score(rest)
    if not math.isfinite(s):
        return None
    ref = float(evaluate(inst, current).objective)
    if s < ref - _tol(ref):
        return None
    return _finish(scorer, rest)


def solve(inst: Instance, cfg: SolverConfig | None = None) -> SolverResult:
    """Run the full ILS-MDP loop and return the best schedule found."""
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    deadline = t0 + cfg.wall_clock_limit
    rng = make_rng(cfg.seed)
    scorer = RouteScorer(inst, cfg.per_ap_cap)
    start = initialize(inst, cfg.per_ap_cap, scorer)
    # descend from the construction too, otherwise it is only improved via an accepted perturbation
    best = local_search(
        inst, start, cfg.per_ap_cap, cfg.oropt_lengths, scorer, deadline, cfg.route_edit_moves
    )
    best_value = float(evaluate(inst, best).objective)
    log = [(0, best_value)]
    stall = iterations = 0
    timed_out = False
    while stall < cfg.stall_limit:
        if time.perf_counter() > deadline:
            timed_out = True
            break
        iterations += 1
        shaken = perturb(inst, best, rng, cfg.per_ap_cap, scorer)
        if shaken is None:
            stall += 1
            continue
        improved = local_search(
            inst, shaken, cfg.per_ap_cap, cfg.oropt_lengths, scorer, deadline, cfg.route_edit_moves
        )
        value = float(evaluate(inst, improved).objective)
        if value > best_value + _tol(best_value):
            best, best_value = improved, value
            log.append((iterations, value))
            stall = 0
        else:
            stall += 1
    return SolverResult(
        best=best,
        best_eval=evaluate(inst, best),
        iterations=iterations,
        wall_seconds=time.perf_counter() - t0,
        improvement_log=log,
        timed_out=timed_out,
    )
