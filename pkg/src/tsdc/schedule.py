"""Schedules, their exact evaluation and a slot-by-slot simulation oracle.

Data volumes are tracked as :class:`fractions.Fraction` built from the float
parameters, so :func:`evaluate` (closed form) and :func:`simulate_slots`
(slot stepping) agree exactly rather than to a tolerance.

Semantics shared by both routines:

* the UAV leaves the base at slot 0; arrival at a visited AP is the sum of
  the preceding flight slots and collection durations;
* an AP's buffer grows by ``alpha * tau`` per slot from mission start and is
  clamped at capacity; whatever is clamped away before the UAV arrives is
  the AP's overflow, and the AP is in the overflow state iff that loss is
  positive (equivalently, arrival is after the last slot with a non-full
  buffer);
* the UAV collects the data present on arrival at rate ``R`` per slot, so a
  visit collects ``min(d * tau * R, buffer_at_arrival)``; data generated after
  arrival belongs to the next mission;
* unvisited APs contribute neither collected data nor overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .instance import AccessPoint, Instance
from .physics import InstanceTables, tables

__all__ = [
    "Schedule",
    "Evaluation",
    "ScheduleError",
    "ENERGY",
    "MISSION_TIME",
    "ROUTE_STRUCTURE",
    "DURATION_SIGN",
    "COLLECTION_BOUNDS",
    "request_slot",
    "build_queue",
    "evaluate",
    "simulate_slots",
    "feasibility_report",
    "min_drain_slots",
    "collection_admissible",
]

ENERGY = "ENERGY"
MISSION_TIME = "MISSION_TIME"
ROUTE_STRUCTURE = "ROUTE_STRUCTURE"
DURATION_SIGN = "DURATION_SIGN"
COLLECTION_BOUNDS = "COLLECTION_BOUNDS"


class ScheduleError(ValueError):
    """Structural problem that prevents evaluating a schedule at all."""


@dataclass(frozen=True)
class Schedule:
    """Visit order (``0 ... 0``) and per-visit collection durations in slots."""

    route: tuple[int, ...] = (0, 0)
    durations: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "route", tuple(int(v) for v in self.route))
        durs = []
        for d in self.durations:
            if int(d) != d:
                raise ScheduleError(f"duration {d!r} is not a whole number of slots")
            durs.append(int(d))
        object.__setattr__(self, "durations", tuple(durs))

    @classmethod
    def from_visits(cls, visits: Sequence[int], durations: Sequence[int] | None = None) -> "Schedule":
        visits = tuple(visits)
        if durations is None:
            durations = (0,) * len(visits)
        return cls((0,) + visits + (0,), tuple(durations))

    @property
    def visits(self) -> tuple[int, ...]:
        return self.route[1:-1]

    def to_dict(self) -> dict:
        return {"schema": 1, "route": list(self.route), "durations": list(self.durations)}

    @classmethod
    def from_dict(cls, doc: dict) -> "Schedule":
        try:
            return cls(tuple(doc["route"]), tuple(doc["durations"]))
        except (KeyError, TypeError) as exc:
            raise ScheduleError(f"malformed schedule document: {exc}") from None


@dataclass
class Evaluation:
    arrival: list[int]
    state: list[int]
    collected_per_ap: list[Fraction]
    overflow_per_ap: list[Fraction]
    total_collected: Fraction
    total_overflow: Fraction
    objective: Fraction
    energy_used: Fraction
    service_slots_used: int
    flight_slots_used: int
    mission_slots_used: int
    feasible: bool
    reasons: list[str] = field(default_factory=list)
    collection_warnings: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "arrival": list(self.arrival),
            "state": list(self.state),
            "collected_per_ap": [float(c) for c in self.collected_per_ap],
            "overflow_per_ap": [float(o) for o in self.overflow_per_ap],
            "total_collected": float(self.total_collected),
            "total_overflow": float(self.total_overflow),
            "objective": float(self.objective),
            "energy_used": float(self.energy_used),
            "service_slots_used": self.service_slots_used,
            "flight_slots_used": self.flight_slots_used,
            "mission_slots_used": self.mission_slots_used,
            "feasible": self.feasible,
            "reasons": list(self.reasons),
            "collection_warnings": list(self.collection_warnings),
        }


def request_slot(ap: AccessPoint, mission_slots: int, slot_length: float = 1.0) -> int:
    """First slot at which the AP's buffer reaches its threshold.

    ``mission_slots`` is returned as a sentinel when this never happens
    during the mission.
    """
    d0, dth = Fraction(ap.initial_data), Fraction(ap.threshold)
    if d0 >= dth:
        return 0
    if ap.growth_rate <= 0:
        return int(mission_slots)
    t = math.ceil((dth - d0) / (Fraction(ap.growth_rate) * Fraction(slot_length)))
    return min(int(t), int(mission_slots))


def build_queue(inst: Instance) -> list[int]:
    """AP ids that request service during the mission, by request slot then id."""
    T, tau = inst.uav.mission_slots, inst.uav.slot_length
    keyed = [(request_slot(ap, T, tau), ap.id) for ap in inst.aps]
    return [ap_id for slot, ap_id in sorted(keyed) if slot < T]


def min_drain_slots(tab: InstanceTables, k: int, t: int) -> int | None:
    """Fewest slots that bring AP ``k`` (served from slot ``t``) to its threshold.

    The AP keeps growing while it is served.  ``None`` when draining is
    impossible because the growth rate is not below the collection rate.
    """
    alpha, rate, tau = tab.q_alpha[k], tab.q_rate[k], tab.q_tau
    if rate <= alpha:
        return None
    buffer = min(tab.q_d0[k] + alpha * tau * t, tab.q_dmax[k])
    excess = buffer - tab.q_dth[k]
    if excess <= 0:
        return 0
    return math.ceil(excess / (tau * (rate - alpha)))


def collection_admissible(tab: InstanceTables, k: int, t: int, d: int, overflowed: bool) -> bool:
    """Whether a visit of ``d`` slots at arrival ``t`` respects the drain bound.

    Zero-duration (pass-by) visits, visits to overflowed APs and visits to
    APs that cannot be drained are always admissible.
    """
    if d <= 0 or overflowed:
        return True
    need = min_drain_slots(tab, k, t)
    return need is None or d >= need


def _structure(inst: Instance, sched: Schedule) -> list[str]:
    route, visits = sched.route, sched.visits
    if len(route) < 2:
        raise ScheduleError("route must contain at least the base twice")
    if len(sched.durations) != len(visits):
        raise ScheduleError(
            f"{len(sched.durations)} durations for {len(visits)} visited APs"
        )
    for node in visits:
        if node != 0 and not 1 <= node <= inst.n:
            raise ScheduleError(f"route references unknown AP {node}")
    reasons = []
    if route[0] != 0 or route[-1] != 0 or 0 in visits or len(set(visits)) != len(visits):
        reasons.append(ROUTE_STRUCTURE)
    if any(d < 0 for d in sched.durations):
        reasons.append(DURATION_SIGN)
    return reasons


def evaluate(inst: Instance, sched: Schedule, strict: bool = False) -> Evaluation:
    """Closed-form evaluation of ``sched`` on ``inst``.

    With ``strict=True`` violations of the drain bound (collect at least down
    to the threshold when serving a non-overflowed AP) make the schedule
    infeasible under :data:`COLLECTION_BOUNDS`; otherwise they are only listed
    in ``collection_warnings``.
    """
    reasons = _structure(inst, sched)
    tab = tables(inst)
    f, tau = tab.flight_list, tab.q_tau
    t, prev = 0, 0
    flight = service = 0
    seen: set[int] = set()
    arrival, state, collected, overflow, warnings = [], [], [], [], []
    for node, d in zip(sched.visits, sched.durations):
        d = max(d, 0)
        leg = f[prev][node]
        t += leg
        flight += leg
        arrival.append(t)
        if node == 0 or node in seen:
            state.append(0)
            collected.append(Fraction(0))
            overflow.append(Fraction(0))
        else:
            seen.add(node)
            grown = tab.q_d0[node] + tab.q_alpha[node] * tau * t
            full = tab.full_slot(node)
            s = 1 if full is not None and t > full else 0
            buffer = min(grown, tab.q_dmax[node])
            state.append(s)
            overflow.append(max(Fraction(0), grown - tab.q_dmax[node]))
            collected.append(min(d * tau * tab.q_rate[node], buffer))
            if not collection_admissible(tab, node, t, d, bool(s)):
                warnings.append(node)
        t += d
        service += d
        prev = node
    leg = f[prev][0]
    t += leg
    flight += leg
    energy = (tab.q_flight_power * flight + tab.q_hover_power * service) * tau
    if energy > tab.q_battery:
        reasons.append(ENERGY)
    if t > tab.T:
        reasons.append(MISSION_TIME)
    if strict and warnings:
        reasons.append(COLLECTION_BOUNDS)
    total_c = sum(collected, Fraction(0))
    total_o = sum(overflow, Fraction(0))
    return Evaluation(
        arrival=arrival,
        state=state,
        collected_per_ap=collected,
        overflow_per_ap=overflow,
        total_collected=total_c,
        total_overflow=total_o,
        objective=total_c - tab.q_penalty * total_o,
        energy_used=energy,
        service_slots_used=service,
        flight_slots_used=flight,
        mission_slots_used=t,
        feasible=not reasons,
        reasons=reasons,
        collection_warnings=warnings,
    )


def simulate_slots(inst: Instance, sched: Schedule, strict: bool = False) -> Evaluation:
    """Reference evaluation that advances the mission one slot at a time.

    Every AP not yet reached grows each slot and loses the part above its
    capacity; the UAV flies, then drains the buffer it found on arrival slot
    by slot.  Independent of :func:`evaluate` apart from shared constants.
    """
    reasons = _structure(inst, sched)
    tab = tables(inst)
    tau = tab.q_tau
    n = inst.n
    buffer = [tab.q_d0[k] for k in range(n + 1)]
    lost = [Fraction(0)] * (n + 1)
    reached = [False] * (n + 1)
    reached[0] = True
    clock = 0
    energy = Fraction(0)
    flight_used = service_used = 0

    def tick(power: Fraction) -> None:
        nonlocal clock, energy
        clock += 1
        energy += power * tau
        for k in range(1, n + 1):
            if reached[k]:
                continue
            buffer[k] += tab.q_alpha[k] * tau
            if buffer[k] > tab.q_dmax[k]:
                lost[k] += buffer[k] - tab.q_dmax[k]
                buffer[k] = tab.q_dmax[k]

    arrival, state, collected, overflow, warnings = [], [], [], [], []
    here = 0
    legs = list(zip(sched.visits, sched.durations)) + [(0, 0)]
    for idx, (node, d) in enumerate(legs):
        for _ in range(tab.flight_list[here][node]):
            tick(tab.q_flight_power)
            flight_used += 1
        here = node
        if idx == len(legs) - 1:
            break
        d = max(d, 0)
        arrival.append(clock)
        first = node != 0 and not reached[node]
        if first:
            reached[node] = True
            s = 1 if lost[node] > 0 else 0
            pool, found = buffer[node], buffer[node]
            per_slot = tab.q_rate[node] * tau
        else:
            s, pool, found, per_slot = 0, Fraction(0), Fraction(0), Fraction(0)
        got = Fraction(0)
        for _ in range(d):
            take = min(per_slot, pool)
            pool -= take
            got += take
            tick(tab.q_hover_power)
            service_used += 1
        state.append(s)
        collected.append(got)
        overflow.append(lost[node] if first else Fraction(0))
        if first and d > 0 and not s and tab.q_rate[node] > tab.q_alpha[node]:
            # buffer left if the AP kept growing while being drained
            if found + (tab.q_alpha[node] - tab.q_rate[node]) * tau * d > tab.q_dth[node]:
                warnings.append(node)
    if energy > tab.q_battery:
        reasons.append(ENERGY)
    if clock > tab.T:
        reasons.append(MISSION_TIME)
    if strict and warnings:
        reasons.append(COLLECTION_BOUNDS)
    total_c = sum(collected, Fraction(0))
    total_o = sum(overflow, Fraction(0))
    return Evaluation(
        arrival=arrival,
        state=state,
        collected_per_ap=collected,
        overflow_per_ap=overflow,
        total_collected=total_c,
        total_overflow=total_o,
        objective=total_c - tab.q_penalty * total_o,
        energy_used=energy,
        service_slots_used=service_used,
        flight_slots_used=flight_used,
        mission_slots_used=clock,
        feasible=not reasons,
        reasons=reasons,
        collection_warnings=warnings,
    )


def feasibility_report(inst: Instance, sched: Schedule, strict: bool = False) -> list[str]:
    """Violated constraint families; empty iff ``evaluate(...).feasible``."""
    return list(evaluate(inst, sched, strict=strict).reasons)
