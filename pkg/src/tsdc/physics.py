"""Closed-form link, flight and energy computations.

Everything here is a pure function of its inputs.  Slot counts are integers;
flight durations are rounded up to whole slots.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .instance import AccessPoint, ChannelGainMode, EnergyParams, Instance, Location, RadioParams

__all__ = [
    "ArcCost",
    "transmission_rate",
    "flight_slots",
    "propulsion_power",
    "hover_power",
    "arc_cost",
    "overflow_deadline",
    "service_budget",
    "InstanceTables",
    "tables",
]

# float noise tolerated before a slot count is rounded up
_SLOT_EPS = 1e-9


@dataclass(frozen=True)
class ArcCost:
    flight_slots: int
    flight_energy: float


def transmission_rate(radio: RadioParams, tx_power: float, altitude_link: float = 1.0) -> float:
    """Achievable data per slot of unit length, ``B log2(1 + snr)``.

    In linear-SNR mode ``tx_power`` is the SNR itself; in components mode the
    SNR is ``p * beta / (sigma2 * H^2)``.
    """
    if radio.bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    if radio.channel_gain_mode is ChannelGainMode.COMPONENTS:
        if radio.noise_power <= 0:
            raise ValueError("noise power must be positive")
        if altitude_link <= 0:
            raise ValueError("altitude must be positive")
        snr = tx_power * radio.channel_gain / (radio.noise_power * altitude_link**2)
    else:
        snr = tx_power
    if snr < 0:
        raise ValueError("snr must be nonnegative")
    return radio.bandwidth * math.log2(1.0 + snr)


def _ceil_slots(x: float) -> int:
    r = round(x)
    if abs(x - r) <= _SLOT_EPS * max(1.0, abs(x)):
        return int(r)
    return int(math.ceil(x))


def flight_slots(a: Location, b: Location, speed: float, slot: float) -> int:
    """Whole slots needed to fly from ``a`` to ``b`` (ceiling)."""
    if speed <= 0 or slot <= 0:
        raise ValueError("speed and slot length must be positive")
    d = a.distance(b)
    if d == 0.0:
        return 0
    return max(1, _ceil_slots(d / (speed * slot)))


def propulsion_power(e: EnergyParams, speed: float) -> float:
    """Rotary-wing propulsion power at level flight speed ``speed``."""
    if speed < 0:
        raise ValueError("speed must be nonnegative")
    v2 = speed * speed
    blade = e.blade_profile_power * (1.0 + 3.0 * v2 / e.tip_speed**2)
    # sqrt(1 + x^2) - x rewritten as 1 / (sqrt(1 + x^2) + x) to avoid cancellation
    x = v2 / (2.0 * e.rotor_induced_speed**2)
    induced = e.induced_power * math.sqrt(1.0 / (math.sqrt(1.0 + x * x) + x))
    parasite = 0.5 * e.fuselage_drag_ratio * e.air_density * e.rotor_solidity * e.rotor_disc_area * v2 * speed
    return blade + induced + parasite


def hover_power(e: EnergyParams) -> float:
    """Power drawn while hovering to collect data, ``P(0) = P0 + Pi``."""
    return propulsion_power(e, 0.0)


def arc_cost(inst: Instance, i: int, j: int) -> ArcCost:
    """Flight slots and flight energy on the arc ``i -> j`` (0 is the base)."""
    for node in (i, j):
        if not 0 <= node <= inst.n:
            raise KeyError(f"unknown node id {node}")
    u = inst.uav
    slots = flight_slots(inst.location(i), inst.location(j), u.speed, u.slot_length)
    return ArcCost(slots, propulsion_power(u.energy, u.speed) * slots * u.slot_length)


def overflow_deadline(ap: AccessPoint, mission_slots: int, slot_length: float = 1.0) -> int:
    """Slots of headroom between the threshold crossing and a full buffer.

    Returns ``mission_slots`` when the AP does not grow.
    """
    if ap.growth_rate <= 0:
        return int(mission_slots)
    headroom = Fraction(ap.capacity) - Fraction(ap.threshold)
    return math.floor(headroom / (Fraction(ap.growth_rate) * Fraction(slot_length)))


def service_budget(inst: Instance, route_flight_energy: float, route_flight_slots: int = 0) -> int:
    """Largest total collection time (slots) affordable on a fixed route.

    Energy left after flying is spent hovering at ``P(0)``; the result is also
    clamped to the mission slots not consumed by flight.
    """
    u = inst.uav
    residual = Fraction(u.battery) - Fraction(route_flight_energy)
    per_slot = Fraction(hover_power(u.energy)) * Fraction(u.slot_length)
    by_energy = math.floor(residual / per_slot) if residual > 0 else 0
    by_time = u.mission_slots - int(route_flight_slots)
    return max(0, min(by_energy, by_time))


class InstanceTables:
    """Per-instance constants shared by the evaluator and the solvers.

    Exact rational copies of every float parameter are kept so that energy and
    data bookkeeping can be done without rounding.
    """

    def __init__(self, inst: Instance):
        self.inst = inst
        u = inst.uav
        n = inst.n
        self.n = n
        self.T = u.mission_slots
        self.tau = u.slot_length
        self.flight_power = propulsion_power(u.energy, u.speed)
        self.hover_power = hover_power(u.energy)
        locs = [inst.base] + [ap.location for ap in inst.aps]
        fs = np.zeros((n + 1, n + 1), dtype=np.int64)
        for i in range(n + 1):
            for j in range(i + 1, n + 1):
                fs[i, j] = fs[j, i] = flight_slots(locs[i], locs[j], u.speed, u.slot_length)
        self.flight = fs
        self.flight_list = fs.tolist()
        self.rate = [0.0] + [transmission_rate(u.radio, ap.tx_power, u.altitude_link) for ap in inst.aps]

        self.q_tau = Fraction(u.slot_length)
        self.q_flight_power = Fraction(self.flight_power)
        self.q_hover_power = Fraction(self.hover_power)
        self.q_battery = Fraction(u.battery)
        self.q_penalty = Fraction(inst.penalty)
        self.q_rate = [Fraction(r) for r in self.rate]
        self.q_alpha = [Fraction(0)] + [Fraction(ap.growth_rate) for ap in inst.aps]
        self.q_d0 = [Fraction(0)] + [Fraction(ap.initial_data) for ap in inst.aps]
        self.q_dmax = [Fraction(0)] + [Fraction(ap.capacity) for ap in inst.aps]
        self.q_dth = [Fraction(0)] + [Fraction(ap.threshold) for ap in inst.aps]
        self._budget: dict[int, int] = {}

    def full_slot(self, k: int) -> int | None:
        """Last slot at which AP ``k`` has not lost data (None: never overflows)."""
        alpha = self.q_alpha[k]
        if alpha == 0:
            return None
        return math.floor((self.q_dmax[k] - self.q_d0[k]) / (alpha * self.q_tau))

    def budget_for_flight(self, total_flight_slots: int) -> int:
        """Service budget of any route whose total flight is ``total_flight_slots``."""
        b = self._budget.get(total_flight_slots)
        if b is None:
            energy = self.q_flight_power * total_flight_slots * self.q_tau
            b = service_budget(self.inst, energy, total_flight_slots)
            self._budget[total_flight_slots] = b
        return b

    def route_flight_slots(self, interior) -> int:
        f = self.flight_list
        prev, total = 0, 0
        for node in interior:
            total += f[prev][node]
            prev = node
        return total + f[prev][0]

    def flight_feasible(self, total_flight_slots: int) -> bool:
        if total_flight_slots > self.T:
            return False
        return self.q_flight_power * total_flight_slots * self.q_tau <= self.q_battery


@lru_cache(maxsize=64)
def tables(inst: Instance) -> InstanceTables:
    return InstanceTables(inst)
