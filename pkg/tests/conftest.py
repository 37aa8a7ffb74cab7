from __future__ import annotations

import random

import pytest

from tsdc.instance import AccessPoint, Instance, Location, Profile, UavParams, generate_instance
from tsdc.schedule import Schedule

# small area and buffers that request service early keep exact oracles cheap
SMALL = Profile(area=300, initial_fraction=(0.6, 0.75))
LAYOUTS = ("C", "R", "RC")


def make_ap(k, x, y=0.0, alpha=2.0, d0=90.0, dmax=200.0, dth=80.0, snr=3.0) -> AccessPoint:
    return AccessPoint(k, Location(x, y), alpha, d0, dmax, dth, snr)


def make_instance(aps, battery=37000.0, slots=1000, penalty=15.0, speed=10.0, base=(0.0, 0.0), name="hand"):
    uav = UavParams(speed=speed, battery=battery, mission_slots=slots)
    return Instance(name, Location(*base), tuple(aps), uav, penalty)


def one_ap_instance(**ap_kw) -> Instance:
    """AP 100 m from the base; defaults give the hand-worked example."""
    return make_instance([make_ap(1, 100.0, **ap_kw)])


def small_instance(seed: int, n: int | None = None, layout: str | None = None) -> Instance:
    n = n if n is not None else 3 + seed % 4
    layout = layout or LAYOUTS[seed % 3]
    return generate_instance(layout, n, seed, SMALL)


def random_schedule(inst: Instance, rng: random.Random, max_d: int = 12) -> Schedule:
    k = rng.randint(0, inst.n)
    visits = rng.sample(range(1, inst.n + 1), k)
    return Schedule.from_visits(visits, [rng.randint(0, max_d) for _ in visits])


@pytest.fixture
def hand_instance() -> Instance:
    return one_ap_instance()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
