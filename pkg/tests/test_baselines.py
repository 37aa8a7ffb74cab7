import itertools
import random

import pytest

from tsdc.baselines import (
    BRUTE_FORCE_CAP, alg2_duration, brute_force, exhaustive_durations, greedy_deadline, uniform_duration,
)
from tsdc.instance import generate_instance
from tsdc.mdp import solve_dcdsp
from tsdc.physics import tables
from tsdc.schedule import Schedule, build_queue, evaluate, feasibility_report, simulate_slots

from conftest import SMALL, make_ap, make_instance, one_ap_instance, small_instance


def simulator_optimum(inst, cap):
    """Best objective over every route and duration vector, scored by the slot simulator only."""
    best = simulate_slots(inst, Schedule()).objective
    for r in range(1, inst.n + 1):
        for visits in itertools.permutations(range(1, inst.n + 1), r):
            for durs in itertools.product(range(cap + 1), repeat=r):
                ev = simulate_slots(inst, Schedule.from_visits(visits, durs), strict=True)
                if not ev.reasons and ev.objective > best:
                    best = ev.objective
    return best


def test_empty():
    inst = make_instance([])
    assert brute_force(inst).best == Schedule()
    assert greedy_deadline(inst) == Schedule()
    assert uniform_duration(inst, 3) == Schedule()


def test_single_ap_two_cases():
    inst = one_ap_instance()
    res = brute_force(inst)
    skip = evaluate(inst, Schedule()).objective
    visit = max(
        evaluate(inst, Schedule.from_visits([1], [d])).objective for d in range(32)
        if not evaluate(inst, Schedule.from_visits([1], [d]), strict=True).reasons
    )
    assert res.objective == max(skip, visit) == 110
    assert res.best == Schedule.from_visits([1], [1])


def test_square_optimum_does_not_cross():
    corners = [(100, 0), (100, 100), (0, 100)]
    aps = [make_ap(k, x, y, alpha=1, d0=9000, dmax=20000, dth=1000) for k, (x, y) in enumerate(corners, 1)]
    # enough for the perimeter plus a little service, not for a diagonal detour
    inst = make_instance(aps, battery=126.03 * 40 + 168.48 * 12)
    res = brute_force(inst)
    assert res.best.visits in {(1, 2, 3), (3, 2, 1)}
    assert res.objective == evaluate(inst, res.best).objective


def test_cap_enforced():
    with pytest.raises(ValueError):
        brute_force(generate_instance("R", BRUTE_FORCE_CAP + 1, 0))
    with pytest.raises(ValueError):
        brute_force(small_instance(0, n=4), max_n=3)


@pytest.mark.parametrize("seed", range(6))
def test_brute_force_matches_simulator_enumeration(seed):
    n = 2 + seed % 2
    inst = small_instance(100 + seed, n=n)
    cap = 4 if n == 3 else 6
    assert brute_force(inst, per_ap_cap=cap).objective == simulator_optimum(inst, cap)


def test_brute_force_small_four_ap():
    inst = small_instance(7, n=4)
    assert brute_force(inst, per_ap_cap=2).objective == simulator_optimum(inst, 2)


@pytest.mark.parametrize("seed", range(8))
def test_brute_force_dominates_baselines(seed):
    inst = small_instance(seed)
    res = brute_force(inst)
    assert res.objective == evaluate(inst, res.best).objective
    assert feasibility_report(inst, res.best, strict=True) == []
    assert res.nodes_explored >= 1
    for sched in (greedy_deadline(inst), uniform_duration(inst, 0), uniform_duration(inst, 5)):
        assert res.objective >= evaluate(inst, sched).objective


def test_exhaustive_durations_agree_with_dp():
    rng = random.Random(3)
    hits = 0
    for seed in range(30):
        inst = small_instance(seed, n=3)
        visits = rng.sample(range(1, 4), rng.randint(1, 3))
        tab = tables(inst)
        flight = tab.route_flight_slots(visits)
        if not tab.flight_feasible(flight):
            continue
        budget = min(12, tab.budget_for_flight(flight))
        durs, value = exhaustive_durations(inst, visits, budget, 5)
        assert value == solve_dcdsp(inst, visits, budget, 5).total_benefit
        hits += 1
    assert hits >= 10


@pytest.mark.parametrize("layout", ["C", "R", "RC"])
def test_greedy_and_uniform_always_feasible(layout):
    for seed in range(34):
        inst = generate_instance(layout, 5 + seed % 30, seed)
        for sched in (greedy_deadline(inst), uniform_duration(inst, 0), uniform_duration(inst, 31)):
            assert feasibility_report(inst, sched) == []


def test_greedy_follows_queue_with_drain_durations():
    inst = generate_instance("C", 15, 1, SMALL)
    sched = greedy_deadline(inst)
    queue = build_queue(inst)
    assert list(sched.visits) == queue[: len(sched.visits)]
    ev = evaluate(inst, sched)
    for k, t, d in list(zip(sched.visits, ev.arrival, sched.durations))[:-1]:
        assert d == alg2_duration(inst, k, t)


def test_uniform_duration_structure():
    inst = small_instance(2, n=5)
    zero = uniform_duration(inst, 0)
    ev = evaluate(inst, zero)
    assert ev.total_collected == 0 and ev.objective == -inst.penalty * ev.total_overflow
    full = uniform_duration(inst, 31)
    assert all(d == 31 for d in full.durations[:-1])
    with pytest.raises(ValueError):
        uniform_duration(inst, -1)
    for d in (0, 3, 31):
        s = uniform_duration(inst, d)
        assert evaluate(inst, s).objective == simulate_slots(inst, s).objective
