import random
import re
from fractions import Fraction

import pytest

from tsdc.baselines import brute_force, greedy_deadline
from tsdc.ils import initialize, local_search
from tsdc.milp import (
    MilpSolutionError, build_model, expected_row_count, induced_assignment, objective_value, parse_solution,
    read_solution, violated_rows, write_lp,
)
from tsdc.physics import hover_power, tables
from tsdc.schedule import ENERGY, Schedule, evaluate, feasibility_report

from conftest import make_ap, make_instance, one_ap_instance, small_instance

NAME = r"[A-Za-z_][A-Za-z0-9_.]*"
NUM = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
TERM = re.compile(rf"\s*([+-])?\s*({NUM})?\s*({NAME})\s*")


def parse_expr(text):
    terms, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = TERM.match(text, pos)
        if not m or m.end() == pos:
            raise SyntaxError(f"bad term at {text[pos:pos + 20]!r}")
        if terms and m.group(1) is None:
            raise SyntaxError("missing operator between terms")
        coef = float(m.group(2)) if m.group(2) else 1.0
        terms.append((m.group(3), -coef if m.group(1) == "-" else coef))
        pos = m.end()
    if not terms:
        raise SyntaxError("empty expression")
    return terms


def check_lp_grammar(text):
    """Minimal CPLEX LP reader: returns (objective terms, rows, bounds, binaries)."""
    lines = [ln.split("\\", 1)[0].rstrip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln.strip()]
    sections = {"maximize", "subject to", "bounds", "binaries", "end"}
    stmts, current = [], None
    for ln in lines:
        key = ln.strip().lower()
        if key in sections:
            current = key
            stmts.append((key, []))
        elif current is None:
            raise SyntaxError("content before the first section")
        elif ln.startswith("   ") and stmts[-1][1]:
            stmts[-1][1][-1] += " " + ln.strip()  # continuation line
        else:
            stmts[-1][1].append(ln.strip())
    order = [s for s, _ in stmts]
    assert order == ["maximize", "subject to", "bounds", "binaries", "end"], order
    body = dict(stmts)
    (obj,) = body["maximize"]
    name, expr = obj.split(":", 1)
    objective = parse_expr(expr)
    rows = {}
    for stmt in body["subject to"]:
        m = re.fullmatch(rf"({NAME}):\s*(.+?)\s*(<=|>=|=)\s*({NUM})", stmt)
        if not m:
            raise SyntaxError(f"bad constraint {stmt!r}")
        assert m.group(1) not in rows, "duplicate row name"
        rows[m.group(1)] = (parse_expr(m.group(2)), m.group(3), float(m.group(4)))
    bounds = {}
    for stmt in body["bounds"]:
        m = re.fullmatch(rf"({NUM})\s*<=\s*({NAME})\s*<=\s*({NUM})", stmt)
        if m:
            bounds[m.group(2)] = (float(m.group(1)), float(m.group(3)))
            continue
        m = re.fullmatch(rf"({NAME})\s*>=\s*({NUM})", stmt)
        if not m:
            raise SyntaxError(f"bad bound {stmt!r}")
        bounds[m.group(1)] = (float(m.group(2)), None)
    binaries = [tok for stmt in body["binaries"] for tok in stmt.split()]
    assert body["end"] == []
    declared = set(bounds) | set(binaries)
    used = {v for v, _ in objective} | {v for terms, _, _ in rows.values() for v, _ in terms}
    assert used <= declared, used - declared
    return objective, rows, bounds, binaries


def test_one_ap_hand_count():
    m = build_model(one_ap_instance())
    for fam, count in {"x": 2, "y": 1, "s": 1, "t": 1, "Tc": 1, "c": 1}.items():
        assert m.families[fam] == count
    # overflow amount and visit position are the two auxiliary families
    assert m.families["o"] == 1 and m.families["u"] == 1
    assert len(m.rows) == expected_row_count(1) == 17


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_row_counts(n):
    inst = small_instance(n, n=n)
    m = build_model(inst)
    assert len(m.rows) == expected_row_count(n) == 2 * n * n + 12 * n + 3
    assert len(build_model(inst, strict_collection=True).rows) == expected_row_count(n, True)
    assert len(m.rows_with_prefix("flow_")) == n
    assert len(m.rows_with_prefix("degree_")) == n
    assert len(m.rows_with_prefix("order_")) == n * (n - 1)


def test_big_m():
    inst = small_instance(3, n=3)
    m = build_model(inst, per_ap_cap=31)
    legs = tables(inst).flight_list
    max_leg = max(legs[i][j] for i in range(4) for j in range(4))
    assert m.big_m == inst.uav.mission_slots + max_leg + 31


def test_errors():
    with pytest.raises(ValueError):
        build_model(make_instance([]))
    with pytest.raises(ValueError):
        build_model(one_ap_instance(), per_ap_cap=0)


def test_lp_grammar_and_stability():
    m = build_model(small_instance(2, n=3))
    text = write_lp(m)
    assert text == write_lp(build_model(small_instance(2, n=3)))
    objective, rows, bounds, binaries = check_lp_grammar(text)
    assert len(rows) == len(m.rows)
    assert sorted(binaries) == sorted(v.name for v in m.variables if v.kind == "binary")
    assert {name for name, _ in objective} == {f"c_{k}" for k in (1, 2, 3)} | {f"o_{k}" for k in (1, 2, 3)}


def test_lp_coefficients_match_model():
    m = build_model(one_ap_instance())
    _, rows, _, _ = check_lp_grammar(write_lp(m))
    for r in m.rows:
        terms, sense, rhs = rows[r.name]
        assert sense == r.sense and rhs == pytest.approx(float(r.rhs))
        assert dict(terms) == pytest.approx({v: float(c) for v, c in r.coeffs})


def test_hand_solution_round_trip():
    inst = one_ap_instance()
    m = build_model(inst)
    text = "\n".join([
        "# optimal one-AP plan", "x_0_1 1", "x_1_0 1", "y_1 1", "s_1 0", "t_1 10", "Tc_1 1", "c_1 110",
        "o_1 0", "u_1 1",
    ])
    sched = read_solution(m, text)
    assert sched == Schedule.from_visits([1], [1])
    values = {k: Fraction(v) for k, v in parse_solution(text).items()}
    assert violated_rows(m, values) == []
    assert objective_value(m, values) == evaluate(inst, sched).objective == 110


def test_read_two_ap_tour():
    inst = small_instance(4, n=2)
    sched = read_solution(build_model(inst), {"x_0_2": 1, "x_2_1": 1, "x_1_0": 1, "Tc_2": 2.0, "Tc_1": 3.2})
    assert sched.route == (0, 2, 1, 0) and sched.durations == (2, 3)


@pytest.mark.parametrize(
    "values, fragment",
    [
        ({}, "no departing arc from base"),
        ({"x_0_1": 1, "x_1_0": 1, "x_2_3": 1, "x_3_2": 1}, "subtour"),
        ({"x_0_1": 1, "x_1_2": 1, "x_2_1": 1}, "subtour"),
        ({"x_0_1": 1, "x_0_2": 1, "x_1_0": 1}, "departing arcs"),
    ],
)
def test_read_solution_errors(values, fragment):
    with pytest.raises(MilpSolutionError, match=fragment):
        read_solution(build_model(small_instance(5, n=3)), values)


def test_parse_solution_errors():
    with pytest.raises(MilpSolutionError):
        parse_solution("x_0_1")
    with pytest.raises(MilpSolutionError):
        parse_solution("x_0_1 one")


def test_energy_violation_detected():
    inst = one_ap_instance()
    m = build_model(inst, per_ap_cap=400)
    big = int(inst.uav.battery / hover_power(inst.uav.energy)) + 1
    sched = read_solution(m, {"x_0_1": 1, "x_1_0": 1, "Tc_1": big})
    assert ENERGY in feasibility_report(inst, sched)
    assert "energy" in violated_rows(m, induced_assignment(m, sched))


def feasible_schedules(count=12):
    rng = random.Random(9)
    out = []
    seed = 0
    while len(out) < count:
        inst = small_instance(seed, n=1 + seed % 5)
        seed += 1
        for sched in (brute_force(inst).best, greedy_deadline(inst), local_search(inst, initialize(inst))):
            if sched.visits and not feasibility_report(inst, sched):
                out.append((inst, sched))
        if rng.random() < 0.5 and inst.n:
            visits = rng.sample(range(1, inst.n + 1), rng.randint(1, inst.n))
            s = Schedule.from_visits(visits, [rng.randint(0, 31) for _ in visits])
            if not feasibility_report(inst, s):
                out.append((inst, s))
    return out


@pytest.mark.parametrize("strict", [False, True])
def test_induced_assignment_is_sound(strict):
    checked = 0
    for inst, sched in feasible_schedules():
        if strict and feasibility_report(inst, sched, strict=True):
            continue
        m = build_model(inst, strict_collection=strict)
        values = induced_assignment(m, sched)
        assert violated_rows(m, values) == []
        assert objective_value(m, values) == evaluate(inst, sched).objective
        assert read_solution(m, {k: float(v) for k, v in values.items()}) == sched
        checked += 1
    assert checked >= 5


def test_overflow_linearisation_exact():
    inst = one_ap_instance(dmax=106.0)
    m = build_model(inst)
    values = induced_assignment(m, Schedule.from_visits([1], [5]))
    assert values["s_1"] == 1 and values["o_1"] == 4
    assert violated_rows(m, values) == []
    # pretending the AP did not overflow must break a state or overflow row
    values["s_1"], values["o_1"] = Fraction(0), Fraction(0)
    assert any(r.startswith(("state_", "overflow_")) for r in violated_rows(m, values))


def test_external_solver_reads_and_bounds(tmp_path):
    highspy = pytest.importorskip("highspy")
    for seed, n in ((101, 2), (102, 3)):
        inst = small_instance(seed, n=n)
        m = build_model(inst)
        path = tmp_path / f"m{seed}.lp"
        path.write_text(write_lp(m))
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("time_limit", 30.0)
        assert h.readModel(str(path)) == highspy.HighsStatus.kOk
        assert (h.getNumRow(), h.getNumCol()) == (len(m.rows), len(m.variables))
        h.run()
        best = brute_force(inst).objective
        assert h.getInfo().mip_dual_bound >= float(best) - 1e-6 * abs(float(best))
