"""Mixed-integer model export (CPLEX LP text) and solution read-back.

Variables (node 0 is the base, APs are 1..N):

* ``x_i_j``  binary, arc ``i -> j`` flown
* ``y_i``    binary, AP visited
* ``s_i``    binary, AP overflowed on arrival
* ``t_i``    arrival slot, ``0 <= t_i <= T``
* ``Tc_i``   collection slots, ``0 <= Tc_i <= cap``
* ``c_i``    data collected
* ``o_i``    data lost to overflow before arrival (linearised ``s_i * (D0 + a*tau*t_i - Dmax)``)
* ``u_i``    visit position for subtour elimination, ``1 <= u_i <= N``

All coefficients are kept as exact fractions so that a schedule's induced
assignment can be checked row by row without rounding.  The base must be
left exactly once, so the empty schedule has no representation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .instance import Instance
from .mdp import DEFAULT_CAP
from .physics import tables
from .schedule import Schedule, evaluate

__all__ = [
    "Variable",
    "Row",
    "MilpModel",
    "MilpSolutionError",
    "build_model",
    "expected_row_count",
    "write_lp",
    "parse_solution",
    "read_solution",
    "induced_assignment",
    "violated_rows",
    "objective_value",
]

BINARY, CONTINUOUS = "binary", "continuous"


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lower: Fraction = Fraction(0)
    upper: Fraction | None = None


@dataclass(frozen=True)
class Row:
    name: str
    coeffs: tuple[tuple[str, Fraction], ...]
    sense: str  # "<=", ">=" or "="
    rhs: Fraction

    def activity(self, values: Mapping[str, Fraction]) -> Fraction:
        return sum((c * values.get(v, Fraction(0)) for v, c in self.coeffs), Fraction(0))

    def satisfied(self, values: Mapping[str, Fraction]) -> bool:
        lhs = self.activity(values)
        if self.sense == "<=":
            return lhs <= self.rhs
        if self.sense == ">=":
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass
class MilpModel:
    instance: Instance
    variables: list[Variable]
    rows: list[Row]
    objective: tuple[tuple[str, Fraction], ...]
    big_m: Fraction
    overflow_m: Fraction
    per_ap_cap: int
    strict_collection: bool = False
    families: dict[str, int] = field(default_factory=dict)

    def row(self, name: str) -> Row:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def rows_with_prefix(self, prefix: str) -> list[Row]:
        return [r for r in self.rows if r.name.startswith(prefix)]


class MilpSolutionError(ValueError):
    """Solution values do not describe a single tour from the base."""


def expected_row_count(n: int, strict_collection: bool = False) -> int:
    """Closed-form number of rows for ``n`` APs."""
    return 2 * n * n + 12 * n + 3 + (n if strict_collection else 0)


Q = Fraction


def _lin(*terms: tuple[str, Fraction | int]) -> tuple[tuple[str, Fraction], ...]:
    merged: dict[str, Fraction] = {}
    for name, coef in terms:
        merged[name] = merged.get(name, Q(0)) + Q(coef)
    return tuple((n, c) for n, c in merged.items() if c != 0)


def build_model(inst: Instance, per_ap_cap: int = DEFAULT_CAP, strict_collection: bool = False) -> MilpModel:
    """Exact MILP for ``inst`` with collection durations capped at ``per_ap_cap``.

    ``strict_collection`` adds the lower collection bound for visited,
    non-overflowed APs (collect at least the excess above the threshold
    present on arrival).
    """
    n = inst.n
    if n < 1:
        raise ValueError("the model needs at least one AP")
    if per_ap_cap < 1:
        raise ValueError("per-AP cap must be >= 1")
    tab = tables(inst)
    f = tab.flight_list
    T, tau = tab.T, tab.q_tau
    cap = Q(per_ap_cap)
    aps = range(1, n + 1)
    nodes = range(0, n + 1)
    arcs = [(i, j) for i in nodes for j in nodes if i != j]
    max_leg = max(f[i][j] for i, j in arcs)
    big_m = Q(T + max_leg + per_ap_cap)
    overflow_m = max(tab.q_alpha[k] * tau * T + tab.q_dmax[k] for k in aps)

    variables: list[Variable] = []
    variables += [Variable(f"x_{i}_{j}", BINARY, Q(0), Q(1)) for i, j in arcs]
    variables += [Variable(f"y_{k}", BINARY, Q(0), Q(1)) for k in aps]
    variables += [Variable(f"s_{k}", BINARY, Q(0), Q(1)) for k in aps]
    variables += [Variable(f"t_{k}", CONTINUOUS, Q(0), Q(T)) for k in aps]
    variables += [Variable(f"Tc_{k}", CONTINUOUS, Q(0), cap) for k in aps]
    variables += [Variable(f"c_{k}", CONTINUOUS, Q(0), None) for k in aps]
    variables += [Variable(f"o_{k}", CONTINUOUS, Q(0), None) for k in aps]
    variables += [Variable(f"u_{k}", CONTINUOUS, Q(1), Q(n)) for k in aps]

    rows: list[Row] = []
    add = rows.append
    energy = [(f"Tc_{k}", tab.q_hover_power * tau) for k in aps]
    energy += [(f"x_{i}_{j}", tab.q_flight_power * tau * f[i][j]) for i, j in arcs if f[i][j]]
    add(Row("energy", _lin(*energy), "<=", tab.q_battery))

    # arrival coupling along flown arcs; from the base the UAV leaves at slot 0
    for j in aps:
        add(Row(f"time_0_{j}", _lin((f"x_0_{j}", big_m), (f"t_{j}", -1)), "<=", big_m - f[0][j]))
    for i in aps:
        for j in aps:
            if i == j:
                continue
            add(Row(
                f"time_{i}_{j}",
                _lin((f"t_{i}", 1), (f"Tc_{i}", 1), (f"t_{j}", -1), (f"x_{i}_{j}", big_m)),
                "<=", big_m - f[i][j],
            ))
    for i in aps:
        add(Row(
            f"mission_{i}",
            _lin((f"t_{i}", 1), (f"Tc_{i}", 1), (f"x_{i}_0", big_m)),
            "<=", Q(T) + big_m - f[i][0],
        ))

    for k in aps:
        full = tab.full_slot(k)
        deadline = Q(T if full is None else min(full, T))
        # t > deadline with whole-slot times is written as t >= deadline + 1
        add(Row(f"state_a_{k}", _lin((f"t_{k}", 1), (f"s_{k}", -big_m)), ">=", deadline + 1 - big_m))
        add(Row(f"state_b_{k}", _lin((f"t_{k}", 1), (f"s_{k}", -big_m)), "<=", deadline))
        growth = tab.q_alpha[k] * tau
        excess0 = tab.q_d0[k] - tab.q_dmax[k]
        add(Row(
            f"overflow_a_{k}",
            _lin((f"o_{k}", 1), (f"t_{k}", -growth), (f"s_{k}", -overflow_m)),
            ">=", excess0 - overflow_m,
        ))
        add(Row(f"overflow_b_{k}", _lin((f"o_{k}", 1), (f"s_{k}", -overflow_m)), "<=", Q(0)))
        add(Row(
            f"overflow_c_{k}",
            _lin((f"o_{k}", 1), (f"t_{k}", -growth), (f"s_{k}", overflow_m)),
            "<=", excess0 + overflow_m,
        ))
        add(Row(f"state_visit_{k}", _lin((f"s_{k}", 1), (f"y_{k}", -1)), "<=", Q(0)))
        add(Row(f"collect_rate_{k}", _lin((f"c_{k}", 1), (f"Tc_{k}", -tab.q_rate[k] * tau)), "<=", Q(0)))
        add(Row(f"collect_buffer_{k}", _lin((f"c_{k}", 1), (f"t_{k}", -growth)), "<=", tab.q_d0[k]))
        add(Row(f"collect_visit_{k}", _lin((f"c_{k}", 1), (f"y_{k}", -tab.q_dmax[k])), "<=", Q(0)))
        add(Row(f"duration_visit_{k}", _lin((f"Tc_{k}", 1), (f"y_{k}", -cap)), "<=", Q(0)))
        if strict_collection:
            mc = tab.q_dmax[k]
            add(Row(
                f"collect_floor_{k}",
                _lin((f"c_{k}", 1), (f"t_{k}", -growth), (f"y_{k}", -mc), (f"s_{k}", mc)),
                ">=", tab.q_d0[k] - tab.q_dth[k] - mc,
            ))

    for k in aps:
        out = [(f"x_{k}_{j}", 1) for j in nodes if j != k]
        add(Row(f"degree_{k}", _lin(*out, (f"y_{k}", -1)), "=", Q(0)))
    for k in aps:
        inflow = [(f"x_{i}_{k}", 1) for i in nodes if i != k]
        outflow = [(f"x_{k}_{j}", -1) for j in nodes if j != k]
        add(Row(f"flow_{k}", _lin(*inflow, *outflow), "=", Q(0)))
    add(Row("depot_out", _lin(*[(f"x_0_{j}", 1) for j in aps]), "=", Q(1)))
    add(Row("depot_in", _lin(*[(f"x_{j}_0", 1) for j in aps]), "=", Q(1)))
    for i in aps:
        for j in aps:
            if i != j:
                add(Row(f"order_{i}_{j}", _lin((f"u_{i}", 1), (f"u_{j}", -1), (f"x_{i}_{j}", n)), "<=", Q(n - 1)))

    objective = _lin(*[(f"c_{k}", 1) for k in aps], *[(f"o_{k}", -tab.q_penalty) for k in aps])
    families: dict[str, int] = {}
    for v in variables:
        fam = v.name.split("_")[0]
        families[fam] = families.get(fam, 0) + 1
    return MilpModel(inst, variables, rows, objective, big_m, overflow_m, per_ap_cap, strict_collection, families)


# ---------------------------------------------------------------------------
# LP text


def _num(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return repr(float(q))


def _expr(terms: Iterable[tuple[str, Fraction]], per_line: int = 6) -> str:
    parts = []
    for idx, (name, coef) in enumerate(terms):
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = name if mag == 1 else f"{_num(mag)} {name}"
        if idx == 0:
            parts.append(("- " if coef < 0 else "") + body)
        else:
            parts.append(f"{sign} {body}")
    if not parts:
        return "0 " + "x_0_1"  # placeholder keeps the grammar valid; never emitted in practice
    lines = [" ".join(parts[i:i + per_line]) for i in range(0, len(parts), per_line)]
    return "\n   ".join(lines)


def write_lp(model: MilpModel) -> str:
    """CPLEX LP text; deterministic for equal models."""
    out = [f"\\ data collection model for instance {model.instance.name}", "Maximize"]
    out.append(f" obj: {_expr(model.objective)}")
    out.append("Subject To")
    for r in model.rows:
        out.append(f" {r.name}: {_expr(r.coeffs)} {r.sense} {_num(r.rhs)}")
    out.append("Bounds")
    for v in model.variables:
        if v.kind == BINARY:
            continue
        if v.upper is None:
            out.append(f" {v.name} >= {_num(v.lower)}")
        else:
            out.append(f" {_num(v.lower)} <= {v.name} <= {_num(v.upper)}")
    out.append("Binaries")
    names = [v.name for v in model.variables if v.kind == BINARY]
    for i in range(0, len(names), 8):
        out.append(" " + " ".join(names[i:i + 8]))
    out.append("End")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# solutions


def parse_solution(text: str) -> dict[str, float]:
    """``name value`` lines; blank lines and ``#`` comments are skipped."""
    values: dict[str, float] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise MilpSolutionError(f"line {lineno}: expected 'name value'")
        try:
            values[parts[0]] = float(parts[1])
        except ValueError:
            raise MilpSolutionError(f"line {lineno}: value {parts[1]!r} is not a number") from None
    return values


def read_solution(model: MilpModel, text: str | Mapping[str, float]) -> Schedule:
    """Schedule encoded by a solution (variables not listed count as 0).

    The route follows active arcs from the base; durations are ``Tc`` rounded
    to whole slots.  Check the result with
    :func:`tsdc.schedule.feasibility_report`.
    """
    values = parse_solution(text) if isinstance(text, str) else dict(text)
    n = model.instance.n
    succ: dict[int, list[int]] = {}
    active = 0
    for i in range(n + 1):
        for j in range(n + 1):
            if i != j and values.get(f"x_{i}_{j}", 0.0) > 0.5:
                succ.setdefault(i, []).append(j)
                active += 1
    if not succ.get(0):
        raise MilpSolutionError("no departing arc from base")
    route = [0]
    node = 0
    while True:
        nxt = succ.get(node, [])
        if len(nxt) != 1:
            raise MilpSolutionError(f"node {node} has {len(nxt)} departing arcs")
        node = nxt[0]
        if node == 0:
            break
        if node in route:
            raise MilpSolutionError(f"subtour through AP {node} not connected to the base")
        route.append(node)
    route.append(0)
    if active != len(route) - 1:
        raise MilpSolutionError("subtour: active arcs outside the tour from the base")
    durations = [max(0, round(values.get(f"Tc_{k}", 0.0))) for k in route[1:-1]]
    return Schedule(tuple(route), tuple(durations))


def induced_assignment(model: MilpModel, sched: Schedule) -> dict[str, Fraction]:
    """Variable values encoding ``sched`` (exact)."""
    inst = model.instance
    ev = evaluate(inst, sched)
    values: dict[str, Fraction] = {v.name: Q(0) for v in model.variables}
    for k in range(1, inst.n + 1):
        values[f"u_{k}"] = Q(1)
    for a, b in zip(sched.route, sched.route[1:]):
        values[f"x_{a}_{b}"] = Q(1)
    for pos, (k, d) in enumerate(zip(sched.visits, sched.durations), start=1):
        i = pos - 1
        values[f"y_{k}"] = Q(1)
        values[f"s_{k}"] = Q(ev.state[i])
        values[f"t_{k}"] = Q(ev.arrival[i])
        values[f"Tc_{k}"] = Q(d)
        values[f"c_{k}"] = ev.collected_per_ap[i]
        values[f"o_{k}"] = ev.overflow_per_ap[i]
        values[f"u_{k}"] = Q(pos)
    return values


def violated_rows(model: MilpModel, values: Mapping[str, Fraction]) -> list[str]:
    """Names of rows, bounds and integrality conditions that ``values`` breaks."""
    bad = [r.name for r in model.rows if not r.satisfied(values)]
    for v in model.variables:
        x = Q(values.get(v.name, 0))
        if x < v.lower or (v.upper is not None and x > v.upper):
            bad.append(f"bound:{v.name}")
        if v.kind == BINARY and x not in (0, 1):
            bad.append(f"integrality:{v.name}")
    return bad


def objective_value(model: MilpModel, values: Mapping[str, Fraction]) -> Fraction:
    return sum((c * Q(values.get(v, 0)) for v, c in model.objective), Fraction(0))
