"""Estimator-style wrappers around the solvers.

``fit(instance)`` solves the instance and stores ``schedule_``,
``evaluation_`` and ``objective_``; ``predict(instance)`` returns the schedule
for an instance (the fitted one is served from the cache) and ``score``
its objective.  Hyper-parameters follow the usual ``get_params`` /
``set_params`` protocol, so the solvers can be cloned and swept.
"""
from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .baselines import BRUTE_FORCE_CAP, brute_force, greedy_deadline, uniform_duration
from .ils import SolverConfig, solve
from .instance import Instance
from .mdp import DEFAULT_CAP
from .schedule import Schedule, evaluate
from .validation import check_instance

__all__ = ["ILSMDPSolver", "GreedyDeadline", "UniformDuration", "BruteForce"]


class _ScheduleEstimator(BaseEstimator):
    def _solve(self, inst: Instance) -> Schedule:  # pragma: no cover - abstract
        raise NotImplementedError

    def fit(self, X, y=None):
        inst = check_instance(X)
        sched = self._solve(inst)
        self.instance_ = inst
        self.schedule_ = sched
        self.evaluation_ = evaluate(inst, sched)
        self.objective_ = float(self.evaluation_.objective)
        return self

    def predict(self, X=None) -> Schedule:
        check_is_fitted(self, "schedule_")
        if X is None:
            return self.schedule_
        inst = check_instance(X)
        if inst == self.instance_:
            return self.schedule_
        return self._solve(inst)

    def score(self, X=None, y=None) -> float:
        inst = self.instance_ if X is None else check_instance(X)
        return float(evaluate(inst, self.predict(inst)).objective)


class ILSMDPSolver(_ScheduleEstimator):
    def __init__(
        self,
        seed: int = 0,
        stall_limit: int = 15,
        wall_clock_limit: float = 1800.0,
        per_ap_cap: int = DEFAULT_CAP,
        oropt_lengths: tuple[int, ...] = (1, 2, 3),
        route_edit_moves: bool = True,
    ):
        self.seed = seed
        self.stall_limit = stall_limit
        self.wall_clock_limit = wall_clock_limit
        self.per_ap_cap = per_ap_cap
        self.oropt_lengths = oropt_lengths
        self.route_edit_moves = route_edit_moves

    def config(self) -> SolverConfig:
        return SolverConfig(
            stall_limit=self.stall_limit,
            wall_clock_limit=self.wall_clock_limit,
            seed=self.seed,
            per_ap_cap=self.per_ap_cap,
            oropt_lengths=tuple(self.oropt_lengths),
            route_edit_moves=self.route_edit_moves,
        )

    def _solve(self, inst):
        self.result_ = solve(inst, self.config())
        return self.result_.best


class GreedyDeadline(_ScheduleEstimator):
    def __init__(self, per_ap_cap: int = DEFAULT_CAP):
        self.per_ap_cap = per_ap_cap

    def _solve(self, inst):
        return greedy_deadline(inst, self.per_ap_cap)


class UniformDuration(_ScheduleEstimator):
    def __init__(self, duration: int = 5):
        self.duration = duration

    def _solve(self, inst):
        return uniform_duration(inst, self.duration)


class BruteForce(_ScheduleEstimator):
    def __init__(self, max_n: int = BRUTE_FORCE_CAP, per_ap_cap: int = DEFAULT_CAP):
        self.max_n = max_n
        self.per_ap_cap = per_ap_cap

    def _solve(self, inst):
        self.result_ = brute_force(inst, self.max_n, self.per_ap_cap)
        return self.result_.best
