"""Input coercion shared by the estimators and the command line."""
from __future__ import annotations

import json
from collections.abc import Mapping, Sequence
from os import PathLike

from .instance import Instance, instance_from_dict, load_instance
from .schedule import Schedule, ScheduleError

__all__ = ["check_instance", "check_schedule", "load_schedule"]


def check_instance(obj) -> Instance:
    """Accept an :class:`Instance`, an instance document or a file path."""
    if isinstance(obj, Instance):
        return obj
    if isinstance(obj, Mapping):
        return instance_from_dict(dict(obj))
    if isinstance(obj, (str, PathLike)):
        return load_instance(obj)
    raise TypeError(f"expected an Instance, a mapping or a path, got {type(obj).__name__}")


def load_schedule(path) -> Schedule:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScheduleError(f"schedule file is not valid JSON: {exc}") from None
    return Schedule.from_dict(doc)


def check_schedule(obj, inst: Instance | None = None) -> Schedule:
    """Accept a :class:`Schedule`, a schedule document, a path or ``(route, durations)``.

    With ``inst`` the route must only reference its nodes and carry one
    duration per visit.
    """
    if isinstance(obj, Schedule):
        sched = obj
    elif isinstance(obj, Mapping):
        sched = Schedule.from_dict(obj)
    elif isinstance(obj, (str, PathLike)):
        sched = load_schedule(obj)
    elif isinstance(obj, Sequence) and len(obj) == 2:
        sched = Schedule(tuple(obj[0]), tuple(obj[1]))
    else:
        raise TypeError(f"cannot interpret {type(obj).__name__} as a schedule")
    if inst is not None:
        if len(sched.route) < 2:
            raise ScheduleError("route must contain at least the base twice")
        if len(sched.durations) != len(sched.visits):
            raise ScheduleError(f"{len(sched.durations)} durations for {len(sched.visits)} visited APs")
        for node in sched.route:
            if not 0 <= node <= inst.n:
                raise ScheduleError(f"route references unknown node {node}")
    return sched
