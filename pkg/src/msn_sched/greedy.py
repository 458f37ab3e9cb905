"""Largest-Ratio-First list scheduling onto the least-loaded worker."""

from __future__ import annotations

import enum
from typing import Sequence

from .core import TOL, Instance, Schedule, smith_order


class TieRule(enum.Enum):
    SMALLEST_INDEX = "smallest"
    LARGEST_INDEX = "largest"
    LARGEST_CONTACT = "contact"


class EwTracker:
    """Running expected workload per worker, seeded at the contact time."""

    def __init__(self, seeds: Sequence[float], contacts: Sequence[float] | None = None):
        self.ew = [float(s) for s in seeds]
        # LARGEST_CONTACT breaks ties on these, not on the (possibly shifted) seeds
        self.contacts = list(contacts) if contacts is not None else list(self.ew)

    def argmin(self, tie: TieRule = TieRule.SMALLEST_INDEX) -> int:
        low = min(self.ew)
        cands = [j for j, v in enumerate(self.ew) if v <= low + TOL]
        if tie is TieRule.SMALLEST_INDEX:
            return cands[0]
        if tie is TieRule.LARGEST_INDEX:
            return cands[-1]
        return max(cands, key=lambda j: (self.contacts[j], -j))

    def add(self, j: int, rst: float) -> None:
        self.ew[j] += rst


def list_schedule(instance: Instance, order: Sequence[int],
                  tie: TieRule = TieRule.SMALLEST_INDEX,
                  seeds: Sequence[float] | None = None) -> tuple[Schedule, list[float]]:
    """Append tasks in ``order`` to the argmin-EW worker.

    Returns the schedule and the final EW vector. ``seeds`` overrides the
    initial EW (defaults to each worker's contact time).
    """
    contacts = instance.contacts.tolist()
    tracker = EwTracker(contacts if seeds is None else seeds, contacts)
    lists: list[list[int]] = [[] for _ in range(instance.m)]
    for i in order:
        j = tracker.argmin(tie)
        lists[j].append(i)
        tracker.add(j, instance.tasks[i].rst)
    return Schedule.from_lists(lists), tracker.ew


def lrf_schedule(instance: Instance, tie: TieRule = TieRule.SMALLEST_INDEX) -> Schedule:
    schedule, _ = list_schedule(instance, smith_order(instance.tasks), tie)
    return schedule
