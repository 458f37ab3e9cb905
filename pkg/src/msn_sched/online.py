"""Online replanning at each requester-worker meeting.

At a meeting with worker j the requester knows j is here, so j's expected
overhead drops to one feedback meeting (1/rate_j); every other worker k is
expected ``2/rate_k - 1/rate_j`` from now. The requester replans all
remaining tasks over all remaining workers with those offsets, hands j its
share and never revisits it.

``cosmos`` replans with ratio-order list scheduling and ``odis`` with the
LP plus derandomized rounding.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Instance, Schedule, smith_order
from .greedy import TieRule, list_schedule
from .lp_relax import solve_instance
from .rounding import dis_round

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MeetingTrace:
    """First meetings in time order, with optional feedback delays."""

    workers: tuple[int, ...]
    times: tuple[float, ...]
    feedback: tuple[float, ...] | None = None  # aligned with ``workers``

    def __post_init__(self):
        if len(self.workers) != len(self.times):
            raise ValueError("workers and times differ in length")
        if len(set(self.workers)) != len(self.workers):
            raise ValueError("a worker appears twice in the trace")
        if any(t < 0 for t in self.times):
            raise ValueError("meeting times must be nonnegative")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("meeting times must be strictly increasing")
        if self.feedback is not None and len(self.feedback) != len(self.workers):
            raise ValueError("feedback delays must align with workers")

    def meeting_time(self) -> dict[int, float]:
        return dict(zip(self.workers, self.times))

    def feedback_delay(self) -> dict[int, float]:
        if self.feedback is None:
            raise ValueError("trace carries no feedback delays")
        return dict(zip(self.workers, self.feedback))


def sample_meetings(rates: Sequence[float], seed=None, *, feedback: bool = True) -> MeetingTrace:
    """Exponential first-meeting (and feedback) delay per worker, sorted by time."""
    rates = np.asarray(rates, dtype=float)
    if np.any(rates <= 0):
        raise ValueError("rates must be positive")
    rng = np.random.default_rng(seed)
    first = rng.exponential(1.0 / rates)
    back = rng.exponential(1.0 / rates) if feedback else None
    order = np.argsort(first, kind="stable")
    return MeetingTrace(tuple(int(j) for j in order), tuple(float(first[j]) for j in order),
                        None if back is None else tuple(float(back[j]) for j in order))


@dataclass
class OnlineStep:
    worker: int
    time: float
    remaining: tuple[int, ...]  # tasks still unassigned when the meeting happened
    offsets: dict[int, float]  # planning offset per remaining worker
    clamped: tuple[int, ...]
    committed: tuple[int, ...]
    wct: float


@dataclass
class OnlineStepLog:
    frame: str
    wct0: float
    steps: list[OnlineStep] = field(default_factory=list)

    @property
    def wct(self) -> list[float]:
        return [self.wct0] + [s.wct for s in self.steps]

    def is_monotone(self, tol: float = 1e-9) -> bool:
        w = self.wct
        return all(b <= a + tol for a, b in zip(w, w[1:]))

    def to_rows(self) -> list[dict]:
        rows = [{"step": 0, "worker": "", "time": "", "remaining": "", "committed": "",
                 "clamped": "", "wct": self.wct0}]
        for k, s in enumerate(self.steps, 1):
            rows.append({"step": k, "worker": s.worker + 1, "time": s.time,
                         "remaining": len(s.remaining),
                         "committed": " ".join(str(i + 1) for i in s.committed),
                         "clamped": " ".join(str(j + 1) for j in s.clamped), "wct": s.wct})
        return rows


def meeting_offsets(rates: np.ndarray, met: int, remaining: Sequence[int],
                    clamp: bool = True) -> tuple[dict[int, float], list[int]]:
    """Planning offset per remaining worker and the ids whose offset went negative.

    Negative offsets are raised to zero unless ``clamp`` is false.
    """
    offsets, clamped = {}, []
    for k in remaining:
        if k == met:
            offsets[k] = 1.0 / rates[met]
            continue
        e = 2.0 / rates[k] - 1.0 / rates[met]
        if e < 0:
            clamped.append(k)
            if clamp:
                e = 0.0
        offsets[k] = e
    if clamped:
        log.warning("offsets of workers %s fell below zero at meeting with %d%s",
                    [k + 1 for k in clamped], met + 1, "; clamped" if clamp else "")
    return offsets, clamped


def _batch_cost(instance: Instance, seq: Sequence[int], offset: float) -> float:
    clock, cost = offset, 0.0
    for i in seq:
        clock += instance.tasks[i].rst
        cost += instance.tasks[i].weight * clock
    return cost


def _frame_cost(instance: Instance, frame: str, committed: dict[int, tuple[int, ...]],
                plan: dict[int, list[int]], met: int | None, offsets: dict[int, float]) -> float:
    """Total WCT of committed batches plus the current plan.

    ``absolute``: every batch measured from time zero with offset 2/rate.
    ``planner``: planned batches use this step's planning offsets and
    committed batches the one-meeting offset they were handed over with.
    """
    rates = instance.rates
    total = 0.0
    for j, seq in committed.items():
        total += _batch_cost(instance, seq, 2.0 / rates[j] if frame == "absolute" else 1.0 / rates[j])
    for k, seq in plan.items():
        if frame == "absolute" or met is None:
            off = 2.0 / rates[k]
        else:
            off = offsets[k]
        total += _batch_cost(instance, seq, off)
    return total


def _lrf_plan(instance: Instance, tasks: Sequence[int], workers: Sequence[int],
              seeds: Sequence[float], tie: TieRule) -> dict[int, list[int]]:
    sub = instance.subset(tasks, workers)
    sched, _ = list_schedule(sub, smith_order(sub.tasks), tie, seeds=seeds)
    return {workers[a]: [tasks[i] for i in seq] for a, seq in enumerate(sched.assignment)}


def cosmos(instance: Instance, trace: MeetingTrace, *, tie: TieRule = TieRule.SMALLEST_INDEX,
           frame: str = "absolute", clamp: bool = True) -> tuple[Schedule, OnlineStepLog]:
    """Ratio-order replanning at every meeting.

    ``clamp`` raises negative planning offsets to zero. Without it the
    offsets are the uniform shift 2/rate - 1/rate_met, every replan agrees
    with the offline plan on the remaining workers, and the absolute-frame
    WCT stays constant from step to step.
    """
    if sorted(trace.workers) != list(range(instance.m)):
        raise ValueError("trace must cover every worker exactly once")
    if frame not in ("absolute", "planner"):
        raise ValueError(f"unknown frame {frame!r}")
    rates = instance.rates
    remaining_tasks = list(range(instance.n))
    remaining_workers = list(range(instance.m))
    committed: dict[int, tuple[int, ...]] = {}

    initial = _lrf_plan(instance, remaining_tasks, remaining_workers, list(2.0 / rates), tie)
    steplog = OnlineStepLog(frame, _frame_cost(instance, "absolute", {}, initial, None, {}))

    for j, t in zip(trace.workers, trace.times):
        offsets, clamped = meeting_offsets(rates, j, remaining_workers, clamp)
        plan = _lrf_plan(instance, remaining_tasks, remaining_workers,
                         [offsets[k] for k in remaining_workers], tie)
        before = tuple(remaining_tasks)
        committed[j] = tuple(plan[j])  # already in ratio order
        taken = set(plan.pop(j))
        remaining_tasks = [i for i in remaining_tasks if i not in taken]
        remaining_workers.remove(j)
        wct = _frame_cost(instance, frame, committed, plan, j, offsets)
        steplog.steps.append(OnlineStep(j, t, before, offsets, tuple(clamped), committed[j], wct))
    sched = Schedule.from_lists([committed[j] for j in range(instance.m)])
    return sched, steplog


def odis(instance: Instance, trace: MeetingTrace, eta: float = 0.5, **lp_kwargs) -> tuple[Schedule, OnlineStepLog]:
    """Replanning with the LP and derandomized rounding at every meeting.

    The step log records the planner-frame expectation DIS reached at each
    meeting; it carries no monotonicity guarantee.
    """
    if sorted(trace.workers) != list(range(instance.m)):
        raise ValueError("trace must cover every worker exactly once")
    rates = instance.rates
    remaining_tasks = list(range(instance.n))
    remaining_workers = list(range(instance.m))
    committed: dict[int, tuple[int, ...]] = {}
    keys: dict[int, float] = {}
    steplog = OnlineStepLog("planner", float("nan"))

    for j, t in zip(trace.workers, trace.times):
        offsets, clamped = meeting_offsets(rates, j, remaining_workers)
        before = tuple(remaining_tasks)
        expectation = 0.0
        if remaining_tasks:
            sub = instance.subset(remaining_tasks, remaining_workers)
            sub = sub.with_contacts([offsets[k] for k in remaining_workers])
            lpsol = solve_instance(sub, eta, **lp_kwargs)
            result = dis_round(sub, lpsol)
            local = remaining_workers.index(j)
            # the DIS schedule already orders by interval start, then index
            mine = [remaining_tasks[a] for a in result.schedule.assignment[local]]
            for a in result.schedule.assignment[local]:
                keys[remaining_tasks[a]] = result.schedule.placement_key[a]
            expectation = result.steps[-1].after
        else:
            mine = []
        committed[j] = tuple(mine)
        taken = set(mine)
        remaining_tasks = [i for i in remaining_tasks if i not in taken]
        remaining_workers.remove(j)
        steplog.steps.append(OnlineStep(j, t, before, offsets, tuple(clamped), committed[j], expectation))
    sched = Schedule.from_lists([committed[j] for j in range(instance.m)], placement_key=keys)
    return sched, steplog


def evaluate(instance: Instance, schedule: Schedule, trace: MeetingTrace, mode: str = "realized",
             seed=None) -> float:
    """WCT of a delivered schedule under a meeting trace.

    ``realized``: realized first meeting, expected feedback delay 1/rate.
    ``expected``: both meetings at their expectation (offset 2/rate).
    ``sampled``: realized first meeting plus a feedback delay taken from
    the trace, or drawn from the exponential when the trace has none.
    """
    schedule.validate(instance)
    rates = instance.rates
    start = trace.meeting_time()
    if mode == "sampled":
        if trace.feedback is not None:
            back = trace.feedback_delay()
        else:
            rng = np.random.default_rng(seed)
            back = {j: float(rng.exponential(1.0 / rates[j])) for j in range(instance.m)}
    total = 0.0
    for j, seq in enumerate(schedule.assignment):
        if mode == "realized":
            off = start[j] + 1.0 / rates[j]
        elif mode == "expected":
            off = 2.0 / rates[j]
        elif mode == "sampled":
            off = start[j] + back[j]
        else:
            raise ValueError(f"unknown evaluation mode {mode!r}")
        total += _batch_cost(instance, seq, off)
    return total
