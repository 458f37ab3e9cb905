"""Problem data model and exact completion-time evaluation.

Ids are 0-based everywhere in Python; every serialized form (JSON, CSV,
reports) shifts them to 1-based.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

TOL = 1e-9


class ScheduleError(ValueError):
    """A schedule does not partition the instance's tasks."""


@dataclass(frozen=True)
class Task:
    id: int
    rst: float
    weight: float

    def __post_init__(self):
        if not self.rst > 0:
            raise ValueError(f"task {self.id}: rst must be positive, got {self.rst}")
        if not self.weight > 0:
            raise ValueError(f"task {self.id}: weight must be positive, got {self.weight}")

    @property
    def ratio(self) -> float:
        return self.weight / self.rst


@dataclass(frozen=True)
class Worker:
    id: int
    rate: float
    contact: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"worker {self.id}: rate must be positive, got {self.rate}")
        if self.contact < 0:
            raise ValueError(f"worker {self.id}: contact must be nonnegative")

    @classmethod
    def from_rate(cls, id: int, rate: float) -> "Worker":
        return cls(id, float(rate), 2.0 / float(rate))


@dataclass(frozen=True)
class Instance:
    tasks: tuple[Task, ...]
    workers: tuple[Worker, ...]

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "workers", tuple(self.workers))
        if not self.workers:
            raise ValueError("an instance needs at least one worker")
        if [t.id for t in self.tasks] != list(range(len(self.tasks))):
            raise ValueError("task ids must be 0..n-1 in order")
        if [w.id for w in self.workers] != list(range(len(self.workers))):
            raise ValueError("worker ids must be 0..m-1 in order")

    @classmethod
    def from_arrays(cls, rst, weight, rates, contacts=None) -> "Instance":
        """Build an instance; contacts default to 2/rate."""
        tasks = [Task(i, float(r), float(w)) for i, (r, w) in enumerate(zip(rst, weight, strict=True))]
        if contacts is None:
            workers = [Worker.from_rate(j, lam) for j, lam in enumerate(rates)]
        else:
            workers = [Worker(j, float(lam), float(e))
                       for j, (lam, e) in enumerate(zip(rates, contacts, strict=True))]
        return cls(tuple(tasks), tuple(workers))

    def with_contacts(self, contacts: Sequence[float]) -> "Instance":
        workers = [Worker(w.id, w.rate, float(e)) for w, e in zip(self.workers, contacts, strict=True)]
        return Instance(self.tasks, tuple(workers))

    def subset(self, task_ids: Sequence[int], worker_ids: Sequence[int]) -> "Instance":
        """Re-indexed sub-instance; position k holds original task_ids[k]."""
        tasks = [Task(k, self.tasks[i].rst, self.tasks[i].weight) for k, i in enumerate(task_ids)]
        workers = [Worker(k, self.workers[j].rate, self.workers[j].contact)
                   for k, j in enumerate(worker_ids)]
        return Instance(tuple(tasks), tuple(workers))

    @property
    def n(self) -> int:
        return len(self.tasks)

    @property
    def m(self) -> int:
        return len(self.workers)

    @property
    def rst(self) -> np.ndarray:
        return np.array([t.rst for t in self.tasks], dtype=float)

    @property
    def weight(self) -> np.ndarray:
        return np.array([t.weight for t in self.tasks], dtype=float)

    @property
    def rates(self) -> np.ndarray:
        return np.array([w.rate for w in self.workers], dtype=float)

    @property
    def contacts(self) -> np.ndarray:
        return np.array([w.contact for w in self.workers], dtype=float)

    # aggregates are derived on access so they can never go stale
    @property
    def tau_max(self) -> float:
        return max(t.rst for t in self.tasks)

    @property
    def tau_min(self) -> float:
        return min(t.rst for t in self.tasks)

    @property
    def w_max(self) -> float:
        return max(t.weight for t in self.tasks)

    @property
    def w_min(self) -> float:
        return min(t.weight for t in self.tasks)

    @property
    def lambda_max(self) -> float:
        return max(w.rate for w in self.workers)

    @property
    def lambda_min(self) -> float:
        return min(w.rate for w in self.workers)

    @property
    def total_rst(self) -> float:
        return float(sum(t.rst for t in self.tasks))

    def to_dict(self) -> dict:
        return {
            "tasks": [{"rst": t.rst, "weight": t.weight} for t in self.tasks],
            "workers": [
                {"lambda": w.rate} if abs(w.contact - 2.0 / w.rate) <= TOL
                else {"lambda": w.rate, "contact": w.contact}
                for w in self.workers
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Instance":
        tasks = [Task(i, float(t["rst"]), float(t["weight"])) for i, t in enumerate(data["tasks"])]
        workers = []
        for j, w in enumerate(data["workers"]):
            lam = float(w["lambda"])
            contact = float(w["contact"]) if "contact" in w else 2.0 / lam
            workers.append(Worker(j, lam, contact))
        return cls(tuple(tasks), tuple(workers))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "Instance":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class Schedule:
    """Per-worker ordered task lists; list order is processing order.

    ``placement_key`` optionally records the time key t_i a rounding or
    online algorithm used to order task i.
    """

    assignment: tuple[tuple[int, ...], ...]
    placement_key: Mapping[int, float] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(tuple(int(i) for i in s) for s in self.assignment))

    @classmethod
    def from_lists(cls, lists: Iterable[Iterable[int]], placement_key=None) -> "Schedule":
        return cls(tuple(tuple(s) for s in lists), placement_key)

    @property
    def m(self) -> int:
        return len(self.assignment)

    def worker_of(self) -> dict[int, int]:
        return {i: j for j, s in enumerate(self.assignment) for i in s}

    def validate(self, instance: Instance) -> None:
        if self.m != instance.m:
            raise ScheduleError(f"schedule has {self.m} workers, instance has {instance.m}")
        seen: set[int] = set()
        for s in self.assignment:
            for i in s:
                if not 0 <= i < instance.n:
                    raise ScheduleError(f"unknown task id {i}")
                if i in seen:
                    raise ScheduleError(f"task {i} scheduled twice")
                seen.add(i)
        if len(seen) != instance.n:
            missing = sorted(set(range(instance.n)) - seen)
            raise ScheduleError(f"tasks not scheduled: {missing}")

    def to_dict(self) -> dict:
        return {f"worker{j + 1}": [i + 1 for i in s] for j, s in enumerate(self.assignment)}


def smith_order(tasks: Sequence[Task]) -> list[int]:
    """Task ids by non-increasing w/tau, ties by ascending id."""
    return [t.id for t in sorted(tasks, key=lambda t: (-t.ratio, t.id))]


def completion_times(instance: Instance, schedule: Schedule) -> dict[int, float]:
    schedule.validate(instance)
    out: dict[int, float] = {}
    for worker, seq in zip(instance.workers, schedule.assignment):
        clock = worker.contact
        for i in seq:
            clock += instance.tasks[i].rst
            out[i] = clock
    return out


def weighted_completion(instance: Instance, schedule: Schedule) -> float:
    ct = completion_times(instance, schedule)
    return float(sum(instance.tasks[i].weight * c for i, c in ct.items()))


def expected_workloads(instance: Instance, schedule: Schedule) -> list[float]:
    """EW_j = e_j + total RST on worker j (e_j alone when idle)."""
    return [w.contact + sum(instance.tasks[i].rst for i in seq)
            for w, seq in zip(instance.workers, schedule.assignment)]
