"""Rounding an LP solution into schedules.

``ris_round`` samples a worker-interval cell per task, ``dis_schedule``
fixes the cells one task at a time by conditional expectations, and
``mdis_schedule`` list-schedules tasks in order of their LP completion
times.

Every task's contribution to a worker's load in interval ``l`` is
``tau_k * pi_k[j, l]`` where ``pi_k`` is its placement distribution while
undecided and an indicator once decided. The conditional expectation of
the total weighted completion time is bilinear across tasks, so it is
linear in any single task's ``pi_i``. That is what makes the per-step
greedy choice of DIS never worse than the current expectation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Instance, Schedule
from .greedy import TieRule, list_schedule
from .lp_relax import IntervalGrid, LpSolution

MASS_TOL = 1e-7
STEP_TOL = 1e-9


class RoundingError(ValueError):
    pass


class PlacementDistribution:
    """Per-task probabilities over (worker, interval) cells, shape (n, m, L+1)."""

    def __init__(self, probs: np.ndarray, tol: float = MASS_TOL):
        probs = np.asarray(probs, dtype=float)
        if probs.ndim != 3:
            raise RoundingError("placement probabilities must be (n, m, L+1)")
        if probs.size and probs.min() < -tol:
            raise RoundingError(f"negative placement probability {probs.min():.3e}")
        probs = np.maximum(probs, 0.0)
        mass = probs.sum(axis=(1, 2))
        bad = np.flatnonzero(np.abs(mass - 1.0) > tol)
        if bad.size:
            i = int(bad[0])
            raise RoundingError(f"task {i}: placement mass {mass[i]:.9f} is not 1")
        # renormalise so every convex combination below is exact
        self.probs = probs / mass[:, None, None] if probs.size else probs

    @classmethod
    def from_lp(cls, instance: Instance, lpsol: LpSolution) -> "PlacementDistribution":
        return cls(lpsol.placement_probabilities(instance))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.probs.shape

    def cells(self, i: int) -> list[tuple[tuple[int, int], float]]:
        js, ls = np.nonzero(self.probs[i])
        return [((int(j), int(l)), float(self.probs[i, j, l])) for j, l in zip(js, ls)]

    def sample(self, rng: np.random.Generator, draws: int | None = None) -> np.ndarray:
        """Flat cell index per task (and per draw when ``draws`` is given)."""
        n = self.probs.shape[0]
        flat = self.probs.reshape(n, -1)
        cdf = np.cumsum(flat, axis=1)
        cdf[:, -1] = 1.0
        u = rng.random((n,) if draws is None else (draws, n))
        if draws is None:
            return np.array([np.searchsorted(cdf[i], u[i], side="right") for i in range(n)],
                            dtype=np.intp)
        out = np.empty((draws, n), dtype=np.intp)
        for i in range(n):
            out[:, i] = np.searchsorted(cdf[i], u[:, i], side="right")
        return out


def _ordered_schedule(instance: Instance, grid: IntervalGrid, workers, intervals, tie_keys) -> Schedule:
    """Per worker, sort by interval then by ``tie_keys``; record left endpoints."""
    left = grid.left
    lists: list[list[int]] = [[] for _ in range(instance.m)]
    for i in sorted(range(instance.n), key=lambda i: (intervals[i], tie_keys[i])):
        lists[workers[i]].append(i)
    keys = {i: float(left[intervals[i]]) for i in range(instance.n)}
    return Schedule.from_lists(lists, placement_key=keys)


def ris_round(instance: Instance, lpsol: LpSolution, seed=None, *, tie: str = "random") -> Schedule:
    """One randomized rounding draw.

    ``tie="random"`` orders same-interval tasks uniformly at random;
    ``tie="index"`` orders them by task id.
    """
    dist = PlacementDistribution.from_lp(instance, lpsol)
    rng = np.random.default_rng(seed)
    if instance.n == 0:
        return Schedule.from_lists([[] for _ in range(instance.m)], placement_key={})
    cells = dist.sample(rng)
    workers, intervals = np.divmod(cells, lpsol.grid.size)
    if tie == "random":
        tie_keys = rng.permutation(instance.n)
    elif tie == "index":
        tie_keys = np.arange(instance.n)
    else:
        raise ValueError(f"unknown tie rule {tie!r}")
    return _ordered_schedule(instance, lpsol.grid, workers, intervals, tie_keys)


def ris_sample_wct(instance: Instance, lpsol: LpSolution, draws: int, seed=None,
                   *, tie: str = "index") -> np.ndarray:
    """WCT of ``draws`` independent RIS draws, vectorised over draws."""
    n = instance.n
    if n == 0:
        return np.zeros(draws)
    rng = np.random.default_rng(seed)
    dist = PlacementDistribution.from_lp(instance, lpsol)
    cells = dist.sample(rng, draws)
    workers, intervals = np.divmod(cells, lpsol.grid.size)
    if tie == "index":
        keys = np.broadcast_to(np.arange(n), (draws, n))
    elif tie == "random":
        keys = rng.random((draws, n)).argsort(axis=1).argsort(axis=1)
    else:
        raise ValueError(f"unknown tie rule {tie!r}")
    tau, w = instance.rst, instance.weight
    same = workers[:, :, None] == workers[:, None, :]
    before = (intervals[:, None, :] < intervals[:, :, None]) | (
        (intervals[:, None, :] == intervals[:, :, None]) & (keys[:, None, :] < keys[:, :, None]))
    # C[d, i] = e_j + tau_i + sum of tau_k scheduled ahead of i on the same worker
    ahead = ((same & before) * tau[None, None, :]).sum(axis=2)
    comp = instance.contacts[workers] + tau[None, :] + ahead
    return comp @ w


@dataclass
class DisState:
    """Decided tasks with their cells; undecided tasks keep their LP distribution."""

    dist: PlacementDistribution
    decided: dict[int, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        self.pi = self.dist.probs.copy()

    def decide(self, i: int, j: int, ell: int) -> None:
        if i in self.decided:
            raise RoundingError(f"task {i} already decided")
        self.pi[i] = 0.0
        self.pi[i, j, ell] = 1.0
        self.decided[i] = (j, ell)

    @property
    def x(self) -> dict[tuple[int, int, int], int]:
        return {(i, j, l): 1 for i, (j, l) in self.decided.items()}


def _excl_prefix(a: np.ndarray, axis: int) -> np.ndarray:
    out = np.cumsum(a, axis=axis)
    return out - a


def conditional_completions(state: DisState, instance: Instance) -> np.ndarray:
    """cond[i, j, l]: expected C_i given task i sits in cell (j, l)."""
    pi = state.pi
    load = instance.rst[:, None, None] * pi
    total = load.sum(axis=0)
    # earlier intervals from all other tasks, same interval from lower ids
    return (instance.contacts[None, :, None] + instance.rst[:, None, None]
            + _excl_prefix(total, 1)[None] - _excl_prefix(load, 2)
            + _excl_prefix(load, 0))


def expected_wct(state: DisState, instance: Instance, grid: IntervalGrid | None = None) -> float:
    """Conditional expectation of the total weighted completion time.

    Same-interval tasks on a worker run in id order, matching the final
    ordering DIS emits and ``ris_round(tie="index")``.
    """
    if instance.n == 0:
        return 0.0
    cond = conditional_completions(state, instance)
    return float(instance.weight @ (state.pi * cond).sum(axis=(1, 2)))


def candidate_scores(state: DisState, instance: Instance, i: int) -> np.ndarray:
    """g[j, l] with E(task i fixed at (j, l)) = E(current) + g[j, l] - pi_i . g."""
    pi, tau, w = state.pi, instance.rst, instance.weight
    load = tau[:, None, None] * pi
    wmass = w[:, None, None] * pi
    other_load = load.sum(axis=0) - load[i]
    other_w = wmass.sum(axis=0) - wmass[i]
    lower_load = load[:i].sum(axis=0)
    higher_w = wmass[i + 1:].sum(axis=0)
    # as the task waiting: everything ahead of it on that worker
    own = instance.contacts[:, None] + tau[i] + _excl_prefix(other_load, 1) + lower_load
    # as a predecessor: weight of everything queued behind it
    suffix = np.cumsum(other_w[:, ::-1], axis=1)[:, ::-1] - other_w
    return w[i] * own + tau[i] * (suffix + higher_w)


@dataclass
class DisStep:
    task: int
    cell: tuple[int, int]
    before: float
    after: float


@dataclass
class DisResult:
    schedule: Schedule
    initial_expectation: float
    steps: list[DisStep]


def dis_round(instance: Instance, lpsol: LpSolution, *, check_full: bool = False,
              step_tol: float = STEP_TOL) -> DisResult:
    """Derandomized rounding with the per-step log.

    Tasks are fixed in ascending id. Each step asserts that the chosen cell
    does not raise the conditional expectation. ``check_full`` recomputes
    the expectation from scratch after every step as a cross-check.
    """
    state = DisState(PlacementDistribution.from_lp(instance, lpsol))
    current = expected_wct(state, instance)
    initial = current
    steps = []
    for i in range(instance.n):
        g = candidate_scores(state, instance, i)
        avg = float((state.pi[i] * g).sum())
        j, ell = np.unravel_index(int(np.argmin(g)), g.shape)
        after = current + float(g[j, ell]) - avg
        if after > current + step_tol:
            raise RoundingError(f"step {i}: expectation rose from {current!r} to {after!r}")
        state.decide(i, int(j), int(ell))
        if check_full:
            full = expected_wct(state, instance)
            if abs(full - after) > 1e-7 * max(1.0, abs(full)):
                raise RoundingError(f"step {i}: incremental {after!r} != full {full!r}")
        steps.append(DisStep(i, (int(j), int(ell)), current, after))
        current = after
    workers = np.array([state.decided[i][0] for i in range(instance.n)], dtype=np.intp)
    intervals = np.array([state.decided[i][1] for i in range(instance.n)], dtype=np.intp)
    sched = _ordered_schedule(instance, lpsol.grid, workers, intervals, np.arange(instance.n))
    return DisResult(sched, initial, steps)


def dis_schedule(instance: Instance, lpsol: LpSolution, grid: IntervalGrid | None = None) -> Schedule:
    return dis_round(instance, lpsol).schedule


def mdis_schedule(instance: Instance, lpsol: LpSolution,
                  tie: TieRule = TieRule.SMALLEST_INDEX) -> Schedule:
    """List scheduling in non-decreasing LP completion time, ties by id."""
    order = sorted(range(instance.n), key=lambda i: (lpsol.cbar[i], i))
    sched, _ = list_schedule(instance, order, tie)
    keys = {i: float(lpsol.cbar[i]) for i in range(instance.n)}
    return Schedule(sched.assignment, placement_key=keys)

