"""Shared fixtures and an independent reference scheduler for the tests."""

import itertools

import numpy as np

from msn_sched.core import Instance


def four_task(T: float) -> Instance:
    """Four equal-ratio tasks (1, 1, 2, T) on workers with e = (2, 6)."""
    rst = [1.0, 1.0, 2.0, float(T)]
    return Instance.from_arrays(rst, rst, [1.0, 1.0 / 3.0])


def random_instance(rng, n, m, *, w_equal_tau=False, contacts=None) -> Instance:
    rst = rng.uniform(0.5, 10.0, n).round(2)
    weight = rst.copy() if w_equal_tau else rng.uniform(1.0, 10.0, n).round(2)
    rates = rng.uniform(0.2, 5.0, m).round(3)
    return Instance.from_arrays(rst, weight, rates, contacts=contacts)


def reference_optimum(inst: Instance) -> float:
    """Plain-loop exhaustive search over assignments and every per-worker order."""
    best = float("inf")
    for assign in itertools.product(range(inst.m), repeat=inst.n):
        total = 0.0
        for j in range(inst.m):
            mine = [i for i in range(inst.n) if assign[i] == j]
            cheapest = float("inf")
            for perm in itertools.permutations(mine):
                clock, cost = inst.workers[j].contact, 0.0
                for i in perm:
                    clock += inst.tasks[i].rst
                    cost += inst.tasks[i].weight * clock
                cheapest = min(cheapest, cost)
            total += cheapest
        best = min(best, total)
    return best


def seeded(seed: int):
    return np.random.default_rng(seed)
