"""Exact optima by enumeration and checks of the approximation bounds."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core import TOL, Instance, Schedule, smith_order, weighted_completion
from .greedy import TieRule, lrf_schedule

ENUM_LIMIT = 10 ** 7
_CHUNK = 1 << 16


class OracleLimitError(ValueError):
    pass


def _equal_contact_groups(instance: Instance) -> list[list[int]]:
    groups: dict[float, list[int]] = {}
    for w in instance.workers:
        key = next((k for k in groups if abs(k - w.contact) <= TOL), w.contact)
        groups.setdefault(key, []).append(w.id)
    return [g for g in groups.values() if len(g) > 1]


def _canonical(assign: np.ndarray, groups: list[list[int]]) -> np.ndarray:
    """Rows where interchangeable workers first appear in increasing id order."""
    n = assign.shape[1]
    keep = np.ones(assign.shape[0], dtype=bool)
    for g in groups:
        first = [np.where((assign == j).any(axis=1), (assign == j).argmax(axis=1), n) for j in g]
        for a, b in zip(first, first[1:]):
            keep &= a <= b
    return keep


def brute_optimum(instance: Instance, limit: int = ENUM_LIMIT) -> tuple[Schedule, float]:
    """Minimum WCT over all assignments, each worker in ratio order.

    Ratio order is optimal for a fixed assignment because a worker's
    contact offset adds the same amount whatever the order. Among optimal
    assignments the first in base-m counting order is returned.
    """
    n, m = instance.n, instance.m
    if m ** n > limit:
        raise OracleLimitError(f"{m}^{n} = {m ** n} assignments exceeds the limit {limit}")
    if n == 0:
        return Schedule.from_lists([[] for _ in range(m)]), 0.0
    order = smith_order(instance.tasks)
    tau = instance.rst[order]
    w = instance.weight[order]
    e = instance.contacts
    # pair[k, i] = w_i * tau_k when k runs no later than i on a shared worker
    pair = np.triu(np.outer(tau, w))
    groups = _equal_contact_groups(instance)
    digits = m ** np.arange(n - 1, -1, -1)
    best_cost, best_code = np.inf, -1
    total = m ** n
    for lo in range(0, total, _CHUNK):
        codes = np.arange(lo, min(total, lo + _CHUNK))
        assign = (codes[:, None] // digits[None, :]) % m
        if groups:
            keep = _canonical(assign, groups)
            codes, assign = codes[keep], assign[keep]
            if not codes.size:
                continue
        same = assign[:, :, None] == assign[:, None, :]
        cost = e[assign] @ w + np.einsum("bki,ki->b", same, pair)
        k = int(np.argmin(cost))
        if cost[k] < best_cost - 1e-12:
            best_cost, best_code = float(cost[k]), int(codes[k])
    assign = (best_code // digits) % m
    lists: list[list[int]] = [[] for _ in range(m)]
    for pos, j in enumerate(assign):
        lists[int(j)].append(order[pos])
    sched = Schedule.from_lists(lists)
    return sched, weighted_completion(instance, sched)


def exhaustive_optimum(instance: Instance, limit: int = ENUM_LIMIT) -> float:
    """Minimum WCT over assignments and every processing order per worker."""
    n, m = instance.n, instance.m
    if m ** n > limit:
        raise OracleLimitError(f"{m}^{n} assignments exceeds the limit {limit}")
    tasks, workers = instance.tasks, instance.workers
    cache: dict[tuple[int, tuple[int, ...]], float] = {}

    def best_order(j, subset):
        key = (j, subset)
        if key not in cache:
            best = np.inf
            for perm in itertools.permutations(subset):
                clock, cost = workers[j].contact, 0.0
                for i in perm:
                    clock += tasks[i].rst
                    cost += tasks[i].weight * clock
                best = min(best, cost)
            cache[key] = best if subset else 0.0
        return cache[key]

    best = np.inf
    for assign in itertools.product(range(m), repeat=n):
        total = sum(best_order(j, tuple(i for i in range(n) if assign[i] == j)) for j in range(m))
        best = min(best, total)
    return float(best) if n else 0.0


@dataclass(frozen=True)
class EastmanTerms:
    M1: float
    Mn: float
    M_lambda: float


def eastman_terms(instance: Instance, schedule: Schedule, ratio_sorted: bool = True) -> EastmanTerms:
    """Single-machine prefix term, diagonal term and the contact term of a schedule.

    With ``ratio_sorted`` the prefix term runs over ratio order, otherwise
    over the tasks' own id order.
    """
    schedule.validate(instance)
    order = smith_order(instance.tasks) if ratio_sorted else list(range(instance.n))
    tau = instance.rst[order]
    w = instance.weight[order]
    m1 = float(w @ np.cumsum(tau)) if instance.n else 0.0
    mn = float(instance.weight @ instance.rst) if instance.n else 0.0
    ml = sum(instance.tasks[i].weight * instance.workers[j].contact
             for j, seq in enumerate(schedule.assignment) for i in seq)
    return EastmanTerms(m1, mn, float(ml))


@dataclass
class BoundReport:
    name: str
    wct_alg: float
    wct_ref: float
    ref_kind: str  # "opt" or "lp"
    alpha: float
    applicable: bool = True
    note: str = ""

    @property
    def ratio(self) -> float:
        return self.wct_alg / self.wct_ref if self.wct_ref > 0 else float("nan")

    @property
    def passed(self) -> bool:
        return (not self.applicable) or self.ratio <= self.alpha + 1e-9

    def line(self) -> str:
        status = "n/a " if not self.applicable else ("PASS" if self.passed else "FAIL")
        return (f"{status} {self.name}: {self.wct_alg:.6g} / {self.ref_kind} {self.wct_ref:.6g}"
                f" = {self.ratio:.6f} (bound {self.alpha:.6g}){' ' + self.note if self.note else ''}")


def four_task_instance(T: float) -> Instance:
    rst = [1.0, 1.0, 2.0, float(T)]
    return Instance.from_arrays(rst, rst, [1.0, 1.0 / 3.0])


@dataclass
class LowerBoundReport:
    T: float
    terms: EastmanTerms
    wct_opt: float
    opt_schedule: Schedule
    rhs: float

    @property
    def violated(self) -> bool:
        return self.wct_opt < self.rhs - 1e-9

    def line(self) -> str:
        return (f"T={self.T:g} M1={self.terms.M1:.6g} Mn={self.terms.Mn:.6g} "
                f"M_lambda={self.terms.M_lambda:.6g} OPT={self.wct_opt:.6g} RHS={self.rhs:.6g} "
                f"{'violated' if self.violated else 'holds'}")


def check_contact_lower_bound(T: float) -> LowerBoundReport:
    """Check the contact-extended Eastman lower bound on the four-task instance.

    The contact term comes from the ratio-order greedy schedule with ties
    sent to the larger contact, the substitution the counterexample uses;
    it is a property of that schedule, not of the optimum.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    inst = four_task_instance(T)
    m = inst.m
    lrf = lrf_schedule(inst, TieRule.LARGEST_CONTACT)
    terms = eastman_terms(inst, lrf)
    opt_sched, opt = brute_optimum(inst)
    rhs = terms.M1 / m + (m - 1) / (2 * m) * terms.Mn + terms.M_lambda
    return LowerBoundReport(float(T), terms, opt, opt_sched, rhs)


def lrf_alpha(instance: Instance) -> float:
    return max(1.5, instance.w_max * instance.lambda_max / (instance.w_min * instance.lambda_min))


def lrf_small_contact_applies(instance: Instance) -> bool:
    return instance.n >= instance.m and instance.tau_min > 2.0 / instance.lambda_max


def dis_alpha(eta: float) -> float:
    return max(2.5, 1.0 + eta)


def dis_tight_applies(instance: Instance, eta: float) -> bool:
    e_min = float(instance.contacts.min())
    return 2.0 * e_min + instance.tau_min >= (1.0 - eta) / eta


def online_factor(instance: Instance) -> float:
    return 1.0 + (instance.n * instance.w_max * 2.0 / instance.lambda_min
                  / (instance.w_min * instance.total_rst))


def audit_bounds(instance: Instance, wcts: Mapping[str, float], lp_objective: float, eta: float,
                 opt: float | None = None, online_opt: float | None = None) -> list[BoundReport]:
    """One report per bound that applies to the algorithms in ``wcts``.

    ``wcts`` maps algorithm name (lrf, ris, dis, cosmos, odis) to its WCT;
    for ris pass the mean over draws. Greedy bounds use ``opt`` when given
    and fall back to the LP value, which only makes them stricter. Online
    bounds need ``online_opt``, the optimum that knows the meeting times.
    """
    if instance.n == 0:
        return []
    reports = []
    ref, kind = (opt, "opt") if opt is not None else (lp_objective, "lp")
    if "lrf" in wcts:
        reports.append(BoundReport("lrf ratio-order bound", wcts["lrf"], ref, kind, lrf_alpha(instance)))
        reports.append(BoundReport("lrf 2-1/m bound", wcts["lrf"], ref, kind, 2.0 - 1.0 / instance.m,
                                   lrf_small_contact_applies(instance),
                                   "" if lrf_small_contact_applies(instance)
                                   else "needs n >= m and tau_min > 2/lambda_max"))
    if "ris" in wcts:
        reports.append(BoundReport("ris expected ratio", wcts["ris"], lp_objective, "lp", 1.5 + eta / 2))
    if "dis" in wcts:
        reports.append(BoundReport("dis bound", wcts["dis"], lp_objective, "lp", dis_alpha(eta)))
        ok = dis_tight_applies(instance, eta)
        reports.append(BoundReport("dis tight bound", wcts["dis"], lp_objective, "lp", 1.5 + eta, ok,
                                   "" if ok else "needs 2*e_min + tau_min >= (1-eta)/eta"))
    if online_opt is not None:
        factor = online_factor(instance)
        if "cosmos" in wcts:
            alpha = 2.0 - 1.0 / instance.m if lrf_small_contact_applies(instance) else lrf_alpha(instance)
            reports.append(BoundReport("cosmos competitive bound", wcts["cosmos"], online_opt, "opt",
                                       alpha * factor))
        if "odis" in wcts:
            reports.append(BoundReport("odis competitive bound", wcts["odis"], online_opt, "opt",
                                       dis_alpha(eta) * factor))
    return reports


def clairvoyant_optimum(instance: Instance, offsets, limit: int = ENUM_LIMIT) -> tuple[Schedule, float]:
    """Optimum when every worker's overhead is known in advance.

    ``offsets[j]`` is worker j's realized (or sampled) distribution plus
    feedback delay, matching how the online schedule is evaluated.
    """
    return brute_optimum(instance.with_contacts([float(o) for o in offsets]), limit)
