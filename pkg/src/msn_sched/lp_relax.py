"""Interval-indexed LP relaxation of total weighted completion time.

Variables ``y[i, j, l]`` are the fraction of interval ``I_l`` on worker
``j`` spent on task ``i``. Completion times are eliminated through an
auxiliary ``Z_i`` bounded below by both completion-time lower bounds, so
the model stays a plain LP in standard inequality form.

The first interval has unit length, so the bounds only hold when every
task needs at least one time unit. ``solve_instance`` rescales time when
some task is shorter and reports results in the original units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import Instance, Task, Worker
from .simplex import LpError, simplex

RESIDUAL_TOL = 1e-7


@dataclass(frozen=True)
class IntervalGrid:
    eta: float
    L: int

    @property
    def size(self) -> int:
        return self.L + 1

    @property
    def lengths(self) -> np.ndarray:
        ell = np.arange(1, self.L + 1)
        return np.concatenate([[1.0], self.eta * (1 + self.eta) ** (ell - 1)])

    @property
    def right(self) -> np.ndarray:
        return (1 + self.eta) ** np.arange(self.L + 1, dtype=float)

    @property
    def left(self) -> np.ndarray:
        """Left endpoints t_l: 0 for I_0, (1+eta)^(l-1) after."""
        ell = np.arange(1, self.L + 1)
        return np.concatenate([[0.0], (1 + self.eta) ** (ell - 1)])

    @property
    def start_offsets(self) -> np.ndarray:
        """(1+eta)^(l-1) with the l=0 term fixed at 1/2, as used in D_i."""
        ell = np.arange(1, self.L + 1)
        return np.concatenate([[0.5], (1 + self.eta) ** (ell - 1)])


def build_grid(total_rst: float, eta: float) -> IntervalGrid:
    if not total_rst > 0:
        raise ValueError(f"total RST must be positive, got {total_rst}")
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    L = max(0, math.ceil(math.log(total_rst) / math.log1p(eta) - 1e-12))
    while (1 + eta) ** L < total_rst * (1 - 1e-12):
        L += 1
    return IntervalGrid(float(eta), L)


@dataclass
class LpModel:
    instance: Instance
    grid: IntervalGrid
    c: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray

    @property
    def n_y(self) -> int:
        return self.instance.n * self.instance.m * self.grid.size

    @property
    def n_cols(self) -> int:
        return self.c.size

    def col(self, i: int, j: int, ell: int) -> int:
        return (i * self.instance.m + j) * self.grid.size + ell

    def z_col(self, i: int) -> int:
        return self.n_y + i

    @property
    def n_capacity_rows(self) -> int:
        return self.instance.m * self.grid.size

    def column_names(self) -> list[str]:
        inst, K = self.instance, self.grid.size
        names = [f"y_{i + 1}_{j + 1}_{ell}" for i in range(inst.n)
                 for j in range(inst.m) for ell in range(K)]
        return names + [f"Z_{i + 1}" for i in range(inst.n)]

    def dump(self, path) -> None:
        """Plain-text row listing for cross-checking with an external solver."""
        names = self.column_names()

        def terms(row):
            return " ".join(f"{row[k]:+.17g} {names[k]}" for k in np.flatnonzero(row))

        lines = [f"# eta={self.grid.eta} L={self.grid.L} "
                 f"n={self.instance.n} m={self.instance.m} cols={self.n_cols}", "min"]
        lines.append("  obj: " + terms(self.c))
        lines.append("subject to")
        for r, (row, b) in enumerate(zip(self.A_eq, self.b_eq)):
            lines.append(f"  eq{r + 1}: {terms(row)} = {b:.17g}")
        for r, (row, b) in enumerate(zip(self.A_ub, self.b_ub)):
            lines.append(f"  ub{r + 1}: {terms(row)} <= {b:.17g}")
        lines.append("bounds")
        lines.append("  all variables >= 0")
        lines.append("end")
        Path(path).write_text("\n".join(lines) + "\n")


def placement_coefficients(instance: Instance, grid: IntervalGrid) -> np.ndarray:
    """|I_l| / tau_i as an (n, 1, L+1) array: y -> placement probability."""
    return grid.lengths[None, None, :] / instance.rst[:, None, None]


def d_coefficients(instance: Instance, grid: IntervalGrid) -> np.ndarray:
    """Coefficient of y[i, j, l] in the lower bound D_i, shape (n, m, L+1)."""
    lengths = grid.lengths[None, None, :]
    offset = instance.contacts[None, :, None] + grid.start_offsets[None, None, :]
    return lengths / instance.rst[:, None, None] * offset + 0.5 * lengths


def build_lp(instance: Instance, grid: IntervalGrid) -> LpModel:
    n, m, K = instance.n, instance.m, grid.size
    ny = n * m * K
    ncols = ny + n
    c = np.zeros(ncols)
    c[ny:] = instance.weight

    lengths = grid.lengths
    A_eq = np.zeros((n, ncols))
    for i in range(n):
        A_eq[i, i * m * K:(i + 1) * m * K] = np.tile(lengths / instance.rst[i], m)
    b_eq = np.ones(n)

    cap = np.zeros((m * K, ncols))
    for i in range(n):
        base = i * m * K
        cap[np.arange(m * K), base + np.arange(m * K)] = 1.0

    dcoef = d_coefficients(instance, grid).reshape(n, m * K)
    lower_d = np.zeros((n, ncols))
    lower_len = np.zeros((n, ncols))
    for i in range(n):
        lower_d[i, i * m * K:(i + 1) * m * K] = dcoef[i]
        lower_d[i, ny + i] = -1.0
        lower_len[i, i * m * K:(i + 1) * m * K] = np.tile(lengths, m)
        lower_len[i, ny + i] = -1.0

    A_ub = np.vstack([cap, lower_d, lower_len])
    b_ub = np.concatenate([np.ones(m * K), np.zeros(2 * n)])
    return LpModel(instance, grid, c, A_eq, b_eq, A_ub, b_ub)


@dataclass
class LpSolution:
    y: np.ndarray  # (n, m, L+1)
    cbar: np.ndarray
    objective: float
    grid: IntervalGrid
    reduced_costs: np.ndarray | None = None
    iterations: int = 0
    time_scale: float = 1.0  # grid time units per instance time unit

    def placement_probabilities(self, instance: Instance) -> np.ndarray:
        return self.y * placement_coefficients(instance, self.grid) / self.time_scale


def lower_bounds(instance: Instance, grid: IntervalGrid, y: np.ndarray) -> np.ndarray:
    """Per-task LP completion time max(D_i(y), sum y|I|)."""
    if instance.n == 0:
        return np.zeros(0)
    d = (d_coefficients(instance, grid) * y).sum(axis=(1, 2))
    busy = (y * grid.lengths[None, None, :]).sum(axis=(1, 2))
    return np.maximum(d, busy)


def check_residuals(model: LpModel, x: np.ndarray, tol: float = RESIDUAL_TOL) -> float:
    """Largest constraint violation; raises LpError above ``tol``."""
    worst = 0.0
    if model.b_eq.size:
        worst = max(worst, float(np.abs(model.A_eq @ x - model.b_eq).max()))
    if model.b_ub.size:
        worst = max(worst, float(np.maximum(model.A_ub @ x - model.b_ub, 0).max()))
    worst = max(worst, float(np.maximum(-x, 0).max(initial=0.0)))
    if worst > tol:
        raise LpError(f"solution violates constraints by {worst:.3e}")
    return worst


def solve_lp(model: LpModel, *, backend: str = "revised", pricing: str = "dantzig",
             max_iter: int | None = None) -> LpSolution:
    """Optimal LP solution.

    ``backend`` is ``"revised"`` or ``"tableau"`` (the in-house simplex
    engines) or ``"highs"`` (scipy, used only as an external cross-check).
    Raises ``LpError`` on solver failure.
    """
    inst, grid = model.instance, model.grid
    if inst.n == 0:
        return LpSolution(np.zeros((0, inst.m, grid.size)), np.zeros(0), 0.0, grid,
                          np.zeros(0))
    if backend in ("revised", "tableau"):
        # The equality rows force sum_l y|I_l| = tau_i, so each length row is
        # just Z_i >= tau_i. Solving in s_i = Z_i - tau_i drops those n rows.
        keep = model.n_capacity_rows + inst.n
        b_ub = np.concatenate([model.b_ub[:model.n_capacity_rows], inst.rst])
        res = simplex(model.c, model.A_ub[:keep], b_ub, model.A_eq, model.b_eq,
                      pricing=pricing, method=backend, max_iter=max_iter)
        x, rc, iters = res.x.copy(), res.reduced_costs, res.iterations
        x[model.n_y:] += inst.rst
    elif backend == "highs":
        from scipy.optimize import linprog

        res = linprog(model.c, A_ub=model.A_ub, b_ub=model.b_ub, A_eq=model.A_eq,
                      b_eq=model.b_eq, bounds=(0, None), method="highs")
        if res.status != 0:
            raise LpError(f"highs failed: {res.message}")
        x, rc, iters = np.maximum(res.x, 0.0), None, int(res.nit)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    check_residuals(model, x)
    y = x[:model.n_y].reshape(inst.n, inst.m, grid.size)
    cbar = lower_bounds(inst, grid, y)
    objective = float(inst.weight @ cbar)
    return LpSolution(y, cbar, objective, grid, rc, iters)


def time_scale(instance: Instance) -> float:
    """Factor that stretches the shortest task to one time unit, never below 1."""
    if instance.n == 0:
        return 1.0
    return max(1.0, 1.0 / float(instance.rst.min()))


def scaled_instance(instance: Instance, scale: float) -> Instance:
    """Same instance with every duration and contact multiplied by ``scale``."""
    if scale == 1.0:
        return instance
    tasks = tuple(Task(t.id, t.rst * scale, t.weight) for t in instance.tasks)
    workers = tuple(Worker(w.id, w.rate / scale, w.contact * scale) for w in instance.workers)
    return Instance(tasks, workers)


def lp_model(instance: Instance, eta: float = 0.5) -> tuple[LpModel, float]:
    """Model for ``instance`` on a time axis where every task is at least one unit long."""
    scale = time_scale(instance)
    inst = scaled_instance(instance, scale)
    grid = build_grid(inst.total_rst, eta) if inst.n else IntervalGrid(float(eta), 0)
    return build_lp(inst, grid), scale


def solve_instance(instance: Instance, eta: float = 0.5, **kwargs) -> LpSolution:
    model, scale = lp_model(instance, eta)
    sol = solve_lp(model, **kwargs)
    if scale == 1.0:
        return sol
    return replace(sol, cbar=sol.cbar / scale, objective=sol.objective / scale, time_scale=scale)
