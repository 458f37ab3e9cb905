"""Two-phase primal simplex.

Solves ``min c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq``
and ``x >= 0``. Two engines share the same phase-1/phase-2 logic:

``"tableau"``  dense tableau, every pivot updates the full matrix.
``"revised"``  explicit basis inverse over sparse columns, refactorized
               periodically; much faster once the LP has thousands of
               columns.

Pricing is Bland's rule or Dantzig's most-negative reduced cost. Dantzig
falls back to Bland after a run of degenerate pivots so neither rule cycles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg.blas import dger

PIVOT_TOL = 1e-9
OPT_TOL = 1e-7
_ZERO = 1e-12
_DEGENERATE_RUN = 50
_REFACTOR_EVERY = 250


class LpError(RuntimeError):
    pass


class InfeasibleError(LpError):
    pass


class UnboundedError(LpError):
    pass


class IterationLimitError(LpError):
    pass


@dataclass
class SimplexResult:
    x: np.ndarray
    objective: float
    reduced_costs: np.ndarray  # structural columns only
    iterations: int


@dataclass
class _StandardForm:
    """``A x = b, x >= 0, b >= 0`` with a starting slack/artificial basis."""

    A: np.ndarray
    b: np.ndarray
    basis: np.ndarray
    nvar: int
    art: int  # first artificial column

    @property
    def width(self) -> int:
        return self.A.shape[1]


def _standard_form(nvar, A_ub, b_ub, A_eq, b_eq) -> _StandardForm:
    n_ub, n_eq = len(b_ub), len(b_eq)
    rows = n_ub + n_eq
    neg_ub = b_ub < 0
    n_art = int(neg_ub.sum()) + n_eq
    art = nvar + n_ub
    A = np.zeros((rows, art + n_art))
    b = np.zeros(rows)
    basis = np.empty(rows, dtype=np.intp)
    a = 0
    for r in range(n_ub):
        sign = -1.0 if neg_ub[r] else 1.0
        A[r, :nvar] = sign * A_ub[r]
        A[r, nvar + r] = sign
        b[r] = sign * b_ub[r]
        if neg_ub[r]:
            A[r, art + a] = 1.0
            basis[r] = art + a
            a += 1
        else:
            basis[r] = nvar + r
    for k in range(n_eq):
        r = n_ub + k
        sign = -1.0 if b_eq[k] < 0 else 1.0
        A[r, :nvar] = sign * A_eq[k]
        b[r] = sign * b_eq[k]
        A[r, art + a] = 1.0
        basis[r] = art + a
        a += 1
    return _StandardForm(A, b, basis, nvar, art)


class _Engine:
    """Pricing, ratio test and the iteration loop; subclasses own the algebra."""

    basis: np.ndarray

    def __init__(self, pricing: str, max_iter: int):
        self.pricing = pricing
        self.max_iter = max_iter
        self.iterations = 0

    def _entering(self, rc: np.ndarray, bland: bool) -> int:
        if bland:
            hit = np.flatnonzero(rc < -OPT_TOL)
            return int(hit[0]) if hit.size else -1
        q = int(np.argmin(rc))
        return q if rc[q] < -OPT_TOL else -1

    def _leaving(self, alpha: np.ndarray) -> int:
        rows = np.flatnonzero(alpha > PIVOT_TOL)
        if not rows.size:
            return -1
        ratios = self.values()[rows] / alpha[rows]
        best = ratios.min()
        tied = rows[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
        # Bland's leaving rule: smallest basic variable index among the ties
        return int(tied[np.argmin(self.basis[tied])])

    def run(self, ncols: int) -> None:
        """Iterate until no column in ``[0, ncols)`` prices out."""
        degenerate = 0
        while True:
            bland = self.pricing == "bland" or degenerate >= _DEGENERATE_RUN
            q = self._entering(self.reduced_costs(ncols), bland)
            if q < 0:
                return
            alpha = self.column(q)
            r = self._leaving(alpha)
            if r < 0:
                raise UnboundedError(f"column {q} is unbounded")
            if self.iterations >= self.max_iter:
                raise IterationLimitError(f"simplex exceeded {self.max_iter} iterations")
            step = self.values()[r]
            self.pivot(r, q, alpha)
            self.iterations += 1
            degenerate = degenerate + 1 if step <= _ZERO else 0


class _Tableau(_Engine):
    def __init__(self, sf: _StandardForm, pricing: str, max_iter: int):
        super().__init__(pricing, max_iter)
        rows = sf.A.shape[0]
        self.T = np.zeros((rows + 1, sf.width + 1))
        self.T[:-1, :-1] = sf.A
        self.T[:-1, -1] = sf.b
        self.basis = sf.basis.copy()

    def set_cost(self, cost: np.ndarray) -> None:
        T = self.T
        T[-1, :] = 0.0
        T[-1, :cost.size] = cost
        for r, b in enumerate(self.basis):
            if b < cost.size and cost[b] != 0.0:
                T[-1] -= cost[b] * T[r]

    def reduced_costs(self, ncols: int) -> np.ndarray:
        return self.T[-1, :ncols]

    def column(self, q: int) -> np.ndarray:
        return self.T[:-1, q]

    def values(self) -> np.ndarray:
        return self.T[:-1, -1]

    def row(self, r: int, ncols: int) -> np.ndarray:
        return self.T[r, :ncols]

    def pivot(self, r: int, q: int, alpha: np.ndarray | None = None) -> None:
        T = self.T
        col = T[:, q].copy()
        T[r] /= col[r]
        rows = np.flatnonzero(col)
        rows = rows[rows != r]
        if rows.size:
            block = T[rows] - np.outer(col[rows], T[r])
            block[np.abs(block) < _ZERO] = 0.0
            T[rows] = block
        T[:, q] = 0.0
        T[r, q] = 1.0
        self.basis[r] = q


class _Revised(_Engine):
    def __init__(self, sf: _StandardForm, pricing: str, max_iter: int):
        super().__init__(pricing, max_iter)
        self.A = sf.A
        self.b = sf.b
        self.basis = sf.basis.copy()
        self.At = sparse.csr_matrix(sf.A.T)  # row q of At is column q of A
        self.cost = np.zeros(sf.width)
        self.refactor()

    def refactor(self) -> None:
        # Fortran order so dger can update in place
        self.Binv = np.asfortranarray(np.linalg.inv(self.A[:, self.basis]))
        self.xB = self.Binv @ self.b
        self.xB[np.abs(self.xB) < _ZERO] = 0.0
        self.since_refactor = 0

    def set_cost(self, cost: np.ndarray) -> None:
        self.cost = np.zeros(self.A.shape[1])
        self.cost[:cost.size] = cost

    def reduced_costs(self, ncols: int) -> np.ndarray:
        pi = self.cost[self.basis] @ self.Binv
        rc = (self.cost - self.At @ pi)[:ncols]
        rc[self.basis[self.basis < ncols]] = 0.0
        return rc

    def column(self, q: int) -> np.ndarray:
        lo, hi = self.At.indptr[q], self.At.indptr[q + 1]
        return self.Binv[:, self.At.indices[lo:hi]] @ self.At.data[lo:hi]

    def values(self) -> np.ndarray:
        return self.xB

    def row(self, r: int, ncols: int) -> np.ndarray:
        return (self.At @ self.Binv[r])[:ncols]

    def pivot(self, r: int, q: int, alpha: np.ndarray | None = None) -> None:
        if alpha is None:
            alpha = self.column(q)
        piv = alpha[r]
        theta = self.xB[r] / piv
        self.xB -= theta * alpha
        self.xB[r] = theta
        self.xB[np.abs(self.xB) < _ZERO] = 0.0
        prow = self.Binv[r] / piv
        alpha = alpha.copy()
        alpha[r] -= 1.0  # turns row r into prow in the same rank-1 update
        self.Binv = dger(-1.0, alpha, prow, a=self.Binv, overwrite_a=True)
        self.basis[r] = q
        self.since_refactor += 1
        if self.since_refactor >= _REFACTOR_EVERY:
            self.refactor()


def equilibrate(A, passes: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Power-of-two row and column scales from geometric-mean passes."""
    M = sparse.coo_matrix(A)
    rows, cols = M.row, M.col
    logs = np.log2(np.abs(M.data))
    nr, nc = M.shape
    row_cnt = np.maximum(np.bincount(rows, minlength=nr), 1)
    col_cnt = np.maximum(np.bincount(cols, minlength=nc), 1)
    lr = np.zeros(nr)
    ls = np.zeros(nc)
    for _ in range(passes):
        lr = -np.bincount(rows, weights=logs + ls[cols], minlength=nr) / row_cnt
        ls = -np.bincount(cols, weights=logs + lr[rows], minlength=nc) / col_cnt
    return np.exp2(np.round(lr)), np.exp2(np.round(ls))


def simplex(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, *,
            pricing: str = "bland", method: str = "tableau",
            max_iter: int | None = None, scale: bool = True) -> SimplexResult:
    if pricing not in ("bland", "dantzig"):
        raise ValueError(f"unknown pricing rule {pricing!r}")
    engines = {"tableau": _Tableau, "revised": _Revised}
    if method not in engines:
        raise ValueError(f"unknown method {method!r}")
    c = np.asarray(c, dtype=float)
    nvar = c.size
    A_ub = np.zeros((0, nvar)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, nvar)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    A_eq = np.zeros((0, nvar)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, nvar)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    if scale and (A_ub.size or A_eq.size):
        # solve in x' = x / col_scale with rows multiplied by row_scale
        row_scale, col_scale = equilibrate(np.vstack([A_ub, A_eq]))
        ru, re_ = row_scale[:len(b_ub)], row_scale[len(b_ub):]
        res = simplex(c * col_scale, A_ub * ru[:, None] * col_scale, b_ub * ru,
                      A_eq * re_[:, None] * col_scale, b_eq * re_,
                      pricing=pricing, method=method, max_iter=max_iter, scale=False)
        return SimplexResult(x=res.x * col_scale, objective=float(c @ (res.x * col_scale)),
                             reduced_costs=res.reduced_costs / col_scale,
                             iterations=res.iterations)

    sf = _standard_form(nvar, A_ub, b_ub, A_eq, b_eq)
    rows = sf.A.shape[0]
    if max_iter is None:
        max_iter = 50 * (rows + sf.width) + 1000
    eng = engines[method](sf, pricing, max_iter)
    ncols = sf.width

    if sf.art < sf.width:
        # phase 1: minimise the sum of artificials
        cost = np.zeros(sf.width)
        cost[sf.art:] = 1.0
        eng.set_cost(cost)
        eng.run(sf.width)
        infeas = float(eng.values()[eng.basis >= sf.art].sum())
        if infeas > OPT_TOL * max(1.0, float(np.abs(sf.b).sum())):
            raise InfeasibleError(f"phase 1 ended with infeasibility {infeas:.3e}")
        # pivot zero-level artificials out where the row allows it; a row
        # with no usable entry is redundant and its artificial stays at 0
        for r in range(rows):
            if eng.basis[r] < sf.art:
                continue
            cand = np.flatnonzero(np.abs(eng.row(r, sf.art)) > PIVOT_TOL)
            cand = cand[~np.isin(cand, eng.basis)]
            if cand.size:
                eng.pivot(r, int(cand[0]))
        ncols = sf.art

    # phase 2; artificials never re-enter
    eng.set_cost(c)
    eng.run(ncols)

    x = np.zeros(sf.width)
    x[eng.basis] = eng.values()
    x = np.maximum(x[:nvar], 0.0)
    rc = eng.reduced_costs(nvar).copy()
    return SimplexResult(x=x, objective=float(c @ x), reduced_costs=rc, iterations=eng.iterations)
