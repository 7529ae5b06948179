"""Rediscovery of weighted-sum coefficients by linear programming.

For a front member x*, find weights lambda on the probability simplex with
lambda . fhat(x*) <= lambda . fhat(x) for every other member.  The LP is
solved with a dense two-phase tableau simplex using Bland's rule, which is
plenty for three variables and a few dozen rows.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .pareto import KeyNotInFront, ParetoFront, rescale

PIVOT_TOL = 1e-12
FEAS_TOL = 1e-9


class NumericInstability(ArithmeticError):
    pass


class Status(str, enum.Enum):
    FEASIBLE = "FEASIBLE"
    INFEASIBLE = "INFEASIBLE"


@dataclass
class LinearProgram:
    """min c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  0 <= x <= upper."""

    c: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    upper: np.ndarray
    row_keys: list[str] = field(default_factory=list)

    def __post_init__(self):
        n = len(self.c)
        self.c = np.asarray(self.c, dtype=float)
        self.a_ub = np.asarray(self.a_ub, dtype=float).reshape(-1, n)
        self.b_ub = np.asarray(self.b_ub, dtype=float).reshape(-1)
        self.a_eq = np.asarray(self.a_eq, dtype=float).reshape(-1, n)
        self.b_eq = np.asarray(self.b_eq, dtype=float).reshape(-1)
        self.upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if len(self.a_ub) != len(self.b_ub) or len(self.a_eq) != len(self.b_eq) or len(self.upper) != n:
            raise ValueError("inconsistent LP dimensions")
        for arr in (self.c, self.a_ub, self.b_ub, self.a_eq, self.b_eq):
            if not np.isfinite(arr).all():
                raise ValueError("LP entries must be finite")

    @property
    def n_vars(self) -> int:
        return len(self.c)


@dataclass(frozen=True)
class RediscoveryCertificate:
    status: Status
    weights: tuple[float, ...] | None
    objective: float | None = None
    target: str = ""

    @property
    def feasible(self) -> bool:
        return self.status is Status.FEASIBLE


def build_lp(front: ParetoFront, target_key: str) -> LinearProgram:
    if target_key not in front:
        raise KeyNotInFront(f"{target_key!r} is not a member of the Pareto front")
    scaled = rescale(front)
    target = np.array(scaled[target_key])
    others = [k for k, _ in front.members if k != target_key]
    n = len(target)
    rows = np.array([target - np.array(scaled[k]) for k in others]).reshape(-1, n)
    return LinearProgram(
        c=target,
        a_ub=rows,
        b_ub=np.zeros(len(others)),
        a_eq=np.ones((1, n)),
        b_eq=np.ones(1),
        upper=np.ones(n),
        row_keys=others,
    )


def _pivot(tab: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    for r in range(len(tab)):
        if r != row and tab[r, col] != 0.0:
            tab[r] -= tab[r, col] * tab[row]


def _run_simplex(tab: np.ndarray, basis: list[int], cost_row: int, allowed: np.ndarray) -> None:
    """Minimize the reduced-cost row ``tab[cost_row]`` over constraint rows ``0..cost_row-1``.

    Bland's rule: the entering column is the lowest-index improving column,
    the leaving row has the minimum ratio, ties going to the lowest basic
    variable index.  Pivots update every row of ``tab``.
    """
    while True:
        improving = np.flatnonzero((tab[cost_row, :-1] < -FEAS_TOL) & allowed)
        if not len(improving):
            return
        col = improving[0]
        column = tab[:cost_row, col]
        eligible = np.flatnonzero(column > PIVOT_TOL)
        if not len(eligible):
            if np.any(column > 0):
                raise NumericInstability(f"pivot on column {col} below {PIVOT_TOL}")
            raise NumericInstability("LP is unbounded")
        ratios = tab[eligible, -1] / column[eligible]
        tied = eligible[ratios <= ratios.min() + 1e-15]
        row = min(tied, key=lambda r: basis[r])
        _pivot(tab, row, col)
        basis[row] = col


def simplex_solve(lp: LinearProgram) -> tuple[Status, np.ndarray | None, float | None]:
    """Two-phase dense simplex. Returns (status, x, objective)."""
    n = lp.n_vars
    finite_upper = [i for i in range(n) if np.isfinite(lp.upper[i])]
    ub_rows = list(lp.a_ub) + [np.eye(n)[i] for i in finite_upper]
    ub_rhs = list(lp.b_ub) + [lp.upper[i] for i in finite_upper]
    m_ub, m_eq = len(ub_rows), len(lp.a_eq)
    m = m_ub + m_eq

    # columns: x (n) | slacks (m_ub) | artificials (m) | rhs
    n_art_start = n + m_ub
    width = n + m_ub + m + 1
    tab = np.zeros((m + 2, width))
    basis: list[int] = []
    art_used = np.zeros(m, dtype=bool)
    for r in range(m):
        if r < m_ub:
            coeffs, rhs = np.asarray(ub_rows[r], dtype=float), float(ub_rhs[r])
            tab[r, n + r] = 1.0
        else:
            coeffs, rhs = lp.a_eq[r - m_ub], float(lp.b_eq[r - m_ub])
        tab[r, :n] = coeffs
        tab[r, -1] = rhs
        if rhs < 0:
            tab[r, :-1] *= -1.0
            tab[r, -1] *= -1.0
        if r < m_ub and tab[r, n + r] > 0:
            basis.append(n + r)
        else:
            tab[r, n_art_start + r] = 1.0
            basis.append(n_art_start + r)
            art_used[r] = True

    # phase 1: minimize the sum of artificials
    phase1, phase2 = m, m + 1
    for r in range(m):
        if art_used[r]:
            tab[phase1, :-1] -= tab[r, :-1]
            tab[phase1, -1] -= tab[r, -1]
            tab[phase1, n_art_start + r] += 1.0
    tab[phase2, :n] = lp.c
    allowed = np.ones(width - 1, dtype=bool)
    allowed[n_art_start:] = False
    # pivots also keep the phase-2 cost row reduced
    _run_simplex(tab, basis, phase1, allowed)
    infeasibility = -tab[phase1, -1]
    if infeasibility > FEAS_TOL:
        return Status.INFEASIBLE, None, None

    # drive remaining artificials out of the basis
    for r in range(m):
        if basis[r] >= n_art_start:
            row = tab[r, :n_art_start]
            nz = np.flatnonzero(np.abs(row) > PIVOT_TOL)
            if len(nz):
                _pivot(tab, r, nz[0])
                basis[r] = nz[0]
    allowed = np.zeros(width - 1, dtype=bool)
    allowed[:n_art_start] = True
    keep = [r for r in range(m) if basis[r] < n_art_start]
    # redundant rows (artificial still basic at zero) are dropped
    sub = np.vstack([tab[keep], tab[phase2 : phase2 + 1]])
    sub_basis = [basis[r] for r in keep]
    _run_simplex(sub, sub_basis, len(keep), allowed)

    x = np.zeros(n)
    for r, b in enumerate(sub_basis):
        if b < n:
            x[b] = sub[r, -1]
    x[np.abs(x) < 1e-15] = 0.0
    return Status.FEASIBLE, x, float(lp.c @ x)


def verify(front: ParetoFront, target_key: str, weights, tol: float = FEAS_TOL) -> bool:
    """Direct substitution check of a weight vector."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < -tol) or np.any(w > 1 + tol) or abs(w.sum() - 1.0) > tol:
        return False
    scaled = rescale(front)
    mine = float(w @ np.array(scaled[target_key]))
    return all(mine <= float(w @ np.array(v)) + tol for k, v in scaled.items() if k != target_key)


def rediscover(front: ParetoFront, target_key: str) -> RediscoveryCertificate:
    lp = build_lp(front, target_key)
    status, x, obj = simplex_solve(lp)
    if status is Status.INFEASIBLE:
        return RediscoveryCertificate(Status.INFEASIBLE, None, None, target_key)
    if not verify(front, target_key, x):
        raise NumericInstability(f"simplex weights {x} failed direct substitution for {target_key!r}")
    return RediscoveryCertificate(Status.FEASIBLE, tuple(float(v) for v in x), obj, target_key)
