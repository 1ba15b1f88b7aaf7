"""Small dense linear-program solver.

Solves   maximize  c . x   subject to   A x <= b,   lo <= x <= hi
with a two-phase tableau simplex using Bland's rule, which cannot cycle.
Degenerate programs show up routinely here (zonotopes with zero generator
entries produce zero rows/columns), so anti-cycling is not optional.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical_failure"

DEFAULT_TOL = 1e-9

# Internal pivot/pricing thresholds; the caller-facing tol only governs
# feasibility certification of the returned point.
_ENTER_TOL = 1e-10
_PIVOT_TOL = 1e-10


@dataclass(frozen=True)
class LinearProgram:
    """maximize objective . x  s.t.  A x <= b,  lower <= x <= upper.

    Bound entries may be -inf/+inf for unbounded directions.
    """

    objective: np.ndarray
    A: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __init__(self, objective, A, b, lower, upper):
        c = np.asarray(objective, dtype=float).reshape(-1)
        A = np.asarray(A, dtype=float)
        if A.ndim != 2:
            if A.size:
                raise ValueError("A must be a matrix")
            A = np.zeros((0, c.size))
        b = np.asarray(b, dtype=float).reshape(-1)
        lo = np.asarray(lower, dtype=float).reshape(-1)
        hi = np.asarray(upper, dtype=float).reshape(-1)
        if A.shape[0] != b.size:
            raise ValueError("A row count does not match b length")
        if not (A.shape[1] == c.size == lo.size == hi.size):
            raise ValueError("A columns, objective and bounds must agree")
        if np.any(np.isnan(c)) or np.any(np.isnan(A)) or np.any(np.isnan(b)):
            raise ValueError("program entries must not be NaN")
        for name, arr in (("objective", c), ("A", A), ("b", b)):
            if np.any(np.isinf(arr)):
                raise ValueError(f"{name} entries must be finite")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def n_vars(self) -> int:
        return self.objective.size

    @property
    def n_constraints(self) -> int:
        return self.b.size


@dataclass(frozen=True)
class LpOutcome:
    status: str
    solution: np.ndarray | None = None
    objective_value: float | None = None


def _standard_form(lp: LinearProgram):
    """Rewrite with nonnegative variables u: x = offset + S u (S column signs).

    Returns (c_std, A_std, b_std, recover) where recover maps a u-vector back
    to x. Finite two-sided bounds become extra rows u_k <= hi - lo.
    """
    n = lp.n_vars
    cols = []          # (var index, sign) per standard variable
    offset = np.zeros(n)
    ub_rows = []       # (std col, rhs) for two-sided bounds
    for j in range(n):
        lo, hi = lp.lower[j], lp.upper[j]
        if np.isfinite(lo):
            offset[j] = lo
            k = len(cols)
            cols.append((j, 1.0))
            if np.isfinite(hi):
                ub_rows.append((k, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))

    N = len(cols)
    A_std = np.zeros((lp.n_constraints + len(ub_rows), N))
    for k, (j, s) in enumerate(cols):
        A_std[: lp.n_constraints, k] = s * lp.A[:, j]
    b_std = np.concatenate(
        [lp.b - lp.A @ offset, np.array([rhs for _, rhs in ub_rows])]
    )
    for i, (k, _) in enumerate(ub_rows):
        A_std[lp.n_constraints + i, k] = 1.0

    c_std = np.zeros(N)
    for k, (j, s) in enumerate(cols):
        c_std[k] += s * lp.objective[j]

    def recover(u: np.ndarray) -> np.ndarray:
        x = offset.copy()
        for k, (j, s) in enumerate(cols):
            x[j] += s * u[k]
        return x

    return c_std, A_std, b_std, recover


def _pivot(T: np.ndarray, basis: np.ndarray, row: int, col: int):
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    basis[row] = col


def _choose_entering(obj_row: np.ndarray, allowed: np.ndarray) -> int:
    # Bland: smallest eligible index with negative reduced cost.
    for j in np.flatnonzero(allowed):
        if obj_row[j] < -_ENTER_TOL:
            return int(j)
    return -1


def _choose_leaving(T: np.ndarray, basis: np.ndarray, col: int, m: int) -> int:
    best, best_ratio = -1, np.inf
    for i in range(m):
        a = T[i, col]
        if a > _PIVOT_TOL:
            ratio = T[i, -1] / a
            if ratio < best_ratio - _PIVOT_TOL or (
                abs(ratio - best_ratio) <= _PIVOT_TOL
                and (best == -1 or basis[i] < basis[best])
            ):
                best, best_ratio = i, ratio
    return best


def solve(lp: LinearProgram, tol: float = DEFAULT_TOL) -> LpOutcome:
    """Solve the program; see module docstring for the algorithm.

    Statuses: OPTIMAL (solution verified feasible within tol), INFEASIBLE
    (certified by a positive phase-1 optimum), UNBOUNDED, or
    NUMERICAL_FAILURE after the iteration cap - callers must treat the
    latter as "cannot certify", never as feasibility.
    """
    if np.any(lp.lower > lp.upper):
        return LpOutcome(INFEASIBLE)

    c_std, A_std, b_std, recover = _standard_form(lp)
    m, N = A_std.shape

    # Row equilibration: positive scaling preserves the feasible set exactly
    # while keeping pivot magnitudes meaningful for badly scaled inputs.
    if m:
        row_scale = np.abs(A_std).max(axis=1)
        row_scale[row_scale < 1e-300] = 1.0
        A_std = A_std / row_scale[:, None]
        b_std = b_std / row_scale

    feas_tol = max(tol, tol * (np.abs(b_std).max() if m else 1.0))

    if N == 0:
        if np.all(b_std >= -feas_tol):
            x = recover(np.zeros(0))
            return LpOutcome(OPTIMAL, x, float(lp.objective @ x))
        return LpOutcome(INFEASIBLE)

    neg = b_std < 0
    n_art = int(neg.sum())
    art_cols = np.arange(N + m, N + m + n_art)

    # Tableau: structural | slack | artificial | rhs, plus two objective rows
    # (phase-1 row, then the real objective row, both maintained by pivots).
    T = np.zeros((m + 2, N + m + n_art + 1))
    T[:m, :N] = A_std
    T[:m, N : N + m] = np.eye(m)
    T[:m, -1] = b_std
    T[m + 1, :N] = -c_std

    basis = np.empty(m, dtype=int)
    k = 0
    for i in range(m):
        if neg[i]:
            T[i, : N + m] *= -1.0
            T[i, -1] *= -1.0
            T[i, N + m + k] = 1.0
            basis[i] = N + m + k
            k += 1
        else:
            basis[i] = N + i

    max_iter = max(200, 50 * (N + m))
    allowed = np.ones(T.shape[1] - 1, dtype=bool)

    if n_art:
        # Phase 1: maximize -(sum of artificials); price out the basic ones.
        for i in range(m):
            if basis[i] >= N + m:
                T[m] -= T[i]
        T[m, N + m : -1] = 0.0
        it = 0
        while True:
            col = _choose_entering(T[m, :-1], allowed)
            if col < 0:
                break
            row = _choose_leaving(T, basis, col, m)
            if row < 0:
                return LpOutcome(NUMERICAL_FAILURE)
            leaving = basis[row]
            _pivot(T, basis, row, col)
            if leaving >= N + m:
                allowed[leaving] = False  # departed artificials stay out
            it += 1
            if it > max_iter:
                return LpOutcome(NUMERICAL_FAILURE)
        if T[m, -1] < -feas_tol:
            return LpOutcome(INFEASIBLE)
        # Drive leftover artificials (basic at zero) out, or drop dead rows.
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] in art_cols:
                pivot_col = -1
                for j in range(N + m):
                    if abs(T[i, j]) > _PIVOT_TOL:
                        pivot_col = j
                        break
                if pivot_col >= 0:
                    _pivot(T, basis, i, pivot_col)
                else:
                    keep[i] = False
        if not keep.all():
            T = np.vstack([T[:m][keep], T[m:]])
            basis = basis[keep]
            m = int(keep.sum())
        allowed[art_cols] = False
        T[:, art_cols] = 0.0

    # Phase 2 on the real objective.
    it = 0
    while True:
        col = _choose_entering(T[m + 1, :-1], allowed)
        if col < 0:
            break
        row = _choose_leaving(T, basis, col, m)
        if row < 0:
            return LpOutcome(UNBOUNDED)
        _pivot(T, basis, row, col)
        it += 1
        if it > max_iter:
            return LpOutcome(NUMERICAL_FAILURE)

    u = np.zeros(T.shape[1] - 1)
    u[basis] = T[:m, -1]
    x = recover(u[:N])

    # Downgrade to failure rather than report an unverified point.
    resid = lp.A @ x - lp.b if lp.n_constraints else np.zeros(0)
    bound_ok = np.all(x >= lp.lower - feas_tol) and np.all(x <= lp.upper + feas_tol)
    if (resid.size and resid.max() > feas_tol) or not bound_ok:
        return LpOutcome(NUMERICAL_FAILURE)
    x = np.clip(x, lp.lower, lp.upper)
    return LpOutcome(OPTIMAL, x, float(lp.objective @ x))
