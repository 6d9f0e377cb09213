"""Small dense two-phase simplex with Bland's rule.

Works on plain Python numbers, so the same code runs exactly on
``fractions.Fraction`` data and approximately on floats.  The problems
solved here have at most a few dozen variables, so a full tableau is fine.

Problem form::

    maximize    c @ x
    subject to  A_eq @ x == b_eq
                A_ub @ x <= b_ub
                x >= 0
"""

from dataclasses import dataclass
from fractions import Fraction

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LPResult:
    status: str
    x: list | None = None
    objective: object = None
    # duals for the equality rows then the inequality rows; they satisfy
    # A^T y >= c, y_ub >= 0 and b @ y == objective at optimality
    y_eq: list | None = None
    y_ub: list | None = None
    pivots: int = 0

    @property
    def ok(self):
        return self.status == OPTIMAL


def _is_exact(*blocks):
    for block in blocks:
        for v in block:
            if isinstance(v, (list, tuple)):
                if not all(isinstance(t, (int, Fraction)) for t in v):
                    return False
            elif not isinstance(v, (int, Fraction)):
                return False
    return True


def linprog_max(c, A_eq=(), b_eq=(), A_ub=(), b_ub=(), tol=1e-9, max_pivots=50_000):
    """Maximize ``c @ x`` over the polyhedron; see module docstring.

    Exact arithmetic is used when every coefficient is an int or Fraction,
    in which case ``tol`` is ignored.
    """
    A_eq = [list(r) for r in A_eq]
    A_ub = [list(r) for r in A_ub]
    b_eq, b_ub, c = list(b_eq), list(b_ub), list(c)
    nv = len(c)
    exact = _is_exact(c, A_eq, b_eq, A_ub, b_ub)
    if exact:
        conv = Fraction
        eps = 0
    else:
        conv = float
        eps = tol
    zero = conv(0)
    one = conv(1)

    n_eq, n_ub = len(A_eq), len(A_ub)
    rows = n_eq + n_ub
    n_slack = n_ub
    n_art = rows
    ncol = nv + n_slack + n_art
    art0 = nv + n_slack

    T = []
    sign = []
    for r in range(rows):
        if r < n_eq:
            coeffs, rhs = A_eq[r], b_eq[r]
        else:
            coeffs, rhs = A_ub[r - n_eq], b_ub[r - n_eq]
        row = [conv(v) for v in coeffs] + [zero] * (n_slack + n_art) + [conv(rhs)]
        if r >= n_eq:
            row[nv + r - n_eq] = one
        sgn = -1 if row[-1] < 0 else 1
        if sgn < 0:
            row = [-v for v in row]
        row[art0 + r] = one
        T.append(row)
        sign.append(sgn)
    basis = [art0 + r for r in range(rows)]
    pivots = 0

    def pivot(pr, pc):
        nonlocal pivots
        pivots += 1
        prow = T[pr]
        pv = prow[pc]
        if pv != one:
            prow[:] = [v / pv for v in prow]
        for r in range(rows):
            if r == pr:
                continue
            f = T[r][pc]
            if f != zero:
                row = T[r]
                row[:] = [a - f * b for a, b in zip(row, prow)]
        basis[pr] = pc

    def run(cost, allowed):
        # cost: list over all columns; Bland's rule on reduced costs
        while True:
            if pivots > max_pivots:
                raise RuntimeError("simplex pivot budget exhausted")
            enter = None
            for j in range(ncol):
                if not allowed[j] or j in basis:
                    continue
                red = cost[j] - sum(cost[basis[r]] * T[r][j] for r in range(rows))
                if red > eps:
                    enter = j
                    break
            if enter is None:
                return OPTIMAL
            leave = None
            best = None
            for r in range(rows):
                a = T[r][enter]
                if a > eps:
                    ratio = T[r][-1] / a
                    if (best is None or ratio < best - eps
                            or (abs(ratio - best) <= eps and basis[r] < basis[leave])):
                        best, leave = ratio, r
            if leave is None:
                return UNBOUNDED
            pivot(leave, enter)

    # phase 1
    cost1 = [zero] * (art0) + [-one] * n_art
    run(cost1, [True] * ncol)
    infeas = sum(T[r][-1] for r in range(rows) if basis[r] >= art0)
    if infeas > eps * max(1, rows):
        return LPResult(INFEASIBLE, pivots=pivots)
    # drive zero-level artificials out of the basis where possible
    for r in range(rows):
        if basis[r] >= art0:
            for j in range(art0):
                if abs(T[r][j]) > eps and j not in basis:
                    pivot(r, j)
                    break

    cost2 = [conv(v) for v in c] + [zero] * (n_slack + n_art)
    allowed = [True] * art0 + [False] * n_art
    status = run(cost2, allowed)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED, pivots=pivots)

    x = [zero] * nv
    for r in range(rows):
        if basis[r] < nv:
            x[basis[r]] = T[r][-1]
    if not exact:
        x = [max(v, 0.0) for v in x]
    obj = sum(ci * xi for ci, xi in zip(cost2, x))
    # y = c_B B^{-1}; the artificial columns hold B^{-1}
    y = []
    for r0 in range(rows):
        col = art0 + r0
        y.append(sign[r0] * sum(cost2[basis[r]] * T[r][col] for r in range(rows)))
    return LPResult(OPTIMAL, x=x, objective=obj, y_eq=y[:n_eq], y_ub=y[n_eq:], pivots=pivots)


def linprog_min(c, *args, **kwargs):
    res = linprog_max([-v for v in c], *args, **kwargs)
    if res.ok:
        res.objective = -res.objective
        res.y_eq = [-v for v in res.y_eq]
        res.y_ub = [-v for v in res.y_ub]
    return res
