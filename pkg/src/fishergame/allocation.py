"""Queries over the set of equilibrium allocations of a fixed outcome.

Once prices are known, the equilibrium allocations are exactly the money
flows supported on tight edges with row sums equal to budgets and column
sums equal to prices: a transportation polytope.  Everything here is a
small linear program (or a sequence of them) over that polytope.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import lp
from .errors import InfeasiblePolytope
from .market import EquilibriumOutcome, Market, components
from .tolerances import DEFAULT, Tolerances


@dataclass(frozen=True)
class MoneyFlowAllocation:
    """Money ``flow[i, j]`` spent by buyer ``i`` on good ``j`` (normalized units)."""

    flow: np.ndarray
    prices: np.ndarray

    @property
    def allocation(self):
        return self.flow / self.prices

    def payoffs(self, market: Market):
        return market.payoffs(self.allocation)

    def residual(self, money):
        return max(np.abs(self.flow.sum(axis=1) - money).max(),
                   np.abs(self.flow.sum(axis=0) - self.prices).max())

    def nonzero(self, tol: Tolerances = DEFAULT):
        return self.flow > tol.flow


@dataclass
class PayoffReport:
    per_buyer_best: np.ndarray          # w_i(S), original units
    selected: MoneyFlowAllocation
    selected_payoffs: np.ndarray        # P_i(S), original units
    conflict_free: bool
    zero_payoff_buyers: tuple = ()

    def to_json(self):
        return {
            "per_buyer_best": [float(v) for v in self.per_buyer_best],
            "selected_payoffs": [float(v) for v in self.selected_payoffs],
            "conflict_free": bool(self.conflict_free),
            "allocation": self.selected.allocation.tolist(),
            "zero_payoff_buyers": list(self.zero_payoff_buyers),
        }


class _Polytope:
    """Flow variables on tight edges plus the balance equations."""

    def __init__(self, market: Market, outcome: EquilibriumOutcome, tol: Tolerances):
        self.market = market
        self.prices = np.asarray(outcome.prices, dtype=float)
        self.edges = outcome.edges
        self.tol = tol
        m, n = market.num_buyers, market.num_goods
        self.shape = (m, n)
        E = len(self.edges)
        A = []
        b = []
        for i in range(m):
            A.append([1.0 if e[0] == i else 0.0 for e in self.edges])
            b.append(float(market.m[i]))
        # the last good's row is implied by the others
        for j in range(n - 1):
            A.append([1.0 if e[1] == j else 0.0 for e in self.edges])
            b.append(float(self.prices[j]))
        self.A_eq, self.b_eq = A, b
        # normalized utility per unit money on each edge, one row per buyer
        self.coef = np.zeros((m, E))
        for k, (i, j) in enumerate(self.edges):
            self.coef[i, k] = market.u[i, j] / self.prices[j]

    def solve(self, c, A_ub=(), b_ub=()):
        res = lp.linprog_max(list(c), self.A_eq, self.b_eq, [list(r) for r in A_ub], list(b_ub),
                             tol=self.tol.lp)
        if res.status == lp.INFEASIBLE:
            raise InfeasiblePolytope("no flow on the tight edges balances budgets and prices")
        if not res.ok:
            raise InfeasiblePolytope(f"LP status {res.status}")
        return res

    def to_allocation(self, x):
        f = np.zeros(self.shape)
        for k, (i, j) in enumerate(self.edges):
            f[i, j] = x[k]
        return MoneyFlowAllocation(f, self.prices)

    def vector(self, alloc: MoneyFlowAllocation):
        return np.array([alloc.flow[i, j] for i, j in self.edges])

    def normalized_payoffs(self, x):
        return self.coef @ np.asarray(x, dtype=float)


def _scale(market):
    return np.array(market.utility_scale, dtype=float)


def forest_flow(tight, prices, money):
    """Unique flow on a forest-shaped tight graph by peeling leaves, else None."""
    tight = np.asarray(tight, dtype=bool)
    m, n = tight.shape
    if int(tight.sum()) != m + n - len(components(tight)):
        return None
    adj = {("b", i): {("g", int(j)) for j in np.nonzero(tight[i])[0]} for i in range(m)}
    adj.update({("g", j): {("b", int(i)) for i in np.nonzero(tight[:, j])[0]} for j in range(n)})
    need = {("b", i): float(money[i]) for i in range(m)}
    need.update({("g", j): float(prices[j]) for j in range(n)})
    f = np.zeros((m, n))
    leaves = [v for v, nb in adj.items() if len(nb) == 1]
    while leaves:
        v = leaves.pop()
        if len(adj[v]) != 1:
            continue
        (w,) = adj[v]
        amount = need[v]
        i, j = (v[1], w[1]) if v[0] == "b" else (w[1], v[1])
        f[i, j] = amount
        need[w] -= amount
        adj[v].clear()
        adj[w].discard(v)
        if len(adj[w]) == 1:
            leaves.append(w)
    return f


def unique_allocation(market: Market, outcome: EquilibriumOutcome, tol: Tolerances = DEFAULT):
    """The equilibrium allocation when the tight graph is a forest, else None."""
    f = forest_flow(outcome.tight, outcome.prices, market.m)
    if f is None or f.min() < -tol.eq:
        return None
    return MoneyFlowAllocation(np.maximum(f, 0.0), np.asarray(outcome.prices, dtype=float))


def max_buyer_payoff(market: Market, outcome: EquilibriumOutcome, buyer: int,
                     tol: Tolerances = DEFAULT, with_certificate=False):
    """``w_i(S)``: buyer's best true payoff over all equilibrium allocations.

    Returned in original utility units; with ``with_certificate`` also the
    maximizing allocation and the LP result (primal and dual).
    """
    poly = _Polytope(market, outcome, tol)
    res = poly.solve(poly.coef[buyer])
    value = float(res.objective) * _scale(market)[buyer]
    if with_certificate:
        return value, poly.to_allocation(res.x), res
    return value


def min_buyer_payoff(market: Market, outcome: EquilibriumOutcome, buyer: int,
                     tol: Tolerances = DEFAULT):
    """Buyer's worst true payoff over all equilibrium allocations (original units)."""
    poly = _Polytope(market, outcome, tol)
    res = poly.solve(-poly.coef[buyer])
    return -float(res.objective) * _scale(market)[buyer]


def best_payoffs(market, outcome, tol: Tolerances = DEFAULT):
    """Vector of ``w_i(S)`` in normalized units together with maximizing flows."""
    poly = _Polytope(market, outcome, tol)
    w = np.zeros(market.num_buyers)
    xs = []
    for i in range(market.num_buyers):
        res = poly.solve(poly.coef[i])
        w[i] = res.objective
        xs.append(np.array(res.x, dtype=float))
    return w, xs, poly


def is_conflict_free(market: Market, outcome: EquilibriumOutcome, tol: Tolerances = DEFAULT):
    """Whether one allocation gives every buyer ``w_i(S)``; returns ``(flag, witness)``."""
    unique = unique_allocation(market, outcome, tol)
    if unique is not None:
        return True, unique
    w, _, poly = best_payoffs(market, outcome, tol)
    ok, x = _conflict_free_lp(poly, w, tol)
    return ok, (poly.to_allocation(x) if ok else None)


def _conflict_free_lp(poly, w, tol, objective=None):
    m = len(w)
    A_ub = [list(-poly.coef[i]) for i in range(m)]
    b_ub = [-(w[i] - tol.pay) for i in range(m)]
    if objective is None:
        # push every buyer to the top so the witness is not merely within slack
        objective = sum(poly.coef[i] / max(w[i], tol.pay) for i in range(m))
    c = objective
    res = lp.linprog_max(list(c), poly.A_eq, poly.b_eq, A_ub, b_ub, tol=tol.lp)
    if not res.ok:
        return False, None
    return True, np.array(res.x, dtype=float)


def conflict_free_edge_mass(market, outcome, buyer, goods, tol: Tolerances = DEFAULT):
    """Max money buyer can spend on ``goods`` across conflict-free allocations (None if conflicted)."""
    w, _, poly = best_payoffs(market, outcome, tol)
    c = [1.0 if (e[0] == buyer and e[1] in goods) else 0.0 for e in poly.edges]
    ok, x = _conflict_free_lp(poly, w, tol, objective=c)
    if not ok:
        return None
    return float(np.dot(c, x))


def maximize_edge_subject_to_best(market: Market, outcome: EquilibriumOutcome, a: int, b: int,
                                  tol: Tolerances = DEFAULT):
    """Among allocations giving buyer ``a`` its best payoff, one with the most money on ``(a, b)``."""
    if not outcome.tight[a, b]:
        raise ValueError(f"({a}, {b}) is not a tight edge")
    poly = _Polytope(market, outcome, tol)
    first = poly.solve(poly.coef[a])
    wa = float(first.objective)
    k = poly.edges.index((a, b))
    c = [0.0] * len(poly.edges)
    c[k] = 1.0
    # the payoff floor is relaxed by a hair so the second stage stays feasible in floats
    res = poly.solve(c, A_ub=[list(-poly.coef[a])], b_ub=[-(wa - 1e-12)])
    return poly.to_allocation(res.x)


def _line_search(U, D, gmax):
    """argmax over [0, gmax] of sum(log(U + g D)) for concave objective."""
    def deriv(g):
        den = U + g * D
        if np.any(den <= 0):
            return -np.inf
        return float(np.sum(D / den))

    if deriv(gmax) >= 0:
        return gmax
    lo, hi = 0.0, gmax
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if deriv(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo


def _frank_wolfe(poly, active_buyers, starts, tol, max_iter=5000):
    """Away-step Frank-Wolfe for max sum(log payoff) over the flow polytope."""
    C = poly.coef[active_buyers]
    verts = [np.asarray(v, dtype=float) for v in starts]
    weights = np.full(len(verts), 1.0 / len(verts))
    x = sum(w * v for w, v in zip(weights, verts))
    for _ in range(max_iter):
        U = C @ x
        grad = (C / U[:, None]).sum(axis=0)
        res = poly.solve(grad)
        s = np.array(res.x, dtype=float)
        gap_fw = float(grad @ (s - x))
        if gap_fw <= tol.pay:
            break
        vals = [float(grad @ v) for v in verts]
        ia = int(np.argmin(vals))
        gap_away = float(grad @ (x - verts[ia]))
        if gap_fw >= gap_away or len(verts) == 1:
            d = s - x
            g = _line_search(U, C @ d, 1.0)
            weights *= (1.0 - g)
            for k, v in enumerate(verts):
                if np.allclose(v, s, atol=1e-13):
                    weights[k] += g
                    break
            else:
                verts.append(s)
                weights = np.append(weights, g)
        else:
            wa = weights[ia]
            gmax = wa / (1.0 - wa)
            d = x - verts[ia]
            g = _line_search(U, C @ d, gmax)
            weights *= (1.0 + g)
            weights[ia] -= g
        keep = weights > 1e-15
        verts = [v for v, k in zip(verts, keep) if k]
        weights = weights[keep] / weights[keep].sum()
        x = sum(w * v for w, v in zip(weights, verts))
    return x


def select_payoff_allocation(market: Market, outcome: EquilibriumOutcome,
                             tol: Tolerances = DEFAULT):
    """The allocation maximizing the product of true payoffs over all equilibrium allocations."""
    return payoff_report(market, outcome, tol).selected


def payoff_report(market: Market, outcome: EquilibriumOutcome, tol: Tolerances = DEFAULT):
    """Best payoffs, conflict-freeness and the product-maximizing allocation."""
    scale = _scale(market)
    unique = unique_allocation(market, outcome, tol)
    if unique is not None:
        pay = unique.payoffs(market)
        return PayoffReport(pay.copy(), unique, pay, True)
    w, xs, poly = best_payoffs(market, outcome, tol)
    ok, x = _conflict_free_lp(poly, w, tol)
    if ok:
        alloc = poly.to_allocation(x)
        return PayoffReport(w * scale, alloc, alloc.payoffs(market), True)
    zero = tuple(i for i in range(len(w)) if w[i] <= tol.pay)
    if zero:
        warnings.warn(f"buyers {zero} get zero payoff in every equilibrium allocation; "
                      "their factors are dropped from the product", RuntimeWarning, stacklevel=2)
    active = [i for i in range(len(w)) if i not in zero]
    if not active:
        x = np.mean(xs, axis=0)
    else:
        x = _frank_wolfe(poly, active, [xs[i] for i in active], tol)
    alloc = poly.to_allocation(x)
    return PayoffReport(w * scale, alloc, alloc.payoffs(market), False, zero)


def flow_feasibility_gap(tight, prices, money, tol: Tolerances = DEFAULT):
    """Total price that cannot be covered by a flow on ``tight`` (zero when feasible)."""
    tight = np.asarray(tight, dtype=bool)
    m, n = tight.shape
    edges = list(zip(*np.nonzero(tight)))
    A_ub = []
    b_ub = []
    for i in range(m):
        A_ub.append([1.0 if e[0] == i else 0.0 for e in edges])
        b_ub.append(float(money[i]))
    for j in range(n):
        A_ub.append([1.0 if e[1] == j else 0.0 for e in edges])
        b_ub.append(float(prices[j]))
    res = lp.linprog_max([1.0] * len(edges), (), (), A_ub, b_ub, tol=tol.lp)
    return float(np.sum(prices) - res.objective)
