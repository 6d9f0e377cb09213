"""Linear Fisher markets, reported-utility profiles and their equilibria.

Internally every market is normalized: utility rows sum to one and the
money vector sums to one.  Allocations ``x_ij`` (share of good ``j`` given
to buyer ``i``) do not depend on that scaling, so payoffs in original
units are simply ``u_raw @ x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np
from numba import njit

from .errors import (ConvergenceFailure, InvalidMarket, InvalidProfile, NonpositiveMoney,
                     PriceCollapse, ZeroUtilityRow)
from .tolerances import DEFAULT, Tolerances


def _exact(v):
    return isinstance(v, (int, Fraction)) and not isinstance(v, bool)


def _normalize_row(row):
    total = sum(row)
    return tuple(v / total for v in row), total


def _as_number(v):
    if isinstance(v, (Fraction, float)):
        return v
    if isinstance(v, int) and not isinstance(v, bool):
        return Fraction(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.integer):
        return Fraction(int(v))
    if isinstance(v, str):
        return Fraction(v.strip())
    raise TypeError(f"not a number: {v!r}")


@dataclass(frozen=True)
class Market:
    """A normalized linear Fisher market.

    ``utilities[i][j]`` and ``money[i]`` are normalized; ``utility_scale``
    and ``money_scale`` recover the original units.  Entries stay
    ``Fraction`` when the input was exact.
    """

    utilities: tuple
    money: tuple
    utility_scale: tuple
    money_scale: object

    @property
    def num_buyers(self):
        return len(self.utilities)

    @property
    def num_goods(self):
        return len(self.utilities[0])

    @property
    def exact(self):
        return all(_exact(v) for row in self.utilities for v in row) and all(
            _exact(v) for v in self.money)

    @cached_property
    def u(self):
        return np.array(self.utilities, dtype=float)

    @cached_property
    def m(self):
        return np.array(self.money, dtype=float)

    @cached_property
    def u_raw(self):
        return self.u * np.array(self.utility_scale, dtype=float)[:, None]

    @property
    def raw_utilities(self):
        return tuple(tuple(v * s for v in row) for row, s in zip(self.utilities, self.utility_scale))

    @property
    def raw_money(self):
        return tuple(v * self.money_scale for v in self.money)

    def payoffs(self, allocation):
        """Payoffs in original utility units for an ``m x n`` allocation."""
        return (self.u_raw * np.asarray(allocation, dtype=float)).sum(axis=1)

    def truthful(self):
        return StrategyProfile(self.utilities)


def normalize_market(utilities, money):
    """Build a normalized :class:`Market` from raw utilities and budgets."""
    rows = [tuple(_as_number(v) for v in row) for row in utilities]
    money = [_as_number(v) for v in money]
    if len(rows) < 1 or len(rows[0]) < 1:
        raise InvalidMarket("need at least one buyer and one good")
    n = len(rows[0])
    if any(len(r) != n for r in rows):
        raise InvalidMarket("utility rows have different lengths")
    if len(money) != len(rows):
        raise InvalidMarket("money vector length differs from number of buyers")
    for i, row in enumerate(rows):
        if any(v < 0 for v in row):
            raise InvalidMarket(f"buyer {i} has a negative utility")
        if not any(v > 0 for v in row):
            raise ZeroUtilityRow(f"buyer {i} has no positive utility")
    for i, v in enumerate(money):
        if not v > 0:
            raise NonpositiveMoney(f"buyer {i} has money {v}")
    norm, scale = zip(*(_normalize_row(r) for r in rows))
    total = sum(money)
    return Market(tuple(norm), tuple(v / total for v in money), tuple(scale), total)


@dataclass(frozen=True)
class StrategyProfile:
    """Reported utility rows, one per buyer, stored normalized."""

    rows: tuple

    def __init__(self, rows):
        clean = []
        for i, row in enumerate(rows):
            row = tuple(_as_number(v) for v in row)
            if any(v < 0 for v in row):
                raise InvalidProfile(f"strategy of buyer {i} has a negative entry")
            if not sum(row) > 0:
                raise InvalidProfile(f"strategy of buyer {i} sums to zero")
            clean.append(_normalize_row(row)[0])
        if len({len(r) for r in clean}) != 1:
            raise InvalidProfile("strategy rows have different lengths")
        object.__setattr__(self, "rows", tuple(clean))

    @cached_property
    def s(self):
        return np.array(self.rows, dtype=float)

    def is_symmetric(self):
        first = self.rows[0]
        if all(_exact(v) for r in self.rows for v in r):
            return all(r == first for r in self.rows)
        return bool(np.allclose(self.s, self.s[0], rtol=0, atol=1e-12))

    def with_row(self, i, row):
        rows = list(self.rows)
        rows[i] = row
        return StrategyProfile(rows)

    @classmethod
    def symmetric(cls, row, num_buyers):
        return cls([row] * num_buyers)


@dataclass(frozen=True)
class EquilibriumOutcome:
    """Equilibrium prices (normalized, sum to one) and the tight-edge graph."""

    prices: np.ndarray
    tight: np.ndarray            # bool, buyers x goods
    residual: float
    iterations: int = 0
    money_scale: object = 1

    @property
    def prices_original(self):
        return self.prices * float(self.money_scale)

    @property
    def edges(self):
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.tight))]

    def to_json(self):
        return {
            "prices": [float(p) for p in self.prices_original],
            "edges": [list(e) for e in self.edges],
            "residual": float(self.residual),
            "iterations": int(self.iterations),
        }


def solution_graph(profile, prices, tol: Tolerances = DEFAULT):
    """Tight edges: ``s_ij / p_j >= (1 - tau) * max_k s_ik / p_k`` (inclusive)."""
    s = profile.s if isinstance(profile, StrategyProfile) else np.asarray(profile, float)
    p = np.asarray(prices, dtype=float)
    bpb = s / p
    best = bpb.max(axis=1, keepdims=True)
    return (bpb >= (1.0 - tol.tight) * best) & (s > 0)


def _adjacency(tight):
    m, n = len(tight), len(tight[0])
    adj_b = [[j for j in range(n) if tight[i][j]] for i in range(m)]
    adj_g = [[i for i in range(m) if tight[i][j]] for j in range(n)]
    return adj_b, adj_g


def components(tight):
    """Connected components of a bipartite buyer/good graph as ``(buyers, goods)`` lists."""
    adj_b, adj_g = _adjacency(np.asarray(tight).tolist())
    return _components(adj_b, adj_g)


def _components(adj_b, adj_g):
    seen_b = [False] * len(adj_b)
    seen_g = [False] * len(adj_g)
    comps = []
    for start in range(len(adj_b)):
        if seen_b[start]:
            continue
        buyers, goods = [], []
        stack = [(0, start)]
        seen_b[start] = True
        while stack:
            kind, v = stack.pop()
            if kind == 0:
                buyers.append(v)
                for j in adj_b[v]:
                    if not seen_g[j]:
                        seen_g[j] = True
                        stack.append((1, j))
            else:
                goods.append(v)
                for i in adj_g[v]:
                    if not seen_b[i]:
                        seen_b[i] = True
                        stack.append((0, i))
        comps.append((buyers, goods))
    for j in range(len(adj_g)):
        if not seen_g[j]:
            comps.append(([], [j]))
    return comps


def _hall(adj_g, prices, money):
    m, n = len(money), len(prices)
    msum = [0.0] * (1 << m)
    for mask in range(1, 1 << m):
        low = (mask & -mask).bit_length() - 1
        msum[mask] = msum[mask & (mask - 1)] + money[low]
    nbr = [sum(1 << i for i in adj_g[j]) for j in range(n)]
    psum = [0.0] * (1 << n)
    nb = [0] * (1 << n)
    worst = -np.inf
    for mask in range(1, 1 << n):
        low = (mask & -mask).bit_length() - 1
        rest = mask & (mask - 1)
        psum[mask] = psum[rest] + prices[low]
        nb[mask] = nb[rest] | nbr[low]
        gap = psum[mask] - msum[nb[mask]]
        if gap > worst:
            worst = gap
    return worst


def hall_violation(tight, prices, money):
    """Largest ``p(T) - m(N(T))`` over good subsets ``T``.

    A money flow on the tight edges with row sums ``money`` and column sums
    ``prices`` exists iff this is <= 0 and the totals agree.
    """
    tight = np.asarray(tight).tolist()
    if len(tight[0]) > 16:
        raise ValueError("subset enumeration only for n <= 16")
    _, adj_g = _adjacency(tight)
    return _hall(adj_g, list(map(float, prices)), list(map(float, money)))


def _prices_from_support(s, money, adj_b, adj_g):
    """Prices implied by a candidate equilibrium support, or None.

    Inside each connected component of the support the ratios
    ``p_j / p_k = s_ij / s_ik`` are forced along a spanning tree, and the
    component's total price equals its buyers' money.
    """
    n = len(adj_g)
    p = [0.0] * n
    for buyers, goods in _components(adj_b, adj_g):
        if not goods or not buyers:
            return None
        rel = {}
        beta = {buyers[0]: 1.0}
        queue = [(0, buyers[0])]
        for kind, v in queue:
            if kind == 0:
                for j in adj_b[v]:
                    if j not in rel:
                        rel[j] = s[v][j] / beta[v]
                        queue.append((1, j))
            else:
                for i in adj_g[v]:
                    if i not in beta:
                        beta[i] = s[i][v] / rel[v]
                        queue.append((0, i))
        total = sum(rel.values())
        budget = sum(money[i] for i in buyers)
        for j, r in rel.items():
            p[j] = r * budget / total
    return p


def _verify_prices(s, money, p):
    """Residual of candidate prices: budget balance plus Hall slack on exact ties."""
    if min(p) <= 0:
        return np.inf
    m, n = len(s), len(p)
    adj_g = [[] for _ in range(n)]
    for i in range(m):
        row = s[i]
        bpb = [row[j] / p[j] for j in range(n)]
        best = max(bpb)
        cut = (1.0 - 1e-11) * best
        for j in range(n):
            if row[j] > 0 and bpb[j] >= cut:
                adj_g[j].append(i)
    if n <= 16:
        hall = _hall(adj_g, p, money)
    else:
        from .allocation import flow_feasibility_gap
        tight = np.zeros((m, n), dtype=bool)
        for j in range(n):
            tight[adj_g[j], j] = True
        hall = flow_feasibility_gap(tight, np.array(p), np.array(money))
    return max(abs(sum(p) - sum(money)), hall, 0.0)


@njit(cache=True)
def _proportional_response(s, money, bids, steps):
    """Run ``steps`` proportional-response updates in place."""
    m, n = s.shape
    p = np.zeros(n)
    for _ in range(steps):
        for j in range(n):
            p[j] = 0.0
        for i in range(m):
            for j in range(n):
                p[j] += bids[i, j]
        for i in range(m):
            tot = 0.0
            for j in range(n):
                g = s[i, j] * bids[i, j] / p[j]
                bids[i, j] = g
                tot += g
            for j in range(n):
                bids[i, j] = money[i] * bids[i, j] / tot
    return bids


def solve_equilibrium(market: Market, profile: StrategyProfile, tol: Tolerances = DEFAULT,
                      start=None):
    """Equilibrium prices and tight graph of the market ``(profile, money)``.

    Proportional-response iterations on money bids drive the prices
    toward equilibrium; periodically the current bid support is used to
    compute the exact prices it implies, which are accepted once the
    optimal-goods and market-clearing conditions hold within ``tol.eq``.
    """
    s = profile.s
    money = market.m
    mb, n = s.shape
    if mb != market.num_buyers or n != market.num_goods:
        raise InvalidProfile("profile shape does not match market")
    dead = [j for j in range(n) if not np.any(s[:, j] > 0)]
    if dead:
        raise PriceCollapse(dead)
    s_list = s.tolist()
    m_list = money.tolist()
    positive = s > 0

    bids = money[:, None] * s if start is None else np.array(start, dtype=float)
    it = 0
    step = 8
    resid = np.inf
    tried = set()
    while True:
        p = bids.sum(axis=0)
        bpb = s / p
        best = bpb.max(axis=1, keepdims=True)
        candidates = (bpb >= (1.0 - 1e-6) * best, bids > 1e-3 * money[:, None],
                      bids > 1e-9 * money[:, None])
        for support in candidates:
            support &= positive
            key = support.tobytes()
            if key in tried:
                continue
            tried.add(key)
            adj_b, adj_g = _adjacency(support.tolist())
            cand = _prices_from_support(s_list, m_list, adj_b, adj_g)
            if cand is None:
                continue
            r = _verify_prices(s_list, m_list, cand)
            resid = min(resid, r)
            if r <= tol.eq:
                cand = np.array(cand)
                if np.any(cand < tol.price):
                    raise PriceCollapse([int(j) for j in np.nonzero(cand < tol.price)[0]])
                return EquilibriumOutcome(cand, solution_graph(profile, cand, tol), r, it,
                                          market.money_scale)
        if it >= tol.max_iter:
            break
        step = min(step, tol.max_iter - it)
        bids = _proportional_response(s, money, bids, step)
        it += step
        step *= 2
    raise ConvergenceFailure(it, resid)


def symmetric_prices(market: Market, row):
    """Closed form for symmetric profiles: prices equal the common row."""
    row = np.asarray(row, dtype=float)
    return row / row.sum() * market.m.sum()
