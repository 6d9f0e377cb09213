"""Two-buyer market games.

With two buyers every Nash profile is symmetric, so a profile is just a
price vector ``alpha`` (prices equal strategies once money sums to one).
Goods are ordered so that ``u1[j] / u2[j]`` is nonincreasing; buyer 1
then buys a prefix of the goods and buyer 2 a suffix, sharing at most one
good.  Everything below works on that ordering and keeps ``Fraction``
arithmetic whenever the market was given exactly.

All internal quantities are normalized (utility rows and money sum to
one); public results are reported in original units and original good
indices.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key

import numpy as np

from . import lp
from .allocation import MoneyFlowAllocation
from .errors import BothUtilitiesZero, PointOffCurve, PriceCollapse, RatioIntervalEmpty
from .market import Market, StrategyProfile
from .tolerances import DEFAULT, Tolerances

TREE = "tree"
FOREST = "forest"


@dataclass(frozen=True)
class OrderedTwoBuyerMarket:
    base: Market
    permutation: tuple      # ordered position -> original good index
    ratio: tuple            # u1/u2 in order; math.inf where u2 is zero
    dropped: tuple = ()     # original indices of goods nobody values

    @property
    def n(self):
        return len(self.permutation)

    @property
    def exact(self):
        return self.base.exact

    @property
    def u1(self):
        return tuple(self.base.utilities[0][j] for j in self.permutation)

    @property
    def u2(self):
        return tuple(self.base.utilities[1][j] for j in self.permutation)

    @property
    def m1(self):
        return self.base.money[0]

    @property
    def m2(self):
        return self.base.money[1]

    @property
    def scales(self):
        return self.base.utility_scale

    def ordered(self, vec):
        return tuple(vec[j] for j in self.permutation)

    def original(self, vec, fill=0):
        out = [fill] * self.base.num_goods
        for pos, j in enumerate(self.permutation):
            out[j] = vec[pos]
        return out

    def to_original_units(self, point):
        return tuple(v * s for v, s in zip(point, self.scales))

    def to_normalized(self, point):
        return tuple(_num(v, self.exact) / s for v, s in zip(point, self.scales))

    def alpha_of(self, profile: StrategyProfile):
        return self.ordered(profile.rows[0])


def _num(v, exact):
    if exact and isinstance(v, (int, Fraction)):
        return Fraction(v)
    if exact and isinstance(v, str):
        return Fraction(v)
    return float(v) if not exact else Fraction(v)


def order_goods(market: Market) -> OrderedTwoBuyerMarket:
    """Sort goods by ``u1/u2`` descending (stable); drop goods worth nothing to both."""
    if market.num_buyers != 2:
        raise ValueError("two-buyer analysis needs exactly two buyers")
    u1, u2 = market.utilities
    keep, dropped = [], []
    for j in range(market.num_goods):
        if u1[j] == 0 and u2[j] == 0:
            dropped.append(j)
        else:
            keep.append(j)
    if dropped:
        warnings.warn(str(BothUtilitiesZero(f"goods {dropped} are worth nothing to both buyers; dropped")),
                      RuntimeWarning, stacklevel=2)

    def cmp(a, b):
        # a before b iff u1a/u2a > u1b/u2b, by cross multiplication
        lhs, rhs = u1[a] * u2[b], u1[b] * u2[a]
        return -1 if lhs > rhs else (1 if lhs < rhs else 0)

    perm = tuple(sorted(keep, key=cmp_to_key(cmp)))
    ratio = tuple(math.inf if u2[j] == 0 else u1[j] / u2[j] for j in perm)
    return OrderedTwoBuyerMarket(market, perm, ratio, tuple(dropped))


@dataclass(frozen=True)
class NiceAllocation:
    shares: tuple           # buyer 1's fraction of each good, original indices
    prices: tuple           # normalized, original indices
    shared_good: int | None  # original index of the one split good, if any
    payoffs: tuple          # original units
    payoffs_normalized: tuple

    def money_flow(self):
        p = np.array(self.prices, dtype=float)
        x1 = np.array(self.shares, dtype=float)
        return MoneyFlowAllocation(np.vstack([x1 * p, (1 - x1) * p]), p)


def _nice_split(om: OrderedTwoBuyerMarket, alpha):
    """Buyer 1's share of each ordered good when buying a prefix worth ``m1``.

    A zero-priced good goes to buyer 1 while that budget lasts and to buyer
    2 afterwards; this only arises at the ends of the ``t`` family and
    matches its limit.
    """
    zero = Fraction(0) if om.exact else 0.0
    one = zero + 1
    left = om.m1
    shares = []
    for a in alpha:
        if a == 0:
            shares.append(one if left > 0 else zero)
        elif left >= a:
            shares.append(one)
            left -= a
        elif left > 0:
            shares.append(left / a)
            left = zero
        else:
            shares.append(zero)
    return shares


def nice_allocation(om: OrderedTwoBuyerMarket, profile: StrategyProfile) -> NiceAllocation:
    """The unique nice allocation of a symmetric profile."""
    if not profile.is_symmetric():
        raise ValueError("nice allocations are defined for symmetric profiles")
    alpha = om.alpha_of(profile)
    for j, a in zip(om.permutation, alpha):
        if a == 0 and om.base.utilities[0][j] > 0 and om.base.utilities[1][j] > 0:
            raise PriceCollapse([j])
    return _nice_from_alpha(om, alpha)


def _nice_from_alpha(om, alpha):
    shares = _nice_split(om, alpha)
    u1, u2 = om.u1, om.u2
    w1 = sum(a * x for a, x in zip(u1, shares))
    w2 = sum(b * (1 - x) for b, x in zip(u2, shares))
    shared = [om.permutation[k] for k, x in enumerate(shares) if 0 < x < 1]
    full_shares = om.original(shares)
    prices = om.original(list(alpha))
    return NiceAllocation(tuple(full_shares), tuple(prices), shared[0] if shared else None,
                          om.to_original_units((w1, w2)), (w1, w2))


@dataclass(frozen=True)
class NespPolyhedron:
    """``B_k`` (kind tree) or ``B'_k`` (kind forest) over ordered price variables.

    Each constraint is ``(coeffs, sense, rhs)`` with sense one of
    ``"<"``, ``"<="`` or ``"="``.
    """

    kind: str
    k: int                  # 1-based as in the ordering
    constraints: tuple

    @property
    def label(self):
        return f"B{self.k}" if self.kind == TREE else f"B'{self.k}"

    def slack(self, alpha):
        """Per-constraint value ``rhs - coeffs @ alpha`` with its sense."""
        return [(rhs - sum(c * a for c, a in zip(coeffs, alpha)), sense)
                for coeffs, sense, rhs in self.constraints]

    def contains(self, alpha, eps=0):
        for s, sense in self.slack(alpha):
            if sense == "=" and abs(s) > eps:
                return False
            if sense == "<=" and s < -eps:
                return False
            if sense == "<" and not s > eps:
                return False
        return True

    def lp_rows(self):
        """Closure of the polyhedron as ``(A_eq, b_eq, A_ub, b_ub)``."""
        A_eq, b_eq, A_ub, b_ub = [], [], [], []
        for coeffs, sense, rhs in self.constraints:
            if sense == "=":
                A_eq.append(list(coeffs))
                b_eq.append(rhs)
            else:
                A_ub.append(list(coeffs))
                b_ub.append(rhs)
        return A_eq, b_eq, A_ub, b_ub


def _unit(n, idx, zero, one):
    return tuple(one if t in idx else zero for t in range(n))


def build_polyhedra(om: OrderedTwoBuyerMarket):
    """All sets ``B_1..B_n`` then ``B'_1..B'_{n-1}``."""
    n = om.n
    zero = Fraction(0) if om.exact else 0.0
    one = zero + 1
    u1, u2, m1, m2 = om.u1, om.u2, om.m1, om.m2

    def ratio_rows(k, j_from):
        rows = []
        for i in range(k):
            for j in range(j_from - 1, n):
                c = [zero] * n
                c[i] += u1[j]
                c[j] -= u1[i]
                rows.append((tuple(c), "<=", zero))
                c = [zero] * n
                c[j] += u2[i]
                c[i] -= u2[j]
                rows.append((tuple(c), "<=", zero))
        return rows

    nonneg = [(_unit(n, {i}, zero, -one), "<=", zero) for i in range(n)]
    out = []
    for k in range(1, n + 1):
        rows = [
            (_unit(n, set(range(k - 1)), zero, one), "<", m1),
            (_unit(n, set(range(k, n)), zero, one), "<", m2),
            (_unit(n, set(range(n)), zero, one), "=", m1 + m2),
        ]
        out.append(NespPolyhedron(TREE, k, tuple(rows + ratio_rows(k, k) + nonneg)))
    for k in range(1, n):
        rows = [
            (_unit(n, set(range(k)), zero, one), "=", m1),
            (_unit(n, set(range(k, n)), zero, one), "=", m2),
        ]
        out.append(NespPolyhedron(FOREST, k, tuple(rows + ratio_rows(k, k + 1) + nonneg)))
    return out


def _eps(om, tol, alpha=()):
    exact = om.exact and all(isinstance(a, (int, Fraction)) for a in alpha)
    return 0 if exact else tol.poly


def containing_polyhedra(om: OrderedTwoBuyerMarket, alpha, tol: Tolerances = DEFAULT):
    """Labels of every ``B_k`` / ``B'_k`` that contains the ordered price vector ``alpha``."""
    eps = _eps(om, tol, alpha)
    return [P.label for P in build_polyhedra(om) if P.contains(alpha, eps)]


def is_nesp(om: OrderedTwoBuyerMarket, profile: StrategyProfile, tol: Tolerances = DEFAULT):
    """Exact Nash test for two buyers: symmetric and inside one of the polyhedra."""
    if not profile.is_symmetric():
        return False
    row = profile.rows[0]
    eps = _eps(om, tol, row)
    if any(row[j] > eps for j in om.dropped):
        return False
    return bool(containing_polyhedra(om, om.alpha_of(profile), tol))


def t_alpha(om: OrderedTwoBuyerMarket, alpha) -> StrategyProfile:
    """Symmetric profile with row ``u1 + alpha (u2 - u1)`` (normalized utilities)."""
    alpha = _num(alpha, om.exact)
    u1, u2 = om.base.utilities
    row = [a + alpha * (b - a) for a, b in zip(u1, u2)]
    return StrategyProfile.symmetric(row, 2)


def t_alpha_payoffs(om: OrderedTwoBuyerMarket, alpha):
    """Payoffs (original units) of the nice allocation of ``t(alpha)``."""
    alpha = _num(alpha, om.exact)
    prices = [a + alpha * (b - a) for a, b in zip(om.u1, om.u2)]
    return _nice_from_alpha(om, prices)


@dataclass(frozen=True)
class PayoffCurve:
    """Piecewise linear frontier ``H`` with the Nash window ``F`` marked.

    ``breakpoints`` are normalized payoff pairs after merging goods with
    equal ratio; segment ``s`` joins breakpoint ``s`` to ``s + 1`` and is
    traced by sharing the goods in ``segment_goods[s]``.
    """

    breakpoints: tuple
    segment_goods: tuple
    window: tuple           # normalized payoffs of t(0) and t(1)
    scales: tuple
    exact: bool

    def envelope(self, x):
        """Largest buyer-2 payoff on ``H`` at buyer-1 payoff ``x`` (normalized)."""
        best = None
        for (x0, y0), (x1, y1) in zip(self.breakpoints, self.breakpoints[1:]):
            if x0 <= x <= x1:
                y = y0 if x1 == x0 else y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                y = max(y, y1) if x1 == x0 else y
                best = y if best is None else max(best, y)
        return best

    def segment_of(self, point, eps=0):
        """Index of a segment containing the normalized ``point``, or None."""
        x, y = point
        for s, ((x0, y0), (x1, y1)) in enumerate(zip(self.breakpoints, self.breakpoints[1:])):
            if not (x0 - eps <= x <= x1 + eps):
                continue
            cross = (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0)
            if abs(cross) <= eps * (abs(x1 - x0) + abs(y1 - y0) + 1):
                if min(y0, y1) - eps <= y <= max(y0, y1) + eps:
                    return s
        return None

    def on_f(self, point, eps=0):
        (ax, ay), (bx, by) = self.window
        x, y = point
        return self.segment_of(point, eps) is not None and ax - eps <= x <= bx + eps and by - eps <= y <= ay + eps

    def f_polyline(self):
        """Breakpoints of ``F`` (normalized), from the t(0) end to the t(1) end."""
        (ax, ay), (bx, by) = self.window
        pts = [(ax, ay)]
        pts += [p for p in self.breakpoints if ax < p[0] < bx and by < p[1] < ay]
        pts.append((bx, by))
        return pts

    def original(self, point):
        return tuple(v * s for v, s in zip(point, self.scales))

    @property
    def endpoints(self):
        """Payoffs of t(0) and t(1) in original units."""
        return self.original(self.window[0]), self.original(self.window[1])

    def max_welfare(self):
        """Largest ``w1 + w2`` over ``F`` in original units, with the point attaining it."""
        pts = [self.original(p) for p in self.f_polyline()]
        best = max(pts, key=lambda p: p[0] + p[1])
        return best[0] + best[1], best

    def rows(self, sweep=None, om=None):
        out = []
        for k, p in enumerate(self.breakpoints):
            q = self.original(p)
            out.append((f"f{k}", q[0], q[1], max(k - 1, 0), ""))
        for alpha in sweep or ():
            nice = t_alpha_payoffs(om, alpha)
            seg = self.segment_of(nice.payoffs_normalized, 0 if self.exact else 1e-9)
            out.append((f"alpha={alpha}", nice.payoffs[0], nice.payoffs[1],
                        seg, "" if nice.shared_good is None else nice.shared_good))
        return out

    def to_csv(self, sweep=None, om=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["alpha_or_breakpoint", "payoff1", "payoff2", "segment_id", "sharing_good_original_index"])
        for label, a, b, seg, good in self.rows(sweep, om):
            w.writerow([label, _fmt(a), _fmt(b), seg, good])
        return buf.getvalue()

    def to_json(self, sweep=None, om=None):
        return {
            "breakpoints": [[_fmt(v) for v in self.original(p)] for p in self.breakpoints],
            "segments": [{"id": s, "sharing_goods": list(g)} for s, g in enumerate(self.segment_goods)],
            "nesp_window": [[_fmt(v) for v in p] for p in self.endpoints],
            "max_welfare": _fmt(self.max_welfare()[0]),
            "rows": [{"alpha_or_breakpoint": r[0], "payoff1": _fmt(r[1]), "payoff2": _fmt(r[2]),
                      "segment_id": r[3], "sharing_good_original_index": r[4]}
                     for r in self.rows(sweep, om)],
        }


def _fmt(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else str(v.numerator)
    return float(v)


def payoff_curve(om: OrderedTwoBuyerMarket) -> PayoffCurve:
    u1, u2 = om.u1, om.u2
    n = om.n
    zero = Fraction(0) if om.exact else 0.0
    pts = [(zero, sum(u2, zero))]
    goods = []
    x, y = pts[0]
    for k in range(n):
        x, y = x + u1[k], y - u2[k]
        same_slope = goods and u1[k] * u2[k - 1] == u1[k - 1] * u2[k]
        if same_slope:
            pts[-1] = (x, y)
            goods[-1] = goods[-1] + (om.permutation[k],)
        else:
            pts.append((x, y))
            goods.append((om.permutation[k],))
    start = t_alpha_payoffs(om, 0).payoffs_normalized
    end = t_alpha_payoffs(om, 1).payoffs_normalized
    return PayoffCurve(tuple(pts), tuple(goods), (start, end), tuple(om.scales), om.exact)


def max_payoff_by_imitation(om: OrderedTwoBuyerMarket, buyer: int, tol: Tolerances = DEFAULT):
    """Buyer ``buyer``'s best Nash payoff, reached by copying the other buyer's utilities."""
    alpha = 1 if buyer == 0 else 0
    profile = t_alpha(om, alpha)
    value = t_alpha_payoffs(om, alpha).payoffs[buyer]
    curve = payoff_curve(om)
    best = max(curve.original(p)[buyer] for p in curve.f_polyline())
    if abs(best - value) > tol.pay * om.scales[buyer]:
        raise AssertionError(f"imitation payoff {value} is not the best on the curve ({best})")
    return value, profile


@dataclass(frozen=True)
class PriceInterval:
    good: int               # original index
    low: object             # original money units
    high: object

    def contains(self, v):
        return self.low <= v <= self.high


def price_range_at_payoff(om: OrderedTwoBuyerMarket, point, tol: Tolerances = DEFAULT):
    """Per-good price intervals over all Nash profiles paying ``point`` (original units).

    Intervals are closures: the strict constraints of the tree sets are
    relaxed, so an endpoint may be a limit rather than an attained price.
    """
    target = om.to_normalized(point)
    curve = payoff_curve(om)
    eps = 0 if om.exact else tol.poly
    if not curve.on_f(target, eps):
        raise PointOffCurve(f"{tuple(point)} is not a Nash payoff pair")
    t1, t2 = target
    u1, u2, m1 = om.u1, om.u2, om.m1
    n = om.n
    zero = Fraction(0) if om.exact else 0.0
    lows = [None] * n
    highs = [None] * n
    for P in build_polyhedra(om):
        A_eq, b_eq, A_ub, b_ub = P.lp_rows()
        k = P.k
        if P.kind == FOREST:
            w1 = sum(u1[:k], zero)
            w2 = sum(u2[k:], zero)
            if abs(w1 - t1) > eps or abs(w2 - t2) > eps:
                continue
        else:
            # payoff equalities times alpha_k, linear in alpha
            pre1 = sum(u1[:k - 1], zero)
            post2 = sum(u2[k:], zero)
            row1 = [zero] * n
            row1[k - 1] = t1 - pre1
            for i in range(k - 1):
                row1[i] += u1[k - 1]
            row2 = [zero] * n
            row2[k - 1] = t2 - post2 - u2[k - 1]
            for i in range(k - 1):
                row2[i] -= u2[k - 1]
            A_eq = A_eq + [row1, row2]
            b_eq = b_eq + [u1[k - 1] * m1, -u2[k - 1] * m1]
        for j in range(n):
            c = [zero] * n
            c[j] = zero + 1
            hi = lp.linprog_max(c, A_eq, b_eq, A_ub, b_ub, tol=tol.lp)
            if not hi.ok:
                break
            lo = lp.linprog_min(c, A_eq, b_eq, A_ub, b_ub, tol=tol.lp)
            lows[j] = lo.objective if lows[j] is None else min(lows[j], lo.objective)
            highs[j] = hi.objective if highs[j] is None else max(highs[j], hi.objective)
    if lows[0] is None:
        raise PointOffCurve(f"no Nash price vector pays {tuple(point)}")
    scale = om.base.money_scale
    out = {j: PriceInterval(j, zero, zero) for j in om.dropped}
    for pos, j in enumerate(om.permutation):
        out[j] = PriceInterval(j, lows[pos] * scale, highs[pos] * scale)
    return dict(sorted(out.items()))


@dataclass(frozen=True)
class NicifyResult:
    shares: tuple           # buyer 1's fraction of each good, original indices
    before: tuple           # payoffs in original units
    after: tuple
    exchanges: int


def nicify(om: OrderedTwoBuyerMarket, allocation, tol: Tolerances = DEFAULT) -> NicifyResult:
    """Trade goods between the buyers until the allocation is nice, hurting neither.

    ``allocation`` is a ``2 x n`` matrix of fractions of each good whose
    columns sum to one.
    """
    exact = om.exact and all(isinstance(v, (int, Fraction)) for row in allocation for v in row)
    conv = Fraction if exact else float
    eps = 0 if exact else tol.flow
    x1 = [conv(allocation[0][j]) for j in om.permutation]
    x2 = [conv(allocation[1][j]) for j in om.permutation]
    for a, b in zip(x1, x2):
        if a < -eps or b < -eps or abs(a + b - 1) > (eps or 0) + (0 if exact else 1e-9):
            raise ValueError("allocation columns must be nonnegative and sum to one")
    u1 = [conv(v) for v in om.u1]
    u2 = [conv(v) for v in om.u2]

    def pay():
        return (sum(a * b for a, b in zip(u1, x1)), sum(a * b for a, b in zip(u2, x2)))

    before = pay()
    exchanges = 0
    while True:
        i = next((t for t in range(om.n) if x2[t] > eps), None)
        j = next((t for t in reversed(range(om.n)) if x1[t] > eps), None)
        if i is None or j is None or i >= j:
            break
        lo = conv(0) if u2[i] == 0 else (math.inf if u2[j] == 0 else u2[i] / u2[j])
        hi = math.inf if u1[j] == 0 else u1[i] / u1[j]
        if lo > hi:
            raise RatioIntervalEmpty(f"goods {om.permutation[i]} and {om.permutation[j]} are out of order")
        if hi == math.inf:
            r = lo + 1 if lo != math.inf else conv(1)
        else:
            r = (lo + hi) / 2
        # buyer 1 gets z of good i and gives up w = r z of good j
        if x1[j] >= r * x2[i]:
            z = x2[i]
            w = r * z
            x2[i] = conv(0)
            x1[i] += z
            x1[j] -= w
            x2[j] += w
        else:
            w = x1[j]
            z = w / r
            x1[j] = conv(0)
            x2[j] += w
            x2[i] -= z
            x1[i] += z
        exchanges += 1
        if exchanges > 2 * om.n + 2:
            raise RuntimeError("exchange loop did not terminate")
    after = pay()
    shares = om.original(x1, fill=conv(0))
    return NicifyResult(tuple(shares), om.to_original_units(before), om.to_original_units(after), exchanges)


def correlated_dominance_check(om_or_curve, point, tol: Tolerances = DEFAULT):
    """True iff the payoff pair ``point`` (original units) lies on or below ``H``."""
    curve = om_or_curve if isinstance(om_or_curve, PayoffCurve) else payoff_curve(om_or_curve)
    x, y = (float(v) / float(s) for v, s in zip(point, curve.scales))
    top = float(curve.breakpoints[-1][0])
    eps = tol.pay
    if x > top + eps:
        return False
    env = curve.envelope(min(max(x, 0.0), top)) if x >= 0 else float(curve.breakpoints[0][1])
    if env is None:
        return False
    return y <= float(env) + eps
