"""Unilateral deviations: cycle breaking, necessary conditions and a best-response search.

The cycle-breaking procedures work on a fixed outcome of the game.  A
buyer ``a`` sitting on a cycle of the solution graph can raise the
reported utility for one good ``b`` just enough that prices on one side of
the edge ``(a, b)`` fall and on the other side rise, which cuts every
cycle through that edge while costing that buyer at most ``gamma`` in payoff.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .allocation import (conflict_free_edge_mass, is_conflict_free,
                         maximize_edge_subject_to_best, payoff_report)
from .errors import (DegenerateAlphaCap, FisherGameError, IterationOverrun, InvariantViolation,
                     PriceCollapse, SearchBudgetExceeded)
from .market import Market, StrategyProfile, solve_equilibrium
from .tolerances import DEFAULT, Tolerances

NEW_TIGHT_EDGE = "NewTightEdge"
NONZERO_EDGE_ZERO = "NonzeroEdgeZero"
PAYOFF_FLOOR = "PayoffFloor"
NO_EVENT = "None"

NE_CERTIFIED = "NE_Certified"
NE_REFUTED_BY_CONDITIONS = "NE_RefutedByConditions"
NE_REFUTED_BY_DEVIATION = "NE_RefutedByDeviation"
INCONCLUSIVE = "Inconclusive"


def _neighbors(tight, node, excluded=None):
    kind, v = node
    if kind == "b":
        out = [("g", int(j)) for j in np.nonzero(tight[v])[0]]
    else:
        out = [("b", int(i)) for i in np.nonzero(tight[:, v])[0]]
    if excluded is not None:
        i, j = excluded
        out = [w for w in out if {node, w} != {("b", i), ("g", j)}]
    return out


def _flow_on(flow, u, w):
    (k1, a), (_, b) = u, w
    return flow[a, b] if k1 == "b" else flow[b, a]


def edge_on_cycle(tight, buyer, good):
    """True iff tight edge ``(buyer, good)`` lies on a cycle (is not a bridge)."""
    tight = np.asarray(tight, dtype=bool)
    if not tight[buyer, good]:
        return False
    target = ("g", good)
    seen = {("b", buyer)}
    queue = deque(seen)
    while queue:
        v = queue.popleft()
        for w in _neighbors(tight, v, excluded=(buyer, good)):
            if w == target:
                return True
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return False


def buyer_on_cycle(tight, buyer):
    return any(edge_on_cycle(tight, buyer, int(j)) for j in np.nonzero(tight[buyer])[0])


def _alternating_tree(tight, nonzero, start, excluded):
    """BFS over alternating paths; returns ``parent`` map (start maps to None).

    Odd-position edges (the first, third, ...) must carry flow.  Since the
    graph is bipartite, every node is met at a single parity.
    """
    parent = {start: None}
    seen_state = {(start, 1)}
    queue = deque([(start, 1)])
    while queue:
        v, pos = queue.popleft()
        for w in _neighbors(tight, v, excluded):
            if pos == 1 and not _flow_on(nonzero, v, w):
                continue
            state = (w, 1 - pos)
            if state in seen_state:
                continue
            seen_state.add(state)
            parent.setdefault(w, v)
            queue.append(state)
    return parent


def alternating_reach(tight, nonzero, start, excluded_edge=None):
    """Nodes reachable from ``start`` by alternating paths.

    ``start`` is ``("b", i)`` or ``("g", j)``; ``nonzero`` marks edges with
    positive allocation; ``excluded_edge`` is a ``(buyer, good)`` pair
    removed before the search.
    """
    tight = np.asarray(tight, dtype=bool)
    nonzero = np.asarray(nonzero, dtype=bool)
    return set(_alternating_tree(tight, nonzero, start, excluded_edge))


@dataclass
class PerturbationStep:
    buyer: int
    good: int
    reach_left: tuple           # J1, as ("b"|"g", index) nodes
    reach_right: tuple          # J2
    price_mass_left: float      # l
    price_mass_right: float     # r
    alpha_cap: float
    alpha_used: float
    cap_event: str
    event_hit: str = NO_EVENT
    payoff_before: float = 0.0
    payoff_after: float = 0.0

    def to_json(self):
        return {
            "buyer": self.buyer,
            "good": self.good,
            "reach_left": sorted([list(v) for v in self.reach_left]),
            "reach_right": sorted([list(v) for v in self.reach_right]),
            "price_mass_left": self.price_mass_left,
            "price_mass_right": self.price_mass_right,
            "alpha_cap": self.alpha_cap,
            "alpha_used": self.alpha_used,
            "cap_event": self.cap_event,
            "event_hit": self.event_hit,
            "payoff_before": self.payoff_before,
            "payoff_after": self.payoff_after,
        }


def _subtree_prices(parent, prices):
    children = {}
    for v, par in parent.items():
        if par is not None:
            children.setdefault(par, []).append(v)
    total = {}

    def visit(v):
        acc = prices[v[1]] if v[0] == "g" else 0.0
        for c in children.get(v, ()):
            acc += visit(c)
        total[v] = acc
        return acc

    root = next(v for v, p in parent.items() if p is None)
    visit(root)
    return total


def perturb(market: Market, profile: StrategyProfile, allocation, a: int, b: int, gamma: float,
            tol: Tolerances = DEFAULT, outcome=None, check=True):
    """Break every cycle through tight edge ``(a, b)`` by raising ``s_ab``.

    ``allocation`` must give buyer ``a`` its best payoff with the largest
    possible flow on ``(a, b)``.  ``gamma`` is in original utility units.
    Returns ``(new_profile, step)``; ``step`` is None when the edge lies on
    no cycle and the profile is returned unchanged.
    """
    if outcome is None:
        outcome = solve_equilibrium(market, profile, tol)
    tight = outcome.tight
    if not edge_on_cycle(tight, a, b):
        return profile, None
    p = np.asarray(outcome.prices, dtype=float)
    f = np.asarray(allocation.flow, dtype=float)
    nonzero = (f > tol.flow) & tight
    s = profile.s
    m, n = s.shape

    left = _alternating_tree(tight, nonzero, ("b", a), (a, b))
    right = _alternating_tree(tight, nonzero, ("g", b), (a, b))
    if set(left) & set(right):
        raise DegenerateAlphaCap("alternating reach sets overlap; flow on (a, b) is not maximal")
    l = sum(p[v[1]] for v in left if v[0] == "g")
    r = sum(p[v[1]] for v in right if v[0] == "g")
    kappa = l / r

    # price factor per node as (constant, slope) in alpha
    def factor(node):
        if node in left:
            return 1.0, -1.0
        if node in right:
            return 1.0, kappa
        return 1.0, 0.0

    # flow change per unit alpha along the alternating trees
    rate = np.zeros((m, n))
    sub = _subtree_prices(left, p)
    for v, par in left.items():
        if par is None:
            continue
        if v[0] == "g":
            rate[par[1], v[1]] = -sub[v]
        else:
            rate[v[1], par[1]] = sub[v]
    sub = _subtree_prices(right, p)
    for v, par in right.items():
        if par is None:
            continue
        if v[0] == "b":
            rate[v[1], par[1]] = -kappa * sub[v]
        else:
            rate[par[1], v[1]] = kappa * sub[v]
    rate[a, b] = l

    caps = {NO_EVENT: 1.0}
    # event 2: a non-zero edge drains to zero
    drain = [f[i, j] / -rate[i, j] for i, j in zip(*np.nonzero(rate < 0))]
    caps[NONZERO_EDGE_ZERO] = min(drain, default=math.inf)
    # event 1: a non-tight edge becomes tight
    beta = (s / p).max(axis=1)
    thresholds = []
    for i in range(m):
        ci = factor(("b", i))[1]
        for j in range(n):
            if tight[i, j] or s[i, j] <= 0:
                continue
            ratio = beta[i] * p[j] / s[i, j]
            cj = factor(("g", j))[1]
            den = ci - ratio * cj
            if den > 0:
                thresholds.append((ratio - 1.0) / den)
    caps[NEW_TIGHT_EDGE] = min(thresholds, default=math.inf)

    # event 3: buyer a's payoff falls to u_a(X) - gamma
    ua = market.u[a]
    scale = float(market.utility_scale[a])
    goods_a = [j for j in range(n) if f[a, j] > 0 or rate[a, j] != 0]
    fac = np.array([factor(("g", j)) for j in range(n)])

    def payoff_a(alpha):
        total = 0.0
        for j in goods_a:
            price = p[j] * (fac[j, 0] + fac[j, 1] * alpha)
            total += ua[j] * (f[a, j] + alpha * rate[a, j]) / price
        return total

    before = payoff_a(0.0)
    target = before - gamma / scale
    upper = min(caps.values())
    grid = np.linspace(0.0, upper, 257)[1:]
    caps[PAYOFF_FLOOR] = math.inf
    prev = 0.0
    for g in grid:
        if payoff_a(g) <= target:
            caps[PAYOFF_FLOOR] = brentq(lambda x: payoff_a(x) - target, prev, g, xtol=1e-15)
            break
        prev = g

    cap_event = min(caps, key=lambda k: caps[k])
    cap = caps[cap_event]
    if not cap > 0:
        raise DegenerateAlphaCap(f"alpha cap {cap} from {cap_event}")
    alpha = cap / 2.0
    row = np.array(s[a], dtype=float)
    row[b] *= (1.0 + kappa * alpha) / (1.0 - alpha)
    new_profile = profile.with_row(a, (row / row.sum()).tolist())
    step = PerturbationStep(a, b, tuple(sorted(left)), tuple(sorted(right)), float(l), float(r),
                            float(cap), float(alpha), cap_event, NO_EVENT,
                            float(before * scale), float(payoff_a(alpha) * scale))
    if check:
        after = solve_equilibrium(market, new_profile, tol)
        if np.any(after.tight & ~tight):
            raise InvariantViolation("perturbation created a new tight edge")
        if edge_on_cycle(after.tight, a, b):
            raise InvariantViolation("edge still lies on a cycle after perturbation")
    return new_profile, step


def conflict_removal(market: Market, profile: StrategyProfile, a: int, delta: float,
                     tol: Tolerances = DEFAULT):
    """Move buyer ``a`` off every cycle while losing less than ``delta`` (original units).

    Returns ``(new_profile, trace)`` where ``trace`` lists the perturbation
    steps taken.  Only row ``a`` of the profile changes.
    """
    if delta <= 10 * tol.pay * float(market.utility_scale[a]):
        raise ValueError("delta too small to separate from solver noise")
    n = market.num_goods
    trace = []
    for _ in range(n):
        outcome = solve_equilibrium(market, profile, tol)
        tight = outcome.tight
        on_cycle = [int(j) for j in np.nonzero(tight[a])[0] if edge_on_cycle(tight, a, int(j))]
        if not on_cycle:
            return profile, trace
        p = outcome.prices
        b = max(on_cycle, key=lambda j: (market.u[a, j] / p[j], -j))
        alloc = maximize_edge_subject_to_best(market, outcome, a, b, tol)
        profile, step = perturb(market, profile, alloc, a, b, delta / n, tol, outcome=outcome)
        if step is not None:
            trace.append(step)
    outcome = solve_equilibrium(market, profile, tol)
    if buyer_on_cycle(outcome.tight, a):
        raise IterationOverrun(f"buyer {a} still on a cycle after {n} perturbations")
    return profile, trace


@dataclass(frozen=True)
class NecessaryConditions:
    conflict_free: bool
    goods_degree_at_least_two: bool
    buys_true_best_good: bool

    def all(self):
        return self.conflict_free and self.goods_degree_at_least_two and self.buys_true_best_good

    def as_tuple(self):
        return (self.conflict_free, self.goods_degree_at_least_two, self.buys_true_best_good)


def check_necessary_conditions(market: Market, profile: StrategyProfile,
                               tol: Tolerances = DEFAULT, outcome=None):
    """Evaluate the three structural conditions every Nash profile satisfies.

    The third condition asks, per buyer, whether some conflict-free
    allocation gives the buyer a positive amount of a good that is best
    under the buyer's true utilities at the current prices.
    """
    if outcome is None:
        outcome = solve_equilibrium(market, profile, tol)
    free, _ = is_conflict_free(market, outcome, tol)
    degree = bool(outcome.tight.sum(axis=0).min() >= 2)
    third = False
    if free:
        bpb = market.u / outcome.prices
        best = bpb.max(axis=1, keepdims=True)
        K = bpb >= (1.0 - tol.tight) * best
        third = True
        for i in range(market.num_buyers):
            goods = {int(j) for j in np.nonzero(K[i])[0]}
            mass = conflict_free_edge_mass(market, outcome, i, goods, tol)
            if mass is None or mass <= tol.flow:
                third = False
                break
    return NecessaryConditions(bool(free), degree, third)


def profile_payoffs(market: Market, profile: StrategyProfile, tol: Tolerances = DEFAULT):
    """Payoffs ``P_i(S)`` in original units (product-maximizing allocation)."""
    outcome = solve_equilibrium(market, profile, tol)
    return payoff_report(market, outcome, tol).selected_payoffs


@dataclass
class OracleResult:
    gap: float                  # best payoff found minus current payoff, original units
    witness: tuple              # normalized strategy row achieving it
    incumbent: float            # current payoff
    evaluations: int


def _simplex_grid(n, points):
    k = points - 1
    for combo in itertools.combinations(range(k + n - 1), n - 1):
        prev = -1
        parts = []
        for c in combo:
            parts.append(c - prev - 1)
            prev = c
        parts.append(k + n - 2 - prev)
        yield tuple(v / k for v in parts)


def best_response_oracle(market: Market, profile: StrategyProfile, k: int, grid_depth: int = 3,
                         grid_points: int = 15, tol: Tolerances = DEFAULT, seeds=()):
    """Search buyer ``k``'s normalized strategies for a profitable deviation.

    A barycentric grid with ``grid_points`` per dimension is refined by a
    factor three around the incumbent best ``grid_depth - 1`` times.  The
    current row, the truthful row and any ``seeds`` are always evaluated;
    when buyer ``k`` is short of its best payoff, the cycle-breaking
    deviation is added as a seed too.
    """
    n = market.num_goods
    if grid_points ** n > 1_000_000:
        raise SearchBudgetExceeded(f"{grid_points}^{n} grid points")
    base_report = payoff_report(market, solve_equilibrium(market, profile, tol), tol)
    incumbent = float(base_report.selected_payoffs[k])
    cache = {}

    def evaluate(row):
        key = tuple(round(v, 13) for v in row)
        if key in cache:
            return cache[key]
        try:
            val = float(profile_payoffs(market, profile.with_row(k, list(row)), tol)[k])
        except (PriceCollapse, FisherGameError):
            val = -math.inf
        cache[key] = val
        return val

    best_val, best_row = -math.inf, None

    def consider(row):
        nonlocal best_val, best_row
        row = tuple(float(v) for v in np.asarray(row, dtype=float) / np.sum(row))
        val = evaluate(row)
        if val > best_val + 1e-13 or (abs(val - best_val) <= 1e-13 and (best_row is None or row < best_row)):
            best_val, best_row = val, row

    consider(profile.s[k])
    consider(market.u[k])
    for seed in seeds:
        consider(seed)
    w = base_report.per_buyer_best[k]
    if n > 1 and w - incumbent > 2 * tol.pay * float(market.utility_scale[k]):
        try:
            moved, _ = conflict_removal(market, profile, k, (w - incumbent) / 2, tol)
            consider(moved.s[k])
        except FisherGameError:
            pass
    if n == 1:
        return OracleResult(best_val - incumbent, best_row, incumbent, len(cache))
    for row in _simplex_grid(n, grid_points):
        consider(row)
    h = 1.0 / (grid_points - 1)
    for _ in range(grid_depth - 1):
        h_new = h / 3.0
        center = np.array(best_row)
        for offs in itertools.product(range(-3, 4), repeat=n - 1):
            head = center[:-1] + h_new * np.array(offs)
            last = 1.0 - head.sum()
            if head.min() < -1e-12 or last < -1e-12:
                continue
            row = np.clip(np.append(head, last), 0.0, None)
            if row.sum() > 0:
                consider(row)
        h = h_new
    return OracleResult(best_val - incumbent, best_row, incumbent, len(cache))


@dataclass
class NEVerdict:
    conditions: NecessaryConditions
    gap: float
    witness_buyer: int | None
    witness: tuple | None
    certified: str

    def to_json(self):
        return {
            "necessary_conditions": list(self.conditions.as_tuple()),
            "best_response_gap": self.gap,
            "witness_buyer": self.witness_buyer,
            "witness": list(self.witness) if self.witness is not None else None,
            "certified": self.certified,
        }


def verify_ne(market: Market, profile: StrategyProfile, grid_depth: int = 3,
              tol: Tolerances = DEFAULT):
    """Combine the structural checker with the best-response search for every buyer."""
    conditions = check_necessary_conditions(market, profile, tol)
    gap, who, witness = 0.0, None, None
    worst_rel = 0.0
    try:
        for k in range(market.num_buyers):
            res = best_response_oracle(market, profile, k, grid_depth, tol=tol)
            rel = res.gap / float(market.utility_scale[k])
            if rel > worst_rel:
                worst_rel, gap, who, witness = rel, res.gap, k, res.witness
    except SearchBudgetExceeded:
        return NEVerdict(conditions, math.nan, None, None, INCONCLUSIVE)
    if worst_rel > tol.dev:
        verdict = NE_REFUTED_BY_DEVIATION
    elif not conditions.all():
        verdict = NE_REFUTED_BY_CONDITIONS
    else:
        verdict = NE_CERTIFIED
    return NEVerdict(conditions, gap, who, witness, verdict)


def fisher_symmetric_nesp(market: Market, tol: Tolerances = DEFAULT):
    """Symmetric profile whose common row is the truthful equilibrium price vector."""
    if market.num_buyers < 2:
        raise ValueError("a market game needs at least two buyers")
    truthful = solve_equilibrium(market, market.truthful(), tol)
    fisher = payoff_report(market, truthful, tol).selected_payoffs
    profile = StrategyProfile.symmetric(truthful.prices.tolist(), market.num_buyers)
    got = profile_payoffs(market, profile, tol)
    scale = np.array(market.utility_scale, dtype=float)
    if np.max(np.abs(got - fisher) / scale) > tol.pay * 10:
        raise InvariantViolation(f"symmetric profile payoffs {got} differ from Fisher payoff {fisher}")
    return profile
