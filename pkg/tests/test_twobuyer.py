import random
from fractions import Fraction as F

import pytest

from fishergame import lp
from fishergame import twobuyer as tb
from fishergame.deviation import best_response_oracle, profile_payoffs
from fishergame.errors import PointOffCurve
from fishergame.market import StrategyProfile, normalize_market
from fishergame.reproduce import h2, h2_argmax

EX6 = ([[6, 2, 2], [F(1, 2), F(5, 2), 7]], [7, 3])
EX7 = ([[4, 3, 2, 1], [1, 2, 3, 4]], [10, 10])


def om_of(u, m):
    return tb.order_goods(normalize_market(u, m))


def test_order_goods():
    om = om_of(*EX7)
    assert om.permutation == (0, 1, 2, 3)
    assert om.ratio == (4, F(3, 2), F(2, 3), F(1, 4))
    rev = om_of([[2, 2, 6], [7, F(5, 2), F(1, 2)]], [7, 3])
    assert rev.permutation == (2, 1, 0)
    assert rev.ratio == (12, F(4, 5), F(2, 7))
    same = om_of([[1, 2, 3], [1, 2, 3]], [1, 1])
    assert same.permutation == (0, 1, 2)


def test_order_goods_drops_worthless_good():
    with pytest.warns(RuntimeWarning):
        om = om_of([[1, 0, 2], [3, 0, 1]], [1, 1])
    assert om.dropped == (1,) and sorted(om.permutation) == [0, 2]


def test_zero_u2_sorted_first():
    om = om_of([[1, 1, 1], [1, 0, 2]], [1, 1])
    assert om.permutation[0] == 1


def test_nice_allocation_examples():
    om = om_of(*EX6)
    assert tb.t_alpha_payoffs(om, F(1, 5)).payoffs == (8, 7)
    nice = tb.nice_allocation(om, tb.t_alpha(om, F(1, 5)))
    assert nice.payoffs == (8, 7)
    om7 = om_of(*EX7)
    s1 = StrategyProfile.symmetric(["20/3", "20/3", "10/3", "10/3"], 2)
    assert tb.nice_allocation(om7, s1).payoffs == (F(11, 2), 8)
    rich = om_of([[1, 2], [2, 1]], [1, F(1, 10**9)])
    shares = tb.nice_allocation(rich, StrategyProfile.symmetric([1, 1], 2)).shares
    assert shares[1] == 1 and shares[0] > F(999, 1000)


def test_polyhedra_single_good():
    om = om_of([[1], [1]], [1, 3])
    (P,) = tb.build_polyhedra(om)
    assert P.label == "B1"
    assert P.contains((F(1),))


def test_polyhedra_count_and_example6_membership():
    om = om_of(*EX6)
    sets = tb.build_polyhedra(om)
    assert [P.label for P in sets] == ["B1", "B2", "B3", "B'1", "B'2"]
    # t(0): sharing of good 2 (index 1)
    assert tb.containing_polyhedra(om, om.alpha_of(tb.t_alpha(om, 0))) == ["B2"]
    assert "B'2" in tb.containing_polyhedra(om, om.alpha_of(tb.t_alpha(om, F(1, 5))))


def test_example7_point_membership():
    # direct evaluation: the published point violates 2 a2 <= 3 a3 of B2
    om = om_of(*EX7)
    alpha = om.alpha_of(StrategyProfile.symmetric(["20/3", "20/3", "10/3", "10/3"], 2))
    assert tb.containing_polyhedra(om, alpha) == []
    B2 = tb.build_polyhedra(om)[1]
    bad = [(c, s) for c, s in zip(B2.constraints, B2.slack(alpha)) if s[0] < 0]
    assert bad


def test_asymmetric_never_nesp():
    om = om_of(*EX6)
    assert not tb.is_nesp(om, StrategyProfile([[1, 1, 1], [1, 2, 1]]))


def test_t_alpha_endpoints():
    om = om_of(*EX6)
    mk = om.base
    assert tb.t_alpha(om, 0).rows[0] == mk.utilities[0]
    assert tb.t_alpha(om, 1).rows[0] == mk.utilities[1]


def test_t_alpha_sweep_on_curve_and_monotone():
    om = om_of(*EX6)
    curve = tb.payoff_curve(om)
    prev = None
    for k in range(101):
        nice = tb.t_alpha_payoffs(om, F(k, 100))
        assert curve.on_f(nice.payoffs_normalized)
        assert tb.is_nesp(om, tb.t_alpha(om, F(k, 100)))
        if prev:
            assert nice.payoffs[0] >= prev[0] and nice.payoffs[1] <= prev[1]
        prev = nice.payoffs


def test_payoff_curve_example6():
    om = om_of(*EX6)
    curve = tb.payoff_curve(om)
    assert curve.endpoints == ((7, F(33, 4)), (F(64, 7), 3))
    assert curve.breakpoints[0] == (0, 1) and curve.breakpoints[-1] == (1, 0)
    value, point = curve.max_welfare()
    assert value == F(61, 4) and point == (7, F(33, 4))
    fisher = profile_payoffs(om.base, om.base.truthful())
    assert sum(fisher) == pytest.approx(15)
    # two active segments between the window endpoints
    f = curve.f_polyline()
    assert len(f) == 3


def test_curve_concave_and_merged():
    om = om_of([[2, 2, 1], [1, 1, 3]], [1, 1])
    curve = tb.payoff_curve(om)
    assert len(curve.breakpoints) == 3
    assert curve.segment_goods == ((0, 1), (2,))


def test_single_good_window_is_point():
    om = om_of([[1], [1]], [1, 3])
    curve = tb.payoff_curve(om)
    assert curve.window[0] == curve.window[1]


def test_max_payoff_by_imitation():
    om = om_of(*EX6)
    v1, S1 = tb.max_payoff_by_imitation(om, 0)
    v2, S2 = tb.max_payoff_by_imitation(om, 1)
    assert v1 == F(64, 7) and v2 == F(33, 4)
    assert S1.rows[0] == om.base.utilities[1]
    same = om_of([[1, 3], [1, 3]], [1, 1])
    assert tb.max_payoff_by_imitation(same, 0)[0] == tb.t_alpha_payoffs(same, F(1, 2)).payoffs[0]


def test_price_range_example7_exact():
    om = om_of(*EX7)
    ranges = tb.price_range_at_payoff(om, (F(11, 2), 8))
    assert (ranges[2].low, ranges[2].high) == (F(40, 11), F(60, 11))
    assert (ranges[3].low, ranges[3].high) == (F(20, 11), F(40, 11))
    assert ranges[2].high > ranges[2].low


def test_price_range_endpoint_of_two_good_market_is_a_point():
    om = om_of([[3, 1], [1, 2]], [1, 1])
    curve = tb.payoff_curve(om)
    ranges = tb.price_range_at_payoff(om, curve.endpoints[0])
    for r in ranges.values():
        assert r.low == r.high


def test_price_range_off_curve():
    om = om_of(*EX6)
    with pytest.raises(PointOffCurve):
        tb.price_range_at_payoff(om, (1, 1))


def test_nicify():
    om = om_of(*EX6)
    half = [[F(1, 2)] * 3, [F(1, 2)] * 3]
    res = tb.nicify(om, half)
    assert res.after[0] >= res.before[0] and res.after[1] >= res.before[1]
    curve = tb.payoff_curve(om)
    assert curve.segment_of(om.to_normalized(res.after)) is not None
    assert res.exchanges <= om.n
    nice = [[1, F(1, 2), 0], [0, F(1, 2), 1]]
    same = tb.nicify(om, nice)
    assert same.exchanges == 0 and same.shares == (1, F(1, 2), 0)


def test_nicify_crossed_example1():
    om = om_of([[10, 3], [3, 10]], [10, 10])
    res = tb.nicify(om, [[F(1, 2), F(1, 2)], [F(1, 2), F(1, 2)]])
    assert res.after[0] > res.before[0] or res.after[1] > res.before[1]


def test_correlated_dominance_basic():
    om = om_of(*EX6)
    curve = tb.payoff_curve(om)
    assert tb.correlated_dominance_check(om, (0, 0))
    bp = curve.original(curve.breakpoints[2])
    assert not tb.correlated_dominance_check(curve, (bp[0] + 0.1, bp[1] + 0.1))
    assert tb.correlated_dominance_check(curve, curve.endpoints[1])


def test_h2_closed_form():
    x, value = h2_argmax()
    assert x == pytest.approx(30, abs=1e-6)
    assert value == pytest.approx(6.75, abs=1e-6)
    assert h2(30) == pytest.approx(6.75, abs=1e-12)
    assert all(h2(t) <= value + 1e-12 for t in range(0, 101))


def _random_point_in(P, n, rng):
    """Convex mixture of LP vertices of the closure, nudged to the interior by averaging."""
    A_eq, b_eq, A_ub, b_ub = P.lp_rows()
    pts = []
    for _ in range(4):
        c = [F(rng.randint(-5, 5)) for _ in range(n)]
        res = lp.linprog_max(c, A_eq, b_eq, A_ub, b_ub)
        if res.ok:
            pts.append(res.x)
    if not pts:
        return None
    w = [F(rng.randint(1, 5)) for _ in pts]
    return tuple(sum(wk * p[t] for wk, p in zip(w, pts)) / sum(w) for t in range(n))


def test_polyhedra_sound_against_oracle():
    rng = random.Random(11)
    checked = 0
    for _ in range(12):
        u = [[rng.randint(1, 9) for _ in range(3)] for _ in range(2)]
        m = [rng.randint(1, 9) for _ in range(2)]
        om = om_of(u, m)
        for P in tb.build_polyhedra(om):
            alpha = _random_point_in(P, om.n, rng)
            if alpha is None or not P.contains(alpha) or min(alpha) <= 0:
                continue
            S = StrategyProfile.symmetric(om.original(alpha), 2)
            assert tb.is_nesp(om, S)
            for k in range(2):
                res = best_response_oracle(om.base, S, k, grid_depth=2)
                assert res.gap / float(om.base.utility_scale[k]) <= 1e-6
            checked += 1
    assert checked > 5
