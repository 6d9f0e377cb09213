import random
import warnings

import numpy as np
import pytest

from fishergame import deviation as dv
from fishergame.allocation import (is_conflict_free, maximize_edge_subject_to_best,
                                   min_buyer_payoff, payoff_report)
from fishergame.errors import FisherGameError
from fishergame.market import StrategyProfile, normalize_market, solve_equilibrium

from oracles import rand_market

EX1 = ([[10, 3], [3, 10]], [10, 10])
EX4 = ([[2, "1/10"], [4, 9], ["1/10", 2]], [50, 100, 50])
EX5 = ([[2, 3], [4, 9], [2, 3]], [50, 100, 50])


def test_edge_on_cycle():
    full = np.ones((2, 2), bool)
    assert dv.edge_on_cycle(full, 0, 0)
    tree = np.array([[True, True], [False, True]])
    assert not dv.edge_on_cycle(tree, 0, 0)
    assert not dv.buyer_on_cycle(tree, 1)


def test_alternating_reach_example2():
    mk = normalize_market(*EX1)
    out = solve_equilibrium(mk, StrategyProfile([[1, 19], [1, 19]]))
    alloc = maximize_edge_subject_to_best(mk, out, 0, 0)
    nz = alloc.nonzero()
    left = dv.alternating_reach(out.tight, nz, ("b", 0), (0, 0))
    right = dv.alternating_reach(out.tight, nz, ("g", 0), (0, 0))
    assert left == {("b", 0), ("g", 1), ("b", 1)}
    assert right == {("g", 0)}


def test_perturb_example2_step():
    mk = normalize_market(*EX1)
    S = StrategyProfile([[1, 19], [1, 19]])
    out = solve_equilibrium(mk, S)
    alloc = maximize_edge_subject_to_best(mk, out, 0, 0)
    S2, step = dv.perturb(mk, S, alloc, 0, 0, 0.05, outcome=out)
    assert step.price_mass_left == pytest.approx(0.95)
    assert step.price_mass_right == pytest.approx(0.05)
    assert 0 < step.alpha_used < step.alpha_cap
    assert step.alpha_used == pytest.approx(step.alpha_cap / 2)
    assert step.payoff_before - step.payoff_after < 0.05
    assert S2.rows[1] == S.rows[1]
    after = solve_equilibrium(mk, S2)
    assert not dv.buyer_on_cycle(after.tight, 0)
    # prices on buyer 1's side fell, good 1 rose
    assert after.prices[0] > out.prices[0] and after.prices[1] < out.prices[1]
    assert set(step.to_json()) >= {"alpha_cap", "alpha_used", "cap_event", "event_hit"}


def test_perturb_off_cycle_is_identity():
    mk = normalize_market(*EX1)
    S = StrategyProfile([["11/10", "189/10"], [1, 19]])
    out = solve_equilibrium(mk, S)
    alloc = payoff_report(mk, out).selected
    same, step = dv.perturb(mk, S, alloc, 1, 1, 0.05, outcome=out)
    assert same is S and step is None


def test_conflict_removal_example2():
    mk = normalize_market(*EX1)
    S = StrategyProfile([[1, 19], [1, 19]])
    S2, trace = dv.conflict_removal(mk, S, 0, 0.1)
    assert 1 <= len(trace) <= 2
    out = solve_equilibrium(mk, S2)
    assert min_buyer_payoff(mk, out, 0) > 11.42 - 0.1
    assert is_conflict_free(mk, out)[0]


def test_conflict_removal_rejects_tiny_delta():
    mk = normalize_market(*EX1)
    with pytest.raises(ValueError):
        dv.conflict_removal(mk, StrategyProfile([[1, 19], [1, 19]]), 0, 1e-9)


@pytest.mark.parametrize("seed", range(25))
def test_conflict_removal_random(seed):
    rng = random.Random(seed)
    for _ in range(50):
        utilities, money = rand_market(rng, rng.randint(2, 3), rng.randint(2, 3))
        mk = normalize_market(utilities, money)
        S = StrategyProfile.symmetric([rng.randint(1, 9) for _ in range(mk.num_goods)], mk.num_buyers)
        out = solve_equilibrium(mk, S)
        a = rng.randrange(mk.num_buyers)
        if dv.buyer_on_cycle(out.tight, a):
            break
    else:
        pytest.skip("no cyclic instance drawn")
    w_before = payoff_report(mk, out).per_buyer_best[a]
    delta = 0.05 * w_before
    S2, trace = dv.conflict_removal(mk, S, a, delta)
    after = solve_equilibrium(mk, S2)
    assert not dv.buyer_on_cycle(after.tight, a)
    assert np.all(after.tight <= out.tight)
    # the move keeps buyer a within delta of the previous best in every allocation
    assert min_buyer_payoff(mk, after, a) >= w_before - delta - 1e-9
    for i in range(mk.num_buyers):
        if i != a:
            assert S2.rows[i] == S.rows[i]


def test_example4_conditions_hold_but_deviation_exists():
    mk = normalize_market(*EX4)
    cond = dv.check_necessary_conditions(mk, mk.truthful())
    assert cond.as_tuple() == (True, True, True)
    assert dv.profile_payoffs(mk, mk.truthful()) == pytest.approx([1.63, 6.5, 0.72], abs=1e-2)
    res = dv.best_response_oracle(mk, mk.truthful(), 1)
    assert res.incumbent + res.gap >= 6.74
    dev = mk.truthful().with_row(1, [2, 3])
    assert dv.profile_payoffs(mk, dev) == pytest.approx([1.25, 6.75, 0.83], abs=1e-2)
    verdict = dv.verify_ne(mk, mk.truthful(), grid_depth=2)
    assert verdict.certified == dv.NE_REFUTED_BY_DEVIATION and verdict.witness_buyer == 1


def test_example5_profiles_certified():
    mk = normalize_market(*EX5)
    for S, pay in ((StrategyProfile([[2, "1/10"], [2, 3], ["1/10", 3]]), [1.25, 6.75, 1.25]),
                   (StrategyProfile.symmetric([2, 3], 3), [1.25, 7.5, 1.25])):
        assert dv.profile_payoffs(mk, S) == pytest.approx(pay, abs=1e-2)
        v = dv.verify_ne(mk, S)
        assert v.certified == dv.NE_CERTIFIED and v.gap <= 1e-3


def test_conditions_refute_conflicted_symmetric():
    mk = normalize_market(*EX1)
    v = dv.verify_ne(mk, StrategyProfile([[1, 19], [1, 19]]), grid_depth=2)
    assert not v.conditions.conflict_free
    assert v.certified in (dv.NE_REFUTED_BY_DEVIATION, dv.NE_REFUTED_BY_CONDITIONS)
    assert v.certified == dv.NE_REFUTED_BY_DEVIATION and v.gap > 0


def test_fisher_symmetric_nesp():
    rng = random.Random(3)
    for _ in range(10):
        utilities, money = rand_market(rng, 3, 3)
        mk = normalize_market(utilities, money)
        S = dv.fisher_symmetric_nesp(mk)
        assert S.is_symmetric()
        fisher = dv.profile_payoffs(mk, mk.truthful())
        assert dv.profile_payoffs(mk, S) == pytest.approx(fisher, abs=1e-7)
        out = solve_equilibrium(mk, S)
        assert is_conflict_free(mk, out)[0]


def test_search_budget_guard():
    mk = normalize_market([[1] * 6, [2, 1, 1, 1, 1, 1]], [1, 1])
    with pytest.raises(FisherGameError):
        dv.best_response_oracle(mk, mk.truthful(), 0)
