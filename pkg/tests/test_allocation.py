import random
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fishergame.allocation import (best_payoffs, conflict_free_edge_mass, forest_flow,
                                   is_conflict_free, max_buyer_payoff,
                                   maximize_edge_subject_to_best, min_buyer_payoff, payoff_report)
from fishergame.market import StrategyProfile, normalize_market, solve_equilibrium

from oracles import best_and_conflict_free, polytope_dimension, rand_market

EX1 = ([[10, 3], [3, 10]], [10, 10])


def _ex2():
    mk = normalize_market(*EX1)
    return mk, solve_equilibrium(mk, StrategyProfile([[1, 19], [1, 19]]))


def test_example2_best_payoffs_and_conflict():
    mk, out = _ex2()
    assert max_buyer_payoff(mk, out, 0) == pytest.approx(11 + 8 / 19, abs=1e-9)
    assert max_buyer_payoff(mk, out, 1) == pytest.approx(147 / 19, abs=1e-9)
    free, witness = is_conflict_free(mk, out)
    assert not free and witness is None


def test_example2_selection_matches_grid_search():
    # one free parameter: buyer 1's money on good 1, t in [0, 1]
    mk, out = _ex2()
    ts = np.linspace(0, 1, 20001)
    x11 = ts / 1
    x12 = (10 - ts) / 19
    u1 = 10 * x11 + 3 * x12
    u2 = 3 * (1 - x11) + 10 * (1 - x12)
    k = np.argmax(np.log(u1) + np.log(u2))
    rep = payoff_report(mk, out)
    assert rep.selected_payoffs == pytest.approx([u1[k], u2[k]], abs=1e-3)
    assert rep.selected_payoffs == pytest.approx([11.42, 5.26], abs=1e-2)
    assert np.all(rep.selected_payoffs <= rep.per_buyer_best + 1e-9)


def test_worst_payoff_and_edge_maximization():
    mk, out = _ex2()
    assert min_buyer_payoff(mk, out, 0) == pytest.approx(30 / 19, abs=1e-9)
    alloc = maximize_edge_subject_to_best(mk, out, 0, 0)
    assert alloc.allocation[0, 0] == pytest.approx(1.0)
    assert alloc.payoffs(mk)[0] == pytest.approx(11 + 8 / 19, abs=1e-9)


def test_forest_flow_and_witness():
    mk = normalize_market(*EX1)
    out = solve_equilibrium(mk, StrategyProfile([["11/10", "189/10"], [1, 19]]))
    f = forest_flow(out.tight, out.prices, mk.m)
    assert f.sum(axis=1) == pytest.approx(mk.m)
    rep = payoff_report(mk, out)
    assert rep.conflict_free
    assert rep.selected_payoffs == pytest.approx([11.41, 5.29], abs=1e-2)


def test_edge_mass_requires_conflict_free():
    mk, out = _ex2()
    assert conflict_free_edge_mass(mk, out, 0, {0}) is None
    mk = normalize_market(*EX1)
    out = solve_equilibrium(mk, mk.truthful())
    assert conflict_free_edge_mass(mk, out, 0, {0}) == pytest.approx(0.5)


def test_zero_payoff_buyer_warns():
    # buyer 2 only values good 1 but is tight only on good 2
    mk = normalize_market([[1, 1], [1, 0]], [1, 1])
    out = solve_equilibrium(mk, StrategyProfile([[1, 1], [0, 1]]))
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        rep = payoff_report(mk, out)
    assert rep.per_buyer_best[1] == pytest.approx(0)


@settings(max_examples=120, deadline=None)
@given(st.integers(2, 3), st.integers(2, 3), st.integers(0, 100_000))
def test_against_vertex_enumeration(m, n, seed):
    rng = random.Random(seed)
    utilities, money = rand_market(rng, m, n)
    mk = normalize_market(utilities, money)
    if rng.random() < 0.5:
        S = StrategyProfile.symmetric([rng.randint(1, 9) for _ in range(n)], m)
    else:
        S = StrategyProfile([[rng.randint(1, 4) for _ in range(n)] for _ in range(m)])
    out = solve_equilibrium(mk, S)
    w_ref, free_ref = best_and_conflict_free(out.tight, out.prices, mk.m, mk.u)
    w, _, _ = best_payoffs(mk, out)
    assert w == pytest.approx(w_ref, abs=1e-7)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = payoff_report(mk, out)
    assert rep.conflict_free == free_ref
    assert np.all(rep.selected_payoffs <= rep.per_buyer_best + 1e-7)
    assert rep.selected.residual(mk.m) <= 1e-8
    assert not np.any(rep.selected.flow[~out.tight] > 0)
    assert polytope_dimension(out.tight) >= 0
