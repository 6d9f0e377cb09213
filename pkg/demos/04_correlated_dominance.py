"""
Mediation does not beat the frontier
====================================

Sample random strategy profiles, mix their payoffs with random weights
and check that every mixture stays under the curve H.  Trading goods to
make an allocation "nice" never hurts either buyer.
"""

import random
import warnings

import numpy as np

from fishergame import StrategyProfile, normalize_market, payoff_report, solve_equilibrium
from fishergame import twobuyer as tb

warnings.simplefilter("ignore")
rng = random.Random(0)
market = normalize_market([[6, 2, 2], ["1/2", "5/2", 7]], [7, 3])
om = tb.order_goods(market)
curve = tb.payoff_curve(om)

pays = []
for _ in range(200):
    S = StrategyProfile([[rng.randint(1, 9) for _ in range(3)] for _ in range(2)])
    pays.append(payoff_report(market, solve_equilibrium(market, S)).selected_payoffs)
pays = np.array(pays)
weights = np.array([rng.random() for _ in pays])
mix = weights @ pays / weights.sum()
print("mixed payoff", mix, "under H:", tb.correlated_dominance_check(curve, mix))
print("all samples under H:", all(tb.correlated_dominance_check(curve, p) for p in pays))

res = tb.nicify(om, [[0.5, 0.5, 0.5], [0.5, 0.5, 0.5]])
print("even split", res.before, "->", res.after, "after", res.exchanges, "exchanges")
