"""
Checking Nash equilibria with three buyers
==========================================

The structural conditions (conflict-free, every good bought by two buyers,
everyone buys a truly best good) are necessary but not sufficient.  The
brute-force best-response search settles the question on small markets.
"""

from fishergame import StrategyProfile, normalize_market
from fishergame.deviation import best_response_oracle, check_necessary_conditions, profile_payoffs, verify_ne

# truthful play satisfies the conditions, yet buyer 2 can gain
market = normalize_market([[2, "1/10"], [4, 9], ["1/10", 2]], [50, 100, 50])
print("conditions", check_necessary_conditions(market, market.truthful()))
print("truthful payoffs", profile_payoffs(market, market.truthful()))
res = best_response_oracle(market, market.truthful(), 1)
print(f"buyer 2 reaches {res.incumbent + res.gap:.4f} by reporting {res.witness}")

# two Nash profiles of a related market, one asymmetric
market = normalize_market([[2, 3], [4, 9], [2, 3]], [50, 100, 50])
for S in (StrategyProfile([[2, "1/10"], [2, 3], ["1/10", 3]]), StrategyProfile.symmetric([2, 3], 3)):
    verdict = verify_ne(market, S)
    print(verdict.certified, "payoffs", profile_payoffs(market, S))
