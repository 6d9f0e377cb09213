"""
Feigning utilities in a two-good market
=======================================

Two buyers with opposite tastes.  Reporting truthfully gives each of them
10; buyer 1 can do better by misreporting, and when everybody reports the
same row the solution graph becomes a cycle whose allocations disagree.
"""

from fishergame import StrategyProfile, normalize_market, payoff_report, solve_equilibrium
from fishergame.allocation import max_buyer_payoff, min_buyer_payoff
from fishergame.deviation import conflict_removal

market = normalize_market([[10, 3], [3, 10]], [10, 10])

# truthful play
out = solve_equilibrium(market, market.truthful())
print("truthful prices", out.prices_original, "payoffs", payoff_report(market, out).selected_payoffs)

# buyer 1 reports (5, 15), buyer 2 reports (3, 10)
feigned = StrategyProfile([[5, 15], [3, 10]])
out = solve_equilibrium(market, feigned)
print("feigned payoffs", payoff_report(market, out).selected_payoffs)

# a symmetric profile: the tight graph is a 4-cycle
cyc = StrategyProfile([[1, 19], [1, 19]])
out = solve_equilibrium(market, cyc)
report = payoff_report(market, out)
print("edges", out.edges)
print("best each buyer can hope for", report.per_buyer_best)
print("conflict free?", report.conflict_free, "selected", report.selected_payoffs)
for i in range(2):
    value, alloc, _ = max_buyer_payoff(market, out, i, with_certificate=True)
    print(f"  allocation best for buyer {i + 1}:", alloc.payoffs(market))

# buyer 1 nudges one reported value to cut the cycle, losing less than 0.1
moved, trace = conflict_removal(market, cyc, 0, 0.1)
after = solve_equilibrium(market, moved)
print("after cycle removal: prices", after.prices_original, "edges", after.edges)
print("buyer 1 now gets at least", min_buyer_payoff(market, after, 0))
for step in trace:
    print("  step", step.to_json())
