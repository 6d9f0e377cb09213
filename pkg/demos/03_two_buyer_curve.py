"""
The two-buyer payoff frontier
=============================

With two buyers every Nash profile is symmetric and the Nash payoffs
trace a concave piecewise-linear curve.  Imitating the other buyer is the
best a buyer can do among Nash outcomes.
"""

from fractions import Fraction

from fishergame import normalize_market
from fishergame import twobuyer as tb

market = normalize_market([[6, 2, 2], ["1/2", "5/2", 7]], [7, 3])
om = tb.order_goods(market)
curve = tb.payoff_curve(om)

print("breakpoints of H:", [tuple(map(str, curve.original(p))) for p in curve.breakpoints])
print("Nash window:", [tuple(map(str, p)) for p in curve.endpoints])
value, point = curve.max_welfare()
print("max welfare on the window:", value, "at", point)

# sweep the t(alpha) family
for k in range(6):
    a = Fraction(k, 5)
    nice = tb.t_alpha_payoffs(om, a)
    print(f"t({a}) payoffs {tuple(map(str, nice.payoffs))} shared good {nice.shared_good}")

print(curve.to_csv(sweep=[Fraction(k, 4) for k in range(5)], om=om))

# the set of Nash price vectors paying a fixed pair is convex
om7 = tb.order_goods(normalize_market([[4, 3, 2, 1], [1, 2, 3, 4]], [10, 10]))
for j, r in tb.price_range_at_payoff(om7, (Fraction(11, 2), 8)).items():
    print(f"good {j}: price in [{r.low}, {r.high}]")
