"""Fisher market games: equilibria, equilibrium-allocation queries, deviations and two-buyer theory."""

from .allocation import (MoneyFlowAllocation, PayoffReport, best_payoffs, is_conflict_free,
                         max_buyer_payoff, min_buyer_payoff, payoff_report)
from .deviation import (NEVerdict, PerturbationStep, alternating_reach, best_response_oracle,
                        check_necessary_conditions, conflict_removal, fisher_symmetric_nesp,
                        perturb, verify_ne)
from .errors import *  # noqa: F401,F403
from .market import (EquilibriumOutcome, Market, StrategyProfile, normalize_market,
                     solution_graph, solve_equilibrium)
from .tolerances import DEFAULT, Tolerances
from .twobuyer import (build_polyhedra, correlated_dominance_check, is_nesp,
                       max_payoff_by_imitation, nice_allocation, nicify, order_goods,
                       payoff_curve, price_range_at_payoff, t_alpha)

__version__ = "0.1.0"
