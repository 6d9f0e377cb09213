"""Exception hierarchy for market and game analysis failures."""


class FisherGameError(Exception):
    """Base class for every error raised by this package."""


class InvalidMarket(FisherGameError, ValueError):
    pass


class ZeroUtilityRow(InvalidMarket):
    pass


class NonpositiveMoney(InvalidMarket):
    pass


class InvalidProfile(FisherGameError, ValueError):
    pass


class ConvergenceFailure(FisherGameError):
    def __init__(self, iterations, residual):
        super().__init__(f"equilibrium solver stopped after {iterations} iterations "
                         f"with residual {residual:.3e}")
        self.iterations = iterations
        self.residual = residual


class PriceCollapse(FisherGameError):
    """A good would clear at (numerically) zero price."""

    def __init__(self, goods):
        super().__init__(f"goods {list(goods)} have zero equilibrium price")
        self.goods = tuple(goods)


class InfeasiblePolytope(FisherGameError):
    pass


class NotOnCycle(FisherGameError):
    pass


class DegenerateAlphaCap(FisherGameError):
    pass


class IterationOverrun(FisherGameError):
    pass


class SearchBudgetExceeded(FisherGameError):
    pass


class BothUtilitiesZero(FisherGameError):
    pass


class RatioIntervalEmpty(FisherGameError):
    pass


class PointOffCurve(FisherGameError, ValueError):
    pass


class InvariantViolation(FisherGameError, AssertionError):
    pass
