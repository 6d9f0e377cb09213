"""Numerical tolerances shared by all modules."""

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    eq: float = 1e-9        # equilibrium residual, normalized money units
    tight: float = 1e-6     # relative slack in the tight-edge (bang-per-buck) rule
    pay: float = 1e-8       # payoff comparisons, normalized utility units
    poly: float = 1e-9      # polyhedron membership for float data
    dev: float = 1e-6       # best-response gap that counts as a deviation
    price: float = 1e-12    # prices below this are a collapse
    lp: float = 1e-9        # primal/dual feasibility inside the simplex
    flow: float = 1e-10     # flows above this count as non-zero edges
    max_iter: int = 1_000_000

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ValueError(f"tolerance {f.name} must be positive")
        if not self.eq < self.tight:
            raise ValueError("need eq < tight so graph structure is stable")

    def override(self, **kwargs):
        return replace(self, **kwargs)


DEFAULT = Tolerances()
