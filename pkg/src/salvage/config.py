"""Numerical tolerances shared by the salvage pipelines."""

from dataclasses import dataclass, field, replace
from typing import Tuple


@dataclass(frozen=True)
class Tolerances:
    quad_tol: float = 1e-10  # absolute quadrature tolerance
    rel_tol: float = 1e-9  # relative quadrature tolerance (whole-domain integrals)
    a_tol: float = 1e-9  # pass/fail threshold for link conditions and dominance
    grid_points: int = 1024  # grid for pointwise link conditions
    bins: int = 256
    n_schedule: Tuple[int, ...] = field(default=(64, 128, 256, 512, 1024))

    def __post_init__(self):
        if self.quad_tol <= 0 or self.rel_tol < 0 or self.a_tol < 0:
            raise ValueError("tolerances must be positive")
        if self.grid_points < 2 or self.bins < 1:
            raise ValueError("grid_points must be >= 2 and bins >= 1")
        sched = tuple(int(n) for n in self.n_schedule)
        if not sched or any(b <= a for a, b in zip(sched, sched[1:])) or sched[0] < 1:
            raise ValueError("n_schedule must be a strictly increasing list of positive counts")
        object.__setattr__(self, "n_schedule", sched)

    def scaled(self, c: float) -> "Tolerances":
        """Absolute tolerances multiplied by ``c`` (for scaled problems)."""
        return replace(self, quad_tol=self.quad_tol * c, a_tol=self.a_tol * c)

    def to_json(self):
        return {
            "quad_tol": self.quad_tol,
            "rel_tol": self.rel_tol,
            "a_tol": self.a_tol,
            "grid_points": self.grid_points,
            "bins": self.bins,
            "n_schedule": list(self.n_schedule),
        }


DEFAULT = Tolerances()
