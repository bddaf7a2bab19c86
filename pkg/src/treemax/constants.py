"""Exponent bookkeeping and the sharp two-weight constant.

The constant for a pair of exponents 1 < p <= q < infinity is

    C(p, q) = (p-1)**(-1/q) * [ G(pq/(q-p)) / (G(q/(q-p)) G(p(q-1)/(q-p))) ]**(1/p - 1/q)

with G the Euler Gamma function, and C(p, p) = p/(p-1) by passing to the
limit.  Evaluation goes through log-Gamma; close to the diagonal the Gamma
arguments blow up and the formula degenerates numerically, so the value
switches to the exact limit branch there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = ["cpq", "sharpness_regime", "Exponents"]

# switch to the p == q limit once the largest Gamma argument passes this
GAMMA_ARG_LIMIT = 1e4
# ... or once q - p is below this, regardless of the argument size
DIAGONAL_GAP = 1e-6


def _validate_pq(p: float, q: float) -> None:
    if not (1.0 < p <= q) or not math.isfinite(p) or not math.isfinite(q):
        raise ValueError(f"exponents must satisfy 1 < p <= q, got p={p}, q={q}")


def cpq(p: float, q: float, gamma_arg_limit: float = GAMMA_ARG_LIMIT) -> float:
    """Sharp constant for the (p, q) two-weight bound, >= 1 on its domain."""
    _validate_pq(p, q)
    gap = q - p
    if gap == 0.0 or gap < DIAGONAL_GAP or p * q / gap > gamma_arg_limit:
        return p / (p - 1.0)
    log_bracket = (
        math.lgamma(p * q / gap)
        - math.lgamma(q / gap)
        - math.lgamma(p * (q - 1.0) / gap)
    )
    return (p - 1.0) ** (-1.0 / q) * math.exp((1.0 / p - 1.0 / q) * log_bracket)


def sharpness_regime(p: float, q: float, alpha: float) -> bool:
    """True when alpha >= 1/p - 1/q, the regime where the constant is optimal."""
    _validate_pq(p, q)
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    return alpha >= 1.0 / p - 1.0 / q


@dataclass(frozen=True)
class Exponents:
    """Validated (p, q, alpha) triple with the derived conjugate and constant."""

    p: float
    q: float
    alpha: float
    p_prime: float = field(init=False)
    c_pq: float = field(init=False)

    def __post_init__(self) -> None:
        _validate_pq(self.p, self.q)
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")
        object.__setattr__(self, "p_prime", self.p / (self.p - 1.0))
        object.__setattr__(self, "c_pq", cpq(self.p, self.q))

    @property
    def sharp(self) -> bool:
        return sharpness_regime(self.p, self.q, self.alpha)
